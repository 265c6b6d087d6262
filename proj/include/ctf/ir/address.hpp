#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ctf {

/// A syntactic call-site identifier. Labels are interned process-wide; the
/// optional index distinguishes sites created in a loop (map over a list).
struct Site {
  std::uint32_t symbol = 0;
  std::int32_t index = -1;

  Site() = default;
  Site(std::string_view label, std::int32_t idx = -1);
  Site(const char* label, std::int32_t idx = -1) : Site(std::string_view(label), idx) {}
  Site(const std::string& label, std::int32_t idx = -1) : Site(std::string_view(label), idx) {}

  /// Same label, different index; skips the interning lookup.
  Site indexed(std::int32_t idx) const {
    Site s = *this;
    s.index = idx;
    return s;
  }
  std::string label() const;
  bool operator==(const Site&) const = default;
};

/// Stack address: the call sites active when an effect executes.
struct Address {
  std::vector<Site> path;

  bool operator==(const Address&) const = default;
  bool is_prefix_of(const Address& other) const;
  std::string to_string() const;
  std::size_t hash() const;
};

/// Suffix of `full` after removing `base`. Throws PrefixMismatch when `base`
/// is not a prefix of `full`.
Address address_relative(const Address& full, const Address& base);

}  // namespace ctf
