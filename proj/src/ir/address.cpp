#include "ctf/ir/address.hpp"

#include <mutex>
#include <shared_mutex>
#include <unordered_map>

#include "ctf/ir/error.hpp"
#include "ctf/ir/value.hpp"

namespace ctf {

namespace {

class SymbolTable {
 public:
  std::uint32_t intern(std::string_view label) {
    {
      std::shared_lock lock(mu_);
      if (auto it = ids_.find(std::string(label)); it != ids_.end()) return it->second;
    }
    std::unique_lock lock(mu_);
    auto [it, inserted] = ids_.try_emplace(std::string(label), static_cast<std::uint32_t>(names_.size()));
    if (inserted) names_.push_back(it->first);
    return it->second;
  }

  std::string name(std::uint32_t id) {
    std::shared_lock lock(mu_);
    return id < names_.size() ? names_[id] : "?";
  }

 private:
  std::shared_mutex mu_;
  std::unordered_map<std::string, std::uint32_t> ids_;
  std::vector<std::string> names_;
};

SymbolTable& symbols() {
  static SymbolTable table;
  return table;
}

}  // namespace

Site::Site(std::string_view label, std::int32_t idx) : symbol(symbols().intern(label)), index(idx) {}

std::string Site::label() const {
  auto s = symbols().name(symbol);
  if (index >= 0) s += "#" + std::to_string(index);
  return s;
}

bool Address::is_prefix_of(const Address& other) const {
  if (path.size() > other.path.size()) return false;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (!(path[i] == other.path[i])) return false;
  }
  return true;
}

std::string Address::to_string() const {
  std::string s = "/";
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i) s += "/";
    s += path[i].label();
  }
  return s;
}

std::size_t Address::hash() const {
  std::size_t seed = path.size();
  for (const auto& s : path) {
    seed = hash_combine(seed, (static_cast<std::size_t>(s.symbol) << 32) ^ static_cast<std::uint32_t>(s.index));
  }
  return seed;
}

Address address_relative(const Address& full, const Address& base) {
  if (!base.is_prefix_of(full)) {
    throw Error(ErrorCode::PrefixMismatch, base.to_string() + " is not a prefix of " + full.to_string());
  }
  Address rel;
  rel.path.assign(full.path.begin() + static_cast<std::ptrdiff_t>(base.path.size()), full.path.end());
  return rel;
}

}  // namespace ctf
