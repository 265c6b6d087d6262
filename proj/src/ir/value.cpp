#include "ctf/ir/value.hpp"

#include <bit>
#include <compare>
#include <functional>
#include <limits>
#include <sstream>

namespace ctf {

namespace {

bool same_bits(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

// Total order on doubles consistent with bitwise equality (IEEE totalOrder).
std::strong_ordering cmp(double a, double b) {
  auto key = [](double x) {
    const auto bits = std::bit_cast<std::int64_t>(x);
    return bits < 0 ? bits ^ std::numeric_limits<std::int64_t>::max() : bits;
  };
  return key(a) <=> key(b);
}

std::strong_ordering cmp(const IntMatrix& a, const IntMatrix& b) {
  if (auto c = a.rows <=> b.rows; c != 0) return c;
  if (auto c = a.cols <=> b.cols; c != 0) return c;
  return a.data <=> b.data;
}

std::strong_ordering cmp(const Value& a, const Value& b);

std::strong_ordering cmp_alt(double a, double b) { return cmp(a, b); }
std::strong_ordering cmp_alt(bool a, bool b) { return a <=> b; }
std::strong_ordering cmp_alt(const IntInterval& a, const IntInterval& b) {
  if (auto c = a.lo <=> b.lo; c != 0) return c;
  return a.hi <=> b.hi;
}
std::strong_ordering cmp_alt(const Tuple& a, const Tuple& b) {
  const std::size_t n = std::min(a.items.size(), b.items.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (auto c = cmp(a.items[i], b.items[i]); c != 0) return c;
  }
  return a.items.size() <=> b.items.size();
}
std::strong_ordering cmp_alt(const IntMatrix& a, const IntMatrix& b) { return cmp(a, b); }
std::strong_ordering cmp_alt(const PartialCoarseLattice& a, const PartialCoarseLattice& b) {
  if (auto c = a.n <=> b.n; c != 0) return c;
  if (auto c = a.coarsened <=> b.coarsened; c != 0) return c;
  if (auto c = a.scales.size() <=> b.scales.size(); c != 0) return c;
  for (std::size_t i = 0; i < a.scales.size(); ++i) {
    if (auto c = cmp(a.scales[i], b.scales[i]); c != 0) return c;
  }
  return std::strong_ordering::equal;
}
std::strong_ordering cmp_alt(const BlockSummary& a, const BlockSummary& b) {
  if (auto c = cmp(a.mean, b.mean); c != 0) return c;
  return cmp(a.std, b.std);
}
std::strong_ordering cmp_alt(const PartialDisparityMap& a, const PartialDisparityMap& b) {
  if (auto c = cmp(a.fine, b.fine); c != 0) return c;
  if (auto c = a.coarsened <=> b.coarsened; c != 0) return c;
  if (auto c = a.blocks.size() <=> b.blocks.size(); c != 0) return c;
  for (std::size_t i = 0; i < a.blocks.size(); ++i) {
    if (auto c = cmp_alt(a.blocks[i], b.blocks[i]); c != 0) return c;
  }
  return std::strong_ordering::equal;
}

std::strong_ordering cmp(const Value& a, const Value& b) {
  const auto& sa = a.storage();
  const auto& sb = b.storage();
  if (auto c = sa.index() <=> sb.index(); c != 0) return c;
  return std::visit(
      [&](const auto& x) -> std::strong_ordering {
        using T = std::decay_t<decltype(x)>;
        return cmp_alt(x, std::get<T>(sb));
      },
      sa);
}

std::size_t hash_ints(const std::vector<int>& v, std::size_t seed) {
  for (int x : v) seed = hash_combine(seed, std::hash<int>{}(x));
  return seed;
}

void print_matrix(std::ostringstream& os, const IntMatrix& m) {
  os << "[";
  for (int r = 0; r < m.rows; ++r) {
    if (r) os << ";";
    for (int c = 0; c < m.cols; ++c) os << (c ? " " : "") << m.at(r, c);
  }
  os << "]";
}

}  // namespace

Value::Value(IntInterval i) : v_(i) {
  if (i.lo > i.hi) throw Error(ErrorCode::InvalidArgument, "interval with lo > hi");
}

bool Tuple::operator==(const Tuple& o) const {
  if (items.size() != o.items.size()) return false;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!(items[i] == o.items[i])) return false;
  }
  return true;
}

bool BlockSummary::operator==(const BlockSummary& o) const { return same_bits(mean, o.mean) && same_bits(std, o.std); }

bool operator==(const Value& a, const Value& b) { return cmp(a, b) == 0; }
bool operator<(const Value& a, const Value& b) { return cmp(a, b) < 0; }

std::size_t Value::hash() const {
  std::size_t seed = v_.index();
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, double>) {
          seed = hash_combine(seed, std::hash<std::uint64_t>{}(std::bit_cast<std::uint64_t>(x)));
        } else if constexpr (std::is_same_v<T, bool>) {
          seed = hash_combine(seed, x ? 1 : 2);
        } else if constexpr (std::is_same_v<T, IntInterval>) {
          seed = hash_combine(seed, std::hash<std::int64_t>{}(x.lo));
          seed = hash_combine(seed, std::hash<std::int64_t>{}(x.hi));
        } else if constexpr (std::is_same_v<T, Tuple>) {
          for (const auto& item : x.items) seed = hash_combine(seed, item.hash());
        } else if constexpr (std::is_same_v<T, IntMatrix>) {
          seed = hash_ints(x.data, hash_combine(seed, x.rows));
        } else if constexpr (std::is_same_v<T, PartialCoarseLattice>) {
          seed = hash_combine(seed, x.coarsened);
          for (const auto& m : x.scales) seed = hash_ints(m.data, seed);
        } else if constexpr (std::is_same_v<T, BlockSummary>) {
          seed = hash_combine(seed, std::hash<double>{}(x.mean));
          seed = hash_combine(seed, std::hash<double>{}(x.std));
        } else {
          seed = hash_ints(x.fine.data, hash_combine(seed, x.coarsened));
          for (const auto& b : x.blocks) {
            seed = hash_combine(seed, std::hash<double>{}(b.mean) ^ (std::hash<double>{}(b.std) << 1));
          }
        }
      },
      v_);
  return seed;
}

std::string Value::to_string() const {
  std::ostringstream os;
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, double>) {
          os << x;
        } else if constexpr (std::is_same_v<T, bool>) {
          os << (x ? "true" : "false");
        } else if constexpr (std::is_same_v<T, IntInterval>) {
          os << "[" << x.lo << "," << x.hi << "]";
        } else if constexpr (std::is_same_v<T, Tuple>) {
          os << "(";
          for (std::size_t i = 0; i < x.items.size(); ++i) os << (i ? ", " : "") << x.items[i].to_string();
          os << ")";
        } else if constexpr (std::is_same_v<T, IntMatrix>) {
          print_matrix(os, x);
        } else if constexpr (std::is_same_v<T, PartialCoarseLattice>) {
          os << "partial(" << x.coarsened << ")";
          for (const auto& m : x.scales) print_matrix(os, m);
        } else if constexpr (std::is_same_v<T, BlockSummary>) {
          os << "summary(" << x.mean << "," << x.std << ")";
        } else {
          os << "disparity(" << x.coarsened << ")";
          print_matrix(os, x.fine);
        }
      },
      v_);
  return os.str();
}

}  // namespace ctf
