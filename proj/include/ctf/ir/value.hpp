#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "ctf/ir/error.hpp"

namespace ctf {

class Value;

/// Closed integer interval [lo, hi].
struct IntInterval {
  std::int64_t lo = 0;
  std::int64_t hi = 0;

  std::int64_t width() const { return hi - lo + 1; }
  bool contains(std::int64_t v) const { return lo <= v && v <= hi; }
  bool operator==(const IntInterval&) const = default;
};

struct Tuple {
  std::vector<Value> items;
  bool operator==(const Tuple&) const;
};

/// Dense row-major integer matrix.
struct IntMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<int> data;

  IntMatrix() = default;
  IntMatrix(int r, int c, int fill = 0) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

  int& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  int at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
  bool operator==(const IntMatrix&) const = default;
};

/// Spin lattice in which a prefix (in raster order) of 3x3 blocks has been
/// replaced by the block's modal spin. scales[0] is the n x n fine grid,
/// scales[1] the n/3 grid and, when n is divisible by 9, scales[2] the n/9
/// grid. Cells that are not resolved at a scale hold 0.
struct PartialCoarseLattice {
  int n = 0;
  int coarsened = 0;
  std::vector<IntMatrix> scales;

  bool operator==(const PartialCoarseLattice&) const = default;
};

/// Mean and population standard deviation of a 2x2 integer block. Both are
/// derived from integers by one canonical formula so equality is exact.
struct BlockSummary {
  double mean = 0.0;
  double std = 0.0;

  bool operator==(const BlockSummary& o) const;
};

/// Disparity map where a raster-order prefix of its 2x2 blocks is summarized.
struct PartialDisparityMap {
  IntMatrix fine;
  int coarsened = 0;
  std::vector<BlockSummary> blocks;  // (rows/2) x (cols/2), row-major

  bool operator==(const PartialDisparityMap&) const = default;
};

enum class ValueKind { Number, Bool, Interval, Tuple, Lattice, PartialLattice, Summary, PartialDisparity };

/// Tagged union over every value a model program can produce or a coarsening
/// scheme can act on. Equality is structural; reals compare bitwise.
class Value {
 public:
  using Storage = std::variant<double, bool, IntInterval, Tuple, IntMatrix, PartialCoarseLattice, BlockSummary,
                               PartialDisparityMap>;

  Value() : v_(0.0) {}
  Value(double x) : v_(x) {}
  Value(int x) : v_(static_cast<double>(x)) {}
  Value(std::int64_t x) : v_(static_cast<double>(x)) {}
  Value(bool b) : v_(b) {}
  Value(const char*) = delete;
  Value(IntInterval i);
  Value(Tuple t) : v_(std::move(t)) {}
  Value(std::vector<Value> items) : v_(Tuple{std::move(items)}) {}
  Value(IntMatrix m) : v_(std::move(m)) {}
  Value(PartialCoarseLattice l) : v_(std::move(l)) {}
  Value(BlockSummary s) : v_(s) {}
  Value(PartialDisparityMap m) : v_(std::move(m)) {}

  ValueKind kind() const { return static_cast<ValueKind>(v_.index()); }

  template <class T>
  bool is() const {
    return std::holds_alternative<T>(v_);
  }

  template <class T>
  const T& as() const {
    if (const T* p = std::get_if<T>(&v_)) return *p;
    throw Error(ErrorCode::TypeMismatch, "value " + to_string() + " has unexpected kind");
  }

  double number() const { return as<double>(); }
  bool boolean() const { return as<bool>(); }
  const IntInterval& interval() const { return as<IntInterval>(); }
  const std::vector<Value>& items() const { return as<Tuple>().items; }

  const Storage& storage() const { return v_; }

  std::string to_string() const;
  std::size_t hash() const;

  friend bool operator==(const Value& a, const Value& b);
  friend bool operator<(const Value& a, const Value& b);
  friend bool operator!=(const Value& a, const Value& b) { return !(a == b); }

 private:
  Storage v_;
};

struct ValueHash {
  std::size_t operator()(const Value& v) const { return v.hash(); }
};

inline std::size_t hash_combine(std::size_t seed, std::size_t h) {
  return seed ^ (h + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

}  // namespace ctf
