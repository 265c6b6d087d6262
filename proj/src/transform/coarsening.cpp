#include "ctf/transform/coarsening.hpp"

#include <cmath>
#include <map>

namespace ctf {

Value coarsen_times(const CoarseningScheme& scheme, Value v, int times) {
  if (times < 0) throw Error(ErrorCode::NegativeLevel, "negative coarsening count");
  for (int i = 0; i < times; ++i) v = scheme.coarsen(v);
  return v;
}

InverseLawReport check_inverse_law(const CoarseningScheme& scheme, const std::vector<Value>& domain) {
  InverseLawReport report;
  std::map<Value, std::vector<Value>> refinements;
  for (const auto& v : domain) {
    ++report.values_checked;
    Value coarse;
    try {
      coarse = scheme.coarsen(v);
    } catch (const Error& e) {
      report.violations.push_back({v, Value(), std::string("coarsen failed: ") + e.what()});
      continue;
    }
    auto it = refinements.find(coarse);
    if (it == refinements.end()) {
      std::vector<Value> refined;
      try {
        refined = scheme.refine(coarse);
      } catch (const Error& e) {
        report.violations.push_back({v, coarse, std::string("refine failed: ") + e.what()});
        continue;
      }
      if (refined.empty()) report.violations.push_back({v, coarse, "empty refinement"});
      std::map<Value, int> seen;
      for (const auto& w : refined) {
        ++report.refinements_checked;
        if (seen[w]++ == 1) report.violations.push_back({w, coarse, "duplicate refinement"});
        Value back;
        try {
          back = scheme.coarsen(w);
        } catch (const Error& e) {
          report.violations.push_back({w, coarse, std::string("refinement does not coarsen: ") + e.what()});
          continue;
        }
        if (back != coarse) report.violations.push_back({w, coarse, "refinement coarsens to " + back.to_string()});
      }
      it = refinements.emplace(coarse, std::move(refined)).first;
    }
    bool found = false;
    for (const auto& w : it->second) {
      if (w == v) {
        found = true;
        break;
      }
    }
    if (!found) report.violations.push_back({v, coarse, "value missing from refine(coarsen(value))"});
  }
  return report;
}

namespace {

std::int64_t as_integer(double x) {
  const auto i = static_cast<std::int64_t>(std::llround(x));
  if (static_cast<double>(i) != x) throw Error(ErrorCode::CoarsenFailure, "non-integer number for interval coarsening");
  return i;
}

Value interval_coarsen(const Value& v) {
  if (v.is<bool>()) return v;
  if (v.is<double>()) {
    const std::int64_t x = as_integer(v.number());
    if (x < 1) throw Error(ErrorCode::CoarsenFailure, "interval coarsening expects integers >= 1");
    const std::int64_t lo = ((x - 1) / 2) * 2 + 1;
    return Value(IntInterval{lo, lo + 1});
  }
  if (v.is<IntInterval>()) {
    const auto& iv = v.interval();
    const std::int64_t w = iv.width() * 2;
    const std::int64_t lo = ((iv.lo - 1) / w) * w + 1;
    return Value(IntInterval{lo, lo + w - 1});
  }
  throw Error(ErrorCode::CoarsenFailure, "interval scheme cannot coarsen " + v.to_string());
}

std::vector<Value> interval_refine(const Value& v) {
  if (v.is<bool>()) return {v};
  if (v.is<IntInterval>()) {
    const auto& iv = v.interval();
    const std::int64_t w = iv.width();
    if (w < 2 || (w & (w - 1)) != 0 || (iv.lo - 1) % w != 0) {
      throw Error(ErrorCode::EmptyRefinement, "interval " + v.to_string() + " is not dyadic-aligned");
    }
    if (w == 2) return {Value(iv.lo), Value(iv.hi)};
    const std::int64_t half = w / 2;
    return {Value(IntInterval{iv.lo, iv.lo + half - 1}), Value(IntInterval{iv.lo + half, iv.hi})};
  }
  throw Error(ErrorCode::EmptyRefinement, "interval scheme cannot refine " + v.to_string());
}

}  // namespace

CoarseningScheme tuple_transparent(CoarseningScheme inner) {
  auto base_coarsen = inner.coarsen;
  auto base_refine = inner.refine;
  CoarseningScheme out = std::move(inner);
  out.coarsen = [base_coarsen](const Value& v) -> Value {
    if (!v.is<Tuple>()) return base_coarsen(v);
    std::vector<Value> items;
    items.reserve(v.items().size());
    for (const auto& x : v.items()) items.push_back(base_coarsen(x));
    return Value(std::move(items));
  };
  out.refine = [base_refine](const Value& v) -> std::vector<Value> {
    if (!v.is<Tuple>()) return base_refine(v);
    std::vector<std::vector<Value>> parts;
    for (const auto& x : v.items()) parts.push_back(base_refine(x));
    std::vector<Value> result;
    std::vector<std::size_t> idx(parts.size(), 0);
    for (const auto& p : parts) {
      if (p.empty()) return result;
    }
    for (;;) {
      std::vector<Value> items;
      for (std::size_t i = 0; i < parts.size(); ++i) items.push_back(parts[i][idx[i]]);
      result.emplace_back(std::move(items));
      std::size_t k = 0;
      while (k < parts.size() && ++idx[k] == parts[k].size()) idx[k++] = 0;
      if (k == parts.size()) break;
    }
    return result;
  };
  return out;
}

CoarseningScheme interval_scheme() {
  CoarseningScheme s;
  s.coarsen = interval_coarsen;
  s.refine = interval_refine;
  return tuple_transparent(std::move(s));
}

CoarseningScheme identity_scheme() {
  CoarseningScheme s;
  s.coarsen = [](const Value& v) { return v; };
  s.refine = [](const Value& v) { return std::vector<Value>{v}; };
  return s;
}

}  // namespace ctf
