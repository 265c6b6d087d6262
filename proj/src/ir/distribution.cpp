#include "ctf/ir/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <unordered_map>
#include <unordered_set>

namespace ctf {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

class TableDistribution final : public DistributionImpl {
 public:
  TableDistribution(std::vector<Value> values, std::vector<double> log_probs)
      : values_(std::move(values)), log_probs_(std::move(log_probs)) {
    cumulative_.reserve(values_.size());
    double acc = 0.0;
    for (double lp : log_probs_) {
      acc += std::exp(lp);
      cumulative_.push_back(acc);
    }
    if (values_.size() > 16) {
      index_.reserve(values_.size());
      for (std::size_t i = 0; i < values_.size(); ++i) index_.emplace(values_[i], i);
    }
  }

  std::vector<Value> support() const override { return values_; }

  double log_mass(const Value& v) const override {
    if (!index_.empty()) {
      auto it = index_.find(v);
      return it == index_.end() ? kNegInf : log_probs_[it->second];
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (values_[i] == v) return log_probs_[i];
    }
    return kNegInf;
  }

  Value sample(Rng& rng) const override {
    std::uniform_real_distribution<double> u(0.0, cumulative_.back());
    const double x = u(rng);
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), x);
    auto i = static_cast<std::size_t>(it - cumulative_.begin());
    if (i >= values_.size()) i = values_.size() - 1;
    // Skip zero-mass entries that share a cumulative value with a neighbour.
    while (log_probs_[i] == kNegInf && i > 0) --i;
    return values_[i];
  }

 private:
  std::vector<Value> values_;
  std::vector<double> log_probs_;
  std::vector<double> cumulative_;
  std::unordered_map<Value, std::size_t, ValueHash> index_;
};

class LazyDistribution final : public DistributionImpl {
 public:
  explicit LazyDistribution(std::function<Distribution()> build) : build_(std::move(build)) {}

  std::vector<Value> support() const override { return get().support(); }
  double log_mass(const Value& v) const override { return get().log_mass(v); }
  Value sample(Rng& rng) const override { return get().sample(rng); }

 private:
  const Distribution& get() const {
    std::call_once(once_, [&] { built_ = build_(); });
    return built_;
  }

  std::function<Distribution()> build_;
  mutable std::once_flag once_;
  mutable Distribution built_;
};

class FunctionDistribution final : public DistributionImpl {
 public:
  FunctionDistribution(std::function<std::vector<Value>()> support, std::function<double(const Value&)> log_mass,
                       std::function<Value(Rng&)> sampler)
      : support_(std::move(support)), log_mass_(std::move(log_mass)), sampler_(std::move(sampler)) {}

  std::vector<Value> support() const override { return support_(); }
  double log_mass(const Value& v) const override { return log_mass_(v); }
  Value sample(Rng& rng) const override { return sampler_(rng); }

 private:
  std::function<std::vector<Value>()> support_;
  std::function<double(const Value&)> log_mass_;
  std::function<Value(Rng&)> sampler_;
};

void check_distinct(const std::vector<Value>& values) {
  std::unordered_set<Value, ValueHash> seen;
  seen.reserve(values.size());
  for (const auto& v : values) {
    if (!seen.insert(v).second) throw Error(ErrorCode::DuplicateValue, "duplicate support value " + v.to_string());
  }
}

}  // namespace

double log_sum_exp(const std::vector<double>& xs) {
  double m = kNegInf;
  for (double x : xs) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  if (m == std::numeric_limits<double>::infinity()) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

Distribution make_discrete(std::vector<Value> values, const std::vector<double>& weights) {
  if (values.empty()) throw Error(ErrorCode::EmptySupport, "no values");
  if (values.size() != weights.size()) throw Error(ErrorCode::InvalidArgument, "values/weights length mismatch");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw Error(ErrorCode::NegativeWeight, "weight " + std::to_string(w));
    total += w;
  }
  if (!(total > 0.0)) throw Error(ErrorCode::EmptySupport, "weights sum to zero");
  check_distinct(values);
  std::vector<double> lp;
  lp.reserve(weights.size());
  for (double w : weights) lp.push_back(w > 0.0 ? std::log(w / total) : kNegInf);
  return Distribution(std::make_shared<TableDistribution>(std::move(values), std::move(lp)));
}

Distribution make_discrete_log(std::vector<Value> values, std::vector<double> log_weights, bool check) {
  if (values.empty()) throw Error(ErrorCode::EmptySupport, "no values");
  if (values.size() != log_weights.size()) throw Error(ErrorCode::InvalidArgument, "values/weights length mismatch");
  for (double lw : log_weights) {
    if (std::isnan(lw)) throw Error(ErrorCode::NegativeWeight, "NaN log-weight");
  }
  const double z = log_sum_exp(log_weights);
  if (z == kNegInf) throw Error(ErrorCode::AllZeroWeights, "every log-weight is -inf");
  if (check) check_distinct(values);
  for (double& lw : log_weights) lw = lw == kNegInf ? kNegInf : lw - z;
  return Distribution(std::make_shared<TableDistribution>(std::move(values), std::move(log_weights)));
}

Distribution uniform(std::vector<Value> values) {
  std::vector<double> w(values.size(), 1.0);
  return make_discrete(std::move(values), w);
}

Distribution uniform_int(int lo, int hi) {
  if (hi < lo) throw Error(ErrorCode::EmptySupport, "empty integer range");
  std::vector<Value> vs;
  vs.reserve(static_cast<std::size_t>(hi - lo + 1));
  for (int i = lo; i <= hi; ++i) vs.emplace_back(i);
  return uniform(std::move(vs));
}

Distribution bernoulli(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidArgument, "bernoulli p outside [0,1]");
  return make_discrete({Value(true), Value(false)}, {p, 1.0 - p});
}

Distribution lazy(std::function<Distribution()> build) {
  return Distribution(std::make_shared<LazyDistribution>(std::move(build)));
}

Distribution from_functions(std::function<std::vector<Value>()> support, std::function<double(const Value&)> log_mass,
                            std::function<Value(Rng&)> sampler) {
  return Distribution(
      std::make_shared<FunctionDistribution>(std::move(support), std::move(log_mass), std::move(sampler)));
}

}  // namespace ctf
