#pragma once

#include <functional>
#include <memory>
#include <random>
#include <vector>

#include "ctf/ir/value.hpp"

namespace ctf {

using Rng = std::mt19937_64;

/// Finite discrete distribution (an elementary random primitive). Support may
/// be too large to list; such distributions throw NotEnumerable from support().
class DistributionImpl {
 public:
  virtual ~DistributionImpl() = default;
  virtual std::vector<Value> support() const = 0;
  virtual double log_mass(const Value& v) const = 0;
  virtual Value sample(Rng& rng) const = 0;
};

class Distribution {
 public:
  Distribution() = default;
  explicit Distribution(std::shared_ptr<const DistributionImpl> impl) : impl_(std::move(impl)) {}

  std::vector<Value> support() const { return impl_->support(); }
  double log_mass(const Value& v) const { return impl_->log_mass(v); }
  Value sample(Rng& rng) const { return impl_->sample(rng); }

  const DistributionImpl* impl() const { return impl_.get(); }
  explicit operator bool() const { return impl_ != nullptr; }

 private:
  std::shared_ptr<const DistributionImpl> impl_;
};

/// Normalized table distribution: log_mass(v_i) = log(w_i / sum(w)).
/// Errors: EmptySupport, NegativeWeight, DuplicateValue.
Distribution make_discrete(std::vector<Value> values, const std::vector<double>& weights);

/// Same as make_discrete with unnormalized log-weights (-inf allowed). Throws
/// AllZeroWeights when every weight is -inf. Distinctness is checked unless
/// the caller vouches for it.
Distribution make_discrete_log(std::vector<Value> values, std::vector<double> log_weights,
                               bool check_distinct = true);

Distribution uniform(std::vector<Value> values);
/// Uniform over the integers lo..hi, as Number values.
Distribution uniform_int(int lo, int hi);
/// Distribution over {true, false}.
Distribution bernoulli(double p);

/// Distribution whose table is built on first use. Replayed executions never
/// touch it, so the build cost is paid only when a fresh choice is made.
Distribution lazy(std::function<Distribution()> build);

/// Distribution assembled from callbacks, for supports too large to tabulate.
Distribution from_functions(std::function<std::vector<Value>()> support, std::function<double(const Value&)> log_mass,
                            std::function<Value(Rng&)> sampler);

/// Numerically stable log(sum(exp(xs))). Returns -inf for an empty or all -inf input.
double log_sum_exp(const std::vector<double>& xs);

}  // namespace ctf
