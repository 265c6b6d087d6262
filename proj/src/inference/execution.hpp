#pragma once

#include <limits>
#include <vector>

#include "ctf/ir/runtime.hpp"

namespace ctf::detail {

/// One run of a model body. Samples are answered from `choices` while it has
/// entries; past the end, fresh values are drawn from `rng` and appended (or,
/// in branching mode, a Branch is thrown so the enumerator can fork).
class Execution final : public RuntimeHandle {
 public:
  static constexpr std::size_t kNever = std::numeric_limits<std::size_t>::max();

  struct Pause {};
  struct Branch {
    Distribution dist;
  };
  struct Prune {};

  struct Config {
    std::vector<Value>* choices = nullptr;
    Rng* rng = nullptr;
    bool branch_on_fresh_choice = false;
    bool score_choices = false;
    bool prune_impossible = false;
    bool record_addresses = false;
    std::size_t pause_at_factor = kNever;
  };

  explicit Execution(Config cfg) : cfg_(cfg) {}

  Value run(const ModelProgram& model) {
    reset_execution_state();
    next_choice_ = 0;
    factors_seen_ = 0;
    log_prior_ = 0.0;
    factor_sum_ = 0.0;
    return model(*this);
  }

  double log_prior() const { return log_prior_; }
  double factor_sum() const { return factor_sum_; }
  double paused_score() const { return paused_score_; }
  std::size_t consumed_choices() const { return next_choice_; }

  std::vector<Address> sample_addresses;
  std::vector<Address> factor_addresses;
  std::vector<double> factor_scores;

 protected:
  Value on_sample(const Address& addr, const Distribution& d) override;
  void on_factor(const Address& addr, double score) override;

 private:
  Config cfg_;
  std::size_t next_choice_ = 0;
  std::size_t factors_seen_ = 0;
  double log_prior_ = 0.0;
  double factor_sum_ = 0.0;
  double paused_score_ = 0.0;
};

}  // namespace ctf::detail
