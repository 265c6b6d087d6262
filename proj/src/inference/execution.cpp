#include "execution.hpp"

#include <cmath>

namespace ctf::detail {

Value Execution::on_sample(const Address& addr, const Distribution& d) {
  auto& choices = *cfg_.choices;
  if (cfg_.record_addresses) sample_addresses.push_back(addr);
  if (next_choice_ < choices.size()) {
    const Value& v = choices[next_choice_++];
    if (cfg_.score_choices) log_prior_ += d.log_mass(v);
    return v;
  }
  if (cfg_.branch_on_fresh_choice) throw Branch{d};
  Value v = d.sample(*cfg_.rng);
  if (cfg_.score_choices) log_prior_ += d.log_mass(v);
  choices.push_back(v);
  ++next_choice_;
  return v;
}

void Execution::on_factor(const Address& addr, double score) {
  if (std::isnan(score)) throw Error(ErrorCode::InvalidArgument, "NaN factor score at " + addr.to_string());
  const std::size_t index = factors_seen_++;
  if (cfg_.record_addresses) {
    factor_addresses.push_back(addr);
    factor_scores.push_back(score);
  }
  if (cfg_.pause_at_factor != kNever) {
    if (index < cfg_.pause_at_factor) return;
    paused_score_ = score;
    throw Pause{};
  }
  factor_sum_ += score;
  if (cfg_.prune_impossible && score == -INFINITY) throw Prune{};
}

}  // namespace ctf::detail
