#include "ctf/ir/runtime.hpp"

namespace ctf {

const Value* Store::find_value(const Address& rel, int lvl) const {
  auto it = values_.find(Key{rel, lvl});
  return it == values_.end() ? nullptr : &it->second;
}

void Store::put_value(const Address& rel, int lvl, Value v) { values_.insert_or_assign(Key{rel, lvl}, std::move(v)); }

std::optional<double> Store::find_score(const Address& rel, int lvl) const {
  auto it = scores_.find(Key{rel, lvl});
  if (it == scores_.end()) return std::nullopt;
  return it->second;
}

void Store::put_score(const Address& rel, int lvl, double s) { scores_.insert_or_assign(Key{rel, lvl}, s); }

void Store::clear() {
  level = 0;
  base = {};
  values_.clear();
  scores_.clear();
}

Value RuntimeHandle::sample(Site site, const Distribution& d) {
  Frame frame(*this, site);
  return on_sample(stack_, d);
}

void RuntimeHandle::factor(Site site, double score) {
  Frame frame(*this, site);
  on_factor(stack_, score);
}

void RuntimeHandle::reset_execution_state() {
  stack_.path.clear();
  store_.clear();
}

}  // namespace ctf
