#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "ctf/ir/runtime.hpp"

namespace ctf {

/// A parameterized ERP whose parameters may depend on earlier random choices.
/// `support` must be set when the support is fixed and independent of params.
struct ErpFamily {
  std::function<Distribution(const Value& params)> make;
  std::optional<std::vector<Value>> support;
};

struct Decorrelated {
  Distribution maxent;
  /// log p(v; params) - log maxent(v)
  std::function<double(const Value&)> correction;
};

/// Replaces a dependent ERP by the uniform distribution over its support plus
/// a correcting score. Throws UnknownSupport when no fixed support is known or
/// the instantiated distribution escapes it.
Decorrelated decorrelate(const ErpFamily& family, const Value& params);

/// sample(maxent) at `site` followed by factor(correction) at the same site.
Value sample_decorrelated(RuntimeHandle& h, Site site, const ErpFamily& family, const Value& params);

}  // namespace ctf
