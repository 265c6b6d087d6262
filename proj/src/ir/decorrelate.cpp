#include "ctf/ir/decorrelate.hpp"

#include <algorithm>
#include <cmath>

namespace ctf {

Decorrelated decorrelate(const ErpFamily& family, const Value& params) {
  if (!family.support) throw Error(ErrorCode::UnknownSupport, "ERP family has no fixed support");
  Distribution base = family.make(params);
  const auto& declared = *family.support;
  for (const auto& v : base.support()) {
    if (base.log_mass(v) == -INFINITY) continue;
    if (std::find(declared.begin(), declared.end(), v) == declared.end()) {
      throw Error(ErrorCode::UnknownSupport, "value " + v.to_string() + " outside the declared support");
    }
  }
  Distribution maxent = uniform(declared);
  auto correction = [base, maxent](const Value& v) { return base.log_mass(v) - maxent.log_mass(v); };
  return Decorrelated{std::move(maxent), std::move(correction)};
}

Value sample_decorrelated(RuntimeHandle& h, Site site, const ErpFamily& family, const Value& params) {
  auto d = decorrelate(family, params);
  return h.call(site, [&] {
    Value v = h.sample("maxent", d.maxent);
    h.factor("correction", d.correction(v));
    return v;
  });
}

}  // namespace ctf
