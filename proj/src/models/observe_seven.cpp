#include "ctf/models/observe_seven.hpp"

#include <cmath>

namespace ctf::models {

LiftableModel observe_seven_model(std::shared_ptr<const CoarseningScheme> scheme) {
  LiftedErp draw(uniform_int(1, 8), scheme);
  LiftedErp coin(bernoulli(0.5), scheme);
  auto distance = lift_scorer(
      [](const std::vector<Value>& a) { return std::abs(a.at(0).number() - a.at(1).number()); });
  return [=](LevelContext& ctx) {
    Value x = ctx.sample("x", draw);
    Value y = ctx.sample("y", draw);
    Value pick = ctx.sample("coin", coin).boolean() ? x : y;
    ctx.call("observe", [&] {
      ctx.factor("near", -3.0 * ctx.score(distance, {pick, ctx.constant(Value(7))}));
    });
    return Value(Tuple{{x, y}});
  };
}

}  // namespace ctf::models
