#pragma once

#include <memory>

#include "ctf/transform/lifting.hpp"

namespace ctf::models {

/// Two uniform integers in [1, 8]; a fair coin picks one of them, and a
/// soft observation pulls the pick towards 7 with score -3 |v - 7|.
/// Returns (x, y).
LiftableModel observe_seven_model(std::shared_ptr<const CoarseningScheme> scheme);

}  // namespace ctf::models
