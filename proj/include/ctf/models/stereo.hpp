#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "ctf/transform/lifting.hpp"

namespace ctf::stereo {

inline constexpr double kMaxSmoothing = 5.0;

/// Grayscale image, intensities in [0, 255], row-major.
struct Image {
  int rows = 0;
  int cols = 0;
  std::vector<double> px;

  Image() = default;
  Image(int r, int c, double fill = 0.0) : rows(r), cols(c), px(static_cast<std::size_t>(r) * c, fill) {}
  double& at(int r, int c) { return px[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return px[static_cast<std::size_t>(r) * cols + c]; }
  bool operator==(const Image&) const = default;
};

struct StereoPair {
  Image left;
  Image right;
  IntMatrix disparity;
};

/// Piecewise-constant disparity field (a background plane plus two
/// rectangles), a random texture on the left, and the right image built as
/// right(r, x) = left(r, x - d(r, x)) with column clamping. Requires
/// max_disparity < width and even dimensions.
StereoPair synthesize_pair(std::uint64_t seed, int width, int height, int max_disparity);

/// min((dp - dq)^2, Vmax).
double smoothing(double dp, double dq);

/// Minimum |I_p - I'(x)| over x in [c + d - 0.5, c + d + 0.5], with I' the
/// right row linearly interpolated and x clamped to the image.
double data_cost(const Image& left, const Image& right, int r, int c, double d);

/// H(d) for a fine map or a partially summarized one. A summarized block
/// counts its mean as every pixel's disparity, its internal pairs contribute
/// min(2 std^2, Vmax) each. Throws DimensionMismatch.
double energy(const Value& map, const Image& left, const Image& right);

BlockSummary summarize(int a, int b, int c, int d);

/// Every integer block in [0, max_disparity]^4 with exactly this summary,
/// ordered (top-left, top-right, bottom-left, bottom-right).
const std::vector<std::array<int, 4>>& refine_summary(const BlockSummary& s, int max_disparity);

/// Number of single-block coarsening steps: (rows/2) * (cols/2).
int max_coarsening_steps(int rows, int cols);

/// Summarizes one 2x2 block per step in raster order. The class score
/// assumes the uniform disparity prior over [0, max_disparity].
CoarseningScheme block_scheme(int max_disparity);

/// Uniform distribution over rows x cols maps with entries in [0, max_disparity].
Distribution uniform_disparity(int rows, int cols, int max_disparity);

/// Samples a disparity map and factors on -H; the energy is polymorphic.
LiftableModel stereo_model(StereoPair pair, int max_disparity, std::shared_ptr<const CoarseningScheme> scheme);

}  // namespace ctf::stereo
