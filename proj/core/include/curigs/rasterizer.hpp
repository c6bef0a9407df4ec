#pragma once

#include <cstdint>
#include <vector>

#include "curigs/camera.hpp"
#include "curigs/gaussians.hpp"
#include "curigs/image.hpp"

namespace curigs {

inline constexpr int kTileSize = 16;
inline constexpr double kMaxSplatAlpha = 0.99;
inline constexpr double kTransmittanceCutoff = 1e-4;
/// Footprints are truncated at this squared Mahalanobis radius (3 sigma).
inline constexpr double kFootprintCutoff = 9.0;

/// Per-pixel footprint weight: a Gaussian shifted down so it reaches zero
/// continuously at the 3-sigma ellipse and rescaled to 1 at the center.
double footprint_weight(double mahalanobis_sq) noexcept;
/// d footprint_weight / d mahalanobis_sq (zero outside the ellipse).
double footprint_weight_derivative(double mahalanobis_sq) noexcept;

struct RenderOptions {
  bool early_termination = true;
};

/// Visible splat, as prepared by the forward pass.
struct SplatRecord {
  int index = -1;  ///< primitive index in the cloud
  Vec2 mean2d = Vec2::Zero();
  double conic_a = 0.0, conic_b = 0.0, conic_c = 0.0;  ///< inverse 2D covariance
  double opacity = 0.0;
  double depth = 0.0;
  Vec3 color = Vec3::Zero();  ///< clamped to [0,1]
  std::uint8_t color_clamped = 0;  ///< bit k set when channel k hit a clamp bound
};

/// Everything the backward pass needs from a forward pass.
struct RenderContext {
  std::uint64_t cloud_fingerprint = 0;
  CameraPose camera;
  RenderOptions options;
  int tiles_x = 0;
  int tiles_y = 0;
  std::vector<SplatRecord> splats;            ///< sorted by (depth, index)
  std::vector<std::uint32_t> tile_offsets;    ///< tiles + 1 entries
  std::vector<std::uint32_t> tile_entries;    ///< indices into splats
  std::vector<std::uint32_t> pixel_last;      ///< per pixel: tile-list prefix length consumed
};

struct RenderOutput {
  Image color;                ///< H x W x 3
  Image depth;                ///< H x W x 1, sum_i T_i a_i z_i (not normalized)
  Image final_transmittance;  ///< H x W x 1
  RenderContext context;
};

/// Parameter gradients, one PackedParams per primitive, plus the screen-space
/// mean gradient used for densification statistics.
struct RenderGradients {
  std::vector<PackedParams> params;
  std::vector<Vec2> mean2d;

  explicit RenderGradients(std::size_t n = 0) : params(n, PackedParams{}), mean2d(n, Vec2::Zero()) {}
  std::size_t size() const noexcept { return params.size(); }
  RenderGradients& operator+=(const RenderGradients& other);
  RenderGradients& scale(double s);
  bool all_finite() const noexcept;
};

/// Front-to-back alpha compositing of the depth-sorted splats. Empty pixels
/// get black and depth 0.
RenderOutput render(const GaussianCloud& cloud, const CameraPose& cam, const RenderOptions& options = {});

/// Analytic gradient of a scalar loss given dL/dcolor (H x W x 3) and
/// dL/ddepth (H x W x 1; may be empty for zero). Throws StaleForward if
/// `cloud` or `cam` differ from the forward pass.
RenderGradients render_backward(const GaussianCloud& cloud, const CameraPose& cam, const RenderOutput& forward,
                                const Image& d_color, const Image& d_depth);

}  // namespace curigs
