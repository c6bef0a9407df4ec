#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "curigs/camera.hpp"

namespace curigs {

/// Number of scalar parameters per primitive in packed form:
/// mu(3) log_scale(3) rot_quat(4, w x y z) opacity_logit(1) color(3).
inline constexpr int kParamsPerPrimitive = 14;
using PackedParams = std::array<double, kParamsPerPrimitive>;

/// Offsets of each parameter group inside PackedParams.
namespace param_offset {
inline constexpr int kMu = 0;
inline constexpr int kLogScale = 3;
inline constexpr int kRotQuat = 6;
inline constexpr int kOpacity = 10;
inline constexpr int kColor = 11;
}  // namespace param_offset

/// Anisotropic Gaussian stored in unconstrained form. Color is a constant
/// linear RGB value (SH degree 0); view-dependent SH would extend `color`.
struct GaussianPrimitive {
  Vec3 mu = Vec3::Zero();
  Vec3 log_scale = Vec3::Zero();
  Vec4 rot_quat = Vec4(1.0, 0.0, 0.0, 0.0);  ///< (w, x, y, z)
  double opacity_logit = 0.0;
  Vec3 color = Vec3::Zero();

  double opacity() const noexcept;
  /// Rotation of the normalized quaternion.
  Mat3 rotation() const;
  /// Sigma = R diag(exp(2 log_scale)) R^T.
  Mat3 covariance() const;

  PackedParams pack() const noexcept;
  static GaussianPrimitive unpack(const PackedParams& p) noexcept;

  bool operator==(const GaussianPrimitive&) const = default;
};

struct GaussianCloud {
  std::vector<GaussianPrimitive> primitives;

  std::size_t size() const noexcept { return primitives.size(); }
  bool empty() const noexcept { return primitives.empty(); }
  /// Hash over every parameter; the renderer uses it to detect mutation
  /// between a forward pass and its backward pass.
  std::uint64_t fingerprint() const noexcept;

  bool operator==(const GaussianCloud&) const = default;
};

/// Screen-space footprint of one primitive.
struct ProjectedGaussian {
  Vec2 mean2d = Vec2::Zero();
  Mat2 cov2d = Mat2::Identity();
  double depth = 0.0;  ///< camera-space z
  int index = -1;
};

inline constexpr double kNearPlane = 0.01;
inline constexpr double kCov2dFloor = 0.3;  ///< px^2 added to the 2D covariance diagonal
inline constexpr double kMaxCovarianceCondition = 1e12;

double sigmoid(double x) noexcept;
double logit(double p) noexcept;

/// Rotation matrix of a unit quaternion (w, x, y, z).
Mat3 quat_to_rotation(const Vec4& q);

/// exp(-1/2 (x-mu)^T Sigma^-1 (x-mu)). Throws SingularCovariance when the
/// covariance condition number exceeds 1e12.
double density_at(const GaussianPrimitive& g, const Vec3& x);

/// Pinhole projection with the local affine approximation of the perspective
/// map. Returns nullopt when the center is at or behind the near plane.
std::optional<ProjectedGaussian> project(const GaussianPrimitive& g, const CameraPose& cam, int index = -1);

/// Renormalizes every quaternion (degenerate ones reset to identity).
void normalize_rotations(GaussianCloud& cloud);

/// Checkpoint file: JSON with {"format": "curigs-cloud", "version": 1, "primitives": [...]},
/// each primitive a 14-number array in PackedParams order. Lossless.
void save_checkpoint(const std::filesystem::path& path, const GaussianCloud& cloud);
GaussianCloud load_checkpoint(const std::filesystem::path& path);

}  // namespace curigs
