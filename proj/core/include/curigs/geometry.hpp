#pragma once

#include <span>
#include <vector>

#include "curigs/camera.hpp"
#include "curigs/random.hpp"
#include "curigs/student_pool.hpp"

namespace curigs {

/// Angular spread of a student group.
struct PerturbationSpec {
  double sigma_deg = 0.0;  ///< yaw and pitch std-dev, degrees
  double sigma_r = 0.0;    ///< radial std-dev as a fraction of |C|, in [0, 0.5]
};

/// One draw from the perturbation sampler.
struct PerturbationSample {
  double yaw_deg = 0.0;
  double pitch_deg = 0.0;
  double radial = 0.0;  ///< eps_r after clamping to [-0.5, 0.5]
};

inline constexpr double kMaxRadialPerturbation = 0.5;

/// C = -R^T T.
Vec3 optical_center(const CameraPose& pose);

/// Rotation about the camera's local up axis by `yaw_deg`, followed by a
/// rotation about its local right axis by `pitch_deg`, in camera coordinates.
Mat3 view_relative_rotation(double yaw_deg, double pitch_deg);

void validate(const PerturbationSpec& spec);

/// Draws (yaw, pitch, eps_r). Always consumes three standard normals so the
/// stream position does not depend on the sigma values.
PerturbationSample sample_perturbation(const PerturbationSpec& spec, Rng& rng);

/// R' = Q R with Q the view-relative rotation (equivalently R' = R R_delta with
/// R_delta = R^T Q R), C' = C (1 + eps_r), T' = -R' C'. Intrinsics copied.
/// A zero sample returns the input pose unchanged.
CameraPose apply_perturbation(const CameraPose& pose, const PerturbationSample& sample);

CameraPose perturb_pose(const CameraPose& pose, const PerturbationSpec& spec, Rng& rng);

/// Unit optical axis (camera +z) in world coordinates.
Vec3 viewing_direction(const CameraPose& pose);

/// For each teacher (id = position in `teachers`) and each level, draws
/// `per_level_count` students. Levels must be strictly increasing.
StudentPool generate_student_pools(std::span<const CameraPose> teachers, std::span<const double> levels,
                                   int per_level_count, double sigma_r, Rng& rng);

}  // namespace curigs
