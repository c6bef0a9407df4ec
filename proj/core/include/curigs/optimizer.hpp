#pragma once

#include <cstdint>
#include <vector>

#include "curigs/gaussians.hpp"
#include "curigs/random.hpp"
#include "curigs/rasterizer.hpp"

namespace curigs {

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-15;
};

/// One bias-corrected Adam update of a scalar. `step` is 1-based and already
/// includes this update. m and v are updated in place.
double adam_update(double param, double grad, double& m, double& v, int step, double lr, const AdamHyper& h);

/// Learning rates by parameter group. Position decays exponentially from
/// position_lr_init to position_lr_final over position_decay_steps.
struct LearningRates {
  double position_lr_init = 1.6e-3;
  double position_lr_final = 1.6e-5;
  int position_decay_steps = 5000;
  double scale_lr = 5e-3;
  double rotation_lr = 1e-3;
  double opacity_lr = 5e-2;
  double color_lr = 1e-2;
};

double position_lr(const LearningRates& lr, int step);

/// Per-primitive first and second moments in PackedParams layout.
struct AdamState {
  std::vector<PackedParams> m;
  std::vector<PackedParams> v;
  int step = 0;

  explicit AdamState(std::size_t n = 0) : m(n, PackedParams{}), v(n, PackedParams{}) {}
};

/// Increments state.step, applies one update per parameter with its group's
/// rate at that step, then renormalizes every quaternion.
void adam_step(GaussianCloud& cloud, const RenderGradients& grads, AdamState& state, const LearningRates& lr,
               const AdamHyper& hyper = {});

/// Screen-space gradient norms accumulated between density-control passes.
struct DensifyStats {
  std::vector<double> grad_norm_sum;
  std::vector<int> visible_count;

  explicit DensifyStats(std::size_t n = 0) : grad_norm_sum(n, 0.0), visible_count(n, 0) {}
  /// Adds |d loss / d mean2d| for every primitive with a nonzero gradient.
  void accumulate(const RenderGradients& grads);
  void reset(std::size_t n);
};

struct DensifyConfig {
  int interval = 100;
  int start_iter = 500;
  int end_iter = 3000;
  double prune_opacity = 0.005;
  double grad_threshold = 2e-4;  ///< mean screen-space gradient norm
  std::size_t max_primitives = 6000;
  double clone_jitter = 0.5;     ///< jitter std-dev in units of the primitive's scale
};

void validate(const DensifyConfig& c);

/// Trainable cloud together with its optimizer moments.
struct ModelState {
  GaussianCloud cloud;
  AdamState adam;
};

struct DensifyResult {
  std::size_t pruned = 0;
  std::size_t cloned = 0;
};

/// Prunes primitives with opacity below the floor, clones those whose mean
/// accumulated gradient exceeds the threshold (fresh moments, jittered mean),
/// never exceeding max_primitives. Resets `stats` to the new size.
DensifyResult densify_and_prune(ModelState& model, DensifyStats& stats, const DensifyConfig& config, Rng& rng);

}  // namespace curigs
