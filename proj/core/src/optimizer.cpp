#include "curigs/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "curigs/error.hpp"

namespace curigs {

double adam_update(double param, double grad, double& m, double& v, int step, double lr, const AdamHyper& h) {
  m = h.beta1 * m + (1.0 - h.beta1) * grad;
  v = h.beta2 * v + (1.0 - h.beta2) * grad * grad;
  const double m_hat = m / (1.0 - std::pow(h.beta1, step));
  const double v_hat = v / (1.0 - std::pow(h.beta2, step));
  return param - lr * m_hat / (std::sqrt(v_hat) + h.eps);
}

double position_lr(const LearningRates& lr, int step) {
  if (lr.position_decay_steps <= 0 || lr.position_lr_init <= 0.0 || lr.position_lr_final <= 0.0) {
    return lr.position_lr_init;
  }
  const double t = std::clamp(static_cast<double>(step) / lr.position_decay_steps, 0.0, 1.0);
  return std::exp((1.0 - t) * std::log(lr.position_lr_init) + t * std::log(lr.position_lr_final));
}

void adam_step(GaussianCloud& cloud, const RenderGradients& grads, AdamState& state, const LearningRates& lr,
               const AdamHyper& hyper) {
  const std::size_t n = cloud.size();
  if (grads.size() != n || state.m.size() != n || state.v.size() != n) {
    raise(Errc::ShapeMismatch, "adam_step: cloud, gradient and moment sizes differ");
  }
  ++state.step;
  const double pos = position_lr(lr, state.step - 1);
  std::array<double, kParamsPerPrimitive> rates{};
  for (int k = 0; k < kParamsPerPrimitive; ++k) {
    if (k < param_offset::kLogScale) rates[k] = pos;
    else if (k < param_offset::kRotQuat) rates[k] = lr.scale_lr;
    else if (k < param_offset::kOpacity) rates[k] = lr.rotation_lr;
    else if (k < param_offset::kColor) rates[k] = lr.opacity_lr;
    else rates[k] = lr.color_lr;
  }
  for (std::size_t i = 0; i < n; ++i) {
    PackedParams p = cloud.primitives[i].pack();
    for (int k = 0; k < kParamsPerPrimitive; ++k) {
      p[k] = adam_update(p[k], grads.params[i][k], state.m[i][k], state.v[i][k], state.step, rates[k], hyper);
    }
    cloud.primitives[i] = GaussianPrimitive::unpack(p);
  }
  normalize_rotations(cloud);
}

void DensifyStats::accumulate(const RenderGradients& grads) {
  if (grads.size() != grad_norm_sum.size()) raise(Errc::ShapeMismatch, "DensifyStats: size mismatch");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    const double g = grads.mean2d[i].norm();
    if (g > 0.0) {
      grad_norm_sum[i] += g;
      ++visible_count[i];
    }
  }
}

void DensifyStats::reset(std::size_t n) {
  grad_norm_sum.assign(n, 0.0);
  visible_count.assign(n, 0);
}

void validate(const DensifyConfig& c) {
  if (c.interval < 1) raise(Errc::InvalidConfig, "densify interval must be >= 1");
  if (c.prune_opacity < 0.0 || c.prune_opacity >= 1.0) raise(Errc::InvalidConfig, "prune_opacity must lie in [0, 1)");
  if (c.grad_threshold < 0.0) raise(Errc::InvalidConfig, "grad_threshold must be >= 0");
  if (c.clone_jitter < 0.0) raise(Errc::InvalidConfig, "clone_jitter must be >= 0");
}

DensifyResult densify_and_prune(ModelState& model, DensifyStats& stats, const DensifyConfig& config, Rng& rng) {
  auto& prims = model.cloud.primitives;
  const std::size_t n = prims.size();
  if (stats.grad_norm_sum.size() != n || model.adam.m.size() != n) {
    raise(Errc::ShapeMismatch, "densify_and_prune: stats or moments out of sync with the cloud");
  }
  DensifyResult result;

  GaussianCloud kept;
  AdamState moments;
  moments.step = model.adam.step;
  std::vector<std::size_t> clone_candidates;
  for (std::size_t i = 0; i < n; ++i) {
    if (prims[i].opacity() < config.prune_opacity) {
      ++result.pruned;
      continue;
    }
    const int cnt = stats.visible_count[i];
    if (cnt > 0 && stats.grad_norm_sum[i] / cnt > config.grad_threshold) clone_candidates.push_back(kept.size());
    kept.primitives.push_back(prims[i]);
    moments.m.push_back(model.adam.m[i]);
    moments.v.push_back(model.adam.v[i]);
  }

  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t idx : clone_candidates) {
    if (kept.size() >= config.max_primitives) break;
    GaussianPrimitive copy = kept.primitives[idx];
    const Mat3 r = copy.rotation();
    Vec3 local;
    for (int k = 0; k < 3; ++k) local[k] = normal(rng) * std::exp(copy.log_scale[k]) * config.clone_jitter;
    copy.mu += r * local;
    kept.primitives.push_back(copy);
    moments.m.push_back(PackedParams{});
    moments.v.push_back(PackedParams{});
    ++result.cloned;
  }

  model.cloud = std::move(kept);
  model.adam = std::move(moments);
  stats.reset(model.cloud.size());
  return result;
}

}  // namespace curigs
