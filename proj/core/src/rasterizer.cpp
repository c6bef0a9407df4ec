#include "curigs/rasterizer.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>

#include "curigs/error.hpp"
#include "curigs/parallel.hpp"

namespace curigs {

namespace {

const double kFootprintFloor = std::exp(-0.5 * kFootprintCutoff);
const double kFootprintNorm = 1.0 / (1.0 - kFootprintFloor);

// Per (tile entry) gradient accumulator in screen space.
struct ScreenGrad {
  double mean_x = 0, mean_y = 0;
  double conic_a = 0, conic_b = 0, conic_c = 0;
  double opacity = 0;
  std::array<double, 3> color{};
  double depth = 0;

  void add(const ScreenGrad& o) {
    mean_x += o.mean_x;
    mean_y += o.mean_y;
    conic_a += o.conic_a;
    conic_b += o.conic_b;
    conic_c += o.conic_c;
    opacity += o.opacity;
    for (int k = 0; k < 3; ++k) color[k] += o.color[k];
    depth += o.depth;
  }
};

}  // namespace

double footprint_weight(double q) noexcept {
  if (!(q < kFootprintCutoff)) return 0.0;
  return (std::exp(-0.5 * q) - kFootprintFloor) * kFootprintNorm;
}

double footprint_weight_derivative(double q) noexcept {
  if (!(q < kFootprintCutoff)) return 0.0;
  return -0.5 * std::exp(-0.5 * q) * kFootprintNorm;
}

RenderGradients& RenderGradients::operator+=(const RenderGradients& other) {
  if (other.size() != size()) raise(Errc::ShapeMismatch, "gradient size mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (int k = 0; k < kParamsPerPrimitive; ++k) params[i][k] += other.params[i][k];
    mean2d[i] += other.mean2d[i];
  }
  return *this;
}

RenderGradients& RenderGradients::scale(double s) {
  for (auto& p : params)
    for (auto& v : p) v *= s;
  for (auto& m : mean2d) m *= s;
  return *this;
}

bool RenderGradients::all_finite() const noexcept {
  for (const auto& p : params)
    for (double v : p)
      if (!std::isfinite(v)) return false;
  return true;
}

RenderOutput render(const GaussianCloud& cloud, const CameraPose& cam, const RenderOptions& options) {
  if (cloud.empty()) raise(Errc::InvalidArgument, "cannot render an empty cloud");
  validate(cam);
  const int width = cam.width, height = cam.height;

  RenderOutput out;
  out.color = Image(width, height, 3);
  out.depth = Image(width, height, 1);
  out.final_transmittance = Image(width, height, 1, 1.0);
  RenderContext& ctx = out.context;
  ctx.cloud_fingerprint = cloud.fingerprint();
  ctx.camera = cam;
  ctx.options = options;
  ctx.tiles_x = (width + kTileSize - 1) / kTileSize;
  ctx.tiles_y = (height + kTileSize - 1) / kTileSize;
  const int tile_count = ctx.tiles_x * ctx.tiles_y;

  // Project and cull.
  struct Extent {
    int tx0, tx1, ty0, ty1;
  };
  std::vector<Extent> extents;
  ctx.splats.reserve(cloud.size());
  extents.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& g = cloud.primitives[i];
    const auto proj = project(g, cam, static_cast<int>(i));
    if (!proj) continue;
    const Mat2& cov = proj->cov2d;
    const double det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(0, 1);
    if (!(det > 0.0)) continue;
    const double mid = 0.5 * (cov(0, 0) + cov(1, 1));
    const double lambda_max = mid + std::sqrt(std::max(0.0, mid * mid - det));
    const double radius = std::sqrt(kFootprintCutoff * lambda_max);
    const double mx = proj->mean2d.x(), my = proj->mean2d.y();
    // Pixel (x, y) samples at (x + 0.5, y + 0.5).
    const double px0 = std::floor(mx - radius - 0.5), px1 = std::ceil(mx + radius - 0.5);
    const double py0 = std::floor(my - radius - 0.5), py1 = std::ceil(my + radius - 0.5);
    if (!(px1 >= 0.0 && py1 >= 0.0 && px0 <= width - 1 && py0 <= height - 1)) continue;
    Extent e;
    e.tx0 = static_cast<int>(std::max(0.0, px0)) / kTileSize;
    e.tx1 = static_cast<int>(std::min<double>(width - 1, px1)) / kTileSize;
    e.ty0 = static_cast<int>(std::max(0.0, py0)) / kTileSize;
    e.ty1 = static_cast<int>(std::min<double>(height - 1, py1)) / kTileSize;

    SplatRecord s;
    s.index = static_cast<int>(i);
    s.mean2d = proj->mean2d;
    s.conic_a = cov(1, 1) / det;
    s.conic_b = -cov(0, 1) / det;
    s.conic_c = cov(0, 0) / det;
    s.opacity = g.opacity();
    s.depth = proj->depth;
    for (int k = 0; k < 3; ++k) {
      const double c = g.color[k];
      if (c < 0.0 || c > 1.0) s.color_clamped |= static_cast<std::uint8_t>(1u << k);
      s.color[k] = std::clamp(c, 0.0, 1.0);
    }
    ctx.splats.push_back(s);
    extents.push_back(e);
  }

  // Depth order, ties broken by primitive index.
  std::vector<std::uint32_t> order(ctx.splats.size());
  for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    const auto& sa = ctx.splats[a];
    const auto& sb = ctx.splats[b];
    if (sa.depth != sb.depth) return sa.depth < sb.depth;
    return sa.index < sb.index;
  });
  {
    std::vector<SplatRecord> sorted;
    std::vector<Extent> sorted_extents;
    sorted.reserve(order.size());
    sorted_extents.reserve(order.size());
    for (auto i : order) {
      sorted.push_back(ctx.splats[i]);
      sorted_extents.push_back(extents[i]);
    }
    ctx.splats = std::move(sorted);
    extents = std::move(sorted_extents);
  }

  // Per-tile lists in depth order.
  std::vector<std::uint32_t> counts(tile_count, 0);
  for (const auto& e : extents)
    for (int ty = e.ty0; ty <= e.ty1; ++ty)
      for (int tx = e.tx0; tx <= e.tx1; ++tx) ++counts[ty * ctx.tiles_x + tx];
  ctx.tile_offsets.assign(tile_count + 1, 0);
  for (int t = 0; t < tile_count; ++t) ctx.tile_offsets[t + 1] = ctx.tile_offsets[t] + counts[t];
  ctx.tile_entries.resize(ctx.tile_offsets.back());
  std::vector<std::uint32_t> cursor(ctx.tile_offsets.begin(), ctx.tile_offsets.end() - 1);
  for (std::uint32_t s = 0; s < extents.size(); ++s) {
    const auto& e = extents[s];
    for (int ty = e.ty0; ty <= e.ty1; ++ty)
      for (int tx = e.tx0; tx <= e.tx1; ++tx) ctx.tile_entries[cursor[ty * ctx.tiles_x + tx]++] = s;
  }

  ctx.pixel_last.assign(static_cast<std::size_t>(width) * height, 0);
  const bool early = options.early_termination;

  parallel_for(static_cast<std::size_t>(tile_count), [&](std::size_t tile) {
    const int tx = static_cast<int>(tile) % ctx.tiles_x;
    const int ty = static_cast<int>(tile) / ctx.tiles_x;
    const std::uint32_t begin = ctx.tile_offsets[tile], end = ctx.tile_offsets[tile + 1];
    const int x_end = std::min(width, (tx + 1) * kTileSize);
    const int y_end = std::min(height, (ty + 1) * kTileSize);
    for (int y = ty * kTileSize; y < y_end; ++y) {
      const double py = y + 0.5;
      for (int x = tx * kTileSize; x < x_end; ++x) {
        const double px = x + 0.5;
        double transmittance = 1.0;
        double r = 0.0, g = 0.0, b = 0.0, z = 0.0;
        std::uint32_t last = 0;
        for (std::uint32_t k = begin; k < end; ++k) {
          const SplatRecord& s = ctx.splats[ctx.tile_entries[k]];
          const double dx = px - s.mean2d.x(), dy = py - s.mean2d.y();
          const double q = s.conic_a * dx * dx + 2.0 * s.conic_b * dx * dy + s.conic_c * dy * dy;
          if (!(q < kFootprintCutoff)) continue;
          const double alpha = std::min(kMaxSplatAlpha, s.opacity * footprint_weight(q));
          const double w = alpha * transmittance;
          r += w * s.color[0];
          g += w * s.color[1];
          b += w * s.color[2];
          z += w * s.depth;
          transmittance *= 1.0 - alpha;
          last = k - begin + 1;
          if (early && transmittance < kTransmittanceCutoff) break;
        }
        out.color.at(x, y, 0) = r;
        out.color.at(x, y, 1) = g;
        out.color.at(x, y, 2) = b;
        out.depth.at(x, y) = z;
        out.final_transmittance.at(x, y) = transmittance;
        ctx.pixel_last[static_cast<std::size_t>(y) * width + x] = last;
      }
    }
  });
  return out;
}

namespace {

// d R(q) / d q_m for unit quaternion q = (w, x, y, z); returns sum_ij G_ij dR_ij/dq_m.
Vec4 rotation_grad_to_quat(const Mat3& g, const Vec4& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Vec4 d;
  d[0] = 2.0 * (-z * g(0, 1) + y * g(0, 2) + z * g(1, 0) - x * g(1, 2) - y * g(2, 0) + x * g(2, 1));
  d[1] = 2.0 * (y * g(0, 1) + z * g(0, 2) + y * g(1, 0) - w * g(1, 2) + z * g(2, 0) + w * g(2, 1)) -
         4.0 * x * (g(1, 1) + g(2, 2));
  d[2] = 2.0 * (x * g(0, 1) + w * g(0, 2) + x * g(1, 0) + z * g(1, 2) - w * g(2, 0) + z * g(2, 1)) -
         4.0 * y * (g(0, 0) + g(2, 2));
  d[3] = 2.0 * (-w * g(0, 1) + x * g(0, 2) + w * g(1, 0) + y * g(1, 2) + x * g(2, 0) + y * g(2, 1)) -
         4.0 * z * (g(0, 0) + g(1, 1));
  return d;
}

}  // namespace

RenderGradients render_backward(const GaussianCloud& cloud, const CameraPose& cam, const RenderOutput& forward,
                                const Image& d_color, const Image& d_depth) {
  const RenderContext& ctx = forward.context;
  if (cloud.fingerprint() != ctx.cloud_fingerprint) {
    raise(Errc::StaleForward, "cloud changed since the forward pass");
  }
  if (!(cam == ctx.camera)) raise(Errc::StaleForward, "camera differs from the forward pass");
  const int width = cam.width, height = cam.height;
  if (!(d_color.same_extent(width, height) && d_color.channels() == 3)) {
    raise(Errc::ShapeMismatch, "color gradient must be H x W x 3");
  }
  const bool has_depth_grad = !d_depth.empty();
  if (has_depth_grad && !(d_depth.same_extent(width, height) && d_depth.channels() == 1)) {
    raise(Errc::ShapeMismatch, "depth gradient must be H x W x 1");
  }

  const int tile_count = ctx.tiles_x * ctx.tiles_y;
  std::vector<ScreenGrad> entry_grads(ctx.tile_entries.size());

  parallel_for(static_cast<std::size_t>(tile_count), [&](std::size_t tile) {
    const int tx = static_cast<int>(tile) % ctx.tiles_x;
    const int ty = static_cast<int>(tile) / ctx.tiles_x;
    const std::uint32_t begin = ctx.tile_offsets[tile];
    const int x_end = std::min(width, (tx + 1) * kTileSize);
    const int y_end = std::min(height, (ty + 1) * kTileSize);
    for (int y = ty * kTileSize; y < y_end; ++y) {
      const double py = y + 0.5;
      for (int x = tx * kTileSize; x < x_end; ++x) {
        const std::uint32_t last = ctx.pixel_last[static_cast<std::size_t>(y) * width + x];
        if (last == 0) continue;
        const double px = x + 0.5;
        const double dc[3] = {d_color.at(x, y, 0), d_color.at(x, y, 1), d_color.at(x, y, 2)};
        const double dd = has_depth_grad ? d_depth.at(x, y) : 0.0;
        if (dc[0] == 0.0 && dc[1] == 0.0 && dc[2] == 0.0 && dd == 0.0) continue;

        double transmittance = forward.final_transmittance.at(x, y);
        double acc_c[3] = {0.0, 0.0, 0.0};
        double acc_z = 0.0;
        for (std::uint32_t k = begin + last; k-- > begin;) {
          const SplatRecord& s = ctx.splats[ctx.tile_entries[k]];
          const double dx = px - s.mean2d.x(), dy = py - s.mean2d.y();
          const double q = s.conic_a * dx * dx + 2.0 * s.conic_b * dx * dy + s.conic_c * dy * dy;
          if (!(q < kFootprintCutoff)) continue;
          const double weight = footprint_weight(q);
          const double raw_alpha = s.opacity * weight;
          const bool clamped = raw_alpha > kMaxSplatAlpha;
          const double alpha = clamped ? kMaxSplatAlpha : raw_alpha;
          transmittance /= (1.0 - alpha);
          const double w = alpha * transmittance;

          ScreenGrad& sg = entry_grads[k];
          double d_alpha = 0.0;
          for (int ch = 0; ch < 3; ++ch) {
            sg.color[ch] += w * dc[ch];
            d_alpha += (s.color[ch] - acc_c[ch]) * dc[ch];
            acc_c[ch] = alpha * s.color[ch] + (1.0 - alpha) * acc_c[ch];
          }
          sg.depth += w * dd;
          d_alpha += (s.depth - acc_z) * dd;
          acc_z = alpha * s.depth + (1.0 - alpha) * acc_z;
          d_alpha *= transmittance;

          if (clamped) continue;
          sg.opacity += d_alpha * weight;
          const double d_q = d_alpha * s.opacity * footprint_weight_derivative(q);
          sg.mean_x += -d_q * 2.0 * (s.conic_a * dx + s.conic_b * dy);
          sg.mean_y += -d_q * 2.0 * (s.conic_b * dx + s.conic_c * dy);
          sg.conic_a += d_q * dx * dx;
          sg.conic_b += d_q * 2.0 * dx * dy;
          sg.conic_c += d_q * dy * dy;
        }
      }
    }
  });

  // Fixed-order reduction: entries are laid out tile by tile.
  std::vector<ScreenGrad> splat_grads(ctx.splats.size());
  for (std::size_t k = 0; k < ctx.tile_entries.size(); ++k) splat_grads[ctx.tile_entries[k]].add(entry_grads[k]);

  RenderGradients grads(cloud.size());
  const Mat3& W = cam.rotation;
  for (std::size_t si = 0; si < ctx.splats.size(); ++si) {
    const SplatRecord& s = ctx.splats[si];
    const ScreenGrad& sg = splat_grads[si];
    const GaussianPrimitive& g = cloud.primitives[s.index];
    PackedParams& out = grads.params[s.index];

    for (int ch = 0; ch < 3; ++ch) {
      if (!(s.color_clamped & (1u << ch))) out[param_offset::kColor + ch] = sg.color[ch];
    }
    out[param_offset::kOpacity] = sg.opacity * s.opacity * (1.0 - s.opacity);
    grads.mean2d[s.index] = Vec2(sg.mean_x, sg.mean_y);

    // Recompute the projection intermediates.
    const Vec3 t = W * g.mu + cam.translation;
    const double inv_z = 1.0 / t.z();
    const double inv_z2 = inv_z * inv_z;
    Eigen::Matrix<double, 2, 3> jac;
    jac << cam.fx * inv_z, 0.0, -cam.fx * t.x() * inv_z2,
        0.0, cam.fy * inv_z, -cam.fy * t.y() * inv_z2;
    const double qnorm = g.rot_quat.norm();
    const Vec4 qhat = g.rot_quat / qnorm;
    const Mat3 R = quat_to_rotation(qhat);
    const Vec3 scale = g.log_scale.array().exp();
    const Mat3 M = R * scale.asDiagonal();
    const Mat3 sigma = M * M.transpose();
    const Mat3 sigma_cam = W * sigma * W.transpose();

    // conic = inverse(cov2d)
    Mat2 conic;
    conic << s.conic_a, s.conic_b, s.conic_b, s.conic_c;
    Mat2 g_conic;
    g_conic << sg.conic_a, 0.5 * sg.conic_b, 0.5 * sg.conic_b, sg.conic_c;
    const Mat2 g_cov2d = -conic * g_conic * conic;

    const Mat3 g_sigma_cam = jac.transpose() * g_cov2d * jac;
    const Eigen::Matrix<double, 2, 3> g_jac = 2.0 * g_cov2d * jac * sigma_cam;
    const Mat3 g_sigma = W.transpose() * g_sigma_cam * W;
    const Mat3 g_m = 2.0 * g_sigma * M;

    for (int k = 0; k < 3; ++k) {
      const double d_scale = g_m.col(k).dot(R.col(k));
      out[param_offset::kLogScale + k] = d_scale * scale[k];
    }
    Mat3 g_r = g_m;
    for (int k = 0; k < 3; ++k) g_r.col(k) *= scale[k];
    const Vec4 d_qhat = rotation_grad_to_quat(g_r, qhat);
    const Vec4 d_q = (d_qhat - qhat * qhat.dot(d_qhat)) / qnorm;
    for (int k = 0; k < 4; ++k) out[param_offset::kRotQuat + k] = d_q[k];

    Vec3 d_t = Vec3::Zero();
    d_t.x() += sg.mean_x * cam.fx * inv_z;
    d_t.y() += sg.mean_y * cam.fy * inv_z;
    d_t.z() += -sg.mean_x * cam.fx * t.x() * inv_z2 - sg.mean_y * cam.fy * t.y() * inv_z2;
    const double inv_z3 = inv_z2 * inv_z;
    d_t.x() += g_jac(0, 2) * (-cam.fx * inv_z2);
    d_t.y() += g_jac(1, 2) * (-cam.fy * inv_z2);
    d_t.z() += g_jac(0, 0) * (-cam.fx * inv_z2) + g_jac(0, 2) * (2.0 * cam.fx * t.x() * inv_z3) +
               g_jac(1, 1) * (-cam.fy * inv_z2) + g_jac(1, 2) * (2.0 * cam.fy * t.y() * inv_z3);
    d_t.z() += sg.depth;
    const Vec3 d_mu = W.transpose() * d_t;
    for (int k = 0; k < 3; ++k) out[param_offset::kMu + k] = d_mu[k];
  }
  return grads;
}

}  // namespace curigs
