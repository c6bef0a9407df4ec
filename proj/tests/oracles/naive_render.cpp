#include "naive_render.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/LU>

namespace oracle {

namespace {

using curigs::Mat2;
using curigs::Mat3;
using curigs::Vec3;

Mat3 rotation_from_quat(double w, double x, double y, double z) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  w /= n, x /= n, y /= n, z /= n;
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
       2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
       2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

struct Splat {
  double depth;
  int index;
  double mx, my;
  Mat2 conic;
  double opacity;
  Vec3 color;
};

}  // namespace

NaiveRender naive_render(const curigs::GaussianCloud& cloud, const curigs::CameraPose& cam, bool early_termination) {
  std::vector<Splat> splats;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& g = cloud.primitives[i];
    const Vec3 t = cam.rotation * g.mu + cam.translation;
    if (t.z() <= 0.01) continue;
    const Mat3 r = rotation_from_quat(g.rot_quat[0], g.rot_quat[1], g.rot_quat[2], g.rot_quat[3]);
    Mat3 s2 = Mat3::Zero();
    for (int k = 0; k < 3; ++k) s2(k, k) = std::exp(2.0 * g.log_scale[k]);
    const Mat3 world = r * s2 * r.transpose();
    const Mat3 camcov = cam.rotation * world * cam.rotation.transpose();
    // Jacobian of (fx x/z, fy y/z).
    Eigen::Matrix<double, 2, 3> j;
    j << cam.fx / t.z(), 0, -cam.fx * t.x() / (t.z() * t.z()), 0, cam.fy / t.z(), -cam.fy * t.y() / (t.z() * t.z());
    Mat2 c = j * camcov * j.transpose();
    c(0, 0) += 0.3;
    c(1, 1) += 0.3;
    const double off = 0.5 * (c(0, 1) + c(1, 0));
    c(0, 1) = c(1, 0) = off;
    if (!(c.determinant() > 0)) continue;
    Splat s;
    s.depth = t.z();
    s.index = static_cast<int>(i);
    s.mx = cam.fx * t.x() / t.z() + cam.cx;
    s.my = cam.fy * t.y() / t.z() + cam.cy;
    s.conic = c.inverse();
    s.opacity = 1.0 / (1.0 + std::exp(-g.opacity_logit));
    for (int k = 0; k < 3; ++k) s.color[k] = std::min(1.0, std::max(0.0, g.color[k]));
    splats.push_back(s);
  }
  std::sort(splats.begin(), splats.end(), [](const Splat& a, const Splat& b) {
    return a.depth != b.depth ? a.depth < b.depth : a.index < b.index;
  });

  const double floor = std::exp(-4.5);
  NaiveRender out;
  out.color = curigs::Image(cam.width, cam.height, 3);
  out.depth = curigs::Image(cam.width, cam.height, 1);
  out.transmittance = curigs::Image(cam.width, cam.height, 1);
  out.weight_sum = curigs::Image(cam.width, cam.height, 1);
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      double T = 1.0, wsum = 0.0, z = 0.0;
      Vec3 col = Vec3::Zero();
      for (const auto& s : splats) {
        const double dx = x + 0.5 - s.mx, dy = y + 0.5 - s.my;
        const double q = s.conic(0, 0) * dx * dx + 2 * s.conic(0, 1) * dx * dy + s.conic(1, 1) * dy * dy;
        if (!(q < 9.0)) continue;
        const double w = (std::exp(-0.5 * q) - floor) / (1.0 - floor);
        const double a = std::min(0.99, s.opacity * w);
        col += T * a * s.color;
        z += T * a * s.depth;
        wsum += T * a;
        T *= 1.0 - a;
        if (early_termination && T < 1e-4) break;
      }
      for (int k = 0; k < 3; ++k) out.color.at(x, y, k) = col[k];
      out.depth.at(x, y) = z;
      out.transmittance.at(x, y) = T;
      out.weight_sum.at(x, y) = wsum;
    }
  }
  return out;
}

}  // namespace oracle
