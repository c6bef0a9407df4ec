#include "curigs/gaussians.hpp"

#include <Eigen/LU>
#include <cmath>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>

#include "curigs/error.hpp"

namespace curigs {

double sigmoid(double x) noexcept { return 1.0 / (1.0 + std::exp(-x)); }

double logit(double p) noexcept { return std::log(p / (1.0 - p)); }

Mat3 quat_to_rotation(const Vec4& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Mat3 r;
  r << 1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y),
      2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x),
      2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y);
  return r;
}

double GaussianPrimitive::opacity() const noexcept { return sigmoid(opacity_logit); }

Mat3 GaussianPrimitive::rotation() const { return quat_to_rotation(rot_quat.normalized()); }

Mat3 GaussianPrimitive::covariance() const {
  const Mat3 r = rotation();
  const Vec3 var = (2.0 * log_scale).array().exp();
  return r * var.asDiagonal() * r.transpose();
}

PackedParams GaussianPrimitive::pack() const noexcept {
  PackedParams p{};
  for (int k = 0; k < 3; ++k) {
    p[param_offset::kMu + k] = mu[k];
    p[param_offset::kLogScale + k] = log_scale[k];
    p[param_offset::kColor + k] = color[k];
  }
  for (int k = 0; k < 4; ++k) p[param_offset::kRotQuat + k] = rot_quat[k];
  p[param_offset::kOpacity] = opacity_logit;
  return p;
}

GaussianPrimitive GaussianPrimitive::unpack(const PackedParams& p) noexcept {
  GaussianPrimitive g;
  for (int k = 0; k < 3; ++k) {
    g.mu[k] = p[param_offset::kMu + k];
    g.log_scale[k] = p[param_offset::kLogScale + k];
    g.color[k] = p[param_offset::kColor + k];
  }
  for (int k = 0; k < 4; ++k) g.rot_quat[k] = p[param_offset::kRotQuat + k];
  g.opacity_logit = p[param_offset::kOpacity];
  return g;
}

std::uint64_t GaussianCloud::fingerprint() const noexcept {
  std::uint64_t h = 1469598103934665603ull;
  const std::uint64_t n = primitives.size();
  auto mix = [&h](const void* bytes, std::size_t len) {
    const auto* b = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  };
  mix(&n, sizeof(n));
  for (const auto& g : primitives) {
    const auto p = g.pack();
    mix(p.data(), sizeof(double) * p.size());
  }
  return h;
}

double density_at(const GaussianPrimitive& g, const Vec3& x) {
  const double spread = g.log_scale.maxCoeff() - g.log_scale.minCoeff();
  // cond(Sigma) = exp(2 * spread)
  if (!(2.0 * spread <= std::log(kMaxCovarianceCondition))) {
    raise(Errc::SingularCovariance, "covariance condition number exceeds 1e12");
  }
  const Mat3 r = g.rotation();
  const Vec3 local = r.transpose() * (x - g.mu);
  const Vec3 inv_var = (-2.0 * g.log_scale).array().exp();
  const double maha = local.cwiseProduct(local).dot(inv_var);
  return std::exp(-0.5 * maha);
}

std::optional<ProjectedGaussian> project(const GaussianPrimitive& g, const CameraPose& cam, int index) {
  const Vec3 t = cam.rotation * g.mu + cam.translation;
  if (t.z() <= kNearPlane) return std::nullopt;
  const double inv_z = 1.0 / t.z();
  Eigen::Matrix<double, 2, 3> jac;
  jac << cam.fx * inv_z, 0.0, -cam.fx * t.x() * inv_z * inv_z,
      0.0, cam.fy * inv_z, -cam.fy * t.y() * inv_z * inv_z;
  const Mat3 cov_cam = cam.rotation * g.covariance() * cam.rotation.transpose();
  ProjectedGaussian pg;
  pg.mean2d = Vec2(cam.fx * t.x() * inv_z + cam.cx, cam.fy * t.y() * inv_z + cam.cy);
  pg.cov2d = jac * cov_cam * jac.transpose();
  pg.cov2d(0, 1) = pg.cov2d(1, 0) = 0.5 * (pg.cov2d(0, 1) + pg.cov2d(1, 0));
  pg.cov2d(0, 0) += kCov2dFloor;
  pg.cov2d(1, 1) += kCov2dFloor;
  pg.depth = t.z();
  pg.index = index;
  return pg;
}

void normalize_rotations(GaussianCloud& cloud) {
  for (auto& g : cloud.primitives) {
    const double n = g.rot_quat.norm();
    if (n > 1e-12 && std::isfinite(n)) {
      g.rot_quat /= n;
    } else {
      g.rot_quat = Vec4(1.0, 0.0, 0.0, 0.0);
    }
  }
}

void save_checkpoint(const std::filesystem::path& path, const GaussianCloud& cloud) {
  nlohmann::json prims = nlohmann::json::array();
  for (const auto& g : cloud.primitives) {
    const auto p = g.pack();
    prims.push_back(nlohmann::json(std::vector<double>(p.begin(), p.end())));
  }
  const nlohmann::json doc = {{"format", "curigs-cloud"},
                              {"version", 1},
                              {"layout", "mu3,log_scale3,rot_quat_wxyz4,opacity_logit1,color3"},
                              {"primitives", prims}};
  std::ofstream out(path);
  if (!out) raise(Errc::Io, "cannot write " + path.string());
  out << doc.dump() << '\n';
  if (!out) raise(Errc::Io, "short write to " + path.string());
}

GaussianCloud load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::Io, "cannot read checkpoint " + path.string());
  GaussianCloud cloud;
  try {
    nlohmann::json doc;
    in >> doc;
    if (doc.at("format").get<std::string>() != "curigs-cloud") raise(Errc::Io, "not a curigs checkpoint");
    if (doc.at("version").get<int>() != 1) raise(Errc::Io, "unsupported checkpoint version");
    for (const auto& row : doc.at("primitives")) {
      if (row.size() != kParamsPerPrimitive) raise(Errc::Io, "primitive record has wrong arity");
      PackedParams p{};
      for (int k = 0; k < kParamsPerPrimitive; ++k) p[k] = row[k].get<double>();
      cloud.primitives.push_back(GaussianPrimitive::unpack(p));
    }
  } catch (const nlohmann::json::exception& e) {
    raise(Errc::Io, "malformed checkpoint " + path.string() + ": " + e.what());
  }
  return cloud;
}

}  // namespace curigs
