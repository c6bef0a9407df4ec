#include "curigs/scene_synth.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "curigs/error.hpp"
#include "curigs/geometry.hpp"
#include "curigs/random.hpp"
#include "curigs/rasterizer.hpp"

namespace curigs {

std::string to_string(SceneLayout l) {
  switch (l) {
    case SceneLayout::Cluster: return "cluster";
    case SceneLayout::Object: return "object";
    case SceneLayout::Room: return "room";
  }
  return "?";
}

std::string to_string(CameraRig r) { return r == CameraRig::Ring ? "ring" : "forward"; }

SceneLayout parse_layout(const std::string& s) {
  if (s == "cluster") return SceneLayout::Cluster;
  if (s == "object") return SceneLayout::Object;
  if (s == "room") return SceneLayout::Room;
  raise(Errc::InvalidArgument, "unknown layout '" + s + "' (cluster, object, room)");
}

CameraRig parse_rig(const std::string& s) {
  if (s == "ring") return CameraRig::Ring;
  if (s == "forward") return CameraRig::ForwardFacing;
  raise(Errc::InvalidArgument, "unknown camera rig '" + s + "' (ring, forward)");
}

void validate(const SceneSpec& spec) {
  if (spec.n_gaussians < 1) raise(Errc::InvalidConfig, "n_gaussians must be >= 1");
  if (spec.n_cameras < 2) raise(Errc::InvalidConfig, "n_cameras must be >= 2");
  if (spec.width < 1 || spec.height < 1) raise(Errc::InvalidConfig, "image size must be positive");
  if (!(spec.fov_deg > 0.0 && spec.fov_deg < 180.0)) raise(Errc::InvalidConfig, "fov_deg must lie in (0, 180)");
  if (!(spec.camera_radius > 0.0)) raise(Errc::InvalidConfig, "camera_radius must be positive");
  if (!(spec.arc_deg > 0.0 && spec.arc_deg <= 360.0)) raise(Errc::InvalidConfig, "arc_deg must lie in (0, 360]");
  if (spec.holdout_every < 2) raise(Errc::InvalidConfig, "holdout_every must be >= 2");
}

void holdout_split(int n, int every, std::vector<int>& train, std::vector<int>& test) {
  train.clear();
  test.clear();
  for (int i = 0; i < n; ++i) (i % every == 0 ? test : train).push_back(i);
}

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

Vec4 quat_from_frame(const Vec3& t1, const Vec3& t2, const Vec3& n) {
  Mat3 r;
  r.col(0) = t1;
  r.col(1) = t2;
  r.col(2) = n;
  if (r.determinant() < 0) r.col(1) = -r.col(1);
  const Eigen::Quaterniond q(r);
  return Vec4(q.w(), q.x(), q.y(), q.z());
}

Vec3 random_unit(Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec3 v;
  do {
    v = Vec3(normal(rng), normal(rng), normal(rng));
  } while (v.norm() < 1e-9);
  return v.normalized();
}

// Smooth procedural texture: a few random plane waves per channel.
struct Texture {
  std::array<std::array<Vec3, 2>, 3> freq;
  std::array<std::array<double, 2>, 3> phase;
  Vec3 base;

  Texture(Rng& rng, double max_freq) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int c = 0; c < 3; ++c) {
      for (int w = 0; w < 2; ++w) {
        freq[c][w] = random_unit(rng) * (0.4 + 0.6 * u(rng)) * max_freq;
        phase[c][w] = 2.0 * std::numbers::pi * u(rng);
      }
    }
    base = Vec3(0.25 + 0.5 * u(rng), 0.25 + 0.5 * u(rng), 0.25 + 0.5 * u(rng));
  }

  Vec3 at(const Vec3& p) const {
    Vec3 c;
    for (int k = 0; k < 3; ++k) {
      c[k] = base[k] + 0.2 * std::sin(freq[k][0].dot(p) + phase[k][0]) +
             0.12 * std::sin(freq[k][1].dot(p) + phase[k][1]);
      c[k] = std::clamp(c[k], 0.03, 0.97);
    }
    return c;
  }
};

// Surface splat: flat along the normal, spread along the tangent plane.
GaussianPrimitive surface_splat(const Vec3& p, const Vec3& normal, double tangent_sigma, double opacity,
                                const Vec3& color) {
  Vec3 helper = std::abs(normal.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 t1 = normal.cross(helper).normalized();
  const Vec3 t2 = normal.cross(t1);
  GaussianPrimitive g;
  g.mu = p;
  g.rot_quat = quat_from_frame(t1, t2, normal);
  g.log_scale = Vec3(std::log(tangent_sigma), std::log(tangent_sigma), std::log(0.2 * tangent_sigma));
  g.opacity_logit = logit(opacity);
  g.color = color;
  return g;
}

struct Sphere {
  Vec3 center;
  double radius;
};

GaussianCloud object_layout(int n, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Sphere> spheres{{Vec3(0.0, 0.0, 0.0), 0.62}};
  for (int i = 0; i < 4; ++i) {
    Vec3 d = random_unit(rng);
    d.y() = 0.6 * d.y();
    spheres.push_back({d.normalized() * 0.55, 0.22 + 0.16 * u(rng)});
  }
  std::vector<double> area;
  double total = 0.0;
  for (const auto& s : spheres) {
    area.push_back(s.radius * s.radius);
    total += area.back();
  }
  const double spacing = std::sqrt(4.0 * std::numbers::pi * total * 0.8 / n);
  std::vector<Texture> textures;
  for (std::size_t i = 0; i < spheres.size(); ++i) textures.emplace_back(rng, 7.0);
  std::discrete_distribution<int> pick(area.begin(), area.end());

  GaussianCloud cloud;
  while (static_cast<int>(cloud.size()) < n) {
    const int s = pick(rng);
    const Vec3 normal = random_unit(rng);
    const Vec3 p = spheres[s].center + spheres[s].radius * normal;
    bool hidden = false;
    for (std::size_t j = 0; j < spheres.size() && !hidden; ++j) {
      hidden = static_cast<int>(j) != s && (p - spheres[j].center).norm() < spheres[j].radius * 0.98;
    }
    if (hidden) continue;
    const double sigma = spacing * (0.45 + 0.2 * u(rng));
    cloud.primitives.push_back(surface_splat(p, normal, sigma, 0.85 + 0.1 * u(rng), textures[s].at(p)));
  }
  return cloud;
}

GaussianCloud cluster_layout(int n, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int blobs = std::max(1, std::min(8, n / 50));
  std::vector<Vec3> centers;
  std::vector<Texture> textures;
  for (int b = 0; b < blobs; ++b) {
    centers.push_back(Vec3(u(rng) - 0.5, u(rng) - 0.5, u(rng) - 0.5) * 1.4);
    textures.emplace_back(rng, 5.0);
  }
  const double base = 0.6 / std::cbrt(static_cast<double>(n));
  GaussianCloud cloud;
  for (int i = 0; i < n; ++i) {
    const int b = i % blobs;
    GaussianPrimitive g;
    g.mu = centers[b] + Vec3(normal(rng), normal(rng), normal(rng)) * 0.22;
    g.log_scale = Vec3::Constant(std::log(base)) + Vec3(normal(rng), normal(rng), normal(rng)) * 0.3;
    Vec4 q(normal(rng), normal(rng), normal(rng), normal(rng));
    g.rot_quat = q.normalized();
    g.opacity_logit = logit(0.5 + 0.45 * u(rng));
    g.color = textures[b].at(g.mu);
    cloud.primitives.push_back(g);
  }
  return cloud;
}

GaussianCloud room_layout(int n, double half, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  // Walls, floor and ceiling of an axis-aligned box, plus a central object.
  const int object_n = n / 4;
  GaussianCloud cloud = object_layout(std::max(1, object_n), rng);
  const int wall_n = n - static_cast<int>(cloud.size());
  const double spacing = std::sqrt(6.0 * 4.0 * half * half / std::max(1, wall_n));
  Texture texture(rng, 2.0);
  for (int i = 0; i < wall_n; ++i) {
    const int face = i % 6;
    const int axis = face / 2;
    const double side = face % 2 == 0 ? -1.0 : 1.0;
    Vec3 p(half * (2.0 * u(rng) - 1.0), half * (2.0 * u(rng) - 1.0), half * (2.0 * u(rng) - 1.0));
    p[axis] = side * half;
    Vec3 normal = Vec3::Zero();
    normal[axis] = -side;
    cloud.primitives.push_back(surface_splat(p, normal, spacing * 0.6, 0.95, texture.at(p)));
  }
  return cloud;
}

std::vector<CameraPose> make_cameras(const SceneSpec& spec) {
  const double f = 0.5 * spec.width / std::tan(0.5 * spec.fov_deg * kDeg);
  const Vec3 up(0.0, 1.0, 0.0);
  std::vector<CameraPose> cams;
  const int n = spec.n_cameras;
  const double r = spec.camera_radius;
  const double elev = spec.elevation_deg * kDeg;
  for (int i = 0; i < n; ++i) {
    Vec3 eye;
    if (spec.rig == CameraRig::Ring) {
      const bool full = spec.arc_deg >= 360.0;
      const double step = full ? spec.arc_deg / n : spec.arc_deg / (n - 1);
      const double theta = (full ? i * step : -0.5 * spec.arc_deg + i * step) * kDeg;
      eye = Vec3(r * std::cos(elev) * std::sin(theta), r * std::sin(elev), -r * std::cos(elev) * std::cos(theta));
    } else {
      // Rows of a small planar grid facing the scene, LLFF-like.
      const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
      const int rows = (n + cols - 1) / cols;
      const double extent = r * std::tan(0.5 * std::min(spec.arc_deg, 60.0) * kDeg);
      const double cx = cols > 1 ? -extent + 2.0 * extent * (i % cols) / (cols - 1) : 0.0;
      const double cy = rows > 1 ? -0.5 * extent + extent * (i / cols) / (rows - 1) : 0.0;
      eye = Vec3(cx, cy + r * std::sin(elev), -r);
    }
    cams.push_back(look_at(eye, Vec3::Zero(), up, f, f, spec.width, spec.height));
  }
  return cams;
}

}  // namespace

SyntheticScene make_scene(const SceneSpec& spec) {
  validate(spec);
  Rng rng = make_rng(spec.seed, 0x5ce7e);
  SyntheticScene scene;
  switch (spec.layout) {
    case SceneLayout::Object: scene.cloud_gt = object_layout(spec.n_gaussians, rng); break;
    case SceneLayout::Cluster: scene.cloud_gt = cluster_layout(spec.n_gaussians, rng); break;
    case SceneLayout::Room: scene.cloud_gt = room_layout(spec.n_gaussians, spec.camera_radius * 1.6, rng); break;
  }
  scene.cameras = make_cameras(spec);
  for (const auto& cam : scene.cameras) {
    RenderOutput r = render(scene.cloud_gt, cam);
    Mask fg(cam.width, cam.height);
    for (std::size_t p = 0; p < fg.pixel_count(); ++p) fg[p] = r.final_transmittance[p] < 0.5 ? 1 : 0;
    scene.images.push_back(std::move(r.color));
    scene.depths.push_back(std::move(r.depth));
    scene.masks.push_back(std::move(fg));
  }
  holdout_split(spec.n_cameras, spec.holdout_every, scene.train_ids, scene.test_ids);
  return scene;
}

std::vector<Vec3> point_samples(const GaussianCloud& cloud) {
  std::vector<Vec3> pts;
  pts.reserve(cloud.size());
  for (const auto& g : cloud.primitives) pts.push_back(g.mu);
  return pts;
}

NearestCameraDepthOracle::NearestCameraDepthOracle(std::vector<CameraPose> cameras, std::vector<Image> depths,
                                                   DepthOracleOptions options)
    : cameras_(std::move(cameras)), depths_(std::move(depths)), candidates_(std::move(options.candidates)),
      gamma_(options.gamma), warp_(options.warp) {
  if (cameras_.empty() || cameras_.size() != depths_.size()) {
    raise(Errc::InvalidArgument, "depth oracle needs one depth map per camera");
  }
  if (!(gamma_ > 0.0)) raise(Errc::InvalidArgument, "depth oracle gamma must be positive");
  if (candidates_.empty()) {
    for (std::size_t i = 0; i < cameras_.size(); ++i) candidates_.push_back(static_cast<int>(i));
  }
  for (int c : candidates_) {
    if (c < 0 || static_cast<std::size_t>(c) >= cameras_.size()) {
      raise(Errc::InvalidArgument, "depth oracle candidate out of range");
    }
  }
  std::sort(candidates_.begin(), candidates_.end());
}

namespace {

// Forward-warps a z-depth map from `from` into `to`. Each back-projected
// point lands on the four target pixel centers around it; nearest z wins.
Image warp_depth(const Image& depth, const CameraPose& from, const CameraPose& to) {
  const int w = to.width, h = to.height;
  Image out(w, h, 1);
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> zbuf(static_cast<std::size_t>(w) * h, inf);
  const Mat3 rt = from.rotation.transpose();
  for (int y = 0; y < depth.height(); ++y) {
    for (int x = 0; x < depth.width(); ++x) {
      const double d = depth.at(x, y);
      if (!(d > 0.0)) continue;
      const Vec3 p_cam(d * (x + 0.5 - from.cx) / from.fx, d * (y + 0.5 - from.cy) / from.fy, d);
      const Vec3 q = to.rotation * (rt * (p_cam - from.translation)) + to.translation;
      if (!(q.z() > 1e-6)) continue;
      const double u = to.fx * q.x() / q.z() + to.cx - 0.5;
      const double v = to.fy * q.y() / q.z() + to.cy - 0.5;
      const int x0 = static_cast<int>(std::floor(u)), y0 = static_cast<int>(std::floor(v));
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          const int tx = x0 + dx, ty = y0 + dy;
          if (tx < 0 || ty < 0 || tx >= w || ty >= h) continue;
          double& z = zbuf[static_cast<std::size_t>(ty) * w + tx];
          if (q.z() < z) z = q.z();
        }
      }
    }
  }
  for (std::size_t i = 0; i < zbuf.size(); ++i) out[i] = zbuf[i] < inf ? zbuf[i] : 0.0;
  return out;
}

}  // namespace

int NearestCameraDepthOracle::nearest(const CameraPose& view) const {
  const Vec3 c = optical_center(view);
  int best = candidates_.front();
  double best_d = std::numeric_limits<double>::infinity();
  for (int id : candidates_) {
    const double d = (optical_center(cameras_[id]) - c).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = id;
    }
  }
  return best;
}

Image NearestCameraDepthOracle::predict(const Image& color, const CameraPose& view) const {
  const int id = nearest(view);
  const Image& src = depths_[id];
  if (!src.same_extent(color.width(), color.height())) {
    raise(Errc::ShapeMismatch, "depth oracle: query size differs from the stored depth maps");
  }
  Image out = warp_ && !(cameras_[id] == view) ? warp_depth(src, cameras_[id], view) : src;
  if (gamma_ != 1.0) {
    // Depth from distorted disparity: (1/z)^gamma inverted back.
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] > 0.0 ? std::pow(out[i], gamma_) : 0.0;
  }
  return out;
}

NearestCameraDepthOracle gt_depth_oracle(const SyntheticScene& scene, DepthOracleOptions options) {
  return NearestCameraDepthOracle(scene.cameras, scene.depths, std::move(options));
}

}  // namespace curigs
