#include "curigs/geometry.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numbers>

#include "curigs/error.hpp"

namespace curigs {

namespace {
constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRotationTol = 1e-9;
}  // namespace

void validate(const CameraPose& pose) {
  const Mat3 gram = pose.rotation.transpose() * pose.rotation;
  if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > kRotationTol ||
      std::abs(pose.rotation.determinant() - 1.0) > kRotationTol) {
    raise(Errc::InvalidCamera, "rotation is not a proper orthonormal matrix");
  }
  if (pose.width < 1 || pose.height < 1) raise(Errc::InvalidCamera, "image size must be >= 1");
  if (!(pose.fx > 0.0) || !(pose.fy > 0.0)) raise(Errc::InvalidCamera, "focal lengths must be > 0");
  if (!pose.translation.allFinite()) raise(Errc::InvalidCamera, "translation is not finite");
}

CameraPose look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double fx, double fy,
                   int width, int height) {
  const Vec3 forward = (target - eye).normalized();
  Vec3 right = forward.cross(up);
  if (right.norm() < 1e-12) raise(Errc::InvalidArgument, "look_at: up is parallel to the view direction");
  right.normalize();
  const Vec3 down = forward.cross(right);
  CameraPose pose;
  pose.rotation.row(0) = right.transpose();
  pose.rotation.row(1) = down.transpose();
  pose.rotation.row(2) = forward.transpose();
  pose.translation = -pose.rotation * eye;
  pose.fx = fx;
  pose.fy = fy;
  pose.cx = 0.5 * width;
  pose.cy = 0.5 * height;
  pose.width = width;
  pose.height = height;
  return pose;
}

void write_cameras_json(const std::filesystem::path& path, const std::vector<CameraRecord>& cams) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& cam : cams) {
    const auto& p = cam.pose;
    nlohmann::json rot = nlohmann::json::array();
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) rot.push_back(p.rotation(r, c));
    arr.push_back({{"id", cam.id},
                   {"rotation", rot},
                   {"translation", {p.translation.x(), p.translation.y(), p.translation.z()}},
                   {"fx", p.fx},
                   {"fy", p.fy},
                   {"cx", p.cx},
                   {"cy", p.cy},
                   {"width", p.width},
                   {"height", p.height}});
  }
  std::ofstream out(path);
  if (!out) raise(Errc::Io, "cannot write " + path.string());
  out << arr.dump(2) << '\n';
}

std::vector<CameraRecord> read_cameras_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::Io, "cannot read " + path.string());
  nlohmann::json arr;
  try {
    in >> arr;
  } catch (const nlohmann::json::exception& e) {
    raise(Errc::Io, "malformed camera file " + path.string() + ": " + e.what());
  }
  if (!arr.is_array()) raise(Errc::Io, "camera file must hold a JSON array");
  std::vector<CameraRecord> cams;
  try {
    for (const auto& j : arr) {
      CameraRecord rec;
      rec.id = j.at("id").get<int>();
      const auto& rot = j.at("rotation");
      const auto& tr = j.at("translation");
      if (rot.size() != 9 || tr.size() != 3) raise(Errc::Io, "camera rotation/translation size mismatch");
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) rec.pose.rotation(r, c) = rot[r * 3 + c].get<double>();
      for (int k = 0; k < 3; ++k) rec.pose.translation[k] = tr[k].get<double>();
      rec.pose.fx = j.at("fx").get<double>();
      rec.pose.fy = j.at("fy").get<double>();
      rec.pose.cx = j.at("cx").get<double>();
      rec.pose.cy = j.at("cy").get<double>();
      rec.pose.width = j.at("width").get<int>();
      rec.pose.height = j.at("height").get<int>();
      validate(rec.pose);
      cams.push_back(rec);
    }
  } catch (const nlohmann::json::exception& e) {
    raise(Errc::Io, "malformed camera entry in " + path.string() + ": " + e.what());
  }
  return cams;
}

Vec3 optical_center(const CameraPose& pose) { return -pose.rotation.transpose() * pose.translation; }

Vec3 viewing_direction(const CameraPose& pose) { return pose.rotation.row(2).transpose(); }

Mat3 view_relative_rotation(double yaw_deg, double pitch_deg) {
  // Camera frame: +y points down, so the up axis is -y; the sign is immaterial
  // for a zero-mean draw but fixed for reproducibility.
  const Mat3 yaw = Eigen::AngleAxisd(yaw_deg * kDegToRad, -Vec3::UnitY()).toRotationMatrix();
  const Mat3 pitch = Eigen::AngleAxisd(pitch_deg * kDegToRad, Vec3::UnitX()).toRotationMatrix();
  return pitch * yaw;
}

void validate(const PerturbationSpec& spec) {
  if (!(spec.sigma_deg >= 0.0)) raise(Errc::InvalidArgument, "sigma_deg must be >= 0");
  if (!(spec.sigma_r >= 0.0 && spec.sigma_r <= 0.5)) raise(Errc::InvalidArgument, "sigma_r must lie in [0, 0.5]");
}

PerturbationSample sample_perturbation(const PerturbationSpec& spec, Rng& rng) {
  validate(spec);
  std::normal_distribution<double> unit(0.0, 1.0);
  const double a = unit(rng);
  const double b = unit(rng);
  const double c = unit(rng);
  PerturbationSample s;
  s.yaw_deg = spec.sigma_deg * a;
  s.pitch_deg = spec.sigma_deg * b;
  s.radial = std::clamp(spec.sigma_r * c, -kMaxRadialPerturbation, kMaxRadialPerturbation);
  return s;
}

CameraPose apply_perturbation(const CameraPose& pose, const PerturbationSample& sample) {
  if (sample.yaw_deg == 0.0 && sample.pitch_deg == 0.0 && sample.radial == 0.0) return pose;
  CameraPose out = pose;
  const Vec3 center = optical_center(pose);
  out.rotation = view_relative_rotation(sample.yaw_deg, sample.pitch_deg) * pose.rotation;
  const Vec3 new_center = center * (1.0 + sample.radial);
  out.translation = -out.rotation * new_center;
  return out;
}

CameraPose perturb_pose(const CameraPose& pose, const PerturbationSpec& spec, Rng& rng) {
  return apply_perturbation(pose, sample_perturbation(spec, rng));
}

StudentPool generate_student_pools(std::span<const CameraPose> teachers, std::span<const double> levels,
                                   int per_level_count, double sigma_r, Rng& rng) {
  if (teachers.empty()) raise(Errc::EmptyTeachers, "no teacher cameras");
  if (levels.empty()) raise(Errc::NonMonotoneLevels, "level list is empty");
  for (std::size_t i = 1; i < levels.size(); ++i) {
    if (!(levels[i] > levels[i - 1])) raise(Errc::NonMonotoneLevels, "levels must be strictly increasing");
  }
  if (per_level_count < 1) raise(Errc::InvalidArgument, "per_level_count must be >= 1");

  StudentPool pool;
  pool.levels.assign(levels.begin(), levels.end());
  pool.teacher_count = static_cast<int>(teachers.size());
  for (int t = 0; t < pool.teacher_count; ++t) {
    validate(teachers[t]);
    for (int li = 0; li < static_cast<int>(levels.size()); ++li) {
      auto& group = pool.groups[{t, li}];
      for (int j = 0; j < per_level_count; ++j) {
        StudentView s;
        s.id = static_cast<int>(pool.students.size());
        s.teacher_id = t;
        s.level_index = li;
        s.level = levels[li];
        s.pose = perturb_pose(teachers[t], {levels[li], sigma_r}, rng);
        group.push_back(s.id);
        pool.students.push_back(std::move(s));
      }
    }
  }
  return pool;
}

const std::vector<int>& StudentPool::group(int teacher_id, int level_index) const {
  const auto it = groups.find({teacher_id, level_index});
  if (it == groups.end()) raise(Errc::MissingLevel, "no student group for teacher/level");
  return it->second;
}

std::optional<int> StudentPool::level_index_of(double level) const {
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (std::abs(levels[i] - level) <= 1e-9) return static_cast<int>(i);
  }
  return std::nullopt;
}

}  // namespace curigs
