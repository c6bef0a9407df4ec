#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <vector>

namespace curigs {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

/// Pinhole camera. `rotation`/`translation` map world to camera coordinates
/// (x right, y down, z forward): x_cam = rotation * x_world + translation.
struct CameraPose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  bool operator==(const CameraPose& o) const {
    return rotation == o.rotation && translation == o.translation && fx == o.fx && fy == o.fy &&
           cx == o.cx && cy == o.cy && width == o.width && height == o.height;
  }
};

/// Throws Errc::InvalidCamera unless rotation is orthonormal with det +1
/// (1e-9), image size >= 1 and focal lengths > 0.
void validate(const CameraPose& pose);

/// Camera looking from `eye` at `target`; `up` is the world up hint.
CameraPose look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double fx, double fy,
                   int width, int height);

/// Entry of a camera file.
struct CameraRecord {
  int id = 0;
  CameraPose pose;
};

/// JSON array of {id, rotation (9, row-major), translation (3), fx, fy, cx, cy, width, height}.
void write_cameras_json(const std::filesystem::path& path, const std::vector<CameraRecord>& cams);
std::vector<CameraRecord> read_cameras_json(const std::filesystem::path& path);

}  // namespace curigs
