#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "curigs/camera.hpp"
#include "curigs/gaussians.hpp"
#include "curigs/image.hpp"
#include "curigs/losses.hpp"

namespace curigs {

enum class SceneLayout { Cluster, Object, Room };
enum class CameraRig { Ring, ForwardFacing };

std::string to_string(SceneLayout l);
std::string to_string(CameraRig r);
SceneLayout parse_layout(const std::string& s);
CameraRig parse_rig(const std::string& s);

struct SceneSpec {
  int n_gaussians = 2000;
  SceneLayout layout = SceneLayout::Object;
  int n_cameras = 28;
  CameraRig rig = CameraRig::Ring;
  std::uint64_t seed = 0;
  int width = 64;
  int height = 64;
  double fov_deg = 50.0;
  double camera_radius = 3.0;
  double elevation_deg = 20.0;
  double arc_deg = 360.0;  ///< ring rigs: angular extent of the camera arc
  int holdout_every = 8;   ///< every n-th camera id (0, n, 2n, ...) is a test view
};

void validate(const SceneSpec& spec);

struct SyntheticScene {
  GaussianCloud cloud_gt;
  std::vector<CameraPose> cameras;
  std::vector<Image> images;
  std::vector<Image> depths;
  std::vector<Mask> masks;  ///< foreground = 1
  std::vector<int> train_ids;
  std::vector<int> test_ids;
};

/// Ids split with every `every`-th id held out, starting at 0.
void holdout_split(int n, int every, std::vector<int>& train, std::vector<int>& test);

/// Deterministic given spec.seed. Images, depth maps and masks are rendered
/// from cloud_gt; foreground is final transmittance < 0.5.
SyntheticScene make_scene(const SceneSpec& spec);

/// Points on the generating scene, used to seed training.
std::vector<Vec3> point_samples(const GaussianCloud& cloud);

struct DepthOracleOptions {
  double gamma = 1.0;  ///< disparity exponent; 1 leaves depth untouched
  /// Cameras the oracle may look up; empty means all.
  std::vector<int> candidates;
  /// Reproject the nearest camera's depth into the query view (z-buffered,
  /// each source pixel covering its four nearest target pixels) instead of
  /// returning it unchanged. Unreached pixels read 0, like background.
  bool warp = false;
};

/// Returns the stored depth of the candidate camera whose optical center is
/// nearest the query (ties: smallest id), optionally warped into the query
/// view, with gamma applied to disparity. A query at a stored pose gets that
/// camera's depth map as is.
class NearestCameraDepthOracle final : public DepthOracle {
 public:
  NearestCameraDepthOracle(std::vector<CameraPose> cameras, std::vector<Image> depths, DepthOracleOptions options);
  Image predict(const Image& color, const CameraPose& view) const override;
  std::string name() const override { return warp_ ? "gt-warp" : "gt-nearest"; }
  int nearest(const CameraPose& view) const;

 private:
  std::vector<CameraPose> cameras_;
  std::vector<Image> depths_;
  std::vector<int> candidates_;
  double gamma_;
  bool warp_;
};

NearestCameraDepthOracle gt_depth_oracle(const SyntheticScene& scene, DepthOracleOptions options = {});

/// Directory layout: cameras.json, images/NNN.png, depths/NNN.pfm,
/// masks/NNN.png, split.json and, for synthetic scenes, cloud_gt.ckpt.
struct Dataset {
  std::vector<CameraRecord> cameras;
  std::vector<Image> images;  ///< linear RGB decoded from the 8-bit files
  std::vector<Image> depths;
  std::vector<Mask> masks;    ///< empty when the dataset has none
  std::vector<int> train_ids;
  std::vector<int> test_ids;
  std::optional<GaussianCloud> cloud_gt;

  std::size_t index_of(int camera_id) const;
};

void save_dataset(const std::filesystem::path& dir, const SyntheticScene& scene);
Dataset load_dataset(const std::filesystem::path& dir);

/// In-memory view of a scene in dataset form, with images quantized as if
/// written and read back.
Dataset to_dataset(const SyntheticScene& scene);

}  // namespace curigs
