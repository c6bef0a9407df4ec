#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>

#include "curigs/error.hpp"
#include "curigs/image_io.hpp"
#include "curigs/scene_synth.hpp"

namespace curigs {

namespace fs = std::filesystem;

namespace {

std::string stem(int id) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03d", id);
  return buf;
}

}  // namespace

std::size_t Dataset::index_of(int camera_id) const {
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    if (cameras[i].id == camera_id) return i;
  }
  raise(Errc::InvalidArgument, "dataset has no camera " + std::to_string(camera_id));
}

void save_dataset(const fs::path& dir, const SyntheticScene& scene) {
  std::error_code ec;
  fs::create_directories(dir / "images", ec);
  fs::create_directories(dir / "depths", ec);
  fs::create_directories(dir / "masks", ec);
  if (ec) raise(Errc::Io, "cannot create dataset directory " + dir.string() + ": " + ec.message());

  std::vector<CameraRecord> records;
  for (std::size_t i = 0; i < scene.cameras.size(); ++i) {
    const int id = static_cast<int>(i);
    records.push_back({id, scene.cameras[i]});
    io::write_png(dir / "images" / (stem(id) + ".png"), scene.images[i]);
    io::write_pfm(dir / "depths" / (stem(id) + ".pfm"), scene.depths[i]);
    io::write_mask_png(dir / "masks" / (stem(id) + ".png"), scene.masks[i]);
  }
  write_cameras_json(dir / "cameras.json", records);

  std::ofstream split(dir / "split.json");
  if (!split) raise(Errc::Io, "cannot write split.json");
  split << nlohmann::json{{"train", scene.train_ids}, {"test", scene.test_ids}}.dump(2) << '\n';
  save_checkpoint(dir / "cloud_gt.ckpt", scene.cloud_gt);
}

Dataset load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) raise(Errc::Io, "dataset directory not found: " + dir.string());
  Dataset ds;
  ds.cameras = read_cameras_json(dir / "cameras.json");
  for (const auto& rec : ds.cameras) {
    Image img = io::read_png(dir / "images" / (stem(rec.id) + ".png"));
    if (!img.same_extent(rec.pose.width, rec.pose.height)) {
      raise(Errc::ShapeMismatch, "image size differs from camera " + std::to_string(rec.id));
    }
    ds.images.push_back(std::move(img));
    const fs::path depth = dir / "depths" / (stem(rec.id) + ".pfm");
    ds.depths.push_back(fs::exists(depth) ? io::read_pfm(depth) : Image());
    const fs::path mask = dir / "masks" / (stem(rec.id) + ".png");
    if (fs::exists(mask)) ds.masks.push_back(io::read_mask_png(mask));
  }
  if (!ds.masks.empty() && ds.masks.size() != ds.cameras.size()) {
    raise(Errc::Io, "masks present for some cameras only");
  }

  std::ifstream split(dir / "split.json");
  if (!split) raise(Errc::Io, "cannot read split.json");
  try {
    const nlohmann::json j = nlohmann::json::parse(split);
    ds.train_ids = j.at("train").get<std::vector<int>>();
    ds.test_ids = j.at("test").get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    raise(Errc::Io, std::string("malformed split.json: ") + e.what());
  }
  for (int id : ds.train_ids) ds.index_of(id);
  for (int id : ds.test_ids) ds.index_of(id);
  if (fs::exists(dir / "cloud_gt.ckpt")) ds.cloud_gt = load_checkpoint(dir / "cloud_gt.ckpt");
  return ds;
}

Dataset to_dataset(const SyntheticScene& scene) {
  Dataset ds;
  for (std::size_t i = 0; i < scene.cameras.size(); ++i) {
    ds.cameras.push_back({static_cast<int>(i), scene.cameras[i]});
    ds.images.push_back(io::quantize_srgb8(scene.images[i]));
    Image depth = scene.depths[i];
    for (std::size_t k = 0; k < depth.size(); ++k) depth[k] = static_cast<double>(static_cast<float>(depth[k]));
    ds.depths.push_back(std::move(depth));
  }
  ds.masks = scene.masks;
  ds.train_ids = scene.train_ids;
  ds.test_ids = scene.test_ids;
  ds.cloud_gt = scene.cloud_gt;
  return ds;
}

}  // namespace curigs
