#include "curigs/config.hpp"

#include <fstream>
#include <set>

#include "curigs/error.hpp"

namespace curigs {

using nlohmann::json;

namespace {

std::string to_string(InitMode m) { return m == InitMode::Points ? "points" : "random-box"; }

std::string to_string(OracleCandidates c) {
  switch (c) {
    case OracleCandidates::All: return "all";
    case OracleCandidates::Train: return "train";
    case OracleCandidates::Teachers: return "teachers";
  }
  return "?";
}

// Reads known keys of one object and rejects the rest.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) raise(Errc::InvalidConfig, path_ + " must be an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      raise(Errc::InvalidConfig, "wrong type for " + path_ + "." + key);
    }
  }

  std::optional<Section> child(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return std::nullopt;
    return Section(*it, path_ + "." + key);
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) raise(Errc::InvalidConfig, "unknown config key " + path_ + "." + key);
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename F>
void with_child(Section& s, const char* key, F&& f) {
  if (auto c = s.child(key)) {
    f(*c);
    c->finish();
  }
}

}  // namespace

json to_json(const TrainConfig& c) {
  return json{
      {"seed", c.seed},
      {"iterations", c.iterations},
      {"dual_model", c.dual_model},
      {"curriculum",
       {{"enabled", c.curriculum},
        {"levels", c.levels},
        {"students_per_level", c.students_per_level},
        {"sigma_r", c.sigma_r},
        {"start_iter", c.curriculum_start},
        {"end_iter", c.curriculum_end},
        {"stage_length", c.stage_length},
        {"promotion_threshold", c.promotion_threshold},
        {"composite_weights", {{"ssim", c.composite.ssim}, {"perceptual", c.composite.perceptual}, {"nr", c.composite.nr}}}}},
      {"loss",
       {{"lambda_s", c.loss.lambda_s},
        {"lambda_d", c.loss.lambda_d},
        {"lambda_p", c.loss.lambda_p},
        {"lambda_1", c.loss.lambda_1},
        {"lambda_2", c.loss.lambda_2},
        {"lambda_3", c.loss.lambda_3}}},
      {"optimizer",
       {{"position_lr_init", c.lr.position_lr_init},
        {"position_lr_final", c.lr.position_lr_final},
        {"position_decay_steps", c.lr.position_decay_steps},
        {"scale_lr", c.lr.scale_lr},
        {"rotation_lr", c.lr.rotation_lr},
        {"opacity_lr", c.lr.opacity_lr},
        {"color_lr", c.lr.color_lr},
        {"beta1", c.adam.beta1},
        {"beta2", c.adam.beta2},
        {"eps", c.adam.eps}}},
      {"densify",
       {{"interval", c.densify.interval},
        {"start_iter", c.densify.start_iter},
        {"end_iter", c.densify.end_iter},
        {"prune_opacity", c.densify.prune_opacity},
        {"grad_threshold", c.densify.grad_threshold},
        {"max_primitives", c.densify.max_primitives},
        {"clone_jitter", c.densify.clone_jitter}}},
      {"init",
       {{"mode", to_string(c.init.mode)},
        {"position_noise", c.init.position_noise},
        {"color_noise", c.init.color_noise},
        {"opacity", c.init.opacity},
        {"count", c.init.count},
        {"scale_factor", c.init.scale_factor}}},
      {"depth_oracle", {{"kind", c.depth.kind}, {"gamma", c.depth.gamma}, {"candidates", to_string(c.depth.candidates)}}},
      {"masks", {{"enabled", c.use_masks}, {"tau", c.mask_tau}}},
      {"eval", {{"interval", c.eval_interval}, {"masked", c.eval_masked}}},
      {"log_interval", c.log_interval},
  };
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  Section root(j, "config");
  root.read("seed", c.seed);
  root.read("iterations", c.iterations);
  root.read("dual_model", c.dual_model);
  root.read("log_interval", c.log_interval);
  with_child(root, "curriculum", [&](Section& s) {
    s.read("enabled", c.curriculum);
    s.read("levels", c.levels);
    s.read("students_per_level", c.students_per_level);
    s.read("sigma_r", c.sigma_r);
    s.read("start_iter", c.curriculum_start);
    s.read("end_iter", c.curriculum_end);
    s.read("stage_length", c.stage_length);
    s.read("promotion_threshold", c.promotion_threshold);
    with_child(s, "composite_weights", [&](Section& w) {
      w.read("ssim", c.composite.ssim);
      w.read("perceptual", c.composite.perceptual);
      w.read("nr", c.composite.nr);
    });
  });
  with_child(root, "loss", [&](Section& s) {
    s.read("lambda_s", c.loss.lambda_s);
    s.read("lambda_d", c.loss.lambda_d);
    s.read("lambda_p", c.loss.lambda_p);
    s.read("lambda_1", c.loss.lambda_1);
    s.read("lambda_2", c.loss.lambda_2);
    s.read("lambda_3", c.loss.lambda_3);
  });
  with_child(root, "optimizer", [&](Section& s) {
    s.read("position_lr_init", c.lr.position_lr_init);
    s.read("position_lr_final", c.lr.position_lr_final);
    s.read("position_decay_steps", c.lr.position_decay_steps);
    s.read("scale_lr", c.lr.scale_lr);
    s.read("rotation_lr", c.lr.rotation_lr);
    s.read("opacity_lr", c.lr.opacity_lr);
    s.read("color_lr", c.lr.color_lr);
    s.read("beta1", c.adam.beta1);
    s.read("beta2", c.adam.beta2);
    s.read("eps", c.adam.eps);
  });
  with_child(root, "densify", [&](Section& s) {
    s.read("interval", c.densify.interval);
    s.read("start_iter", c.densify.start_iter);
    s.read("end_iter", c.densify.end_iter);
    s.read("prune_opacity", c.densify.prune_opacity);
    s.read("grad_threshold", c.densify.grad_threshold);
    s.read("max_primitives", c.densify.max_primitives);
    s.read("clone_jitter", c.densify.clone_jitter);
  });
  with_child(root, "init", [&](Section& s) {
    std::string mode = to_string(c.init.mode);
    s.read("mode", mode);
    if (mode == "points") c.init.mode = InitMode::Points;
    else if (mode == "random-box") c.init.mode = InitMode::RandomBox;
    else raise(Errc::InvalidConfig, "init.mode must be points or random-box");
    s.read("position_noise", c.init.position_noise);
    s.read("color_noise", c.init.color_noise);
    s.read("opacity", c.init.opacity);
    s.read("count", c.init.count);
    s.read("scale_factor", c.init.scale_factor);
  });
  with_child(root, "depth_oracle", [&](Section& s) {
    s.read("kind", c.depth.kind);
    s.read("gamma", c.depth.gamma);
    std::string cand = to_string(c.depth.candidates);
    s.read("candidates", cand);
    if (cand == "all") c.depth.candidates = OracleCandidates::All;
    else if (cand == "train") c.depth.candidates = OracleCandidates::Train;
    else if (cand == "teachers") c.depth.candidates = OracleCandidates::Teachers;
    else raise(Errc::InvalidConfig, "depth_oracle.candidates must be all, train or teachers");
  });
  with_child(root, "masks", [&](Section& s) {
    s.read("enabled", c.use_masks);
    s.read("tau", c.mask_tau);
  });
  with_child(root, "eval", [&](Section& s) {
    s.read("interval", c.eval_interval);
    s.read("masked", c.eval_masked);
  });
  root.finish();
  validate(c);
  return c;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::Io, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    raise(Errc::InvalidConfig, "config " + path.string() + " is not valid JSON: " + e.what());
  }
  return train_config_from_json(j);
}

json to_json(const SceneSpec& s) {
  return json{{"n_gaussians", s.n_gaussians},
              {"layout", to_string(s.layout)},
              {"n_cameras", s.n_cameras},
              {"rig", to_string(s.rig)},
              {"seed", s.seed},
              {"width", s.width},
              {"height", s.height},
              {"fov_deg", s.fov_deg},
              {"camera_radius", s.camera_radius},
              {"elevation_deg", s.elevation_deg},
              {"arc_deg", s.arc_deg},
              {"holdout_every", s.holdout_every}};
}

}  // namespace curigs
