#include "curigs/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>

#include "curigs/error.hpp"
#include "curigs/geometry.hpp"
#include "curigs/image_io.hpp"

namespace curigs {

namespace {

// Independent random streams derived from the run seed.
enum Stream : std::uint64_t {
  kStreamInitA = 1,
  kStreamInitB = 2,
  kStreamViews = 3,
  kStreamPool = 4,
  kStreamStudents = 5,
  kStreamDensifyA = 6,
  kStreamDensifyB = 7,
};

}  // namespace

void validate(const TrainConfig& c) {
  if (c.iterations < 1) raise(Errc::InvalidConfig, "iterations must be >= 1");
  if (c.students_per_level < 1) raise(Errc::InvalidConfig, "students_per_level must be >= 1");
  if (!(c.promotion_threshold >= 0.0 && c.promotion_threshold <= 1.0)) {
    raise(Errc::InvalidConfig, "promotion_threshold must lie in [0, 1]");
  }
  if (c.eval_interval < 1) raise(Errc::InvalidConfig, "eval_interval must be >= 1");
  if (!(c.mask_tau > 0.0)) raise(Errc::InvalidConfig, "mask_tau must be positive");
  if (c.stage_length < 0) raise(Errc::InvalidConfig, "stage_length must be >= 0");
  if (!(c.init.position_noise >= 0.0 && c.init.color_noise >= 0.0)) {
    raise(Errc::InvalidConfig, "init noise must be >= 0");
  }
  if (!(c.init.opacity > 0.0 && c.init.opacity < 1.0)) raise(Errc::InvalidConfig, "init opacity must lie in (0, 1)");
  if (c.depth.kind != "gt-nearest" && c.depth.kind != "gt-warp" && c.depth.kind != "null") {
    raise(Errc::InvalidConfig, "depth oracle kind must be gt-nearest, gt-warp or null");
  }
  try {
    validate(c.loss);
    validate(c.composite);
    validate(c.densify);
    if (c.curriculum) validate(schedule_of(c));
  } catch (const Error& e) {
    raise(Errc::InvalidConfig, e.what());
  }
  if (c.curriculum) {
    if (c.levels.empty()) raise(Errc::InvalidConfig, "curriculum needs at least one level");
    for (std::size_t i = 1; i < c.levels.size(); ++i) {
      if (!(c.levels[i] > c.levels[i - 1])) raise(Errc::InvalidConfig, "levels must be strictly increasing");
    }
  }
}

ScheduleParams schedule_of(const TrainConfig& c) {
  ScheduleParams p = schedule_for_levels(c.levels, c.curriculum_start, c.curriculum_end);
  if (c.stage_length > 0) p.stage_length = c.stage_length;
  return p;
}

std::vector<int> subsample_uniform(const std::vector<int>& ids, int n) {
  if (n <= 0 || static_cast<std::size_t>(n) >= ids.size()) return ids;
  std::vector<int> out;
  if (n == 1) return {ids[ids.size() / 2]};
  for (int i = 0; i < n; ++i) {
    const double pos = static_cast<double>(i) * static_cast<double>(ids.size() - 1) / (n - 1);
    out.push_back(ids[static_cast<std::size_t>(std::lround(pos))]);
  }
  return out;
}

TrainingData make_training_data(const Dataset& ds, const std::vector<int>& teacher_ids, bool with_masks) {
  if (teacher_ids.empty()) raise(Errc::EmptyTeachers, "no teacher views selected");
  const bool masks = with_masks && !ds.masks.empty();
  TrainingData data;
  for (std::size_t t = 0; t < teacher_ids.size(); ++t) {
    const std::size_t k = ds.index_of(teacher_ids[t]);
    TrainView v;
    v.id = "teacher_" + std::to_string(teacher_ids[t]);
    v.pose = ds.cameras[k].pose;
    v.reference = ds.images[k];
    v.kind = ViewKind::Teacher;
    if (masks) v.mask = ds.masks[k];
    v.teacher_id = static_cast<int>(t);
    v.reference_hash = content_hash(v.reference);
    data.teachers.push_back(std::move(v));
  }
  data.teacher_camera_ids = teacher_ids;
  for (int id : ds.test_ids) {
    const std::size_t k = ds.index_of(id);
    EvalView e{id, ds.cameras[k].pose, ds.images[k], std::nullopt};
    if (!ds.masks.empty()) e.mask = ds.masks[k];
    data.test_views.push_back(std::move(e));
  }
  if (ds.cloud_gt) {
    data.init_points = point_samples(*ds.cloud_gt);
    for (const auto& g : ds.cloud_gt->primitives) data.init_colors.push_back(g.color);
  }
  if (!data.init_points.empty()) {
    data.bbox_min = data.bbox_max = data.init_points.front();
    for (const auto& p : data.init_points) {
      data.bbox_min = data.bbox_min.cwiseMin(p);
      data.bbox_max = data.bbox_max.cwiseMax(p);
    }
  }
  return data;
}

std::unique_ptr<DepthOracle> make_depth_oracle(const Dataset& ds, const DepthOracleConfig& config,
                                               const std::vector<int>& teacher_ids) {
  if (config.kind == "null") return std::make_unique<NullDepthOracle>();
  std::vector<CameraPose> cams;
  std::vector<Image> depths;
  for (std::size_t i = 0; i < ds.cameras.size(); ++i) {
    cams.push_back(ds.cameras[i].pose);
    depths.push_back(ds.depths[i]);
    if (depths.back().empty()) raise(Errc::Io, "dataset has no depth map for camera " + std::to_string(ds.cameras[i].id));
  }
  DepthOracleOptions opts;
  opts.gamma = config.gamma;
  opts.warp = config.kind == "gt-warp";
  const std::vector<int>* ids = nullptr;
  switch (config.candidates) {
    case OracleCandidates::All: break;
    case OracleCandidates::Train: ids = &ds.train_ids; break;
    case OracleCandidates::Teachers: ids = &teacher_ids; break;
  }
  if (ids) {
    for (int id : *ids) opts.candidates.push_back(static_cast<int>(ds.index_of(id)));
  }
  return std::make_unique<NearestCameraDepthOracle>(std::move(cams), std::move(depths), std::move(opts));
}

GaussianCloud initialize_cloud(const TrainingData& data, const InitConfig& config, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vec3> pts;
  std::vector<Vec3> colors;
  if (config.mode == InitMode::Points) {
    if (data.init_points.empty()) raise(Errc::InvalidConfig, "point initialization needs scene points");
    std::vector<int> idx(data.init_points.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    if (config.count > 0) idx = subsample_uniform(idx, config.count);
    for (int i : idx) {
      const Vec3 noise(normal(rng), normal(rng), normal(rng));
      pts.push_back(data.init_points[i] + config.position_noise * noise);
      Vec3 c = data.init_colors.empty() ? Vec3::Constant(0.5) : data.init_colors[i];
      for (int k = 0; k < 3; ++k) c[k] += config.color_noise * normal(rng);
      colors.push_back(c.cwiseMax(0.05).cwiseMin(0.95));
    }
  } else {
    const int n = config.count > 0 ? config.count : 1000;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
      Vec3 p;
      for (int k = 0; k < 3; ++k) p[k] = data.bbox_min[k] + u(rng) * (data.bbox_max[k] - data.bbox_min[k]);
      pts.push_back(p);
      Vec3 c = Vec3::Constant(0.5);
      for (int k = 0; k < 3; ++k) c[k] += config.color_noise * normal(rng);
      colors.push_back(c.cwiseMax(0.05).cwiseMin(0.95));
    }
  }

  // Isotropic scale from the mean distance to the three nearest neighbours.
  GaussianCloud cloud;
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i < n; ++i) {
    std::array<double, 3> best{1e30, 1e30, 1e30};
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = (pts[i] - pts[j]).squaredNorm();
      if (d < best[2]) {
        best[2] = d;
        std::sort(best.begin(), best.end());
      }
    }
    double mean = 0.0;
    int used = 0;
    for (double d : best) {
      if (d < 1e29) {
        mean += std::sqrt(d);
        ++used;
      }
    }
    mean = used > 0 ? mean / used : 0.1;
    GaussianPrimitive g;
    g.mu = pts[i];
    g.log_scale = Vec3::Constant(std::log(std::max(1e-4, config.scale_factor * mean)));
    g.opacity_logit = logit(config.opacity);
    g.color = colors[i];
    cloud.primitives.push_back(g);
  }
  return cloud;
}

EvalSummary evaluate_views(const GaussianCloud& cloud, const std::vector<EvalView>& views,
                           const MetricPlugin& plugin, bool masked, bool quantize) {
  EvalSummary s;
  for (const auto& v : views) {
    Image img = render(cloud, v.pose).color;
    if (quantize) img = io::quantize_srgb8(img);
    Image ref = v.reference;
    if (masked && v.mask) {
      s.psnr.push_back(psnr(img, ref, *v.mask));
      for (std::size_t p = 0; p < img.pixel_count(); ++p) {
        if ((*v.mask)[p]) continue;
        for (int k = 0; k < 3; ++k) img[p * 3 + k] = ref[p * 3 + k] = 0.0;
      }
    } else {
      s.psnr.push_back(psnr(img, ref));
    }
    s.ssim.push_back(ssim(img, ref));
    s.perceptual.push_back(plugin.perceptual_distance(img, ref));
  }
  auto mean = [](const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
  };
  s.mean.psnr = mean(s.psnr);
  s.mean.ssim = mean(s.ssim);
  s.mean.perceptual = mean(s.perceptual);
  return s;
}

void write_curve_header(std::ostream& out) { out << "iteration,psnr,ssim,perc_proxy\n"; }

void write_curve_row(std::ostream& out, const CurvePoint& p) {
  std::ostringstream line;
  line << std::setprecision(17) << p.iteration << ',' << p.psnr << ',' << p.ssim << ',' << p.perceptual << '\n';
  out << line.str();
  out.flush();
}

Trainer::Trainer(TrainConfig config, TrainingData data, const DepthOracle& oracle, const MetricPlugin& plugin,
                 TrainerSinks sinks)
    : config_(std::move(config)), data_(std::move(data)), oracle_(oracle), plugin_(plugin),
      sinks_(std::move(sinks)), events_(sinks_.events) {
  validate(config_);
  if (data_.teachers.empty()) raise(Errc::EmptyTeachers, "training needs at least one teacher view");
  for (std::size_t i = 0; i < data_.teachers.size(); ++i) {
    if (data_.teachers[i].teacher_id != static_cast<int>(i)) {
      raise(Errc::InvalidArgument, "teacher_id must equal the teacher's position");
    }
  }
  const std::uint64_t seed = config_.seed;
  view_rng_ = make_rng(seed, kStreamViews);
  student_rng_ = make_rng(seed, kStreamStudents);
  densify_rng_a_ = make_rng(seed, kStreamDensifyA);
  densify_rng_b_ = make_rng(seed, kStreamDensifyB);

  train_views_ = data_.teachers;
  teacher_count_ = train_views_.size();
  for (const auto& v : train_views_) teacher_hashes_.push_back(content_hash(v.reference));

  Rng init_a = make_rng(seed, kStreamInitA);
  model_a_.cloud = initialize_cloud(data_, config_.init, init_a);
  model_a_.adam = AdamState(model_a_.cloud.size());
  stats_a_.reset(model_a_.cloud.size());
  if (config_.dual_model) {
    Rng init_b = make_rng(seed, kStreamInitB);
    ModelState b;
    b.cloud = initialize_cloud(data_, config_.init, init_b);
    b.adam = AdamState(b.cloud.size());
    stats_b_.reset(b.cloud.size());
    model_b_ = std::move(b);
  }

  if (config_.curriculum) {
    curriculum_.params = schedule_of(config_);
    curriculum_.promotion_threshold = config_.promotion_threshold;
    std::vector<CameraPose> poses;
    for (const auto& t : data_.teachers) poses.push_back(t.pose);
    Rng pool_rng = make_rng(seed, kStreamPool);
    curriculum_.pool = generate_student_pools(poses, config_.levels, config_.students_per_level, config_.sigma_r,
                                              pool_rng);
  }

  if (sinks_.metrics_csv) write_metric_csv_header(*sinks_.metrics_csv);
  if (sinks_.curve_csv) write_curve_header(*sinks_.curve_csv);
}

int Trainer::next_teacher() {
  if (teacher_cursor_ >= teacher_order_.size()) {
    teacher_order_.resize(teacher_count_);
    for (std::size_t i = 0; i < teacher_count_; ++i) teacher_order_[i] = static_cast<int>(i);
    std::shuffle(teacher_order_.begin(), teacher_order_.end(), view_rng_);
    teacher_cursor_ = 0;
  }
  return teacher_order_[teacher_cursor_++];
}

void Trainer::promote(int t, double finished_level) {
  PromotionMaskFn mask_fn;
  if (config_.use_masks) {
    mask_fn = [this](const StudentView& s) -> std::optional<Mask> {
      const TrainView& teacher = train_views_[static_cast<std::size_t>(s.teacher_id)];
      if (!teacher.mask || !s.best_render) return std::nullopt;
      try {
        const Mask bg = propagate_background_mask(teacher.reference, teacher.mask->inverted(), *s.best_render,
                                                  config_.mask_tau);
        return bg.inverted();
      } catch (const Error& e) {
        if (e.code() != Errc::EmptyBackground) throw;
        return std::nullopt;
      }
    };
  }
  for (auto& view : on_level_transition(curriculum_, finished_level, mask_fn)) {
    const auto idx = curriculum_.pool.level_index_of(finished_level);
    double nr = 0.0;
    if (idx) {
      const auto it = curriculum_.best.find({view.teacher_id, *idx});
      if (it != curriculum_.best.end()) nr = curriculum_.pool.students[it->second].best_nr.value_or(0.0);
    }
    events_.promoted(t, view, nr);
    train_views_.push_back(std::move(view));
  }
}

void Trainer::handle_transitions(int t) {
  const ScheduleParams& p = curriculum_.params;
  if (t < p.start_iter || t > p.end_iter) return;
  if (t == p.start_iter) {
    events_.unlocked(t, *active_sigma(t, p));
    return;
  }
  const double prev = *active_sigma(t - 1, p);
  if (t == p.end_iter) {
    promote(t, prev);
    return;
  }
  const double now = *active_sigma(t, p);
  if (now != prev) {
    promote(t, prev);
    events_.unlocked(t, now);
  }
}

void Trainer::nan_abort(int t, const TotalLoss& loss, const std::string& what) {
  std::ostringstream msg;
  msg << "non-finite " << what << " at iteration " << t << " (train " << loss.train_term << ", gt "
      << loss.gt_term << ", student " << loss.student_term << ")";
  if (sinks_.dump_dir) {
    std::error_code ec;
    std::filesystem::create_directories(*sinks_.dump_dir, ec);
    nlohmann::json j{{"iteration", t},
                     {"what", what},
                     {"train_term", loss.train_term},
                     {"gt_term", loss.gt_term},
                     {"student_term", loss.student_term},
                     {"value", loss.value},
                     {"primitives_a", model_a_.cloud.size()}};
    std::ofstream(*sinks_.dump_dir / "nan_dump.json") << j.dump(2) << '\n';
    save_checkpoint(*sinks_.dump_dir / "nan_model_a.ckpt", model_a_.cloud);
  }
  raise(Errc::NumericalFailure, msg.str());
}

void Trainer::step() {
  const int t = iteration_;
  if (config_.curriculum) handle_transitions(t);

  const int gt = next_teacher();
  std::uniform_int_distribution<std::size_t> pick(0, train_views_.size() - 1);
  const std::size_t train_idx = pick(view_rng_);

  const StudentView* student = nullptr;
  if (config_.curriculum && curriculum_active(t, curriculum_.params)) {
    student = &sample_student(curriculum_, gt, t, student_rng_);
  }

  SampledViews views;
  views.train_view = &train_views_[train_idx];
  views.gt_view = &train_views_[static_cast<std::size_t>(gt)];
  views.student = student ? &student->pose : nullptr;

  TotalLoss loss = total_loss(model_a_.cloud, model_b_ ? &model_b_->cloud : nullptr, views, oracle_, config_.loss);
  if (!std::isfinite(loss.value)) nan_abort(t, loss, "loss");
  if (!loss.grads_a.all_finite() || (model_b_ && !loss.grads_b.all_finite())) nan_abort(t, loss, "gradient");

  if (student && loss.student_render_a) {
    const Image& img = loss.student_render_a->color;
    const MetricReport report =
        composite_score(img, train_views_[static_cast<std::size_t>(gt)].reference, plugin_, config_.composite);
    const int sid = student->id;
    const bool improved = record_evaluation(curriculum_, sid, report, img, t);
    events_.evaluated(t, curriculum_.pool.students[static_cast<std::size_t>(sid)], report, improved);
    if (sinks_.metrics_csv) write_metric_csv_row(*sinks_.metrics_csv, t, "student_" + std::to_string(sid), report);
  }

  stats_a_.accumulate(loss.grads_a);
  adam_step(model_a_.cloud, loss.grads_a, model_a_.adam, config_.lr, config_.adam);
  if (model_b_) {
    stats_b_.accumulate(loss.grads_b);
    adam_step(model_b_->cloud, loss.grads_b, model_b_->adam, config_.lr, config_.adam);
  }

  const DensifyConfig& dc = config_.densify;
  if (t >= dc.start_iter && t < dc.end_iter && (t + 1) % dc.interval == 0) {
    densify_and_prune(model_a_, stats_a_, dc, densify_rng_a_);
    if (model_b_) densify_and_prune(*model_b_, stats_b_, dc, densify_rng_b_);
  }

  ++iteration_;
  if (iteration_ % config_.eval_interval == 0 || iteration_ == config_.iterations) evaluate(iteration_);
  if (sinks_.log && config_.log_interval > 0 && iteration_ % config_.log_interval == 0) {
    *sinks_.log << "iter " << iteration_ << " loss " << loss.value << " views " << train_views_.size()
                << " splats " << model_a_.cloud.size() << '\n';
    sinks_.log->flush();
  }
}

void Trainer::evaluate(int t) {
  if (data_.test_views.empty()) return;
  if (!curve_.empty() && curve_.back().iteration == t) return;
  CurvePoint p = evaluate_views(model_a_.cloud, data_.test_views, plugin_, config_.eval_masked, false).mean;
  p.iteration = t;
  curve_.push_back(p);
  if (sinks_.curve_csv) write_curve_row(*sinks_.curve_csv, p);
}

TrainResult Trainer::run() {
  while (iteration_ < config_.iterations) step();
  if (config_.curriculum && iteration_ == curriculum_.params.end_iter) handle_transitions(iteration_);

  TrainResult r;
  r.model_a = model_a_.cloud;
  if (model_b_) r.model_b = model_b_->cloud;
  r.curve = curve_;
  r.promoted.assign(train_views_.begin() + static_cast<std::ptrdiff_t>(teacher_count_), train_views_.end());
  r.unlocked_events = events_.count("unlocked");
  r.evaluated_events = events_.count("evaluated");
  r.promoted_events = events_.count("promoted");
  r.iterations = iteration_;
  for (std::size_t i = 0; i < teacher_count_; ++i) {
    r.teacher_references_intact = r.teacher_references_intact && content_hash(train_views_[i].reference) == teacher_hashes_[i];
  }
  for (const auto& v : r.promoted) r.promoted_references_intact = r.promoted_references_intact && v.reference_intact();
  for (const auto& v : curriculum_.promoted) {
    r.promoted_references_intact = r.promoted_references_intact && v.reference_intact();
  }
  return r;
}

TrainResult train(const TrainConfig& config, const TrainingData& data, const DepthOracle& oracle,
                  const MetricPlugin& plugin, TrainerSinks sinks) {
  return Trainer(config, data, oracle, plugin, std::move(sinks)).run();
}

}  // namespace curigs
