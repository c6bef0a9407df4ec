#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "curigs/curriculum.hpp"
#include "curigs/losses.hpp"
#include "curigs/metrics.hpp"
#include "curigs/optimizer.hpp"
#include "curigs/random.hpp"
#include "curigs/scene_synth.hpp"
#include "curigs/train_view.hpp"

namespace curigs {

enum class InitMode { Points, RandomBox };

struct InitConfig {
  InitMode mode = InitMode::Points;
  double position_noise = 0.03;  ///< world units
  double color_noise = 0.15;
  double opacity = 0.1;
  int count = 0;  ///< RandomBox: primitive count; Points: cap (0 = every point)
  double scale_factor = 1.0;  ///< times the mean distance to the 3 nearest neighbours
};

/// Which dataset cameras the depth oracle may read from.
enum class OracleCandidates { All, Train, Teachers };

struct DepthOracleConfig {
  std::string kind = "gt-nearest";  ///< gt-nearest | gt-warp | null
  double gamma = 1.0;
  OracleCandidates candidates = OracleCandidates::Teachers;
};

struct TrainConfig {
  std::uint64_t seed = 0;
  int iterations = 5000;
  bool dual_model = true;  ///< false trains model_a alone (no cross-model term)
  bool curriculum = true;

  std::vector<double> levels{1.0, 2.0, 3.0, 4.0, 5.0};
  int students_per_level = 10;
  double sigma_r = 0.02;
  int curriculum_start = 800;
  int curriculum_end = 4600;
  int stage_length = 0;  ///< 0 = window / number of levels
  double promotion_threshold = 0.4;
  CompositeWeights composite;

  LossWeights loss;
  LearningRates lr;
  AdamHyper adam;
  DensifyConfig densify;
  InitConfig init;
  DepthOracleConfig depth;

  bool use_masks = false;  ///< supervise teachers and promoted views on foreground only
  double mask_tau = 3.0;
  int eval_interval = 250;
  bool eval_masked = false;
  int log_interval = 0;  ///< 0 disables progress lines
};

/// Throws InvalidConfig on inconsistent settings.
void validate(const TrainConfig& c);

/// Schedule derived from the configured levels and window.
ScheduleParams schedule_of(const TrainConfig& c);

/// Held-out camera with its reference.
struct EvalView {
  int id = 0;
  CameraPose pose;
  Image reference;
  std::optional<Mask> mask;
};

struct TrainingData {
  std::vector<TrainView> teachers;  ///< teacher_id equals the position
  std::vector<int> teacher_camera_ids;
  std::vector<EvalView> test_views;
  std::vector<Vec3> init_points;
  std::vector<Vec3> init_colors;  ///< empty or one per point
  Vec3 bbox_min = Vec3::Constant(-1.0);
  Vec3 bbox_max = Vec3::Constant(1.0);
};

/// `n` ids spread evenly over `ids` (all of them when n <= 0 or n >= size).
std::vector<int> subsample_uniform(const std::vector<int>& ids, int n);

/// Teachers are the given camera ids, test views the dataset's test split.
/// Init points come from the generating cloud when the dataset carries one.
TrainingData make_training_data(const Dataset& ds, const std::vector<int>& teacher_ids, bool with_masks);

std::unique_ptr<DepthOracle> make_depth_oracle(const Dataset& ds, const DepthOracleConfig& config,
                                               const std::vector<int>& teacher_ids);

GaussianCloud initialize_cloud(const TrainingData& data, const InitConfig& config, Rng& rng);

struct CurvePoint {
  int iteration = 0;
  double psnr = 0.0;
  double ssim = 0.0;
  double perceptual = 0.0;
};

struct EvalSummary {
  std::vector<double> psnr, ssim, perceptual;  ///< per view
  CurvePoint mean;
};

/// Renders `cloud` at every view and scores it. With `quantize` the render
/// goes through the 8-bit image path first.
EvalSummary evaluate_views(const GaussianCloud& cloud, const std::vector<EvalView>& views,
                           const MetricPlugin& plugin, bool masked, bool quantize);

/// Optional outputs; null streams are skipped.
struct TrainerSinks {
  std::ostream* metrics_csv = nullptr;  ///< student evaluations (metric CSV schema)
  std::ostream* events = nullptr;       ///< curriculum JSON lines
  std::ostream* curve_csv = nullptr;    ///< iteration,psnr,ssim,perc_proxy
  std::ostream* log = nullptr;
  std::optional<std::filesystem::path> dump_dir;  ///< NaN diagnostics
};

void write_curve_header(std::ostream& out);
void write_curve_row(std::ostream& out, const CurvePoint& p);

struct TrainResult {
  GaussianCloud model_a;
  std::optional<GaussianCloud> model_b;
  std::vector<CurvePoint> curve;
  std::vector<TrainView> promoted;
  std::size_t unlocked_events = 0;
  std::size_t evaluated_events = 0;
  std::size_t promoted_events = 0;
  int iterations = 0;
  bool teacher_references_intact = true;
  bool promoted_references_intact = true;
};

class Trainer {
 public:
  Trainer(TrainConfig config, TrainingData data, const DepthOracle& oracle, const MetricPlugin& plugin,
          TrainerSinks sinks = {});

  /// Runs one iteration. Throws NumericalFailure on a non-finite loss or gradient.
  void step();
  TrainResult run();

  int iteration() const noexcept { return iteration_; }
  const ModelState& model_a() const noexcept { return model_a_; }
  const std::optional<ModelState>& model_b() const noexcept { return model_b_; }
  const std::vector<TrainView>& train_views() const noexcept { return train_views_; }
  const CurriculumState& curriculum() const noexcept { return curriculum_; }
  const std::vector<CurvePoint>& curve() const noexcept { return curve_; }

 private:
  void handle_transitions(int t);
  void promote(int t, double finished_level);
  int next_teacher();
  void evaluate(int t);
  [[noreturn]] void nan_abort(int t, const TotalLoss& loss, const std::string& what);

  TrainConfig config_;
  TrainingData data_;
  const DepthOracle& oracle_;
  const MetricPlugin& plugin_;
  TrainerSinks sinks_;
  CurriculumEventLog events_;

  std::vector<TrainView> train_views_;  ///< teachers first, then promotions
  std::size_t teacher_count_ = 0;
  std::vector<std::uint64_t> teacher_hashes_;
  CurriculumState curriculum_;
  ModelState model_a_;
  std::optional<ModelState> model_b_;
  DensifyStats stats_a_;
  DensifyStats stats_b_;
  Rng view_rng_, student_rng_, densify_rng_a_, densify_rng_b_;
  std::vector<int> teacher_order_;
  std::size_t teacher_cursor_ = 0;
  std::vector<CurvePoint> curve_;
  int iteration_ = 0;
};

/// Convenience wrapper: Trainer(...).run().
TrainResult train(const TrainConfig& config, const TrainingData& data, const DepthOracle& oracle,
                  const MetricPlugin& plugin, TrainerSinks sinks = {});

}  // namespace curigs
