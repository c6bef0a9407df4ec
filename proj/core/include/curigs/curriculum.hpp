#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "curigs/metrics.hpp"
#include "curigs/random.hpp"
#include "curigs/student_pool.hpp"
#include "curigs/train_view.hpp"

namespace curigs {

/// Staged unlocking of perturbation levels over [start_iter, end_iter).
struct ScheduleParams {
  double sigma_min = 1.0;
  double sigma_max = 10.0;
  double k = 1.0;   ///< degrees added per stage
  int stage_length = 1;  ///< iterations per stage
  int start_iter = 0;
  int end_iter = 1;
};

void validate(const ScheduleParams& p);

/// Stage length that gives each of `level_count` levels one stage of the window.
int default_stage_length(int start_iter, int end_iter, int level_count);

/// Schedule covering `levels` evenly spaced by their first difference.
ScheduleParams schedule_for_levels(const std::vector<double>& levels, int start_iter, int end_iter);

/// Active perturbation level. Before the window: nullopt. Inside:
/// min(sigma_max, sigma_min + k floor((t - start_iter) / stage_length)).
/// At or after end_iter: sigma_max.
std::optional<double> active_sigma(int t, const ScheduleParams& p);

/// Student sampling happens only inside [start_iter, end_iter).
bool curriculum_active(int t, const ScheduleParams& p);

struct CurriculumState {
  ScheduleParams params;
  StudentPool pool;
  double promotion_threshold = 0.4;
  std::vector<TrainView> promoted;
  std::map<std::pair<int, int>, int> best;  ///< (teacher_id, level_index) -> student id
  std::set<std::pair<int, int>> promoted_groups;
};

/// Uniform draw from the (teacher, active level) group.
/// Throws InactiveCurriculum outside the window, MissingLevel when the active
/// level is not one of the pool's levels.
const StudentView& sample_student(const CurriculumState& state, int teacher_id, int t, Rng& rng);

/// Keeps the lowest-composite evaluation per student and per group.
/// Returns true when the stored best changed. Throws UnknownStudent.
bool record_evaluation(CurriculumState& state, int student_id, const MetricReport& report, const Image& render,
                       int iteration = -1);

/// Optional per-student foreground mask for promoted views.
using PromotionMaskFn = std::function<std::optional<Mask>(const StudentView&)>;

/// Promotes, per teacher, the best student of `finished_level` when its
/// best_nr >= promotion_threshold. The frozen reference is the cached best
/// render. Each (teacher, level) promotes at most once. Promotions are
/// appended to state.promoted and returned.
std::vector<TrainView> on_level_transition(CurriculumState& state, double finished_level,
                                           const PromotionMaskFn& mask_fn = {});

/// JSON-lines curriculum log: {iter, event, teacher_id, level, ...scores}.
class CurriculumEventLog {
 public:
  explicit CurriculumEventLog(std::ostream* out = nullptr) : out_(out) {}

  void unlocked(int iter, double level);
  void evaluated(int iter, const StudentView& student, const MetricReport& report, bool new_best);
  void promoted(int iter, const TrainView& view, double nr);

  std::size_t count(const std::string& event) const;

 private:
  void emit(const std::string& line, const std::string& event);

  std::ostream* out_;
  std::map<std::string, std::size_t> counts_;
};

}  // namespace curigs
