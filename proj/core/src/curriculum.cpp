#include "curigs/curriculum.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <ostream>

#include "curigs/error.hpp"

namespace curigs {

void validate(const ScheduleParams& p) {
  if (!(p.sigma_min <= p.sigma_max)) raise(Errc::InvalidConfig, "schedule: sigma_min > sigma_max");
  if (!(p.k > 0.0)) raise(Errc::InvalidConfig, "schedule: k must be > 0");
  if (p.stage_length < 1) raise(Errc::InvalidConfig, "schedule: stage length must be >= 1");
  if (!(p.start_iter < p.end_iter)) raise(Errc::InvalidConfig, "schedule: start_iter must precede end_iter");
  if (p.start_iter < 0) raise(Errc::InvalidConfig, "schedule: start_iter must be >= 0");
}

int default_stage_length(int start_iter, int end_iter, int level_count) {
  if (level_count < 1) raise(Errc::InvalidConfig, "schedule: no levels");
  return std::max(1, (end_iter - start_iter) / level_count);
}

ScheduleParams schedule_for_levels(const std::vector<double>& levels, int start_iter, int end_iter) {
  if (levels.empty()) raise(Errc::InvalidConfig, "schedule: no levels");
  ScheduleParams p;
  p.sigma_min = levels.front();
  p.sigma_max = levels.back();
  p.k = levels.size() > 1 ? levels[1] - levels[0] : 1.0;
  p.start_iter = start_iter;
  p.end_iter = end_iter;
  p.stage_length = default_stage_length(start_iter, end_iter, static_cast<int>(levels.size()));
  return p;
}

std::optional<double> active_sigma(int t, const ScheduleParams& p) {
  if (t < p.start_iter) return std::nullopt;
  if (t >= p.end_iter) return p.sigma_max;
  const int stage = (t - p.start_iter) / p.stage_length;
  return std::min(p.sigma_max, p.sigma_min + p.k * stage);
}

bool curriculum_active(int t, const ScheduleParams& p) { return t >= p.start_iter && t < p.end_iter; }

const StudentView& sample_student(const CurriculumState& state, int teacher_id, int t, Rng& rng) {
  if (!curriculum_active(t, state.params)) raise(Errc::InactiveCurriculum, "iteration outside the curriculum window");
  const double level = *active_sigma(t, state.params);
  const auto li = state.pool.level_index_of(level);
  if (!li) raise(Errc::MissingLevel, "active level " + std::to_string(level) + " is not a configured level");
  const auto it = state.pool.groups.find({teacher_id, *li});
  if (it == state.pool.groups.end() || it->second.empty()) {
    raise(Errc::MissingLevel, "no students for teacher " + std::to_string(teacher_id) + " at the active level");
  }
  const auto& group = it->second;
  std::uniform_int_distribution<std::size_t> pick(0, group.size() - 1);
  return state.pool.students[group[pick(rng)]];
}

bool record_evaluation(CurriculumState& state, int student_id, const MetricReport& report, const Image& render,
                       int iteration) {
  if (student_id < 0 || static_cast<std::size_t>(student_id) >= state.pool.students.size()) {
    raise(Errc::UnknownStudent, "student id " + std::to_string(student_id));
  }
  StudentView& s = state.pool.students[student_id];
  if (s.best_composite && !(report.composite < *s.best_composite)) return false;
  s.best_composite = report.composite;
  s.best_nr = report.nr_quality;
  s.best_render = render;
  s.best_iteration = iteration;

  const std::pair<int, int> key{s.teacher_id, s.level_index};
  auto it = state.best.find(key);
  if (it == state.best.end()) {
    state.best.emplace(key, s.id);
  } else if (it->second != s.id) {
    const StudentView& current = state.pool.students[it->second];
    if (report.composite < *current.best_composite) it->second = s.id;
  }
  return true;
}

std::vector<TrainView> on_level_transition(CurriculumState& state, double finished_level,
                                           const PromotionMaskFn& mask_fn) {
  std::vector<TrainView> fresh;
  const auto li = state.pool.level_index_of(finished_level);
  if (!li) return fresh;
  for (int t = 0; t < state.pool.teacher_count; ++t) {
    const std::pair<int, int> key{t, *li};
    if (state.promoted_groups.contains(key)) continue;
    const auto it = state.best.find(key);
    if (it == state.best.end()) continue;
    const StudentView& s = state.pool.students[it->second];
    if (!s.best_nr || !s.best_render) continue;
    if (!(*s.best_nr >= state.promotion_threshold)) continue;

    TrainView v;
    v.id = "student_" + std::to_string(s.id);
    v.pose = s.pose;
    v.reference = *s.best_render;
    v.kind = ViewKind::PromotedStudent;
    v.teacher_id = s.teacher_id;
    v.level = s.level;
    v.reference_hash = content_hash(v.reference);
    if (mask_fn) v.mask = mask_fn(s);
    state.promoted_groups.insert(key);
    state.promoted.push_back(v);
    fresh.push_back(std::move(v));
  }
  return fresh;
}

void CurriculumEventLog::emit(const std::string& line, const std::string& event) {
  ++counts_[event];
  if (out_) *out_ << line << '\n';
}

void CurriculumEventLog::unlocked(int iter, double level) {
  const nlohmann::json j = {{"iter", iter}, {"event", "unlocked"}, {"teacher_id", nullptr}, {"level", level}};
  emit(j.dump(), "unlocked");
}

void CurriculumEventLog::evaluated(int iter, const StudentView& s, const MetricReport& r, bool new_best) {
  const nlohmann::json j = {{"iter", iter},
                            {"event", "evaluated"},
                            {"teacher_id", s.teacher_id},
                            {"level", s.level},
                            {"student_id", s.id},
                            {"ssim", r.ssim},
                            {"perceptual", r.perceptual},
                            {"nr_quality", r.nr_quality},
                            {"composite", r.composite},
                            {"new_best", new_best}};
  emit(j.dump(), "evaluated");
}

void CurriculumEventLog::promoted(int iter, const TrainView& v, double nr) {
  const nlohmann::json j = {{"iter", iter},       {"event", "promoted"}, {"teacher_id", v.teacher_id},
                            {"level", v.level},   {"view_id", v.id},     {"nr_quality", nr},
                            {"reference_hash", v.reference_hash}};
  emit(j.dump(), "promoted");
}

std::size_t CurriculumEventLog::count(const std::string& event) const {
  const auto it = counts_.find(event);
  return it == counts_.end() ? 0 : it->second;
}

}  // namespace curigs
