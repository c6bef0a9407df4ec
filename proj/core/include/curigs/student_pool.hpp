#pragma once

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "curigs/camera.hpp"
#include "curigs/image.hpp"

namespace curigs {

/// Candidate pseudo-view around a teacher, plus the best evaluation seen so far.
struct StudentView {
  int id = 0;
  int teacher_id = 0;
  int level_index = 0;
  double level = 0.0;  ///< degrees
  CameraPose pose;

  // Set together by record_evaluation; best_composite only ever decreases.
  std::optional<double> best_composite;
  std::optional<double> best_nr;
  std::optional<Image> best_render;
  int best_iteration = -1;
};

/// Students grouped by (teacher_id, level_index).
struct StudentPool {
  std::vector<double> levels;
  int teacher_count = 0;
  std::vector<StudentView> students;  ///< indexed by StudentView::id
  std::map<std::pair<int, int>, std::vector<int>> groups;

  std::size_t size() const noexcept { return students.size(); }
  const std::vector<int>& group(int teacher_id, int level_index) const;
  /// Index of `level` in `levels` (exact up to 1e-9), or nullopt.
  std::optional<int> level_index_of(double level) const;
};

}  // namespace curigs
