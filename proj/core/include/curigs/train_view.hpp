#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "curigs/camera.hpp"
#include "curigs/image.hpp"

namespace curigs {

enum class ViewKind { Teacher, PromotedStudent };

/// A supervised view. Promoted students carry a frozen pseudo-reference and
/// must not be modified after creation; `reference_hash` pins its content.
struct TrainView {
  std::string id;
  CameraPose pose;
  Image reference;
  ViewKind kind = ViewKind::Teacher;
  std::optional<Mask> mask;  ///< foreground (1) pixels supervised when present
  int teacher_id = -1;       ///< teacher index; for students, the originating teacher
  double level = 0.0;        ///< promoted students only
  std::uint64_t reference_hash = 0;

  bool reference_intact() const { return content_hash(reference) == reference_hash; }
};

}  // namespace curigs
