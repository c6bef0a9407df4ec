#pragma once

#include <memory>
#include <string>

#include "curigs/camera.hpp"
#include "curigs/gaussians.hpp"
#include "curigs/image.hpp"
#include "curigs/rasterizer.hpp"
#include "curigs/train_view.hpp"

namespace curigs {

struct LossWeights {
  double lambda_s = 0.2;   ///< D-SSIM share of the photometric loss
  double lambda_d = 0.05;  ///< student depth-correlation weight
  double lambda_p = 1.0;   ///< student cross-model photometric weight
  double lambda_1 = 1.0;   ///< all training views (teachers + promoted)
  double lambda_2 = 1.0;   ///< teacher views only
  double lambda_3 = 0.5;   ///< student term
};

void validate(const LossWeights& w);

/// Pseudo-depth source for student views. `view` is a pose hint; image-only
/// estimators ignore it.
class DepthOracle {
 public:
  virtual ~DepthOracle() = default;
  virtual Image predict(const Image& color, const CameraPose& view) const = 0;
  virtual std::string name() const = 0;
};

/// Constant-zero depth; the depth term is always skipped with it.
class NullDepthOracle final : public DepthOracle {
 public:
  Image predict(const Image& color, const CameraPose&) const override {
    return Image(color.width(), color.height(), 1);
  }
  std::string name() const override { return "null"; }
};

struct ImageLoss {
  double value = 0.0;
  Image d_render;
};

/// (1 - lambda_s) L1 + lambda_s (1 - SSIM). With a mask, L1 averages over the
/// set pixels and SSIM compares the mask-multiplied images.
ImageLoss loss_recon(const Image& render, const Image& reference, double lambda_s, const Mask* mask = nullptr);

struct StudentLoss {
  double value = 0.0;
  double depth_term = 0.0;   ///< unweighted Pearson loss (0 when skipped)
  double photo_term = 0.0;   ///< unweighted cross-model photometric loss
  bool depth_skipped = false;
  Image d_color_a, d_depth_a, d_color_b;  ///< d_color_b empty without a partner
};

/// lambda_d pearson(a.depth, oracle(a.color)) + lambda_p photometric(a.color, b.color).
/// The pseudo depth is a constant; a degenerate map drops the depth term.
/// `b` may be null (single-model training), dropping the photometric term.
StudentLoss loss_student(const RenderOutput& a, const RenderOutput* b, const Image& pseudo_depth,
                         const LossWeights& w);
StudentLoss loss_student(const RenderOutput& a, const RenderOutput* b, const DepthOracle& oracle,
                         const CameraPose& pose, const LossWeights& w);

/// Views drawn for one iteration. `student` is null when the curriculum is idle.
struct SampledViews {
  const TrainView* train_view = nullptr;
  const TrainView* gt_view = nullptr;
  const CameraPose* student = nullptr;
};

struct TotalLoss {
  double value = 0.0;
  double train_term = 0.0;  ///< summed over models
  double gt_term = 0.0;
  double student_term = 0.0;
  bool depth_skipped = false;
  RenderGradients grads_a;
  RenderGradients grads_b;
  std::unique_ptr<RenderOutput> student_render_a;  ///< kept for scoring
};

/// sum over models of (lambda_1 L_train + lambda_2 L_gt) + lambda_3 L_stu, with
/// gradients for each model. `model_b` may be null.
TotalLoss total_loss(const GaussianCloud& model_a, const GaussianCloud* model_b, const SampledViews& views,
                     const DepthOracle& oracle, const LossWeights& w);

}  // namespace curigs
