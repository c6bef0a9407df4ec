#pragma once

#include <iosfwd>
#include <nlohmann/json_fwd.hpp>
#include <string>

#include "curigs/image.hpp"

namespace curigs {

inline constexpr double kPsnrCap = 99.0;
inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;
inline constexpr double kMaskStdFloor = 1e-3;

/// 10 log10(1 / MSE) for images in [0,1]; identical images report kPsnrCap.
/// With a mask, the error is averaged over set pixels only.
double psnr(const Image& a, const Image& b);
double psnr(const Image& a, const Image& b, const Mask& mask);

/// Mean SSIM of the channel-mean images over every fully interior 11x11
/// Gaussian window (sigma 1.5, K1 0.01, K2 0.03, range 1).
double ssim(const Image& a, const Image& b);

struct SsimGradient {
  double value = 0.0;
  Image d_a;  ///< d ssim / d a, same shape as a
};
SsimGradient ssim_with_gradient(const Image& a, const Image& b);

/// 1 - Pearson correlation of two depth maps over valid pixels, in [0, 2].
/// Throws DegenerateDepth when either map has zero variance on the valid set.
double pearson_depth_loss(const Image& rendered, const Image& pseudo, const Mask* valid = nullptr);

struct PearsonGradient {
  double value = 0.0;
  Image d_rendered;  ///< pseudo depth is treated as constant
};
PearsonGradient pearson_depth_loss_with_gradient(const Image& rendered, const Image& pseudo,
                                                 const Mask* valid = nullptr);

/// Seam for learned metrics. Implementations must be deterministic and
/// satisfy perceptual_distance(x, x) == 0 and nr_score in [0, 1].
class MetricPlugin {
 public:
  virtual ~MetricPlugin() = default;
  virtual double perceptual_distance(const Image& a, const Image& b) const = 0;
  virtual double nr_score(const Image& img) const = 0;
  virtual std::string perceptual_name() const = 0;
};

/// Mean absolute difference of gradient-magnitude maps, averaged over three
/// dyadic scales (2x2 box downsampling between scales).
double builtin_perceptual(const Image& a, const Image& b);

/// Laplacian-variance sharpness s mapped through a logistic in log space,
/// s / (s + kNrSharpnessReference), times (0.5 + 0.5 e) where e is the
/// fraction of gray pixels inside [0.02, 0.98].
double builtin_nr_score(const Image& img);
inline constexpr double kNrSharpnessReference = 2e-3;

class BuiltinMetricPlugin final : public MetricPlugin {
 public:
  double perceptual_distance(const Image& a, const Image& b) const override { return builtin_perceptual(a, b); }
  double nr_score(const Image& img) const override { return builtin_nr_score(img); }
  std::string perceptual_name() const override { return "perc-proxy"; }
};

struct CompositeWeights {
  double ssim = 0.4;
  double perceptual = 0.4;
  double nr = 0.2;
};
/// Throws InvalidArgument unless weights are nonnegative and sum to 1.
void validate(const CompositeWeights& w);

struct MetricReport {
  double ssim = 0.0;
  double perceptual = 0.0;
  double nr_quality = 0.0;
  double composite = 0.0;  ///< lower is better
};

MetricReport composite_score(const Image& render, const Image& reference, const MetricPlugin& plugin,
                             const CompositeWeights& weights = {});

/// w_s (1 - ssim) + w_p perceptual + w_q (1 - nr).
double compose(const MetricReport& parts, const CompositeWeights& weights);

/// Background mask for a student render from teacher background statistics:
/// with mu, sigma the per-channel mean/std of `student_img` over the teacher
/// background pixels (sigma floored at 1e-3), pixel p is background (1) iff
/// |I(p) - mu| < tau * sigma on every channel.
/// `teacher_background` uses 1 for background. Throws EmptyBackground when
/// it has no set pixel.
Mask propagate_background_mask(const Image& teacher_img, const Mask& teacher_background,
                               const Image& student_img, double tau);

void write_metric_csv_header(std::ostream& out);
void write_metric_csv_row(std::ostream& out, int iteration, const std::string& view_id, const MetricReport& r);
nlohmann::json to_json(const MetricReport& r);

}  // namespace curigs
