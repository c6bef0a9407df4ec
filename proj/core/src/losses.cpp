#include "curigs/losses.hpp"

#include <cmath>

#include "curigs/error.hpp"
#include "curigs/metrics.hpp"

namespace curigs {

void validate(const LossWeights& w) {
  if (w.lambda_d < 0 || w.lambda_p < 0 || w.lambda_1 < 0 || w.lambda_2 < 0 || w.lambda_3 < 0) {
    raise(Errc::InvalidConfig, "loss weights must be nonnegative");
  }
  if (!(w.lambda_s >= 0.0 && w.lambda_s <= 1.0)) raise(Errc::InvalidConfig, "lambda_s must lie in [0, 1]");
}

namespace {

double sign(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

ImageLoss loss_recon(const Image& render, const Image& reference, double lambda_s, const Mask* mask) {
  if (!render.same_shape(reference)) raise(Errc::ShapeMismatch, "loss_recon: image shapes differ");
  if (mask && !mask->same_extent(render.width(), render.height())) {
    raise(Errc::ShapeMismatch, "loss_recon: mask extent differs");
  }
  const int c = render.channels();
  ImageLoss out;
  out.d_render = Image(render.width(), render.height(), c);

  std::size_t count = 0;
  double l1 = 0.0;
  for (std::size_t p = 0; p < render.pixel_count(); ++p) {
    if (mask && !(*mask)[p]) continue;
    for (int k = 0; k < c; ++k) l1 += std::abs(render[p * c + k] - reference[p * c + k]);
    count += static_cast<std::size_t>(c);
  }
  if (count == 0) return out;
  const double inv = 1.0 / static_cast<double>(count);
  l1 *= inv;
  if (lambda_s < 1.0) {
    const double g = (1.0 - lambda_s) * inv;
    for (std::size_t p = 0; p < render.pixel_count(); ++p) {
      if (mask && !(*mask)[p]) continue;
      for (int k = 0; k < c; ++k) out.d_render[p * c + k] = g * sign(render[p * c + k] - reference[p * c + k]);
    }
  }

  double dssim = 0.0;
  if (lambda_s > 0.0) {
    SsimGradient sg;
    if (mask) {
      Image rm = render, tm = reference;
      for (std::size_t p = 0; p < render.pixel_count(); ++p) {
        if ((*mask)[p]) continue;
        for (int k = 0; k < c; ++k) rm[p * c + k] = tm[p * c + k] = 0.0;
      }
      sg = ssim_with_gradient(rm, tm);
      for (std::size_t p = 0; p < render.pixel_count(); ++p) {
        if ((*mask)[p]) continue;
        for (int k = 0; k < c; ++k) sg.d_a[p * c + k] = 0.0;
      }
    } else {
      sg = ssim_with_gradient(render, reference);
    }
    dssim = 1.0 - sg.value;
    for (std::size_t i = 0; i < out.d_render.size(); ++i) out.d_render[i] -= lambda_s * sg.d_a[i];
  }
  out.value = (1.0 - lambda_s) * l1 + lambda_s * dssim;
  return out;
}

StudentLoss loss_student(const RenderOutput& a, const RenderOutput* b, const Image& pseudo_depth,
                         const LossWeights& w) {
  StudentLoss out;
  out.d_color_a = Image(a.color.width(), a.color.height(), 3);
  out.d_depth_a = Image(a.depth.width(), a.depth.height(), 1);

  if (w.lambda_d > 0.0) {
    try {
      const PearsonGradient pg = pearson_depth_loss_with_gradient(a.depth, pseudo_depth);
      out.depth_term = pg.value;
      for (std::size_t i = 0; i < out.d_depth_a.size(); ++i) out.d_depth_a[i] = w.lambda_d * pg.d_rendered[i];
    } catch (const Error& e) {
      if (e.code() != Errc::DegenerateDepth) throw;
      out.depth_skipped = true;
    }
  }

  if (b && w.lambda_p > 0.0) {
    if (!a.color.same_shape(b->color)) raise(Errc::ShapeMismatch, "loss_student: renders differ in shape");
    const ImageLoss ab = loss_recon(a.color, b->color, w.lambda_s);
    const ImageLoss ba = loss_recon(b->color, a.color, w.lambda_s);
    out.photo_term = ab.value;
    for (std::size_t i = 0; i < out.d_color_a.size(); ++i) out.d_color_a[i] = w.lambda_p * ab.d_render[i];
    out.d_color_b = ba.d_render;
    for (std::size_t i = 0; i < out.d_color_b.size(); ++i) out.d_color_b[i] *= w.lambda_p;
  }
  out.value = w.lambda_d * out.depth_term + w.lambda_p * out.photo_term;
  return out;
}

StudentLoss loss_student(const RenderOutput& a, const RenderOutput* b, const DepthOracle& oracle,
                         const CameraPose& pose, const LossWeights& w) {
  const Image pseudo = w.lambda_d > 0.0 ? oracle.predict(a.color, pose) : Image(a.depth.width(), a.depth.height(), 1);
  return loss_student(a, b, pseudo, w);
}

namespace {

// Adds the photometric supervision of one view, weighted, to a model's gradient.
double supervise(const GaussianCloud& cloud, const TrainView& view, double weight, double lambda_s,
                 RenderGradients& grads) {
  const RenderOutput r = render(cloud, view.pose);
  ImageLoss l = loss_recon(r.color, view.reference, lambda_s, view.mask ? &*view.mask : nullptr);
  for (std::size_t i = 0; i < l.d_render.size(); ++i) l.d_render[i] *= weight;
  grads += render_backward(cloud, view.pose, r, l.d_render, Image());
  return l.value;
}

}  // namespace

TotalLoss total_loss(const GaussianCloud& model_a, const GaussianCloud* model_b, const SampledViews& views,
                     const DepthOracle& oracle, const LossWeights& w) {
  if (!views.train_view || !views.gt_view) raise(Errc::InvalidArgument, "total_loss: missing sampled views");
  TotalLoss out;
  out.grads_a = RenderGradients(model_a.size());
  if (model_b) out.grads_b = RenderGradients(model_b->size());

  auto supervise_model = [&](const GaussianCloud& cloud, RenderGradients& grads) {
    if (views.train_view == views.gt_view) {
      const double l = supervise(cloud, *views.train_view, w.lambda_1 + w.lambda_2, w.lambda_s, grads);
      out.train_term += l;
      out.gt_term += l;
    } else {
      if (w.lambda_1 > 0.0) out.train_term += supervise(cloud, *views.train_view, w.lambda_1, w.lambda_s, grads);
      if (w.lambda_2 > 0.0) out.gt_term += supervise(cloud, *views.gt_view, w.lambda_2, w.lambda_s, grads);
    }
  };
  supervise_model(model_a, out.grads_a);
  if (model_b) supervise_model(*model_b, out.grads_b);

  if (views.student) {
    const CameraPose& pose = *views.student;
    auto ra = std::make_unique<RenderOutput>(render(model_a, pose));
    std::unique_ptr<RenderOutput> rb;
    if (model_b) rb = std::make_unique<RenderOutput>(render(*model_b, pose));
    if (w.lambda_3 > 0.0) {
      StudentLoss sl = loss_student(*ra, rb.get(), oracle, pose, w);
      out.student_term = sl.value;
      out.depth_skipped = sl.depth_skipped;
      for (std::size_t i = 0; i < sl.d_color_a.size(); ++i) sl.d_color_a[i] *= w.lambda_3;
      for (std::size_t i = 0; i < sl.d_depth_a.size(); ++i) sl.d_depth_a[i] *= w.lambda_3;
      out.grads_a += render_backward(model_a, pose, *ra, sl.d_color_a, sl.d_depth_a);
      if (rb && !sl.d_color_b.empty()) {
        for (std::size_t i = 0; i < sl.d_color_b.size(); ++i) sl.d_color_b[i] *= w.lambda_3;
        out.grads_b += render_backward(*model_b, pose, *rb, sl.d_color_b, Image());
      }
    }
    out.student_render_a = std::move(ra);
  }

  out.value = w.lambda_1 * out.train_term + w.lambda_2 * out.gt_term + w.lambda_3 * out.student_term;
  if (views.train_view == views.gt_view) {
    // train_term and gt_term hold the same loss; the combined weight was applied once.
    out.value = (w.lambda_1 + w.lambda_2) * out.train_term + w.lambda_3 * out.student_term;
  }
  return out;
}

}  // namespace curigs
