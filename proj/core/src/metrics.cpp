#include "curigs/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <ostream>
#include <vector>

#include "curigs/error.hpp"

namespace curigs {

namespace {

void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b)) raise(Errc::ShapeMismatch, std::string(what) + ": image shapes differ");
}

double psnr_from_mse(double mse) {
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

const std::array<double, kSsimWindow>& ssim_kernel() {
  static const std::array<double, kSsimWindow> k = [] {
    std::array<double, kSsimWindow> w{};
    double total = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
      const double d = i - kSsimWindow / 2;
      w[i] = std::exp(-0.5 * d * d / (kSsimSigma * kSsimSigma));
      total += w[i];
    }
    for (auto& v : w) v /= total;
    return w;
  }();
  return k;
}

// Separable valid correlation of a 1-channel plane (w x h) -> (w-10) x (h-10).
std::vector<double> filter_valid(const std::vector<double>& src, int w, int h) {
  const auto& k = ssim_kernel();
  const int ow = w - kSsimWindow + 1, oh = h - kSsimWindow + 1;
  std::vector<double> tmp(static_cast<std::size_t>(ow) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < kSsimWindow; ++i) s += k[i] * src[static_cast<std::size_t>(y) * w + x + i];
      tmp[static_cast<std::size_t>(y) * ow + x] = s;
    }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < kSsimWindow; ++i) s += k[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
  return out;
}

// Adjoint of filter_valid: (w-10) x (h-10) -> w x h.
std::vector<double> filter_valid_adjoint(const std::vector<double>& src, int w, int h) {
  const auto& k = ssim_kernel();
  const int ow = w - kSsimWindow + 1, oh = h - kSsimWindow + 1;
  std::vector<double> tmp(static_cast<std::size_t>(ow) * h, 0.0);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      const double v = src[static_cast<std::size_t>(y) * ow + x];
      for (int i = 0; i < kSsimWindow; ++i) tmp[static_cast<std::size_t>(y + i) * ow + x] += k[i] * v;
    }
  std::vector<double> out(static_cast<std::size_t>(w) * h, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      const double v = tmp[static_cast<std::size_t>(y) * ow + x];
      for (int i = 0; i < kSsimWindow; ++i) out[static_cast<std::size_t>(y) * w + x + i] += k[i] * v;
    }
  return out;
}

struct SsimTerms {
  double value = 0.0;
  std::vector<double> d_m1, d_m2, d_m12;  // per window, unnormalized
  int w = 0, h = 0;
};

SsimTerms ssim_terms(const Image& a, const Image& b, bool want_grad) {
  require_same_shape(a, b, "ssim");
  if (std::min(a.width(), a.height()) < kSsimWindow) {
    raise(Errc::TooSmall, "ssim needs images of at least 11x11");
  }
  const int w = a.width(), h = a.height();
  const Image ga = to_gray(a), gb = to_gray(b);
  const std::vector<double>& x = ga.values();
  const std::vector<double>& y = gb.values();
  std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto mx = filter_valid(x, w, h), my = filter_valid(y, w, h);
  const auto mxx = filter_valid(xx, w, h), myy = filter_valid(yy, w, h), mxy = filter_valid(xy, w, h);
  const double c1 = kSsimK1 * kSsimK1, c2 = kSsimK2 * kSsimK2;

  SsimTerms t;
  t.w = w;
  t.h = h;
  const std::size_t n = mx.size();
  if (want_grad) {
    t.d_m1.resize(n);
    t.d_m2.resize(n);
    t.d_m12.resize(n);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ux = mx[i], uy = my[i];
    const double vx = mxx[i] - ux * ux, vy = myy[i] - uy * uy, cxy = mxy[i] - ux * uy;
    const double a1 = 2.0 * ux * uy + c1, a2 = 2.0 * cxy + c2;
    const double b1 = ux * ux + uy * uy + c1, b2 = vx + vy + c2;
    const double s = (a1 * a2) / (b1 * b2);
    total += s;
    if (want_grad) {
      const double ds_dux = 2.0 * uy * a2 / (b1 * b2) - s * 2.0 * ux / b1;
      const double ds_dvx = -s / b2;
      const double ds_dcxy = 2.0 * a1 / (b1 * b2);
      t.d_m1[i] = ds_dux - 2.0 * ux * ds_dvx - uy * ds_dcxy;
      t.d_m2[i] = ds_dvx;
      t.d_m12[i] = ds_dcxy;
    }
  }
  t.value = total / static_cast<double>(n);
  return t;
}

}  // namespace

double psnr(const Image& a, const Image& b) {
  require_same_shape(a, b, "psnr");
  double se = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    se += d * d;
  }
  return psnr_from_mse(se / static_cast<double>(a.size()));
}

double psnr(const Image& a, const Image& b, const Mask& mask) {
  require_same_shape(a, b, "psnr");
  if (!mask.same_extent(a.width(), a.height())) raise(Errc::ShapeMismatch, "psnr: mask extent differs");
  const int c = a.channels();
  double se = 0.0;
  std::size_t count = 0;
  for (std::size_t p = 0; p < a.pixel_count(); ++p) {
    if (!mask[p]) continue;
    for (int k = 0; k < c; ++k) {
      const double d = a[p * c + k] - b[p * c + k];
      se += d * d;
    }
    count += static_cast<std::size_t>(c);
  }
  if (count == 0) raise(Errc::InvalidArgument, "psnr: empty mask");
  return psnr_from_mse(se / static_cast<double>(count));
}

double ssim(const Image& a, const Image& b) { return ssim_terms(a, b, false).value; }

SsimGradient ssim_with_gradient(const Image& a, const Image& b) {
  SsimTerms t = ssim_terms(a, b, true);
  const double inv_n = 1.0 / static_cast<double>(t.d_m1.size());
  const auto g1 = filter_valid_adjoint(t.d_m1, t.w, t.h);
  const auto g2 = filter_valid_adjoint(t.d_m2, t.w, t.h);
  const auto g12 = filter_valid_adjoint(t.d_m12, t.w, t.h);
  const Image ga = to_gray(a), gb = to_gray(b);
  SsimGradient out;
  out.value = t.value;
  out.d_a = Image(a.width(), a.height(), a.channels());
  const int c = a.channels();
  const double per_channel = inv_n / c;
  for (std::size_t p = 0; p < a.pixel_count(); ++p) {
    const double d_gray = g1[p] + 2.0 * ga[p] * g2[p] + gb[p] * g12[p];
    for (int k = 0; k < c; ++k) out.d_a[p * c + k] = d_gray * per_channel;
  }
  return out;
}

namespace {

struct PearsonStats {
  double rho = 0.0;
  double mean_r = 0.0, mean_p = 0.0;
  double srr = 0.0, spp = 0.0;
  std::size_t count = 0;
};

PearsonStats pearson_stats(const Image& rendered, const Image& pseudo, const Mask* valid) {
  if (!rendered.same_shape(pseudo) || rendered.channels() != 1) {
    raise(Errc::ShapeMismatch, "pearson: depth maps must share a 1-channel shape");
  }
  if (valid && !valid->same_extent(rendered.width(), rendered.height())) {
    raise(Errc::ShapeMismatch, "pearson: mask extent differs");
  }
  PearsonStats st;
  double sr = 0.0, sp = 0.0, max_r = 0.0, max_p = 0.0;
  for (std::size_t i = 0; i < rendered.size(); ++i) {
    if (valid && !(*valid)[i]) continue;
    sr += rendered[i];
    sp += pseudo[i];
    max_r = std::max(max_r, std::abs(rendered[i]));
    max_p = std::max(max_p, std::abs(pseudo[i]));
    ++st.count;
  }
  if (st.count < 2) raise(Errc::DegenerateDepth, "pearson: fewer than two valid pixels");
  st.mean_r = sr / st.count;
  st.mean_p = sp / st.count;
  double srp = 0.0;
  for (std::size_t i = 0; i < rendered.size(); ++i) {
    if (valid && !(*valid)[i]) continue;
    const double dr = rendered[i] - st.mean_r, dp = pseudo[i] - st.mean_p;
    st.srr += dr * dr;
    st.spp += dp * dp;
    srp += dr * dp;
  }
  // Zero variance up to rounding of the mean.
  const double n = static_cast<double>(st.count);
  const double tol_r = n * (1e-12 * max_r) * (1e-12 * max_r);
  const double tol_p = n * (1e-12 * max_p) * (1e-12 * max_p);
  if (!(st.srr > tol_r) || !(st.spp > tol_p)) {
    raise(Errc::DegenerateDepth, "pearson: depth map is constant over the valid set");
  }
  st.rho = std::clamp(srp / std::sqrt(st.srr * st.spp), -1.0, 1.0);
  return st;
}

}  // namespace

double pearson_depth_loss(const Image& rendered, const Image& pseudo, const Mask* valid) {
  return 1.0 - pearson_stats(rendered, pseudo, valid).rho;
}

PearsonGradient pearson_depth_loss_with_gradient(const Image& rendered, const Image& pseudo, const Mask* valid) {
  const PearsonStats st = pearson_stats(rendered, pseudo, valid);
  PearsonGradient out;
  out.value = 1.0 - st.rho;
  out.d_rendered = Image(rendered.width(), rendered.height(), 1);
  const double norm = 1.0 / std::sqrt(st.srr * st.spp);
  for (std::size_t i = 0; i < rendered.size(); ++i) {
    if (valid && !(*valid)[i]) continue;
    const double dr = rendered[i] - st.mean_r, dp = pseudo[i] - st.mean_p;
    out.d_rendered[i] = -(dp * norm - st.rho * dr / st.srr);
  }
  return out;
}

namespace {

Image downsample2(const Image& gray) {
  const int w = gray.width() / 2, h = gray.height() / 2;
  Image out(w, h, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      out.at(x, y) = 0.25 * (gray.at(2 * x, 2 * y) + gray.at(2 * x + 1, 2 * y) + gray.at(2 * x, 2 * y + 1) +
                             gray.at(2 * x + 1, 2 * y + 1));
    }
  return out;
}

Image gradient_magnitude(const Image& gray) {
  const int w = gray.width() - 1, h = gray.height() - 1;
  Image out(w, h, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double gx = gray.at(x + 1, y) - gray.at(x, y);
      const double gy = gray.at(x, y + 1) - gray.at(x, y);
      out.at(x, y) = std::sqrt(gx * gx + gy * gy);
    }
  return out;
}

}  // namespace

double builtin_perceptual(const Image& a, const Image& b) {
  require_same_shape(a, b, "perceptual");
  Image ga = to_gray(a), gb = to_gray(b);
  double total = 0.0;
  int scales = 0;
  for (int s = 0; s < 3; ++s) {
    if (ga.width() < 2 || ga.height() < 2) break;
    const Image ma = gradient_magnitude(ga), mb = gradient_magnitude(gb);
    double diff = 0.0;
    for (std::size_t i = 0; i < ma.size(); ++i) diff += std::abs(ma[i] - mb[i]);
    total += diff / static_cast<double>(ma.size());
    ++scales;
    ga = downsample2(ga);
    gb = downsample2(gb);
  }
  return scales ? total / scales : 0.0;
}

double builtin_nr_score(const Image& img) {
  const Image g = to_gray(img);
  const int w = g.width(), h = g.height();
  std::size_t exposed = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] >= 0.02 && g[i] <= 0.98) ++exposed;
  }
  const double exposure = g.empty() ? 0.0 : static_cast<double>(exposed) / static_cast<double>(g.size());
  if (w < 3 || h < 3) return 0.0;
  double sum = 0.0, sum_sq = 0.0;
  std::size_t n = 0;
  for (int y = 1; y < h - 1; ++y)
    for (int x = 1; x < w - 1; ++x) {
      const double lap = 4.0 * g.at(x, y) - g.at(x - 1, y) - g.at(x + 1, y) - g.at(x, y - 1) - g.at(x, y + 1);
      sum += lap;
      sum_sq += lap * lap;
      ++n;
    }
  const double mean = sum / n;
  const double variance = std::max(0.0, sum_sq / n - mean * mean);
  const double sharpness = variance / (variance + kNrSharpnessReference);
  return sharpness * (0.5 + 0.5 * exposure);
}

void validate(const CompositeWeights& w) {
  if (w.ssim < 0.0 || w.perceptual < 0.0 || w.nr < 0.0) {
    raise(Errc::InvalidArgument, "composite weights must be nonnegative");
  }
  if (std::abs(w.ssim + w.perceptual + w.nr - 1.0) > 1e-9) {
    raise(Errc::InvalidArgument, "composite weights must sum to 1");
  }
}

double compose(const MetricReport& r, const CompositeWeights& w) {
  return w.ssim * (1.0 - r.ssim) + w.perceptual * r.perceptual + w.nr * (1.0 - r.nr_quality);
}

MetricReport composite_score(const Image& render, const Image& reference, const MetricPlugin& plugin,
                             const CompositeWeights& weights) {
  validate(weights);
  require_same_shape(render, reference, "composite_score");
  MetricReport r;
  r.ssim = ssim(render, reference);
  r.perceptual = plugin.perceptual_distance(render, reference);
  r.nr_quality = plugin.nr_score(render);
  r.composite = compose(r, weights);
  return r;
}

Mask propagate_background_mask(const Image& teacher_img, const Mask& teacher_background, const Image& student_img,
                               double tau) {
  require_same_shape(teacher_img, student_img, "propagate_background_mask");
  if (!teacher_background.same_extent(teacher_img.width(), teacher_img.height())) {
    raise(Errc::ShapeMismatch, "propagate_background_mask: mask extent differs");
  }
  const std::size_t n_bg = teacher_background.count();
  if (n_bg == 0) raise(Errc::EmptyBackground, "teacher mask has no background pixel");
  const int c = student_img.channels();
  std::vector<double> mean(c, 0.0), sq(c, 0.0);
  for (std::size_t p = 0; p < teacher_background.pixel_count(); ++p) {
    if (!teacher_background[p]) continue;
    for (int k = 0; k < c; ++k) mean[k] += student_img[p * c + k];
  }
  for (int k = 0; k < c; ++k) mean[k] /= static_cast<double>(n_bg);
  for (std::size_t p = 0; p < teacher_background.pixel_count(); ++p) {
    if (!teacher_background[p]) continue;
    for (int k = 0; k < c; ++k) {
      const double d = student_img[p * c + k] - mean[k];
      sq[k] += d * d;
    }
  }
  std::vector<double> bound(c);
  for (int k = 0; k < c; ++k) {
    bound[k] = tau * std::max(kMaskStdFloor, std::sqrt(sq[k] / static_cast<double>(n_bg)));
  }
  Mask out(student_img.width(), student_img.height());
  for (std::size_t p = 0; p < out.pixel_count(); ++p) {
    bool background = true;
    for (int k = 0; k < c && background; ++k) {
      background = std::abs(student_img[p * c + k] - mean[k]) < bound[k];
    }
    out[p] = background ? 1 : 0;
  }
  return out;
}

void write_metric_csv_header(std::ostream& out) { out << "iteration,view_id,ssim,perceptual,nr_quality,composite\n"; }

void write_metric_csv_row(std::ostream& out, int iteration, const std::string& view_id, const MetricReport& r) {
  const auto flags = out.flags();
  const auto prec = out.precision();
  out << std::setprecision(17) << iteration << ',' << view_id << ',' << r.ssim << ',' << r.perceptual << ','
      << r.nr_quality << ',' << r.composite << '\n';
  out.flags(flags);
  out.precision(prec);
}

nlohmann::json to_json(const MetricReport& r) {
  return {{"ssim", r.ssim}, {"perceptual", r.perceptual}, {"nr_quality", r.nr_quality}, {"composite", r.composite}};
}

}  // namespace curigs
