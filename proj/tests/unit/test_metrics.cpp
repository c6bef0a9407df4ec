#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "curigs/error.hpp"
#include "curigs/metrics.hpp"
#include "naive_ssim.hpp"
#include "random_scene.hpp"

namespace {

using namespace curigs;
using testing_support::random_image;

// Smooth structured image with edges, used as a stand-in natural image.
Image test_pattern(int w, int h) {
  Image img(w, h, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double u = static_cast<double>(x) / w, v = static_cast<double>(y) / h;
      img.at(x, y, 0) = 0.5 + 0.4 * std::sin(12.0 * u) * std::cos(7.0 * v);
      img.at(x, y, 1) = ((x / 6 + y / 6) % 2) ? 0.8 : 0.2;
      img.at(x, y, 2) = std::pow(u * v, 0.5);
    }
  return img;
}

Image checkerboard(int w, int h, bool invert) {
  Image img(w, h, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img.at(x, y) = (((x + y) % 2 == 0) != invert) ? 1.0 : 0.0;
  return img;
}

Image random_depth(std::mt19937_64& rng, int w, int h) {
  return random_image(rng, w, h, 1, 0.5, 6.0);
}

TEST(Psnr, IdenticalImagesAreCapped) {
  std::mt19937_64 rng(1);
  const Image a = random_image(rng, 8, 8, 3);
  EXPECT_EQ(psnr(a, a), kPsnrCap);
}

TEST(Psnr, UniformHalfGray) {
  EXPECT_NEAR(psnr(Image(4, 4, 3, 0.0), Image(4, 4, 3, 0.5)), 10.0 * std::log10(4.0), 1e-12);
}

TEST(Psnr, MatchesDirectSum) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 20; ++i) {
    const Image a = random_image(rng, 17, 9, 3), b = random_image(rng, 17, 9, 3);
    double se = 0.0;
    for (int y = 0; y < 9; ++y)
      for (int x = 0; x < 17; ++x)
        for (int c = 0; c < 3; ++c) se += std::pow(a.at(x, y, c) - b.at(x, y, c), 2);
    EXPECT_NEAR(psnr(a, b), 10.0 * std::log10(1.0 / (se / (17 * 9 * 3))), 1e-9);
  }
}

TEST(Psnr, MaskedAveragesOverSetPixels) {
  Image a(4, 1, 1, 0.0), b(4, 1, 1, 0.0);
  b.at(0, 0) = 0.5;  // outside mask
  b.at(2, 0) = 0.1;
  Mask m(4, 1, 0);
  m.at(1, 0) = m.at(2, 0) = 1;
  EXPECT_NEAR(psnr(a, b, m), 10.0 * std::log10(1.0 / (0.01 / 2)), 1e-12);
  EXPECT_THROW(psnr(a, b, Mask(4, 1, 0)), Error);
}

TEST(Psnr, ShapeMismatch) {
  try {
    psnr(Image(4, 4, 3), Image(4, 5, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ShapeMismatch);
  }
}

TEST(Ssim, IdentityIsOne) {
  const Image a = test_pattern(32, 24);
  EXPECT_NEAR(ssim(a, a), 1.0, 1e-9);
}

TEST(Ssim, InvertedCheckerboardIsNegative) {
  EXPECT_LT(ssim(checkerboard(20, 20, false), checkerboard(20, 20, true)), 0.0);
}

TEST(Ssim, MatchesDirectWindowOracle) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 10; ++i) {
    const Image a = random_image(rng, 23, 17, 3), b = random_image(rng, 23, 17, 3);
    EXPECT_NEAR(ssim(a, b), oracle::naive_ssim(a, b), 1e-12);
  }
  const Image p = test_pattern(30, 30);
  const Image q = gaussian_blur(p, 1.0);
  EXPECT_NEAR(ssim(p, q), oracle::naive_ssim(p, q), 1e-12);
}

TEST(Ssim, BlurOrdering) {
  const Image a = test_pattern(48, 48);
  const double s1 = ssim(a, gaussian_blur(a, 1.0));
  const double s3 = ssim(a, gaussian_blur(a, 3.0));
  EXPECT_LT(s1, 1.0);
  EXPECT_GT(s1, s3);
}

TEST(Ssim, Symmetric) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 10; ++i) {
    const Image a = random_image(rng, 16, 16, 3), b = random_image(rng, 16, 16, 3);
    EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-12);
  }
}

TEST(Ssim, TooSmallAndShapeErrors) {
  try {
    ssim(Image(10, 40, 3), Image(10, 40, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::TooSmall);
  }
  EXPECT_NO_THROW(ssim(Image(11, 11, 3), Image(11, 11, 3)));
  EXPECT_THROW(ssim(Image(12, 12, 3), Image(12, 12, 1)), Error);
}

TEST(Ssim, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  const Image a = random_image(rng, 14, 13, 3), b = random_image(rng, 14, 13, 3);
  const SsimGradient g = ssim_with_gradient(a, b);
  EXPECT_NEAR(g.value, ssim(a, b), 1e-15);
  const double h = 1e-6;
  for (std::size_t i = 0; i < a.size(); i += 7) {
    Image p = a, m = a;
    p[i] += h;
    m[i] -= h;
    const double fd = (ssim(p, b) - ssim(m, b)) / (2 * h);
    EXPECT_NEAR(g.d_a[i], fd, 1e-7 + 1e-5 * std::abs(fd));
  }
}

TEST(Pearson, IdentityAndAnticorrelation) {
  std::mt19937_64 rng(6);
  const Image d = random_depth(rng, 16, 16);
  EXPECT_NEAR(pearson_depth_loss(d, d), 0.0, 1e-12);
  Image neg = d;
  for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -d[i] + 7.0;
  EXPECT_NEAR(pearson_depth_loss(d, neg), 2.0, 1e-12);
}

TEST(Pearson, AffineInvariance) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ua(1e-6, 10.0), ub(-5.0, 5.0);
  for (int i = 0; i < 100; ++i) {
    const Image d = random_depth(rng, 20, 15);
    const double a = ua(rng), b = ub(rng);
    Image t = d;
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = a * d[k] + b;
    EXPECT_NEAR(pearson_depth_loss(d, t), 0.0, 1e-9);
  }
}

TEST(Pearson, MatchesDirectFormula) {
  std::mt19937_64 rng(8);
  const Image r = random_depth(rng, 10, 10), p = random_depth(rng, 10, 10);
  double mr = 0, mp = 0;
  for (std::size_t i = 0; i < r.size(); ++i) mr += r[i], mp += p[i];
  mr /= r.size(), mp /= p.size();
  double srp = 0, srr = 0, spp = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    srp += (r[i] - mr) * (p[i] - mp);
    srr += (r[i] - mr) * (r[i] - mr);
    spp += (p[i] - mp) * (p[i] - mp);
  }
  EXPECT_NEAR(pearson_depth_loss(r, p), 1.0 - srp / std::sqrt(srr * spp), 1e-12);
}

TEST(Pearson, ValidMaskRestrictsPixels) {
  std::mt19937_64 rng(9);
  Image r = random_depth(rng, 8, 8), p = r;
  Mask m(8, 8, 1);
  for (int x = 0; x < 8; ++x) {
    m.at(x, 0) = 0;
    p.at(x, 0) = -100.0 * (x + 1);  // corrupt only masked-out pixels
  }
  EXPECT_NEAR(pearson_depth_loss(r, p, &m), 0.0, 1e-12);
  EXPECT_GT(pearson_depth_loss(r, p), 0.1);
}

TEST(Pearson, DegenerateDepthOnConstantMaps) {
  std::mt19937_64 rng(10);
  const Image d = random_depth(rng, 8, 8);
  for (double v : {0.0, 1.0, 3.7, 1e6}) {
    const Image c(8, 8, 1, v);
    for (const auto& [x, y] : {std::pair{&c, &d}, std::pair{&d, &c}}) {
      try {
        pearson_depth_loss(*x, *y);
        ADD_FAILURE() << "no throw for constant " << v;
      } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::DegenerateDepth);
      }
    }
  }
}

TEST(Pearson, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(11);
  const Image r = random_depth(rng, 9, 7), p = random_depth(rng, 9, 7);
  const PearsonGradient g = pearson_depth_loss_with_gradient(r, p);
  const double h = 1e-6;
  for (std::size_t i = 0; i < r.size(); ++i) {
    Image a = r, b = r;
    a[i] += h;
    b[i] -= h;
    const double fd = (pearson_depth_loss(a, p) - pearson_depth_loss(b, p)) / (2 * h);
    EXPECT_NEAR(g.d_rendered[i], fd, 1e-7 + 1e-5 * std::abs(fd));
  }
}

TEST(BuiltinPlugin, PerceptualIdentityAndShape) {
  std::mt19937_64 rng(12);
  const Image a = random_image(rng, 20, 20, 3);
  EXPECT_EQ(builtin_perceptual(a, a), 0.0);
  EXPECT_GT(builtin_perceptual(a, gaussian_blur(a, 2.0)), 0.0);
  EXPECT_THROW(builtin_perceptual(a, Image(20, 21, 3)), Error);
  BuiltinMetricPlugin plugin;
  EXPECT_EQ(plugin.perceptual_name(), "perc-proxy");
}

TEST(BuiltinPlugin, NrScoreOrderingAndRange) {
  const Image img = test_pattern(64, 64);
  EXPECT_LT(builtin_nr_score(Image(32, 32, 3, 0.5)), 1e-12);
  EXPECT_GT(builtin_nr_score(img), builtin_nr_score(gaussian_blur(img, 4.0)));
  std::mt19937_64 rng(13);
  for (int i = 0; i < 10; ++i) {
    const double s = builtin_nr_score(random_image(rng, 24, 24, 3));
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
  }
}

struct FixedPlugin final : MetricPlugin {
  double perc = 0.0, nr = 1.0;
  double perceptual_distance(const Image&, const Image&) const override { return perc; }
  double nr_score(const Image&) const override { return nr; }
  std::string perceptual_name() const override { return "fixed"; }
};

TEST(Composite, PerfectRenderScoresZero) {
  const Image a = test_pattern(16, 16);
  FixedPlugin plugin;
  EXPECT_NEAR(composite_score(a, a, plugin).composite, 0.0, 1e-9);
}

TEST(Composite, WeightIsolation) {
  std::mt19937_64 rng(14);
  const Image a = random_image(rng, 16, 16, 3), b = random_image(rng, 16, 16, 3);
  FixedPlugin plugin;
  plugin.perc = 0.3;
  plugin.nr = 0.25;
  EXPECT_NEAR(composite_score(a, b, plugin, {1, 0, 0}).composite, 1.0 - ssim(a, b), 1e-15);
  EXPECT_NEAR(composite_score(a, b, plugin, {0, 1, 0}).composite, 0.3, 1e-15);
  EXPECT_NEAR(composite_score(a, b, plugin, {0, 0, 1}).composite, 0.75, 1e-15);
}

TEST(Composite, RecomposesWithBuiltinPlugin) {
  std::mt19937_64 rng(15);
  const Image a = random_image(rng, 20, 20, 3), b = random_image(rng, 20, 20, 3);
  BuiltinMetricPlugin plugin;
  const MetricReport r = composite_score(a, b, plugin);
  const double hand = 0.4 * (1.0 - ssim(a, b)) + 0.4 * builtin_perceptual(a, b) + 0.2 * (1.0 - builtin_nr_score(a));
  EXPECT_NEAR(r.composite, hand, 1e-12);
  EXPECT_EQ(r.ssim, ssim(a, b));
}

TEST(Composite, MonotoneInPerceptual) {
  const Image a = test_pattern(16, 16);
  FixedPlugin plugin;
  double prev = -1.0;
  for (double p : {0.0, 0.1, 0.2, 0.5, 2.0}) {
    plugin.perc = p;
    const double c = composite_score(a, a, plugin).composite;
    EXPECT_GE(c, prev);
    prev = c;
  }
}

TEST(Composite, WeightValidation) {
  EXPECT_THROW(validate(CompositeWeights{0.5, 0.5, 0.5}), Error);
  EXPECT_THROW(validate(CompositeWeights{1.2, -0.2, 0.0}), Error);
  EXPECT_NO_THROW(validate(CompositeWeights{}));
}

TEST(MetricSerialization, CsvAndJson) {
  MetricReport r{0.5, 0.25, 0.75, 0.125};
  std::ostringstream s;
  write_metric_csv_header(s);
  write_metric_csv_row(s, 12, "student_3", r);
  EXPECT_EQ(s.str(), "iteration,view_id,ssim,perceptual,nr_quality,composite\n12,student_3,0.5,0.25,0.75,0.125\n");
  const auto j = to_json(r);
  EXPECT_EQ(j.at("nr_quality").get<double>(), 0.75);
}

// Two-region image: background color plus noise, foreground a distinct color.
struct TwoRegion {
  Image teacher, student;
  Mask teacher_bg;
};

TwoRegion two_region(std::mt19937_64& rng, int w, int h) {
  std::normal_distribution<double> n(0.0, 0.02);
  TwoRegion t;
  t.teacher = Image(w, h, 3);
  t.student = Image(w, h, 3);
  t.teacher_bg = Mask(w, h, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const bool bg_t = x < w / 2;
      const bool bg_s = x < w / 2 + 2;  // student view shifted slightly
      t.teacher_bg.at(x, y) = bg_t ? 1 : 0;
      for (int c = 0; c < 3; ++c) {
        t.teacher.at(x, y, c) = (bg_t ? 0.1 : 0.7) + n(rng);
        t.student.at(x, y, c) = (bg_s ? 0.1 : 0.7 + 0.05 * c) + n(rng);
      }
    }
  return t;
}

Mask rule_oracle(const Image& student, const Mask& bg, double tau) {
  const int c = student.channels();
  Mask out(student.width(), student.height());
  std::vector<double> mu(c, 0.0), sd(c, 0.0);
  double n = 0;
  for (int y = 0; y < student.height(); ++y)
    for (int x = 0; x < student.width(); ++x)
      if (bg.at(x, y)) {
        n += 1;
        for (int k = 0; k < c; ++k) mu[k] += student.at(x, y, k);
      }
  for (int k = 0; k < c; ++k) mu[k] /= n;
  for (int y = 0; y < student.height(); ++y)
    for (int x = 0; x < student.width(); ++x)
      if (bg.at(x, y))
        for (int k = 0; k < c; ++k) sd[k] += std::pow(student.at(x, y, k) - mu[k], 2);
  for (int k = 0; k < c; ++k) sd[k] = std::max(1e-3, std::sqrt(sd[k] / n));
  for (int y = 0; y < student.height(); ++y)
    for (int x = 0; x < student.width(); ++x) {
      bool all = true;
      for (int k = 0; k < c; ++k) all = all && std::abs(student.at(x, y, k) - mu[k]) < tau * sd[k];
      out.at(x, y) = all ? 1 : 0;
    }
  return out;
}

TEST(MaskPropagation, MatchesRuleOracle) {
  std::mt19937_64 rng(16);
  for (double tau : {0.5, 1.0, 2.0, 3.0, 5.0}) {
    const TwoRegion t = two_region(rng, 24, 16);
    EXPECT_TRUE(propagate_background_mask(t.teacher, t.teacher_bg, t.student, tau) ==
                rule_oracle(t.student, t.teacher_bg, tau));
  }
}

TEST(MaskPropagation, MonotoneInTau) {
  std::mt19937_64 rng(17);
  const TwoRegion t = two_region(rng, 24, 16);
  Mask prev = propagate_background_mask(t.teacher, t.teacher_bg, t.student, 0.0);
  EXPECT_EQ(prev.count(), 0u);
  for (double tau = 0.25; tau <= 20.0; tau *= 1.5) {
    const Mask m = propagate_background_mask(t.teacher, t.teacher_bg, t.student, tau);
    EXPECT_TRUE(prev.subset_of(m));
    prev = m;
  }
}

TEST(MaskPropagation, UniformBackgroundIsRecovered) {
  Image img(10, 10, 3, 0.2);
  Mask bg(10, 10, 0);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 5; ++x) bg.at(x, y) = 1;
  for (int y = 0; y < 10; ++y)
    for (int x = 5; x < 10; ++x) img.at(x, y, 1) = 0.9;
  const Mask m = propagate_background_mask(img, bg, img, 3.0);
  EXPECT_TRUE(bg.subset_of(m));
}

TEST(MaskPropagation, EmptyBackgroundRejected) {
  const Image img(6, 6, 3, 0.3);
  try {
    propagate_background_mask(img, Mask(6, 6, 0), img, 3.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyBackground);
  }
}

}  // namespace
