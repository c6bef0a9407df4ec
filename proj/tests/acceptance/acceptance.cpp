// End-to-end acceptance run: one PASS/FAIL line per criterion.
//
//   curigs_acceptance [--workdir DIR] [--only 1,2,...] [--seeds N]
//
// Exit status is 0 only when every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "curigs/curriculum.hpp"
#include "curigs/error.hpp"
#include "curigs/geometry.hpp"
#include "curigs/losses.hpp"
#include "curigs/metrics.hpp"
#include "curigs/rasterizer.hpp"
#include "curigs/scene_synth.hpp"
#include "curigs/training.hpp"
#include "finite_diff.hpp"
#include "naive_render.hpp"
#include "random_scene.hpp"

namespace {

using namespace curigs;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 3) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double max_abs_diff(const Image& a, const Image& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// ------------------------------------------------------------------ 1

Outcome gradient_correctness() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::size_t checked = 0, bad = 0;
  LossWeights w;
  w.lambda_d = 0.5;
  for (int s = 0; s < 20; ++s) {
    const auto scene = testing_support::random_scene(rng);
    const CameraPose& cam = scene.camera;
    const Image ref = testing_support::random_image(rng, cam.width, cam.height, 3, 0.05, 0.95);

    const RenderOutput r = render(scene.cloud, cam);
    const ImageLoss lr = loss_recon(r.color, ref, w.lambda_s);
    const auto g = render_backward(scene.cloud, cam, r, lr.d_render, Image());
    const auto fd = oracle::numeric_gradient(
        scene.cloud, [&](const GaussianCloud& c) { return loss_recon(render(c, cam).color, ref, w.lambda_s).value; });
    bad += oracle::compare_gradients(g.params, fd).size();
    checked += g.size() * kParamsPerPrimitive;

    // Partner model: the same splats with every parameter nudged.
    GaussianCloud partner = scene.cloud;
    std::normal_distribution<double> n(0.0, 0.05);
    for (auto& p : partner.primitives) {
      PackedParams q = p.pack();
      for (double& v : q) v += n(rng);
      p = GaussianPrimitive::unpack(q);
    }
    const Image pseudo = testing_support::random_image(rng, cam.width, cam.height, 1, 1.0, 4.0);
    const RenderOutput rb = render(partner, cam);
    const StudentLoss ls = loss_student(r, &rb, pseudo, w);
    const auto ga = render_backward(scene.cloud, cam, r, ls.d_color_a, ls.d_depth_a);
    const auto gb = render_backward(partner, cam, rb, ls.d_color_b, Image());
    // Smaller step: the cross-model L1 has kinks where both renders agree.
    const auto fa = oracle::numeric_gradient(
        scene.cloud, [&](const GaussianCloud& c) { return loss_student(render(c, cam), &rb, pseudo, w).value; }, 1e-7);
    const auto fb = oracle::numeric_gradient(
        partner, [&](const GaussianCloud& c) {
          const RenderOutput x = render(c, cam);
          return loss_student(r, &x, pseudo, w).value;
        }, 1e-7);
    bad += oracle::compare_gradients(ga.params, fa).size() + oracle::compare_gradients(gb.params, fb).size();
    checked += 2 * g.size() * kParamsPerPrimitive;
  }
  const double secs = seconds_since(t0);
  return {bad == 0 && secs < 120.0, std::to_string(bad) + "/" + std::to_string(checked) +
                                        " entries outside rel 1e-3 (floor 1e-6), " + fmt(secs, 1) + " s"};
}

// ------------------------------------------------------------------ 2

Outcome compositing_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(202);
  double worst = 0.0, worst_conservation = 0.0;
  for (int s = 0; s < 50; ++s) {
    testing_support::SmallSceneOptions o;
    std::uniform_int_distribution<int> size(16, 64), count(1, 50);
    o.width = size(rng);
    o.height = size(rng);
    o.splats = count(rng);
    o.opacity_min = 0.05;
    o.opacity_max = 0.99;
    o.scale_min = 0.02;
    auto scene = testing_support::random_scene(rng, o);
    const RenderOutput r = render(scene.cloud, scene.camera);
    const auto ref = oracle::naive_render(scene.cloud, scene.camera);
    worst = std::max({worst, max_abs_diff(r.color, ref.color), max_abs_diff(r.final_transmittance, ref.transmittance)});
    // With white splats the composited color is sum_i T_i a_i.
    for (auto& g : scene.cloud.primitives) g.color = Vec3::Ones();
    const RenderOutput white = render(scene.cloud, scene.camera);
    for (std::size_t p = 0; p < white.final_transmittance.size(); ++p) {
      for (int c = 0; c < 3; ++c) {
        worst_conservation =
            std::max(worst_conservation, std::abs(white.color[p * 3 + c] + white.final_transmittance[p] - 1.0));
      }
    }
  }
  const double secs = seconds_since(t0);
  std::ostringstream d;
  d << "max |tiled - naive| " << std::scientific << std::setprecision(2) << worst << ", max conservation error "
    << worst_conservation << ", " << std::fixed << std::setprecision(1) << secs << " s";
  return {worst <= 1e-6 && worst_conservation <= 1e-6 && secs < 60.0, d.str()};
}

// ------------------------------------------------------------------ 3

Outcome schedule_conformance() {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t probes = 0, bad = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    ScheduleParams p;
    p.sigma_min = 10.0 * u(rng);
    p.sigma_max = p.sigma_min + 20.0 * u(rng);
    p.k = 0.01 + 5.0 * u(rng);
    p.stage_length = 1 + static_cast<int>(3000 * u(rng));
    p.start_iter = static_cast<int>(5000 * u(rng));
    p.end_iter = p.start_iter + 1 + static_cast<int>(30000 * u(rng));
    double prev = -1e300;
    for (int t = 0; t <= p.end_iter + 1000; t += 1 + static_cast<int>(97 * u(rng))) {
      ++probes;
      const auto s = active_sigma(t, p);
      if (t < p.start_iter) {
        bad += s.has_value();
        continue;
      }
      if (!s) {
        ++bad;
        continue;
      }
      const double direct =
          t >= p.end_iter ? p.sigma_max
                          : std::min(p.sigma_max, p.sigma_min + p.k * std::floor(static_cast<double>(t - p.start_iter) /
                                                                                 p.stage_length));
      bad += *s != direct || *s < prev || *s > p.sigma_max;
      prev = *s;
    }
  }
  return {bad == 0, std::to_string(bad) + " violations over " + std::to_string(probes) + " probes of 1000 schedules"};
}

// ------------------------------------------------------------------ 4

Outcome pearson_invariance() {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> ua(0.0, 10.0), ub(-5.0, 5.0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Image d = testing_support::random_image(rng, 32, 24, 1, 0.5, 8.0);
    double a = 0.0;
    while (a == 0.0) a = ua(rng);  // a in (0, 10]
    const double b = ub(rng);
    Image t = d;
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = a * d[k] + b;
    worst = std::max(worst, std::abs(pearson_depth_loss(d, t)));
  }
  int degenerate = 0;
  const Image d = testing_support::random_image(rng, 16, 16, 1, 0.5, 8.0);
  for (double v : {0.0, 2.5, 1e4}) {
    const Image c(16, 16, 1, v);
    for (int side = 0; side < 2; ++side) {
      try {
        side ? pearson_depth_loss(d, c) : pearson_depth_loss(c, d);
      } catch (const Error& e) {
        degenerate += e.code() == Errc::DegenerateDepth;
      }
    }
  }
  std::ostringstream s;
  s << "max |loss(D, aD+b)| " << std::scientific << std::setprecision(2) << worst << ", DegenerateDepth on "
    << degenerate << "/6 constant cases";
  return {worst <= 1e-9 && degenerate == 6, s.str()};
}

// ------------------------------------------------------------------ 5

Outcome promotion_gate() {
  std::mt19937_64 rng(505);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int failures = 0;
  std::size_t promoted_total = 0;
  const std::vector<double> levels{1, 2, 3};
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<CameraPose> teachers;
    for (int t = 0; t < 4; ++t) {
      teachers.push_back(look_at(Vec3(3 * std::sin(t), 0.4, -3 * std::cos(t)), Vec3::Zero(), Vec3(0, 1, 0), 20, 20,
                                 8, 8));
    }
    Rng prng(static_cast<std::uint64_t>(trial));
    CurriculumState st;
    st.pool = generate_student_pools(teachers, levels, 3, 0.02, prng);
    st.params = schedule_for_levels(levels, 0, 300);
    st.promotion_threshold = u(rng);

    // Stream of evaluations; the oracle keeps per-student and per-group minima.
    std::map<int, std::pair<double, double>> student_min;  // id -> (composite, nr)
    std::map<std::pair<int, int>, std::pair<double, int>> group_min;
    std::vector<std::map<int, Image>> renders(1);
    for (int i = 0; i < 300; ++i) {
      const int id = static_cast<int>(u(rng) * st.pool.size());
      MetricReport r;
      r.composite = u(rng);
      r.nr_quality = u(rng);
      Image img = testing_support::random_image(rng, 8, 8, 3);
      record_evaluation(st, id, r, img, i);
      if (!student_min.contains(id) || r.composite < student_min[id].first) {
        student_min[id] = {r.composite, r.nr_quality};
        renders[0][id] = img;
      }
      const StudentView& sv = st.pool.students[id];
      const std::pair<int, int> key{sv.teacher_id, sv.level_index};
      if (!group_min.contains(key) || r.composite < group_min[key].first) group_min[key] = {r.composite, id};
    }
    for (const auto& [id, m] : student_min) {
      const StudentView& sv = st.pool.students[id];
      failures += *sv.best_composite != m.first || *sv.best_nr != m.second || !(*sv.best_render == renders[0][id]);
    }
    for (const auto& [key, m] : group_min) failures += st.best.at(key) != m.second;

    // Promote every level twice; the second pass must add nothing.
    std::vector<std::pair<TrainView, Image>> frozen;
    for (int pass = 0; pass < 2; ++pass) {
      for (double l : levels) {
        for (const TrainView& v : on_level_transition(st, l)) {
          const int id = std::stoi(v.id.substr(8));
          const auto& key = st.pool.students[id];
          failures += pass == 1;
          failures += !(student_min.at(id).second >= st.promotion_threshold);
          failures += group_min.at({key.teacher_id, key.level_index}).second != id;
          failures += std::memcmp(v.reference.data(), renders[0][id].data(), v.reference.size() * sizeof(double)) != 0;
          frozen.emplace_back(v, renders[0][id]);
        }
      }
    }
    // Groups whose best misses the threshold must not promote.
    for (const auto& [key, m] : group_min) {
      const bool expect = student_min.at(m.second).second >= st.promotion_threshold;
      failures += expect != st.promoted_groups.contains(key);
    }
    // Later evaluations never reach the frozen references.
    for (int i = 0; i < 100; ++i) {
      MetricReport r;
      r.composite = -1.0 - i;
      r.nr_quality = 1.0;
      record_evaluation(st, static_cast<int>(u(rng) * st.pool.size()), r, Image(8, 8, 3, 0.5));
    }
    for (std::size_t i = 0; i < st.promoted.size(); ++i) {
      failures += !st.promoted[i].reference_intact() || !(st.promoted[i].reference == frozen[i].second);
    }
    promoted_total += st.promoted.size();
  }
  return {failures == 0,
          std::to_string(failures) + " violations over 100 streams, " + std::to_string(promoted_total) + " promotions"};
}

// ------------------------------------------------------------------ 6

Mask rule_oracle(const Image& img, const Mask& bg, double tau) {
  const int c = img.channels();
  std::vector<double> mu(c, 0.0), sd(c, 0.0);
  double n = 0.0;
  for (std::size_t p = 0; p < bg.pixel_count(); ++p) {
    if (!bg[p]) continue;
    n += 1.0;
    for (int k = 0; k < c; ++k) mu[k] += img[p * c + k];
  }
  for (int k = 0; k < c; ++k) mu[k] /= n;
  for (std::size_t p = 0; p < bg.pixel_count(); ++p) {
    if (!bg[p]) continue;
    for (int k = 0; k < c; ++k) sd[k] += (img[p * c + k] - mu[k]) * (img[p * c + k] - mu[k]);
  }
  for (int k = 0; k < c; ++k) sd[k] = std::max(1e-3, std::sqrt(sd[k] / n));
  Mask out(img.width(), img.height());
  for (std::size_t p = 0; p < out.pixel_count(); ++p) {
    bool all = true;
    for (int k = 0; k < c; ++k) all = all && std::abs(img[p * c + k] - mu[k]) < tau * sd[k];
    out[p] = all;
  }
  return out;
}

Outcome mask_propagation() {
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int mismatches = 0, monotone_breaks = 0, cases = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const int w = 16 + static_cast<int>(u(rng) * 32), h = 16 + static_cast<int>(u(rng) * 32);
    std::normal_distribution<double> noise(0.0, 0.01 + 0.05 * u(rng));
    const Vec3 bg_color(u(rng), u(rng), u(rng)), fg_color(u(rng), u(rng), u(rng));
    const int split_t = w / 3 + static_cast<int>(u(rng) * w / 3);
    const int split_s = std::min(w - 1, split_t + static_cast<int>(u(rng) * 4));
    Image teacher(w, h, 3), student(w, h, 3);
    Mask teacher_bg(w, h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        teacher_bg.at(x, y) = x < split_t;
        for (int k = 0; k < 3; ++k) {
          teacher.at(x, y, k) = (x < split_t ? bg_color[k] : fg_color[k]) + noise(rng);
          student.at(x, y, k) = (x < split_s ? bg_color[k] : fg_color[k]) + noise(rng);
        }
      }
    }
    Mask prev;
    for (double tau : {0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 10.0}) {
      const Mask m = propagate_background_mask(teacher, teacher_bg, student, tau);
      mismatches += !(m == rule_oracle(student, teacher_bg, tau));
      if (!prev.empty()) monotone_breaks += !prev.subset_of(m);
      prev = m;
      ++cases;
    }
  }
  return {mismatches == 0 && monotone_breaks == 0, std::to_string(mismatches) + " oracle mismatches, " +
                                                       std::to_string(monotone_breaks) + " monotonicity breaks over " +
                                                       std::to_string(cases) + " (image, tau) cases"};
}

// ------------------------------------------------------------------ 7-10

struct RunLog {
  std::string metrics, events, curve;
  std::uint64_t fingerprint = 0;
  std::vector<CurvePoint> curve_points;
  EvalSummary final_eval;
  double seconds = 0.0;
  std::size_t promoted = 0;

  bool same_logs(const RunLog& o) const {
    return metrics == o.metrics && events == o.events && curve == o.curve && fingerprint == o.fingerprint;
  }
};

struct Bench {
  Dataset ds;
  fs::path workdir;
};

SceneSpec acceptance_scene() {
  SceneSpec s;  // object layout, 2000 splats, 28 ring cameras, 64x64
  s.seed = 0;
  return s;
}

TrainConfig convergence_config() {
  TrainConfig c;
  c.iterations = 5000;
  c.curriculum = false;
  c.dual_model = false;
  c.eval_interval = 250;
  return c;
}

TrainConfig ablation_config(std::uint64_t seed, bool curriculum) {
  TrainConfig c;
  c.seed = seed;
  c.iterations = 5000;
  c.curriculum = curriculum;
  c.eval_interval = 250;
  // 64 px views sit close to the splat scale; half-degree steps keep the
  // nearest-camera pseudo-depth aligned with the student poses.
  c.levels = {0.5, 1.0, 1.5, 2.0, 2.5};
  return c;
}

RunLog run_training(const Bench& bench, const TrainConfig& config, int views, const std::string& name) {
  const auto teachers = subsample_uniform(bench.ds.train_ids, views);
  const TrainingData data = make_training_data(bench.ds, teachers, config.use_masks);
  const auto oracle = make_depth_oracle(bench.ds, config.depth, teachers);
  BuiltinMetricPlugin plugin;
  std::ostringstream metrics, events, curve;
  write_metric_csv_header(metrics);
  write_curve_header(curve);
  const auto t0 = Clock::now();
  const TrainResult r = train(config, data, *oracle, plugin, {&metrics, &events, &curve, nullptr, std::nullopt});
  RunLog log;
  log.seconds = seconds_since(t0);
  log.metrics = metrics.str();
  log.events = events.str();
  log.curve = curve.str();
  log.fingerprint = r.model_a.fingerprint();
  log.curve_points = r.curve;
  log.promoted = r.promoted_events;
  log.final_eval = evaluate_views(r.model_a, data.test_views, plugin, false, true);

  const fs::path dir = bench.workdir / name;
  fs::create_directories(dir);
  std::ofstream(dir / "metrics.csv") << log.metrics;
  std::ofstream(dir / "events.jsonl") << log.events;
  std::ofstream(dir / "curve.csv") << log.curve;
  save_checkpoint(dir / "ckpt_final", r.model_a);
  std::cout << "  [" << name << "] " << views << " views, " << fmt(log.seconds, 1) << " s, final held-out psnr "
            << fmt(log.final_eval.mean.psnr) << " ssim " << fmt(log.final_eval.mean.ssim, 4) << ", " << log.promoted
            << " promotions\n"
            << std::flush;
  return log;
}

struct Ablation {
  std::vector<RunLog> full, plain;
  double seconds = 0.0;
};

std::vector<CurvePoint> mean_curve(const std::vector<RunLog>& runs) {
  std::vector<CurvePoint> out = runs.front().curve_points;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].psnr = out[i].ssim = out[i].perceptual = 0.0;
    for (const auto& r : runs) {
      out[i].psnr += r.curve_points.at(i).psnr / runs.size();
      out[i].ssim += r.curve_points.at(i).ssim / runs.size();
      out[i].perceptual += r.curve_points.at(i).perceptual / runs.size();
    }
  }
  return out;
}

// Drop from the running maximum to the final value of a PSNR curve.
double drop_from_max(const std::vector<CurvePoint>& c) {
  double m = -1e300;
  for (const auto& p : c) m = std::max(m, p.psnr);
  return m - c.back().psnr;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  fs::path workdir = fs::temp_directory_path() / "curigs_acceptance";
  std::set<int> only;
  int seeds = 3;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--workdir" && i + 1 < argc) {
      workdir = argv[++i];
    } else if (a == "--only" && i + 1 < argc) {
      for (const auto& s : split_csv(argv[++i])) only.insert(std::stoi(s));
    } else if (a == "--seeds" && i + 1 < argc) {
      seeds = std::stoi(argv[++i]);
    } else {
      std::cerr << "usage: curigs_acceptance [--workdir DIR] [--only 1,2,...] [--seeds N]\n";
      return 2;
    }
  }
  auto selected = [&](int n) { return only.empty() || only.contains(n); };
  fs::create_directories(workdir);

  int failed = 0;
  auto report = [&](int n, const std::string& name, const Outcome& o) {
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << n << " " << name << ": " << o.detail << '\n'
              << std::flush;
    failed += !o.pass;
  };
  auto guarded = [&](int n, const std::string& name, const std::function<Outcome()>& f) {
    if (!selected(n)) return;
    try {
      report(n, name, f());
    } catch (const std::exception& e) {
      report(n, name, {false, std::string("exception: ") + e.what()});
    }
  };

  guarded(1, "gradient-correctness", gradient_correctness);
  guarded(2, "compositing-oracle", compositing_oracle);
  guarded(3, "schedule-conformance", schedule_conformance);
  guarded(4, "pearson-invariance", pearson_invariance);
  guarded(5, "promotion-gate", promotion_gate);
  guarded(6, "mask-propagation", mask_propagation);

  const bool need_convergence = selected(7) || selected(10);
  const bool need_ablation = selected(8) || selected(9) || selected(10);
  if (need_convergence || need_ablation) {
    Bench bench;
    bench.workdir = workdir;
    const SyntheticScene scene = make_scene(acceptance_scene());
    bench.ds = to_dataset(scene);

    std::optional<RunLog> convergence;
    if (need_convergence) {
      guarded(7, "convergence-all-views", [&] {
        convergence = run_training(bench, convergence_config(), 0, "convergence");
        const double psnr = convergence->final_eval.mean.psnr;
        return Outcome{psnr >= 30.0 && convergence->seconds < 900.0,
                       "held-out psnr " + fmt(psnr) + " dB (need >= 30) with " +
                           std::to_string(bench.ds.train_ids.size()) + " views in " + fmt(convergence->seconds, 1) +
                           " s (need < 900)"};
      });
      if (!selected(7)) convergence = run_training(bench, convergence_config(), 0, "convergence");
    }

    Ablation ab;
    if (need_ablation) {
      const auto t0 = Clock::now();
      for (int s = 0; s < seeds; ++s) {
        ab.full.push_back(run_training(bench, ablation_config(s, true), 3, "full_seed" + std::to_string(s)));
        ab.plain.push_back(run_training(bench, ablation_config(s, false), 3, "wo_cur_seed" + std::to_string(s)));
      }
      ab.seconds = seconds_since(t0);

      guarded(8, "directional-ablation", [&] {
        double pf = 0, pp = 0, sf = 0, sp = 0;
        std::ostringstream per;
        for (int s = 0; s < seeds; ++s) {
          pf += ab.full[s].final_eval.mean.psnr / seeds;
          pp += ab.plain[s].final_eval.mean.psnr / seeds;
          sf += ab.full[s].final_eval.mean.ssim / seeds;
          sp += ab.plain[s].final_eval.mean.ssim / seeds;
          per << (s ? ", " : "") << fmt(ab.full[s].final_eval.mean.psnr - ab.plain[s].final_eval.mean.psnr);
        }
        const bool ok = pf - pp >= 0.3 && sf >= sp && ab.seconds < 2700.0 && seeds >= 3;
        return Outcome{ok, "Full " + fmt(pf) + " vs w/o-Cur " + fmt(pp) + " dB (gain " + fmt(pf - pp) +
                               ", need >= 0.3; per seed " + per.str() + "), ssim " + fmt(sf, 4) + " vs " +
                               fmt(sp, 4) + ", " + std::to_string(seeds) + " seeds in " + fmt(ab.seconds, 0) +
                               " s (need < 2700)"};
      });

      guarded(9, "overfitting-curve-shape", [&] {
        const double drop_plain = drop_from_max(mean_curve(ab.plain));
        const double drop_full = drop_from_max(mean_curve(ab.full));
        std::ostringstream per;
        for (int s = 0; s < seeds; ++s) {
          per << (s ? "; " : "") << "seed " << s << " " << fmt(drop_from_max(ab.plain[s].curve_points)) << "/" << fmt(drop_from_max(ab.full[s].curve_points));
        }
        return Outcome{drop_plain >= 0.2 && drop_full <= 0.1,
                       "seed-mean curves: w/o-Cur final is " + fmt(drop_plain) + " dB below its max (need >= 0.2), Full " +
                           fmt(drop_full) + " dB below (need <= 0.1); per seed w/o/Full " + per.str()};
      });
    }

    guarded(10, "determinism", [&] {
      std::vector<std::string> diffs;
      std::size_t compared = 0;
      if (convergence) {
        const RunLog again = run_training(bench, convergence_config(), 0, "convergence_repeat");
        ++compared;
        if (!again.same_logs(*convergence)) diffs.push_back("convergence");
      }
      if (!ab.full.empty()) {
        for (int s = 0; s < seeds; ++s) {
          const RunLog f = run_training(bench, ablation_config(s, true), 3, "full_seed" + std::to_string(s) + "_repeat");
          const RunLog p =
              run_training(bench, ablation_config(s, false), 3, "wo_cur_seed" + std::to_string(s) + "_repeat");
          compared += 2;
          if (!f.same_logs(ab.full[s])) diffs.push_back("full seed " + std::to_string(s));
          if (!p.same_logs(ab.plain[s])) diffs.push_back("w/o-Cur seed " + std::to_string(s));
        }
      }
      std::string d = std::to_string(compared - diffs.size()) + "/" + std::to_string(compared) +
                      " repeated runs reproduce metrics.csv, events.jsonl, curve.csv and the checkpoint hash";
      for (const auto& x : diffs) d += "; differs: " + x;
      return Outcome{diffs.empty() && compared > 0, d};
    });
  }

  std::cout << (failed == 0 ? "all selected criteria passed" : std::to_string(failed) + " criteria failed") << '\n';
  return failed == 0 ? 0 : 1;
}
