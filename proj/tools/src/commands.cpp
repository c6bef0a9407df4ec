#include "commands.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "curigs/config.hpp"
#include "curigs/error.hpp"
#include "curigs/image_io.hpp"
#include "curigs/metrics.hpp"
#include "curigs/parallel.hpp"
#include "curigs/scene_synth.hpp"
#include "curigs/training.hpp"

namespace curigs::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string version_string() { return std::string("curigs ") + CURIGS_VERSION + "+" + CURIGS_GIT_REVISION; }

namespace {

// Raised for argument problems detected after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) raise(Errc::Io, "cannot write " + p.string());
  return f;
}

void write_json(const fs::path& p, const json& j) { open_out(p) << j.dump(2) << '\n'; }

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

std::string view_name(int id) {
  std::ostringstream s;
  s << std::setw(3) << std::setfill('0') << id;
  return s.str();
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string layout = "object";
  std::string rig = "ring";
  SceneSpec spec;
  std::string out;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  SceneSpec spec = a.spec;
  try {
    spec.layout = parse_layout(a.layout);
    spec.rig = parse_rig(a.rig);
    validate(spec);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const SyntheticScene scene = make_scene(spec);
  save_dataset(a.out, scene);
  write_json(fs::path(a.out) / "scene.json", to_json(spec));
  out << "wrote " << scene.cameras.size() << " cameras (" << scene.train_ids.size() << " train, "
      << scene.test_ids.size() << " test) to " << a.out << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string data;
  std::string config;
  int views = 0;
  bool no_curriculum = false;
  std::optional<std::uint64_t> seed;
  std::optional<int> iterations;
  std::string out;
};

struct TrainOutcome {
  fs::path checkpoint;
  std::vector<CurvePoint> curve;
};

TrainConfig resolve_config(const TrainArgs& a) {
  TrainConfig c = a.config.empty() ? TrainConfig{} : load_train_config(a.config);
  if (a.seed) c.seed = *a.seed;
  if (a.iterations) c.iterations = *a.iterations;
  if (a.no_curriculum) c.curriculum = false;
  validate(c);
  return c;
}

TrainOutcome run_training(const Dataset& ds, const TrainConfig& config, int views, const fs::path& out_dir,
                          const std::string& data_path, std::ostream& log) {
  if (views < 0) throw UsageError("--views must be positive");
  const std::vector<int> teachers = subsample_uniform(ds.train_ids, views);
  fs::create_directories(out_dir / "renders");

  json manifest{{"version", version_string()},
                {"seed", config.seed},
                {"started", timestamp()},
                {"dataset", fs::absolute(data_path).string()},
                {"teacher_camera_ids", teachers},
                {"threads", worker_count()},
                {"config", to_json(config)},
                {"outputs",
                 {{"metrics", "metrics.csv"},
                  {"events", "events.jsonl"},
                  {"curve", "curve.csv"},
                  {"checkpoint", "ckpt_final"},
                  {"renders", "renders/"},
                  {"promoted", "promoted/"},
                  {"timing", "timing.json"}}}};
  write_json(out_dir / "manifest.json", manifest);

  TrainingData data = make_training_data(ds, teachers, config.use_masks);
  const auto oracle = make_depth_oracle(ds, config.depth, teachers);
  BuiltinMetricPlugin plugin;
  std::ofstream metrics = open_out(out_dir / "metrics.csv");
  std::ofstream events = open_out(out_dir / "events.jsonl");
  std::ofstream curve = open_out(out_dir / "curve.csv");
  TrainerSinks sinks;
  sinks.metrics_csv = &metrics;
  sinks.events = &events;
  sinks.curve_csv = &curve;
  sinks.log = &log;
  sinks.dump_dir = out_dir;

  const auto t0 = std::chrono::steady_clock::now();
  Trainer trainer(config, std::move(data), *oracle, plugin, sinks);
  const TrainResult result = trainer.run();
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  TrainOutcome outcome;
  outcome.checkpoint = out_dir / "ckpt_final";
  save_checkpoint(outcome.checkpoint, result.model_a);
  if (result.model_b) save_checkpoint(out_dir / "ckpt_final_b", *result.model_b);
  for (int id : ds.test_ids) {
    const std::size_t k = ds.index_of(id);
    io::write_png(out_dir / "renders" / (view_name(id) + ".png"), render(result.model_a, ds.cameras[k].pose).color);
  }
  if (!result.promoted.empty()) {
    fs::create_directories(out_dir / "promoted");
    json list = json::array();
    for (const auto& v : result.promoted) {
      const std::string file = v.id + ".png";
      io::write_png(out_dir / "promoted" / file, v.reference);
      const auto& p = v.pose;
      json rot = json::array();
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) rot.push_back(p.rotation(r, c));
      list.push_back({{"id", v.id},
                      {"image", file},
                      {"teacher_id", v.teacher_id},
                      {"teacher_camera_id", teachers[static_cast<std::size_t>(v.teacher_id)]},
                      {"level", v.level},
                      {"reference_hash", v.reference_hash},
                      {"rotation", rot},
                      {"translation", {p.translation.x(), p.translation.y(), p.translation.z()}},
                      {"has_mask", v.mask.has_value()}});
    }
    write_json(out_dir / "promoted" / "promoted.json", list);
  }
  write_json(out_dir / "timing.json", {{"seconds", seconds},
                                       {"iterations", result.iterations},
                                       {"seconds_per_iteration", seconds / std::max(1, result.iterations)},
                                       {"primitives_final", result.model_a.size()},
                                       {"promoted", result.promoted_events},
                                       {"unlocked", result.unlocked_events},
                                       {"evaluated", result.evaluated_events}});
  outcome.curve = result.curve;
  return outcome;
}

Dataset load_or_fail(const std::string& path) {
  if (!fs::is_directory(path)) raise(Errc::Io, "dataset directory not found: " + path);
  return load_dataset(path);
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
  const Dataset ds = load_or_fail(a.data);
  const TrainConfig config = resolve_config(a);
  const TrainOutcome o = run_training(ds, config, a.views, a.out, a.data, out);
  if (!o.curve.empty()) {
    out << "final held-out psnr " << std::fixed << std::setprecision(3) << o.curve.back().psnr << " dB\n";
  }
  out << "checkpoint " << o.checkpoint.string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string data;
  std::string ckpt;
  std::string out;
};

struct EvalTable {
  std::vector<int> ids;
  EvalSummary plain;
  std::optional<EvalSummary> masked;
};

EvalTable evaluate_checkpoint(const Dataset& ds, const GaussianCloud& cloud) {
  if (ds.test_ids.empty()) raise(Errc::InvalidArgument, "dataset has an empty test split");
  std::vector<EvalView> views;
  for (int id : ds.test_ids) {
    const std::size_t k = ds.index_of(id);
    EvalView v{id, ds.cameras[k].pose, ds.images[k], std::nullopt};
    if (!ds.masks.empty()) v.mask = ds.masks[k];
    views.push_back(std::move(v));
  }
  BuiltinMetricPlugin plugin;
  EvalTable t;
  t.ids = ds.test_ids;
  t.plain = evaluate_views(cloud, views, plugin, false, true);
  if (!ds.masks.empty()) t.masked = evaluate_views(cloud, views, plugin, true, true);
  return t;
}

void write_eval(const EvalTable& t, const fs::path& csv_path, std::ostream& out) {
  std::ofstream csv = open_out(csv_path);
  csv << std::setprecision(17) << "view_id,psnr,ssim,perc_proxy";
  if (t.masked) csv << ",psnr_masked,ssim_masked,perc_proxy_masked";
  csv << '\n';
  out << std::fixed << std::setprecision(4);
  out << std::left << std::setw(8) << "view" << std::right << std::setw(10) << "psnr" << std::setw(10) << "ssim"
      << std::setw(12) << "perc-proxy";
  if (t.masked) out << std::setw(12) << "psnr(m)" << std::setw(10) << "ssim(m)" << std::setw(12) << "perc(m)";
  out << '\n';
  auto row = [&](const std::string& name, std::size_t i, bool mean) {
    auto pick = [&](const EvalSummary& s, int which) {
      if (mean) return which == 0 ? s.mean.psnr : which == 1 ? s.mean.ssim : s.mean.perceptual;
      return which == 0 ? s.psnr[i] : which == 1 ? s.ssim[i] : s.perceptual[i];
    };
    csv << name << ',' << pick(t.plain, 0) << ',' << pick(t.plain, 1) << ',' << pick(t.plain, 2);
    out << std::left << std::setw(8) << name << std::right << std::setw(10) << pick(t.plain, 0) << std::setw(10)
        << pick(t.plain, 1) << std::setw(12) << pick(t.plain, 2);
    if (t.masked) {
      csv << ',' << pick(*t.masked, 0) << ',' << pick(*t.masked, 1) << ',' << pick(*t.masked, 2);
      out << std::setw(12) << pick(*t.masked, 0) << std::setw(10) << pick(*t.masked, 1) << std::setw(12)
          << pick(*t.masked, 2);
    }
    csv << '\n';
    out << '\n';
  };
  for (std::size_t i = 0; i < t.ids.size(); ++i) row(std::to_string(t.ids[i]), i, false);
  row("mean", 0, true);
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  if (!fs::exists(a.ckpt)) raise(Errc::Io, "checkpoint not found: " + a.ckpt);
  const Dataset ds = load_or_fail(a.data);
  const GaussianCloud cloud = load_checkpoint(a.ckpt);
  const EvalTable t = evaluate_checkpoint(ds, cloud);
  const fs::path dir = a.out.empty() ? fs::path(a.ckpt).parent_path() : fs::path(a.out);
  if (!dir.empty()) fs::create_directories(dir);
  write_eval(t, (dir.empty() ? fs::path(".") : dir) / "eval.csv", out);
  return kExitOk;
}

// ---------------------------------------------------------------- ablate

struct AblateArgs {
  TrainArgs train;
  std::vector<int> views{3};
};

int cmd_ablate(const AblateArgs& a, std::ostream& out) {
  const Dataset ds = load_or_fail(a.train.data);
  TrainArgs full_args = a.train;
  full_args.no_curriculum = false;
  TrainArgs nocur_args = a.train;
  nocur_args.no_curriculum = true;
  const TrainConfig full = resolve_config(full_args);
  const TrainConfig nocur = resolve_config(nocur_args);
  const fs::path root = a.train.out;
  fs::create_directories(root);

  std::ofstream report = open_out(root / "ablation.csv");
  report << std::setprecision(17) << "views,arm,psnr,ssim,perc_proxy\n";
  std::ostringstream table;
  table << std::fixed << std::setprecision(4);
  table << std::left << std::setw(7) << "views" << std::setw(10) << "arm" << std::right << std::setw(10) << "psnr"
        << std::setw(10) << "ssim" << std::setw(12) << "perc-proxy" << '\n';

  for (int v : a.views) {
    if (v < 1) throw UsageError("--views entries must be >= 1");
    const fs::path dir = root / ("views_" + std::to_string(v));
    std::array<std::vector<CurvePoint>, 2> curves;
    const std::array<std::pair<const char*, const TrainConfig*>, 2> arms{{{"full", &full}, {"wo_cur", &nocur}}};
    for (std::size_t k = 0; k < arms.size(); ++k) {
      const auto& [name, cfg] = arms[k];
      out << "training " << name << " with " << v << " views\n";
      const TrainOutcome o = run_training(ds, *cfg, v, dir / name, a.train.data, out);
      curves[k] = o.curve;
      const EvalTable t = evaluate_checkpoint(ds, load_checkpoint(o.checkpoint));
      write_eval(t, dir / name / "eval.csv", out);
      report << v << ',' << name << ',' << t.plain.mean.psnr << ',' << t.plain.mean.ssim << ','
             << t.plain.mean.perceptual << '\n';
      table << std::left << std::setw(7) << v << std::setw(10) << name << std::right << std::setw(10)
            << t.plain.mean.psnr << std::setw(10) << t.plain.mean.ssim << std::setw(12) << t.plain.mean.perceptual
            << '\n';
    }
    std::ofstream curve = open_out(dir / "curves.csv");
    curve << std::setprecision(17)
          << "iteration,full_psnr,full_ssim,full_perc_proxy,wo_cur_psnr,wo_cur_ssim,wo_cur_perc_proxy\n";
    const std::size_t rows = std::min(curves[0].size(), curves[1].size());
    for (std::size_t i = 0; i < rows; ++i) {
      const auto& f = curves[0][i];
      const auto& n = curves[1][i];
      curve << f.iteration << ',' << f.psnr << ',' << f.ssim << ',' << f.perceptual << ',' << n.psnr << ','
            << n.ssim << ',' << n.perceptual << '\n';
    }
  }
  open_out(root / "ablation.txt") << table.str();
  out << table.str();
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Curriculum-guided sparse-view Gaussian splatting", "curigs"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic dataset");
  s->add_option("--layout", synth.layout, "cluster, object or room")->capture_default_str();
  s->add_option("--rig", synth.rig, "ring or forward")->capture_default_str();
  s->add_option("--n-gaussians", synth.spec.n_gaussians, "Primitives in the generating scene")->capture_default_str();
  s->add_option("--n-cameras", synth.spec.n_cameras, "Number of cameras")->capture_default_str();
  s->add_option("--seed", synth.spec.seed, "Random seed")->capture_default_str();
  s->add_option("--width", synth.spec.width, "Image width")->capture_default_str();
  s->add_option("--height", synth.spec.height, "Image height")->capture_default_str();
  s->add_option("--arc", synth.spec.arc_deg, "Angular extent of a ring rig, degrees")->capture_default_str();
  s->add_option("--out", synth.out, "Output directory")->required();

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train on a dataset");
  auto add_train_options = [](CLI::App* cmd, TrainArgs& ta) {
    cmd->add_option("--data", ta.data, "Dataset directory")->required();
    cmd->add_option("--config", ta.config, "JSON config file");
    cmd->add_option("--seed", ta.seed, "Override the config seed");
    cmd->add_option("--iterations", ta.iterations, "Override the iteration count");
    cmd->add_option("--out", ta.out, "Output directory")->required();
  };
  add_train_options(t, train);
  t->add_option("--views", train.views, "Uniformly subsample this many teacher views (0 = all)");
  t->add_flag("--no-curriculum", train.no_curriculum, "Disable student views (ablation arm)");

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
  e->add_option("--data", eval.data, "Dataset directory")->required();
  e->add_option("--ckpt", eval.ckpt, "Checkpoint file")->required();
  e->add_option("--out", eval.out, "Directory for eval.csv (default: next to the checkpoint)");

  AblateArgs ablate;
  auto* ab = app.add_subcommand("ablate", "Train with and without the curriculum and compare");
  add_train_options(ab, ablate.train);
  ab->add_option("--views", ablate.views, "Teacher view counts, e.g. 3,6")->delimiter(',')->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& ex) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << version_string() << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& ex) {
    err << "error: " << ex.what() << "\n\n" << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kExitUsage;
  }

  try {
    if (s->parsed()) return cmd_synth(synth, out);
    if (t->parsed()) return cmd_train(train, out);
    if (e->parsed()) return cmd_eval(eval, out);
    if (ab->parsed()) return cmd_ablate(ablate, out);
  } catch (const UsageError& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitUsage;
  } catch (const Error& ex) {
    err << "error [" << to_string(ex.code()) << "]: " << ex.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace curigs::cli
