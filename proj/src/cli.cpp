#include "coad/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "coad/distmodel.hpp"
#include "coad/error.hpp"
#include "coad/metrics.hpp"
#include "coad/pipeline.hpp"
#include "coad/score_io.hpp"
#include "coad/seed.hpp"

namespace coad {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

const std::vector<std::string> kModelKeys = {"mu_n", "mu_a", "sigma_a", "sigma_n0", "k", "sigma_max", "h", "theta_0"};

/// Demo model for `simulate` and `theta-star` when no config is given.
DistributionModel demo_model() {
  DistributionModel m;
  m.mu_n = 0.0;
  m.mu_a = 1.5;
  m.sigma_a = 1.0;
  m.sigma_n0 = 1.0;
  m.k = 2.0;
  m.sigma_max = 1.0;
  m.h = 1.0;
  m.theta_0 = 0.1;
  return m;
}

std::string flag_for(const std::string& key) {
  std::string f = "--" + key;
  std::replace(f.begin(), f.end(), '_', '-');
  return f;
}

struct CommonOptions {
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out_dir = ".";
  std::string config;
};

// Registers one string-valued flag per config key; parsed values land in
// `overrides` keyed by the config key.
void add_key_flags(CLI::App* cmd, const std::vector<std::string>& keys, KeyValues& overrides) {
  for (const auto& key : keys) {
    cmd->add_option_function<std::string>(
        flag_for(key), [&overrides, key](const std::string& v) { overrides[key] = v; },
        "override config key " + key);
  }
}

KeyValues merged_config(const CommonOptions& common, const KeyValues& overrides) {
  KeyValues kv;
  if (!common.config.empty()) kv = read_key_values(common.config);
  for (const auto& [k, v] : overrides) kv[k] = v;
  return kv;
}

fs::path prepare_out_dir(const CommonOptions& common) {
  fs::path dir(common.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw InputError("cannot create output directory " + dir.string());
  return dir;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write " + path.string());
  return f;
}

std::string matches_label(const ThetaStar& t) {
  if (t.derived_matches && t.paper_matches) return "both";
  if (t.derived_matches) return "derived";
  if (t.paper_matches) return "paper";
  return "none";
}

ordered_json theta_star_json(const ThetaStar& t) {
  ordered_json j;
  j["paper_form"] = t.paper_form;
  j["derived_form"] = t.derived_form;
  j["numeric"] = t.numeric;
  j["matches"] = matches_label(t);
  return j;
}

ordered_json model_json(const DistributionModel& m) {
  ordered_json j;
  j["mu_n"] = m.mu_n;
  j["mu_a"] = m.mu_a;
  j["sigma_a"] = m.sigma_a;
  j["sigma_n0"] = m.sigma_n0;
  j["k"] = m.k;
  j["sigma_max"] = m.sigma_max;
  j["h"] = m.h;
  j["theta_0"] = m.theta_0;
  return j;
}

struct SimulateOptions {
  double theta_lo = 0.0;
  double theta_hi = 3.0;
  std::size_t steps = 61;
  std::size_t mc_samples = 100000;
};

int cmd_simulate(const CommonOptions& common, const KeyValues& overrides, const SimulateOptions& opt,
                 std::ostream& out) {
  const DistributionModel model = model_from_key_values(merged_config(common, overrides), demo_model());
  validate(model);
  if (opt.mc_samples < 1) throw InputError("--mc-samples must be at least 1");
  const ThetaSweep grid = sweep(model, opt.theta_lo, opt.theta_hi, opt.steps);
  const std::uint64_t seed = derive_seed(common.seed, "simulate");
  const fs::path dir = prepare_out_dir(common);

  auto csv = open_out(dir / "simulate.csv");
  csv << "theta,sigma_n,radi_closed,radi_mc\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.thetas.size(); ++i) {
    const ScoreSet s = sample_scores(model, grid.thetas[i], opt.mc_samples, opt.mc_samples, derive_seed(seed, i));
    const double mc = radi_empirical(s);
    worst = std::max(worst, std::abs(mc - grid.radi_values[i]));
    csv << grid.thetas[i] << ',' << grid.sigma_values[i] << ',' << grid.radi_values[i] << ',' << mc << '\n';
  }

  ordered_json summary;
  summary["model"] = model_json(model);
  summary["theta_lo"] = opt.theta_lo;
  summary["theta_hi"] = opt.theta_hi;
  summary["steps"] = opt.steps;
  summary["mc_samples"] = opt.mc_samples;
  summary["max_abs_mc_error"] = worst;
  try {
    summary["theta_star"] = theta_star_json(theta_star(model));
  } catch (const std::exception& e) {
    summary["theta_star"] = nullptr;
    summary["theta_star_error"] = e.what();
  }
  open_out(dir / "simulate_summary.json") << summary.dump(2) << '\n';
  out << summary.dump(2) << '\n';
  return kExitOk;
}

struct AnalyzeOptions {
  std::string normal;
  std::string anomaly;
  std::string labeled;
  std::size_t bins = 256;
};

ordered_json class_report(std::span<const double> scores, std::size_t bins) {
  const GaussianTvd fit = tvd_to_gaussian(scores, bins);
  ordered_json j;
  j["count"] = scores.size();
  j["mean"] = fit.fit.mean;
  j["std"] = fit.fit.stddev;
  j["tvd"] = fit.tvd;
  return j;
}

int cmd_analyze(const CommonOptions& common, const AnalyzeOptions& opt, std::ostream& out) {
  ScoreSet scores;
  if (!opt.labeled.empty()) {
    if (!opt.normal.empty() || !opt.anomaly.empty()) {
      throw InputError("use either --labeled or --normal/--anomaly, not both");
    }
    scores = read_labeled_scores(opt.labeled);
  } else {
    if (opt.normal.empty() || opt.anomaly.empty()) {
      throw InputError("analyze needs --normal and --anomaly score files, or --labeled");
    }
    scores.normal = read_scores(opt.normal);
    scores.anomaly = read_scores(opt.anomaly);
  }
  ordered_json report;
  report["bins"] = opt.bins;
  try {
    report["normal"] = class_report(scores.normal, opt.bins);
  } catch (const std::exception& e) {
    throw InputError(std::string("normal scores: ") + e.what());
  }
  try {
    report["anomaly"] = class_report(scores.anomaly, opt.bins);
  } catch (const std::exception& e) {
    throw InputError(std::string("anomaly scores: ") + e.what());
  }
  report["radi"] = radi_empirical(scores);
  report["auroc"] = auroc(scores);

  const fs::path dir = prepare_out_dir(common);
  open_out(dir / "analyze_report.json") << report.dump(2) << '\n';
  out << report.dump(2) << '\n';
  return kExitOk;
}

int cmd_train_toy(const CommonOptions& common, const KeyValues& overrides, bool export_dataset,
                  std::ostream& out) {
  KeyValues kv = merged_config(common, overrides);
  TrainConfig cfg = train_config_from_key_values(kv);
  if (common.seed_given || !kv.contains("seed")) cfg.seed = derive_seed(common.seed, "train-toy");
  validate(cfg);
  const fs::path dir = prepare_out_dir(common);

  const RunResult result = run_experiment(cfg);
  {
    auto f = open_out(dir / "run_log.jsonl");
    write_run_log(f, result.log);
  }
  {
    auto f = open_out(dir / "decisions.jsonl");
    write_decision_log(f, result.log);
  }
  const ordered_json summary = summary_json(result.summary, cfg);
  open_out(dir / "summary.json") << summary.dump(2) << '\n';
  save_checkpoint(result.student, dir / "student.json");
  if (export_dataset) {
    auto f = open_out(dir / "dataset.csv");
    write_dataset_csv(f, make_synthetic_dataset(cfg.seed, cfg.n_train, cfg.n_eval, cfg.anomaly_shift));
  }
  out << summary.dump(2) << '\n';
  return kExitOk;
}

int cmd_theta_star(const CommonOptions& common, const KeyValues& overrides, std::ostream& out) {
  const DistributionModel model = model_from_key_values(merged_config(common, overrides), demo_model());
  const ordered_json j = theta_star_json(theta_star(model));
  const fs::path dir = prepare_out_dir(common);
  open_out(dir / "theta_star.json") << j.dump(2) << '\n';
  out << j.dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"coad: controllable-overfitting anomaly detection toolkit", "coad"};
  app.set_help_flag("--help", "print help and exit");  // -h would clash with the model key h
  app.require_subcommand(1);
  app.fallthrough();

  CommonOptions common;
  app.add_option_function<std::uint64_t>(
      "--seed", [&](std::uint64_t s) { common.seed = s; common.seed_given = true; }, "base random seed");
  app.add_option("--out", common.out_dir, "output directory");
  app.add_option("--config", common.config, "flat key=value config file");

  KeyValues model_overrides;
  KeyValues train_overrides;

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "RADI(theta) sweep, closed form vs Monte Carlo");
  simulate->add_option("--theta-lo", sim.theta_lo);
  simulate->add_option("--theta-hi", sim.theta_hi);
  simulate->add_option("--steps", sim.steps);
  simulate->add_option("--mc-samples", sim.mc_samples, "samples per class per grid point");
  add_key_flags(simulate, kModelKeys, model_overrides);

  AnalyzeOptions ana;
  auto* analyze = app.add_subcommand("analyze", "Gaussian fit, TVD, RADI and AUROC of score files");
  analyze->add_option("--normal", ana.normal, "normal-class score file");
  analyze->add_option("--anomaly", ana.anomaly, "anomaly-class score file");
  analyze->add_option("--labeled", ana.labeled, "CSV score,label file");
  analyze->add_option("--bins", ana.bins, "histogram bins for TVD")->check(CLI::Range(2, 1 << 20));

  bool export_dataset = false;
  auto* train = app.add_subcommand("train-toy", "two-stage teacher/student training with dual control");
  add_key_flags(train, train_config_keys(), train_overrides);
  train->add_flag("--export-dataset", export_dataset, "also write dataset.csv");

  auto* theta = app.add_subcommand("theta-star", "closed-form and numeric optimal ARQ");
  add_key_flags(theta, kModelKeys, model_overrides);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }

  try {
    if (*simulate) return cmd_simulate(common, model_overrides, sim, out);
    if (*analyze) return cmd_analyze(common, ana, out);
    if (*train) return cmd_train_toy(common, train_overrides, export_dataset, out);
    if (*theta) return cmd_theta_star(common, model_overrides, out);
  } catch (const DivergenceError& e) {
    err << "error: training diverged: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const NoInteriorOptimumError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const DegenerateDistributionError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}

}  // namespace coad
