// spmpc: train, evaluate, ablate, replay and export plot data.
//
// Exit codes: 0 success, 1 error, 2 usage, 3 replay mismatch, 4 training
// finished but some rollouts aborted on numerical failure.
#include "spmpc/harness.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace spmpc;
using harness::json;

namespace {

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  std::vector<std::string> overrides;
  std::string out = "run";
};

void add_common(CLI::App* app, Common& c, bool needs_out = true) {
  app->add_option("--config", c.config, "JSON experiment config (defaults when omitted)");
  app->add_option("--seed", c.seed, "Master seed")->required();
  app->add_option("--set", c.overrides, "Override a config key, e.g. --set mpc.horizon=3");
  if (needs_out) app->add_option("--out", c.out, "Output directory");
}

harness::ExperimentConfig resolve(const Common& c) {
  json j = harness::to_json(harness::ExperimentConfig{});
  if (!c.config.empty()) {
    std::ifstream in(c.config);
    if (!in) throw std::runtime_error("cannot open config " + c.config);
    j = json::parse(in, nullptr, true, true);
  }
  for (const auto& o : c.overrides) harness::apply_override(j, o);
  j["seed"] = c.seed;
  return harness::config_from_json(j);
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::string log_name(const harness::RolloutLog& log) {
  std::ostringstream s;
  s << log.kind << "_it" << log.iteration << "_r" << log.rollout << ".ndjson";
  return s.str();
}

json write_logs(const fs::path& dir, const std::vector<harness::RolloutLog>& logs) {
  fs::create_directories(dir);
  json names = json::array();
  for (const auto& log : logs) {
    harness::write_log(log, (dir / log_name(log)).string());
    names.push_back((dir.filename() / log_name(log)).string());
  }
  return names;
}

int cmd_train(const Common& c) {
  const auto cfg = resolve(c);
  const fs::path out(c.out);
  fs::create_directories(out);
  const auto res = harness::run_spmpc(cfg);
  json curve = json::array();
  for (const auto& it : res.curve) {
    curve.push_back({{"iteration", it.iteration}, {"samples", it.samples}, {"metrics", harness::to_json(it.metrics)}});
    std::cout << "iteration " << it.iteration << "  samples " << it.samples << "  mean distance "
              << it.metrics.distance.mean << " m  [" << it.metrics.distance.ci_low << ", "
              << it.metrics.distance.ci_high << "]\n";
  }
  gp::save_model(res.model, (out / "model.json").string());
  write_json(out / "manifest.json", {{"command", "train"},
                                     {"config", harness::to_json(cfg)},
                                     {"curve", curve},
                                     {"aborted_rollouts", res.aborted_rollouts},
                                     {"logs", write_logs(out / "logs", res.logs)},
                                     {"model", "model.json"}});
  if (res.aborted_rollouts > 0) {
    std::cerr << res.aborted_rollouts << " rollout(s) aborted; see the logs\n";
    return 4;
  }
  return 0;
}

int cmd_eval(const Common& c, const std::string& model_path, int rollouts, bool pid) {
  auto cfg = resolve(c);
  if (rollouts > 0) cfg.eval_rollouts = rollouts;
  const fs::path out(c.out);
  fs::create_directories(out);
  std::vector<harness::RolloutLog> logs;
  harness::EvalMetrics m;
  if (pid) {
    m = harness::evaluate_pid(cfg, cfg.eval_rollouts, &logs);
  } else {
    if (model_path.empty()) throw std::runtime_error("eval: --model is required unless --pid is given");
    m = harness::evaluate(gp::load_model(model_path), cfg, cfg.eval_rollouts, &logs);
  }
  std::cout << "mean distance " << m.distance.mean << " m  [" << m.distance.ci_low << ", " << m.distance.ci_high
            << "]  optimizer time " << m.optimizer_time.mean << " s/step\n";
  write_json(out / "manifest.json", {{"command", "eval"},
                                     {"controller", pid ? "pid" : "spmpc"},
                                     {"config", harness::to_json(cfg)},
                                     {"metrics", harness::to_json(m)},
                                     {"logs", write_logs(out / "logs", logs)}});
  return 0;
}

int cmd_ablate(const Common& c, const std::vector<double>& speeds, bool shared, bool no_pid) {
  const auto cfg = resolve(c);
  const fs::path out(c.out);
  fs::create_directories(out);
  harness::AblationOptions opts;
  opts.train_per_variant = !shared;
  opts.include_pid = !no_pid;
  const auto table = harness::run_ablation(cfg, harness::standard_variants(), speeds, opts);
  for (const auto& r : table.rows) {
    std::cout << r.variant << " @ " << r.current_speed << " m/s: " << r.metrics.distance.mean << " m\n";
  }
  for (const auto& cmp : table.comparisons) {
    std::cout << cmp.better << " < " << cmp.worse << " @ " << cmp.current_speed << ": p = " << cmp.test.p_value
              << '\n';
  }
  write_json(out / "manifest.json", {{"command", "ablate"}, {"config", harness::to_json(cfg)}});
  write_json(out / "ablation.json", harness::to_json(table));
  return 0;
}

int cmd_replay(const Common& c, const std::string& log_path) {
  const auto cfg = resolve(c);
  const auto log = harness::read_log(log_path);
  const int bad = harness::replay(log, cfg.sim);
  if (bad >= 0) {
    std::cout << "replay mismatch at step " << bad << '\n';
    return 3;
  }
  std::cout << "replay ok (" << log.steps.size() << " steps)\n";
  return 0;
}

int cmd_plot_data(const std::string& run_dir, const std::string& out_path) {
  const fs::path run(run_dir);
  std::ifstream in(run / "manifest.json");
  if (!in) throw std::runtime_error("no manifest.json in " + run_dir);
  const json manifest = json::parse(in);
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  out.precision(17);
  out << "log,kind,iteration,rollout,step,x,y,speed,heading,steering,throttle,distance,cost,optimizer_time_s\n";
  for (const auto& name : manifest.value("logs", json::array())) {
    const auto log = harness::read_log((run / name.get<std::string>()).string());
    for (const auto& r : log.steps) {
      out << name.get<std::string>() << ',' << log.kind << ',' << log.iteration << ',' << log.rollout << ','
          << r.index << ',' << r.next.x << ',' << r.next.y << ',' << r.next.speed << ',' << r.next.heading << ','
          << r.control(0) << ',' << r.control(1) << ',' << r.distance << ',' << r.cost << ',' << r.optimizer_time_s
          << '\n';
    }
  }
  if (manifest.contains("curve")) {
    std::ofstream curve(fs::path(out_path).replace_extension(".curve.csv"));
    curve.precision(17);
    curve << "iteration,samples,mean_distance,ci_low,ci_high,optimizer_time_s\n";
    for (const auto& it : manifest["curve"]) {
      const auto& d = it["metrics"]["distance"];
      curve << it["iteration"] << ',' << it["samples"] << ',' << d["mean"] << ',' << d["ci95"][0] << ','
            << d["ci95"][1] << ',' << it["metrics"]["optimizer_time_s"]["mean"] << '\n';
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse-GP model predictive control for a boat autopilot"};
  app.require_subcommand(1);

  Common train_opts;
  auto* train = app.add_subcommand("train", "Random exploration, then learn/act iterations");
  add_common(train, train_opts);

  Common eval_opts;
  std::string model_path;
  int rollouts = 0;
  bool pid = false;
  auto* eval = app.add_subcommand("eval", "Evaluate a saved model (or the PID baseline)");
  add_common(eval, eval_opts);
  eval->add_option("--model", model_path, "Model file written by train");
  eval->add_option("--rollouts", rollouts, "Evaluation rollouts (config value when omitted)");
  eval->add_flag("--pid", pid, "Evaluate the PID baseline instead");

  Common ablate_opts;
  std::vector<double> speeds{1.0, 3.0};
  bool shared = false;
  bool no_pid = false;
  auto* ablate = app.add_subcommand("ablate", "Controller ablation across current speeds");
  add_common(ablate, ablate_opts);
  ablate->add_option("--current-speeds", speeds, "Maximum current speeds, m/s")->delimiter(',');
  ablate->add_flag("--shared-model", shared, "Train one model per speed and share it across variants");
  ablate->add_flag("--no-pid", no_pid, "Skip the PID baseline row");

  Common replay_opts;
  std::string log_path;
  auto* rep = app.add_subcommand("replay", "Re-run a logged control trace and compare states bit for bit");
  add_common(rep, replay_opts, false);
  rep->add_option("--log", log_path, "Rollout log (.ndjson)")->required();

  Common show_opts;
  auto* show = app.add_subcommand("show-config", "Print the resolved config as JSON");
  add_common(show, show_opts, false);
  show->get_option("--seed")->required(false);

  std::string run_dir;
  std::string csv_path = "plot.csv";
  auto* plot = app.add_subcommand("plot-data", "Flatten a run's logs into CSV");
  plot->add_option("--run", run_dir, "Run directory containing manifest.json")->required();
  plot->add_option("--out", csv_path, "Output CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*train) return cmd_train(train_opts);
    if (*eval) return cmd_eval(eval_opts, model_path, rollouts, pid);
    if (*ablate) return cmd_ablate(ablate_opts, speeds, shared, no_pid);
    if (*rep) return cmd_replay(replay_opts, log_path);
    if (*plot) return cmd_plot_data(run_dir, csv_path);
    if (*show) {
      std::cout << harness::to_json(resolve(show_opts)).dump(2) << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
