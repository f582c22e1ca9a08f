// Command-line front end. Talks to the library only through glad.h.
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "glad/glad.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNotConverged = 2;
constexpr int kExitNumeric = 3;

struct Failure {
  int code;
};

int exit_code(glad_status s) {
  switch (s) {
    case GLAD_OK: return kExitOk;
    case GLAD_ERR_NOT_CONVERGED: return kExitNotConverged;
    case GLAD_ERR_NUMERIC: return kExitNumeric;
    default: return kExitUsage;
  }
}

void check(glad_status s, const std::string& context) {
  if (s == GLAD_OK) return;
  std::fprintf(stderr, "glad: %s: %s: %s\n", context.c_str(), glad_status_name(s), glad_last_error());
  throw Failure{exit_code(s)};
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using ConfigPtr = std::unique_ptr<glad_config, Deleter<glad_config, glad_config_free>>;
using FitPtr = std::unique_ptr<glad_fit, Deleter<glad_fit, glad_fit_free>>;
using TruthPtr = std::unique_ptr<glad_truth, Deleter<glad_truth, glad_truth_free>>;
using ReportPtr = std::unique_ptr<glad_report, Deleter<glad_report, glad_report_free>>;

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> sets;
  std::string seed;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("-c,--config", o.config_path, "key=value configuration file");
  cmd->add_option("--set", o.sets, "Override a configuration key (key=value); repeatable");
  cmd->add_option("--seed", o.seed, "Override the configuration seed");
}

ConfigPtr make_config(const CommonOptions& o) {
  glad_config* raw = nullptr;
  if (o.config_path.empty()) {
    check(glad_config_new(&raw), "config");
  } else {
    check(glad_config_load(o.config_path.c_str(), &raw), "config " + o.config_path);
  }
  ConfigPtr cfg(raw);
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "glad: --set expects key=value, got '%s'\n", kv.c_str());
      throw Failure{kExitUsage};
    }
    check(glad_config_set(cfg.get(), kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()), "--set " + kv);
  }
  if (!o.seed.empty()) check(glad_config_set(cfg.get(), "seed", o.seed.c_str()), "--seed");
  return cfg;
}

int worker_count() {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (n <= 0) n = 1;
  if (const char* env = std::getenv("GLAD_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || cap <= 0) {
      std::fprintf(stderr, "glad: GLAD_THREADS must be a positive integer\n");
      throw Failure{kExitUsage};
    }
    if (cap < n) n = static_cast<int>(cap);
  }
  return n;
}

int run_score(const CommonOptions& common, const std::string& fit_dir, const std::string& truth_path,
              const std::string& out_dir, const std::string& method, double fraction,
              const std::string& thresholds) {
  ConfigPtr cfg = make_config(common);
  if (fraction > 0) check(glad_config_set(cfg.get(), "fraction", std::to_string(fraction).c_str()), "--fraction");
  if (!thresholds.empty()) check(glad_config_set(cfg.get(), "thresholds", thresholds.c_str()), "--thresholds");
  glad_fit* fit_raw = nullptr;
  check(glad_fit_read(fit_dir.c_str(), &fit_raw), "fit " + fit_dir);
  FitPtr fit(fit_raw);
  TruthPtr truth;
  if (!truth_path.empty()) {
    glad_truth* t = nullptr;
    check(glad_truth_read(truth_path.c_str(), &t), "truth " + truth_path);
    truth.reset(t);
  }
  glad_report* rep_raw = nullptr;
  check(glad_score(fit.get(), cfg.get(), truth.get(), &rep_raw), "score");
  ReportPtr rep(rep_raw);
  const std::string name = method.empty() ? glad_fit_model(fit.get()) : method;
  check(glad_report_write(rep.get(), out_dir.c_str(), name.c_str()), "write report " + out_dir);

  std::vector<int> flagged(glad_report_num_flagged(rep.get()));
  check(glad_report_flagged(rep.get(), flagged.data(), flagged.size()), "report");
  std::printf("flagged groups:");
  for (int g : flagged) std::printf(" %d", g);
  std::printf("\n");
  if (glad_report_num_alarms(rep.get()) > 0) std::printf("alarms: %zu\n", glad_report_num_alarms(rep.get()));
  glad_metrics m;
  if (glad_report_metrics(rep.get(), &m) == GLAD_OK) {
    std::printf("accuracy %.6g precision %.6g recall %.6g f1 %.6g\n", m.accuracy, m.precision, m.recall, m.f1);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Group latent anomaly detection: generate, fit, score, evaluate, benchmark"};
  app.require_subcommand(1);

  CommonOptions gen_opts, fit_opts, score_opts, eval_opts, bench_opts;
  std::string gen_out;
  auto* gen = app.add_subcommand("generate", "Generate a synthetic dataset with ground truth");
  add_common(gen, gen_opts);
  gen->add_option("-o,--out", gen_out, "Output directory")->required();

  std::string model, data_dir, fit_out;
  auto* fitc = app.add_subcommand("fit", "Fit glad, glad0 or dglad to a dataset");
  add_common(fitc, fit_opts);
  fitc->add_option("model", model, "glad | glad0 | dglad")
      ->required()
      ->check(CLI::IsMember({"glad", "glad0", "dglad"}));
  fitc->add_option("-d,--data", data_dir, "Dataset directory")->required();
  fitc->add_option("-o,--out", fit_out, "Output directory")->required();

  std::string score_fit, score_truth, score_out, score_method, score_thr;
  double score_fraction = 0.0;
  auto* score = app.add_subcommand("score", "Score groups of a fitted model");
  add_common(score, score_opts);
  score->add_option("-f,--fit", score_fit, "Fit directory")->required();
  score->add_option("-t,--truth", score_truth, "Optional truth.json");
  score->add_option("-o,--out", score_out, "Output directory")->required();
  score->add_option("--method", score_method, "Method label in CSV output");
  score->add_option("--fraction", score_fraction, "Fraction of groups to flag");
  score->add_option("--thresholds", score_thr, "Comma-separated threshold grid");

  std::string eval_fit, eval_truth, eval_out, eval_method, eval_thr;
  double eval_fraction = 0.0;
  auto* eval = app.add_subcommand("evaluate", "Score a fit and compare with ground truth");
  add_common(eval, eval_opts);
  eval->add_option("-f,--fit", eval_fit, "Fit directory")->required();
  eval->add_option("-t,--truth", eval_truth, "truth.json")->required();
  eval->add_option("-o,--out", eval_out, "Output directory")->required();
  eval->add_option("--method", eval_method, "Method label in CSV output");
  eval->add_option("--fraction", eval_fraction, "Fraction of groups to flag");
  eval->add_option("--thresholds", eval_thr, "Comma-separated threshold grid");

  std::string bench_out;
  auto* bench = app.add_subcommand("benchmark", "Run the injection and change-detection suites");
  add_common(bench, bench_opts);
  bench->add_option("-o,--out", bench_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) {
      ConfigPtr cfg = make_config(gen_opts);
      check(glad_generate(cfg.get(), gen_out.c_str()), "generate");
      return kExitOk;
    }
    if (*fitc) {
      ConfigPtr cfg = make_config(fit_opts);
      glad_fit* raw = nullptr;
      check(glad_fit_run(model.c_str(), data_dir.c_str(), cfg.get(), &raw), "fit " + model);
      FitPtr fit(raw);
      check(glad_fit_write(fit.get(), fit_out.c_str()), "write fit " + fit_out);
      for (size_t i = 0; i < glad_fit_num_warnings(fit.get()); ++i) {
        std::fprintf(stderr, "glad: warning: %s\n", glad_fit_warning(fit.get(), i));
      }
      std::printf("%s: %zu trace entries\n", model.c_str(), glad_fit_trace_length(fit.get()));
      if (!glad_fit_converged(fit.get())) {
        std::fprintf(stderr, "glad: fit did not converge within max_iters\n");
        return kExitNotConverged;
      }
      return kExitOk;
    }
    if (*score) {
      return run_score(score_opts, score_fit, score_truth, score_out, score_method, score_fraction, score_thr);
    }
    if (*eval) {
      return run_score(eval_opts, eval_fit, eval_truth, eval_out, eval_method, eval_fraction, eval_thr);
    }
    if (*bench) {
      ConfigPtr cfg = make_config(bench_opts);
      int failed = 0;
      check(glad_benchmark(cfg.get(), bench_out.c_str(), worker_count(), &failed), "benchmark");
      if (failed > 0) std::fprintf(stderr, "glad: %d benchmark cells failed; see results\n", failed);
      return kExitOk;
    }
  } catch (const Failure& f) {
    return f.code;
  }
  return kExitUsage;
}
