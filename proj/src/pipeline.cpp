#include "glad/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <sstream>
#include <thread>

#include "glad/baselines.hpp"
#include "glad/dglad_mc.hpp"
#include "glad/glad0_vem.hpp"
#include "glad/glad_vem.hpp"
#include "json.hpp"

namespace glad {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::size_t positive_size(const Config& c, const std::string& key) {
  const long long v = c.get_int(key);
  if (v <= 0) throw ConfigError("config key '" + key + "' must be positive");
  return static_cast<std::size_t>(v);
}

InjectionConfig injection_config(const Config& c) {
  InjectionConfig cfg;
  cfg.N = positive_size(c, "N");
  cfg.M = positive_size(c, "M");
  cfg.K = positive_size(c, "K");
  cfg.V = positive_size(c, "V");
  cfg.anomaly_fraction = c.get_double("anomaly_fraction");
  cfg.normal_rate = c.get_doubles("normal_rate");
  cfg.anomalous_rate = c.get_doubles("anomalous_rate");
  cfg.trials_per_person = static_cast<int>(c.get_int("trials"));
  cfg.block_in = c.get_double("block_in");
  cfg.block_out = c.get_double("block_out");
  cfg.role_purity = c.get_double("role_purity");
  cfg.seed = c.get_u64("seed");
  try {
    cfg.check();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

AlphaMode alpha_mode(const Config& c) {
  const std::string m = c.get("alpha_mode");
  if (m == "fixed") return AlphaMode::kFixed;
  if (m == "newton") return AlphaMode::kNewton;
  throw ConfigError("alpha_mode must be fixed or newton");
}

GladFitConfig glad_config(const Config& c) {
  GladFitConfig g;
  g.max_iters = static_cast<int>(c.get_int("max_iters"));
  g.tol = c.get_double("tol");
  g.seed = c.get_u64("seed");
  g.alpha_mode = alpha_mode(c);
  g.alpha0 = c.get_double("alpha0");
  g.init_noise = c.get_double("init_noise");
  g.restarts = static_cast<int>(c.get_int("restarts"));
  if (!(g.alpha0 > 0.0)) throw ConfigError("alpha0 must be positive");
  return g;
}

Glad0FitConfig glad0_config(const Config& c) {
  Glad0FitConfig g;
  g.max_iters = static_cast<int>(c.get_int("max_iters"));
  g.tol = c.get_double("tol");
  g.inner_max = static_cast<int>(c.get_int("inner_max"));
  g.inner_tol = c.get_double("inner_tol");
  g.seed = c.get_u64("seed");
  g.alpha_mode = alpha_mode(c);
  g.alpha0 = c.get_double("alpha0");
  g.rho = c.get_double("rho");
  g.init_noise = c.get_double("init_noise");
  g.restarts = static_cast<int>(c.get_int("glad0_restarts"));
  if (!(g.alpha0 > 0.0)) throw ConfigError("alpha0 must be positive");
  if (g.rho < 0.0 || g.rho >= 1.0) throw ConfigError("rho must lie in [0, 1)");
  return g;
}

MatrixD planted_B(std::size_t M, double in, double out) {
  MatrixD B(M, M, out);
  for (std::size_t m = 0; m < M; ++m) B(m, m) = in;
  return B;
}

json matrix_json(const MatrixD& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  return rows;
}

MatrixD matrix_from(const json& j) {
  if (!j.is_array() || j.empty()) return {};
  MatrixD m(j.size(), j[0].size());
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (j[r].size() != m.cols()) throw FormatError("ragged matrix in fit.json");
    for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

std::string matrix_csv(const MatrixD& m, const std::string& row_name, const std::string& col_prefix) {
  std::ostringstream out;
  out << row_name;
  for (std::size_t c = 0; c < m.cols(); ++c) out << ',' << col_prefix << c + 1;
  out << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out << r;
    for (std::size_t c = 0; c < m.cols(); ++c) out << ',' << format_double(m(r, c));
    out << '\n';
  }
  return out.str();
}

MatrixD log_matrix(const MatrixD& m) {
  MatrixD out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.data().size(); ++i) out.data()[i] = std::log(std::max(m.data()[i], kLogFloor));
  return out;
}

MatrixD softmax_rows(const MatrixD& m) {
  MatrixD out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto s = softmax(m.row(r));
    std::copy(s.begin(), s.end(), out.row(r).begin());
  }
  return out;
}

std::vector<int> remap(const std::vector<int>& groups, const std::vector<int>& map) {
  std::vector<int> out;
  for (int g : groups) out.push_back(map.at(static_cast<std::size_t>(g)));
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t label_count(const std::vector<int>& a, const std::vector<int>& b, std::size_t M) {
  int mx = static_cast<int>(M) - 1;
  for (int x : a) mx = std::max(mx, x);
  for (int x : b) mx = std::max(mx, x);
  return static_cast<std::size_t>(mx + 1);
}

DGladParams dglad_init_from(const GladFit& f) {
  DGladParams P;
  P.alpha = f.params.alpha;
  P.B = f.params.B;
  P.beta = f.params.beta;
  P.theta0 = log_matrix(f.params.theta);
  return P;
}

DGladConfig dglad_config(const Config& c, double sigma) {
  DGladConfig d;
  d.sweeps = static_cast<int>(c.get_int("sweeps"));
  d.burn_in = static_cast<int>(c.get_int("burn_in"));
  d.particles = static_cast<int>(c.get_int("particles"));
  d.sigma = sigma;
  d.seed = c.get_u64("seed");
  if (d.sweeps < 0 || d.burn_in < 0) throw ConfigError("sweeps and burn_in must be non-negative");
  if (d.particles < 2) throw ConfigError("particles must be at least 2");
  if (d.sigma < 0.0) throw ConfigError("sigma must be non-negative");
  return d;
}

}  // namespace

// ---------------------------------------------------------------- generate

void cmd_generate(const Config& config, const fs::path& out_dir) {
  const std::string mode = config.get("mode");
  const InjectionConfig cfg = injection_config(config);
  fs::create_directories(out_dir);
  GroundTruth truth;
  if (mode == "injection") {
    auto s = inject_anomalies(cfg);
    write_dataset(out_dir, s.data);
    truth = std::move(s.truth);
  } else if (mode == "dynamic") {
    const long long T = config.get_int("T");
    const long long ct = config.get_int("change_time");
    if (T < 1) throw ConfigError("T must be positive");
    if (ct <= 1 || ct > T) throw ConfigError("change_time must satisfy 1 < change_time <= T");
    auto s = inject_dynamic_change(cfg, static_cast<std::size_t>(T), static_cast<std::size_t>(ct),
                                   config.get_double("changed_fraction"), config.get_double("walk_sigma"),
                                   cfg.seed);
    write_dataset(out_dir, s.data);
    truth = std::move(s.truth);
  } else if (mode == "glad" || mode == "glad0") {
    // Planted rates and emissions from the injection design; memberships
    // drawn from Dir(gen_alpha).
    const auto planted = inject_anomalies(cfg).truth;
    ModelParams params = ModelParams::uniform(cfg.M, cfg.K, cfg.V, config.get_double("gen_alpha"));
    params.B = planted_B(cfg.M, cfg.block_in, cfg.block_out);
    params.theta = planted.theta;
    params.beta = planted.beta;
    try {
      require_valid(params);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    if (mode == "glad") {
      auto s = generate_glad(params, cfg.N, cfg.trials_per_person, cfg.seed);
      write_dataset(out_dir, s.data);
      truth = std::move(s.truth);
    } else {
      const long long A = config.get_int("activities");
      if (A < 0) throw ConfigError("activities must be non-negative");
      auto s = generate_glad0(params, cfg.N, std::vector<int>(cfg.N, static_cast<int>(A)), cfg.seed);
      write_dataset(out_dir, s.data);
      truth = std::move(s.truth);
    }
    truth.anomalous_groups = planted.anomalous_groups;
    truth.normal_rate = planted.normal_rate;
    truth.anomalous_rate = planted.anomalous_rate;
  } else {
    throw ConfigError("mode must be injection, dynamic, glad or glad0");
  }
  write_truth(out_dir / "truth.json", truth);
  write_text(out_dir / "config.resolved.txt", config.resolved());
}

// ---------------------------------------------------------------- fit

FitArtifacts run_fit(const std::string& model, const fs::path& data_dir, const Config& config) {
  const std::size_t M = positive_size(config, "M");
  const std::size_t K = positive_size(config, "K");
  FitArtifacts out;
  out.model = model;
  out.seed = config.get_u64("seed");
  if (model == "glad") {
    const Dataset data = load_static(data_dir);
    GladFit f = fit(data, M, K, glad_config(config));
    out.params = f.params;
    out.gamma = f.state.gamma;
    out.lambda = f.state.lambda;
    out.mu = f.state.mu;
    out.grouping = map_grouping(out.lambda);
    out.trace = f.trace;
    out.converged = f.converged;
    out.warnings = f.warnings;
  } else if (model == "glad0") {
    const ActivityDataset data = load_activity(data_dir);
    Glad0Fit f = fit0(data, M, K, glad0_config(config));
    out.params = f.params;
    out.gamma = f.state.gamma;
    out.lambda = person_lambda0(f.state);
    out.mu = person_mu0(f.state, K);
    out.grouping = grouping0(f.state);
    out.trace = f.trace;
    out.converged = f.converged;
    out.warnings = f.warnings;
  } else if (model == "dglad") {
    const DynamicDataset data = load_dynamic(data_dir);
    // Fixed inputs of the sampler come from a GLAD fit on the first snapshot.
    GladFit init = fit(data.snapshots[0], M, K, glad_config(config));
    const DGladParams P = dglad_init_from(init);
    const DGladResult r = run_sampler(data, P, dglad_config(config, config.get_double("sigma")));
    const std::size_t T = data.T();
    const std::size_t N = data.N();
    out.params = init.params;
    out.params.theta = softmax_rows(r.theta_mean.back());
    out.theta0 = P.theta0;
    out.theta_path = r.theta_mean;
    out.G_t = r.trace.G;
    out.R_t = r.trace.R;
    out.lambda = MatrixD(N, M, 0.0);
    out.mu = MatrixD(N, K, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t p = 0; p < N; ++p) {
        out.lambda(p, static_cast<std::size_t>(r.trace.G[t][p])) += 1.0 / static_cast<double>(T);
        out.mu(p, static_cast<std::size_t>(r.trace.R[t][p])) += 1.0 / static_cast<double>(T);
      }
    }
    out.grouping = map_grouping(out.lambda);
    out.trace = r.log_joint;
    out.converged = true;
    for (const auto& w : init.warnings) out.warnings.push_back("initial GLAD fit: " + w);
  } else {
    throw ConfigError("model must be glad, glad0 or dglad");
  }
  return out;
}

void write_fit(const fs::path& out_dir, const FitArtifacts& f) {
  fs::create_directories(out_dir);
  json j;
  j["model"] = f.model;
  j["seed"] = f.seed;
  j["M"] = f.params.M;
  j["K"] = f.params.K;
  j["V"] = f.params.V;
  j["N"] = f.lambda.rows();
  j["converged"] = f.converged;
  j["warnings"] = f.warnings;
  j["trace"] = f.trace;
  j["params"] = {{"alpha", f.params.alpha},
                 {"B", matrix_json(f.params.B)},
                 {"theta", matrix_json(f.params.theta)},
                 {"beta", matrix_json(f.params.beta)}};
  j["gamma"] = matrix_json(f.gamma);
  j["lambda"] = matrix_json(f.lambda);
  j["mu"] = matrix_json(f.mu);
  j["grouping"] = f.grouping;
  if (f.model == "dglad") {
    j["theta0"] = matrix_json(f.theta0);
    json path = json::array();
    for (const auto& m : f.theta_path) path.push_back(matrix_json(m));
    j["theta_path"] = path;
    j["G_t"] = f.G_t;
    j["R_t"] = f.R_t;
  }
  write_text(out_dir / "fit.json", j.dump(1) + "\n");

  std::ostringstream trace;
  trace << (f.model == "dglad" ? "sweep,log_joint\n" : "iteration,elbo\n");
  for (std::size_t i = 0; i < f.trace.size(); ++i) trace << i + 1 << ',' << format_double(f.trace[i]) << '\n';
  write_text(out_dir / "trace.csv", trace.str());

  std::ostringstream alpha;
  alpha << "group,alpha\n";
  for (std::size_t m = 0; m < f.params.alpha.size(); ++m) alpha << m << ',' << format_double(f.params.alpha[m]) << '\n';
  write_text(out_dir / "params_alpha.csv", alpha.str());
  write_text(out_dir / "params_B.csv", matrix_csv(f.params.B, "group", "g_"));
  write_text(out_dir / "params_theta.csv", matrix_csv(f.params.theta, "group", "r_"));
  write_text(out_dir / "params_beta.csv", matrix_csv(f.params.beta, "feature", "r_"));
  write_text(out_dir / "posterior_lambda.csv", matrix_csv(f.lambda, "node_id", "g_"));
  write_text(out_dir / "posterior_mu.csv", matrix_csv(f.mu, "node_id", "r_"));
  std::ostringstream grouping;
  grouping << "node_id,group\n";
  for (std::size_t p = 0; p < f.grouping.size(); ++p) grouping << p << ',' << f.grouping[p] << '\n';
  write_text(out_dir / "grouping.csv", grouping.str());

  if (f.model == "dglad") {
    std::ostringstream path;
    path << "t,group";
    for (std::size_t k = 0; k < f.theta0.cols(); ++k) path << ",theta_" << k + 1;
    path << '\n';
    for (std::size_t t = 0; t < f.theta_path.size(); ++t) {
      for (std::size_t m = 0; m < f.theta_path[t].rows(); ++m) {
        path << t + 1 << ',' << m;
        for (double v : f.theta_path[t].row(m)) path << ',' << format_double(v);
        path << '\n';
      }
    }
    write_text(out_dir / "theta_path.csv", path.str());
    std::ostringstream assign;
    assign << "t,node_id,group,role\n";
    for (std::size_t t = 0; t < f.G_t.size(); ++t) {
      for (std::size_t p = 0; p < f.G_t[t].size(); ++p) {
        assign << t + 1 << ',' << p << ',' << f.G_t[t][p] << ',' << f.R_t[t][p] << '\n';
      }
    }
    write_text(out_dir / "assignments.csv", assign.str());
  }
}

FitArtifacts read_fit(const fs::path& fit_dir) {
  const fs::path file = fit_dir / "fit.json";
  if (!fs::exists(file)) throw IoError("missing fit artifact " + file.string());
  FitArtifacts f;
  try {
    const json j = json::parse(read_text(file));
    f.model = j.at("model").get<std::string>();
    f.seed = j.at("seed").get<std::uint64_t>();
    f.converged = j.at("converged").get<bool>();
    f.warnings = j.at("warnings").get<std::vector<std::string>>();
    f.trace = j.at("trace").get<std::vector<double>>();
    const json& p = j.at("params");
    f.params.M = j.at("M").get<std::size_t>();
    f.params.K = j.at("K").get<std::size_t>();
    f.params.V = j.at("V").get<std::size_t>();
    f.params.alpha = p.at("alpha").get<std::vector<double>>();
    f.params.B = matrix_from(p.at("B"));
    f.params.theta = matrix_from(p.at("theta"));
    f.params.beta = matrix_from(p.at("beta"));
    f.gamma = matrix_from(j.at("gamma"));
    f.lambda = matrix_from(j.at("lambda"));
    f.mu = matrix_from(j.at("mu"));
    f.grouping = j.at("grouping").get<std::vector<int>>();
    if (f.model == "dglad") {
      f.theta0 = matrix_from(j.at("theta0"));
      for (const auto& m : j.at("theta_path")) f.theta_path.push_back(matrix_from(m));
      f.G_t = j.at("G_t").get<std::vector<std::vector<int>>>();
      f.R_t = j.at("R_t").get<std::vector<std::vector<int>>>();
    }
  } catch (const json::exception& e) {
    throw FormatError(file.string() + ": " + e.what());
  }
  return f;
}

// ---------------------------------------------------------------- score

std::vector<int> dynamic_label_map(const std::vector<std::vector<int>>& G_t,
                                   const std::vector<int>& truth_grouping, std::size_t M) {
  std::vector<int> fitted, truth;
  for (const auto& g : G_t) {
    if (g.size() != truth_grouping.size()) throw std::invalid_argument("truth grouping length differs from N");
    fitted.insert(fitted.end(), g.begin(), g.end());
    truth.insert(truth.end(), truth_grouping.begin(), truth_grouping.end());
  }
  return match_labels(fitted, truth, label_count(fitted, truth, M));
}

std::vector<int> truth_label_map(const FitArtifacts& fit, const GroundTruth& truth) {
  if (truth.G.empty()) return {};
  if (truth.G.size() != fit.grouping.size()) {
    throw FormatError("truth grouping has " + std::to_string(truth.G.size()) + " nodes, fit has " +
                      std::to_string(fit.grouping.size()));
  }
  if (fit.model == "dglad") return dynamic_label_map(fit.G_t, truth.G, fit.params.M);
  return match_labels(fit.grouping, truth.G, label_count(fit.grouping, truth.G, fit.params.M));
}

AnomalyReport score_fit(const FitArtifacts& fit, const Config& config, const GroundTruth* truth) {
  AnomalyReport rep;
  const std::size_t M = fit.params.M;
  const double fraction = config.get_double("fraction");
  if (truth) rep.label_map = truth_label_map(fit, *truth);

  if (fit.model == "dglad") {
    rep.score_kind = "change";
    if (fit.theta_path.size() < 2) {
      rep.warnings.push_back("fewer than two snapshots; no change scores");
      rep.group_scores.assign(M, 0.0);
    } else {
      rep.change_scores = dynamic_change_score(fit.theta_path);
      rep.group_scores.assign(M, 0.0);
      for (const auto& row : rep.change_scores) {
        for (std::size_t m = 0; m < M; ++m) rep.group_scores[m] = std::max(rep.group_scores[m], row[m]);
      }
      rep.alarms = alarms(rep.change_scores, config.get_double("alarm_threshold"));
    }
    rep.ranking = rank_groups(rep.group_scores);
    rep.flagged = top_fraction(rep.group_scores, fraction);
    if (truth && !rep.label_map.empty() && !rep.change_scores.empty()) {
      std::vector<std::vector<double>> mapped(rep.change_scores.size(),
                                              std::vector<double>(rep.label_map.size(), 0.0));
      for (std::size_t i = 0; i < rep.change_scores.size(); ++i) {
        for (std::size_t m = 0; m < M; ++m) mapped[i][static_cast<std::size_t>(rep.label_map[m])] = rep.change_scores[i][m];
      }
      rep.fpr = fpr_curve(mapped, truth->change_times, config.get_doubles("thresholds"));
      int tp = 0, fp = 0, positives = static_cast<int>(truth->change_times.size());
      for (const auto& a : rep.alarms) {
        const auto it = truth->change_times.find(rep.label_map[static_cast<std::size_t>(a.group)]);
        (it != truth->change_times.end() && it->second == a.t ? tp : fp) += 1;
      }
      if (positives == 0) throw std::invalid_argument("ground truth has no change times");
      rep.metrics = metrics_from_counts(tp, fp, positives - tp);
    }
    return rep;
  }

  const std::string kind = config.get("score_kind");
  rep.score_kind = kind;
  if (kind == "model") {
    auto s = static_group_score(fit.lambda, fit.mu, fit.params.theta, fit.grouping);
    rep.group_scores = std::move(s.scores);
    rep.warnings = std::move(s.warnings);
  } else if (kind == "global") {
    auto s = global_rate_score(fit.mu, fit.grouping, M);
    rep.group_scores = std::move(s.scores);
    rep.warnings = std::move(s.warnings);
  } else if (kind == "oracle") {
    if (!truth || truth->normal_rate.empty() || truth->beta.rows() == 0) {
      throw ConfigError("score_kind=oracle needs a truth file with normal_rate and beta");
    }
    const auto roles = match_roles(fit.params.beta, truth->beta);
    rep.group_scores = oracle_rate_score(permute_columns(fit.params.theta, roles), truth->normal_rate);
  } else {
    throw ConfigError("score_kind must be model, global or oracle");
  }
  rep.ranking = rank_groups(rep.group_scores);
  rep.flagged = top_fraction(rep.group_scores, fraction);
  if (truth && !rep.label_map.empty()) {
    rep.metrics = evaluate(remap(rep.flagged, rep.label_map), truth->anomalous_groups);
  }
  return rep;
}

std::string report_to_json(const AnomalyReport& r) {
  json j;
  j["score_kind"] = r.score_kind;
  j["group_scores"] = r.group_scores;
  j["ranking"] = r.ranking;
  j["flagged"] = r.flagged;
  j["change_scores"] = r.change_scores;
  json al = json::array();
  for (const auto& a : r.alarms) al.push_back({{"group", a.group}, {"t", a.t}});
  j["alarms"] = al;
  if (r.metrics) {
    j["metrics"] = {{"accuracy", r.metrics->accuracy},
                    {"precision", r.metrics->precision},
                    {"recall", r.metrics->recall},
                    {"f1", r.metrics->f1}};
  } else {
    j["metrics"] = nullptr;
  }
  json fpr = json::array();
  for (const auto& p : r.fpr) fpr.push_back({{"threshold", p.threshold}, {"fpr", p.fpr}, {"recall", p.recall}});
  j["fpr"] = fpr;
  j["label_map"] = r.label_map;
  j["warnings"] = r.warnings;
  return j.dump(2) + "\n";
}

AnomalyReport report_from_json(const std::string& text) {
  AnomalyReport r;
  try {
    const json j = json::parse(text);
    r.score_kind = j.at("score_kind").get<std::string>();
    r.group_scores = j.at("group_scores").get<std::vector<double>>();
    r.ranking = j.at("ranking").get<std::vector<int>>();
    r.flagged = j.at("flagged").get<std::vector<int>>();
    r.change_scores = j.at("change_scores").get<std::vector<std::vector<double>>>();
    for (const auto& a : j.at("alarms")) r.alarms.push_back({a.at("group").get<int>(), a.at("t").get<int>()});
    if (!j.at("metrics").is_null()) {
      const json& m = j.at("metrics");
      r.metrics = Metrics{m.at("precision").get<double>(), m.at("recall").get<double>(),
                          m.at("f1").get<double>(), m.at("accuracy").get<double>()};
    }
    for (const auto& p : j.at("fpr")) {
      r.fpr.push_back({p.at("threshold").get<double>(), p.at("fpr").get<double>(), p.at("recall").get<double>()});
    }
    r.label_map = j.at("label_map").get<std::vector<int>>();
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("report JSON: ") + e.what());
  }
  return r;
}

void write_report(const fs::path& out_dir, const AnomalyReport& r, const std::string& method) {
  fs::create_directories(out_dir);
  write_text(out_dir / "report.json", report_to_json(r));

  std::vector<int> rank_of(r.group_scores.size(), 0);
  for (std::size_t i = 0; i < r.ranking.size(); ++i) rank_of[static_cast<std::size_t>(r.ranking[i])] = static_cast<int>(i + 1);
  std::ostringstream scores;
  scores << "group,score,rank,flagged\n";
  for (std::size_t m = 0; m < r.group_scores.size(); ++m) {
    const bool flagged = std::find(r.flagged.begin(), r.flagged.end(), static_cast<int>(m)) != r.flagged.end();
    scores << m << ',' << format_double(r.group_scores[m]) << ',' << rank_of[m] << ',' << (flagged ? 1 : 0) << '\n';
  }
  write_text(out_dir / "scores.csv", scores.str());

  if (!r.change_scores.empty()) {
    std::ostringstream cs;
    cs << "t,group,score\n";
    for (std::size_t i = 0; i < r.change_scores.size(); ++i) {
      for (std::size_t m = 0; m < r.change_scores[i].size(); ++m) {
        cs << i + 2 << ',' << m << ',' << format_double(r.change_scores[i][m]) << '\n';
      }
    }
    write_text(out_dir / "change_scores.csv", cs.str());
    std::ostringstream al;
    al << "group,t\n";
    for (const auto& a : r.alarms) al << a.group << ',' << a.t << '\n';
    write_text(out_dir / "alarms.csv", al.str());
  }
  if (r.metrics) {
    std::ostringstream acc;
    acc << "method,accuracy,precision,recall,f1\n"
        << method << ',' << format_double(r.metrics->accuracy) << ',' << format_double(r.metrics->precision) << ','
        << format_double(r.metrics->recall) << ',' << format_double(r.metrics->f1) << '\n';
    write_text(out_dir / "accuracy.csv", acc.str());
  }
  if (!r.fpr.empty()) {
    std::ostringstream fpr;
    fpr << "method,threshold,fpr,recall\n";
    Series fs_{method, {}, {}};
    for (const auto& p : r.fpr) {
      fpr << method << ',' << format_double(p.threshold) << ',' << format_double(p.fpr) << ','
          << format_double(p.recall) << '\n';
      fs_.x.push_back(p.threshold);
      fs_.y.push_back(p.fpr);
    }
    write_text(out_dir / "fpr.csv", fpr.str());
    write_text(out_dir / "fpr.svg", svg_line_plot("False positive rate", "threshold", "FPR", {fs_}));
  }
}

// ---------------------------------------------------------------- cells

Metrics run_injection_cell(const InjectionConfig& cfg, const std::string& method, const Config& fit_config) {
  const StaticSample s = inject_anomalies(cfg);
  GladFitConfig gc = glad_config(fit_config);
  gc.seed = cfg.seed;
  const double fraction = fit_config.get_double("fraction");
  std::vector<int> grouping;
  MatrixD rates, beta;
  if (method == "glad") {
    const GladFit f = fit(s.data, cfg.M, cfg.K, gc);
    grouping = map_grouping(f.state.lambda);
    rates = f.params.theta;
    beta = f.params.beta;
  } else if (method == "mmsb-lda") {
    const MmsbResult mm = fit_mmsb(s.data, cfg.M, gc);
    grouping = mm.grouping;
    GroupLdaConfig lc;
    lc.seed = cfg.seed;
    const GroupLdaResult lda = fit_group_lda(s.data.X, grouping, cfg.M, cfg.K, lc);
    rates = lda.rates;
    beta = lda.beta;
  } else {
    throw ConfigError("unknown method " + method);
  }
  const auto groups = match_labels(grouping, s.truth.G, cfg.M);
  const auto scores = oracle_rate_score(permute_columns(rates, match_roles(beta, s.truth.beta)), cfg.normal_rate);
  return evaluate(remap(top_fraction(scores, fraction), groups), s.truth.anomalous_groups);
}

std::vector<FprPoint> run_dynamic_cell(const InjectionConfig& cfg, std::size_t T, std::size_t change_time,
                                       double changed_fraction, double walk_sigma, const Config& fit_config,
                                       double sampler_sigma) {
  const DynamicSample s = inject_dynamic_change(cfg, T, change_time, changed_fraction, walk_sigma, cfg.seed);
  GladFitConfig gc = glad_config(fit_config);
  gc.seed = cfg.seed;
  const GladFit init = fit(s.data.snapshots[0], cfg.M, cfg.K, gc);
  DGladConfig dc = dglad_config(fit_config, sampler_sigma);
  dc.seed = cfg.seed;
  const DGladResult r = run_sampler(s.data, dglad_init_from(init), dc);
  const auto map = dynamic_label_map(r.trace.G, s.truth.G, cfg.M);
  const auto scores = dynamic_change_score(r.theta_mean);
  std::vector<std::vector<double>> mapped(scores.size(), std::vector<double>(cfg.M, 0.0));
  for (std::size_t i = 0; i < scores.size(); ++i) {
    for (std::size_t m = 0; m < cfg.M; ++m) mapped[i][static_cast<std::size_t>(map[m])] = scores[i][m];
  }
  return fpr_curve(mapped, s.truth.change_times);
}

double fpr_at_full_recall(const std::vector<FprPoint>& curve) {
  double best = 1.0;
  for (const auto& p : curve) {
    if (p.recall >= 1.0) best = std::min(best, p.fpr);
  }
  return best;
}

// ---------------------------------------------------------------- benchmark

namespace {

void run_pool(std::vector<std::function<void()>>& jobs, int threads) {
  const std::size_t n = jobs.size();
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) jobs[i]();
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < std::min(workers, n); ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
}

struct StaticCell {
  std::size_t M = 0;
  std::uint64_t seed = 0;
  std::string method;
  Metrics metrics;
  std::string status = "ok";
};

struct DynamicCell {
  std::uint64_t seed = 0;
  std::vector<FprPoint> curve;
  std::string status = "ok";
};

std::string csv_field(std::string s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

int cmd_benchmark(const Config& config, const fs::path& out_dir, int threads) {
  fs::create_directories(out_dir);
  const InjectionConfig base = injection_config(config);
  const auto counts = config.get_ints("group_counts");
  const long long n_seeds = config.get_int("bench_seeds");
  const long long n_dyn = config.get_int("dynamic_seeds");
  if (n_seeds < 0 || n_dyn < 0) throw ConfigError("seed counts must be non-negative");
  for (long long m : counts) {
    if (m <= 0) throw ConfigError("group_counts entries must be positive");
  }
  const std::vector<std::string> methods = {"glad", "mmsb-lda"};

  std::vector<StaticCell> cells;
  for (long long m : counts) {
    for (long long s = 0; s < n_seeds; ++s) {
      for (const auto& method : methods) {
        StaticCell c;
        c.M = static_cast<std::size_t>(m);
        c.seed = base.seed + static_cast<std::uint64_t>(s);
        c.method = method;
        cells.push_back(c);
      }
    }
  }
  std::vector<DynamicCell> dyn(static_cast<std::size_t>(n_dyn));
  for (std::size_t i = 0; i < dyn.size(); ++i) dyn[i].seed = base.seed + i;

  InjectionConfig dyn_base = base;
  dyn_base.N = positive_size(config, "dynamic_N");
  dyn_base.M = positive_size(config, "dynamic_M");
  const auto T = static_cast<std::size_t>(config.get_int("T"));
  const auto change_time = static_cast<std::size_t>(config.get_int("change_time"));
  if (n_dyn > 0 && (change_time <= 1 || change_time > T)) {
    throw ConfigError("change_time must satisfy 1 < change_time <= T");
  }

  std::vector<std::function<void()>> jobs;
  for (auto& c : cells) {
    jobs.emplace_back([&c, &base, &config] {
      try {
        InjectionConfig cfg = base;
        cfg.M = c.M;
        cfg.seed = c.seed;
        c.metrics = run_injection_cell(cfg, c.method, config);
      } catch (const std::exception& e) {
        c.status = std::string("error: ") + e.what();
      }
    });
  }
  for (auto& d : dyn) {
    jobs.emplace_back([&d, &dyn_base, &config, T, change_time] {
      try {
        InjectionConfig cfg = dyn_base;
        cfg.seed = d.seed;
        d.curve = run_dynamic_cell(cfg, T, change_time, config.get_double("changed_fraction"),
                                   config.get_double("walk_sigma"), config, config.get_double("dynamic_sigma"));
      } catch (const std::exception& e) {
        d.status = std::string("error: ") + e.what();
      }
    });
  }
  run_pool(jobs, threads);

  int failed = 0;
  std::ostringstream results;
  results << "group_count,seed,method,accuracy,precision,recall,f1,status\n";
  for (const auto& c : cells) {
    const bool ok = c.status == "ok";
    failed += ok ? 0 : 1;
    results << c.M << ',' << c.seed << ',' << c.method << ',';
    if (ok) {
      results << format_double(c.metrics.accuracy) << ',' << format_double(c.metrics.precision) << ','
              << format_double(c.metrics.recall) << ',' << format_double(c.metrics.f1);
    } else {
      results << ",,,";
    }
    results << ',' << csv_field(c.status) << '\n';
  }
  write_text(out_dir / "results.csv", results.str());

  std::ostringstream summary;
  summary << "group_count,method,mean_accuracy,std_accuracy,n_ok,n_failed\n";
  std::vector<Series> acc_series;
  for (const auto& method : methods) {
    Series s{method, {}, {}};
    for (long long m : counts) {
      std::vector<double> v;
      int bad = 0;
      for (const auto& c : cells) {
        if (c.method != method || c.M != static_cast<std::size_t>(m)) continue;
        if (c.status == "ok") v.push_back(c.metrics.accuracy); else ++bad;
      }
      double mean = 0.0, sd = 0.0;
      for (double x : v) mean += x;
      if (!v.empty()) mean /= static_cast<double>(v.size());
      for (double x : v) sd += (x - mean) * (x - mean);
      sd = v.size() > 1 ? std::sqrt(sd / static_cast<double>(v.size() - 1)) : 0.0;
      summary << m << ',' << method << ',' << (v.empty() ? std::string() : format_double(mean)) << ','
              << (v.empty() ? std::string() : format_double(sd)) << ',' << v.size() << ',' << bad << '\n';
      if (!v.empty()) {
        s.x.push_back(static_cast<double>(m));
        s.y.push_back(mean);
      }
    }
    acc_series.push_back(std::move(s));
  }
  write_text(out_dir / "summary.csv", summary.str());
  if (!cells.empty()) {
    write_text(out_dir / "accuracy.svg",
               svg_line_plot("Detection accuracy", "number of groups", "mean accuracy", acc_series));
  }

  if (!dyn.empty()) {
    std::ostringstream fpr, dsum;
    fpr << "seed,threshold,fpr,recall\n";
    dsum << "seed,fpr_at_full_recall,fpr_non_increasing,status\n";
    std::vector<Series> curves;
    for (const auto& d : dyn) {
      if (d.status != "ok") {
        ++failed;
        dsum << d.seed << ",,," << csv_field(d.status) << '\n';
        continue;
      }
      Series s{"seed " + std::to_string(d.seed), {}, {}};
      bool mono = true;
      for (std::size_t i = 0; i < d.curve.size(); ++i) {
        const auto& p = d.curve[i];
        fpr << d.seed << ',' << format_double(p.threshold) << ',' << format_double(p.fpr) << ','
            << format_double(p.recall) << '\n';
        if (i > 0 && p.fpr > d.curve[i - 1].fpr) mono = false;
        s.x.push_back(p.threshold);
        s.y.push_back(p.fpr);
      }
      dsum << d.seed << ',' << format_double(fpr_at_full_recall(d.curve)) << ',' << (mono ? 1 : 0) << ",ok\n";
      curves.push_back(std::move(s));
    }
    write_text(out_dir / "dglad_fpr.csv", fpr.str());
    write_text(out_dir / "dglad_summary.csv", dsum.str());
    write_text(out_dir / "dglad_fpr.svg", svg_line_plot("d-GLAD false positive rate", "threshold", "FPR", curves));
  }
  write_text(out_dir / "config.resolved.txt", config.resolved());
  return failed;
}

// ---------------------------------------------------------------- svg

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fixed(double x, int digits) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(digits) << x;
  return o.str();
}

}  // namespace

std::string svg_line_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                          const std::vector<Series>& series) {
  constexpr double W = 640, H = 420, L = 70, R = 150, Tm = 40, Bm = 60;
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                 "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (double x : s.x) { x0 = std::min(x0, x); x1 = std::max(x1, x); }
    for (double y : s.y) { y0 = std::min(y0, y); y1 = std::max(y1, y); }
  }
  if (!std::isfinite(x0)) { x0 = 0; x1 = 1; y0 = 0; y1 = 1; }
  y0 = std::min(y0, 0.0);
  if (x1 - x0 < 1e-12) { x0 -= 0.5; x1 += 0.5; }
  if (y1 - y0 < 1e-12) y1 = y0 + 1.0;
  const double pw = W - L - R, ph = H - Tm - Bm;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return Tm + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
    << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << xml_escape(title) << "</text>\n";
  o << "<rect x=\"" << L << "\" y=\"" << Tm << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = x0 + (x1 - x0) * i / 5.0, yv = y0 + (y1 - y0) * i / 5.0;
    o << "<line x1=\"" << fixed(px(xv), 2) << "\" y1=\"" << Tm + ph << "\" x2=\"" << fixed(px(xv), 2) << "\" y2=\""
      << Tm + ph + 5 << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << fixed(px(xv), 2) << "\" y=\"" << Tm + ph + 18 << "\" text-anchor=\"middle\">" << fixed(xv, 3)
      << "</text>\n";
    o << "<line x1=\"" << L - 5 << "\" y1=\"" << fixed(py(yv), 2) << "\" x2=\"" << L << "\" y2=\"" << fixed(py(yv), 2)
      << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << L - 8 << "\" y=\"" << fixed(py(yv) + 4, 2) << "\" text-anchor=\"end\">" << fixed(yv, 3)
      << "</text>\n";
  }
  o << "<text x=\"" << L + pw / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">" << xml_escape(xlabel)
    << "</text>\n";
  o << "<text x=\"18\" y=\"" << Tm + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << Tm + ph / 2
    << ")\">" << xml_escape(ylabel) << "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const char* color = colors[i % 10];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t j = 0; j < std::min(s.x.size(), s.y.size()); ++j) {
      o << (j ? " " : "") << fixed(px(s.x[j]), 2) << ',' << fixed(py(s.y[j]), 2);
    }
    o << "\"/>\n";
    const double ly = Tm + 10 + 18.0 * static_cast<double>(i);
    o << "<line x1=\"" << W - R + 10 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 30 << "\" y2=\"" << ly
      << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << W - R + 35 << "\" y=\"" << ly + 4 << "\">" << xml_escape(s.name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace glad
