#include "glad/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace glad {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class T>
bool parse_number(const std::string& s, T& out) {
  const char* b = s.data();
  const char* e = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && ptr == e;
}

long long parse_int_field(const std::string& s, const std::string& where) {
  long long v = 0;
  if (!parse_number(s, v)) throw FormatError(where + ": expected an integer, got '" + s + "'");
  return v;
}

}  // namespace

// ---------------------------------------------------------------- Config

const std::map<std::string, std::string>& Config::defaults() {
  static const std::map<std::string, std::string> table = {
      // generation
      {"mode", "injection"},
      {"seed", "1"},
      {"N", "500"},
      {"M", "5"},
      {"K", "2"},
      {"V", "20"},
      {"anomaly_fraction", "0.2"},
      {"normal_rate", "0.1,0.9"},
      {"anomalous_rate", "0.9,0.1"},
      {"trials", "50"},
      {"block_in", "0.2"},
      {"block_out", "0.05"},
      {"role_purity", "0.8"},
      {"T", "5"},
      {"change_time", "4"},
      {"changed_fraction", "0.5"},
      {"walk_sigma", "0.1"},
      {"gen_alpha", "0.1"},
      {"activities", "20"},
      // fitting
      {"max_iters", "200"},
      {"tol", "1e-6"},
      {"alpha_mode", "fixed"},
      {"alpha0", "0.1"},
      {"restarts", "10"},
      {"glad0_restarts", "3"},
      {"init_noise", "0.01"},
      {"rho", "0"},
      {"inner_max", "50"},
      {"inner_tol", "1e-6"},
      {"sweeps", "200"},
      {"burn_in", "100"},
      {"particles", "100"},
      {"sigma", "0.1"},
      // scoring
      {"fraction", "0.2"},
      {"score_kind", "model"},
      {"thresholds", ""},
      {"alarm_threshold", "1.0"},
      // benchmark
      {"group_counts", "5,10"},
      {"bench_seeds", "3"},
      {"dynamic_seeds", "3"},
      {"dynamic_N", "200"},
      {"dynamic_M", "4"},
      {"dynamic_sigma", "0.5"},
  };
  return table;
}

Config Config::parse(std::string_view text) {
  Config cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    try {
      cfg.set(key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

Config Config::load(const fs::path& path) { return parse(read_text(path)); }

void Config::set(const std::string& key, const std::string& value) {
  if (defaults().count(key) == 0) throw ConfigError("unknown config key '" + key + "'");
  values_[key] = value;
}

std::string Config::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it != values_.end()) return it->second;
  const auto d = defaults().find(key);
  if (d == defaults().end()) throw ConfigError("unknown config key '" + key + "'");
  return d->second;
}

double Config::get_double(const std::string& key) const {
  const std::string s = get(key);
  if (s == "inf") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  if (!parse_number(s, v)) throw ConfigError("config key '" + key + "': expected a number, got '" + s + "'");
  return v;
}

long long Config::get_int(const std::string& key) const {
  const std::string s = get(key);
  long long v = 0;
  if (!parse_number(s, v)) throw ConfigError("config key '" + key + "': expected an integer, got '" + s + "'");
  return v;
}

std::uint64_t Config::get_u64(const std::string& key) const {
  const std::string s = get(key);
  std::uint64_t v = 0;
  if (!parse_number(s, v)) throw ConfigError("config key '" + key + "': expected a non-negative integer, got '" + s + "'");
  return v;
}

bool Config::get_bool(const std::string& key) const {
  const std::string s = get(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("config key '" + key + "': expected true or false, got '" + s + "'");
}

std::vector<double> Config::get_doubles(const std::string& key) const {
  const std::string s = get(key);
  std::vector<double> out;
  if (trim(s).empty()) return out;
  for (const auto& part : split(s, ',')) {
    double v = 0.0;
    if (!parse_number(part, v)) throw ConfigError("config key '" + key + "': bad number '" + part + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<long long> Config::get_ints(const std::string& key) const {
  const std::string s = get(key);
  std::vector<long long> out;
  if (trim(s).empty()) return out;
  for (const auto& part : split(s, ',')) {
    long long v = 0;
    if (!parse_number(part, v)) throw ConfigError("config key '" + key + "': bad integer '" + part + "'");
    out.push_back(v);
  }
  return out;
}

std::string Config::resolved() const {
  std::ostringstream out;
  for (const auto& [key, def] : defaults()) out << key << '=' << get(key) << '\n';
  return out.str();
}

// ---------------------------------------------------------------- files

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

void write_features(const fs::path& path, const Matrix<int>& X) {
  std::ostringstream out;
  out << "node_id";
  for (std::size_t v = 0; v < X.cols(); ++v) out << ",f_" << v + 1;
  out << '\n';
  for (std::size_t p = 0; p < X.rows(); ++p) {
    out << p;
    for (std::size_t v = 0; v < X.cols(); ++v) out << ',' << X(p, v);
    out << '\n';
  }
  write_text(path, out.str());
}

Matrix<int> read_features(const fs::path& path) {
  std::istringstream in(read_text(path));
  const std::string where = path.filename().string();
  std::string line;
  if (!std::getline(in, line)) throw FormatError(where + ": empty file");
  const auto header = split(line, ',');
  if (header.empty() || header[0] != "node_id") {
    throw FormatError(where + ": header must start with node_id");
  }
  const std::size_t V = header.size() - 1;
  std::vector<std::vector<int>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    const std::string at = where + " line " + std::to_string(lineno);
    if (cells.size() != V + 1) throw FormatError(at + ": expected " + std::to_string(V + 1) + " columns");
    if (parse_int_field(cells[0], at) != static_cast<long long>(rows.size())) {
      throw FormatError(at + ": node ids must be 0-based, contiguous and in order");
    }
    std::vector<int> row(V);
    for (std::size_t v = 0; v < V; ++v) {
      const long long x = parse_int_field(cells[v + 1], at);
      if (x < 0) throw FormatError(at + ": negative count");
      row[v] = static_cast<int>(x);
    }
    rows.push_back(std::move(row));
  }
  Matrix<int> X(rows.size(), V, 0);
  for (std::size_t p = 0; p < rows.size(); ++p) std::copy(rows[p].begin(), rows[p].end(), X.row(p).begin());
  return X;
}

void write_edges(const fs::path& path, const std::vector<Matrix<std::uint8_t>>& Y, bool with_time) {
  std::ostringstream out;
  for (std::size_t t = 0; t < Y.size(); ++t) {
    const auto& y = Y[t];
    for (std::size_t p = 0; p < y.rows(); ++p) {
      for (std::size_t q = p + 1; q < y.cols(); ++q) {
        if (y(p, q) == 0) continue;
        out << p << '\t' << q;
        if (with_time) out << '\t' << t + 1;
        out << '\n';
      }
    }
  }
  write_text(path, out.str());
}

std::vector<Matrix<std::uint8_t>> read_edges(const fs::path& path, std::size_t N, std::size_t T,
                                             bool with_time) {
  std::istringstream in(read_text(path));
  const std::string where = path.filename().string();
  std::vector<Matrix<std::uint8_t>> Y(T, Matrix<std::uint8_t>(N, N, 0));
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto cells = split(t, '\t');
    const std::string at = where + " line " + std::to_string(lineno);
    const std::size_t want = with_time ? 3 : 2;
    if (cells.size() != want) {
      throw FormatError(at + ": expected " + std::to_string(want) + " tab-separated fields");
    }
    const long long p = parse_int_field(cells[0], at);
    const long long q = parse_int_field(cells[1], at);
    const auto n = static_cast<long long>(N);
    if (p < 0 || q < 0 || p >= n || q >= n) throw FormatError(at + ": node id out of range");
    if (p == q) throw FormatError(at + ": self-loop");
    std::size_t snap = 0;
    if (with_time) {
      const long long tt = parse_int_field(cells[2], at);
      if (tt < 1 || tt > static_cast<long long>(T)) throw FormatError(at + ": snapshot out of range");
      snap = static_cast<std::size_t>(tt - 1);
    }
    Y[snap](static_cast<std::size_t>(p), static_cast<std::size_t>(q)) = 1;
    Y[snap](static_cast<std::size_t>(q), static_cast<std::size_t>(p)) = 1;
  }
  return Y;
}

void write_activities(const fs::path& path, const std::vector<std::vector<int>>& activities) {
  std::ostringstream out;
  out << "node_id,feature\n";
  for (std::size_t p = 0; p < activities.size(); ++p) {
    for (int f : activities[p]) out << p << ',' << f << '\n';
  }
  write_text(path, out.str());
}

std::vector<std::vector<int>> read_activities(const fs::path& path, std::size_t N, std::size_t V) {
  std::istringstream in(read_text(path));
  const std::string where = path.filename().string();
  std::string line;
  if (!std::getline(in, line) || trim(line) != "node_id,feature") {
    throw FormatError(where + ": header must be node_id,feature");
  }
  std::vector<std::vector<int>> acts(N);
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    const std::string at = where + " line " + std::to_string(lineno);
    if (cells.size() != 2) throw FormatError(at + ": expected 2 columns");
    const long long p = parse_int_field(cells[0], at);
    const long long f = parse_int_field(cells[1], at);
    if (p < 0 || p >= static_cast<long long>(N)) throw FormatError(at + ": node id out of range");
    if (f < 0 || f >= static_cast<long long>(V)) throw FormatError(at + ": feature out of range");
    acts[static_cast<std::size_t>(p)].push_back(static_cast<int>(f));
  }
  return acts;
}

// ---------------------------------------------------------------- datasets

const char* dataset_kind_name(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::kStatic: return "static";
    case DatasetKind::kActivity: return "activity";
    case DatasetKind::kDynamic: return "dynamic";
  }
  return "unknown";
}

DatasetKind detect_dataset_kind(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("dataset directory not found: " + dir.string());
  if (!fs::exists(dir / "edges.tsv")) throw FormatError(dir.string() + ": missing edges.tsv");
  if (fs::exists(dir / "features_t1.csv")) return DatasetKind::kDynamic;
  if (!fs::exists(dir / "features.csv")) {
    throw FormatError(dir.string() + ": missing features.csv (or features_t1.csv for snapshots)");
  }
  if (fs::exists(dir / "activities.csv")) return DatasetKind::kActivity;
  return DatasetKind::kStatic;
}

void write_dataset(const fs::path& dir, const Dataset& data) {
  fs::create_directories(dir);
  write_features(dir / "features.csv", data.X);
  write_edges(dir / "edges.tsv", {data.Y}, false);
}

void write_dataset(const fs::path& dir, const ActivityDataset& data) {
  fs::create_directories(dir);
  write_features(dir / "features.csv", data.aggregate().X);
  write_activities(dir / "activities.csv", data.activities);
  write_edges(dir / "edges.tsv", {data.Y}, false);
}

void write_dataset(const fs::path& dir, const DynamicDataset& data) {
  fs::create_directories(dir);
  std::vector<Matrix<std::uint8_t>> Y;
  for (std::size_t t = 0; t < data.T(); ++t) {
    write_features(dir / ("features_t" + std::to_string(t + 1) + ".csv"), data.snapshots[t].X);
    Y.push_back(data.snapshots[t].Y);
  }
  write_edges(dir / "edges.tsv", Y, true);
}

namespace {

template <class F>
auto wrap_invalid(F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
}

}  // namespace

Dataset load_static(const fs::path& dir) {
  const DatasetKind kind = detect_dataset_kind(dir);
  if (kind == DatasetKind::kDynamic) {
    throw FormatError(dir.string() + ": expected a static dataset (features.csv + edges.tsv), found snapshots");
  }
  Matrix<int> X = read_features(dir / "features.csv");
  auto Y = read_edges(dir / "edges.tsv", X.rows(), 1, false);
  return wrap_invalid([&] { return Dataset::make(std::move(X), std::move(Y[0])); });
}

ActivityDataset load_activity(const fs::path& dir) {
  const DatasetKind kind = detect_dataset_kind(dir);
  if (kind != DatasetKind::kActivity) {
    throw FormatError(dir.string() + ": expected an activity-level dataset (features.csv + activities.csv + edges.tsv), found " +
                      dataset_kind_name(kind));
  }
  Matrix<int> X = read_features(dir / "features.csv");
  auto acts = read_activities(dir / "activities.csv", X.rows(), X.cols());
  auto Y = read_edges(dir / "edges.tsv", X.rows(), 1, false);
  ActivityDataset data = wrap_invalid([&] { return ActivityDataset::make(X.cols(), std::move(acts), std::move(Y[0])); });
  if (!(data.aggregate().X == X)) {
    throw FormatError(dir.string() + ": features.csv disagrees with the counts in activities.csv");
  }
  return data;
}

DynamicDataset load_dynamic(const fs::path& dir) {
  const DatasetKind kind = detect_dataset_kind(dir);
  if (kind != DatasetKind::kDynamic) {
    throw FormatError(dir.string() + ": expected snapshots (features_t1.csv .. features_tT.csv + edges.tsv with a t column), found " +
                      dataset_kind_name(kind));
  }
  std::vector<Matrix<int>> Xs;
  for (std::size_t t = 1;; ++t) {
    const fs::path f = dir / ("features_t" + std::to_string(t) + ".csv");
    if (!fs::exists(f)) break;
    Xs.push_back(read_features(f));
  }
  const std::size_t N = Xs[0].rows();
  auto Y = read_edges(dir / "edges.tsv", N, Xs.size(), true);
  std::vector<Dataset> snaps;
  for (std::size_t t = 0; t < Xs.size(); ++t) {
    snaps.push_back(wrap_invalid([&] { return Dataset::make(std::move(Xs[t]), std::move(Y[t])); }));
  }
  return wrap_invalid([&] { return DynamicDataset::make(std::move(snaps)); });
}

// ---------------------------------------------------------------- truth

namespace {

json matrix_json(const MatrixD& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  return rows;
}

MatrixD matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) return {};
  const std::size_t cols = j[0].size();
  MatrixD m(j.size(), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (j[r].size() != cols) throw FormatError("ragged matrix in JSON");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

}  // namespace

void write_truth(const fs::path& path, const GroundTruth& truth) {
  json j;
  j["anomalous_groups"] = truth.anomalous_groups;
  j["grouping"] = truth.G;
  json ct = json::object();
  for (const auto& [g, t] : truth.change_times) ct[std::to_string(g)] = t;
  j["change_times"] = ct;
  if (!truth.normal_rate.empty()) j["normal_rate"] = truth.normal_rate;
  if (!truth.anomalous_rate.empty()) j["anomalous_rate"] = truth.anomalous_rate;
  if (truth.theta.rows() > 0) j["theta"] = matrix_json(truth.theta);
  if (truth.beta.rows() > 0) j["beta"] = matrix_json(truth.beta);
  if (!truth.G_t.empty()) j["grouping_t"] = truth.G_t;
  write_text(path, j.dump(2) + "\n");
}

GroundTruth read_truth(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  GroundTruth t;
  try {
    t.anomalous_groups = j.value("anomalous_groups", std::vector<int>{});
    t.G = j.value("grouping", std::vector<int>{});
    if (j.contains("change_times")) {
      for (const auto& [k, v] : j["change_times"].items()) t.change_times[std::stoi(k)] = v.get<int>();
    }
    t.normal_rate = j.value("normal_rate", std::vector<double>{});
    t.anomalous_rate = j.value("anomalous_rate", std::vector<double>{});
    if (j.contains("theta")) t.theta = matrix_from_json(j["theta"]);
    if (j.contains("beta")) t.beta = matrix_from_json(j["beta"]);
    t.G_t = j.value("grouping_t", std::vector<std::vector<int>>{});
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(path.string() + ": bad change_times key");
  }
  return t;
}

}  // namespace glad
