#ifndef GLAD_IO_HPP_
#define GLAD_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "glad/generator.hpp"
#include "glad/model.hpp"

namespace glad {

// Bad configuration or command usage.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};
// Input file exists but does not match the expected format.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
// File cannot be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// key=value settings with '#' comments. Only registered keys are accepted.
class Config {
 public:
  static Config parse(std::string_view text);
  static Config load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  // Explicit value, else the registered default.
  std::string get(const std::string& key) const;
  double get_double(const std::string& key) const;
  long long get_int(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<long long> get_ints(const std::string& key) const;

  // Every registered key with its effective value, one per line, sorted.
  std::string resolved() const;
  const std::map<std::string, std::string>& explicit_values() const { return values_; }

  static const std::map<std::string, std::string>& defaults();

 private:
  std::map<std::string, std::string> values_;
};

// features.csv: header node_id,f_1..f_V then one row per node in id order.
void write_features(const std::filesystem::path& path, const Matrix<int>& X);
Matrix<int> read_features(const std::filesystem::path& path);

// edges.tsv: "p<TAB>q" per unordered linked pair (p < q), or
// "p<TAB>q<TAB>t" with 1-based snapshot t. No header; '#' lines skipped.
void write_edges(const std::filesystem::path& path, const std::vector<Matrix<std::uint8_t>>& Y,
                 bool with_time);
std::vector<Matrix<std::uint8_t>> read_edges(const std::filesystem::path& path, std::size_t N,
                                             std::size_t T, bool with_time);

// activities.csv: header node_id,feature then one row per activity.
void write_activities(const std::filesystem::path& path,
                      const std::vector<std::vector<int>>& activities);
std::vector<std::vector<int>> read_activities(const std::filesystem::path& path, std::size_t N,
                                              std::size_t V);

enum class DatasetKind { kStatic, kActivity, kDynamic };
const char* dataset_kind_name(DatasetKind kind);

// static:   features.csv + edges.tsv
// activity: features.csv (aggregated) + activities.csv + edges.tsv
// dynamic:  features_t1.csv .. features_tT.csv + edges.tsv with t column
DatasetKind detect_dataset_kind(const std::filesystem::path& dir);

void write_dataset(const std::filesystem::path& dir, const Dataset& data);
void write_dataset(const std::filesystem::path& dir, const ActivityDataset& data);
void write_dataset(const std::filesystem::path& dir, const DynamicDataset& data);
// The static loader accepts activity directories (it reads the aggregate).
Dataset load_static(const std::filesystem::path& dir);
ActivityDataset load_activity(const std::filesystem::path& dir);
DynamicDataset load_dynamic(const std::filesystem::path& dir);

void write_truth(const std::filesystem::path& path, const GroundTruth& truth);
GroundTruth read_truth(const std::filesystem::path& path);

// Whole-file helpers; throw IoError.
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

// Shortest decimal text that parses back to the same double.
std::string format_double(double x);

}  // namespace glad

#endif  // GLAD_IO_HPP_
