#ifndef GLAD_PIPELINE_HPP_
#define GLAD_PIPELINE_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "glad/generator.hpp"
#include "glad/io.hpp"
#include "glad/model.hpp"
#include "glad/scoring.hpp"

namespace glad {

// Everything a fit command writes and the score command reads back.
struct FitArtifacts {
  std::string model;  // glad | glad0 | dglad
  std::uint64_t seed = 1;
  ModelParams params;  // dglad: theta = row-softmax of the last mean theta
  MatrixD gamma;       // N x M (glad, glad0)
  MatrixD lambda;      // N x M person-level group posterior
  MatrixD mu;          // N x K person-level role posterior
  std::vector<int> grouping;
  std::vector<double> trace;  // ELBO per iteration or log joint per sweep
  bool converged = true;
  std::vector<std::string> warnings;
  // dglad only
  MatrixD theta0;
  std::vector<MatrixD> theta_path;     // T entries, post-burn-in means
  std::vector<std::vector<int>> G_t;   // final assignments
  std::vector<std::vector<int>> R_t;
};

// Generates the dataset selected by config "mode" (injection | dynamic |
// glad | glad0) into dir with truth.json and config.resolved.txt.
void cmd_generate(const Config& config, const std::filesystem::path& out_dir);

// Fits model (glad | glad0 | dglad) to the dataset in data_dir.
FitArtifacts run_fit(const std::string& model, const std::filesystem::path& data_dir,
                     const Config& config);
void write_fit(const std::filesystem::path& out_dir, const FitArtifacts& fit);
FitArtifacts read_fit(const std::filesystem::path& fit_dir);

// Fitted-to-truth group label map (result[fitted] = truth), or empty when
// the truth carries no grouping.
std::vector<int> truth_label_map(const FitArtifacts& fit, const GroundTruth& truth);

// Static fits: group scores by config "score_kind" (model | global | oracle),
// ranking and top fraction. Dynamic fits: change scores, alarms at
// "alarm_threshold" and, with truth, the FPR curve. With truth, flagged
// groups are compared in truth labels.
AnomalyReport score_fit(const FitArtifacts& fit, const Config& config,
                        const GroundTruth* truth);

std::string report_to_json(const AnomalyReport& report);
AnomalyReport report_from_json(const std::string& text);
// report.json, scores.csv, and when present accuracy.csv, fpr.csv, fpr.svg.
void write_report(const std::filesystem::path& out_dir, const AnomalyReport& report,
                  const std::string& method);

// Static suite over group_counts x bench_seeds x {glad, mmsb-lda} and the
// dynamic FPR suite over dynamic_seeds. Cells run on up to `threads`
// workers; output is independent of the thread count. Returns the number of
// failed cells.
int cmd_benchmark(const Config& config, const std::filesystem::path& out_dir, int threads);

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};
// Self-contained SVG line chart.
std::string svg_line_plot(const std::string& title, const std::string& xlabel,
                          const std::string& ylabel, const std::vector<Series>& series);

// Maps a fitted dynamic group labelling onto truth groups using every
// snapshot's assignments.
std::vector<int> dynamic_label_map(const std::vector<std::vector<int>>& G_t,
                                   const std::vector<int>& truth_grouping, std::size_t M);

// Static injection cell: accuracy of GLAD or the two-stage baseline
// (method = "glad" | "mmsb-lda") with the oracle-rate score.
Metrics run_injection_cell(const InjectionConfig& cfg, const std::string& method,
                           const Config& fit_config);

// Dynamic cell: FPR curve of the change scores in truth labels.
std::vector<FprPoint> run_dynamic_cell(const InjectionConfig& cfg, std::size_t T,
                                       std::size_t change_time, double changed_fraction,
                                       double walk_sigma, const Config& fit_config,
                                       double sampler_sigma);

// Smallest FPR among thresholds that reach recall 1 (1 when none does).
double fpr_at_full_recall(const std::vector<FprPoint>& curve);

}  // namespace glad

#endif  // GLAD_PIPELINE_HPP_
