#include "glad/glad.h"

#include <algorithm>
#include <filesystem>
#include <string>

#include "glad/io.hpp"
#include "glad/pipeline.hpp"

struct glad_config {
  glad::Config value;
  std::string scratch;
};
struct glad_truth {
  glad::GroundTruth value;
};
struct glad_fit {
  glad::FitArtifacts value;
};
struct glad_report {
  glad::AnomalyReport value;
  std::string json;
};

namespace {

thread_local std::string g_last_error;

glad_status fail(glad_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <class F>
glad_status guarded(F&& f) {
  g_last_error.clear();
  try {
    f();
    return GLAD_OK;
  } catch (const glad::ConfigError& e) {
    return fail(GLAD_ERR_USAGE, e.what());
  } catch (const glad::FormatError& e) {
    return fail(GLAD_ERR_FORMAT, e.what());
  } catch (const glad::IoError& e) {
    return fail(GLAD_ERR_IO, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(GLAD_ERR_IO, e.what());
  } catch (const glad::NumericError& e) {
    return fail(GLAD_ERR_NUMERIC, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(GLAD_ERR_USAGE, e.what());
  } catch (const std::exception& e) {
    return fail(GLAD_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(GLAD_ERR_INTERNAL, "unknown exception");
  }
}

#define GLAD_REQUIRE(cond, what) \
  do {                           \
    if (!(cond)) return fail(GLAD_ERR_USAGE, what); \
  } while (0)

template <class T, class U>
glad_status copy_out(const std::vector<T>& src, U* dst, std::size_t capacity) {
  if (capacity > 0 && dst == nullptr) return fail(GLAD_ERR_USAGE, "null output buffer");
  std::copy_n(src.begin(), std::min(capacity, src.size()), dst);
  return GLAD_OK;
}

}  // namespace

extern "C" {

const char* glad_last_error(void) { return g_last_error.c_str(); }

const char* glad_status_name(glad_status status) {
  switch (status) {
    case GLAD_OK: return "ok";
    case GLAD_ERR_USAGE: return "usage error";
    case GLAD_ERR_NOT_CONVERGED: return "not converged";
    case GLAD_ERR_NUMERIC: return "numeric error";
    case GLAD_ERR_IO: return "I/O error";
    case GLAD_ERR_FORMAT: return "format error";
    case GLAD_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

glad_status glad_config_new(glad_config** out) {
  GLAD_REQUIRE(out, "null output handle");
  return guarded([&] { *out = new glad_config{}; });
}

glad_status glad_config_parse(const char* text, glad_config** out) {
  GLAD_REQUIRE(text && out, "null argument");
  return guarded([&] { *out = new glad_config{glad::Config::parse(text), {}}; });
}

glad_status glad_config_load(const char* path, glad_config** out) {
  GLAD_REQUIRE(path && out, "null argument");
  return guarded([&] { *out = new glad_config{glad::Config::load(path), {}}; });
}

glad_status glad_config_set(glad_config* config, const char* key, const char* value) {
  GLAD_REQUIRE(config && key && value, "null argument");
  return guarded([&] { config->value.set(key, value); });
}

glad_status glad_config_get(glad_config* config, const char* key, const char** value) {
  GLAD_REQUIRE(config && key && value, "null argument");
  return guarded([&] {
    config->scratch = config->value.get(key);
    *value = config->scratch.c_str();
  });
}

glad_status glad_config_resolved(glad_config* config, const char** text) {
  GLAD_REQUIRE(config && text, "null argument");
  return guarded([&] {
    config->scratch = config->value.resolved();
    *text = config->scratch.c_str();
  });
}

void glad_config_free(glad_config* config) { delete config; }

glad_status glad_generate(const glad_config* config, const char* out_dir) {
  GLAD_REQUIRE(config && out_dir, "null argument");
  return guarded([&] { glad::cmd_generate(config->value, out_dir); });
}

glad_status glad_dataset_detect(const char* dir, glad_dataset_kind* kind) {
  GLAD_REQUIRE(dir && kind, "null argument");
  return guarded([&] {
    switch (glad::detect_dataset_kind(dir)) {
      case glad::DatasetKind::kStatic: *kind = GLAD_DATASET_STATIC; break;
      case glad::DatasetKind::kActivity: *kind = GLAD_DATASET_ACTIVITY; break;
      case glad::DatasetKind::kDynamic: *kind = GLAD_DATASET_DYNAMIC; break;
    }
  });
}

glad_status glad_truth_read(const char* path, glad_truth** out) {
  GLAD_REQUIRE(path && out, "null argument");
  return guarded([&] { *out = new glad_truth{glad::read_truth(path)}; });
}

size_t glad_truth_num_anomalous(const glad_truth* truth) {
  return truth ? truth->value.anomalous_groups.size() : 0;
}

glad_status glad_truth_anomalous(const glad_truth* truth, int* groups, size_t capacity) {
  GLAD_REQUIRE(truth, "null truth");
  return copy_out(truth->value.anomalous_groups, groups, capacity);
}

void glad_truth_free(glad_truth* truth) { delete truth; }

glad_status glad_fit_run(const char* model, const char* data_dir, const glad_config* config,
                         glad_fit** out) {
  GLAD_REQUIRE(model && data_dir && config && out, "null argument");
  return guarded([&] { *out = new glad_fit{glad::run_fit(model, data_dir, config->value)}; });
}

glad_status glad_fit_write(const glad_fit* fit, const char* out_dir) {
  GLAD_REQUIRE(fit && out_dir, "null argument");
  return guarded([&] { glad::write_fit(out_dir, fit->value); });
}

glad_status glad_fit_read(const char* fit_dir, glad_fit** out) {
  GLAD_REQUIRE(fit_dir && out, "null argument");
  return guarded([&] { *out = new glad_fit{glad::read_fit(fit_dir)}; });
}

const char* glad_fit_model(const glad_fit* fit) { return fit ? fit->value.model.c_str() : ""; }
int glad_fit_converged(const glad_fit* fit) { return fit && fit->value.converged ? 1 : 0; }
size_t glad_fit_num_nodes(const glad_fit* fit) { return fit ? fit->value.grouping.size() : 0; }
size_t glad_fit_num_groups(const glad_fit* fit) { return fit ? fit->value.params.M : 0; }
size_t glad_fit_trace_length(const glad_fit* fit) { return fit ? fit->value.trace.size() : 0; }

glad_status glad_fit_trace(const glad_fit* fit, double* values, size_t capacity) {
  GLAD_REQUIRE(fit, "null fit");
  return copy_out(fit->value.trace, values, capacity);
}

glad_status glad_fit_grouping(const glad_fit* fit, int* groups, size_t capacity) {
  GLAD_REQUIRE(fit, "null fit");
  return copy_out(fit->value.grouping, groups, capacity);
}

size_t glad_fit_num_warnings(const glad_fit* fit) { return fit ? fit->value.warnings.size() : 0; }

const char* glad_fit_warning(const glad_fit* fit, size_t index) {
  if (!fit || index >= fit->value.warnings.size()) return nullptr;
  return fit->value.warnings[index].c_str();
}

void glad_fit_free(glad_fit* fit) { delete fit; }

glad_status glad_score(const glad_fit* fit, const glad_config* config, const glad_truth* truth,
                       glad_report** out) {
  GLAD_REQUIRE(fit && config && out, "null argument");
  return guarded([&] {
    *out = new glad_report{glad::score_fit(fit->value, config->value, truth ? &truth->value : nullptr), {}};
  });
}

glad_status glad_report_write(const glad_report* report, const char* out_dir, const char* method) {
  GLAD_REQUIRE(report && out_dir && method, "null argument");
  return guarded([&] { glad::write_report(out_dir, report->value, method); });
}

glad_status glad_report_json(glad_report* report, const char** json) {
  GLAD_REQUIRE(report && json, "null argument");
  return guarded([&] {
    report->json = glad::report_to_json(report->value);
    *json = report->json.c_str();
  });
}

glad_status glad_report_from_json(const char* json, glad_report** out) {
  GLAD_REQUIRE(json && out, "null argument");
  return guarded([&] { *out = new glad_report{glad::report_from_json(json), {}}; });
}

int glad_report_equal(const glad_report* a, const glad_report* b) {
  return a && b && a->value == b->value ? 1 : 0;
}

size_t glad_report_num_groups(const glad_report* r) { return r ? r->value.group_scores.size() : 0; }

glad_status glad_report_scores(const glad_report* r, double* scores, size_t capacity) {
  GLAD_REQUIRE(r, "null report");
  return copy_out(r->value.group_scores, scores, capacity);
}

size_t glad_report_num_flagged(const glad_report* r) { return r ? r->value.flagged.size() : 0; }

glad_status glad_report_flagged(const glad_report* r, int* groups, size_t capacity) {
  GLAD_REQUIRE(r, "null report");
  return copy_out(r->value.flagged, groups, capacity);
}

size_t glad_report_num_alarms(const glad_report* r) { return r ? r->value.alarms.size() : 0; }
size_t glad_report_fpr_length(const glad_report* r) { return r ? r->value.fpr.size() : 0; }

glad_status glad_report_metrics(const glad_report* r, glad_metrics* metrics) {
  GLAD_REQUIRE(r && metrics, "null argument");
  if (!r->value.metrics) return fail(GLAD_ERR_USAGE, "report has no metrics; score with a truth file");
  const auto& m = *r->value.metrics;
  *metrics = glad_metrics{m.accuracy, m.precision, m.recall, m.f1};
  return GLAD_OK;
}

void glad_report_free(glad_report* report) { delete report; }

glad_status glad_benchmark(const glad_config* config, const char* out_dir, int threads,
                           int* failed_cells) {
  GLAD_REQUIRE(config && out_dir, "null argument");
  return guarded([&] {
    const int failed = glad::cmd_benchmark(config->value, out_dir, threads);
    if (failed_cells) *failed_cells = failed;
  });
}

}  // extern "C"
