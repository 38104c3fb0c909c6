#include "asbart/asbart.h"

#include <cmath>
#include <cstring>
#include <new>
#include <optional>
#include <sstream>
#include <string>

#include "asbart/bench.hpp"
#include "asbart/dataio.hpp"
#include "asbart/error.hpp"
#include "asbart/sampler.hpp"

struct asbart_dataset {
  asbart::Dataset data;
  std::optional<std::vector<double>> truth;
};

struct asbart_model {
  asbart::FittedModel model;
};

struct asbart_bench_report {
  asbart::BenchReport report;
  std::string csv;
  std::string summary;
};

namespace {

thread_local std::string last_error;

asbart_status fail(asbart_status status, std::string message) {
  last_error = std::move(message);
  return status;
}

template <typename Fn>
asbart_status guarded(Fn&& fn) {
  try {
    fn();
    return ASBART_OK;
  } catch (const asbart::Error& e) {
    return fail(static_cast<asbart_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(ASBART_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(ASBART_ERR_INTERNAL, e.what());
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw asbart::invalid_argument(std::string(what) + " must not be NULL");
}

asbart::GateFamily to_gate(asbart_gate gate) {
  switch (gate) {
    case ASBART_GATE_HARD:
      return asbart::GateFamily::hard;
    case ASBART_GATE_SIGMOID:
      return asbart::GateFamily::sigmoid;
    case ASBART_GATE_LINEAR:
      return asbart::GateFamily::linear;
  }
  throw asbart::invalid_argument("unknown gate value " + std::to_string(static_cast<int>(gate)));
}

asbart::NoiseLevel to_noise(asbart_noise noise) {
  switch (noise) {
    case ASBART_NOISE_HIGH:
      return asbart::NoiseLevel::high;
    case ASBART_NOISE_LOW:
      return asbart::NoiseLevel::low;
  }
  throw asbart::invalid_argument("unknown noise value " + std::to_string(static_cast<int>(noise)));
}

asbart::FitConfig to_fit_config(const asbart_fit_config& c) {
  asbart::FitConfig config;
  config.num_trees = c.num_trees;
  config.sweeps = c.sweeps;
  config.burn_in = c.burn_in;
  config.gate = to_gate(c.gate);
  if (!(c.grid_max_percent >= 0.0 && c.grid_max_percent <= 50.0)) {
    throw asbart::invalid_argument("grid max percent must lie in [0, 50]");
  }
  config.grid_percents.clear();
  for (int p = 0; p <= static_cast<int>(std::floor(c.grid_max_percent)); ++p) config.grid_percents.push_back(p);
  config.seed = c.seed;
  config.limits.max_depth = c.max_depth;
  config.limits.min_node_size = c.min_node_size;
  config.validate();
  return config;
}

}  // namespace

extern "C" {

const char* asbart_last_error(void) { return last_error.c_str(); }

const char* asbart_status_name(asbart_status status) {
  switch (status) {
    case ASBART_OK:
      return "ok";
    case ASBART_ERR_INVALID_ARGUMENT:
      return "invalid argument";
    case ASBART_ERR_STRUCTURE:
      return "structure error";
    case ASBART_ERR_NUMERICAL:
      return "numerical error";
    case ASBART_ERR_IO:
      return "i/o error";
    case ASBART_ERR_PARSE:
      return "parse error";
    case ASBART_ERR_SCHEMA:
      return "schema error";
    case ASBART_ERR_VERSION:
      return "version error";
    case ASBART_ERR_INTERNAL:
      return "internal error";
  }
  return "unknown status";
}

const char* asbart_version(void) { return "0.1.0"; }

void asbart_set_warning_handler(asbart_warning_fn fn, void* user) {
  if (fn == nullptr) {
    asbart::set_warning_handler(nullptr);
    return;
  }
  asbart::set_warning_handler([fn, user](std::string_view message) {
    const std::string text(message);
    fn(text.c_str(), user);
  });
}

asbart_status asbart_dataset_load_csv(const char* path, const char* schema_path, const char* target,
                                      int require_target, asbart_dataset** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    asbart::DatasetSchema schema;
    if (schema_path != nullptr) {
      schema = asbart::load_schema(schema_path);
    } else {
      require(target, "target (without a schema file)");
      schema = asbart::infer_schema(path, target);
    }
    auto handle = std::make_unique<asbart_dataset>();
    handle->data = asbart::load_csv(path, schema,
                                    require_target ? asbart::TargetPolicy::required : asbart::TargetPolicy::optional);
    *out = handle.release();
  });
}

asbart_status asbart_dataset_friedman(size_t n, asbart_noise noise, uint64_t seed, asbart_dataset** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    auto generated = asbart::gen_friedman({n, 20, to_noise(noise), seed});
    auto handle = std::make_unique<asbart_dataset>();
    handle->data = std::move(generated.data);
    handle->truth = std::move(generated.truth);
    *out = handle.release();
  });
}

asbart_status asbart_dataset_write_csv(const asbart_dataset* data, const char* path) {
  return guarded([&] {
    require(data, "data");
    require(path, "path");
    asbart::write_csv(data->data, path);
  });
}

size_t asbart_dataset_rows(const asbart_dataset* data) { return data ? data->data.x.rows() : 0; }

size_t asbart_dataset_cols(const asbart_dataset* data) { return data ? data->data.x.cols() : 0; }

int asbart_dataset_has_target(const asbart_dataset* data) { return data && data->data.has_target ? 1 : 0; }

asbart_status asbart_dataset_truth(const asbart_dataset* data, double* out, size_t len) {
  return guarded([&] {
    require(data, "data");
    require(out, "out");
    if (!data->truth) throw asbart::invalid_argument("dataset carries no noiseless function values");
    if (len < data->truth->size()) throw asbart::invalid_argument("output buffer too short");
    std::copy(data->truth->begin(), data->truth->end(), out);
  });
}

void asbart_dataset_free(asbart_dataset* data) { delete data; }

void asbart_fit_config_init(asbart_fit_config* config) {
  if (config == nullptr) return;
  const asbart::FitConfig defaults;
  config->num_trees = defaults.num_trees;
  config->sweeps = defaults.sweeps;
  config->burn_in = defaults.burn_in;
  config->gate = ASBART_GATE_LINEAR;
  config->grid_max_percent = defaults.grid_percents.back();
  config->seed = defaults.seed;
  config->max_depth = defaults.limits.max_depth;
  config->min_node_size = defaults.limits.min_node_size;
}

asbart_status asbart_fit(const asbart_dataset* data, const asbart_fit_config* config, asbart_model** out) {
  return guarded([&] {
    require(data, "data");
    require(config, "config");
    require(out, "out");
    *out = nullptr;
    auto handle = std::make_unique<asbart_model>();
    handle->model = asbart::fit_dataset(data->data, to_fit_config(*config));
    *out = handle.release();
  });
}

asbart_status asbart_model_summary(const asbart_model* model, asbart_fit_summary* out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    const auto& m = model->model;
    out->sweeps = static_cast<int>(m.sigma2_trace.size());
    out->retained = m.retained.size();
    out->final_sigma2 = m.sigma2_trace.empty() ? 0.0 : m.sigma2_trace.back();
    out->seconds = m.seconds;
    out->proposals = m.proposals;
    out->accepted = m.accepted;
    out->mean_tau = m.mean_tau_trace.empty() ? 0.0 : m.mean_tau_trace.back();
    out->hard_mode = m.config.grid_percents == std::vector<double>{0.0} ? 1 : 0;
  });
}

asbart_status asbart_model_sigma2_trace(const asbart_model* model, double* out, size_t len, size_t* count) {
  return guarded([&] {
    require(model, "model");
    const auto& trace = model->model.sigma2_trace;
    if (count != nullptr) *count = trace.size();
    if (out != nullptr) std::copy_n(trace.begin(), std::min(len, trace.size()), out);
  });
}

size_t asbart_model_num_features(const asbart_model* model) { return model ? model->model.num_features() : 0; }

asbart_status asbart_model_save(const asbart_model* model, const char* path) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    asbart::save_model(model->model, path);
  });
}

asbart_status asbart_model_load(const char* path, asbart_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    auto handle = std::make_unique<asbart_model>();
    handle->model = asbart::load_model(path);
    *out = handle.release();
  });
}

asbart_status asbart_model_load_data_csv(const asbart_model* model, const char* path, asbart_dataset** out) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    if (model->model.schema.target.empty()) throw asbart::Error(asbart::ErrorCode::schema, "model carries no schema");
    auto handle = std::make_unique<asbart_dataset>();
    handle->data = asbart::load_csv(path, model->model.schema, asbart::TargetPolicy::optional);
    *out = handle.release();
  });
}

asbart_status asbart_predict(const asbart_model* model, const asbart_dataset* data, double* out, size_t len) {
  return guarded([&] {
    require(model, "model");
    require(data, "data");
    require(out, "out");
    if (len < data->data.x.rows()) throw asbart::invalid_argument("output buffer too short");
    const auto predictions = asbart::predict_mean(model->model, asbart::model_design(model->model, data->data));
    std::copy(predictions.begin(), predictions.end(), out);
  });
}

asbart_status asbart_write_predictions_csv(const double* predictions, size_t len, const char* path) {
  return guarded([&] {
    require(path, "path");
    if (len > 0) require(predictions, "predictions");
    std::ostringstream text;
    text.precision(17);
    text << "row_index,prediction\n";
    for (size_t i = 0; i < len; ++i) text << i << ',' << predictions[i] << '\n';
    asbart::write_file_atomic(path, text.str());
  });
}

void asbart_model_free(asbart_model* model) { delete model; }

void asbart_bench_config_init(asbart_bench_config* config) {
  if (config == nullptr) return;
  const asbart::BenchConfig defaults;
  config->n = defaults.n;
  config->reps = defaults.reps;
  config->noise = ASBART_NOISE_HIGH;
  config->seed = defaults.seed;
  config->methods = nullptr;
  config->num_trees = defaults.num_trees;
  config->workers = defaults.workers;
  config->record_timing = 1;
}

asbart_status asbart_bench_run(const asbart_bench_config* config, asbart_bench_report** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    *out = nullptr;
    asbart::BenchConfig bench;
    bench.n = config->n;
    bench.reps = config->reps;
    bench.noise = to_noise(config->noise);
    bench.seed = config->seed;
    if (config->methods != nullptr) bench.methods = config->methods;
    bench.num_trees = config->num_trees;
    bench.workers = config->workers;
    bench.record_timing = config->record_timing != 0;
    auto handle = std::make_unique<asbart_bench_report>();
    handle->report = asbart::run_bench(bench);
    handle->csv = handle->report.to_csv();
    handle->summary = handle->report.summary_table();
    *out = handle.release();
  });
}

const char* asbart_bench_csv(const asbart_bench_report* report) { return report ? report->csv.c_str() : ""; }

const char* asbart_bench_summary(const asbart_bench_report* report) { return report ? report->summary.c_str() : ""; }

size_t asbart_bench_num_methods(const asbart_bench_report* report) { return report ? report->report.methods.size() : 0; }

const char* asbart_bench_method(const asbart_bench_report* report, size_t index) {
  if (report == nullptr || index >= report->report.methods.size()) return nullptr;
  return report->report.methods[index].c_str();
}

asbart_status asbart_bench_method_results(const asbart_bench_report* report, const char* method, double* rmse,
                                          double* seconds, size_t len) {
  return guarded([&] {
    require(report, "report");
    require(method, "method");
    const auto e = report->report.rmse_of(method);
    if (e.empty()) throw asbart::invalid_argument("report has no method '" + std::string(method) + "'");
    if (len < e.size()) throw asbart::invalid_argument("output buffers too short");
    if (rmse != nullptr) std::copy(e.begin(), e.end(), rmse);
    if (seconds != nullptr) {
      const auto t = report->report.seconds_of(method);
      std::copy(t.begin(), t.end(), seconds);
    }
  });
}

void asbart_bench_report_free(asbart_bench_report* report) { delete report; }

asbart_status asbart_write_text_file(const char* path, const char* contents) {
  return guarded([&] {
    require(path, "path");
    require(contents, "contents");
    asbart::write_file_atomic(path, contents);
  });
}

}  // extern "C"
