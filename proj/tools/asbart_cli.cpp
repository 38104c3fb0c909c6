// Command-line front end. Talks to the library only through asbart.h.

#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "asbart/asbart.h"

namespace {

struct Failure {
  std::string message;
};

void check(asbart_status status, const std::string& context) {
  if (status != ASBART_OK) throw Failure{context + ": " + asbart_last_error()};
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using DatasetPtr = std::unique_ptr<asbart_dataset, Deleter<asbart_dataset, asbart_dataset_free>>;
using ModelPtr = std::unique_ptr<asbart_model, Deleter<asbart_model, asbart_model_free>>;
using ReportPtr = std::unique_ptr<asbart_bench_report, Deleter<asbart_bench_report, asbart_bench_report_free>>;

struct FitArgs {
  std::string data, target = "y", schema, out;
  int trees = 50, sweeps = 40, burn_in = 15;
  std::string gate = "linear";
  double grid_max = 20.0;
  uint64_t seed = 0;
  int max_depth = 10;
  size_t min_node = 5;
};

struct PredictArgs {
  std::string model, data, out;
};

struct BenchArgs {
  std::string noise = "high";
  int reps = 20;
  size_t n = 1000;
  uint64_t seed = 0;
  std::string methods;
  int trees = 50;
  unsigned workers = 0;
  std::string csv;
  bool no_timing = false;
};

struct GenArgs {
  size_t n = 1000;
  std::string noise = "high";
  uint64_t seed = 0;
  std::string out;
};

asbart_gate gate_of(const std::string& name) {
  if (name == "hard") return ASBART_GATE_HARD;
  if (name == "sigmoid") return ASBART_GATE_SIGMOID;
  return ASBART_GATE_LINEAR;
}

asbart_noise noise_of(const std::string& name) { return name == "low" ? ASBART_NOISE_LOW : ASBART_NOISE_HIGH; }

int run_fit(const FitArgs& a) {
  asbart_dataset* raw = nullptr;
  check(asbart_dataset_load_csv(a.data.c_str(), a.schema.empty() ? nullptr : a.schema.c_str(), a.target.c_str(), 1,
                                &raw),
        "reading " + a.data);
  DatasetPtr data(raw);

  asbart_fit_config config;
  asbart_fit_config_init(&config);
  config.num_trees = a.trees;
  config.sweeps = a.sweeps;
  config.burn_in = a.burn_in;
  config.gate = gate_of(a.gate);
  config.grid_max_percent = a.grid_max;
  config.seed = a.seed;
  config.max_depth = a.max_depth;
  config.min_node_size = a.min_node;

  asbart_model* fitted = nullptr;
  check(asbart_fit(data.get(), &config, &fitted), "fit");
  ModelPtr model(fitted);
  check(asbart_model_save(model.get(), a.out.c_str()), "writing " + a.out);

  asbart_fit_summary summary;
  check(asbart_model_summary(model.get(), &summary), "summary");
  std::printf("rows           %zu\n", asbart_dataset_rows(data.get()));
  std::printf("features       %zu\n", asbart_model_num_features(model.get()));
  std::printf("trees          %d\n", a.trees);
  std::printf("sweeps         %d (burn-in %d, retained %zu)\n", summary.sweeps, a.burn_in, summary.retained);
  if (summary.hard_mode) {
    std::printf("gate           hard mode (bandwidth grid {0%%})\n");
  } else {
    std::printf("gate           %s, grid 0..%g%%\n", a.gate.c_str(), a.grid_max);
    std::printf("mean tau       %.6g\n", summary.mean_tau);
  }
  std::printf("accepted       %zu of %zu proposals\n", summary.accepted, summary.proposals);
  std::printf("final sigma2   %.6g\n", summary.final_sigma2);
  std::printf("elapsed        %.3f s\n", summary.seconds);
  std::printf("model          %s\n", a.out.c_str());
  return 0;
}

int run_predict(const PredictArgs& a) {
  asbart_model* loaded = nullptr;
  check(asbart_model_load(a.model.c_str(), &loaded), "reading " + a.model);
  ModelPtr model(loaded);
  asbart_dataset* raw = nullptr;
  check(asbart_model_load_data_csv(model.get(), a.data.c_str(), &raw), "reading " + a.data);
  DatasetPtr data(raw);
  std::vector<double> predictions(asbart_dataset_rows(data.get()));
  check(asbart_predict(model.get(), data.get(), predictions.data(), predictions.size()), "predict");
  check(asbart_write_predictions_csv(predictions.data(), predictions.size(), a.out.c_str()), "writing " + a.out);
  std::printf("wrote %zu predictions to %s\n", predictions.size(), a.out.c_str());
  return 0;
}

int run_bench(const BenchArgs& a) {
  asbart_bench_config config;
  asbart_bench_config_init(&config);
  config.n = a.n;
  config.reps = a.reps;
  config.noise = noise_of(a.noise);
  config.seed = a.seed;
  config.methods = a.methods.empty() ? nullptr : a.methods.c_str();
  config.num_trees = a.trees;
  config.workers = a.workers;
  config.record_timing = a.no_timing ? 0 : 1;
  asbart_bench_report* raw = nullptr;
  check(asbart_bench_run(&config, &raw), "bench");
  ReportPtr report(raw);
  if (!a.csv.empty()) check(asbart_write_text_file(a.csv.c_str(), asbart_bench_csv(report.get())), "writing " + a.csv);
  std::fputs(asbart_bench_summary(report.get()), stdout);
  return 0;
}

int run_gen(const GenArgs& a) {
  asbart_dataset* raw = nullptr;
  check(asbart_dataset_friedman(a.n, noise_of(a.noise), a.seed, &raw), "generate");
  DatasetPtr data(raw);
  check(asbart_dataset_write_csv(data.get(), a.out.c_str()), "writing " + a.out);
  std::printf("wrote %zu rows to %s\n", a.n, a.out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Accelerated soft Bayesian additive regression trees"};
  app.require_subcommand(1);
  app.set_version_flag("--version", asbart_version());

  FitArgs fit_args;
  auto* fit = app.add_subcommand("fit", "Fit a model to a CSV file");
  fit->add_option("--data", fit_args.data, "Training CSV")->required();
  fit->add_option("--target", fit_args.target, "Target column (ignored with --schema)")->capture_default_str();
  fit->add_option("--schema", fit_args.schema, "JSON schema; default treats every other column as ordinal");
  fit->add_option("--trees", fit_args.trees, "Number of trees")->capture_default_str()->check(CLI::PositiveNumber);
  fit->add_option("--sweeps", fit_args.sweeps, "Sweeps")->capture_default_str()->check(CLI::PositiveNumber);
  fit->add_option("--burnin", fit_args.burn_in, "Burn-in sweeps")->capture_default_str()->check(CLI::NonNegativeNumber);
  fit->add_option("--gate", fit_args.gate, "Gate family")
      ->capture_default_str()
      ->check(CLI::IsMember({"hard", "sigmoid", "linear"}));
  fit->add_option("--grid-max", fit_args.grid_max, "Largest bandwidth grid percent")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 50.0));
  fit->add_option("--seed", fit_args.seed, "Random seed")->capture_default_str();
  fit->add_option("--max-depth", fit_args.max_depth, "Maximum tree depth")->capture_default_str();
  fit->add_option("--min-node", fit_args.min_node, "Minimum samples per leaf")->capture_default_str();
  fit->add_option("--out", fit_args.out, "Model file to write")->required();

  PredictArgs predict_args;
  auto* predict = app.add_subcommand("predict", "Posterior-mean predictions for a CSV file");
  predict->add_option("--model", predict_args.model, "Model file")->required();
  predict->add_option("--data", predict_args.data, "Input CSV (columns matched by name)")->required();
  predict->add_option("--out", predict_args.out, "Predictions CSV to write")->required();

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "Friedman benchmark: RMSE against the noiseless function");
  bench->add_option("--noise", bench_args.noise, "Noise level")->capture_default_str()->check(CLI::IsMember({"high", "low"}));
  bench->add_option("--reps", bench_args.reps, "Replications")->capture_default_str()->check(CLI::PositiveNumber);
  bench->add_option("--n", bench_args.n, "Train and test size")->capture_default_str()->check(CLI::Range(2, 100000000));
  bench->add_option("--seed", bench_args.seed, "Random seed")->capture_default_str();
  bench->add_option("--methods", bench_args.methods,
                    "Comma-separated labels: hard-K, soft-linear-K, soft-sigmoid-K, truth, mean");
  bench->add_option("--trees", bench_args.trees, "Trees per fit")->capture_default_str()->check(CLI::PositiveNumber);
  bench->add_option("--workers", bench_args.workers, "Concurrent replications (0: all cores)")->capture_default_str();
  bench->add_option("--csv", bench_args.csv, "Per-replication CSV to write");
  bench->add_flag("--no-timing", bench_args.no_timing, "Record 0 seconds so the CSV is byte-reproducible");

  GenArgs gen_args;
  auto* gen = app.add_subcommand("gen", "Write a Friedman dataset (x1..x20, y)");
  gen->add_option("--n", gen_args.n, "Rows")->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--noise", gen_args.noise, "Noise level")->capture_default_str()->check(CLI::IsMember({"high", "low"}));
  gen->add_option("--seed", gen_args.seed, "Random seed")->capture_default_str();
  gen->add_option("--out", gen_args.out, "CSV to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n\n";
    const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    std::cerr << sub->help();
    return 2;
  }

  try {
    if (*fit) return run_fit(fit_args);
    if (*predict) return run_predict(predict_args);
    if (*bench) return run_bench(bench_args);
    if (*gen) return run_gen(gen_args);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << '\n';
    return 1;
  }
  return 1;
}
