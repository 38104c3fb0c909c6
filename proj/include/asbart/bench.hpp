#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "asbart/dataio.hpp"
#include "asbart/sampler.hpp"

namespace asbart {

enum class MethodKind { sampler, truth, mean };

// A benchmark method label resolves to a fit configuration:
//   hard-K, soft-linear-K, soft-sigmoid-K  (K sweeps, burn-in round(15K/40))
//   truth  (predicts f exactly), mean (predicts the training mean of y)
struct BenchMethod {
  std::string label;
  MethodKind kind = MethodKind::sampler;
  FitConfig config;
};

BenchMethod parse_bench_method(std::string_view label, int num_trees);
std::vector<BenchMethod> parse_bench_methods(std::string_view comma_list, int num_trees);

inline constexpr std::string_view kDefaultBenchMethods =
    "hard-40,soft-linear-40,soft-sigmoid-40,hard-80,soft-linear-80,soft-sigmoid-80";

struct BenchConfig {
  std::size_t n = 1000;  // train and test size
  int reps = 20;
  NoiseLevel noise = NoiseLevel::high;
  std::uint64_t seed = 0;
  std::string methods = std::string(kDefaultBenchMethods);
  int num_trees = 50;
  unsigned workers = 0;  // 0: hardware concurrency, capped by ASBART_WORKERS
  bool record_timing = true;
};

struct BenchRow {
  int rep = 0;  // 1-based
  std::string method;
  double rmse = 0.0;
  double seconds = 0.0;
};

struct MethodSummary {
  std::string method;
  double mean_rmse = 0.0;
  double sd_rmse = 0.0;
  double mean_seconds = 0.0;
  double time_ratio = 1.0;  // versus the first method
};

struct BenchReport {
  BenchConfig config;
  std::vector<std::string> methods;
  std::vector<BenchRow> rows;  // ordered by (rep, method)

  std::vector<double> rmse_of(std::string_view method) const;
  std::vector<double> seconds_of(std::string_view method) const;
  std::vector<MethodSummary> summarize() const;
  /// Columns: rep,method,rmse,seconds.
  std::string to_csv() const;
  std::string summary_table() const;
};

/// Worker count after applying the ASBART_WORKERS cap.
unsigned resolve_workers(unsigned requested);

BenchReport run_bench(const BenchConfig& config);

/// One-sided exact sign test p-value for "a < b" over paired samples
/// (ties dropped): P(Binomial(n, 1/2) >= wins).
double sign_test_less(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace asbart
