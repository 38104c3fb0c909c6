#include "asbart/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "asbart/error.hpp"
#include "asbart/rng.hpp"

namespace asbart {

namespace {

int parse_sweeps(std::string_view label, std::string_view digits) {
  int k = 0;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
  if (ec != std::errc() || ptr != digits.data() + digits.size() || k < 2) {
    throw invalid_argument("bench method '" + std::string(label) + "': sweep count must be an integer >= 2");
  }
  return k;
}

std::string format_real(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, ptr};
}

}  // namespace

BenchMethod parse_bench_method(std::string_view label, int num_trees) {
  BenchMethod method;
  method.label = std::string(label);
  if (label == "truth") {
    method.kind = MethodKind::truth;
    return method;
  }
  if (label == "mean") {
    method.kind = MethodKind::mean;
    return method;
  }
  static constexpr std::pair<std::string_view, GateFamily> prefixes[] = {
      {"hard-", GateFamily::hard}, {"soft-linear-", GateFamily::linear}, {"soft-sigmoid-", GateFamily::sigmoid}};
  for (const auto& [prefix, gate] : prefixes) {
    if (!label.starts_with(prefix)) continue;
    const int sweeps = parse_sweeps(label, label.substr(prefix.size()));
    method.config.num_trees = num_trees;
    method.config.sweeps = sweeps;
    method.config.burn_in = static_cast<int>(std::lround(15.0 * sweeps / 40.0));
    method.config.gate = gate;
    if (gate == GateFamily::hard) method.config.grid_percents = {0.0};
    return method;
  }
  throw invalid_argument("unknown bench method '" + std::string(label) +
                         "' (expected hard-K, soft-linear-K, soft-sigmoid-K, truth or mean)");
}

std::vector<BenchMethod> parse_bench_methods(std::string_view comma_list, int num_trees) {
  std::vector<BenchMethod> out;
  std::size_t start = 0;
  while (start <= comma_list.size()) {
    auto end = comma_list.find(',', start);
    if (end == std::string_view::npos) end = comma_list.size();
    auto item = comma_list.substr(start, end - start);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) {
      if (std::any_of(out.begin(), out.end(), [&](const BenchMethod& m) { return m.label == item; })) {
        throw invalid_argument("bench method '" + std::string(item) + "' listed twice");
      }
      out.push_back(parse_bench_method(item, num_trees));
    }
    start = end + 1;
  }
  if (out.empty()) throw invalid_argument("no bench methods given");
  return out;
}

unsigned resolve_workers(unsigned requested) {
  unsigned workers = requested > 0 ? requested : std::max(1U, std::thread::hardware_concurrency());
  if (const char* cap = std::getenv("ASBART_WORKERS")) {
    unsigned v = 0;
    const std::string_view s(cap);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc() && ptr == s.data() + s.size() && v > 0) {
      workers = std::min(workers, v);
    } else {
      warn("ignoring malformed ASBART_WORKERS='" + std::string(s) + "'");
    }
  }
  return workers;
}

BenchReport run_bench(const BenchConfig& config) {
  if (config.n < 2) throw invalid_argument("bench: n must be >= 2");
  if (config.reps < 1) throw invalid_argument("bench: reps must be >= 1");
  if (config.num_trees < 1) throw invalid_argument("bench: trees must be >= 1");
  const auto methods = parse_bench_methods(config.methods, config.num_trees);

  BenchReport report;
  report.config = config;
  for (const auto& m : methods) report.methods.push_back(m.label);
  report.rows.resize(static_cast<std::size_t>(config.reps) * methods.size());

  auto run_rep = [&](int rep) {
    const auto base = static_cast<std::uint64_t>(rep) * 4;
    const auto train = gen_friedman({config.n, 20, config.noise, mix_seed(config.seed, base)});
    const auto test = gen_friedman({config.n, 20, config.noise, mix_seed(config.seed, base + 1)});
    const auto fit_seed = mix_seed(config.seed, base + 2);
    for (std::size_t k = 0; k < methods.size(); ++k) {
      const auto& method = methods[k];
      std::vector<double> predicted;
      double seconds = 0.0;
      switch (method.kind) {
        case MethodKind::truth:
          predicted = test.truth;
          break;
        case MethodKind::mean: {
          const double mean =
              std::accumulate(train.data.y.begin(), train.data.y.end(), 0.0) / static_cast<double>(config.n);
          predicted.assign(config.n, mean);
          break;
        }
        case MethodKind::sampler: {
          FitConfig fit_config = method.config;
          fit_config.seed = fit_seed;
          const auto started = std::chrono::steady_clock::now();
          const FittedModel model = fit_dataset(train.data, fit_config);
          seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
          predicted = predict_mean(model, model_design(model, test.data));
          break;
        }
      }
      BenchRow& row = report.rows[static_cast<std::size_t>(rep) * methods.size() + k];
      row.rep = rep + 1;
      row.method = method.label;
      row.rmse = rmse(predicted, test.truth);
      row.seconds = config.record_timing ? seconds : 0.0;
    }
  };

  const unsigned workers = std::min<unsigned>(resolve_workers(config.workers), static_cast<unsigned>(config.reps));
  if (workers <= 1) {
    for (int rep = 0; rep < config.reps; ++rep) run_rep(rep);
    return report;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int rep = next++; rep < config.reps; rep = next++) {
        try {
          run_rep(rep);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return report;
}

std::vector<double> BenchReport::rmse_of(std::string_view method) const {
  std::vector<double> out;
  for (const auto& r : rows)
    if (r.method == method) out.push_back(r.rmse);
  return out;
}

std::vector<double> BenchReport::seconds_of(std::string_view method) const {
  std::vector<double> out;
  for (const auto& r : rows)
    if (r.method == method) out.push_back(r.seconds);
  return out;
}

std::vector<MethodSummary> BenchReport::summarize() const {
  std::vector<MethodSummary> out;
  for (const auto& label : methods) {
    const auto e = rmse_of(label);
    const auto t = seconds_of(label);
    MethodSummary s;
    s.method = label;
    s.mean_rmse = std::accumulate(e.begin(), e.end(), 0.0) / static_cast<double>(e.size());
    double ss = 0.0;
    for (double v : e) ss += (v - s.mean_rmse) * (v - s.mean_rmse);
    s.sd_rmse = e.size() > 1 ? std::sqrt(ss / static_cast<double>(e.size() - 1)) : 0.0;
    s.mean_seconds = std::accumulate(t.begin(), t.end(), 0.0) / static_cast<double>(t.size());
    out.push_back(s);
  }
  const double base = out.empty() ? 0.0 : out.front().mean_seconds;
  for (auto& s : out) {
    if (base > 0.0) {
      s.time_ratio = s.mean_seconds / base;
    } else {
      s.time_ratio = s.mean_seconds == 0.0 ? 1.0 : INFINITY;
    }
  }
  if (!out.empty()) out.front().time_ratio = 1.0;
  return out;
}

std::string BenchReport::to_csv() const {
  std::string out = "rep,method,rmse,seconds\n";
  char secs[32];
  for (const auto& r : rows) {
    std::snprintf(secs, sizeof secs, "%.6f", r.seconds);
    out += std::to_string(r.rep) + "," + r.method + "," + format_real(r.rmse) + "," + secs + "\n";
  }
  return out;
}

std::string BenchReport::summary_table() const {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "Friedman benchmark: noise=%s n=%zu reps=%d trees=%d seed=%llu\n",
                config.noise == NoiseLevel::high ? "high" : "low", config.n, config.reps, config.num_trees,
                static_cast<unsigned long long>(config.seed));
  out << line;
  std::snprintf(line, sizeof line, "%-20s %12s %10s %12s %8s\n", "method", "mean_rmse", "sd_rmse", "mean_seconds",
                "ratio");
  out << line;
  for (const auto& s : summarize()) {
    std::snprintf(line, sizeof line, "%-20s %12.4f %10.4f %12.3f %8.2f\n", s.method.c_str(), s.mean_rmse, s.sd_rmse,
                  s.mean_seconds, s.time_ratio);
    out << line;
  }
  return out.str();
}

double sign_test_less(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw invalid_argument("sign_test_less: samples must be paired");
  int wins = 0, n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == b[i]) continue;
    ++n;
    if (a[i] < b[i]) ++wins;
  }
  if (n == 0) return 1.0;
  // P(X >= wins), X ~ Binomial(n, 1/2), summed in log space.
  double p = 0.0;
  for (int k = wins; k <= n; ++k) {
    const double log_choose = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    p += std::exp(log_choose - n * std::log(2.0));
  }
  return std::min(1.0, p);
}

}  // namespace asbart
