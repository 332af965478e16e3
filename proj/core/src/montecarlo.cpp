#include "drmpc/montecarlo.hpp"

#include <atomic>
#include <cmath>
#include <thread>

namespace drmpc {

AggregateReport monte_carlo(const ScenarioConfig& cfg, int runs, Method method, int threads) {
  if (runs < 1) throw std::invalid_argument("runs must be >= 1");
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, runs));

  std::vector<RunMetrics> metrics(runs);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int r = next.fetch_add(1); r < runs; r = next.fetch_add(1))
      metrics[r] = run_episode(cfg, cfg.seed + static_cast<std::uint64_t>(r), method, false).metrics;
  };
  std::vector<std::thread> pool;
  for (int i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  AggregateReport report;
  report.method = method;
  report.runs = runs;
  report.per_run = std::move(metrics);
  report.min_clearance = std::numeric_limits<double>::infinity();

  double sum = 0.0, sum2 = 0.0;
  int ok = 0;
  for (const auto& m : report.per_run) {
    report.min_clearance = std::min(report.min_clearance, m.min_clearance);
    if (m.failed) {
      ++report.failures;
      switch (m.cause) {
        case FailureCause::kCollision: ++report.collisions; break;
        case FailureCause::kInfeasible: ++report.infeasible; break;
        case FailureCause::kDivergence: ++report.divergences; break;
        case FailureCause::kNone: break;
      }
      continue;
    }
    ++ok;
    sum += m.j_track;
    sum2 += m.j_track * m.j_track;
  }
  report.p_fail_percent = 100.0 * report.failures / runs;
  if (ok > 0) {
    report.j_mean = sum / ok;
    const double var = ok > 1 ? std::max(0.0, (sum2 - sum * sum / ok) / (ok - 1)) : 0.0;
    report.j_std = std::sqrt(var);
  }
  return report;
}

}  // namespace drmpc
