#include "rsgame/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <memory>
#include <mutex>
#include <span>
#include <thread>

#include "rsgame/generator.hpp"

namespace rsgame {

namespace {

constexpr State kKilled = 0;

struct CachedRow {
  std::vector<State> targets;
  std::vector<double> cumulative;  // running sums of the off-diagonal rates
                                   // a trailing target 0 carries killing mass
  double exit_rate = 0.0;
  std::array<double, 2> cost{};
};

std::string describe(const StationaryStrategy& v, State s) {
  std::string out = "(";
  const auto d = v.at(s);
  for (std::size_t a = 0; a < d.size(); ++a) out += (a ? ", " : "") + std::to_string(d[a]);
  return out + ")";
}

// Averaged rows by state; one cache per worker.
class RowCache {
 public:
  RowCache(const GameModel& model, const StationaryStrategy& v1, const StationaryStrategy& v2)
      : model_(model), v1_(v1), v2_(v2) {}

  const CachedRow& get(State s) {
    const auto idx = static_cast<std::size_t>(s - 1);
    if (idx >= rows_.size()) rows_.resize(std::max(idx + 1, 2 * rows_.size()));
    if (!rows_[idx]) rows_[idx] = build(s);
    return *rows_[idx];
  }

 private:
  std::unique_ptr<CachedRow> build(State s) const {
    const AveragedRow avg = average_row(model_, s, v1_.at(s), v2_.at(s));
    auto fail = [&](const std::string& what) {
      throw ModelError("simulation: " + what + " at state " + std::to_string(s) +
                       " under strategies " + describe(v1_, s) + " and " + describe(v2_, s));
    };
    auto row = std::make_unique<CachedRow>();
    double acc = 0.0;
    for (const auto& t : avg.off_diagonal) {
      if (!std::isfinite(t.rate)) fail("non-finite rate to state " + std::to_string(t.to));
      if (t.rate < 0.0) fail("negative rate to state " + std::to_string(t.to));
      acc += t.rate;
      row->targets.push_back(t.to);
      row->cumulative.push_back(acc);
    }
    row->exit_rate = -avg.diagonal;
    if (!std::isfinite(row->exit_rate) || row->exit_rate < 0.0) fail("invalid exit rate");
    for (int k = 0; k < 2; ++k) {
      if (!std::isfinite(avg.cost[k])) fail("non-finite cost");
      row->cost[k] = avg.cost[k];
    }
    if (row->exit_rate - acc > 1e-12 * std::max(1.0, row->exit_rate)) {
      row->targets.push_back(kKilled);
      row->cumulative.push_back(row->exit_rate);
    } else if (row->targets.empty()) {
      row->exit_rate = 0.0;
    }
    return row;
  }

  const GameModel& model_;
  const StationaryStrategy& v1_;
  const StationaryStrategy& v2_;
  std::vector<std::unique_ptr<CachedRow>> rows_;
};

State draw_target(const CachedRow& row, double u) {
  const double x = u * row.cumulative.back();
  const auto it = std::upper_bound(row.cumulative.begin(), row.cumulative.end(), x);
  const auto pos = std::min<std::size_t>(static_cast<std::size_t>(it - row.cumulative.begin()),
                                         row.targets.size() - 1);
  return row.targets[pos];
}

struct PathResult {
  std::array<double, 2> integral{};
  bool exited = false;
  double exit_time = 0.0;
};

PathResult run_path(RowCache& cache, State start, double horizon, RandomStream& rng,
                    std::optional<std::size_t> truncation, TrajectorySample* record) {
  PathResult out;
  double t = 0.0;
  State s = start;
  while (true) {
    const CachedRow& row = cache.get(s);
    double hold = horizon - t;
    bool jump = false;
    if (row.exit_rate > 0.0) {
      const double h = -std::log(rng.uniform()) / row.exit_rate;
      if (t + h < horizon) {
        hold = h;
        jump = true;
      }
    }
    out.integral[0] += hold * row.cost[0];
    out.integral[1] += hold * row.cost[1];
    t += hold;
    if (!jump) break;
    const State next = draw_target(row, rng.uniform());
    if (next == kKilled || (truncation && next > static_cast<State>(*truncation))) {
      out.exited = true;
      out.exit_time = t;
      break;
    }
    s = next;
    if (record) {
      record->jump_times.push_back(t);
      record->states.push_back(s);
    }
  }
  return out;
}

// Runs body(worker, begin, end) over contiguous index blocks.
template <typename Body>
void parallel_blocks(std::size_t count, std::size_t threads, Body body) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    body(0, 0, count);
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w) {
    const std::size_t begin = count * w / threads;
    const std::size_t end = count * (w + 1) / threads;
    pool.emplace_back([&body, w, begin, end] { body(w, begin, end); });
  }
  for (auto& th : pool) th.join();
}

// Parallel workers rethrow the first error after joining.
class ErrorSlot {
 public:
  void capture() {
    std::lock_guard lock(mutex_);
    if (!error_) error_ = std::current_exception();
  }
  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::mutex mutex_;
  std::exception_ptr error_;
};

double log_sum_exp(std::span<const double> x) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : x) m = std::max(m, v);
  if (m == -std::numeric_limits<double>::infinity()) return m;
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

}  // namespace

TrajectorySample sample_path(const GameModel& model, const StationaryStrategy& v1,
                             const StationaryStrategy& v2, State start, double horizon,
                             RandomStream& rng, std::optional<std::size_t> truncation) {
  if (!(horizon > 0.0)) throw ModelError("sample_path: horizon must be positive");
  if (!model.contains(start)) throw ModelError("sample_path: start state outside the model");
  RowCache cache(model, v1, v2);
  TrajectorySample sample;
  sample.start = start;
  sample.horizon = horizon;
  sample.jump_times.push_back(0.0);
  sample.states.push_back(start);
  const PathResult r = run_path(cache, start, horizon, rng, truncation, &sample);
  sample.cost_integral = r.integral;
  sample.exited_truncation = r.exited;
  sample.exit_time = r.exit_time;
  return sample;
}

RiskCostEstimate estimate_risk_cost(const GameModel& model, const StationaryStrategy& v1,
                                    const StationaryStrategy& v2, Player player, State start,
                                    const RiskOptions& opts) {
  if (!(opts.horizon > 0.0)) throw ModelError("estimate_risk_cost: horizon must be positive");
  if (opts.batches < 10) throw ModelError("estimate_risk_cost: at least 10 batches are required");
  if (opts.paths < opts.batches) throw ModelError("estimate_risk_cost: fewer paths than batches");
  if (!model.contains(start)) throw ModelError("estimate_risk_cost: start state outside the model");
  if (opts.truncation && (start < 1 || start > static_cast<State>(*opts.truncation)))
    throw ModelError("estimate_risk_cost: start state outside the truncation");

  const std::size_t n_paths = opts.paths;
  const std::size_t k = index_of(player);
  std::vector<double> logw(n_paths);
  std::vector<unsigned char> killed(n_paths, 0);
  ErrorSlot errors;
  parallel_blocks(n_paths, opts.threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    try {
      RowCache cache(model, v1, v2);
      for (std::size_t m = begin; m < end; ++m) {
        RandomStream rng(opts.seed, kRiskEstimateDomain, m);
        const PathResult r = run_path(cache, start, opts.horizon, rng, opts.truncation, nullptr);
        if (r.exited) {
          killed[m] = 1;
          logw[m] = -std::numeric_limits<double>::infinity();
        } else {
          logw[m] = r.integral[k];
        }
      }
    } catch (...) {
      errors.capture();
    }
  });
  errors.rethrow();

  RiskCostEstimate est;
  est.horizon = opts.horizon;
  est.paths = n_paths;
  est.batches = opts.batches;
  const double T = opts.horizon;
  double neutral = 0.0;
  for (std::size_t m = 0; m < n_paths; ++m) {
    if (killed[m]) {
      ++est.killed;
      continue;
    }
    neutral += logw[m];
  }
  if (est.killed == n_paths) {
    est.valid = false;
    est.note = "every path left the truncation";
    est.rho_hat = std::numeric_limits<double>::quiet_NaN();
    est.standard_error = std::numeric_limits<double>::quiet_NaN();
    return est;
  }
  est.risk_neutral = neutral / static_cast<double>(n_paths - est.killed) / T;
  const double lse_all = log_sum_exp(logw);
  const double log_n = std::log(static_cast<double>(n_paths));
  est.rho_hat = (lse_all - log_n) / T;

  // Delta method on the log of the batch means.
  std::vector<double> ratio(opts.batches);
  for (std::size_t b = 0; b < opts.batches; ++b) {
    const std::size_t begin = n_paths * b / opts.batches;
    const std::size_t end = n_paths * (b + 1) / opts.batches;
    const std::span<const double> part(logw.data() + begin, end - begin);
    const double lse = log_sum_exp(part);
    const double log_nb = std::log(static_cast<double>(end - begin));
    est.batch_paths.push_back(end - begin);
    est.batch_rho.push_back((lse - log_nb) / T);
    ratio[b] = std::exp(lse - log_nb - (lse_all - log_n));
  }
  double mean = 0.0;
  for (double r : ratio) mean += r;
  mean /= static_cast<double>(ratio.size());
  double var = 0.0;
  for (double r : ratio) var += (r - mean) * (r - mean);
  var /= static_cast<double>(ratio.size() - 1);
  est.standard_error = std::sqrt(var / static_cast<double>(ratio.size())) / mean / T;
  if (est.killed > 0)
    est.note = std::to_string(est.killed) + " paths left the truncation and carry weight zero";
  if (opts.keep_log_weights) est.log_weights = std::move(logw);
  return est;
}

HittingReport hitting_representation_check(const GameModel& model, const StationaryStrategy& v1,
                                           const StationaryStrategy& v2, Player player,
                                           const std::function<double(State)>& psi, double rho,
                                           const HittingOptions& opts) {
  if (opts.target_set.empty()) throw ModelError("hitting check: the target set is empty");
  if (opts.paths < 2) throw ModelError("hitting check: at least two paths are required");
  std::vector<State> target = opts.target_set;
  std::sort(target.begin(), target.end());
  target.erase(std::unique(target.begin(), target.end()), target.end());
  auto in_target = [&](State s) { return std::binary_search(target.begin(), target.end(), s); };
  auto inside = [&](State s) {
    return s != kKilled && (!opts.truncation || s <= static_cast<State>(*opts.truncation));
  };
  const std::size_t k = index_of(player);

  HittingReport report;
  report.rho = rho;
  report.pass = true;
  for (State start : opts.starts) {
    if (!model.contains(start) || !inside(start))
      throw ModelError("hitting check: start state " + std::to_string(start) + " outside the domain");
    HittingStart h;
    h.start = start;
    h.psi = psi(start);
    if (in_target(start)) {
      h.estimate = h.psi;
      h.hits = opts.paths;
      h.pass = true;
      report.starts.push_back(h);
      continue;
    }
    const std::size_t n_paths = opts.paths;
    std::vector<double> weight(n_paths, 0.0);
    std::vector<unsigned char> outcome(n_paths, 0);  // 0 hit, 1 killed, 2 capped
    ErrorSlot errors;
    parallel_blocks(n_paths, opts.threads, [&](std::size_t, std::size_t begin, std::size_t end) {
      try {
        RowCache cache(model, v1, v2);
        for (std::size_t p = begin; p < end; ++p) {
          RandomStream rng(opts.seed, kHittingDomain,
                           (static_cast<std::uint64_t>(start) << 32) | static_cast<std::uint64_t>(p));
          double t = 0.0;
          double integral = 0.0;
          State s = start;
          while (true) {
            const CachedRow& row = cache.get(s);
            if (row.exit_rate <= 0.0) {
              outcome[p] = 2;
              break;
            }
            const double hold = -std::log(rng.uniform()) / row.exit_rate;
            integral += hold * (row.cost[k] - rho);
            t += hold;
            if (t > opts.time_cap) {
              outcome[p] = 2;
              break;
            }
            s = draw_target(row, rng.uniform());
            if (!inside(s)) {
              outcome[p] = 1;
              break;
            }
            if (in_target(s)) {
              weight[p] = std::exp(integral) * psi(s);
              break;
            }
          }
        }
      } catch (...) {
        errors.capture();
      }
    });
    errors.rethrow();

    double sum = 0.0;
    std::size_t used = 0;
    for (std::size_t p = 0; p < n_paths; ++p) {
      if (outcome[p] == 2) {
        ++h.capped;
        continue;
      }
      if (outcome[p] == 1) ++h.killed;
      else ++h.hits;
      sum += weight[p];
      ++used;
    }
    if (h.hits == 0 || used < 2) {
      h.valid = false;
      report.valid = false;
      report.pass = false;
      report.starts.push_back(h);
      continue;
    }
    h.estimate = sum / static_cast<double>(used);
    double var = 0.0;
    for (std::size_t p = 0; p < n_paths; ++p)
      if (outcome[p] != 2) var += (weight[p] - h.estimate) * (weight[p] - h.estimate);
    var /= static_cast<double>(used - 1);
    h.standard_error = std::sqrt(var / static_cast<double>(used));
    h.deviation = h.estimate - h.psi;
    h.relative_deviation = h.psi != 0.0 ? h.deviation / h.psi : h.deviation;
    h.z = h.standard_error > 0.0 ? std::abs(h.deviation) / h.standard_error
                                 : (h.deviation == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    h.pass = std::abs(h.deviation) <= 3.0 * h.standard_error;
    if (!h.pass) report.pass = false;
    report.starts.push_back(h);
  }
  return report;
}

void write_batches_csv(std::ostream& out, const RiskCostEstimate& est) {
  out << std::setprecision(17);
  out << "batch,paths,rho_hat\n";
  for (std::size_t b = 0; b < est.batch_rho.size(); ++b)
    out << b << ',' << est.batch_paths[b] << ',' << est.batch_rho[b] << '\n';
}

void write_hitting_csv(std::ostream& out, const HittingReport& report) {
  out << std::setprecision(17);
  out << "start,psi,estimate,standard_error,deviation,z,hits,killed,capped,pass\n";
  for (const auto& h : report.starts)
    out << h.start << ',' << h.psi << ',' << h.estimate << ',' << h.standard_error << ','
        << h.deviation << ',' << h.z << ',' << h.hits << ',' << h.killed << ',' << h.capped << ','
        << (h.pass ? 1 : 0) << '\n';
}

}  // namespace rsgame
