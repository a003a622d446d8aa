#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rsgame/model.hpp"
#include "rsgame/random.hpp"

namespace rsgame {

/// One jump path on [0, horizon].
struct TrajectorySample {
  State start = 0;
  double horizon = 0.0;
  std::vector<double> jump_times;           // T_0 = 0 < T_1 < ... ≤ horizon
  std::vector<State> states;                // i_0, i_1, ...; same length as jump_times
  std::array<double, 2> cost_integral{};    // ∫ c_k dt up to the horizon (or the exit time)
  bool exited_truncation = false;           // left D_n; integrals stop at the exit time
  double exit_time = 0.0;
};

/// Samples one path with averaged rates: holding time −ln U / (−q_ii), next
/// state j with probability q_ij / (−q_ii). An absorbing state (zero exit
/// rate) holds until the horizon. With `truncation` set the path stops the
/// first time it jumps outside {1..truncation}.
TrajectorySample sample_path(const GameModel& model, const StationaryStrategy& v1,
                             const StationaryStrategy& v2, State start, double horizon,
                             RandomStream& rng, std::optional<std::size_t> truncation = std::nullopt);

struct RiskOptions {
  double horizon = 200.0;
  std::size_t paths = 100000;
  std::size_t batches = 20;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  /// Kill paths leaving {1..n}; killed paths carry weight zero.
  std::optional<std::size_t> truncation;
  bool keep_log_weights = false;
};

struct RiskCostEstimate {
  double rho_hat = 0.0;
  double standard_error = 0.0;
  double horizon = 0.0;
  std::size_t paths = 0;
  std::size_t batches = 0;
  std::size_t killed = 0;
  bool valid = true;
  std::string note;
  double risk_neutral = 0.0;                // (1/T)·mean ∫c dt over surviving paths
  std::vector<double> batch_rho;            // per-batch (1/T)(LSE_b − ln n_b)
  std::vector<std::size_t> batch_paths;
  std::vector<double> log_weights;          // ∫c dt per path; −inf when killed
};

/// ρ̂ = (1/T)[LSE_m(∫c dt over path m) − ln N] with a batch delta-method
/// standard error. Path m uses stream (seed, 0, m); reductions run in path
/// order, so the result does not depend on the thread count.
RiskCostEstimate estimate_risk_cost(const GameModel& model, const StationaryStrategy& v1,
                                    const StationaryStrategy& v2, Player player, State start,
                                    const RiskOptions& opts);

struct HittingOptions {
  std::vector<State> target_set;            // B
  std::vector<State> starts;
  std::size_t paths = 20000;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  std::optional<std::size_t> truncation;    // ψ is taken as zero outside {1..n}
  double time_cap = 1000.0;                 // paths not hitting B by then are flagged
};

struct HittingStart {
  State start = 0;
  double psi = 0.0;
  double estimate = 0.0;
  double standard_error = 0.0;
  double deviation = 0.0;                   // estimate − ψ(start)
  double relative_deviation = 0.0;
  double z = 0.0;                           // |deviation| / SE
  std::size_t hits = 0;
  std::size_t killed = 0;
  std::size_t capped = 0;
  bool valid = true;
  bool pass = false;                        // |deviation| ≤ 3·SE
};

struct HittingReport {
  std::vector<HittingStart> starts;
  double rho = 0.0;
  bool valid = true;
  bool pass = false;
};

/// Monte-Carlo estimate of E[exp(∫_0^τ (c − ρ) dt)·ψ(Y_τ)], τ the hitting
/// time of B, against ψ(start). Path p from start s uses stream
/// (seed, 1, s·2³² + p).
HittingReport hitting_representation_check(const GameModel& model, const StationaryStrategy& v1,
                                           const StationaryStrategy& v2, Player player,
                                           const std::function<double(State)>& psi, double rho,
                                           const HittingOptions& opts);

void write_batches_csv(std::ostream& out, const RiskCostEstimate& est);
void write_hitting_csv(std::ostream& out, const HittingReport& report);

}  // namespace rsgame
