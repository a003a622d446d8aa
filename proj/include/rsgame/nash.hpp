#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rsgame/eigensolver.hpp"
#include "rsgame/model.hpp"

namespace rsgame {

/// One element of the best-response map: the lowest-index minimizing selector
/// together with the full per-state argmin sets.
struct BestResponse {
  StationaryStrategy strategy;
  EigenPair eigen;
  std::vector<std::vector<std::size_t>> argmin_sets;
};

BestResponse best_response(const TruncatedView& view, const StationaryStrategy& opponent,
                           Player player, const EigenOptions& opts = {});

struct Certification {
  std::array<double, 2> rho{};        // ρ_k at the pair
  std::array<double, 2> best_rho{};   // ρ_k of the best response against the other
  std::array<double, 2> gaps{};       // δ_k = rho − best_rho
  std::array<double, 2> residual{};   // larger of the two solver residuals per player
  double epsilon = 0.0;
  bool pass = false;

  double max_gap() const { return std::max(gaps[0], gaps[1]); }
};

/// Deviation gaps of `pair` within stationary strategies on the truncation.
Certification certify(const TruncatedView& view, const StrategyPair& pair, double epsilon,
                      const EigenOptions& opts = {});

struct ConverseReport {
  /// defects[k][i] = ((A_v ψ)(i) − min_a (A_a ψ)(i)) / ψ(i), with ψ the best
  /// response eigenfunction of player k against the other's strategy.
  std::array<std::vector<double>, 2> defects;
  std::array<double, 2> worst{};
  std::array<State, 2> worst_state{};
  std::array<double, 2> rho{};
  std::array<double, 2> threshold{};  // tol·(1 + |ρ_k|)
  double tol = 0.0;
  bool pass = false;
};

/// Checks that each strategy of the pair attains the per-state minimum of the
/// frozen-opponent equation.
ConverseReport converse_check(const TruncatedView& view, const StrategyPair& pair, double tol,
                              const EigenOptions& opts = {});

enum class NashStatus { converged, cycle_detected, max_iter };
std::string to_string(NashStatus s);

enum class Schedule {
  /// Gauss–Seidel: the second mover answers the first mover's new strategy.
  alternating,
  /// Jacobi: both answer the previous pair.
  simultaneous,
};

struct NashOptions {
  double damping = 1.0;                 // λ ∈ (0, 1]
  double epsilon = 1e-6;
  std::size_t max_rounds = 200;
  EigenOptions eigen;
  Player first_mover = Player::first;
  Schedule schedule = Schedule::alternating;
  /// Converse tolerance is converse_factor·eigen.tol.
  double converse_factor = 10.0;
  bool mitigate = true;                 // damping 0.5, uniform restart, exhaustive search
  std::size_t exhaustive_cap = 4096;    // pure profiles
  double cycle_quantum = 1e-12;
  /// Two workers solve both players' problems concurrently; results do not depend on it.
  std::size_t threads = 1;
};

struct RoundRecord {
  std::size_t round = 0;
  std::array<double, 2> rho{};
  std::array<double, 2> gaps{};
  double damping = 1.0;
  std::string event;  // empty, or cycle / restart / solver failure notes
};

struct NashCertificate {
  NashStatus status = NashStatus::max_iter;
  /// How the final pair was obtained: best_response, damped, restart_uniform,
  /// exhaustive_search, or none.
  std::string resolution;
  std::optional<StrategyPair> pair;
  std::array<std::optional<EigenPair>, 2> eigen;
  Certification certification;
  ConverseReport converse;
  std::size_t rounds = 0;
  std::size_t cycles = 0;
  std::vector<RoundRecord> trace;
  std::vector<std::string> warnings;
};

/// Best-response iteration from `init`. Converged means both gaps are within
/// ε and both strategies pass the converse check; otherwise the status says
/// why the iteration stopped and the pair is the best one seen.
NashCertificate nash_iterate(const TruncatedView& view, const StrategyPair& init,
                             const NashOptions& opts = {});

/// Number of pure profiles on the truncation, saturating at SIZE_MAX.
std::size_t pure_profile_count(const TruncatedView& view);

nlohmann::json to_json(const Certification& c);
nlohmann::json to_json(const ConverseReport& r);
nlohmann::json to_json(const NashCertificate& c);

}  // namespace rsgame
