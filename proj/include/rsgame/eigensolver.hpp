#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rsgame/generator.hpp"
#include "rsgame/model.hpp"

namespace rsgame {

/// Principal eigenpair of a twisted matrix (or of the min-over-actions operator).
struct EigenPair {
  double rho = 0.0;                 // cost per unit time, relative to the unshifted operator
  std::vector<double> psi;          // over D_n, psi[anchor] == 1
  double residual = 0.0;            // ‖Tψ − ρψ‖∞ / ‖ψ‖∞
  std::size_t iterations = 0;
  double bracket_low = 0.0;         // Collatz–Wielandt bounds on ρ
  double bracket_high = 0.0;
  bool reducible = false;
  std::vector<std::string> warnings;

  double bracket_width() const { return bracket_high - bracket_low; }
};

enum class EigenMethod {
  /// Power iteration on A + αI.
  power,
  /// Inverse iteration with the Collatz–Wielandt upper bound as shift (Noda
  /// iteration). Keeps ψ positive and converges superlinearly.
  shift_invert,
};

enum class BestResponseMethod {
  /// ψ ← normalize(min_a (A_a + αI)ψ)
  power,
  /// Exact linear solve per selector, then per-state improvement, with a final
  /// check of the nonlinear bracket. Falls back to `power` if the check fails.
  policy_iteration,
};

struct EigenOptions {
  double tol = 1e-10;                       // Collatz–Wielandt bracket width at exit
  std::optional<std::size_t> max_iter;      // default 100·|D_n| + 10⁴
  EigenMethod method = EigenMethod::shift_invert;
  BestResponseMethod best_response = BestResponseMethod::policy_iteration;

  std::size_t iteration_cap(std::size_t n) const { return max_iter.value_or(100 * n + 10000); }
};

/// Thrown when an iteration does not close its bracket; carries the last iterate.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, EigenPair last)
      : std::runtime_error(what), last_(std::move(last)) {}
  const EigenPair& last() const { return last_; }

 private:
  EigenPair last_;
};

/// Strong connectivity of the directed graph {i → j : A_ij > 0, i ≠ j}.
bool is_irreducible(const TwistedMatrix& a);

/// Strongly connected components of the off-diagonal support, in the order
/// Tarjan's algorithm closes them.
std::vector<std::vector<std::size_t>> strongly_connected_components(const TwistedMatrix& a);

/// Principal eigenpair (ρ, ψ) with Aψ = ρψ, ψ > 0, ψ[anchor] = 1. For
/// reducible matrices ρ is the largest component eigenvalue, the result is
/// flagged and convergence is judged on the residual instead of the bracket.
EigenPair principal_eigenpair(const TwistedMatrix& a, std::size_t anchor_index,
                              const EigenOptions& opts = {});

struct BestResponseEigen {
  EigenPair eigen;
  /// Lowest-index minimizer per state.
  std::vector<std::size_t> selector;
  /// Every action within the tie tolerance of the per-state minimum.
  std::vector<std::vector<std::size_t>> argmin_sets;
};

/// Solves ρψ(i) = min_a (A_a ψ)(i) over the controlling player's pure actions.
BestResponseEigen best_response_eigenpair(const ControlledFamily& family, std::size_t anchor_index,
                                          const EigenOptions& opts = {});

/// Convenience overload assembling the family on the truncation.
std::pair<EigenPair, StationaryStrategy> best_response_eigenpair(
    const TruncatedView& view, const StationaryStrategy& opponent, Player player,
    const EigenOptions& opts = {});

/// Per-state values (A_a ψ)(i)/ψ(i) minimized over actions; the nonlinear
/// Collatz–Wielandt quotient.
std::vector<double> min_action_quotients(const ControlledFamily& family, std::span<const double> psi);

struct LadderRung {
  std::size_t n = 0;
  std::optional<EigenPair> eigen;   // empty when the solve failed
  std::optional<StationaryStrategy> selector;
  std::string error;
};

struct LadderResult {
  std::vector<LadderRung> rungs;
  bool fixed_strategies = false;
  bool monotone = true;             // ρ_n nondecreasing within tolerance
  double max_monotonicity_defect = 0.0;
  std::vector<double> increments;   // ρ_{n_{k+1}} − ρ_{n_k}
  std::vector<double> gap_ratios;   // successive increment ratios
  std::optional<double> extrapolated_limit;

  /// Last successful ψ_n extended by zero outside D_n.
  double extended_psi(State s) const;
};

inline constexpr double kLadderMonotonicityTolerance = 1e-10;

struct LadderRequest {
  Player player = Player::first;
  StationaryStrategy opponent;
  /// When set the player's own strategy is frozen too and each rung is a linear
  /// eigenproblem; otherwise each rung is a best response.
  std::optional<StationaryStrategy> own;
  std::vector<std::size_t> sizes;
};

LadderResult truncation_ladder(const GameModel& model, const LadderRequest& request,
                               const EigenOptions& opts = {});

}  // namespace rsgame
