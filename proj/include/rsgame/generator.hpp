#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "rsgame/model.hpp"

namespace rsgame {

/// Rates and costs at one state averaged over a pair of mixed actions:
/// π_ij(v1, v2) = Σ_{a,b} π̄_ij(a, b) v1(a) v2(b), likewise for c_k.
struct AveragedRow {
  std::vector<Transition> off_diagonal;  // sorted by target, zero-mass targets omitted
  double diagonal = 0.0;
  std::array<double, 2> cost{};

  double exit_rate() const { return -diagonal; }
};

/// Throws ModelError when a distribution does not match the action grid size.
AveragedRow average_row(const GameModel& model, State s, std::span<const double> v1,
                        std::span<const double> v2);

/// Generator restricted to D_n in compressed-row form. Diagonals keep their
/// full-space value, so rows with mass leaving D_n are strictly subconservative.
class RateMatrix {
 public:
  RateMatrix() = default;
  RateMatrix(std::vector<std::size_t> row_ptr, std::vector<std::size_t> cols,
             std::vector<double> vals, std::vector<double> diagonal);

  std::size_t size() const { return diagonal_.size(); }
  std::span<const std::size_t> cols(std::size_t i) const {
    return {cols_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
  }
  std::span<const double> vals(std::size_t i) const {
    return {vals_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
  }
  double diagonal(std::size_t i) const { return diagonal_[i]; }
  /// Σ_j q_ij over D_n; zero for conservative rows, negative where mass is killed.
  double row_sum(std::size_t i) const;
  bool conservative(double tol = kRowSumTolerance) const;
  double max_exit_rate() const;

 private:
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> cols_;
  std::vector<double> vals_;
  std::vector<double> diagonal_;
};

/// A = Q + diag(c) on D_n together with a shift α making A + αI nonnegative
/// with a strictly positive diagonal.
class TwistedMatrix {
 public:
  TwistedMatrix(RateMatrix rates, std::vector<double> cost);

  std::size_t size() const { return rates_.size(); }
  const RateMatrix& rates() const { return rates_; }
  double cost(std::size_t i) const { return cost_[i]; }
  const std::vector<double>& costs() const { return cost_; }
  double diagonal(std::size_t i) const { return rates_.diagonal(i) + cost_[i]; }
  /// α = max_i(−q_ii) + 1.
  double shift() const { return shift_; }

  /// y = A x (unshifted).
  void multiply(std::span<const double> x, std::span<double> y) const;
  /// (A x)_i
  double row_apply(std::size_t i, std::span<const double> x) const;
  /// Row-major dense copy of A.
  std::vector<double> dense() const;

 private:
  RateMatrix rates_;
  std::vector<double> cost_;
  double shift_;
};

/// Twisted matrix of player k's cost under the stationary pair (v1, v2) on D_n.
TwistedMatrix assemble(const TruncatedView& view, const StationaryStrategy& v1,
                       const StationaryStrategy& v2, Player k);

RateMatrix assemble_rates(const TruncatedView& view, const StationaryStrategy& v1,
                          const StationaryStrategy& v2);

/// One pure action of the controlling player at one state, with the opponent's
/// mixed action already averaged in.
struct ActionRow {
  std::vector<std::size_t> cols;
  std::vector<double> vals;
  double rate_diagonal = 0.0;
  double cost = 0.0;

  /// (A_a ψ)_i for the state this row belongs to.
  double apply(std::size_t i, std::span<const double> psi) const;
  /// Σ |A_a,ij| ψ_j, the magnitude scale of apply().
  double magnitude(std::size_t i, std::span<const double> psi) const;
};

/// Player k's per-state, per-action rows against a frozen opponent on D_n.
class ControlledFamily {
 public:
  ControlledFamily(Player player, std::vector<std::vector<ActionRow>> rows);

  Player player() const { return player_; }
  std::size_t size() const { return rows_.size(); }
  std::span<const ActionRow> actions(std::size_t i) const { return rows_[i]; }
  /// max over states and actions of −q_ii, plus one.
  double shift() const { return shift_; }

  TwistedMatrix select(std::span<const std::size_t> selector) const;
  /// Rows mixed by the controlling player's own strategy.
  TwistedMatrix mix(const StationaryStrategy& own) const;

 private:
  Player player_;
  std::vector<std::vector<ActionRow>> rows_;
  double shift_;
};

ControlledFamily assemble_controlled(const TruncatedView& view, const StationaryStrategy& opponent,
                                     Player player);

}  // namespace rsgame
