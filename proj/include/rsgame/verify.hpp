#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rsgame/model.hpp"
#include "rsgame/shop.hpp"

namespace rsgame {

/// Lyapunov data for the drift conditions.
struct LyapunovSpec {
  std::function<double(State)> W;                          // ≥ 1
  std::optional<std::function<double(State)>> W_tilde;     // defaults to W
  double C1 = 1.0;
  double C2 = 0.0;
  double C3 = 0.0;
  double C4 = 0.0;
  std::optional<double> gamma;                             // bounded-cost variant
  std::optional<std::function<double(State)>> ell;         // unbounded-cost variant
  std::vector<State> kernel_set;                           // 𝒦
  /// W can be evaluated on 1..limit only; unset means everywhere.
  std::optional<State> evaluable_limit;
  /// Argument covering states past the checked range of a lazy model.
  std::optional<std::string> tail_certificate;
  /// Appended to the report when the norm-like check fails.
  std::optional<std::string> norm_like_hint;

  double w_tilde(State s) const { return W_tilde ? (*W_tilde)(s) : W(s); }
  bool in_kernel(State s) const;
};

struct CheckRange {
  State first = 1;
  State last = 100;
};

enum class AssumptionStatus { holds, violated, needs_analytic_tail };
std::string to_string(AssumptionStatus s);

struct Witness {
  std::string check;
  State state = 0;
  std::size_t a1 = 0;
  std::size_t a2 = 0;
  std::optional<State> target;
  std::optional<int> player;
  double lhs = 0.0;
  double rhs = 0.0;
  double defect = 0.0;  // lhs − rhs; positive means violated
};

struct AssumptionReport {
  std::string name;
  AssumptionStatus status = AssumptionStatus::holds;
  std::vector<Witness> witnesses;  // the smallest violating states first
  CheckRange range;
  double max_defect = -std::numeric_limits<double>::infinity();
  bool needs_analytic_tail = false;
  std::vector<std::string> notes;

  bool holds() const { return status == AssumptionStatus::holds; }
};

/// Σ_j W̃(j)π̄_ij ≤ C1·W̃(i) + C2 and π̄_i ≤ C3·W̃(i) over all grid action pairs.
AssumptionReport check_lyapunov_drift(const GameModel& model, const LyapunovSpec& spec, CheckRange range);

enum class DriftVariant { bounded, unbounded };

/// Σ_j W(j)π̄_ij ≤ C4·1_𝒦(i) − γW(i) (bounded) or − ℓ(i)W(i) (unbounded, with
/// norm-likeness of ℓ − max c_k checked on the range).
AssumptionReport check_cost_drift(const GameModel& model, const LyapunovSpec& spec, DriftVariant variant,
                                CheckRange range);

struct IrreducibilityReport {
  std::string mode;  // "pair" or "all_pure"
  bool irreducible = false;
  std::vector<std::vector<State>> components;
};

/// Strong connectivity on D_n under a stationary pair, or of the graph whose
/// edges are positive under every pure action pair (a sufficient condition for
/// irreducibility under all stationary pairs).
IrreducibilityReport check_irreducibility(const GameModel& model, std::size_t n,
                                          const std::optional<StrategyPair>& pair = std::nullopt);

/// π̄_{i0 j} > 0 for every j ≠ i0 in the range and every pure action pair.
AssumptionReport check_anchor_row(const GameModel& model, State anchor, CheckRange range);

/// W = W̃ = e^{θi}, C1 = 1, C2 = C4, ℓ(i) = αi and the shop's 𝒦.
LyapunovSpec shop_lyapunov_spec(const ShopParams& params);

struct DisplayCheck {
  std::string name;
  bool pass = true;
  std::optional<Witness> worst;
  std::string note;
};

struct ConditionCheck {
  std::string name;
  bool pass = true;
  std::string witness;
};

struct ShopReport {
  CheckRange range;
  std::vector<ConditionCheck> conditions;
  std::vector<DisplayCheck> displays;
  std::vector<std::string> notes;
  bool pass = false;

  const DisplayCheck* display(const std::string& name) const;
  const ConditionCheck* condition(const std::string& name) const;
};

/// Evaluates every inequality of the shop's sufficient-condition argument on
/// the range: drift_identity, killed_drift_bound, boundary_row_bound,
/// linear_drift_constants, exit_rate_bound and norm_like_margin, plus the
/// parameter conditions rate_ordering, drift_sign and fee_margin.
ShopReport shop_report(const ShopParams& params, CheckRange range = {});

nlohmann::json to_json(const Witness& w);
nlohmann::json to_json(const AssumptionReport& r);
nlohmann::json to_json(const IrreducibilityReport& r);
nlohmann::json to_json(const ShopReport& r);
std::string to_text(const AssumptionReport& r);
std::string to_text(const ShopReport& r);

}  // namespace rsgame
