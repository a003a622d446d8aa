#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "rsgame/model.hpp"

namespace rsgame {

/// Single-product shop: player 1 buys stock, player 2 sells it. The state is
/// the stock level i >= 1. For i >= 2 rows are birth-death with down rate
/// λi + h2 and up rate μ̃i + h1, where h_k(i,u) = u·e^{-θi} on the kernel set and
/// zero elsewhere. State 1 restocks through a dense boundary row.
struct ShopParams {
  double selling_rate = 20.0;  // λ
  double buying_rate = 2.0;    // μ̃
  double theta = 0.1;          // Lyapunov exponent, V(i) = e^{θi}
  double action_max = 1.0;     // L; actions live on [0, L]
  std::size_t action_count = 5;
  std::array<double, 2> fee = {1.0, 1.0};            // p_k, cost i·p_k per unit time
  std::array<double, 2> payoff_slope = {1.0, 1.0};   // r_k(i, u) = slope_k·u
  std::vector<State> kernel_set = {1, 2, 3};         // 𝒦
  /// π̄_1j for j = 2, 3, ...; empty selects e^{-2θj} cut where the tail mass drops below 1e-15.
  std::vector<double> boundary_row;
};

enum class ShopCondition {
  action_interval,  // L > 0, θ > 0, nonempty grid
  rate_ordering,    // λ ≥ μ̃ > 0 and positive birth/death rates
  kernel_set,       // 𝒦 finite, contains 1, boundary row admissible
  fee_margin,       // i·p_k − r_k ≥ 0 and (1−e^{−θ})λ + (1−e^{θ})μ̃ > p_k
};

const char* to_string(ShopCondition c);

class ShopConditionError : public ModelError {
 public:
  ShopConditionError(ShopCondition condition, const std::string& what)
      : ModelError(std::string(to_string(condition)) + ": " + what), condition_(condition) {}
  ShopCondition condition() const { return condition_; }

 private:
  ShopCondition condition_;
};

/// α = λ(1 − e^{−θ}) − μ̃(e^{θ} − 1); positive exactly when μ̃ < λe^{−θ}.
double shop_drift_margin(const ShopParams& p);

/// Bracket μ̃(e^θ − 1) + λ(e^{−θ} − 1) = −α of the exponential drift identity.
double shop_drift_bracket(const ShopParams& p);

/// max{L(e^θ − 1), e^{−2θ}/(1 − e^{−θ})}
double shop_kernel_constant(const ShopParams& p);

/// (2L + μ̃ + λ)/θ
double shop_exit_rate_constant(const ShopParams& p);

/// The boundary row actually used, π̄_1j for j = 2..(1 + size).
std::vector<double> shop_boundary_row(const ShopParams& p);

double shop_control(const ShopParams& p, State i, double u);
double shop_payoff(const ShopParams& p, Player k, State i, double u);
std::vector<double> shop_action_grid(const ShopParams& p);

/// Throws ShopConditionError naming the first violated condition.
void check_shop_params(const ShopParams& p);

/// Countable lazy model; validates the parameters first.
GameModel shop_model(const ShopParams& params);

/// Same model without parameter validation, for diagnosing violations.
GameModel shop_model_unchecked(const ShopParams& params);

nlohmann::json to_json(const ShopParams& p);
ShopParams shop_params_from_json(const nlohmann::json& j);

}  // namespace rsgame
