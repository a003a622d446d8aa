#include "rsgame/shop.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace rsgame {

const char* to_string(ShopCondition c) {
  switch (c) {
    case ShopCondition::action_interval:
      return "action interval condition (L > 0, theta > 0, nonempty grid)";
    case ShopCondition::rate_ordering:
      return "rate ordering condition (lambda >= mu > 0, positive birth/death rates)";
    case ShopCondition::kernel_set:
      return "kernel set condition (finite K containing 1, admissible boundary row)";
    case ShopCondition::fee_margin:
      return "fee margin condition (i*p_k - r_k >= 0 and (1-e^-theta)*lambda + (1-e^theta)*mu > p_k)";
  }
  return "unknown condition";
}

double shop_drift_bracket(const ShopParams& p) {
  return p.buying_rate * std::expm1(p.theta) + p.selling_rate * std::expm1(-p.theta);
}

double shop_drift_margin(const ShopParams& p) { return -shop_drift_bracket(p); }

double shop_kernel_constant(const ShopParams& p) {
  return std::max(p.action_max * std::expm1(p.theta),
                  std::exp(-2.0 * p.theta) / -std::expm1(-p.theta));
}

double shop_exit_rate_constant(const ShopParams& p) {
  return (2.0 * p.action_max + p.buying_rate + p.selling_rate) / p.theta;
}

std::vector<double> shop_boundary_row(const ShopParams& p) {
  if (!p.boundary_row.empty()) return p.boundary_row;
  // Tail past J is e^{-2θ(J+1)} / (1 - e^{-2θ}); stop once it is below 1e-15.
  const double ratio = std::exp(-2.0 * p.theta);
  const double denom = -std::expm1(-2.0 * p.theta);
  std::vector<double> row;
  for (State j = 2;; ++j) {
    row.push_back(std::exp(-2.0 * p.theta * static_cast<double>(j)));
    const double tail = row.back() * ratio / denom;
    if (tail < 1e-15 || row.size() > 100000) break;
  }
  return row;
}

double shop_control(const ShopParams& p, State i, double u) {
  const bool in_kernel =
      std::find(p.kernel_set.begin(), p.kernel_set.end(), i) != p.kernel_set.end();
  return in_kernel ? u * std::exp(-p.theta * static_cast<double>(i)) : 0.0;
}

double shop_payoff(const ShopParams& p, Player k, State, double u) {
  return p.payoff_slope[index_of(k)] * u;
}

std::vector<double> shop_action_grid(const ShopParams& p) {
  if (p.action_count <= 1) return {0.0};
  std::vector<double> grid(p.action_count);
  const double step = p.action_max / static_cast<double>(p.action_count - 1);
  for (std::size_t a = 0; a < p.action_count; ++a) grid[a] = step * static_cast<double>(a);
  grid.back() = p.action_max;
  return grid;
}

void check_shop_params(const ShopParams& p) {
  auto fail = [](ShopCondition c, const std::string& detail) { throw ShopConditionError(c, detail); };
  auto str = [](double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
  };

  if (!(p.action_max > 0.0) || !std::isfinite(p.action_max))
    fail(ShopCondition::action_interval, "L = " + str(p.action_max) + " must be positive");
  if (!(p.theta > 0.0) || !std::isfinite(p.theta))
    fail(ShopCondition::action_interval, "theta = " + str(p.theta) + " must be positive");
  if (p.action_count == 0) fail(ShopCondition::action_interval, "action grid is empty");

  if (!(p.buying_rate > 0.0))
    fail(ShopCondition::rate_ordering, "mu = " + str(p.buying_rate) + " must be positive");
  if (!(p.selling_rate >= p.buying_rate))
    fail(ShopCondition::rate_ordering,
         "lambda = " + str(p.selling_rate) + " < mu = " + str(p.buying_rate));
  const auto grid = shop_action_grid(p);
  for (double u : grid) {
    if (!(p.buying_rate * 2.0 + shop_control(p, 2, u) > 0.0) ||
        !(p.selling_rate * 2.0 + shop_control(p, 2, u) > 0.0))
      fail(ShopCondition::rate_ordering, "non-positive birth or death rate at i = 2");
  }

  if (p.kernel_set.empty() ||
      std::find(p.kernel_set.begin(), p.kernel_set.end(), State{1}) == p.kernel_set.end())
    fail(ShopCondition::kernel_set, "K must contain state 1");
  for (State s : p.kernel_set)
    if (s < 1) fail(ShopCondition::kernel_set, "K contains state " + std::to_string(s));
  const auto boundary = shop_boundary_row(p);
  if (boundary.empty()) fail(ShopCondition::kernel_set, "boundary row is empty");
  for (std::size_t e = 0; e < boundary.size(); ++e) {
    const double j = static_cast<double>(e + 2);
    if (!(boundary[e] > 0.0) || !std::isfinite(boundary[e]))
      fail(ShopCondition::kernel_set, "boundary rate to j = " + str(j) + " must be positive");
    if (boundary[e] > std::exp(-2.0 * p.theta * j) * (1.0 + 1e-15))
      fail(ShopCondition::kernel_set,
           "boundary rate to j = " + str(j) + " exceeds e^{-2 theta j} = " +
               str(std::exp(-2.0 * p.theta * j)));
  }

  const double alpha = shop_drift_margin(p);
  for (Player k : {Player::first, Player::second}) {
    const auto ki = index_of(k);
    double max_payoff = -INFINITY;
    for (double u : grid) max_payoff = std::max(max_payoff, shop_payoff(p, k, 1, u));
    if (p.fee[ki] < 0.0 || p.fee[ki] - max_payoff < 0.0)
      fail(ShopCondition::fee_margin, "player " + std::to_string(number_of(k)) +
                                          " cost i*p - r(i,u) is negative at i = 1 (p = " +
                                          str(p.fee[ki]) + ")");
    if (!(alpha > p.fee[ki]))
      fail(ShopCondition::fee_margin, "player " + std::to_string(number_of(k)) + ": drift margin " +
                                          str(alpha) + " does not exceed fee p = " +
                                          str(p.fee[ki]));
  }
}

namespace {

class ShopDefinition final : public ModelDefinition {
 public:
  explicit ShopDefinition(ShopParams params)
      : params_(std::move(params)),
        grid_(shop_action_grid(params_)),
        boundary_(shop_boundary_row(params_)) {}

  std::optional<std::size_t> finite_size() const override { return std::nullopt; }
  State anchor() const override { return 1; }
  std::vector<double> actions(State s, Player) const override {
    if (s < 1) throw ModelError("shop state must be positive");
    return grid_;
  }

  PureRow row(State s, std::size_t a1, std::size_t a2) const override {
    if (s < 1) throw ModelError("shop state must be positive");
    const double u1 = grid_.at(a1);
    const double u2 = grid_.at(a2);
    PureRow r;
    if (s == 1) {
      r.off_diagonal.reserve(boundary_.size());
      for (std::size_t e = 0; e < boundary_.size(); ++e)
        r.off_diagonal.push_back({static_cast<State>(e) + 2, boundary_[e]});
    } else {
      const double i = static_cast<double>(s);
      const double down = params_.selling_rate * i + shop_control(params_, s, u2);
      const double up = params_.buying_rate * i + shop_control(params_, s, u1);
      r.off_diagonal = {{s - 1, down}, {s + 1, up}};
    }
    r.diagonal = -r.off_diagonal_sum();
    return r;
  }

  double cost(Player k, State s, std::size_t a1, std::size_t a2) const override {
    const double u = k == Player::first ? grid_.at(a1) : grid_.at(a2);
    return static_cast<double>(s) * params_.fee[index_of(k)] - shop_payoff(params_, k, s, u);
  }

  std::optional<nlohmann::json> to_json() const override {
    return nlohmann::json{{"lazy", "shop"}, {"anchor", 1}, {"shop_params", rsgame::to_json(params_)}};
  }

 private:
  ShopParams params_;
  std::vector<double> grid_;
  std::vector<double> boundary_;
};

}  // namespace

GameModel shop_model_unchecked(const ShopParams& params) {
  return GameModel(std::make_shared<ShopDefinition>(params));
}

GameModel shop_model(const ShopParams& params) {
  check_shop_params(params);
  return shop_model_unchecked(params);
}

nlohmann::json to_json(const ShopParams& p) {
  return {{"selling_rate", p.selling_rate},
          {"buying_rate", p.buying_rate},
          {"theta", p.theta},
          {"action_max", p.action_max},
          {"action_count", p.action_count},
          {"fee", p.fee},
          {"payoff_slope", p.payoff_slope},
          {"kernel_set", p.kernel_set},
          {"boundary_row", p.boundary_row}};
}

ShopParams shop_params_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ModelError("shop_params must be an object");
  static const std::set<std::string> known = {"selling_rate", "buying_rate", "theta",
                                              "action_max",   "action_count", "fee",
                                              "payoff_slope", "kernel_set",   "boundary_row"};
  for (const auto& [key, _] : j.items())
    if (!known.contains(key)) throw ModelError("shop_params: unknown field '" + key + "'");
  ShopParams p;
  try {
    if (j.contains("selling_rate")) p.selling_rate = j.at("selling_rate").get<double>();
    if (j.contains("buying_rate")) p.buying_rate = j.at("buying_rate").get<double>();
    if (j.contains("theta")) p.theta = j.at("theta").get<double>();
    if (j.contains("action_max")) p.action_max = j.at("action_max").get<double>();
    if (j.contains("action_count")) p.action_count = j.at("action_count").get<std::size_t>();
    if (j.contains("fee")) p.fee = j.at("fee").get<std::array<double, 2>>();
    if (j.contains("payoff_slope")) p.payoff_slope = j.at("payoff_slope").get<std::array<double, 2>>();
    if (j.contains("kernel_set")) p.kernel_set = j.at("kernel_set").get<std::vector<State>>();
    if (j.contains("boundary_row")) p.boundary_row = j.at("boundary_row").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("shop_params: ") + e.what());
  }
  return p;
}

}  // namespace rsgame
