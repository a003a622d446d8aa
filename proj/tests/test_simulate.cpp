#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "instances.hpp"
#include "oracle.hpp"
#include "rsgame/eigensolver.hpp"
#include "rsgame/shop.hpp"
#include "rsgame/simulate.hpp"

using namespace rsgame;

namespace {

GameModel single_action_chain(const std::vector<std::vector<double>>& rates, const std::vector<double>& cost) {
  const std::size_t n = rates.size();
  TabularGame g;
  g.num_states = n;
  for (std::size_t p = 0; p < 2; ++p) {
    g.actions[p].assign(n, {0.0});
    g.costs[p].assign(n, {{0.0}});
  }
  g.rows.assign(n, {{PureRow{}}});
  for (std::size_t i = 0; i < n; ++i) {
    PureRow& r = g.rows[i][0][0];
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && rates[i][j] > 0.0) r.off_diagonal.push_back({static_cast<State>(j + 1), rates[i][j]});
    r.diagonal = -r.off_diagonal_sum();
    g.costs[0][i][0][0] = cost[i];
  }
  return make_tabular_model(std::move(g));
}

struct Fixed {
  GameModel model;
  StationaryStrategy v1, v2;
  explicit Fixed(GameModel m)
      : model(m), v1(uniform_strategy(m, Player::first)), v2(uniform_strategy(m, Player::second)) {}
};

const std::vector<std::vector<double>> kThree = {{0, 1.0, 0.5}, {0.7, 0, 1.2}, {0.4, 0.9, 0}};

}  // namespace

TEST(SamplePath, AbsorbingStateIntegratesConstantCost) {
  Fixed f(single_action_chain({{0.0}}, {0.8}));
  RandomStream rng(1, 0, 0);
  const TrajectorySample p = sample_path(f.model, f.v1, f.v2, 1, 5.0, rng);
  EXPECT_EQ(p.jump_times.size(), 1u);
  EXPECT_DOUBLE_EQ(p.cost_integral[0], 4.0);
  EXPECT_FALSE(p.exited_truncation);
}

TEST(SamplePath, HoldingTimesAreUnitExponential) {
  Fixed f(single_action_chain({{0, 1.0}, {1.0, 0}}, {0, 0}));
  const int n = 10000;
  double sum = 0.0, sq = 0.0;
  for (int m = 0; m < n; ++m) {
    RandomStream rng(3, 0, static_cast<std::uint64_t>(m));
    const TrajectorySample p = sample_path(f.model, f.v1, f.v2, 1, 100.0, rng);
    ASSERT_GE(p.jump_times.size(), 2u);
    const double h = p.jump_times[1] - p.jump_times[0];
    sum += h;
    sq += h * h;
  }
  const double mean = sum / n, se = std::sqrt((sq / n - mean * mean) / n);
  EXPECT_NEAR(mean, 1.0, 3 * se);
}

TEST(SamplePath, OccupationMatchesStationaryDistribution) {
  Fixed f(single_action_chain(kThree, {0, 0, 0}));
  RandomStream rng(4, 0, 0);
  const double horizon = 40000.0;
  const TrajectorySample p = sample_path(f.model, f.v1, f.v2, 1, horizon, rng);
  std::vector<double> occ(3, 0.0);
  for (std::size_t k = 0; k < p.states.size(); ++k) {
    const double end = k + 1 < p.jump_times.size() ? p.jump_times[k + 1] : horizon;
    occ[static_cast<std::size_t>(p.states[k] - 1)] += end - p.jump_times[k];
  }
  const oracle::Table u1 = oracle::uniform_table(f.model, Player::first, 3);
  const Eigen::VectorXd pi = oracle::stationary_distribution(oracle::dense_generator(f.model, 3, u1, u1));
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(occ[static_cast<std::size_t>(i)] / horizon, pi(i), 0.01);
}

TEST(SamplePath, StopsOnLeavingTheTruncation) {
  const GameModel shop = shop_model(ShopParams{});
  const auto v1 = uniform_strategy(shop, Player::first), v2 = uniform_strategy(shop, Player::second);
  std::size_t exits = 0;
  for (std::uint64_t m = 0; m < 200; ++m) {
    RandomStream rng(5, 0, m);
    const TrajectorySample p = sample_path(shop, v1, v2, 4, 10.0, rng, 4);
    if (p.exited_truncation) {
      ++exits;
      EXPECT_LE(p.exit_time, 10.0);
      for (State s : p.states) EXPECT_LE(s, 4);
    }
  }
  EXPECT_GT(exits, 0u);
}

TEST(RiskCost, ConstantCostIsExact) {
  Fixed f(single_action_chain(kThree, {0.7, 0.7, 0.7}));
  RiskOptions o;
  o.horizon = 20;
  o.paths = 2000;
  const RiskCostEstimate e = estimate_risk_cost(f.model, f.v1, f.v2, Player::first, 2, o);
  EXPECT_NEAR(e.rho_hat, 0.7, 1e-12);
  EXPECT_NEAR(e.standard_error, 0.0, 1e-12);
  EXPECT_EQ(e.batch_rho.size(), 20u);
}

TEST(RiskCost, ZeroCostIsZero) {
  Fixed f(single_action_chain(kThree, {0, 0, 0}));
  RiskOptions o;
  o.horizon = 10;
  o.paths = 1000;
  const RiskCostEstimate e = estimate_risk_cost(f.model, f.v1, f.v2, Player::first, 1, o);
  EXPECT_EQ(e.rho_hat, 0.0);
  EXPECT_EQ(e.standard_error, 0.0);
}

TEST(RiskCost, ThreeStateChainMatchesEigenvalue) {
  Fixed f(single_action_chain(kThree, {0.2, 0.9, 0.5}));
  const auto [t, view] = truncate(f.model, 3);
  const oracle::Table u = oracle::uniform_table(f.model, Player::first, 3);
  const double rho = oracle::dense_principal(oracle::dense_twisted(f.model, 3, u, u, Player::first), 0).rho;
  RiskOptions o;
  o.horizon = 200;
  o.paths = 100000;
  const RiskCostEstimate e = estimate_risk_cost(f.model, f.v1, f.v2, Player::first, 1, o);
  EXPECT_TRUE(e.valid);
  EXPECT_GT(e.standard_error, 0.0);
  EXPECT_LE(std::abs(e.rho_hat - rho), 3 * e.standard_error);
  EXPECT_LE(e.risk_neutral, e.rho_hat + 1e-12);  // Jensen
}

TEST(RiskCost, IndependentOfThreadCount) {
  Fixed f(single_action_chain(kThree, {0.2, 0.9, 0.5}));
  RiskOptions o;
  o.horizon = 30;
  o.paths = 5000;
  o.keep_log_weights = true;
  const RiskCostEstimate a = estimate_risk_cost(f.model, f.v1, f.v2, Player::first, 1, o);
  o.threads = 3;
  const RiskCostEstimate b = estimate_risk_cost(f.model, f.v1, f.v2, Player::first, 1, o);
  EXPECT_EQ(a.rho_hat, b.rho_hat);
  EXPECT_EQ(a.standard_error, b.standard_error);
  EXPECT_EQ(a.log_weights, b.log_weights);
  std::ostringstream ca, cb;
  write_batches_csv(ca, a);
  write_batches_csv(cb, b);
  EXPECT_EQ(ca.str(), cb.str());
  EXPECT_EQ(ca.str().substr(0, 20), "batch,paths,rho_hat\n");
}

TEST(RiskCost, KilledPathsCarryZeroWeight) {
  const GameModel shop = shop_model(ShopParams{});
  RiskOptions o;
  o.horizon = 2;
  o.paths = 500;
  o.truncation = 6;
  o.keep_log_weights = true;
  const RiskCostEstimate e = estimate_risk_cost(shop, uniform_strategy(shop, Player::first),
                                                uniform_strategy(shop, Player::second), Player::first, 6, o);
  EXPECT_GT(e.killed, 0u);
  std::size_t neg_inf = 0;
  for (double w : e.log_weights) neg_inf += std::isinf(w) && w < 0 ? 1 : 0;
  EXPECT_EQ(neg_inf, e.killed);
}

TEST(RiskCost, KillingRateEndsPaths) {
  // A lone state with killing rate 0.5 and cost 1: E[e^{∫c}; alive at T] = e^{0.5T}.
  TabularGame g = to_tabular(single_action_chain({{0.0}}, {1.0}));
  g.rows[0][0][0].diagonal = -0.5;
  const GameModel m = make_tabular_model(std::move(g));
  const Fixed f(m);
  RiskOptions o;
  o.horizon = 1;
  o.paths = 20000;
  const RiskCostEstimate e = estimate_risk_cost(f.model, f.v1, f.v2, Player::first, 1, o);
  EXPECT_GT(e.killed, 0u);
  EXPECT_LE(std::abs(e.rho_hat - 0.5), 4 * e.standard_error);
}

TEST(RiskCost, SubconservativeChainMatchesFiniteHorizonValue) {
  TabularGame g = to_tabular(single_action_chain(kThree, {0.2, 0.9, 0.5}));
  g.rows[1][0][0].diagonal -= 0.3;
  const Fixed f(make_tabular_model(std::move(g)));
  const oracle::Table u = oracle::uniform_table(f.model, Player::first, 3);
  RiskOptions o;
  o.horizon = 5;
  o.paths = 100000;
  // (1/T) log E_1[e^{∫c}; alive at T] = (1/T) log (e^{TA} 1)_1.
  const Eigen::MatrixXd expm = (o.horizon * oracle::dense_twisted(f.model, 3, u, u, Player::first)).exp();
  const double exact = std::log(expm.row(0).sum()) / o.horizon;
  const RiskCostEstimate e = estimate_risk_cost(f.model, f.v1, f.v2, Player::first, 1, o);
  EXPECT_GT(e.killed, o.paths / 10);
  EXPECT_LT(e.killed, o.paths);
  EXPECT_LE(std::abs(e.rho_hat - exact), 4 * e.standard_error);
}

TEST(RiskCost, RejectsBadOptions) {
  Fixed f(single_action_chain(kThree, {0, 0, 0}));
  RiskOptions o;
  o.batches = 5;
  EXPECT_THROW(estimate_risk_cost(f.model, f.v1, f.v2, Player::first, 1, o), ModelError);
  o.batches = 20;
  o.paths = 10;
  EXPECT_THROW(estimate_risk_cost(f.model, f.v1, f.v2, Player::first, 1, o), ModelError);
}

TEST(Hitting, StartInTargetIsExact) {
  Fixed f(single_action_chain(kThree, {0.2, 0.9, 0.5}));
  HittingOptions o;
  o.target_set = {2};
  o.starts = {2};
  o.paths = 100;
  const HittingReport r = hitting_representation_check(
      f.model, f.v1, f.v2, Player::first, [](State s) { return 0.5 + s; }, 0.3, o);
  ASSERT_EQ(r.starts.size(), 1u);
  EXPECT_EQ(r.starts[0].estimate, 2.5);
  EXPECT_EQ(r.starts[0].deviation, 0.0);
  EXPECT_TRUE(r.pass);
}

TEST(Hitting, ZeroCostUnitPsi) {
  Fixed f(single_action_chain(kThree, {0, 0, 0}));
  HittingOptions o;
  o.target_set = {1};
  o.starts = {2, 3};
  o.paths = 500;
  const HittingReport r =
      hitting_representation_check(f.model, f.v1, f.v2, Player::first, [](State) { return 1.0; }, 0.0, o);
  for (const auto& s : r.starts) {
    EXPECT_DOUBLE_EQ(s.estimate, 1.0);
    EXPECT_EQ(s.hits, 500u);
  }
  EXPECT_TRUE(r.pass);
}

TEST(Hitting, EigenpairOfAFixedChainIsSelfConsistent) {
  Fixed f(single_action_chain(kThree, {0.2, 0.9, 0.5}));
  const auto [t, view] = truncate(f.model, 3);
  const EigenPair ep = principal_eigenpair(assemble(view, f.v1, f.v2, Player::first), 0);
  HittingOptions o;
  o.target_set = {1};
  o.starts = {2, 3};
  o.paths = 20000;
  const auto psi = ep.psi;
  const HittingReport r = hitting_representation_check(
      f.model, f.v1, f.v2, Player::first, [&psi](State s) { return psi[static_cast<std::size_t>(s - 1)]; }, ep.rho,
      o);
  EXPECT_TRUE(r.valid);
  for (const auto& s : r.starts) EXPECT_LE(std::abs(s.deviation), 3 * s.standard_error) << s.start;
  std::ostringstream csv;
  write_hitting_csv(csv, r);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')),
            "start,psi,estimate,standard_error,deviation,z,hits,killed,capped,pass");
}
