#include <gtest/gtest.h>

#include <cmath>
#include <queue>
#include <random>

#include "instances.hpp"
#include "rsgame/shop.hpp"
#include "rsgame/verify.hpp"

using namespace rsgame;

namespace {

GameModel chain(std::size_t n, const std::function<double(std::size_t, std::size_t)>& rate, double killing = 0.0,
                double cost = 0.0) {
  TabularGame g;
  g.num_states = n;
  for (std::size_t p = 0; p < 2; ++p) {
    g.actions[p].assign(n, {0.0});
    g.costs[p].assign(n, {{cost}});
  }
  g.rows.assign(n, {{PureRow{}}});
  for (std::size_t i = 0; i < n; ++i) {
    PureRow& r = g.rows[i][0][0];
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && rate(i, j) > 0.0) r.off_diagonal.push_back({static_cast<State>(j + 1), rate(i, j)});
    r.diagonal = -r.off_diagonal_sum() - killing;
  }
  return make_tabular_model(std::move(g));
}

GameModel birth_death(std::size_t n, double killing = 0.0, double cost = 0.0) {
  return chain(n, [](std::size_t i, std::size_t j) { return (j + 1 == i || i + 1 == j) ? 1.0 : 0.0; }, killing,
               cost);
}

}  // namespace

TEST(LyapunovDrift, BoundedRatesHoldWithUnitLyapunov) {
  std::mt19937_64 rng(1);
  instances::GameShape shape;
  shape.states = 6;
  const GameModel m = instances::random_game(rng, shape);
  double sup = 0.0;
  for (State i = 1; i <= 6; ++i)
    for (std::size_t a = 0; a < 2; ++a)
      for (std::size_t b = 0; b < 2; ++b) sup = std::max(sup, -m.row(i, a, b).diagonal);
  LyapunovSpec spec;
  spec.W = [](State) { return 1.0; };
  spec.C2 = sup;
  spec.C3 = sup;
  EXPECT_TRUE(check_lyapunov_drift(m, spec, {1, 6}).holds());
  spec.C3 = 0.5 * sup;
  const auto r = check_lyapunov_drift(m, spec, {1, 6});
  EXPECT_FALSE(r.holds());
  EXPECT_EQ(r.witnesses.front().check, "exit_rate");
}

TEST(LyapunovDrift, ShopDefaultsHold) {
  const ShopParams p;
  const auto r = check_lyapunov_drift(shop_model(p), shop_lyapunov_spec(p), {1, 100});
  EXPECT_TRUE(r.holds());
  EXPECT_LT(r.max_defect, 0.0);
}

TEST(LyapunovDrift, DriftSignFlipGivesWitnessAtTwo) {
  ShopParams p;
  p.theta = 3.0;  // μ̃ ≥ λe^{−θ}
  ASSERT_LT(shop_drift_margin(p), 0.0);
  const auto r = check_lyapunov_drift(shop_model_unchecked(p), shop_lyapunov_spec(p), {1, 30});
  ASSERT_FALSE(r.holds());
  EXPECT_EQ(r.witnesses.front().check, "drift");
  EXPECT_EQ(r.witnesses.front().state, 2);
  // Independent recomputation at i = 2 ∈ 𝒦 for the witness's actions.
  const auto& wit = r.witnesses.front();
  const auto grid = shop_action_grid(p);
  const double i = 2, w = std::exp(p.theta * i);
  const double up = p.buying_rate * i + grid[wit.a1] * std::exp(-p.theta * i);
  const double down = p.selling_rate * i + grid[wit.a2] * std::exp(-p.theta * i);
  const double lhs = up * std::exp(p.theta * 3) + down * std::exp(p.theta) - (up + down) * w;
  EXPECT_NEAR(wit.lhs, lhs, 1e-9 * std::abs(lhs));
  EXPECT_GT(wit.lhs, wit.rhs);
}

TEST(CostDrift, ShopUnboundedVariantHolds) {
  const ShopParams p;
  const LyapunovSpec spec = shop_lyapunov_spec(p);
  EXPECT_DOUBLE_EQ(spec.C4, std::max(p.action_max * (std::exp(p.theta) - 1),
                                     std::exp(-2 * p.theta) / (1 - std::exp(-p.theta))));
  const double alpha = -(p.buying_rate * (std::exp(p.theta) - 1) + p.selling_rate * (std::exp(-p.theta) - 1));
  EXPECT_NEAR((*spec.ell)(7), 7 * alpha, 1e-12);
  EXPECT_TRUE(check_cost_drift(shop_model(p), spec, DriftVariant::unbounded, {1, 100}).holds());
}

TEST(CostDrift, ConservativeZeroCostFailsBoundedVariant) {
  LyapunovSpec spec;
  spec.W = [](State) { return 1.0; };
  spec.gamma = 0.5;
  const auto r = check_cost_drift(birth_death(5), spec, DriftVariant::bounded, {1, 5});
  ASSERT_FALSE(r.holds());
  EXPECT_EQ(r.witnesses.front().state, 1);
  // A uniform deficit of at least γ restores it.
  EXPECT_TRUE(check_cost_drift(birth_death(5, 0.6), spec, DriftVariant::bounded, {1, 5}).holds());
}

TEST(CostDrift, FeeAboveMarginIsNotNormLike) {
  ShopParams p;
  p.fee[0] = shop_drift_margin(p) + 0.5;
  const auto r = check_cost_drift(shop_model_unchecked(p), shop_lyapunov_spec(p), DriftVariant::unbounded, {1, 100});
  ASSERT_FALSE(r.holds());
  bool cited = false;
  for (const auto& n : r.notes) cited = cited || n.find("(1-e^-theta)*lambda + (1-e^theta)*mu > p_k") != std::string::npos;
  EXPECT_TRUE(cited);
  bool player1 = false;
  for (const auto& w : r.witnesses) player1 = player1 || (w.player && *w.player == 1);
  EXPECT_TRUE(player1);
}

TEST(Irreducibility, BirthDeathAndDisconnected) {
  EXPECT_TRUE(check_irreducibility(birth_death(6), 6).irreducible);
  const auto r = check_irreducibility(chain(2, [](std::size_t, std::size_t) { return 0.0; }), 2);
  EXPECT_FALSE(r.irreducible);
  EXPECT_EQ(r.components.size(), 2u);
}

TEST(Irreducibility, ShopUniformMatchesReachability) {
  const GameModel m = shop_model(ShopParams{});
  const std::size_t n = 30;
  const StrategyPair pair{uniform_strategy(m, Player::first, n), uniform_strategy(m, Player::second, n)};
  const auto r = check_irreducibility(m, n, pair);
  EXPECT_EQ(r.mode, "pair");
  // Breadth-first search from every state over positive averaged rates.
  bool all = true;
  for (State s = 1; s <= static_cast<State>(n); ++s) {
    std::vector<bool> seen(n + 1, false);
    std::queue<State> q;
    q.push(s);
    seen[static_cast<std::size_t>(s)] = true;
    while (!q.empty()) {
      const State i = q.front();
      q.pop();
      for (const auto& t : m.row(i, 2, 2).off_diagonal)
        if (t.to <= static_cast<State>(n) && !seen[static_cast<std::size_t>(t.to)]) {
          seen[static_cast<std::size_t>(t.to)] = true;
          q.push(t.to);
        }
    }
    for (std::size_t j = 1; j <= n; ++j) all = all && seen[j];
  }
  EXPECT_EQ(r.irreducible, all);
  EXPECT_TRUE(r.irreducible);
  EXPECT_TRUE(check_irreducibility(m, n).irreducible);
}

TEST(AnchorRow, ShopHoldsUpToCut) {
  const ShopParams p;
  const State j_cut = static_cast<State>(shop_boundary_row(p).size()) + 1;
  const auto r = check_anchor_row(shop_model(p), 1, {2, j_cut});
  EXPECT_TRUE(r.holds());
  EXPECT_TRUE(r.needs_analytic_tail);
  EXPECT_FALSE(check_anchor_row(shop_model(p), 1, {2, j_cut + 1}).holds());
}

TEST(AnchorRow, BirthDeathFailsAtThree) {
  const auto r = check_anchor_row(birth_death(5), 1, {1, 5});
  ASSERT_FALSE(r.holds());
  EXPECT_EQ(r.witnesses.front().state, 1);
  EXPECT_EQ(r.witnesses.front().target, 3);
}

TEST(AnchorRow, CompleteGraphHoldsEverywhere) {
  const GameModel m = chain(5, [](std::size_t i, std::size_t j) { return 0.5 + 0.1 * static_cast<double>(i + j); });
  for (State a = 1; a <= 5; ++a) EXPECT_TRUE(check_anchor_row(m, a, {1, 5}).holds());
}

TEST(ShopReport, DefaultsPassEveryDisplay) {
  const ShopReport r = shop_report(ShopParams{}, {1, 100});
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.displays.size(), 6u);
  for (const auto& d : r.displays) EXPECT_TRUE(d.pass) << d.name;
  for (const char* name : {"drift_identity", "killed_drift_bound", "boundary_row_bound", "linear_drift_constants",
                           "exit_rate_bound", "norm_like_margin"})
    EXPECT_NE(r.display(name), nullptr) << name;
}

TEST(ShopReport, FeeAboveMarginFlagsNegativeBeta) {
  ShopParams p;
  p.fee[0] = shop_drift_margin(p) + 0.1;
  const ShopReport r = shop_report(p, {1, 100});
  EXPECT_FALSE(r.pass);
  const DisplayCheck* d = r.display("norm_like_margin");
  ASSERT_NE(d, nullptr);
  EXPECT_FALSE(d->pass);
  ASSERT_TRUE(d->worst);
  EXPECT_EQ(d->worst->check, "beta_nonnegative");
  EXPECT_NEAR(d->worst->defect, 0.1, 1e-12);
  EXPECT_FALSE(r.condition("fee_margin")->pass);
}

TEST(ShopReport, BoundaryRowBoundIsStrictAtOne) {
  const ShopParams p;
  const ShopReport r = shop_report(p, {1, 5});
  const DisplayCheck* d = r.display("boundary_row_bound");
  ASSERT_NE(d, nullptr);
  EXPECT_TRUE(d->pass);
  // Σ_{j≥2} e^{θj} π̄_1j ≤ Σ_{j≥2} e^{−θj} = e^{−2θ}/(1 − e^{−θ}), strictly since the row is cut.
  double lhs = 0.0;
  const auto row = shop_boundary_row(p);
  for (std::size_t e = 0; e < row.size(); ++e) lhs += std::exp(p.theta * static_cast<double>(e + 2)) * row[e];
  EXPECT_LT(lhs, std::exp(-2 * p.theta) / (1 - std::exp(-p.theta)));
  EXPECT_TRUE(std::isfinite(lhs));
}

TEST(ShopReport, JsonAndText) {
  const ShopReport r = shop_report(ShopParams{}, {1, 20});
  const auto j = to_json(r);
  EXPECT_TRUE(j["pass"].get<bool>());
  EXPECT_EQ(j["displays"].size(), 6u);
  EXPECT_NE(to_text(r).find("PASS"), std::string::npos);
}
