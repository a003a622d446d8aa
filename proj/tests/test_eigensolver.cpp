#include <gtest/gtest.h>

#include <random>

#include "instances.hpp"
#include "oracle.hpp"
#include "rsgame/eigensolver.hpp"
#include "rsgame/shop.hpp"

using namespace rsgame;

namespace {

// Twisted matrix from a dense row-major off-diagonal rate table, diagonal rates
// and costs.
TwistedMatrix twisted(std::size_t n, const std::vector<double>& off, const std::vector<double>& diag,
                      const std::vector<double>& cost) {
  std::vector<std::size_t> row_ptr{0}, cols;
  std::vector<double> vals;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && off[i * n + j] != 0.0) {
        cols.push_back(j);
        vals.push_back(off[i * n + j]);
      }
    row_ptr.push_back(cols.size());
  }
  return TwistedMatrix(RateMatrix(row_ptr, cols, vals, diag), cost);
}

Eigen::MatrixXd to_eigen(const TwistedMatrix& a) {
  const auto n = static_cast<Eigen::Index>(a.size());
  const auto d = a.dense();
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(d.data(), n, n);
}

TwistedMatrix random_metzler(std::mt19937_64& rng, std::size_t n, double killing) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> off(n * n, 0.0), diag(n), cost(n);
  for (std::size_t i = 0; i < n; ++i) {
    double out = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && (j == (i + 1) % n || u(rng) < 0.3)) out += off[i * n + j] = 0.1 + 2.0 * u(rng);
    diag[i] = -out - killing * u(rng);
    cost[i] = 3.0 * u(rng);
  }
  return twisted(n, off, diag, cost);
}

}  // namespace

TEST(Principal, ConstantCostOnConservativeChain) {
  std::mt19937_64 rng(1);
  TwistedMatrix base = random_metzler(rng, 8, 0.0);
  const TwistedMatrix a(base.rates(), std::vector<double>(8, 0.75));
  for (EigenMethod m : {EigenMethod::power, EigenMethod::shift_invert}) {
    EigenOptions o;
    o.method = m;
    const EigenPair ep = principal_eigenpair(a, 0, o);
    EXPECT_NEAR(ep.rho, 0.75, 1e-10);
    for (double x : ep.psi) EXPECT_NEAR(x, 1.0, 1e-8);
  }
}

TEST(Principal, OneState) {
  const TwistedMatrix a = twisted(1, {0.0}, {0.0}, {2.5});
  const EigenPair ep = principal_eigenpair(a, 0);
  EXPECT_DOUBLE_EQ(ep.rho, 2.5);
  EXPECT_EQ(ep.psi, std::vector<double>{1.0});
}

TEST(Principal, MatchesDenseOracle) {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 20; ++rep) {
    const TwistedMatrix a = random_metzler(rng, 12, rep % 2 ? 1.0 : 0.0);
    const auto ref = oracle::dense_principal(to_eigen(a), 3);
    for (EigenMethod m : {EigenMethod::power, EigenMethod::shift_invert}) {
      EigenOptions o;
      o.method = m;
      const EigenPair ep = principal_eigenpair(a, 3, o);
      EXPECT_NEAR(ep.rho, ref.rho, 1e-9);
      EXPECT_DOUBLE_EQ(ep.psi[3], 1.0);
      for (std::size_t i = 0; i < 12; ++i) EXPECT_NEAR(ep.psi[i], ref.psi(static_cast<Eigen::Index>(i)), 1e-7);
      EXPECT_LE(ep.bracket_low, ep.rho + 1e-12);
      EXPECT_GE(ep.bracket_high, ep.rho - 1e-12);
      EXPECT_LE(ep.bracket_width(), 1e-10);
      EXPECT_FALSE(ep.reducible);
    }
  }
}

TEST(Principal, LargeSparseUsesTheSparsePath) {
  // Birth-death chain of 600 states; exercises the sparse factorization.
  const std::size_t n = 600;
  std::vector<std::size_t> row_ptr{0}, cols;
  std::vector<double> vals, diag(n), cost(n);
  for (std::size_t i = 0; i < n; ++i) {
    double out = 0.0;
    if (i > 0) { cols.push_back(i - 1); vals.push_back(2.0); out += 2.0; }
    if (i + 1 < n) { cols.push_back(i + 1); vals.push_back(1.0); out += 1.0; }
    row_ptr.push_back(cols.size());
    diag[i] = -out;
    cost[i] = std::sin(static_cast<double>(i)) + 1.0;
  }
  const TwistedMatrix a(RateMatrix(row_ptr, cols, vals, diag), cost);
  const EigenPair ep = principal_eigenpair(a, 0);
  const auto ref = oracle::dense_principal(to_eigen(a), 0);
  EXPECT_NEAR(ep.rho, ref.rho, 1e-9);
  EXPECT_LE(ep.residual, 1e-9);
}

TEST(Principal, ReducibleIsFlagged) {
  // Two closed classes {0,1} and {2}; the second has the larger eigenvalue.
  const TwistedMatrix a = twisted(3, {0, 1, 0, 1, 0, 0, 0, 0, 0}, {-1, -1, 0}, {0.2, 0.2, 0.9});
  EXPECT_FALSE(is_irreducible(a));
  EXPECT_EQ(strongly_connected_components(a).size(), 2u);
  const EigenPair ep = principal_eigenpair(a, 2);
  EXPECT_TRUE(ep.reducible);
  EXPECT_NEAR(ep.rho, 0.9, 1e-10);
  EXPECT_FALSE(ep.warnings.empty());
  EXPECT_LE(ep.residual, 1e-8);
}

TEST(Principal, IterationCapRaisesWithLastIterate) {
  std::mt19937_64 rng(3);
  const TwistedMatrix a = random_metzler(rng, 10, 0.5);
  EigenOptions o;
  o.method = EigenMethod::power;
  o.max_iter = 2;
  o.tol = 1e-14;
  try {
    principal_eigenpair(a, 0, o);
    FAIL();
  } catch (const SolverError& e) {
    EXPECT_EQ(e.last().psi.size(), 10u);
  }
}

TEST(Principal, RejectsBadAnchor) {
  std::mt19937_64 rng(4);
  EXPECT_THROW(principal_eigenpair(random_metzler(rng, 3, 0.0), 3), ModelError);
}

namespace {

GameModel random_game(std::uint64_t seed, std::size_t n, std::size_t m1, std::size_t m2) {
  std::mt19937_64 rng(seed);
  instances::GameShape shape;
  shape.states = n;
  shape.actions1 = m1;
  shape.actions2 = m2;
  shape.edge_probability = 0.6;
  shape.rate_high = 3.0;
  return instances::random_game(rng, shape);
}

}  // namespace

TEST(BestResponse, IrrelevantActionsPickLowestIndex) {
  // Player 1 has three identical actions.
  TabularGame g = to_tabular(random_game(5, 4, 1, 2));
  for (auto& s : g.actions[0]) s = {0.0, 1.0, 2.0};
  for (auto& s : g.rows) s = {s[0], s[0], s[0]};
  for (auto& per_player : g.costs)
    for (auto& s : per_player) s = {s[0], s[0], s[0]};
  const GameModel m = make_tabular_model(std::move(g));
  const auto [t, view] = truncate(m, 4);
  const auto opp = uniform_strategy(m, Player::second);
  const auto [ep, strat] = best_response_eigenpair(view, opp, Player::first);
  for (State s = 1; s <= 4; ++s) EXPECT_EQ(strat.at(s), (std::vector<double>{1.0, 0.0, 0.0}));
  const EigenPair fixed = principal_eigenpair(assemble(view, strat, opp, Player::first), 0);
  EXPECT_NEAR(ep.rho, fixed.rho, 1e-10);
}

TEST(BestResponse, DominatedActionNeverSelected) {
  TabularGame g = to_tabular(random_game(6, 2, 2, 2));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t b = 0; b < 2; ++b) {
      g.rows[i][1][b] = g.rows[i][0][b];
      g.costs[0][i][1][b] = g.costs[0][i][0][b] + 1.0;
    }
  const GameModel m = make_tabular_model(std::move(g));
  const auto [t, view] = truncate(m, 2);
  const auto fam = assemble_controlled(view, uniform_strategy(m, Player::second), Player::first);
  const auto br = best_response_eigenpair(fam, 0);
  EXPECT_EQ(br.selector, (std::vector<std::size_t>{0, 0}));
  for (const auto& set : br.argmin_sets) EXPECT_EQ(set, std::vector<std::size_t>{0});
}

TEST(BestResponse, MatchesSelectorEnumeration) {
  for (std::uint64_t seed = 10; seed < 30; ++seed) {
    const GameModel m = random_game(seed, 3, 2, 2);
    const Player k = seed % 2 ? Player::second : Player::first;
    std::mt19937_64 rng(seed);
    const auto opp = instances::random_mixed(rng, 3, 2);
    const auto [t, view] = truncate(m, 3);
    const auto ref = oracle::enumerate_best_response(m, 3, k, opp, 0);
    for (BestResponseMethod method : {BestResponseMethod::policy_iteration, BestResponseMethod::power}) {
      EigenOptions o;
      o.best_response = method;
      const auto fam = assemble_controlled(view, StationaryStrategy(m, other(k), opp), k);
      const auto br = best_response_eigenpair(fam, 0, o);
      EXPECT_NEAR(br.eigen.rho, ref.rho, 1e-9);
      EXPECT_EQ(br.selector, ref.selector);
      const auto q = min_action_quotients(fam, br.eigen.psi);
      for (double x : q) EXPECT_NEAR(x, br.eigen.rho, 1e-8);
    }
  }
}

TEST(BestResponse, ShopTruncation) {
  const GameModel m = shop_model(ShopParams{});
  const auto [t, view] = truncate(m, 30);
  const auto [ep, strat] = best_response_eigenpair(view, uniform_strategy(m, Player::second, 30), Player::first);
  EXPECT_LE(ep.bracket_width(), 1e-10);
  // No fixed selector does better than the best response.
  const auto fam = assemble_controlled(view, uniform_strategy(m, Player::second, 30), Player::first);
  for (std::size_t a = 0; a < 5; ++a) {
    const std::vector<std::size_t> sel(30, a);
    EXPECT_GE(principal_eigenpair(fam.select(sel), 0).rho, ep.rho - 1e-10);
  }
}

TEST(Ladder, FiniteFullRungsAgree) {
  const GameModel m = random_game(40, 5, 2, 2);
  LadderRequest req{Player::first, uniform_strategy(m, Player::second), std::nullopt, {5}};
  const auto r1 = truncation_ladder(m, req);
  req.sizes = {3, 5};
  const auto r2 = truncation_ladder(m, req);
  ASSERT_TRUE(r1.rungs[0].eigen && r2.rungs[1].eigen);
  EXPECT_DOUBLE_EQ(r1.rungs[0].eigen->rho, r2.rungs[1].eigen->rho);
  EXPECT_FALSE(r2.fixed_strategies);
}

TEST(Ladder, ShopFixedUniformIsMonotone) {
  const GameModel m = shop_model(ShopParams{});
  LadderRequest req{Player::first, uniform_strategy(m, Player::second), uniform_strategy(m, Player::first),
                    {10, 20, 40, 80}};
  const LadderResult r = truncation_ladder(m, req);
  EXPECT_TRUE(r.fixed_strategies);
  EXPECT_TRUE(r.monotone);
  ASSERT_EQ(r.increments.size(), 3u);
  for (double inc : r.increments) EXPECT_GE(inc, -1e-10);
  EXPECT_LT(r.increments[2], r.increments[1]);
  EXPECT_LT(r.increments[1], r.increments[0]);
  ASSERT_TRUE(r.extrapolated_limit);
  EXPECT_GE(*r.extrapolated_limit, r.rungs.back().eigen->rho - 1e-9);
  EXPECT_EQ(r.extended_psi(81), 0.0);
  EXPECT_DOUBLE_EQ(r.extended_psi(1), 1.0);
}

TEST(Ladder, ZeroCostRhoNonPositive) {
  TabularGame g = to_tabular(random_game(41, 6, 2, 2));
  for (auto& per_player : g.costs)
    for (auto& s : per_player)
      for (auto& r : s)
        for (auto& c : r) c = 0.0;
  const GameModel m = make_tabular_model(std::move(g));
  LadderRequest req{Player::first, uniform_strategy(m, Player::second), uniform_strategy(m, Player::first),
                    {2, 4, 6}};
  const LadderResult r = truncation_ladder(m, req);
  for (const auto& rung : r.rungs) EXPECT_LE(rung.eigen->rho, 1e-12);
  EXPECT_NEAR(r.rungs.back().eigen->rho, 0.0, 1e-10);
  EXPECT_TRUE(r.monotone);
}

TEST(Ladder, RejectsBadRequests) {
  const GameModel m = random_game(42, 4, 2, 2);
  LadderRequest req{Player::first, uniform_strategy(m, Player::second), std::nullopt, {3, 3}};
  EXPECT_THROW(truncation_ladder(m, req), ModelError);
  req.sizes = {};
  EXPECT_THROW(truncation_ladder(m, req), ModelError);
  LadderRequest wrong{Player::first, uniform_strategy(m, Player::first), std::nullopt, {2}};
  EXPECT_THROW(truncation_ladder(m, wrong), ModelError);
}

TEST(Ladder, OversizedRungRecordsError) {
  const GameModel m = random_game(43, 4, 2, 2);
  LadderRequest req{Player::first, uniform_strategy(m, Player::second), std::nullopt, {2, 9}};
  const LadderResult r = truncation_ladder(m, req);
  EXPECT_TRUE(r.rungs[0].eigen.has_value());
  EXPECT_FALSE(r.rungs[1].eigen.has_value());
  EXPECT_FALSE(r.rungs[1].error.empty());
}
