#include "rsgame/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <utility>

namespace rsgame {

double PureRow::off_diagonal_sum() const {
  double s = 0.0;
  for (const auto& t : off_diagonal) s += t.rate;
  return s;
}

GameModel::GameModel(std::shared_ptr<const ModelDefinition> definition)
    : def_(std::move(definition)) {
  if (!def_) throw ModelError("GameModel: null definition");
  finite_size_ = def_->finite_size();
  anchor_ = def_->anchor();
  if (finite_size_ && *finite_size_ == 0) throw ModelError("GameModel: empty state space");
  if (!contains(anchor_)) throw ModelError("GameModel: anchor state outside the state space");
}

bool GameModel::contains(State s) const {
  if (s < 1) return false;
  return !finite_size_ || s <= static_cast<State>(*finite_size_);
}

namespace {

class TabularDefinition final : public ModelDefinition {
 public:
  explicit TabularDefinition(TabularGame game) : game_(std::move(game)) {}

  std::optional<std::size_t> finite_size() const override { return game_.num_states; }
  State anchor() const override { return game_.anchor; }

  std::vector<double> actions(State s, Player p) const override {
    return game_.actions[index_of(p)].at(slot(s));
  }

  PureRow row(State s, std::size_t a1, std::size_t a2) const override {
    return game_.rows.at(slot(s)).at(a1).at(a2);
  }

  double cost(Player p, State s, std::size_t a1, std::size_t a2) const override {
    return game_.costs[index_of(p)].at(slot(s)).at(a1).at(a2);
  }

  std::optional<nlohmann::json> to_json() const override;

 private:
  std::size_t slot(State s) const {
    if (s < 1 || s > static_cast<State>(game_.num_states))
      throw ModelError("state " + std::to_string(s) + " outside finite model");
    return static_cast<std::size_t>(s - 1);
  }

  TabularGame game_;
};

std::optional<nlohmann::json> TabularDefinition::to_json() const {
  nlohmann::json j;
  j["states"] = game_.num_states;
  j["anchor"] = game_.anchor;
  j["actions"] = {{"player1", game_.actions[0]}, {"player2", game_.actions[1]}};
  nlohmann::json rates = nlohmann::json::array();
  nlohmann::json costs = nlohmann::json::array();
  for (std::size_t i = 0; i < game_.num_states; ++i) {
    const State s = static_cast<State>(i) + 1;
    for (std::size_t a1 = 0; a1 < game_.rows[i].size(); ++a1) {
      for (std::size_t a2 = 0; a2 < game_.rows[i][a1].size(); ++a2) {
        const PureRow& r = game_.rows[i][a1][a2];
        for (const auto& t : r.off_diagonal) rates.push_back({s, a1, a2, t.to, t.rate});
        rates.push_back({s, a1, a2, s, r.diagonal});
        for (int k = 0; k < 2; ++k) costs.push_back({k + 1, s, a1, a2, game_.costs[k][i][a1][a2]});
      }
    }
  }
  j["rates"] = std::move(rates);
  j["costs"] = std::move(costs);
  return j;
}

}  // namespace

GameModel make_tabular_model(TabularGame game) {
  const std::size_t n = game.num_states;
  if (n == 0) throw ModelError("tabular model: no states");
  if (game.anchor < 1 || game.anchor > static_cast<State>(n))
    throw ModelError("tabular model: anchor outside 1.." + std::to_string(n));
  for (int k = 0; k < 2; ++k) {
    if (game.actions[k].size() != n)
      throw ModelError("tabular model: action grids for player " + std::to_string(k + 1) +
                       " do not cover all states");
    if (game.costs[k].size() != n)
      throw ModelError("tabular model: cost table for player " + std::to_string(k + 1) +
                       " does not cover all states");
  }
  if (game.rows.size() != n) throw ModelError("tabular model: rate table does not cover all states");
  for (std::size_t i = 0; i < n; ++i) {
    const State s = static_cast<State>(i) + 1;
    const std::size_t m1 = game.actions[0][i].size();
    const std::size_t m2 = game.actions[1][i].size();
    auto shape_ok = [&](const auto& table) {
      if (table.size() != m1) return false;
      return std::all_of(table.begin(), table.end(), [&](const auto& r) { return r.size() == m2; });
    };
    if (!shape_ok(game.rows[i]) || !shape_ok(game.costs[0][i]) || !shape_ok(game.costs[1][i]))
      throw ModelError("tabular model: table shape mismatch at state " + std::to_string(s));
    for (auto& by_a1 : game.rows[i]) {
      for (auto& row : by_a1) {
        std::sort(row.off_diagonal.begin(), row.off_diagonal.end(),
                  [](const Transition& x, const Transition& y) { return x.to < y.to; });
        for (std::size_t e = 0; e < row.off_diagonal.size(); ++e) {
          const State t = row.off_diagonal[e].to;
          if (t < 1 || t > static_cast<State>(n))
            throw ModelError("tabular model: transition from " + std::to_string(s) + " to " +
                             std::to_string(t) + " leaves the state space");
          if (t == s)
            throw ModelError("tabular model: off-diagonal entry on the diagonal at state " +
                             std::to_string(s));
          if (e > 0 && row.off_diagonal[e - 1].to == t)
            throw ModelError("tabular model: duplicate transition " + std::to_string(s) + " -> " +
                             std::to_string(t));
        }
      }
    }
  }
  return GameModel(std::make_shared<TabularDefinition>(std::move(game)));
}

TabularGame to_tabular(const GameModel& model) {
  if (!model.is_finite()) throw ModelError("to_tabular: model is not finite");
  TabularGame g;
  g.num_states = *model.finite_size();
  g.anchor = model.anchor();
  for (int k = 0; k < 2; ++k) {
    g.actions[k].resize(g.num_states);
    g.costs[k].resize(g.num_states);
  }
  g.rows.resize(g.num_states);
  for (std::size_t i = 0; i < g.num_states; ++i) {
    const State s = static_cast<State>(i) + 1;
    g.actions[0][i] = model.actions(s, Player::first);
    g.actions[1][i] = model.actions(s, Player::second);
    const std::size_t m1 = g.actions[0][i].size();
    const std::size_t m2 = g.actions[1][i].size();
    g.rows[i].assign(m1, std::vector<PureRow>(m2));
    for (int k = 0; k < 2; ++k) g.costs[k][i].assign(m1, std::vector<double>(m2));
    for (std::size_t a1 = 0; a1 < m1; ++a1) {
      for (std::size_t a2 = 0; a2 < m2; ++a2) {
        g.rows[i][a1][a2] = model.row(s, a1, a2);
        g.costs[0][i][a1][a2] = model.cost(Player::first, s, a1, a2);
        g.costs[1][i][a1][a2] = model.cost(Player::second, s, a1, a2);
      }
    }
  }
  return g;
}

ValidationReport validate_model(const GameModel& model, State lazy_prefix) {
  ValidationReport report;
  const State last = model.is_finite() ? static_cast<State>(*model.finite_size()) : lazy_prefix;
  report.checked_through = last;
  for (State s = 1; s <= last; ++s) {
    const std::size_t m1 = model.num_actions(s, Player::first);
    const std::size_t m2 = model.num_actions(s, Player::second);
    if (m1 == 0 || m2 == 0) {
      ValidationIssue issue{.kind = "empty_grid", .state = s};
      issue.player = m1 == 0 ? Player::first : Player::second;
      report.issues.push_back(issue);
      continue;
    }
    for (std::size_t a1 = 0; a1 < m1; ++a1) {
      for (std::size_t a2 = 0; a2 < m2; ++a2) {
        const PureRow row = model.row(s, a1, a2);
        bool finite = std::isfinite(row.diagonal);
        for (const auto& t : row.off_diagonal) {
          if (!std::isfinite(t.rate)) {
            finite = false;
            report.issues.push_back(
                {.kind = "nonfinite_rate", .state = s, .a1 = a1, .a2 = a2, .target = t.to});
          } else if (t.rate < 0.0) {
            report.issues.push_back({.kind = "negative_rate",
                                     .state = s,
                                     .a1 = a1,
                                     .a2 = a2,
                                     .target = t.to,
                                     .magnitude = -t.rate});
          }
        }
        if (!std::isfinite(row.diagonal))
          report.issues.push_back(
              {.kind = "nonfinite_rate", .state = s, .a1 = a1, .a2 = a2, .target = s});
        if (finite) {
          const double sum = row.off_diagonal_sum() + row.diagonal;
          if (std::abs(sum) > kRowSumTolerance * std::max(1.0, std::abs(row.diagonal)))
            report.issues.push_back(
                {.kind = "row_sum", .state = s, .a1 = a1, .a2 = a2, .magnitude = sum});
        }
        for (Player p : {Player::first, Player::second}) {
          const double c = model.cost(p, s, a1, a2);
          if (!std::isfinite(c)) {
            ValidationIssue issue{.kind = "nonfinite_cost", .state = s, .a1 = a1, .a2 = a2};
            issue.player = p;
            report.issues.push_back(issue);
          } else if (c < 0.0) {
            ValidationIssue issue{
                .kind = "negative_cost", .state = s, .a1 = a1, .a2 = a2, .magnitude = -c};
            issue.player = p;
            report.issues.push_back(issue);
          }
        }
      }
    }
  }
  return report;
}

Truncation::Truncation(const GameModel& model, std::size_t n) : n_(n) {
  if (n == 0) throw ModelError("truncation size must be at least 1");
  if (model.finite_size() && n > *model.finite_size())
    throw ModelError("truncation size " + std::to_string(n) + " exceeds the " +
                     std::to_string(*model.finite_size()) + "-state model");
  if (!contains(model.anchor()))
    throw ModelError("anchor state " + std::to_string(model.anchor()) +
                     " not inside the first " + std::to_string(n) + " states");
  anchor_index_ = index(model.anchor());
}

TruncatedView::TruncatedView(GameModel model, Truncation truncation)
    : model_(std::move(model)), truncation_(truncation) {}

PureRow TruncatedView::row(State s, std::size_t a1, std::size_t a2) const {
  PureRow full = model_.row(s, a1, a2);
  std::erase_if(full.off_diagonal,
                [this](const Transition& t) { return !truncation_.contains(t.to); });
  return full;
}

double TruncatedView::killing_rate(State s, std::size_t a1, std::size_t a2) const {
  const PureRow full = model_.row(s, a1, a2);
  double k = 0.0;
  for (const auto& t : full.off_diagonal)
    if (!truncation_.contains(t.to)) k += t.rate;
  return k;
}

std::pair<Truncation, TruncatedView> truncate(const GameModel& model, std::size_t n) {
  Truncation t(model, n);
  return {t, TruncatedView(model, t)};
}

namespace {

void check_distribution(const std::vector<double>& v, std::size_t grid, State s, Player p) {
  const std::string where =
      "player " + std::to_string(number_of(p)) + " strategy at state " + std::to_string(s);
  if (v.size() != grid)
    throw ModelError(where + ": " + std::to_string(v.size()) + " probabilities for a " +
                     std::to_string(grid) + "-action grid");
  double sum = 0.0;
  for (double x : v) {
    if (!std::isfinite(x) || x < 0.0) throw ModelError(where + ": negative or non-finite mass");
    sum += x;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance)
    throw ModelError(where + ": probabilities sum to " + std::to_string(sum));
}

std::vector<double> tail_distribution(TailRule rule, std::size_t grid) {
  std::vector<double> v(grid, 0.0);
  switch (rule) {
    case TailRule::uniform:
      std::fill(v.begin(), v.end(), 1.0 / static_cast<double>(grid));
      break;
    case TailRule::first_action:
      v.front() = 1.0;
      break;
    case TailRule::last_action:
      v.back() = 1.0;
      break;
  }
  return v;
}

std::size_t default_extent(const GameModel& model, std::optional<std::size_t> extent) {
  if (extent) return *extent;
  if (model.finite_size()) return *model.finite_size();
  throw ModelError("strategy over a lazy model needs an explicit extent");
}

}  // namespace

StationaryStrategy::StationaryStrategy(GameModel model, Player player,
                                       std::vector<std::vector<double>> table, TailRule tail)
    : model_(std::move(model)), player_(player), table_(std::move(table)), tail_(tail) {
  if (model_.finite_size() && table_.size() > *model_.finite_size())
    throw ModelError("strategy table longer than the state space");
  for (std::size_t i = 0; i < table_.size(); ++i) {
    const State s = static_cast<State>(i) + 1;
    check_distribution(table_[i], model_.num_actions(s, player_), s, player_);
  }
}

std::vector<double> StationaryStrategy::at(State s) const {
  if (s >= 1 && s <= static_cast<State>(table_.size())) return table_[static_cast<std::size_t>(s - 1)];
  if (!model_.contains(s))
    throw ModelError("strategy queried at state " + std::to_string(s) + " outside the model");
  const std::size_t grid = model_.num_actions(s, player_);
  if (grid == 0) throw ModelError("empty action grid at state " + std::to_string(s));
  return tail_distribution(tail_, grid);
}

StationaryStrategy pure_strategy(const GameModel& model, Player player,
                                 const std::function<std::size_t(State)>& choice,
                                 std::optional<std::size_t> extent, TailRule tail) {
  const std::size_t n = default_extent(model, extent);
  std::vector<std::vector<double>> table(n);
  for (std::size_t i = 0; i < n; ++i) {
    const State s = static_cast<State>(i) + 1;
    const std::size_t grid = model.num_actions(s, player);
    const std::size_t a = choice(s);
    if (a >= grid)
      throw ModelError("pure strategy for player " + std::to_string(number_of(player)) +
                       ": action " + std::to_string(a) + " outside the " + std::to_string(grid) +
                       "-action grid at state " + std::to_string(s));
    table[i].assign(grid, 0.0);
    table[i][a] = 1.0;
  }
  return StationaryStrategy(model, player, std::move(table), tail);
}

StationaryStrategy pure_strategy(const GameModel& model, Player player,
                                 std::span<const std::size_t> selector, TailRule tail) {
  return pure_strategy(
      model, player, [&](State s) { return selector[static_cast<std::size_t>(s - 1)]; },
      selector.size(), tail);
}

StationaryStrategy uniform_strategy(const GameModel& model, Player player,
                                    std::optional<std::size_t> extent) {
  if (!extent) return StationaryStrategy(model, player, {}, TailRule::uniform);
  std::vector<std::vector<double>> table(*extent);
  for (std::size_t i = 0; i < *extent; ++i) {
    const std::size_t grid = model.num_actions(static_cast<State>(i) + 1, player);
    if (grid == 0) throw ModelError("empty action grid at state " + std::to_string(i + 1));
    table[i].assign(grid, 1.0 / static_cast<double>(grid));
  }
  return StationaryStrategy(model, player, std::move(table), TailRule::uniform);
}

}  // namespace rsgame
