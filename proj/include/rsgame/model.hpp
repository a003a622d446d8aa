#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace rsgame {

/// States are the natural numbers 1, 2, ...; canonical order is numeric order.
using State = std::int64_t;

enum class Player : int { first = 0, second = 1 };

constexpr std::size_t index_of(Player p) { return static_cast<std::size_t>(p); }
constexpr Player other(Player p) { return p == Player::first ? Player::second : Player::first; }
constexpr int number_of(Player p) { return static_cast<int>(p) + 1; }

/// Raised for malformed models, strategies and truncations.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Transition {
  State to;
  double rate;
};

/// One row of the rate kernel at a pure action pair. Off-diagonal entries are
/// sorted by target state and never contain the row's own state.
struct PureRow {
  std::vector<Transition> off_diagonal;
  double diagonal = 0.0;

  double off_diagonal_sum() const;
};

/// Source of a two-player game. Implementations must be pure: the same
/// arguments always produce the same row, grid and cost.
class ModelDefinition {
 public:
  virtual ~ModelDefinition() = default;

  /// Number of states for finite models, empty for countable lazily generated ones.
  virtual std::optional<std::size_t> finite_size() const = 0;
  virtual State anchor() const = 0;
  /// Action labels of `player` at `state`; indices into this grid identify actions.
  virtual std::vector<double> actions(State state, Player player) const = 0;
  virtual PureRow row(State state, std::size_t a1, std::size_t a2) const = 0;
  virtual double cost(Player player, State state, std::size_t a1, std::size_t a2) const = 0;
  /// Model file representation; empty when the model has none.
  virtual std::optional<nlohmann::json> to_json() const { return std::nullopt; }
};

/// Immutable, cheaply copyable handle to a game definition.
class GameModel {
 public:
  explicit GameModel(std::shared_ptr<const ModelDefinition> definition);

  bool is_finite() const { return finite_size_.has_value(); }
  std::optional<std::size_t> finite_size() const { return finite_size_; }
  State anchor() const { return anchor_; }
  bool contains(State s) const;

  std::vector<double> actions(State s, Player p) const { return def_->actions(s, p); }
  std::size_t num_actions(State s, Player p) const { return def_->actions(s, p).size(); }
  PureRow row(State s, std::size_t a1, std::size_t a2) const { return def_->row(s, a1, a2); }
  double cost(Player p, State s, std::size_t a1, std::size_t a2) const {
    return def_->cost(p, s, a1, a2);
  }
  const ModelDefinition& definition() const { return *def_; }

 private:
  std::shared_ptr<const ModelDefinition> def_;
  std::optional<std::size_t> finite_size_;
  State anchor_;
};

/// Explicit finite game: every row and cost is stored.
struct TabularGame {
  std::size_t num_states = 0;
  State anchor = 1;
  /// actions[player][state - 1] is that state's action grid.
  std::array<std::vector<std::vector<double>>, 2> actions;
  /// rows[state - 1][a1][a2]
  std::vector<std::vector<std::vector<PureRow>>> rows;
  /// costs[player][state - 1][a1][a2]
  std::array<std::vector<std::vector<std::vector<double>>>, 2> costs;
};

/// Checks shapes only (grid sizes, row targets inside the state space); rate and
/// cost invariants are the business of validate_model.
GameModel make_tabular_model(TabularGame game);

/// Materializes every row and cost of a finite model.
TabularGame to_tabular(const GameModel& model);

struct ValidationIssue {
  std::string kind;  // empty_grid, negative_rate, nonfinite_rate, row_sum, negative_cost, nonfinite_cost
  State state = 0;
  std::size_t a1 = 0;
  std::size_t a2 = 0;
  std::optional<State> target;
  std::optional<Player> player;
  double magnitude = 0.0;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  State checked_through = 0;
  bool ok() const { return issues.empty(); }
};

/// Conservative-row tolerance; scaled by max(1, |diagonal|).
inline constexpr double kRowSumTolerance = 1e-12;

/// Checks all states of a finite model, or states 1..lazy_prefix of a lazy one.
ValidationReport validate_model(const GameModel& model, State lazy_prefix = 100);

/// D_n = {1..n}. Nested in n and always contains the anchor.
class Truncation {
 public:
  Truncation(const GameModel& model, std::size_t n);

  std::size_t size() const { return n_; }
  bool contains(State s) const { return s >= 1 && s <= static_cast<State>(n_); }
  std::size_t index(State s) const { return static_cast<std::size_t>(s - 1); }
  State state(std::size_t idx) const { return static_cast<State>(idx) + 1; }
  std::size_t anchor_index() const { return anchor_index_; }

 private:
  std::size_t n_;
  std::size_t anchor_index_;
};

/// Rows of the model seen through D_n: mass leaving D_n is dropped (killing)
/// while the diagonal keeps its full-space value.
class TruncatedView {
 public:
  TruncatedView(GameModel model, Truncation truncation);

  const GameModel& model() const { return model_; }
  const Truncation& truncation() const { return truncation_; }
  PureRow row(State s, std::size_t a1, std::size_t a2) const;
  /// Rate of leaving D_n from `s` under the pure pair.
  double killing_rate(State s, std::size_t a1, std::size_t a2) const;

 private:
  GameModel model_;
  Truncation truncation_;
};

std::pair<Truncation, TruncatedView> truncate(const GameModel& model, std::size_t n);

/// How a table-backed strategy behaves on states past its table.
enum class TailRule { uniform, first_action, last_action };

/// Per-state probability vectors over one player's action grid.
class StationaryStrategy {
 public:
  /// `table[s - 1]` is the distribution at state s. Validates every entry.
  StationaryStrategy(GameModel model, Player player, std::vector<std::vector<double>> table,
                     TailRule tail = TailRule::uniform);

  Player player() const { return player_; }
  const GameModel& model() const { return model_; }
  std::size_t table_size() const { return table_.size(); }
  TailRule tail() const { return tail_; }

  /// Distribution at `s`; states past the table follow the tail rule.
  std::vector<double> at(State s) const;
  const std::vector<std::vector<double>>& table() const { return table_; }

 private:
  GameModel model_;
  Player player_;
  std::vector<std::vector<double>> table_;
  TailRule tail_;
};

inline constexpr double kSimplexTolerance = 1e-12;

/// Dirac strategy at `choice(s)` for s = 1..extent (extent defaults to the
/// model size for finite models; required for lazy ones).
StationaryStrategy pure_strategy(const GameModel& model, Player player,
                                 const std::function<std::size_t(State)>& choice,
                                 std::optional<std::size_t> extent = std::nullopt,
                                 TailRule tail = TailRule::uniform);

/// Pure strategy from a selector vector: selector[s - 1] is the action at s.
StationaryStrategy pure_strategy(const GameModel& model, Player player,
                                 std::span<const std::size_t> selector,
                                 TailRule tail = TailRule::uniform);

StationaryStrategy uniform_strategy(const GameModel& model, Player player,
                                    std::optional<std::size_t> extent = std::nullopt);

struct StrategyPair {
  StationaryStrategy first;
  StationaryStrategy second;

  const StationaryStrategy& of(Player p) const { return p == Player::first ? first : second; }
};

}  // namespace rsgame
