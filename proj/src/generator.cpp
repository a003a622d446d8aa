#include "rsgame/generator.hpp"

#include <algorithm>
#include <cmath>

namespace rsgame {

namespace {

void sort_and_merge(std::vector<Transition>& entries) {
  std::sort(entries.begin(), entries.end(),
            [](const Transition& a, const Transition& b) { return a.to < b.to; });
  std::size_t out = 0;
  for (std::size_t e = 0; e < entries.size(); ++e) {
    if (out > 0 && entries[out - 1].to == entries[e].to) {
      entries[out - 1].rate += entries[e].rate;
    } else {
      entries[out++] = entries[e];
    }
  }
  entries.resize(out);
  std::erase_if(entries, [](const Transition& t) { return t.rate == 0.0; });
}

void check_grid(std::span<const double> v, std::size_t grid, State s, Player p) {
  if (v.size() != grid)
    throw ModelError("player " + std::to_string(number_of(p)) + " distribution at state " +
                     std::to_string(s) + " has " + std::to_string(v.size()) +
                     " entries for a " + std::to_string(grid) + "-action grid");
}

}  // namespace

AveragedRow average_row(const GameModel& model, State s, std::span<const double> v1,
                        std::span<const double> v2) {
  check_grid(v1, model.num_actions(s, Player::first), s, Player::first);
  check_grid(v2, model.num_actions(s, Player::second), s, Player::second);
  AveragedRow out;
  for (std::size_t a1 = 0; a1 < v1.size(); ++a1) {
    if (v1[a1] == 0.0) continue;
    for (std::size_t a2 = 0; a2 < v2.size(); ++a2) {
      const double w = v1[a1] * v2[a2];
      if (w == 0.0) continue;
      const PureRow row = model.row(s, a1, a2);
      for (const auto& t : row.off_diagonal) out.off_diagonal.push_back({t.to, w * t.rate});
      out.diagonal += w * row.diagonal;
      out.cost[0] += w * model.cost(Player::first, s, a1, a2);
      out.cost[1] += w * model.cost(Player::second, s, a1, a2);
    }
  }
  sort_and_merge(out.off_diagonal);
  return out;
}

RateMatrix::RateMatrix(std::vector<std::size_t> row_ptr, std::vector<std::size_t> cols,
                       std::vector<double> vals, std::vector<double> diagonal)
    : row_ptr_(std::move(row_ptr)),
      cols_(std::move(cols)),
      vals_(std::move(vals)),
      diagonal_(std::move(diagonal)) {
  if (row_ptr_.size() != diagonal_.size() + 1 || cols_.size() != vals_.size() ||
      row_ptr_.back() != cols_.size())
    throw ModelError("RateMatrix: inconsistent compressed-row layout");
}

double RateMatrix::row_sum(std::size_t i) const {
  double s = diagonal_[i];
  for (double v : vals(i)) s += v;
  return s;
}

bool RateMatrix::conservative(double tol) const {
  for (std::size_t i = 0; i < size(); ++i)
    if (std::abs(row_sum(i)) > tol * std::max(1.0, std::abs(diagonal_[i]))) return false;
  return true;
}

double RateMatrix::max_exit_rate() const {
  double m = 0.0;
  for (double d : diagonal_) m = std::max(m, -d);
  return m;
}

TwistedMatrix::TwistedMatrix(RateMatrix rates, std::vector<double> cost)
    : rates_(std::move(rates)), cost_(std::move(cost)) {
  if (cost_.size() != rates_.size()) throw ModelError("TwistedMatrix: cost vector size mismatch");
  shift_ = rates_.max_exit_rate() + 1.0;
}

void TwistedMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  for (std::size_t i = 0; i < size(); ++i) y[i] = row_apply(i, x);
}

double TwistedMatrix::row_apply(std::size_t i, std::span<const double> x) const {
  double acc = diagonal(i) * x[i];
  const auto c = rates_.cols(i);
  const auto v = rates_.vals(i);
  for (std::size_t e = 0; e < c.size(); ++e) acc += v[e] * x[c[e]];
  return acc;
}

std::vector<double> TwistedMatrix::dense() const {
  const std::size_t n = size();
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    d[i * n + i] = diagonal(i);
    const auto c = rates_.cols(i);
    const auto v = rates_.vals(i);
    for (std::size_t e = 0; e < c.size(); ++e) d[i * n + c[e]] += v[e];
  }
  return d;
}

namespace {

struct Assembled {
  RateMatrix rates;
  std::array<std::vector<double>, 2> cost;
};

Assembled assemble_both(const TruncatedView& view, const StationaryStrategy& v1,
                        const StationaryStrategy& v2) {
  if (v1.player() != Player::first || v2.player() != Player::second)
    throw ModelError("assemble: strategies must be (player 1, player 2)");
  const Truncation& t = view.truncation();
  const std::size_t n = t.size();
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::size_t> cols;
  std::vector<double> vals;
  std::vector<double> diag(n);
  Assembled out;
  out.cost[0].resize(n);
  out.cost[1].resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const State s = t.state(i);
    const auto p1 = v1.at(s);
    const auto p2 = v2.at(s);
    const AveragedRow row = average_row(view.model(), s, p1, p2);
    for (const auto& tr : row.off_diagonal) {
      if (!t.contains(tr.to)) continue;
      cols.push_back(t.index(tr.to));
      vals.push_back(tr.rate);
    }
    row_ptr.push_back(cols.size());
    diag[i] = row.diagonal;
    out.cost[0][i] = row.cost[0];
    out.cost[1][i] = row.cost[1];
  }
  out.rates = RateMatrix(std::move(row_ptr), std::move(cols), std::move(vals), std::move(diag));
  return out;
}

}  // namespace

RateMatrix assemble_rates(const TruncatedView& view, const StationaryStrategy& v1,
                          const StationaryStrategy& v2) {
  return assemble_both(view, v1, v2).rates;
}

TwistedMatrix assemble(const TruncatedView& view, const StationaryStrategy& v1,
                       const StationaryStrategy& v2, Player k) {
  Assembled a = assemble_both(view, v1, v2);
  return TwistedMatrix(std::move(a.rates), std::move(a.cost[index_of(k)]));
}

double ActionRow::apply(std::size_t i, std::span<const double> psi) const {
  double acc = (rate_diagonal + cost) * psi[i];
  for (std::size_t e = 0; e < cols.size(); ++e) acc += vals[e] * psi[cols[e]];
  return acc;
}

double ActionRow::magnitude(std::size_t i, std::span<const double> psi) const {
  double acc = std::abs(rate_diagonal + cost) * psi[i];
  for (std::size_t e = 0; e < cols.size(); ++e) acc += std::abs(vals[e]) * psi[cols[e]];
  return acc;
}

ControlledFamily::ControlledFamily(Player player, std::vector<std::vector<ActionRow>> rows)
    : player_(player), rows_(std::move(rows)) {
  double m = 0.0;
  for (const auto& by_action : rows_) {
    if (by_action.empty()) throw ModelError("ControlledFamily: state without actions");
    for (const auto& r : by_action) m = std::max(m, -r.rate_diagonal);
  }
  shift_ = m + 1.0;
}

TwistedMatrix ControlledFamily::select(std::span<const std::size_t> selector) const {
  if (selector.size() != size()) throw ModelError("selector size does not match the truncation");
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::size_t> cols;
  std::vector<double> vals;
  std::vector<double> diag(size());
  std::vector<double> cost(size());
  for (std::size_t i = 0; i < size(); ++i) {
    const ActionRow& r = rows_[i].at(selector[i]);
    cols.insert(cols.end(), r.cols.begin(), r.cols.end());
    vals.insert(vals.end(), r.vals.begin(), r.vals.end());
    row_ptr.push_back(cols.size());
    diag[i] = r.rate_diagonal;
    cost[i] = r.cost;
  }
  return TwistedMatrix(RateMatrix(std::move(row_ptr), std::move(cols), std::move(vals), std::move(diag)),
                       std::move(cost));
}

TwistedMatrix ControlledFamily::mix(const StationaryStrategy& own) const {
  if (own.player() != player_) throw ModelError("mix: strategy belongs to the other player");
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::size_t> cols;
  std::vector<double> vals;
  std::vector<double> diag(size(), 0.0);
  std::vector<double> cost(size(), 0.0);
  for (std::size_t i = 0; i < size(); ++i) {
    const auto v = own.at(static_cast<State>(i) + 1);
    if (v.size() != rows_[i].size())
      throw ModelError("mix: distribution size does not match the action grid at state " +
                       std::to_string(i + 1));
    std::vector<Transition> merged;
    for (std::size_t a = 0; a < v.size(); ++a) {
      if (v[a] == 0.0) continue;
      const ActionRow& r = rows_[i][a];
      for (std::size_t e = 0; e < r.cols.size(); ++e)
        merged.push_back({static_cast<State>(r.cols[e]), v[a] * r.vals[e]});
      diag[i] += v[a] * r.rate_diagonal;
      cost[i] += v[a] * r.cost;
    }
    sort_and_merge(merged);
    for (const auto& t : merged) {
      cols.push_back(static_cast<std::size_t>(t.to));
      vals.push_back(t.rate);
    }
    row_ptr.push_back(cols.size());
  }
  return TwistedMatrix(RateMatrix(std::move(row_ptr), std::move(cols), std::move(vals), std::move(diag)),
                       std::move(cost));
}

ControlledFamily assemble_controlled(const TruncatedView& view, const StationaryStrategy& opponent,
                                     Player player) {
  if (opponent.player() != other(player))
    throw ModelError("assemble_controlled: opponent strategy belongs to the controlling player");
  const Truncation& t = view.truncation();
  const GameModel& model = view.model();
  std::vector<std::vector<ActionRow>> rows(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const State s = t.state(i);
    const auto opp = opponent.at(s);
    const std::size_t own_grid = model.num_actions(s, player);
    if (own_grid == 0) throw ModelError("empty action grid at state " + std::to_string(s));
    rows[i].resize(own_grid);
    for (std::size_t a = 0; a < own_grid; ++a) {
      std::vector<double> dirac(own_grid, 0.0);
      dirac[a] = 1.0;
      const AveragedRow avg = player == Player::first ? average_row(model, s, dirac, opp)
                                                      : average_row(model, s, opp, dirac);
      ActionRow& r = rows[i][a];
      for (const auto& tr : avg.off_diagonal) {
        if (!t.contains(tr.to)) continue;
        r.cols.push_back(t.index(tr.to));
        r.vals.push_back(tr.rate);
      }
      r.rate_diagonal = avg.diagonal;
      r.cost = avg.cost[index_of(player)];
    }
  }
  return ControlledFamily(player, std::move(rows));
}

}  // namespace rsgame
