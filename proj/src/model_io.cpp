#include "rsgame/model_io.hpp"

#include <fstream>
#include <map>
#include <set>
#include <tuple>

#include "rsgame/shop.hpp"

namespace rsgame {

namespace {

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known,
                    const std::string& where) {
  for (const auto& [key, _] : j.items())
    if (!known.contains(key)) throw ModelError(where + ": unknown field '" + key + "'");
}

std::vector<std::vector<double>> parse_grid(const nlohmann::json& g, std::size_t n,
                                            const std::string& who) {
  std::vector<std::vector<double>> grids(n);
  if (g.is_number_integer()) {
    const auto m = g.get<std::int64_t>();
    if (m <= 0) throw ModelError(who + ": action count must be positive");
    std::vector<double> labels(static_cast<std::size_t>(m));
    for (std::size_t a = 0; a < labels.size(); ++a) labels[a] = static_cast<double>(a);
    std::fill(grids.begin(), grids.end(), labels);
    return grids;
  }
  if (!g.is_array() || g.size() != n)
    throw ModelError(who + ": expected an action count or one grid per state");
  for (std::size_t i = 0; i < n; ++i) grids[i] = g[i].get<std::vector<double>>();
  return grids;
}

GameModel finite_from_json(const nlohmann::json& j) {
  reject_unknown(j, {"states", "anchor", "actions", "rates", "costs"}, "model");
  TabularGame g;
  g.num_states = j.at("states").get<std::size_t>();
  if (g.num_states == 0) throw ModelError("model: states must be positive");
  g.anchor = j.value("anchor", State{1});
  const auto& actions = j.at("actions");
  reject_unknown(actions, {"player1", "player2"}, "model.actions");
  g.actions[0] = parse_grid(actions.at("player1"), g.num_states, "model.actions.player1");
  g.actions[1] = parse_grid(actions.at("player2"), g.num_states, "model.actions.player2");

  const std::size_t n = g.num_states;
  g.rows.resize(n);
  for (int k = 0; k < 2; ++k) g.costs[k].resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t m1 = g.actions[0][i].size();
    const std::size_t m2 = g.actions[1][i].size();
    g.rows[i].assign(m1, std::vector<PureRow>(m2));
    for (int k = 0; k < 2; ++k) g.costs[k][i].assign(m1, std::vector<double>(m2, 0.0));
  }

  auto locate = [&](State s, std::int64_t a1, std::int64_t a2, const std::string& what) {
    if (s < 1 || s > static_cast<State>(n))
      throw ModelError(what + ": state " + std::to_string(s) + " outside 1.." + std::to_string(n));
    const auto i = static_cast<std::size_t>(s - 1);
    if (a1 < 0 || static_cast<std::size_t>(a1) >= g.actions[0][i].size() || a2 < 0 ||
        static_cast<std::size_t>(a2) >= g.actions[1][i].size())
      throw ModelError(what + ": action index outside the grid at state " + std::to_string(s));
    return std::tuple{i, static_cast<std::size_t>(a1), static_cast<std::size_t>(a2)};
  };

  std::set<std::tuple<State, std::int64_t, std::int64_t, State>> seen_rates;
  std::set<std::tuple<State, std::int64_t, std::int64_t>> has_diagonal;
  for (const auto& e : j.value("rates", nlohmann::json::array())) {
    if (!e.is_array() || e.size() != 5) throw ModelError("model.rates: entries are [i, a1, a2, j, value]");
    const auto s = e[0].get<State>();
    const auto a1 = e[1].get<std::int64_t>();
    const auto a2 = e[2].get<std::int64_t>();
    const auto t = e[3].get<State>();
    const auto v = e[4].get<double>();
    auto [i, x1, x2] = locate(s, a1, a2, "model.rates");
    if (!seen_rates.insert({s, a1, a2, t}).second)
      throw ModelError("model.rates: duplicate entry for " + std::to_string(s) + " -> " +
                       std::to_string(t));
    if (t == s) {
      g.rows[i][x1][x2].diagonal = v;
      has_diagonal.insert({s, a1, a2});
    } else {
      g.rows[i][x1][x2].off_diagonal.push_back({t, v});
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a1 = 0; a1 < g.rows[i].size(); ++a1)
      for (std::size_t a2 = 0; a2 < g.rows[i][a1].size(); ++a2)
        if (!has_diagonal.contains({static_cast<State>(i) + 1, static_cast<std::int64_t>(a1),
                                    static_cast<std::int64_t>(a2)}))
          g.rows[i][a1][a2].diagonal = -g.rows[i][a1][a2].off_diagonal_sum();

  std::set<std::tuple<int, State, std::int64_t, std::int64_t>> seen_costs;
  for (const auto& e : j.value("costs", nlohmann::json::array())) {
    if (!e.is_array() || e.size() != 5) throw ModelError("model.costs: entries are [k, i, a1, a2, value]");
    const auto k = e[0].get<int>();
    if (k != 1 && k != 2) throw ModelError("model.costs: player must be 1 or 2");
    const auto s = e[1].get<State>();
    const auto a1 = e[2].get<std::int64_t>();
    const auto a2 = e[3].get<std::int64_t>();
    auto [i, x1, x2] = locate(s, a1, a2, "model.costs");
    if (!seen_costs.insert({k, s, a1, a2}).second)
      throw ModelError("model.costs: duplicate entry at state " + std::to_string(s));
    g.costs[k - 1][i][x1][x2] = e[4].get<double>();
  }
  return make_tabular_model(std::move(g));
}

}  // namespace

GameModel model_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ModelError("model file must hold a JSON object");
  try {
    if (j.contains("lazy")) {
      reject_unknown(j, {"lazy", "anchor", "shop_params"}, "model");
      if (j.at("lazy") != "shop") throw ModelError("model: only the 'shop' lazy model is built in");
      if (j.value("anchor", State{1}) != 1) throw ModelError("model: the shop anchor is state 1");
      return shop_model(shop_params_from_json(j.value("shop_params", nlohmann::json::object())));
    }
    return finite_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("model: ") + e.what());
  }
}

GameModel load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ModelError("model file " + path + ": " + e.what());
  }
  return model_from_json(j);
}

nlohmann::json model_to_json(const GameModel& model) {
  if (auto j = model.definition().to_json()) return *j;
  if (model.is_finite()) {
    // Materialize through the tabular form.
    return *make_tabular_model(to_tabular(model)).definition().to_json();
  }
  throw ModelError("model has no file representation");
}

}  // namespace rsgame
