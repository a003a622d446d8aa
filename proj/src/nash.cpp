#include "rsgame/nash.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <set>

#include "rsgame/generator.hpp"

namespace rsgame {

namespace {

constexpr std::array<Player, 2> kPlayers{Player::first, Player::second};

// Everything certify and converse_check need for one player.
struct PlayerAssessment {
  EigenPair at_pair;
  BestResponseEigen best;
  std::vector<double> defects;
};

PlayerAssessment assess_player(const TruncatedView& view, const StrategyPair& pair, Player k,
                               const EigenOptions& opts) {
  const ControlledFamily family = assemble_controlled(view, pair.of(other(k)), k);
  const std::size_t anchor = view.truncation().anchor_index();
  PlayerAssessment out{principal_eigenpair(family.mix(pair.of(k)), anchor, opts),
                       best_response_eigenpair(family, anchor, opts),
                       {}};
  const auto& psi = out.best.eigen.psi;
  const StationaryStrategy& own = pair.of(k);
  out.defects.resize(family.size());
  for (std::size_t i = 0; i < family.size(); ++i) {
    const auto acts = family.actions(i);
    const auto v = own.at(static_cast<State>(i) + 1);
    double best = std::numeric_limits<double>::infinity();
    double mixed = 0.0;
    for (std::size_t a = 0; a < acts.size(); ++a) {
      const double value = acts[a].apply(i, psi);
      best = std::min(best, value);
      mixed += v[a] * value;
    }
    out.defects[i] = (mixed - best) / psi[i];
  }
  return out;
}

std::array<PlayerAssessment, 2> assess(const TruncatedView& view, const StrategyPair& pair,
                                       const EigenOptions& opts, std::size_t threads) {
  if (threads > 1) {
    auto second = std::async(std::launch::async,
                             [&] { return assess_player(view, pair, Player::second, opts); });
    PlayerAssessment first = assess_player(view, pair, Player::first, opts);
    return {std::move(first), second.get()};
  }
  return {assess_player(view, pair, Player::first, opts),
          assess_player(view, pair, Player::second, opts)};
}

Certification certification_of(const std::array<PlayerAssessment, 2>& a, double epsilon) {
  Certification c;
  c.epsilon = epsilon;
  for (std::size_t k = 0; k < 2; ++k) {
    c.rho[k] = a[k].at_pair.rho;
    c.best_rho[k] = a[k].best.eigen.rho;
    c.gaps[k] = c.rho[k] - c.best_rho[k];
    c.residual[k] = std::max(a[k].at_pair.residual, a[k].best.eigen.residual);
  }
  c.pass = c.max_gap() <= epsilon;
  return c;
}

ConverseReport converse_of(const std::array<PlayerAssessment, 2>& a, double tol) {
  ConverseReport r;
  r.tol = tol;
  r.pass = true;
  for (std::size_t k = 0; k < 2; ++k) {
    r.defects[k] = a[k].defects;
    r.rho[k] = a[k].best.eigen.rho;
    r.threshold[k] = tol * (1.0 + std::abs(r.rho[k]));
    r.worst[k] = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < r.defects[k].size(); ++i)
      if (r.defects[k][i] > r.worst[k]) {
        r.worst[k] = r.defects[k][i];
        r.worst_state[k] = static_cast<State>(i) + 1;
      }
    if (!(r.worst[k] <= r.threshold[k])) r.pass = false;
  }
  return r;
}

StationaryStrategy damped(const GameModel& model, const StationaryStrategy& old,
                          std::span<const std::size_t> selector, double lambda) {
  std::vector<std::vector<double>> table(selector.size());
  for (std::size_t i = 0; i < selector.size(); ++i) {
    const auto prev = old.at(static_cast<State>(i) + 1);
    table[i].assign(prev.size(), 0.0);
    if (lambda >= 1.0) {
      table[i][selector[i]] = 1.0;
      continue;
    }
    for (std::size_t a = 0; a < prev.size(); ++a) table[i][a] = (1.0 - lambda) * prev[a];
    table[i][selector[i]] += lambda;
  }
  return StationaryStrategy(model, old.player(), std::move(table), old.tail());
}

std::vector<std::int64_t> quantize(const StrategyPair& pair, std::size_t n, double quantum) {
  std::vector<std::int64_t> key;
  for (Player p : kPlayers)
    for (std::size_t i = 0; i < n; ++i) {
      for (double x : pair.of(p).at(static_cast<State>(i) + 1))
        key.push_back(std::llround(x / quantum));
      key.push_back(-1);
    }
  return key;
}

StrategyPair uniform_pair(const TruncatedView& view) {
  const std::size_t n = view.truncation().size();
  return {uniform_strategy(view.model(), Player::first, n),
          uniform_strategy(view.model(), Player::second, n)};
}

// Mixed-radix enumeration of pure selectors.
bool next_selector(std::vector<std::size_t>& sel, const std::vector<std::size_t>& radix) {
  for (std::size_t i = 0; i < sel.size(); ++i) {
    if (++sel[i] < radix[i]) return true;
    sel[i] = 0;
  }
  return false;
}

std::size_t saturating_mul(std::size_t a, std::size_t b) {
  if (a != 0 && b > std::numeric_limits<std::size_t>::max() / a)
    return std::numeric_limits<std::size_t>::max();
  return a * b;
}

struct ExhaustiveResult {
  std::optional<StrategyPair> pair;
  double best_gap = std::numeric_limits<double>::infinity();
  std::size_t profiles = 0;
};

// First pure profile (in enumeration order) that passes both checks; the
// best-response values depend only on the opponent and are cached.
ExhaustiveResult exhaustive_search(const TruncatedView& view, const NashOptions& opts) {
  const GameModel& model = view.model();
  const std::size_t n = view.truncation().size();
  const std::size_t anchor = view.truncation().anchor_index();
  std::array<std::vector<std::size_t>, 2> radix;
  for (Player p : kPlayers)
    for (std::size_t i = 0; i < n; ++i)
      radix[index_of(p)].push_back(model.num_actions(static_cast<State>(i) + 1, p));

  auto all_selectors = [&](Player p) {
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::size_t> sel(n, 0);
    do out.push_back(sel);
    while (next_selector(sel, radix[index_of(p)]));
    return out;
  };
  const auto sel1 = all_selectors(Player::first);
  const auto sel2 = all_selectors(Player::second);
  std::vector<StationaryStrategy> s1, s2;
  for (const auto& s : sel1) s1.push_back(pure_strategy(model, Player::first, s));
  for (const auto& s : sel2) s2.push_back(pure_strategy(model, Player::second, s));

  // best_rho[k][j]: player k's best response value against the other's j-th selector.
  std::array<std::vector<double>, 2> best_rho;
  for (const auto& v2 : s2)
    best_rho[0].push_back(
        best_response_eigenpair(assemble_controlled(view, v2, Player::first), anchor, opts.eigen)
            .eigen.rho);
  for (const auto& v1 : s1)
    best_rho[1].push_back(
        best_response_eigenpair(assemble_controlled(view, v1, Player::second), anchor, opts.eigen)
            .eigen.rho);

  ExhaustiveResult out;
  for (std::size_t j1 = 0; j1 < s1.size(); ++j1)
    for (std::size_t j2 = 0; j2 < s2.size(); ++j2) {
      ++out.profiles;
      const double r1 = principal_eigenpair(assemble(view, s1[j1], s2[j2], Player::first), anchor,
                                            opts.eigen).rho;
      const double r2 = principal_eigenpair(assemble(view, s1[j1], s2[j2], Player::second), anchor,
                                            opts.eigen).rho;
      const double gap = std::max(r1 - best_rho[0][j2], r2 - best_rho[1][j1]);
      if (gap > opts.epsilon || gap >= out.best_gap) continue;
      StrategyPair candidate{s1[j1], s2[j2]};
      const auto a = assess(view, candidate, opts.eigen, 1);
      if (!converse_of(a, opts.converse_factor * opts.eigen.tol).pass) continue;
      out.best_gap = gap;
      out.pair = std::move(candidate);
    }
  return out;
}

}  // namespace

BestResponse best_response(const TruncatedView& view, const StationaryStrategy& opponent,
                           Player player, const EigenOptions& opts) {
  const ControlledFamily family = assemble_controlled(view, opponent, player);
  BestResponseEigen br = best_response_eigenpair(family, view.truncation().anchor_index(), opts);
  return {pure_strategy(view.model(), player, br.selector), std::move(br.eigen),
          std::move(br.argmin_sets)};
}

Certification certify(const TruncatedView& view, const StrategyPair& pair, double epsilon,
                      const EigenOptions& opts) {
  return certification_of(assess(view, pair, opts, 1), epsilon);
}

ConverseReport converse_check(const TruncatedView& view, const StrategyPair& pair, double tol,
                              const EigenOptions& opts) {
  return converse_of(assess(view, pair, opts, 1), tol);
}

std::string to_string(NashStatus s) {
  switch (s) {
    case NashStatus::converged: return "converged";
    case NashStatus::cycle_detected: return "cycle_detected";
    case NashStatus::max_iter: return "max_iter";
  }
  return "unknown";
}

std::size_t pure_profile_count(const TruncatedView& view) {
  std::size_t count = 1;
  for (std::size_t i = 0; i < view.truncation().size(); ++i)
    for (Player p : kPlayers)
      count = saturating_mul(count, view.model().num_actions(static_cast<State>(i) + 1, p));
  return count;
}

NashCertificate nash_iterate(const TruncatedView& view, const StrategyPair& init,
                             const NashOptions& opts) {
  if (!(opts.damping > 0.0 && opts.damping <= 1.0))
    throw ModelError("nash_iterate: damping must lie in (0, 1]");
  if (!(opts.epsilon > 0.0)) throw ModelError("nash_iterate: epsilon must be positive");
  if (init.first.player() != Player::first || init.second.player() != Player::second)
    throw ModelError("nash_iterate: initial pair must be (player 1, player 2)");

  const GameModel& model = view.model();
  const std::size_t n = view.truncation().size();
  const double converse_tol = opts.converse_factor * opts.eigen.tol;
  const Player lead = opts.first_mover;
  const Player follow = other(lead);

  NashCertificate cert;
  StrategyPair pair = init;
  double lambda = opts.damping;
  std::string resolution = lambda < 1.0 ? "damped" : "best_response";
  std::set<std::vector<std::int64_t>> seen;
  int mitigation_stage = 0;

  // Best pair seen so far (smallest max gap), reported when nothing converges.
  std::optional<StrategyPair> best_pair;
  std::array<PlayerAssessment, 2> best_assessment;
  double best_gap = std::numeric_limits<double>::infinity();

  auto finish = [&](const StrategyPair& p, const std::array<PlayerAssessment, 2>& a) {
    cert.pair = p;
    cert.certification = certification_of(a, opts.epsilon);
    cert.converse = converse_of(a, converse_tol);
    for (std::size_t k = 0; k < 2; ++k) cert.eigen[k] = a[k].at_pair;
  };

  bool done = false;
  std::size_t round = 0;
  for (; round < opts.max_rounds && !done; ++round) {
    RoundRecord rec;
    rec.round = round;
    rec.damping = lambda;
    std::array<PlayerAssessment, 2> a;
    try {
      a = assess(view, pair, opts.eigen, opts.threads);
    } catch (const SolverError& e) {
      rec.event = std::string("solver failure: ") + e.what();
      cert.trace.push_back(std::move(rec));
      cert.warnings.push_back(cert.trace.back().event);
      break;
    }
    const Certification c = certification_of(a, opts.epsilon);
    rec.rho = c.rho;
    rec.gaps = c.gaps;
    if (c.max_gap() < best_gap) {
      best_gap = c.max_gap();
      best_pair = pair;
      best_assessment = a;
    }
    if (c.pass && converse_of(a, converse_tol).pass) {
      cert.trace.push_back(std::move(rec));
      cert.status = NashStatus::converged;
      finish(pair, a);
      done = true;
      break;
    }

    if (!seen.insert(quantize(pair, n, opts.cycle_quantum)).second) {
      ++cert.cycles;
      if (!opts.mitigate || mitigation_stage >= 2) {
        rec.event = "cycle";
        cert.trace.push_back(std::move(rec));
        cert.status = NashStatus::cycle_detected;
        break;
      }
      seen.clear();
      if (mitigation_stage == 0 && lambda > 0.5) {
        lambda = 0.5;
        resolution = "damped";
        rec.event = "cycle; damping set to 0.5";
      } else {
        pair = uniform_pair(view);
        resolution = "restart_uniform";
        rec.event = "cycle; restarted from uniform strategies";
        mitigation_stage = 2;
        cert.trace.push_back(std::move(rec));
        continue;
      }
      mitigation_stage = 1;
    }
    cert.trace.push_back(std::move(rec));

    // The lead player's best response against the current pair is already known.
    const auto& lead_sel = a[index_of(lead)].best.selector;
    StationaryStrategy new_lead = damped(model, pair.of(lead), lead_sel, lambda);
    std::vector<std::size_t> follow_sel;
    try {
      if (opts.schedule == Schedule::simultaneous) {
        follow_sel = a[index_of(follow)].best.selector;
      } else {
        follow_sel = best_response_eigenpair(assemble_controlled(view, new_lead, follow),
                                             view.truncation().anchor_index(), opts.eigen)
                         .selector;
      }
    } catch (const SolverError& e) {
      cert.warnings.push_back(std::string("solver failure: ") + e.what());
      break;
    }
    StationaryStrategy new_follow = damped(model, pair.of(follow), follow_sel, lambda);
    pair = lead == Player::first ? StrategyPair{std::move(new_lead), std::move(new_follow)}
                                 : StrategyPair{std::move(new_follow), std::move(new_lead)};
  }
  cert.rounds = std::min(round + (done ? 1 : 0), opts.max_rounds);
  if (done) {
    cert.resolution = resolution;
    return cert;
  }
  if (cert.status != NashStatus::cycle_detected) cert.status = NashStatus::max_iter;

  if (opts.mitigate && pure_profile_count(view) <= opts.exhaustive_cap) {
    try {
      ExhaustiveResult ex = exhaustive_search(view, opts);
      if (ex.pair) {
        const auto a = assess(view, *ex.pair, opts.eigen, 1);
        finish(*ex.pair, a);
        cert.warnings.push_back("iteration ended with status " + to_string(cert.status) +
                                "; pure equilibrium found by exhaustive search over " +
                                std::to_string(ex.profiles) + " profiles");
        cert.status = NashStatus::converged;
        cert.resolution = "exhaustive_search";
        return cert;
      }
      cert.warnings.push_back("exhaustive search over " + std::to_string(ex.profiles) +
                              " pure profiles found no equilibrium");
    } catch (const SolverError& e) {
      cert.warnings.push_back(std::string("exhaustive search failed: ") + e.what());
    }
  }
  cert.resolution = "none";
  if (best_pair) finish(*best_pair, best_assessment);
  return cert;
}

namespace {

nlohmann::json strategy_json(const StationaryStrategy& s, std::size_t n) {
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t i = 0; i < n; ++i) out.push_back(s.at(static_cast<State>(i) + 1));
  return out;
}

nlohmann::json eigen_json(const EigenPair& e) {
  return {{"rho", e.rho},
          {"psi", e.psi},
          {"residual", e.residual},
          {"iterations", e.iterations},
          {"bracket", {e.bracket_low, e.bracket_high}},
          {"reducible", e.reducible},
          {"warnings", e.warnings}};
}

}  // namespace

nlohmann::json to_json(const Certification& c) {
  return {{"rho", c.rho},   {"best_response_rho", c.best_rho}, {"gaps", c.gaps},
          {"residual", c.residual}, {"epsilon", c.epsilon},   {"pass", c.pass}};
}

nlohmann::json to_json(const ConverseReport& r) {
  nlohmann::json players = nlohmann::json::array();
  for (std::size_t k = 0; k < 2; ++k)
    players.push_back({{"player", k + 1},
                       {"rho", r.rho[k]},
                       {"worst_defect", r.worst[k]},
                       {"worst_state", r.worst_state[k]},
                       {"threshold", r.threshold[k]},
                       {"defects", r.defects[k]}});
  return {{"tol", r.tol}, {"pass", r.pass}, {"players", players}};
}

nlohmann::json to_json(const NashCertificate& c) {
  nlohmann::json out;
  out["status"] = to_string(c.status);
  out["resolution"] = c.resolution;
  out["epsilon"] = c.certification.epsilon;
  out["rounds"] = c.rounds;
  out["cycles"] = c.cycles;
  if (c.pair) {
    const std::size_t n = c.eigen[0] ? c.eigen[0]->psi.size() : c.pair->first.table_size();
    out["strategies"] = {{"player1", strategy_json(c.pair->first, n)},
                         {"player2", strategy_json(c.pair->second, n)}};
  } else {
    out["strategies"] = nullptr;
  }
  out["rho"] = c.certification.rho;
  out["gaps"] = c.certification.gaps;
  out["certification"] = to_json(c.certification);
  out["converse"] = to_json(c.converse);
  nlohmann::json eig = nlohmann::json::array();
  for (const auto& e : c.eigen) eig.push_back(e ? eigen_json(*e) : nlohmann::json(nullptr));
  out["eigenpairs"] = eig;
  out["trace_length"] = c.trace.size();
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& r : c.trace)
    trace.push_back({{"round", r.round},
                     {"rho", r.rho},
                     {"gaps", r.gaps},
                     {"damping", r.damping},
                     {"event", r.event}});
  out["trace"] = trace;
  out["warnings"] = c.warnings;
  return out;
}

}  // namespace rsgame
