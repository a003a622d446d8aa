#include "rsgame/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "rsgame/eigensolver.hpp"
#include "rsgame/generator.hpp"

namespace rsgame {

namespace {

constexpr double kRelTol = 1e-11;
constexpr std::size_t kMaxWitnesses = 10;

std::string num(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

struct DriftEval {
  double lhs = 0.0;        // Σ_j W(j) π̄_ij including the diagonal term
  double magnitude = 0.0;  // Σ_j |W(j) π̄_ij|
  double exit_rate = 0.0;
  bool beyond_domain = false;
};

DriftEval drift(const GameModel& model, const std::function<double(State)>& w,
                std::optional<State> limit, State i, std::size_t a1, std::size_t a2) {
  const PureRow row = model.row(i, a1, a2);
  DriftEval e;
  const double wi = w(i);
  e.lhs = wi * row.diagonal;
  e.magnitude = std::abs(e.lhs);
  e.exit_rate = -row.diagonal;
  for (const auto& t : row.off_diagonal) {
    if (limit && t.to > *limit) {
      e.beyond_domain = true;
      continue;
    }
    const double term = w(t.to) * t.rate;
    e.lhs += term;
    e.magnitude += std::abs(term);
  }
  return e;
}

// Keeps the worst witness per state and check; violations beyond a relative
// tolerance flip the report.
class Recorder {
 public:
  explicit Recorder(AssumptionReport& r) : report_(r) {}

  void consider(const Witness& w, double scale) {
    report_.max_defect = std::max(report_.max_defect, w.defect);
    if (w.defect <= kRelTol * std::max(1.0, scale)) return;
    auto& slot = worst_[{w.check, w.state}];
    if (!slot || w.defect > slot->defect) slot = w;
  }

  void violate(const Witness& w) {
    report_.max_defect = std::max(report_.max_defect, w.defect);
    worst_[{w.check, w.state}] = w;
  }

  void finish() {
    std::vector<Witness> all;
    for (auto& [key, w] : worst_) all.push_back(*w);
    std::stable_sort(all.begin(), all.end(),
                     [](const Witness& a, const Witness& b) { return a.state < b.state; });
    if (all.size() > kMaxWitnesses) all.resize(kMaxWitnesses);
    report_.witnesses = std::move(all);
    if (!report_.witnesses.empty()) report_.status = AssumptionStatus::violated;
  }

 private:
  AssumptionReport& report_;
  std::map<std::pair<std::string, State>, std::optional<Witness>> worst_;
};

void check_range(const GameModel& model, CheckRange range) {
  if (range.first < 1 || range.last < range.first)
    throw ModelError("check range must satisfy 1 <= first <= last");
  if (model.finite_size() && range.last > static_cast<State>(*model.finite_size()))
    throw ModelError("check range exceeds the state space");
}

void apply_tail_policy(AssumptionReport& r, const GameModel& model, const LyapunovSpec& spec,
                       bool beyond_domain) {
  const bool partial = !model.finite_size() || beyond_domain;
  if (partial && spec.tail_certificate) {
    r.notes.push_back("tail certificate: " + *spec.tail_certificate);
  } else if (partial) {
    r.needs_analytic_tail = true;
    r.notes.push_back(beyond_domain
                          ? "some neighbours lie outside the domain where W can be evaluated"
                          : "lazy model: the inequality is only checked on the range");
  }
  if (r.status == AssumptionStatus::holds && beyond_domain && !spec.tail_certificate)
    r.status = AssumptionStatus::needs_analytic_tail;
}

double max_cost(const GameModel& model, Player k, State i) {
  double m = -std::numeric_limits<double>::infinity();
  const std::size_t n1 = model.num_actions(i, Player::first);
  const std::size_t n2 = model.num_actions(i, Player::second);
  for (std::size_t a1 = 0; a1 < n1; ++a1)
    for (std::size_t a2 = 0; a2 < n2; ++a2) m = std::max(m, model.cost(k, i, a1, a2));
  return m;
}

template <typename F>
void for_each_pair(const GameModel& model, State i, F f) {
  const std::size_t n1 = model.num_actions(i, Player::first);
  const std::size_t n2 = model.num_actions(i, Player::second);
  for (std::size_t a1 = 0; a1 < n1; ++a1)
    for (std::size_t a2 = 0; a2 < n2; ++a2) f(a1, a2);
}

}  // namespace

bool LyapunovSpec::in_kernel(State s) const {
  return std::find(kernel_set.begin(), kernel_set.end(), s) != kernel_set.end();
}

std::string to_string(AssumptionStatus s) {
  switch (s) {
    case AssumptionStatus::holds: return "holds";
    case AssumptionStatus::violated: return "violated";
    case AssumptionStatus::needs_analytic_tail: return "needs_analytic_tail";
  }
  return "unknown";
}

AssumptionReport check_lyapunov_drift(const GameModel& model, const LyapunovSpec& spec, CheckRange range) {
  check_range(model, range);
  AssumptionReport r;
  r.name = "lyapunov_drift";
  r.range = range;
  Recorder rec(r);
  bool beyond = false;
  const std::function<double(State)> wt = [&](State s) { return spec.w_tilde(s); };
  for (State i = range.first; i <= range.last; ++i) {
    const double wi = wt(i);
    if (wi < 1.0) rec.consider({"W_at_least_one", i, 0, 0, std::nullopt, std::nullopt, wi, 1.0, 1.0 - wi}, 1.0);
    for_each_pair(model, i, [&](std::size_t a1, std::size_t a2) {
      const DriftEval e = drift(model, wt, spec.evaluable_limit, i, a1, a2);
      beyond = beyond || e.beyond_domain;
      const double rhs = spec.C1 * wi + spec.C2;
      rec.consider({"drift", i, a1, a2, std::nullopt, std::nullopt, e.lhs, rhs, e.lhs - rhs},
                   e.magnitude + std::abs(rhs));
      const double exit_rhs = spec.C3 * wi;
      rec.consider({"exit_rate", i, a1, a2, std::nullopt, std::nullopt, e.exit_rate, exit_rhs,
                    e.exit_rate - exit_rhs},
                   std::abs(e.exit_rate) + std::abs(exit_rhs));
    });
  }
  rec.finish();
  apply_tail_policy(r, model, spec, beyond);
  return r;
}

AssumptionReport check_cost_drift(const GameModel& model, const LyapunovSpec& spec, DriftVariant variant,
                                CheckRange range) {
  check_range(model, range);
  AssumptionReport r;
  r.name = variant == DriftVariant::bounded ? "bounded_cost_drift" : "unbounded_cost_drift";
  r.range = range;
  if (variant == DriftVariant::bounded && !spec.gamma)
    throw ModelError("bounded-cost drift check needs gamma");
  if (variant == DriftVariant::unbounded && !spec.ell)
    throw ModelError("unbounded-cost drift check needs a norm-like function ell");
  Recorder rec(r);
  bool beyond = false;
  for (State i = range.first; i <= range.last; ++i) {
    const double wi = spec.W(i);
    if (wi < 1.0) rec.consider({"W_at_least_one", i, 0, 0, std::nullopt, std::nullopt, wi, 1.0, 1.0 - wi}, 1.0);
    const double killing = variant == DriftVariant::bounded ? *spec.gamma : (*spec.ell)(i);
    const double rhs = (spec.in_kernel(i) ? spec.C4 : 0.0) - killing * wi;
    for_each_pair(model, i, [&](std::size_t a1, std::size_t a2) {
      const DriftEval e = drift(model, spec.W, spec.evaluable_limit, i, a1, a2);
      beyond = beyond || e.beyond_domain;
      rec.consider({"drift", i, a1, a2, std::nullopt, std::nullopt, e.lhs, rhs, e.lhs - rhs},
                   e.magnitude + std::abs(rhs));
    });
    if (variant == DriftVariant::bounded) {
      for (Player k : {Player::first, Player::second}) {
        const double c = max_cost(model, k, i);
        if (c >= *spec.gamma)
          rec.violate({"gamma_exceeds_cost", i, 0, 0, std::nullopt, number_of(k), c, *spec.gamma,
                       c - *spec.gamma});
      }
    } else if ((*spec.ell)(i) < 0.0) {
      rec.consider({"ell_nonnegative", i, 0, 0, std::nullopt, std::nullopt, (*spec.ell)(i), 0.0,
                    -(*spec.ell)(i)},
                   1.0);
    }
  }

  if (variant == DriftVariant::unbounded) {
    // Norm-likeness on a finite range: the tail quarter must sit strictly
    // above the first half and still be rising at the end.
    const State len = range.last - range.first + 1;
    const State tail_start = range.last - std::max<State>(1, len / 4);
    const State half_end = range.first + std::max<State>(0, len / 2 - 1);
    auto check_norm_like = [&](const std::string& label, std::optional<int> player,
                               const std::function<double(State)>& g) {
      double head_max = -std::numeric_limits<double>::infinity();
      for (State i = range.first; i <= half_end; ++i) head_max = std::max(head_max, g(i));
      double tail_min = std::numeric_limits<double>::infinity();
      State at = tail_start;
      for (State i = tail_start; i <= range.last; ++i)
        if (g(i) < tail_min) {
          tail_min = g(i);
          at = i;
        }
      const double rise = g(range.last) - g(tail_start);
      if (len >= 4 && tail_min > head_max && rise > 0.0) return;
      rec.violate({label, at, 0, 0, std::nullopt, player, tail_min, head_max,
                   std::max(head_max - tail_min, -rise)});
      if (spec.norm_like_hint)
        r.notes.push_back(label + " is not norm-like on the range; " + *spec.norm_like_hint);
    };
    check_norm_like("ell_norm_like", std::nullopt, *spec.ell);
    for (Player k : {Player::first, Player::second})
      check_norm_like("ell_minus_cost_norm_like", number_of(k),
                      [&](State i) { return (*spec.ell)(i) - max_cost(model, k, i); });
  }
  rec.finish();
  apply_tail_policy(r, model, spec, beyond);
  return r;
}

IrreducibilityReport check_irreducibility(const GameModel& model, std::size_t n,
                                          const std::optional<StrategyPair>& pair) {
  const auto [trunc, view] = truncate(model, n);
  IrreducibilityReport out;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::size_t> cols;
  std::vector<double> vals;
  if (pair) {
    out.mode = "pair";
    const RateMatrix q = assemble_rates(view, pair->first, pair->second);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t e = 0; e < q.cols(i).size(); ++e)
        if (q.vals(i)[e] > 0.0) {
          cols.push_back(q.cols(i)[e]);
          vals.push_back(1.0);
        }
      row_ptr.push_back(cols.size());
    }
  } else {
    out.mode = "all_pure";
    for (std::size_t i = 0; i < n; ++i) {
      const State s = trunc.state(i);
      std::map<State, std::size_t> positive_count;
      std::size_t pairs = 0;
      for_each_pair(model, s, [&](std::size_t a1, std::size_t a2) {
        ++pairs;
        for (const auto& t : view.row(s, a1, a2).off_diagonal)
          if (t.rate > 0.0) ++positive_count[t.to];
      });
      for (const auto& [to, count] : positive_count)
        if (count == pairs) {
          cols.push_back(trunc.index(to));
          vals.push_back(1.0);
        }
      row_ptr.push_back(cols.size());
    }
  }
  const TwistedMatrix graph(RateMatrix(std::move(row_ptr), std::move(cols), std::move(vals),
                                       std::vector<double>(n, 0.0)),
                            std::vector<double>(n, 0.0));
  for (const auto& comp : strongly_connected_components(graph)) {
    std::vector<State> states;
    for (std::size_t idx : comp) states.push_back(trunc.state(idx));
    out.components.push_back(std::move(states));
  }
  std::sort(out.components.begin(), out.components.end());
  out.irreducible = out.components.size() == 1;
  return out;
}

AssumptionReport check_anchor_row(const GameModel& model, State anchor, CheckRange range) {
  check_range(model, range);
  if (!model.contains(anchor)) throw ModelError("anchor outside the model");
  AssumptionReport r;
  r.name = "anchor_row";
  r.range = range;
  Recorder rec(r);
  for_each_pair(model, anchor, [&](std::size_t a1, std::size_t a2) {
    std::map<State, double> rates;
    for (const auto& t : model.row(anchor, a1, a2).off_diagonal) rates[t.to] += t.rate;
    for (State j = range.first; j <= range.last; ++j) {
      if (j == anchor) continue;
      const auto it = rates.find(j);
      const double rate = it == rates.end() ? 0.0 : it->second;
      if (rate > 0.0) continue;
      // Keyed by target so the smallest failing j comes first.
      rec.consider({"positive_rate", j, a1, a2, j, std::nullopt, rate, 0.0, 1.0}, 1.0);
    }
  });
  rec.finish();
  for (auto& w : r.witnesses) w.state = anchor;
  if (!model.finite_size()) {
    r.needs_analytic_tail = true;
    r.notes.push_back("lazy model: positivity is only checked for targets in the range");
  }
  return r;
}

LyapunovSpec shop_lyapunov_spec(const ShopParams& p) {
  LyapunovSpec s;
  const double theta = p.theta;
  s.W = [theta](State i) { return std::exp(theta * static_cast<double>(i)); };
  s.C1 = 1.0;
  s.C2 = shop_kernel_constant(p);
  s.C3 = shop_exit_rate_constant(p);
  s.C4 = shop_kernel_constant(p);
  const double alpha = shop_drift_margin(p);
  s.ell = [alpha](State i) { return alpha * static_cast<double>(i); };
  s.kernel_set = p.kernel_set;
  if (alpha > 0.0)
    s.tail_certificate =
        "rows at i >= 2 are birth-death, so the exponential drift equals i*V(i)*(-alpha) plus a "
        "bounded term on K for every i; with alpha > 0 the bounds extend past the range";
  s.norm_like_hint =
      "fee margin condition requires (1-e^-theta)*lambda + (1-e^theta)*mu > p_k (alpha = " +
      num(alpha) + ", p = (" + num(p.fee[0]) + ", " + num(p.fee[1]) + "))";
  return s;
}

const DisplayCheck* ShopReport::display(const std::string& name) const {
  for (const auto& d : displays)
    if (d.name == name) return &d;
  return nullptr;
}

const ConditionCheck* ShopReport::condition(const std::string& name) const {
  for (const auto& c : conditions)
    if (c.name == name) return &c;
  return nullptr;
}

namespace {

// Tracks one display: the worst witness and pass/fail at relative tolerance.
class DisplayTracker {
 public:
  explicit DisplayTracker(std::string name) { d_.name = std::move(name); }

  void consider(const Witness& w, double scale, bool strict = false) {
    const double tol = strict ? 0.0 : kRelTol * std::max(1.0, scale);
    const bool fails = strict ? !(w.defect < 0.0) : w.defect > tol;
    if (fails && (d_.pass || w.defect > d_.worst->defect)) {
      d_.pass = false;
      d_.worst = w;
    } else if (d_.pass && (!d_.worst || w.defect > d_.worst->defect)) {
      d_.worst = w;
    }
  }
  DisplayCheck done(std::string note = {}) {
    d_.note = std::move(note);
    return d_;
  }

 private:
  DisplayCheck d_;
};

}  // namespace

ShopReport shop_report(const ShopParams& p, CheckRange range) {
  if (range.first < 1 || range.last < range.first)
    throw ModelError("check range must satisfy 1 <= first <= last");
  ShopReport out;
  out.range = range;
  const GameModel model = shop_model_unchecked(p);
  const auto grid = shop_action_grid(p);
  const double theta = p.theta;
  const double e_up = std::expm1(theta);     // e^θ − 1
  const double e_down = std::expm1(-theta);  // e^{−θ} − 1
  const double bracket = shop_drift_bracket(p);
  const double alpha = shop_drift_margin(p);
  const double C3 = shop_exit_rate_constant(p);
  const double C4 = shop_kernel_constant(p);
  const double L = p.action_max;
  auto V = [theta](State j) { return std::exp(theta * static_cast<double>(j)); };
  auto in_k = [&](State i) {
    return std::find(p.kernel_set.begin(), p.kernel_set.end(), i) != p.kernel_set.end();
  };

  // Parameter conditions.
  {
    ConditionCheck c{"rate_ordering", true, ""};
    if (!(p.buying_rate > 0.0)) {
      c.pass = false;
      c.witness = "mu = " + num(p.buying_rate) + " is not positive";
    } else if (!(p.selling_rate >= p.buying_rate)) {
      c.pass = false;
      c.witness = "lambda = " + num(p.selling_rate) + " < mu = " + num(p.buying_rate);
    } else {
      for (State i = std::max<State>(2, range.first); i <= range.last && c.pass; ++i)
        for (double u : grid) {
          const double i_d = static_cast<double>(i);
          if (!(p.buying_rate * i_d + shop_control(p, i, u) > 0.0) ||
              !(p.selling_rate * i_d + shop_control(p, i, u) > 0.0)) {
            c.pass = false;
            c.witness = "non-positive birth or death rate at i = " + std::to_string(i);
            break;
          }
        }
    }
    out.conditions.push_back(c);
  }
  {
    ConditionCheck c{"drift_sign", alpha > 0.0, ""};
    if (!c.pass)
      c.witness = "mu = " + num(p.buying_rate) + " >= lambda*e^-theta = " +
                  num(p.selling_rate * std::exp(-theta)) + " (alpha = " + num(alpha) + ")";
    out.conditions.push_back(c);
  }
  {
    ConditionCheck c{"fee_margin", true, ""};
    for (Player k : {Player::first, Player::second}) {
      const auto ki = index_of(k);
      if (!(alpha > p.fee[ki])) {
        c.pass = false;
        c.witness = "player " + std::to_string(number_of(k)) + ": (1-e^-theta)*lambda + (1-e^theta)*mu = " +
                    num(alpha) + " <= p = " + num(p.fee[ki]);
        break;
      }
      for (State i = range.first; i <= range.last && c.pass; ++i)
        for (double u : grid)
          if (static_cast<double>(i) * p.fee[ki] - shop_payoff(p, k, i, u) < 0.0) {
            c.pass = false;
            c.witness = "player " + std::to_string(number_of(k)) + ": negative cost at i = " +
                        std::to_string(i) + ", u = " + num(u);
            break;
          }
      if (!c.pass) break;
    }
    out.conditions.push_back(c);
  }

  DisplayTracker identity("drift_identity");
  DisplayTracker killed("killed_drift_bound");
  DisplayTracker boundary("boundary_row_bound");
  DisplayTracker linear("linear_drift_constants");
  DisplayTracker exit_rate("exit_rate_bound");
  DisplayTracker margin("norm_like_margin");

  for (State i = range.first; i <= range.last; ++i) {
    const double vi = V(i);
    const double i_d = static_cast<double>(i);
    for (std::size_t a1 = 0; a1 < grid.size(); ++a1)
      for (std::size_t a2 = 0; a2 < grid.size(); ++a2) {
        const PureRow row = model.row(i, a1, a2);
        double lhs = vi * row.diagonal;
        double mag = std::abs(lhs);
        for (const auto& t : row.off_diagonal) {
          lhs += V(t.to) * t.rate;
          mag += std::abs(V(t.to) * t.rate);
        }
        const double exit = -row.diagonal;

        if (i >= 2) {
          const double kernel_term =
              in_k(i) ? grid[a1] * e_up + grid[a2] * e_down : 0.0;
          const double closed = i_d * vi * bracket + kernel_term;
          identity.consider({"identity", i, a1, a2, std::nullopt, std::nullopt, lhs, closed,
                             std::abs(lhs - closed)},
                            mag);
          const double bound = i_d * vi * bracket + (in_k(i) ? L * e_up : 0.0);
          identity.consider({"kernel_bound", i, a1, a2, std::nullopt, std::nullopt, closed, bound,
                             closed - bound},
                            mag);
          const double rate_bound = i_d * (p.buying_rate + p.selling_rate) + 2.0 * L;
          exit_rate.consider({"linear_exit_rate", i, a1, a2, std::nullopt, std::nullopt, exit,
                              rate_bound, exit - rate_bound},
                             rate_bound);
        } else {
          // State 1: the dense boundary row.
          const double geometric = std::exp(-2.0 * theta) / -std::expm1(-theta);
          const double mid = row.diagonal * std::exp(theta) + geometric;
          boundary.consider({"strict_bound", i, a1, a2, std::nullopt, std::nullopt, lhs, mid, lhs - mid},
                            mag, true);
          if (!std::isfinite(mid))
            boundary.consider({"finite_bound", i, a1, a2, std::nullopt, std::nullopt, mid, 0.0, 1.0}, 1.0);
          for (const auto& t : row.off_diagonal) {
            const double cap = std::exp(-2.0 * theta * static_cast<double>(t.to));
            boundary.consider({"rate_cap", i, a1, a2, t.to, std::nullopt, t.rate, cap, t.rate - cap}, cap);
            if (!(t.rate > 0.0))
              boundary.consider({"positive_rate", i, a1, a2, t.to, std::nullopt, t.rate, 0.0, 1.0}, 1.0);
          }
          const double row_sum = row.diagonal + row.off_diagonal_sum();
          boundary.consider({"conservative", i, a1, a2, std::nullopt, std::nullopt, std::abs(row_sum),
                             kRowSumTolerance, std::abs(row_sum) - kRowSumTolerance * std::max(1.0, exit)},
                            0.0);
        }

        const double killed_rhs = (in_k(i) ? C4 : 0.0) - alpha * i_d * vi;
        killed.consider({"drift", i, a1, a2, std::nullopt, std::nullopt, lhs, killed_rhs, lhs - killed_rhs},
                        mag + std::abs(killed_rhs));
        const double linear_rhs = vi + C4;
        linear.consider({"drift", i, a1, a2, std::nullopt, std::nullopt, lhs, linear_rhs, lhs - linear_rhs},
                        mag + linear_rhs);
        exit_rate.consider({"exit_rate", i, a1, a2, std::nullopt, std::nullopt, exit, C3 * vi,
                            exit - C3 * vi},
                           C3 * vi);
      }

    for (Player k : {Player::first, Player::second}) {
      const auto ki = index_of(k);
      const double beta = alpha - p.fee[ki];
      double max_c = -std::numeric_limits<double>::infinity();
      double min_r = std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < grid.size(); ++a) {
        max_c = std::max(max_c, k == Player::first ? model.cost(k, i, a, 0) : model.cost(k, i, 0, a));
        min_r = std::min(min_r, shop_payoff(p, k, i, grid[a]));
      }
      const double lhs = alpha * i_d - max_c;
      const double rhs = i_d * beta + min_r;
      margin.consider({"identity", i, 0, 0, std::nullopt, number_of(k), lhs, rhs, std::abs(lhs - rhs)},
                      std::abs(alpha * i_d) + std::abs(max_c));
      if (i == range.first)
        margin.consider({"beta_nonnegative", i, 0, 0, std::nullopt, number_of(k), -beta, 0.0, -beta},
                        0.0);
    }
  }

  out.displays.push_back(identity.done("sum_j pi_ij V(j) = i V(i)[mu(e^t-1) + lambda(e^-t-1)] + "
                                       "[u1(e^t-1) + u2(e^-t-1)] 1_K(i), bounded by L(e^t-1) on K; i >= 2"));
  out.displays.push_back(killed.done("sup_u sum_j V(j) pi_ij <= C4 1_K(i) - alpha i V(i), C4 = " +
                                     num(C4) + ", alpha = " + num(alpha)));
  out.displays.push_back(boundary.done(
      "sum_j pi_1j V(j) < pi_11 e^t + e^-2t/(1-e^-t) < inf, with pi_1j <= e^-2tj; the geometric tail "
      "of the boundary row is summed in closed form"));
  out.displays.push_back(linear.done("sum_j pi_ij V(j) <= C1 V(i) + C2 with C1 = 1, C2 = C4"));
  out.displays.push_back(exit_rate.done("-pi_ii <= i(mu+lambda) + 2L <= C3 V(i), C3 = " + num(C3)));
  out.displays.push_back(margin.done("beta_k = alpha - p_k >= 0 and alpha i - sup c_k = i beta_k + inf r_k"));

  out.notes.push_back("continuity in actions holds trivially on finite action grids");
  out.notes.push_back("state 1 uses the boundary row, so the control perturbation there is not evaluated");
  out.pass = true;
  for (const auto& c : out.conditions) out.pass = out.pass && c.pass;
  for (const auto& d : out.displays) out.pass = out.pass && d.pass;
  return out;
}

nlohmann::json to_json(const Witness& w) {
  nlohmann::json j = {{"check", w.check}, {"state", w.state}, {"a1", w.a1}, {"a2", w.a2},
                      {"lhs", w.lhs},     {"rhs", w.rhs},     {"defect", w.defect}};
  j["target"] = w.target ? nlohmann::json(*w.target) : nlohmann::json(nullptr);
  j["player"] = w.player ? nlohmann::json(*w.player) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json to_json(const AssumptionReport& r) {
  nlohmann::json w = nlohmann::json::array();
  for (const auto& x : r.witnesses) w.push_back(to_json(x));
  return {{"name", r.name},
          {"status", to_string(r.status)},
          {"range", {r.range.first, r.range.last}},
          {"max_defect", std::isfinite(r.max_defect) ? nlohmann::json(r.max_defect) : nlohmann::json(nullptr)},
          {"needs_analytic_tail", r.needs_analytic_tail},
          {"witnesses", w},
          {"notes", r.notes}};
}

nlohmann::json to_json(const IrreducibilityReport& r) {
  return {{"mode", r.mode}, {"irreducible", r.irreducible}, {"components", r.components}};
}

nlohmann::json to_json(const ShopReport& r) {
  nlohmann::json conds = nlohmann::json::array();
  for (const auto& c : r.conditions)
    conds.push_back({{"name", c.name}, {"pass", c.pass}, {"witness", c.witness}});
  nlohmann::json disp = nlohmann::json::array();
  for (const auto& d : r.displays)
    disp.push_back({{"name", d.name},
                    {"pass", d.pass},
                    {"worst", d.worst ? to_json(*d.worst) : nlohmann::json(nullptr)},
                    {"note", d.note}});
  return {{"range", {r.range.first, r.range.last}},
          {"pass", r.pass},
          {"conditions", conds},
          {"displays", disp},
          {"notes", r.notes}};
}

std::string to_text(const AssumptionReport& r) {
  std::ostringstream os;
  os << r.name << ": " << to_string(r.status) << " on [" << r.range.first << ", " << r.range.last
     << "]";
  if (std::isfinite(r.max_defect)) os << ", max defect " << num(r.max_defect);
  if (r.needs_analytic_tail) os << " (needs analytic tail)";
  os << '\n';
  for (const auto& w : r.witnesses)
    os << "  witness " << w.check << " at i=" << w.state << " (a1=" << w.a1 << ", a2=" << w.a2
       << (w.target ? ", j=" + std::to_string(*w.target) : std::string())
       << (w.player ? ", player " + std::to_string(*w.player) : std::string()) << "): lhs "
       << num(w.lhs) << " vs rhs " << num(w.rhs) << '\n';
  for (const auto& n : r.notes) os << "  note: " << n << '\n';
  return os.str();
}

std::string to_text(const ShopReport& r) {
  std::ostringstream os;
  os << "shop sufficient conditions on [" << r.range.first << ", " << r.range.last
     << "]: " << (r.pass ? "PASS" : "FAIL") << '\n';
  for (const auto& c : r.conditions)
    os << "  condition " << c.name << ": " << (c.pass ? "pass" : "FAIL")
       << (c.witness.empty() ? "" : " (" + c.witness + ")") << '\n';
  for (const auto& d : r.displays) {
    os << "  " << d.name << ": " << (d.pass ? "pass" : "FAIL");
    if (d.worst)
      os << " (worst " << d.worst->check << " at i=" << d.worst->state << ": lhs " << num(d.worst->lhs)
         << ", rhs " << num(d.worst->rhs) << ")";
    os << '\n';
  }
  return os.str();
}

}  // namespace rsgame
