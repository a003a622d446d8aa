#include "rsgame/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

namespace rsgame {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
// Above this size the shifted systems are factorized sparsely.
constexpr std::size_t kDenseLimit = 400;

struct Bracket {
  double low = 0.0;
  double high = 0.0;
  double width() const { return high - low; }
};

Bracket quotient_bracket(std::span<const double> y, std::span<const double> psi) {
  Bracket b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < psi.size(); ++i) {
    const double r = y[i] / psi[i];
    b.low = std::min(b.low, r);
    b.high = std::max(b.high, r);
  }
  return b;
}

double scale_of(const TwistedMatrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double row = std::abs(a.diagonal(i));
    for (double v : a.rates().vals(i)) row += std::abs(v);
    s = std::max(s, row);
  }
  return std::max(s, 1.0);
}

// Floor on a meaningful bracket width: quotients carry rounding of order
// eps·(row magnitude), so a tolerance below that cannot be certified.
double resolution_floor(double scale) { return 64.0 * kEps * scale; }

void normalize_max(std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  for (double& x : v) x /= m;
}

double residual_of(const TwistedMatrix& a, std::span<const double> psi, double rho) {
  std::vector<double> y(psi.size());
  a.multiply(psi, y);
  double r = 0.0;
  double norm = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    r = std::max(r, std::abs(y[i] - rho * psi[i]));
    norm = std::max(norm, std::abs(psi[i]));
  }
  return norm > 0.0 ? r / norm : r;
}

void finish(EigenPair& ep, std::size_t anchor) {
  const double at_anchor = ep.psi[anchor];
  if (!(at_anchor > 0.0)) {
    ep.warnings.push_back("eigenfunction vanishes at the anchor; normalized by its maximum");
    normalize_max(ep.psi);
    return;
  }
  for (double& x : ep.psi) x /= at_anchor;
  ep.psi[anchor] = 1.0;
}

/// Solves (σI − A) z = b for varying σ.
class ShiftedSolver {
 public:
  explicit ShiftedSolver(const TwistedMatrix& a) : a_(a), n_(a.size()) {}

  bool solve(double sigma, const std::vector<double>& b, std::vector<double>& z) {
    Eigen::Map<const Eigen::VectorXd> rhs(b.data(), static_cast<Eigen::Index>(n_));
    Eigen::VectorXd x;
    if (n_ <= kDenseLimit) {
      Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
      for (std::size_t i = 0; i < n_; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        m(ii, ii) = sigma - a_.diagonal(i);
        const auto c = a_.rates().cols(i);
        const auto v = a_.rates().vals(i);
        for (std::size_t e = 0; e < c.size(); ++e) m(ii, static_cast<Eigen::Index>(c[e])) -= v[e];
      }
      x = m.partialPivLu().solve(rhs);
    } else {
      std::vector<Eigen::Triplet<double>> trip;
      for (std::size_t i = 0; i < n_; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        trip.emplace_back(ii, ii, sigma - a_.diagonal(i));
        const auto c = a_.rates().cols(i);
        const auto v = a_.rates().vals(i);
        for (std::size_t e = 0; e < c.size(); ++e)
          trip.emplace_back(ii, static_cast<Eigen::Index>(c[e]), -v[e]);
      }
      Eigen::SparseMatrix<double> m(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
      m.setFromTriplets(trip.begin(), trip.end());
      Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
      lu.compute(m);
      if (lu.info() != Eigen::Success) return false;
      x = lu.solve(rhs);
      if (lu.info() != Eigen::Success) return false;
    }
    z.assign(x.data(), x.data() + x.size());
    return std::all_of(z.begin(), z.end(), [](double v) { return std::isfinite(v) && v > 0.0; });
  }

 private:
  const TwistedMatrix& a_;
  std::size_t n_;
};

EigenPair irreducible_eigenpair(const TwistedMatrix& a, std::size_t anchor, const EigenOptions& opts) {
  const std::size_t n = a.size();
  const std::size_t cap = opts.iteration_cap(n);
  const double alpha = a.shift();
  const double floor = resolution_floor(scale_of(a));
  const double target = std::max(opts.tol, floor);

  EigenPair ep;
  std::vector<double> psi(n, 1.0);
  std::vector<double> y(n);
  std::vector<double> z;
  ShiftedSolver solver(a);
  bool use_power = opts.method == EigenMethod::power;
  Bracket b;
  bool converged = false;
  std::size_t it = 0;
  for (; it <= cap; ++it) {
    a.multiply(psi, y);
    b = quotient_bracket(y, psi);
    if (b.width() <= target) {
      converged = true;
      break;
    }
    if (it == cap) break;
    if (!use_power) {
      // Shift strictly above the upper Collatz–Wielandt bound keeps σI − A a
      // nonsingular M-matrix, so the solve preserves positivity.
      const double sigma = b.high + b.width();
      if (solver.solve(sigma, psi, z)) {
        psi.swap(z);
        normalize_max(psi);
        continue;
      }
      use_power = true;
      ep.warnings.push_back("shift-invert step lost positivity; continued with power iteration");
    }
    for (std::size_t i = 0; i < n; ++i) psi[i] = y[i] + alpha * psi[i];
    normalize_max(psi);
  }
  ep.psi = psi;
  ep.iterations = it;
  ep.bracket_low = b.low;
  ep.bracket_high = b.high;
  ep.rho = 0.5 * (b.low + b.high);
  if (!converged) {
    finish(ep, anchor);
    ep.residual = residual_of(a, ep.psi, ep.rho);
    throw SolverError("principal eigenpair: bracket width " + std::to_string(b.width()) +
                          " above tolerance after " + std::to_string(it) + " iterations",
                      std::move(ep));
  }
  if (opts.tol < floor && b.width() > opts.tol)
    ep.warnings.push_back("tolerance below floating-point resolution of the quotients");
  finish(ep, anchor);
  ep.residual = residual_of(a, ep.psi, ep.rho);
  return ep;
}

TwistedMatrix submatrix(const TwistedMatrix& a, const std::vector<std::size_t>& idx) {
  std::vector<std::size_t> pos(a.size(), std::numeric_limits<std::size_t>::max());
  for (std::size_t k = 0; k < idx.size(); ++k) pos[idx[k]] = k;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::size_t> cols;
  std::vector<double> vals;
  std::vector<double> diag;
  std::vector<double> cost;
  for (std::size_t i : idx) {
    const auto c = a.rates().cols(i);
    const auto v = a.rates().vals(i);
    for (std::size_t e = 0; e < c.size(); ++e) {
      if (pos[c[e]] == std::numeric_limits<std::size_t>::max()) continue;
      cols.push_back(pos[c[e]]);
      vals.push_back(v[e]);
    }
    row_ptr.push_back(cols.size());
    diag.push_back(a.rates().diagonal(i));
    cost.push_back(a.cost(i));
  }
  return TwistedMatrix(RateMatrix(std::move(row_ptr), std::move(cols), std::move(vals), std::move(diag)),
                       std::move(cost));
}

EigenPair reducible_eigenpair(const TwistedMatrix& a, std::size_t anchor, const EigenOptions& opts,
                              const std::vector<std::vector<std::size_t>>& components) {
  EigenPair ep;
  ep.reducible = true;
  ep.warnings.push_back("matrix is reducible (" + std::to_string(components.size()) +
                        " strongly connected components); component-wise fallback");
  double rho = -std::numeric_limits<double>::infinity();
  for (const auto& comp : components) {
    double r;
    if (comp.size() == 1) {
      r = a.diagonal(comp.front());
    } else {
      const TwistedMatrix sub = submatrix(a, comp);
      r = irreducible_eigenpair(sub, 0, opts).rho;
    }
    rho = std::max(rho, r);
  }
  const std::size_t n = a.size();
  const double scale = scale_of(a);
  const double delta = std::max(1e-8 * scale, 1e3 * opts.tol);
  ShiftedSolver solver(a);
  std::vector<double> psi(n, 1.0);
  std::vector<double> z;
  const double target = std::max(opts.tol, resolution_floor(scale));
  std::size_t it = 0;
  double res = residual_of(a, psi, rho);
  for (; it < 200 && res > target; ++it) {
    if (!solver.solve(rho + delta, psi, z)) break;
    psi.swap(z);
    normalize_max(psi);
    res = residual_of(a, psi, rho);
  }
  ep.rho = rho;
  ep.psi = psi;
  ep.iterations = it;
  std::vector<double> y(n);
  a.multiply(psi, y);
  const Bracket b = quotient_bracket(y, psi);
  ep.bracket_low = b.low;
  ep.bracket_high = b.high;
  finish(ep, anchor);
  ep.residual = residual_of(a, ep.psi, ep.rho);
  if (res > target)
    throw SolverError("reducible principal eigenpair: residual " + std::to_string(res) +
                          " above tolerance",
                      std::move(ep));
  return ep;
}

}  // namespace

std::vector<std::vector<std::size_t>> strongly_connected_components(const TwistedMatrix& a) {
  // Iterative Tarjan.
  const std::size_t n = a.size();
  constexpr std::size_t unset = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> index(n, unset), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::vector<std::vector<std::size_t>> out;
  std::size_t counter = 0;
  struct Frame {
    std::size_t v;
    std::size_t edge;
  };
  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != unset) continue;
    std::vector<Frame> call{{root, 0}};
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!call.empty()) {
      Frame& f = call.back();
      const auto cols = a.rates().cols(f.v);
      const auto vals = a.rates().vals(f.v);
      if (f.edge < cols.size()) {
        const std::size_t w = cols[f.edge];
        const double rate = vals[f.edge];
        ++f.edge;
        if (!(rate > 0.0) || w == f.v) continue;
        if (index[w] == unset) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[f.v] = std::min(low[f.v], index[w]);
        }
        continue;
      }
      const std::size_t v = f.v;
      call.pop_back();
      if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
      if (low[v] == index[v]) {
        std::vector<std::size_t> comp;
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp.push_back(w);
        } while (w != v);
        std::sort(comp.begin(), comp.end());
        out.push_back(std::move(comp));
      }
    }
  }
  return out;
}

bool is_irreducible(const TwistedMatrix& a) { return strongly_connected_components(a).size() == 1; }

EigenPair principal_eigenpair(const TwistedMatrix& a, std::size_t anchor_index, const EigenOptions& opts) {
  const std::size_t n = a.size();
  if (n == 0) throw ModelError("principal_eigenpair: empty matrix");
  if (anchor_index >= n) throw ModelError("principal_eigenpair: anchor outside the truncation");
  if (n == 1) {
    EigenPair ep;
    ep.rho = a.diagonal(0);
    ep.psi = {1.0};
    ep.bracket_low = ep.bracket_high = ep.rho;
    return ep;
  }
  const auto components = strongly_connected_components(a);
  if (components.size() > 1) return reducible_eigenpair(a, anchor_index, opts, components);
  return irreducible_eigenpair(a, anchor_index, opts);
}

std::vector<double> min_action_quotients(const ControlledFamily& family, std::span<const double> psi) {
  std::vector<double> q(family.size());
  for (std::size_t i = 0; i < family.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : family.actions(i)) best = std::min(best, r.apply(i, psi));
    q[i] = best / psi[i];
  }
  return q;
}

namespace {

struct Evaluation {
  std::vector<std::size_t> selector;
  std::vector<std::vector<std::size_t>> argmin_sets;
  std::vector<double> min_value;
};

// Per-state action values (A_a ψ)(i); ties are values within rounding of the
// row magnitude and resolve to the lowest index.
Evaluation evaluate_actions(const ControlledFamily& family, std::span<const double> psi) {
  Evaluation ev;
  const std::size_t n = family.size();
  ev.selector.resize(n);
  ev.argmin_sets.resize(n);
  ev.min_value.resize(n);
  std::vector<double> values;
  std::vector<double> tol;
  for (std::size_t i = 0; i < n; ++i) {
    const auto acts = family.actions(i);
    values.resize(acts.size());
    tol.resize(acts.size());
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < acts.size(); ++a) {
      values[a] = acts[a].apply(i, psi);
      tol[a] = 16.0 * kEps * acts[a].magnitude(i, psi);
      best = std::min(best, values[a]);
    }
    ev.min_value[i] = best;
    for (std::size_t a = 0; a < acts.size(); ++a)
      if (values[a] <= best + tol[a]) ev.argmin_sets[i].push_back(a);
    ev.selector[i] = ev.argmin_sets[i].front();
  }
  return ev;
}

double family_scale(const ControlledFamily& family) {
  double s = 1.0;
  for (std::size_t i = 0; i < family.size(); ++i)
    for (const auto& r : family.actions(i)) {
      double row = std::abs(r.rate_diagonal + r.cost);
      for (double v : r.vals) row += std::abs(v);
      s = std::max(s, row);
    }
  return s;
}

BestResponseEigen nonlinear_power(const ControlledFamily& family, std::size_t anchor,
                                  const EigenOptions& opts, std::vector<double> psi,
                                  std::size_t prior_iterations) {
  const std::size_t n = family.size();
  const std::size_t cap = opts.iteration_cap(n);
  const double alpha = family.shift();
  const double target = std::max(opts.tol, resolution_floor(family_scale(family)));
  std::vector<double> y(n);
  Bracket b;
  bool converged = false;
  std::size_t it = 0;
  for (; it <= cap; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& r : family.actions(i)) best = std::min(best, r.apply(i, psi));
      y[i] = best;
    }
    b = quotient_bracket(y, psi);
    if (b.width() <= target) {
      converged = true;
      break;
    }
    if (it == cap) break;
    for (std::size_t i = 0; i < n; ++i) psi[i] = y[i] + alpha * psi[i];
    normalize_max(psi);
  }
  BestResponseEigen out;
  out.eigen.psi = psi;
  out.eigen.iterations = prior_iterations + it;
  out.eigen.bracket_low = b.low;
  out.eigen.bracket_high = b.high;
  out.eigen.rho = 0.5 * (b.low + b.high);
  finish(out.eigen, anchor);
  Evaluation ev = evaluate_actions(family, out.eigen.psi);
  out.selector = std::move(ev.selector);
  out.argmin_sets = std::move(ev.argmin_sets);
  double r = 0.0;
  double norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    r = std::max(r, std::abs(ev.min_value[i] - out.eigen.rho * out.eigen.psi[i]));
    norm = std::max(norm, out.eigen.psi[i]);
  }
  out.eigen.residual = r / norm;
  if (!converged)
    throw SolverError("best-response eigenpair: nonlinear bracket width " +
                          std::to_string(b.width()) + " above tolerance after " +
                          std::to_string(it) + " iterations",
                      out.eigen);
  return out;
}

}  // namespace

BestResponseEigen best_response_eigenpair(const ControlledFamily& family, std::size_t anchor_index,
                                          const EigenOptions& opts) {
  const std::size_t n = family.size();
  if (n == 0) throw ModelError("best_response_eigenpair: empty truncation");
  if (anchor_index >= n) throw ModelError("best_response_eigenpair: anchor outside the truncation");
  if (opts.best_response == BestResponseMethod::power)
    return nonlinear_power(family, anchor_index, opts, std::vector<double>(n, 1.0), 0);

  const double target = std::max(opts.tol, resolution_floor(family_scale(family)));
  std::vector<double> ones(n, 1.0);
  std::vector<std::size_t> selector = evaluate_actions(family, ones).selector;
  std::size_t iterations = 0;
  std::vector<double> last_psi = ones;
  try {
    EigenPair ep = principal_eigenpair(family.select(selector), anchor_index, opts);
    iterations += ep.iterations;
    const std::size_t cap = 10 * n + 100;
    for (std::size_t round = 0; round < cap; ++round) {
      bool changed = false;
      for (std::size_t i = 0; i < n; ++i) {
        const auto acts = family.actions(i);
        const double current = acts[selector[i]].apply(i, ep.psi);
        std::size_t best_a = selector[i];
        double best = current;
        for (std::size_t a = 0; a < acts.size(); ++a) {
          const double v = acts[a].apply(i, ep.psi);
          if (v < best) {
            best = v;
            best_a = a;
          }
        }
        const double tie = 16.0 * kEps * acts[selector[i]].magnitude(i, ep.psi);
        if (best < current - tie) {
          selector[i] = best_a;
          changed = true;
        }
      }
      if (!changed) break;
      EigenPair next = principal_eigenpair(family.select(selector), anchor_index, opts);
      iterations += next.iterations;
      if (next.rho > ep.rho + target) {
        ep = std::move(next);
        break;  // rounding broke monotonicity; the final check decides
      }
      ep = std::move(next);
    }
    last_psi = ep.psi;
    Evaluation ev = evaluate_actions(family, ep.psi);
    if (ev.selector != selector) {
      selector = ev.selector;
      ep = principal_eigenpair(family.select(selector), anchor_index, opts);
      iterations += ep.iterations;
      ev = evaluate_actions(family, ep.psi);
    }
    std::vector<double> q(n);
    for (std::size_t i = 0; i < n; ++i) q[i] = ev.min_value[i] / ep.psi[i];
    const auto [lo, hi] = std::minmax_element(q.begin(), q.end());
    if (!ep.reducible && *hi - *lo <= target) {
      BestResponseEigen out;
      out.eigen = std::move(ep);
      out.eigen.iterations = iterations;
      out.eigen.bracket_low = *lo;
      out.eigen.bracket_high = *hi;
      out.eigen.rho = 0.5 * (*lo + *hi);
      double r = 0.0;
      double norm = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        r = std::max(r, std::abs(ev.min_value[i] - out.eigen.rho * out.eigen.psi[i]));
        norm = std::max(norm, out.eigen.psi[i]);
      }
      out.eigen.residual = r / norm;
      out.selector = std::move(ev.selector);
      out.argmin_sets = std::move(ev.argmin_sets);
      return out;
    }
    last_psi = ep.psi;
  } catch (const SolverError&) {
    // fall through to the nonlinear iteration
  }
  BestResponseEigen out = nonlinear_power(family, anchor_index, opts, last_psi, iterations);
  out.eigen.warnings.push_back("policy iteration did not certify; used nonlinear power iteration");
  return out;
}

std::pair<EigenPair, StationaryStrategy> best_response_eigenpair(const TruncatedView& view,
                                                                 const StationaryStrategy& opponent,
                                                                 Player player,
                                                                 const EigenOptions& opts) {
  const ControlledFamily family = assemble_controlled(view, opponent, player);
  BestResponseEigen br = best_response_eigenpair(family, view.truncation().anchor_index(), opts);
  StationaryStrategy s = pure_strategy(view.model(), player, br.selector);
  return {std::move(br.eigen), std::move(s)};
}

double LadderResult::extended_psi(State s) const {
  for (auto it = rungs.rbegin(); it != rungs.rend(); ++it) {
    if (!it->eigen) continue;
    if (s >= 1 && s <= static_cast<State>(it->n)) return it->eigen->psi[static_cast<std::size_t>(s - 1)];
    return 0.0;
  }
  throw ModelError("ladder has no successful rung");
}

LadderResult truncation_ladder(const GameModel& model, const LadderRequest& request,
                               const EigenOptions& opts) {
  if (request.sizes.empty()) throw ModelError("ladder: no truncation sizes");
  for (std::size_t k = 1; k < request.sizes.size(); ++k)
    if (request.sizes[k] <= request.sizes[k - 1])
      throw ModelError("ladder: truncation sizes must be strictly increasing");
  if (request.opponent.player() != other(request.player))
    throw ModelError("ladder: opponent strategy belongs to the controlling player");
  if (request.own && request.own->player() != request.player)
    throw ModelError("ladder: own strategy belongs to the other player");

  LadderResult out;
  out.fixed_strategies = request.own.has_value();
  for (std::size_t n : request.sizes) {
    LadderRung rung;
    rung.n = n;
    try {
      const auto [trunc, view] = truncate(model, n);
      if (request.own) {
        const StationaryStrategy& v1 = request.player == Player::first ? *request.own : request.opponent;
        const StationaryStrategy& v2 = request.player == Player::first ? request.opponent : *request.own;
        rung.eigen = principal_eigenpair(assemble(view, v1, v2, request.player), trunc.anchor_index(), opts);
      } else {
        auto [ep, sel] = best_response_eigenpair(view, request.opponent, request.player, opts);
        rung.eigen = std::move(ep);
        rung.selector = std::move(sel);
      }
    } catch (const std::exception& e) {
      rung.error = e.what();
    }
    out.rungs.push_back(std::move(rung));
  }

  std::vector<double> rhos;
  for (const auto& r : out.rungs)
    if (r.eigen) rhos.push_back(r.eigen->rho);
  for (std::size_t k = 1; k < rhos.size(); ++k) {
    const double inc = rhos[k] - rhos[k - 1];
    out.increments.push_back(inc);
    out.max_monotonicity_defect = std::max(out.max_monotonicity_defect, -inc);
  }
  out.monotone = out.max_monotonicity_defect <= kLadderMonotonicityTolerance;
  for (std::size_t k = 1; k < out.increments.size(); ++k)
    out.gap_ratios.push_back(out.increments[k - 1] != 0.0 ? out.increments[k] / out.increments[k - 1]
                                                          : 0.0);
  if (rhos.size() >= 3) {
    // Aitken Δ² on the last three rungs.
    const double r0 = rhos[rhos.size() - 3], r1 = rhos[rhos.size() - 2], r2 = rhos.back();
    const double d1 = r1 - r0, d2 = r2 - r1;
    const double denom = d2 - d1;
    out.extrapolated_limit = std::abs(denom) > 1e-300 && std::abs(d2) < std::abs(d1)
                                 ? r2 - d2 * d2 / denom
                                 : r2;
  } else if (!rhos.empty()) {
    out.extrapolated_limit = rhos.back();
  }
  return out;
}

}  // namespace rsgame
