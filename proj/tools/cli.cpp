#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "rsgame/eigensolver.hpp"
#include "rsgame/generator.hpp"
#include "rsgame/model_io.hpp"
#include "rsgame/nash.hpp"
#include "rsgame/shop.hpp"
#include "rsgame/simulate.hpp"
#include "rsgame/verify.hpp"

namespace rsgame::cli {

namespace {

struct HelpRequested {
  std::string text;
};

// Flag name → config-file key.
const std::map<std::string, std::string> kOptionKeys = {
    {"--model", "model"},       {"--builtin", "builtin"},     {"--trunc", "trunc"},
    {"--tol", "tol"},           {"--eps", "eps"},             {"--seed", "seed"},
    {"--horizon", "horizon"},   {"--paths", "paths"},         {"--batches", "batches"},
    {"--out", "out"},           {"--threads", "threads"},     {"--player", "player"},
    {"--damping", "damping"},   {"--max-rounds", "max_rounds"}, {"--schedule", "schedule"},
    {"--start", "start"},       {"--strategies", "strategies"}, {"--fixed", "fixed"},
    {"--hitting-set", "hitting_set"}, {"--starts", "starts"}, {"--range", "range"},
};

template <typename T>
T get_as(const nlohmann::json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

template <typename T>
std::vector<T> list_or_csv(const nlohmann::json& v, const std::string& key) {
  if (v.is_string()) {
    std::vector<T> out;
    std::stringstream ss(v.get<std::string>());
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        out.push_back(static_cast<T>(std::stoll(item)));
      } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' has a non-integer entry '" + item + "'");
      }
    }
    return out;
  }
  return get_as<std::vector<T>>(v, key);
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << content;
  if (!f) throw std::runtime_error("failed writing " + path);
}

Player player_of(int p) { return p == 1 ? Player::first : Player::second; }

GameModel load_model(const RunConfig& cfg, bool unchecked = false) {
  try {
    if (cfg.builtin) {
      const ShopParams p = shop_params_from_json(cfg.shop_params);
      return unchecked ? shop_model_unchecked(p) : shop_model(p);
    }
    return load_model_file(*cfg.model_path);
  } catch (const ModelError& e) {
    throw ConfigError(e.what());
  }
}

std::size_t truncation_size(const RunConfig& cfg, const GameModel& model) {
  if (!cfg.trunc.empty()) return cfg.trunc.back();
  if (model.finite_size()) return *model.finite_size();
  throw ConfigError("--trunc is required for lazy models");
}

StrategyPair load_strategies(const RunConfig& cfg, const GameModel& model,
                             std::optional<std::size_t> extent) {
  if (!cfg.strategies)
    return {uniform_strategy(model, Player::first, extent), uniform_strategy(model, Player::second, extent)};
  std::ifstream in(*cfg.strategies);
  if (!in) throw ConfigError("cannot open strategies file " + *cfg.strategies);
  nlohmann::json j;
  try {
    in >> j;
    if (j.contains("strategies")) j = j.at("strategies");
    auto table = [&](const char* key) {
      return j.at(key).get<std::vector<std::vector<double>>>();
    };
    return {StationaryStrategy(model, Player::first, table("player1")),
            StationaryStrategy(model, Player::second, table("player2"))};
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("strategies file " + *cfg.strategies + ": " + e.what());
  } catch (const ModelError& e) {
    throw ConfigError("strategies file " + *cfg.strategies + ": " + e.what());
  }
}

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(12) << x;
  return os.str();
}

int run_solve(const RunConfig& cfg, std::ostream& out) {
  const GameModel model = load_model(cfg);
  const std::size_t n = truncation_size(cfg, model);
  const auto [trunc, view] = truncate(model, n);
  const StrategyPair init = load_strategies(cfg, model, n);
  NashOptions o;
  o.epsilon = cfg.eps;
  o.eigen.tol = cfg.tol;
  o.damping = cfg.damping;
  o.max_rounds = cfg.max_rounds;
  o.threads = cfg.threads;
  o.schedule = cfg.schedule == "simultaneous" ? Schedule::simultaneous : Schedule::alternating;
  const NashCertificate cert = nash_iterate(view, init, o);
  nlohmann::json j = to_json(cert);
  j["truncation"] = n;
  write_file(cfg.out.value_or("certificate.json"), j.dump(2) + "\n");
  const bool ok = cert.status == NashStatus::converged && cert.certification.pass && cert.converse.pass;
  out << "status " << to_string(cert.status) << " (" << cert.resolution << ") after " << cert.rounds
      << " rounds on n=" << n << "\n"
      << "rho " << fmt(cert.certification.rho[0]) << " " << fmt(cert.certification.rho[1]) << "\n"
      << "gaps " << fmt(cert.certification.gaps[0]) << " " << fmt(cert.certification.gaps[1])
      << " (epsilon " << fmt(cfg.eps) << ")\n"
      << "converse " << (cert.converse.pass ? "pass" : "fail") << "\n";
  return ok ? 0 : 1;
}

int run_ladder(const RunConfig& cfg, std::ostream& out) {
  const GameModel model = load_model(cfg);
  if (cfg.trunc.empty()) throw ConfigError("ladder needs --trunc n1,n2,...");
  const Player k = player_of(cfg.player);
  const StrategyPair pair = load_strategies(cfg, model, std::nullopt);
  LadderRequest req{k, pair.of(other(k)), std::nullopt, cfg.trunc};
  if (cfg.fixed) req.own = pair.of(k);
  EigenOptions eo;
  eo.tol = cfg.tol;
  const LadderResult res = truncation_ladder(model, req, eo);
  std::ostringstream csv;
  csv << std::setprecision(17) << "n,rho,residual,iterations,error\n";
  bool all_ok = true;
  for (const auto& r : res.rungs) {
    if (r.eigen) {
      csv << r.n << ',' << r.eigen->rho << ',' << r.eigen->residual << ',' << r.eigen->iterations << ",\n";
    } else {
      all_ok = false;
      std::string e = r.error;
      std::replace(e.begin(), e.end(), ',', ';');
      csv << r.n << ",,,," << e << '\n';
    }
  }
  write_file(cfg.out.value_or("ladder.csv"), csv.str());
  out << "ladder over " << res.rungs.size() << " truncations ("
      << (res.fixed_strategies ? "fixed strategies" : "best response") << ")\n"
      << "monotone " << (res.monotone ? "yes" : "no") << " (max defect "
      << fmt(res.max_monotonicity_defect) << ")\n";
  if (res.extrapolated_limit) out << "extrapolated limit " << fmt(*res.extrapolated_limit) << "\n";
  const bool ok = all_ok && (!res.fixed_strategies || res.monotone);
  return ok ? 0 : 1;
}

std::string sibling_path(const std::string& path, const std::string& suffix) {
  const auto dot = path.rfind('.');
  const auto slash = path.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path + suffix;
  return path.substr(0, dot) + suffix;
}

int run_simulate(const RunConfig& cfg, std::ostream& out) {
  const GameModel model = load_model(cfg);
  const Player k = player_of(cfg.player);
  std::optional<std::size_t> n;
  if (!cfg.trunc.empty()) n = cfg.trunc.back();
  const StrategyPair pair = load_strategies(cfg, model, std::nullopt);
  RiskOptions ro;
  ro.horizon = cfg.horizon;
  ro.paths = cfg.paths;
  ro.batches = cfg.batches;
  ro.seed = cfg.seed;
  ro.threads = cfg.threads;
  ro.truncation = n;
  RiskCostEstimate est;
  try {
    est = estimate_risk_cost(model, pair.first, pair.second, k, cfg.start, ro);
  } catch (const ModelError& e) {
    throw ConfigError(e.what());
  }
  const std::string path = cfg.out.value_or("simulate.csv");
  std::ostringstream csv;
  write_batches_csv(csv, est);
  write_file(path, csv.str());
  out << "rho_hat " << fmt(est.rho_hat) << " se " << fmt(est.standard_error) << " (T=" << fmt(est.horizon)
      << ", N=" << est.paths << ", B=" << est.batches << ")\n";
  if (!est.note.empty()) out << "note: " << est.note << "\n";
  bool ok = est.valid;

  std::optional<EigenPair> ep;
  if (n) {
    const auto [trunc, view] = truncate(model, *n);
    EigenOptions eo;
    eo.tol = cfg.tol;
    ep = principal_eigenpair(assemble(view, pair.first, pair.second, k), trunc.anchor_index(), eo);
    out << "eigenvalue on n=" << *n << ": " << fmt(ep->rho) << " (|diff|/se "
        << fmt(std::abs(est.rho_hat - ep->rho) / est.standard_error) << ")\n";
  }
  if (!cfg.hitting_set.empty()) {
    if (!ep) throw ConfigError("--hitting-set needs --trunc for the eigenpair");
    const auto psi = ep->psi;
    const std::size_t size = *n;
    HittingOptions ho;
    ho.target_set = cfg.hitting_set;
    ho.starts = cfg.starts;
    ho.paths = cfg.paths;
    ho.seed = cfg.seed;
    ho.threads = cfg.threads;
    ho.truncation = n;
    const HittingReport rep = hitting_representation_check(
        model, pair.first, pair.second, k,
        [&psi, size](State s) {
          return s >= 1 && s <= static_cast<State>(size) ? psi[static_cast<std::size_t>(s - 1)] : 0.0;
        },
        ep->rho, ho);
    std::ostringstream h;
    write_hitting_csv(h, rep);
    write_file(sibling_path(path, "_hitting.csv"), h.str());
    out << "hitting check " << (rep.pass ? "pass" : "fail") << " over " << rep.starts.size()
        << " start states\n";
    ok = ok && rep.valid && rep.pass;
  }
  return ok ? 0 : 1;
}

int run_verify(const RunConfig& cfg, std::ostream& out) {
  const CheckRange range{cfg.range[0], cfg.range[1]};
  nlohmann::json j;
  bool ok = true;
  if (cfg.builtin) {
    ShopParams params;
    try {
      params = shop_params_from_json(cfg.shop_params);
    } catch (const ModelError& e) {
      throw ConfigError(e.what());
    }
    const GameModel model = shop_model_unchecked(params);
    const ShopReport shop = shop_report(params, range);
    const LyapunovSpec spec = shop_lyapunov_spec(params);
    const AssumptionReport d31 = check_lyapunov_drift(model, spec, range);
    const AssumptionReport d32 = check_cost_drift(model, spec, DriftVariant::unbounded, range);
    const auto boundary = shop_boundary_row(params);
    const AssumptionReport anchor =
        check_anchor_row(model, 1, {2, static_cast<State>(boundary.size()) + 1});
    const std::size_t n = cfg.trunc.empty() ? 30 : cfg.trunc.back();
    const IrreducibilityReport irr = check_irreducibility(model, n);
    const ValidationReport val = validate_model(model, range.last);
    j["shop"] = to_json(shop);
    j["lyapunov_drift"] = to_json(d31);
    j["unbounded_cost_drift"] = to_json(d32);
    j["anchor_row"] = to_json(anchor);
    j["irreducibility"] = to_json(irr);
    j["irreducibility"]["truncation"] = n;
    j["validation"] = {{"ok", val.ok()}, {"issues", val.issues.size()}};
    out << to_text(shop) << to_text(d31) << to_text(d32) << to_text(anchor) << "irreducibility (all pure, n="
        << n << "): " << (irr.irreducible ? "yes" : "no") << "\n";
    ok = shop.pass && d31.holds() && d32.holds() && anchor.holds() && irr.irreducible && val.ok();
  } else {
    const GameModel model = load_model(cfg);
    const std::size_t n = truncation_size(cfg, model);
    const ValidationReport val = validate_model(model, range.last);
    nlohmann::json issues = nlohmann::json::array();
    for (const auto& i : val.issues)
      issues.push_back({{"kind", i.kind}, {"state", i.state}, {"a1", i.a1}, {"a2", i.a2},
                        {"target", i.target ? nlohmann::json(*i.target) : nlohmann::json(nullptr)},
                        {"magnitude", i.magnitude}});
    j["validation"] = {{"ok", val.ok()}, {"issues", issues}};
    const IrreducibilityReport irr = check_irreducibility(model, n);
    j["irreducibility"] = to_json(irr);
    const CheckRange full{1, static_cast<State>(n)};
    const AssumptionReport anchor = check_anchor_row(model, model.anchor(), full);
    j["anchor_row"] = to_json(anchor);
    // Bounded exit rates: W ≡ 1 with C2 = C3 = the largest exit rate.
    LyapunovSpec spec;
    spec.W = [](State) { return 1.0; };
    double max_exit = 0.0;
    for (State i = 1; i <= static_cast<State>(n); ++i)
      for (std::size_t a1 = 0; a1 < model.num_actions(i, Player::first); ++a1)
        for (std::size_t a2 = 0; a2 < model.num_actions(i, Player::second); ++a2)
          max_exit = std::max(max_exit, -model.row(i, a1, a2).diagonal);
    spec.C1 = 1.0;
    spec.C2 = max_exit;
    spec.C3 = max_exit;
    const AssumptionReport d31 = check_lyapunov_drift(model, spec, full);
    j["lyapunov_drift"] = to_json(d31);
    out << "validation: " << (val.ok() ? "ok" : std::to_string(val.issues.size()) + " issues") << "\n"
        << "irreducibility (all pure, n=" << n << "): " << (irr.irreducible ? "yes" : "no") << "\n"
        << to_text(anchor) << to_text(d31);
    ok = val.ok() && irr.irreducible && anchor.holds() && d31.holds();
  }
  j["pass"] = ok;
  write_file(cfg.out.value_or("verify.json"), j.dump(2) + "\n");
  return ok ? 0 : 1;
}

}  // namespace

void apply_config_json(RunConfig& cfg, const nlohmann::json& j, const std::vector<std::string>& locked) {
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (std::find(locked.begin(), locked.end(), key) != locked.end()) continue;
    if (key == "model") cfg.model_path = get_as<std::string>(v, key);
    else if (key == "builtin") cfg.builtin = get_as<std::string>(v, key);
    else if (key == "shop_params") cfg.shop_params = v;
    else if (key == "trunc") cfg.trunc = list_or_csv<std::size_t>(v, key);
    else if (key == "tol") cfg.tol = get_as<double>(v, key);
    else if (key == "eps") cfg.eps = get_as<double>(v, key);
    else if (key == "seed") cfg.seed = get_as<std::uint64_t>(v, key);
    else if (key == "horizon") cfg.horizon = get_as<double>(v, key);
    else if (key == "paths") cfg.paths = get_as<std::size_t>(v, key);
    else if (key == "batches") cfg.batches = get_as<std::size_t>(v, key);
    else if (key == "out") cfg.out = get_as<std::string>(v, key);
    else if (key == "threads") cfg.threads = get_as<std::size_t>(v, key);
    else if (key == "player") cfg.player = get_as<int>(v, key);
    else if (key == "damping") cfg.damping = get_as<double>(v, key);
    else if (key == "max_rounds") cfg.max_rounds = get_as<std::size_t>(v, key);
    else if (key == "schedule") cfg.schedule = get_as<std::string>(v, key);
    else if (key == "start") cfg.start = get_as<State>(v, key);
    else if (key == "strategies") cfg.strategies = get_as<std::string>(v, key);
    else if (key == "fixed") cfg.fixed = get_as<bool>(v, key);
    else if (key == "hitting_set") cfg.hitting_set = list_or_csv<State>(v, key);
    else if (key == "starts") cfg.starts = list_or_csv<State>(v, key);
    else if (key == "range") cfg.range = list_or_csv<State>(v, key);
    else throw ConfigError("unknown config key '" + key + "'");
  }
}

void validate(const RunConfig& cfg) {
  if (cfg.model_path.has_value() == cfg.builtin.has_value())
    throw ConfigError("exactly one of --model and --builtin is required");
  if (cfg.builtin && *cfg.builtin != "shop") throw ConfigError("unknown builtin model '" + *cfg.builtin + "'");
  if (!cfg.builtin && !cfg.shop_params.empty()) throw ConfigError("shop_params needs builtin 'shop'");
  for (std::size_t i = 0; i < cfg.trunc.size(); ++i) {
    if (cfg.trunc[i] == 0) throw ConfigError("truncation sizes must be positive");
    if (i > 0 && cfg.trunc[i] <= cfg.trunc[i - 1])
      throw ConfigError("truncation sizes must be strictly increasing");
  }
  if (!(cfg.tol > 0.0)) throw ConfigError("--tol must be positive");
  if (!(cfg.eps > 0.0)) throw ConfigError("--eps must be positive");
  if (!(cfg.horizon > 0.0)) throw ConfigError("--horizon must be positive");
  if (cfg.paths == 0) throw ConfigError("--paths must be positive");
  if (cfg.command == "simulate" && cfg.batches < 10) throw ConfigError("--batches must be at least 10");
  if (cfg.command == "simulate" && cfg.paths < cfg.batches)
    throw ConfigError("--paths must be at least --batches");
  if (cfg.threads == 0) throw ConfigError("--threads must be positive");
  if (cfg.player != 1 && cfg.player != 2) throw ConfigError("--player must be 1 or 2");
  if (!(cfg.damping > 0.0 && cfg.damping <= 1.0)) throw ConfigError("--damping must lie in (0, 1]");
  if (cfg.max_rounds == 0) throw ConfigError("--max-rounds must be positive");
  if (cfg.schedule != "alternating" && cfg.schedule != "simultaneous")
    throw ConfigError("--schedule must be alternating or simultaneous");
  if (cfg.start < 1) throw ConfigError("--start must be a positive state");
  if (cfg.range.size() != 2 || cfg.range[0] < 1 || cfg.range[1] < cfg.range[0])
    throw ConfigError("--range must be first,last with 1 <= first <= last");
  if (!cfg.hitting_set.empty() && cfg.starts.empty())
    throw ConfigError("--hitting-set needs --starts");
}

RunConfig parse_args(int argc, const char* const* argv) {
  CLI::App app{"Solver for two-player risk-sensitive ergodic stochastic games"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  RunConfig cfg;
  std::optional<std::string> config_path;
  std::string model_path, builtin, out, strategies;
  std::vector<std::size_t> trunc;
  std::vector<State> hitting, starts, range;

  std::map<std::string, CLI::Option*> opts;
  opts["--model"] = app.add_option("--model", model_path, "model file (JSON)");
  opts["--builtin"] = app.add_option("--builtin", builtin, "built-in model: shop");
  opts["--trunc"] = app.add_option("--trunc", trunc, "truncation sizes n1,n2,...")->delimiter(',');
  opts["--tol"] = app.add_option("--tol", cfg.tol, "eigen bracket tolerance");
  opts["--eps"] = app.add_option("--eps", cfg.eps, "Nash epsilon");
  opts["--seed"] = app.add_option("--seed", cfg.seed, "simulation seed");
  opts["--horizon"] = app.add_option("--horizon", cfg.horizon, "simulation horizon T");
  opts["--paths"] = app.add_option("--paths", cfg.paths, "simulated paths");
  opts["--batches"] = app.add_option("--batches", cfg.batches, "batches for the standard error");
  opts["--out"] = app.add_option("--out", out, "output file");
  opts["--threads"] = app.add_option("--threads", cfg.threads, "worker threads");
  opts["--player"] = app.add_option("--player", cfg.player, "player 1 or 2");
  opts["--damping"] = app.add_option("--damping", cfg.damping, "best-response damping in (0, 1]");
  opts["--max-rounds"] = app.add_option("--max-rounds", cfg.max_rounds, "best-response rounds");
  opts["--schedule"] = app.add_option("--schedule", cfg.schedule, "alternating or simultaneous");
  opts["--start"] = app.add_option("--start", cfg.start, "simulation start state");
  opts["--strategies"] = app.add_option("--strategies", strategies, "strategy file (JSON)");
  opts["--fixed"] = app.add_flag("--fixed", cfg.fixed, "ladder: freeze the player's own strategy");
  opts["--hitting-set"] =
      app.add_option("--hitting-set", hitting, "target set for the hitting check")->delimiter(',');
  opts["--starts"] = app.add_option("--starts", starts, "start states for the hitting check")->delimiter(',');
  opts["--range"] = app.add_option("--range", range, "checked state range first,last")->delimiter(',');
  app.add_option("--config", config_path, "JSON config file; flags override it");

  app.add_subcommand("solve", "best-response iteration to a certified equilibrium")->fallthrough();
  app.add_subcommand("ladder", "principal eigenvalues over a list of truncations")->fallthrough();
  app.add_subcommand("simulate", "Monte-Carlo risk-sensitive cost and hitting check")->fallthrough();
  app.add_subcommand("verify", "model validation and sufficient-condition checks")->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    // Options live on the main app, so always show its page.
    throw HelpRequested{app.get_formatter()->make_help(&app, "rsgame", CLI::AppFormatMode::Normal)};
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) throw HelpRequested{app.help()};
    throw ConfigError(e.what());
  }
  cfg.command = app.get_subcommands().front()->get_name();

  std::vector<std::string> locked;
  for (const auto& [flag, opt] : opts)
    if (opt->count() > 0) locked.push_back(kOptionKeys.at(flag));
  auto given = [&](const char* flag) { return opts.at(flag)->count() > 0; };
  if (given("--model")) cfg.model_path = model_path;
  if (given("--builtin")) cfg.builtin = builtin;
  if (given("--out")) cfg.out = out;
  if (given("--strategies")) cfg.strategies = strategies;
  if (given("--trunc")) cfg.trunc = trunc;
  if (given("--hitting-set")) cfg.hitting_set = hitting;
  if (given("--starts")) cfg.starts = starts;
  if (given("--range")) cfg.range = range;

  if (config_path) {
    std::ifstream in(*config_path);
    if (!in) throw ConfigError("cannot open config file " + *config_path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config file " + *config_path + ": " + e.what());
    }
    apply_config_json(cfg, j, locked);
  }
  validate(cfg);
  return cfg;
}

int run(const RunConfig& cfg, std::ostream& out) {
  if (cfg.command == "solve") return run_solve(cfg, out);
  if (cfg.command == "ladder") return run_ladder(cfg, out);
  if (cfg.command == "simulate") return run_simulate(cfg, out);
  if (cfg.command == "verify") return run_verify(cfg, out);
  throw ConfigError("unknown command '" + cfg.command + "'");
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = parse_args(argc, argv);
  } catch (const HelpRequested& h) {
    out << h.text;
    return 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  }
  try {
    return run(cfg, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace rsgame::cli
