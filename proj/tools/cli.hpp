#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rsgame/model.hpp"

namespace rsgame::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string command;                       // solve, ladder, simulate, verify
  std::optional<std::string> model_path;
  std::optional<std::string> builtin;        // "shop"
  nlohmann::json shop_params = nlohmann::json::object();
  std::vector<std::size_t> trunc;
  double tol = 1e-10;
  double eps = 1e-6;
  std::uint64_t seed = 1;
  double horizon = 200.0;
  std::size_t paths = 100000;
  std::size_t batches = 20;
  std::optional<std::string> out;
  std::size_t threads = 1;
  int player = 1;
  double damping = 1.0;
  std::size_t max_rounds = 200;
  std::string schedule = "alternating";
  State start = 1;
  std::optional<std::string> strategies;     // JSON file with per-state vectors
  bool fixed = false;                        // ladder: freeze the player's own strategy too
  std::vector<State> hitting_set;
  std::vector<State> starts;
  std::vector<State> range = {1, 100};
};

/// Parses flags and the optional --config file; flags win over the file.
/// Throws ConfigError on unknown keys, bad values or a missing model source.
RunConfig parse_args(int argc, const char* const* argv);

/// Applies a config-file object on top of `cfg`, skipping keys listed in `locked`.
void apply_config_json(RunConfig& cfg, const nlohmann::json& j, const std::vector<std::string>& locked = {});

void validate(const RunConfig& cfg);

/// Runs one subcommand. Returns 0 when every requested check passes, 1 on
/// numerical failure (artifacts are still written).
int run(const RunConfig& cfg, std::ostream& out);

/// Full entry point: 2 on configuration errors.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rsgame::cli
