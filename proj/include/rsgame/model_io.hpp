#pragma once

#include <string>

#include <json.hpp>

#include "rsgame/model.hpp"

namespace rsgame {

// Model files are JSON objects in one of two forms.
//
// Finite:
//   {
//     "states":  n,                          // states are 1..n
//     "anchor":  i0,                         // optional, default 1
//     "actions": {"player1": G, "player2": G},
//     "rates":   [[i, a1, a2, j, value], ...],
//     "costs":   [[k, i, a1, a2, value], ...]
//   }
//   G is either an integer m (labels 0..m-1 at every state) or a list with one
//   label list per state. Action indices a1, a2 are 0-based positions in the
//   grid. A rate entry with j == i sets the diagonal; rows without one get the
//   conservative diagonal -(sum of off-diagonals). Missing costs are 0.
//   Duplicate entries are rejected.
//
// Lazy shop:
//   {"lazy": "shop", "anchor": 1, "shop_params": {...}}
//
// Unknown fields are rejected in both forms.

GameModel model_from_json(const nlohmann::json& j);
GameModel load_model_file(const std::string& path);

/// Inverse of model_from_json. Throws ModelError for models without a file form.
nlohmann::json model_to_json(const GameModel& model);

}  // namespace rsgame
