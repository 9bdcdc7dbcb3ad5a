#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "nosignal/game.hpp"
#include "nosignal/learn.hpp"

namespace nosignal {

// Game file:
//   {"n": 2,
//    "backend": {"kind": "expr", "source": "x1*x2"}
//             | {"kind": "mlp", "weights": "w.json" | {...}, "label": 1},
//    "x": [...], "baseline": [...], "bounds": [[lo, hi], ...]?,
//    "transform": "identity" | "logodds"?}
// "expr": "..." at top level is shorthand for an expr backend. Relative
// paths resolve against `base_dir`.

struct BackendSpec {
  std::shared_ptr<const ValueFunction> function;
  nlohmann::json echo;  // normalised description for run manifests
};

/// Throws ConfigError on malformed input, ParseError on bad expressions.
BackendSpec backend_from_json(const nlohmann::json& j, int n, const std::filesystem::path& base_dir);

std::vector<Interval> bounds_from_json(const nlohmann::json& j, std::size_t n);

GameSpec game_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
GameSpec load_game(const std::string& path);
/// Resolved description (backend, x, baseline, bounds, transform).
nlohmann::json game_to_json(const GameSpec& game);

struct LearnJob {
  LearnConfig config;
  GameTemplate game;
  std::vector<std::optional<double>> truth;  // empty when not given
  nlohmann::json echo;
};

// Learn config file: LearnConfig fields plus
//   "game": {"n", "backend" | "expr", "bounds"?, "transform"?},
//   "batch": [[...], ...] | {"corners": K, "seed": s} | {"dataset": "d.csv", "rows": K?},
//   "init": "zero" | "mean" | [...], "truth": [r | null, ...]?
LearnJob learn_job_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
LearnJob load_learn_job(const std::string& path);

LearnConfig learn_config_from_json(const nlohmann::json& j, LearnConfig base = {});
nlohmann::json learn_config_to_json(const LearnConfig& c);

/// Reads and parses a JSON file; ConfigError on any failure.
nlohmann::json read_json_file(const std::string& path);

}  // namespace nosignal
