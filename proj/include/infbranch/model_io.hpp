#pragma once

// JSON model files.
//
//   {
//     "name": "case-1",
//     "tail_rule": {"family": "tridiagonal", "a": "1/2", "b": "1/2", "c": "1/3"},
//     "overrides": [
//       {"type": 10, "events": [{"counts": {"10": 4}, "prob": 0.4},
//                               {"counts": {"11": 4}, "prob": 0.2},
//                               {"counts": {}, "prob": 0.4}]}
//     ],
//     "metadata": {"dichotomy_asserted": false, "notes": ""}
//   }
//
// family is "tridiagonal" (a, b, c), "super_diagonal" (b, c) or "explicit"
// (no parameters; overrides must cover types 1..N). Every number may be a JSON
// number or a string "p/q". "overrides" and "metadata" are optional.

#include <filesystem>
#include <string>
#include <string_view>

#include "infbranch/model.hpp"

namespace infbranch {

/// Throws ModelError with "source:line:col: message" for syntax errors and
/// "source: /json/pointer: message" for schema errors.
ModelSpec parse_model(std::string_view text, std::string_view source = "<model>");
ModelSpec load_model(const std::filesystem::path& file);

std::string model_to_json(const ModelSpec& model);

/// Number or "p/q" string.
double parse_rational(std::string_view text);

/// Initial distribution from a CSV file with columns `type,probability`.
/// Missing mass (at most 1) becomes the declared tail deficit.
InitialDistribution load_initial_distribution(const std::filesystem::path& file);

}  // namespace infbranch
