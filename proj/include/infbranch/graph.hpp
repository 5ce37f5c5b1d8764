#pragma once

#include <cstddef>
#include <vector>

namespace infbranch {

/// Directed graph on vertices 0..n-1 as adjacency lists.
using Digraph = std::vector<std::vector<std::size_t>>;

struct SccResult {
  /// component[v] is the component id of v. Ids are in reverse topological
  /// order of the condensation: an edge u -> v implies component[u] >= component[v].
  std::vector<std::size_t> component;
  std::size_t count = 0;
};

/// Tarjan's algorithm, iterative (no recursion depth limit).
SccResult strongly_connected_components(const Digraph& g);

/// reach[a][b]: component b is reachable from component a by a path of length
/// >= 0 in the condensation (so reach[a][a] is always true).
std::vector<std::vector<bool>> condensation_reachability(const Digraph& g, const SccResult& scc);

}  // namespace infbranch
