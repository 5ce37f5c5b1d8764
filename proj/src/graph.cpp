#include "infbranch/graph.hpp"

#include <algorithm>
#include <limits>

namespace infbranch {

SccResult strongly_connected_components(const Digraph& g) {
  constexpr std::size_t kUnvisited = std::numeric_limits<std::size_t>::max();
  const std::size_t n = g.size();
  std::vector<std::size_t> index(n, kUnvisited), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  SccResult out;
  out.component.assign(n, kUnvisited);

  struct Frame {
    std::size_t v;
    std::size_t next_edge;
  };
  std::vector<Frame> call;
  std::size_t counter = 0;

  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != kUnvisited) continue;
    call.push_back({root, 0});
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;

    while (!call.empty()) {
      Frame& f = call.back();
      const std::size_t v = f.v;
      if (f.next_edge < g[v].size()) {
        const std::size_t w = g[v][f.next_edge++];
        if (index[w] == kUnvisited) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          out.component[w] = out.count;
        } while (w != v);
        ++out.count;
      }
      call.pop_back();
      if (!call.empty()) {
        const std::size_t parent = call.back().v;
        low[parent] = std::min(low[parent], low[v]);
      }
    }
  }
  return out;
}

std::vector<std::vector<bool>> condensation_reachability(const Digraph& g, const SccResult& scc) {
  const std::size_t c = scc.count;
  std::vector<std::vector<std::size_t>> succ(c);
  for (std::size_t u = 0; u < g.size(); ++u)
    for (std::size_t v : g[u])
      if (scc.component[u] != scc.component[v]) succ[scc.component[u]].push_back(scc.component[v]);

  // Successors always have smaller ids, so increasing id order is a valid
  // bottom-up order for the closure.
  std::vector<std::vector<bool>> reach(c, std::vector<bool>(c, false));
  for (std::size_t a = 0; a < c; ++a) {
    reach[a][a] = true;
    for (std::size_t b : succ[a])
      for (std::size_t x = 0; x <= b; ++x)
        if (reach[b][x]) reach[a][x] = true;
  }
  return reach;
}

}  // namespace infbranch
