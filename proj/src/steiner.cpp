#include "spf/steiner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace spf {

namespace {

double terminal_scale(const std::vector<Vec2>& pts) {
  double scale = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      scale = std::max(scale, norm(pts[i] - pts[j]));
    }
  }
  return scale;
}

void check_terminals(const std::vector<Vec2>& terminals) {
  if (terminals.size() < 2 || terminals.size() > 6) {
    throw Error(ErrorCode::size, "steiner oracle: supports 2 to 6 terminals");
  }
  for (std::size_t i = 0; i < terminals.size(); ++i) {
    for (std::size_t j = i + 1; j < terminals.size(); ++j) {
      if (norm(terminals[i] - terminals[j]) == 0.0) {
        throw Error(ErrorCode::size, "steiner oracle: terminals must be distinct");
      }
    }
  }
}

/// Minimizer of sum_i w_i |x - p_i| over anchor points (any count >= 1).
Vec2 weighted_fermat(const std::vector<Vec2>& p, const std::vector<double>& w, double scale) {
  const double coincide_tol = 1e-15 * scale;
  const int m = static_cast<int>(p.size());

  // Anchor optimality: the pull of the others must not exceed the local
  // weight (coincident anchors only widen the slack).
  for (int j = 0; j < m; ++j) {
    Vec2 pull{0.0, 0.0};
    double slack = w[j];
    for (int i = 0; i < m; ++i) {
      if (i == j) continue;
      const Vec2 d = p[j] - p[i];
      const double dist = norm(d);
      if (dist <= coincide_tol) {
        slack += w[i];
      } else {
        pull += (w[i] / dist) * d;
      }
    }
    if (norm(pull) <= slack * (1.0 + 1e-14)) return p[j];
  }

  // Interior optimum: Weiszfeld from the weighted centroid.
  double wsum = 0.0;
  Vec2 x{0.0, 0.0};
  for (int i = 0; i < m; ++i) {
    x += w[i] * p[i];
    wsum += w[i];
  }
  x = x / wsum;
  for (int it = 0; it < 120; ++it) {
    double denom = 0.0;
    Vec2 num{0.0, 0.0};
    for (int i = 0; i < m; ++i) {
      double d = norm(x - p[i]);
      d = std::max(d, 1e-18 * scale);
      num += (w[i] / d) * p[i];
      denom += w[i] / d;
    }
    const Vec2 next = num / denom;
    const double move = norm(next - x);
    x = next;
    if (move <= 1e-14 * scale) break;
  }

  // Take whichever of interior candidate and anchors truly minimizes the
  // block; anchors win ties so degenerate blocks settle.
  auto objective = [&](const Vec2& q) {
    double acc = 0.0;
    for (int i = 0; i < m; ++i) acc += w[i] * norm(q - p[i]);
    return acc;
  };
  double best = objective(x);
  for (int j = 0; j < m; ++j) {
    const double fj = objective(p[j]);
    if (fj <= best + 1e-14 * scale) {
      best = fj;
      x = p[j];
    }
  }
  return x;
}

struct Topology {
  std::vector<std::array<int, 2>> edges;  // node id < n: terminal, >= n: branch point
};

void enumerate_recursive(int n, int next_terminal, Topology& topo,
                         std::vector<Topology>& out) {
  if (next_terminal == n) {
    out.push_back(topo);
    return;
  }
  const int new_steiner = n + (next_terminal - 2);
  const std::size_t edge_count = topo.edges.size();
  for (std::size_t e = 0; e < edge_count; ++e) {
    const auto [u, v] = topo.edges[e];
    Topology child = topo;
    child.edges[e] = {u, new_steiner};
    child.edges.push_back({new_steiner, v});
    child.edges.push_back({new_steiner, next_terminal});
    enumerate_recursive(n, next_terminal + 1, child, out);
  }
}

std::vector<Topology> full_topologies(int n) {
  Topology base;
  base.edges.push_back({0, 1});
  if (n == 2) return {base};
  std::vector<Topology> out;
  enumerate_recursive(n, 2, base, out);
  return out;
}

/// Flux forced through each edge when terminal 0 supplies one unit per sink.
std::vector<int> edge_fluxes(const Topology& topo, int n) {
  const int nodes = n + std::max(0, n - 2);
  std::vector<std::vector<std::pair<int, int>>> adj(nodes);  // (neighbor, edge id)
  for (std::size_t e = 0; e < topo.edges.size(); ++e) {
    adj[topo.edges[e][0]].push_back({topo.edges[e][1], static_cast<int>(e)});
    adj[topo.edges[e][1]].push_back({topo.edges[e][0], static_cast<int>(e)});
  }
  std::vector<int> flux(topo.edges.size(), 0);
  // Iterative post-order from the source; sink count below each edge.
  std::vector<int> sink_count(nodes, 0);
  std::vector<int> parent(nodes, -2), parent_edge(nodes, -1), order;
  parent[0] = -1;
  order.push_back(0);
  for (std::size_t head = 0; head < order.size(); ++head) {
    const int u = order[head];
    for (auto [v, e] : adj[u]) {
      if (parent[v] == -2) {
        parent[v] = u;
        parent_edge[v] = e;
        order.push_back(v);
      }
    }
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const int u = *it;
    if (u >= 1 && u < n) sink_count[u] += 1;
    if (parent[u] >= 0) {
      flux[parent_edge[u]] = sink_count[u];
      sink_count[parent[u]] += sink_count[u];
    }
  }
  return flux;
}

std::vector<std::array<int, 2>> canonical_encoding(const Topology& topo) {
  std::vector<std::array<int, 2>> enc = topo.edges;
  for (auto& e : enc) {
    if (e[0] > e[1]) std::swap(e[0], e[1]);
  }
  std::sort(enc.begin(), enc.end());
  return enc;
}

struct OptimizedTopology {
  double weighted_cost = 0.0;
  double plain_length = 0.0;
  std::vector<Vec2> steiner;
};

/// Mutable optimization state: node merges are tracked with a redirect table
/// so contracted branch points inherit their target position.
struct WorkState {
  int n = 0;
  std::vector<Vec2> pos;
  std::vector<int> redirect;

  int find(int a) const {
    while (redirect[a] != a) a = redirect[a];
    return a;
  }
};

double tree_cost(const WorkState& st, const Topology& topo, const std::vector<double>& weights) {
  double acc = 0.0;
  for (std::size_t e = 0; e < topo.edges.size(); ++e) {
    acc += weights[e] * norm(st.pos[st.find(topo.edges[e][0])] - st.pos[st.find(topo.edges[e][1])]);
  }
  return acc;
}

void sweep_blocks(WorkState& st, const Topology& topo, const std::vector<double>& weights,
                  double scale, int max_sweeps) {
  const int nodes = static_cast<int>(st.pos.size());
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double moved = 0.0;
    for (int s = st.n; s < nodes; ++s) {
      if (st.find(s) != s) continue;
      std::vector<Vec2> anchors;
      std::vector<double> w;
      for (std::size_t e = 0; e < topo.edges.size(); ++e) {
        const int a = st.find(topo.edges[e][0]);
        const int b = st.find(topo.edges[e][1]);
        if (a == b) continue;
        if (a == s) {
          anchors.push_back(st.pos[b]);
          w.push_back(weights[e]);
        } else if (b == s) {
          anchors.push_back(st.pos[a]);
          w.push_back(weights[e]);
        }
      }
      if (anchors.empty()) continue;
      const Vec2 next = weighted_fermat(anchors, w, scale);
      moved = std::max(moved, norm(next - st.pos[s]));
      st.pos[s] = next;
    }
    if (moved <= 1e-10) break;
  }
}

OptimizedTopology optimize(const std::vector<Vec2>& terminals, const Topology& topo,
                           const std::vector<double>& weights) {
  const int n = static_cast<int>(terminals.size());
  const int n_steiner = std::max(0, n - 2);
  const int nodes = n + n_steiner;
  const double scale = std::max(terminal_scale(terminals), 1e-30);

  Vec2 centroid{0.0, 0.0};
  for (const Vec2& p : terminals) centroid += p;
  centroid = centroid / n;

  WorkState st;
  st.n = n;
  st.pos.resize(nodes);
  st.redirect.resize(nodes);
  for (int i = 0; i < nodes; ++i) st.redirect[i] = i;
  for (int i = 0; i < n; ++i) st.pos[i] = terminals[i];
  for (int s = 0; s < n_steiner; ++s) {
    // Small deterministic spread so the first sweep sees distinct anchors.
    const double a = 0.7 + 2.399963 * s;
    st.pos[n + s] = centroid + (0.01 * scale * (s + 1) / n_steiner) * Vec2{std::cos(a), std::sin(a)};
  }

  sweep_blocks(st, topo, weights, scale, 200);

  // Degenerate-edge polish: block sweeps only crawl toward configurations
  // where a branch point belongs on another node; contract short edges when
  // that does not raise the cost.
  double current = tree_cost(st, topo, weights);
  bool improved = true;
  while (improved) {
    improved = false;
    for (std::size_t e = 0; e < topo.edges.size() && !improved; ++e) {
      int a = st.find(topo.edges[e][0]);
      int b = st.find(topo.edges[e][1]);
      if (a == b) continue;
      if (a < b) std::swap(a, b);  // contract the higher id; terminals always survive
      if (a < n) continue;         // terminal-terminal edge
      const double len = norm(st.pos[a] - st.pos[b]);
      if (len > 0.05 * scale) continue;
      WorkState trial = st;
      trial.redirect[a] = b;
      sweep_blocks(trial, topo, weights, scale, 100);
      const double trial_cost = tree_cost(trial, topo, weights);
      if (trial_cost <= current + 1e-11 * scale) {
        st = std::move(trial);
        current = trial_cost;
        improved = true;
      }
    }
  }

  OptimizedTopology out;
  out.steiner.resize(n_steiner);
  for (int s = 0; s < n_steiner; ++s) out.steiner[s] = st.pos[st.find(n + s)];
  for (std::size_t e = 0; e < topo.edges.size(); ++e) {
    const int a = st.find(topo.edges[e][0]);
    const int b = st.find(topo.edges[e][1]);
    const double len = norm(st.pos[a] - st.pos[b]);
    out.plain_length += len;
    out.weighted_cost += weights[e] * len;
  }
  return out;
}

/// Contracts coincident nodes and drops zero-length edges for reporting.
SteinerSolution contract(const std::vector<Vec2>& terminals, const Topology& topo,
                         const std::vector<Vec2>& steiner,
                         const std::vector<double>& flux,
                         std::vector<double>* flux_out) {
  const int n = static_cast<int>(terminals.size());
  const int nodes = n + static_cast<int>(steiner.size());
  const double scale = std::max(terminal_scale(terminals), 1e-30);
  const double tol = 1e-8 * scale;

  std::vector<Vec2> pos(terminals);
  pos.insert(pos.end(), steiner.begin(), steiner.end());

  // Union-find; terminals first so merged clusters keep a terminal
  // representative when one is present.
  std::vector<int> rep(nodes);
  std::iota(rep.begin(), rep.end(), 0);
  auto find = [&](int a) {
    while (rep[a] != a) a = rep[a] = rep[rep[a]];
    return a;
  };
  for (int i = 0; i < nodes; ++i) {
    for (int j = i + 1; j < nodes; ++j) {
      if (norm(pos[i] - pos[j]) <= tol) {
        const int ri = find(i), rj = find(j);
        if (ri != rj) rep[std::max(ri, rj)] = std::min(ri, rj);
      }
    }
  }

  // Surviving steiner nodes get compact indices after the terminals.
  std::vector<int> new_id(nodes, -1);
  SteinerSolution sol;
  sol.terminals = terminals;
  for (int i = 0; i < n; ++i) new_id[i] = i;
  for (int i = n; i < nodes; ++i) {
    if (find(i) == i) {
      new_id[i] = n + static_cast<int>(sol.steiner_points.size());
      sol.steiner_points.push_back(pos[i]);
    }
  }

  std::vector<std::array<int, 2>> seen;
  for (std::size_t e = 0; e < topo.edges.size(); ++e) {
    int u = new_id[find(topo.edges[e][0])];
    int v = new_id[find(topo.edges[e][1])];
    if (u == v) continue;
    std::array<int, 2> key{std::min(u, v), std::max(u, v)};
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
    seen.push_back(key);
    sol.edges.push_back(key);
    if (flux_out) flux_out->push_back(flux.empty() ? 0.0 : flux[e]);
    const Vec2 pu = key[0] < n ? sol.terminals[key[0]] : sol.steiner_points[key[0] - n];
    const Vec2 pv = key[1] < n ? sol.terminals[key[1]] : sol.steiner_points[key[1] - n];
    sol.length += norm(pu - pv);
  }
  return sol;
}

struct SearchResult {
  Topology topo;
  OptimizedTopology opt;
  std::vector<double> weights;
  std::vector<int> flux;
};

SearchResult search(const std::vector<Vec2>& terminals, double alpha, bool with_flux) {
  check_terminals(terminals);
  const int n = static_cast<int>(terminals.size());
  const double scale = std::max(terminal_scale(terminals), 1e-30);

  SearchResult best;
  bool have_best = false;
  std::vector<std::array<int, 2>> best_enc;
  for (const Topology& topo : full_topologies(n)) {
    std::vector<int> flux;
    std::vector<double> weights(topo.edges.size(), 1.0);
    if (with_flux) {
      flux = edge_fluxes(topo, n);
      for (std::size_t e = 0; e < weights.size(); ++e) weights[e] = 1.0 + alpha * flux[e];
    }
    OptimizedTopology opt = optimize(terminals, topo, weights);
    const auto enc = canonical_encoding(topo);
    const bool better =
        !have_best || opt.weighted_cost < best.opt.weighted_cost - 1e-12 * scale ||
        (opt.weighted_cost <= best.opt.weighted_cost + 1e-12 * scale && enc < best_enc);
    if (better) {
      best = {topo, std::move(opt), std::move(weights), std::move(flux)};
      best_enc = enc;
      have_best = true;
    }
  }
  return best;
}

}  // namespace

SteinerSolution steiner_exact(const std::vector<Vec2>& terminals) {
  SearchResult best = search(terminals, 0.0, /*with_flux=*/false);
  return contract(terminals, best.topo, best.opt.steiner, {}, nullptr);
}

FluxTreeSolution limit_energy_min_tree(const std::vector<Vec2>& terminals, double alpha) {
  SearchResult best = search(terminals, alpha, /*with_flux=*/true);
  FluxTreeSolution out;
  std::vector<double> flux_d(best.flux.begin(), best.flux.end());
  out.tree = contract(terminals, best.topo, best.opt.steiner, flux_d, &out.edge_flux);
  out.value = best.opt.weighted_cost;
  return out;
}

double limit_energy_min_estimate(const std::vector<Vec2>& terminals, double alpha) {
  return limit_energy_min_tree(terminals, alpha).value;
}

std::vector<std::vector<std::array<int, 2>>> enumerate_full_topologies(int n_terminals) {
  if (n_terminals < 2 || n_terminals > 6) {
    throw Error(ErrorCode::size, "steiner oracle: supports 2 to 6 terminals");
  }
  std::vector<std::vector<std::array<int, 2>>> out;
  for (const Topology& t : full_topologies(n_terminals)) out.push_back(t.edges);
  return out;
}

double optimize_topology(const std::vector<Vec2>& terminals,
                         const std::vector<std::array<int, 2>>& edges,
                         const std::vector<double>& edge_weights,
                         std::vector<Vec2>& steiner_out) {
  Topology topo;
  topo.edges = edges;
  OptimizedTopology opt = optimize(terminals, topo, edge_weights);
  steiner_out = opt.steiner;
  return opt.weighted_cost;
}

}  // namespace spf
