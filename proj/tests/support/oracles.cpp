#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>

#include "roomgraph/graph.hpp"

namespace roomgraph::testing {

namespace {

std::vector<double> grid(double lo, double hi, int n) {
  std::vector<double> out;
  if (hi < lo) std::swap(lo, hi);
  for (int i = 0; i <= n; ++i) out.push_back(lo + (hi - lo) * i / n);
  return out;
}

}  // namespace

Extents4 oracle_subtree_extents(const SceneGraph& g, const std::string& id, const SolverConfig& c) {
  const ObjectNode& n = *g.find(id);
  const Vec3 H = world_half_extents(n.size, n.rotation);
  double x_lo = -H.x, x_hi = H.x, y_lo = -H.y, y_hi = H.y;
  for (const Edge* e : g.out_edges(id)) {
    const ObjectNode* child = g.find(e->child);
    if (!child) continue;
    const Vec3 h = world_half_extents(child->size, child->rotation);
    const Extents4 sub = oracle_subtree_extents(g, child->id, c);
    std::vector<double> xs, ys;
    switch (e->preposition) {
      case Preposition::kOn:
      case Preposition::kUnder:
        xs = grid(-std::abs(H.x - h.x), std::abs(H.x - h.x), 10);
        ys = grid(-std::abs(H.y - h.y), std::abs(H.y - h.y), 10);
        break;
      case Preposition::kAbove:
        xs = grid(-H.x, H.x, 10);
        ys = grid(-H.y, H.y, 10);
        break;
      default: {
        const Heading d = to_world(lateral_direction(e->preposition), n.rotation);
        const double s = sign_of(d);
        std::vector<double> along;
        if (e->adjacency == Adjacency::kAdjacent) {
          along = {s * (H[axis_of(d)] + h[axis_of(d)])};
        } else {
          along = grid(s * (H[axis_of(d)] + h[axis_of(d)] + c.nonadjacent_min),
                       s * (H[axis_of(d)] + h[axis_of(d)] + c.nonadjacent_max), 10);
        }
        const int b = 1 - axis_of(d);
        std::vector<double> across = grid(-std::abs(H[b] - h[b]), std::abs(H[b] - h[b]), 10);
        xs = axis_of(d) == 0 ? along : across;
        ys = axis_of(d) == 0 ? across : along;
        break;
      }
    }
    for (double dx : xs) {
      x_lo = std::min(x_lo, dx - sub.x_neg);
      x_hi = std::max(x_hi, dx + sub.x_pos);
    }
    for (double dy : ys) {
      y_lo = std::min(y_lo, dy - sub.y_neg);
      y_hi = std::max(y_hi, dy + sub.y_pos);
    }
  }
  return {-x_lo, x_hi, -y_lo, y_hi};
}

namespace {

// Grid values on one axis that keep the node inside the room and satisfy
// every in-edge restricted to that axis.
std::vector<double> axis_candidates(const SceneGraph& g, const ObjectNode& n, const std::map<std::string, Placement>& placed,
                                    const SolverConfig& c, int axis, double step) {
  const Vec3 h = world_half_extents(n.size, n.rotation);
  const double len = axis == 0 ? g.room.width_x : (axis == 1 ? g.room.depth_y : g.room.height_z);
  std::vector<double> out;
  Placement cand{n.id, {0, 0, 0}, n.rotation, h};
  const long steps = std::lround(len / step);
  for (long k = 0; k <= steps; ++k) {
    const double v = k * step;
    if (v - h[axis] < -1e-9 || v + h[axis] > len + 1e-9) continue;
    cand.position[axis] = v;
    if (edges_hold_on_axis(g, n.id, cand, placed, axis, c, 1e-6)) out.push_back(v);
  }
  return out;
}

}  // namespace

std::optional<Box3> oracle_region(const SceneGraph& g, const std::string& id,
                                  const std::map<std::string, Placement>& placed, const SolverConfig& c,
                                  double step) {
  const ObjectNode& n = *g.find(id);
  Box3 out;
  for (int a = 0; a < 3; ++a) {
    auto vals = axis_candidates(g, n, placed, c, a, step);
    if (vals.empty()) return std::nullopt;
    out.min[a] = vals.front();
    out.max[a] = vals.back();
  }
  return out;
}

OracleVerdict oracle_solve(const SceneGraph& input, const SolverConfig& c, double step, int64_t budget,
                           std::map<std::string, Placement>* witness) {
  SceneGraph g = input;
  apply_default_rotations(g);
  std::vector<const ObjectNode*> order;
  for (const std::string& id : topological_order(g)) {
    if (const ObjectNode* n = g.find(id)) order.push_back(n);
  }
  std::map<std::string, Placement> placed;
  int64_t checks = 0;
  bool out_of_budget = false;

  std::function<bool(size_t)> dfs = [&](size_t i) -> bool {
    if (i == order.size()) return true;
    const ObjectNode& n = *order[i];
    const Vec3 h = world_half_extents(n.size, n.rotation);
    const auto xs = axis_candidates(g, n, placed, c, 0, step);
    const auto ys = axis_candidates(g, n, placed, c, 1, step);
    const auto zs = axis_candidates(g, n, placed, c, 2, step);
    for (double x : xs) {
      for (double y : ys) {
        for (double z : zs) {
          if (++checks > budget) {
            out_of_budget = true;
            return false;
          }
          const Placement p{n.id, {x, y, z}, n.rotation, h};
          bool clash = false;
          for (const auto& [id, q] : placed) {
            if (intersection_volume(p.box(), q.box()) > c.contact_tolerance) {
              clash = true;
              break;
            }
          }
          if (clash) continue;
          placed[n.id] = p;
          if (dfs(i + 1)) return true;
          placed.erase(n.id);
          if (out_of_budget) return false;
        }
      }
    }
    return false;
  };

  const bool sat = dfs(0);
  if (sat) {
    if (witness) *witness = placed;
    return OracleVerdict::kSat;
  }
  return out_of_budget ? OracleVerdict::kInconclusive : OracleVerdict::kUnsat;
}

bool oracle_pack(const std::vector<double>& lengths, double face, double step) {
  std::vector<std::pair<double, double>> used;
  std::function<bool(size_t)> place = [&](size_t i) -> bool {
    if (i == lengths.size()) return true;
    const long steps = std::lround(face / step);
    for (long k = 0; k <= steps; ++k) {
      const double start = k * step;
      const double end = start + lengths[i];
      if (end > face + 1e-9) break;
      bool clash = false;
      for (const auto& [a, b] : used) {
        if (start < b - 1e-9 && a < end - 1e-9) clash = true;
      }
      if (clash) continue;
      used.push_back({start, end});
      if (place(i + 1)) return true;
      used.pop_back();
    }
    return false;
  };
  return place(0);
}

}  // namespace roomgraph::testing

namespace roomgraph::testing {

std::vector<Match> oracle_top_k(const AssetIndex& index, const std::vector<double>& query, int k) {
  std::vector<Match> all;
  for (const AssetRecord& r : index.records) {
    double dot = 0.0, qq = 0.0, rr = 0.0;
    for (size_t i = 0; i < query.size(); ++i) {
      dot += query[i] * r.embedding[i];
      qq += query[i] * query[i];
      rr += double(r.embedding[i]) * r.embedding[i];
    }
    all.push_back({r.id, dot / std::sqrt(qq * rr)});
  }
  std::stable_sort(all.begin(), all.end(), [](const Match& a, const Match& b) { return a.similarity > b.similarity; });
  // stable over id-sorted records keeps ties in id order
  all.resize(std::min<size_t>(all.size(), size_t(k)));
  return all;
}

std::vector<AssetRecord> random_asset_records(int count, int dim, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<AssetRecord> out;
  for (int i = 0; i < count; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "asset_%03d", i);
    AssetRecord r{id, {}, {1.0, 1.0, 1.0}, "file://assets/" + std::string(id) + ".glb", id};
    for (int d = 0; d < dim; ++d) r.embedding.push_back(float(g(rng)));
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<double> random_query(int dim, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<double> q(dim);
  for (double& x : q) x = g(rng);
  return q;
}

}  // namespace roomgraph::testing

namespace roomgraph::testing {

std::vector<double> oracle_bradley_terry(const std::vector<std::vector<double>>& wins) {
  const size_t n = wins.size();
  std::vector<double> theta(n, 0.0);
  for (int iter = 0; iter < 200; ++iter) {
    // gradient and Hessian of the log-likelihood; theta[n-1] is pinned at 0
    const size_t m = n - 1;
    std::vector<double> g(m, 0.0);
    std::vector<std::vector<double>> h(m, std::vector<double>(m, 0.0));
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const double games = wins[i][j] + wins[j][i];
        if (games == 0) continue;
        const double p = 1.0 / (1.0 + std::exp(theta[j] - theta[i]));
        if (i < m) g[i] += wins[i][j] - games * p;
        const double w = games * p * (1 - p);
        if (i < m) h[i][i] += w;
        if (i < m && j < m) h[i][j] -= w;
      }
    }
    // solve h * step = g by Gaussian elimination (h is positive definite)
    for (size_t c = 0; c < m; ++c) {
      for (size_t r = c + 1; r < m; ++r) {
        const double f = h[r][c] / h[c][c];
        for (size_t k = c; k < m; ++k) h[r][k] -= f * h[c][k];
        g[r] -= f * g[c];
      }
    }
    std::vector<double> step(m);
    for (size_t c = m; c-- > 0;) {
      double v = g[c];
      for (size_t k = c + 1; k < m; ++k) v -= h[c][k] * step[k];
      step[c] = v / h[c][c];
    }
    double biggest = 0;
    for (size_t i = 0; i < m; ++i) {
      theta[i] += step[i];
      biggest = std::max(biggest, std::abs(step[i]));
    }
    if (biggest < 1e-14) break;
  }
  std::vector<double> s(n);
  double total = 0;
  for (size_t i = 0; i < n; ++i) total += s[i] = std::exp(theta[i]);
  for (double& x : s) x /= total;
  return s;
}

}  // namespace roomgraph::testing
