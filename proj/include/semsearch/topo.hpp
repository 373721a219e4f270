#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <span>
#include <utility>
#include <vector>

#include "semsearch/core/error.hpp"
#include "semsearch/core/grid.hpp"
#include "semsearch/core/json_util.hpp"
#include "semsearch/core/rng.hpp"
#include "semsearch/sim.hpp"

namespace semsearch {

/// Sampling and frontier parameters. Lengths are in cells.
struct TopoConfig {
  int rays = 36;
  double gain_threshold = 2.0;
  double node_separation = 4.0;
  int max_neighbors = 5;
  double connect_radius = 12.0;
  double range = 12.0;  // coverage-gain ray length; the sensing range in cells
  double recompute_margin = 2.0;
};

struct TopoNode {
  int id = 0;
  Cell cell;
  double gain = 0.0;
  bool frontier = false;
  bool observed_from = false;  // the robot has sensed from this node
};

struct TopoEdge {
  int to = 0;
  double length = 0.0;  // meters
};

struct Frontier {
  int node_id = 0;
  Cell position;
  int region_id = -1;
  double coverage_gain = 0.0;
};

/// Mean number of unexplored cells per ray over `rays` equally spaced rays
/// of length `range` cells. A ray stops at the first known-occupied cell.
inline double coverage_gain(const WorldBelief& belief, Cell position, int rays, double range) {
  if (rays <= 0) return 0.0;
  long total = 0;
  for (int k = 0; k < rays; ++k) {
    const double angle = 2.0 * std::numbers::pi * k / rays;
    march_ray(position, angle, range, [&](Cell c) {
      const auto st = belief.state(c);
      if (st == CellState::occupied) return false;
      if (st == CellState::unexplored) ++total;
      return true;
    });
  }
  return static_cast<double>(total) / rays;
}

/// True iff every cell the segment passes through is known free.
inline bool free_segment(const WorldBelief& belief, Cell a, Cell b) {
  return traverse_line(a, b, [&](Cell c) { return belief.known_free(c); });
}

/// Sparse roadmap over known free space whose nodes double as candidate
/// frontier viewpoints.
class TopoGraph {
 public:
  static constexpr int kBlock = 8;

  TopoGraph() = default;
  TopoGraph(const TopoConfig& cfg, int width, int height, double cell_size)
      : cfg_(cfg),
        cell_size_(cell_size),
        node_at_(width, height, -1),
        pending_mark_(width, height, 0),
        blocks_x_((width + kBlock - 1) / kBlock),
        blocks_y_((height + kBlock - 1) / kBlock),
        block_nodes_(static_cast<std::size_t>(blocks_x_) * blocks_y_) {}

  const TopoConfig& config() const { return cfg_; }
  double cell_size() const { return cell_size_; }
  const std::vector<TopoNode>& nodes() const { return nodes_; }
  const TopoNode& node(int id) const { return nodes_.at(id); }
  const std::vector<TopoEdge>& neighbors(int id) const { return adjacency_.at(id); }
  std::size_t size() const { return nodes_.size(); }
  std::size_t edge_count() const {
    std::size_t n = 0;
    for (const auto& a : adjacency_) n += a.size();
    return n / 2;
  }
  int node_at(Cell c) const { return node_at_.contains(c) ? node_at_[c] : -1; }
  int robot_node() const { return robot_node_; }

  /// Frontier node ids, ascending.
  std::vector<int> frontier_ids() const {
    std::vector<int> out;
    for (const auto& n : nodes_) {
      if (n.frontier) out.push_back(n.id);
    }
    return out;
  }

  std::vector<Frontier> frontiers(const WorldBelief& belief) const {
    std::vector<Frontier> out;
    for (const auto& n : nodes_) {
      if (n.frontier) out.push_back({n.id, n.cell, belief.region_of(n.cell), n.gain});
    }
    return out;
  }

  /// Adds nodes in known free space. `new_cells` are the cells explored since
  /// the previous call; candidates that could not be connected before are
  /// retried. On the first call the robot cell becomes node 0.
  void expand(const WorldBelief& belief, std::span<const ExploredCell> new_cells, Rng& rng) {
    if (nodes_.empty()) {
      if (!belief.known_free(belief.robot_cell())) return;
      robot_node_ = add_node(belief, belief.robot_cell(), {});
    }
    for (const auto& e : new_cells) {
      if (e.state == CellState::free && !pending_mark_[e.cell] && node_at_[e.cell] < 0) {
        pending_mark_[e.cell] = 1;
        pending_.push_back(e.cell);
      }
    }
    if (pending_.empty()) {
      classify();
      return;
    }

    // Stratified order: by block, random within a block.
    const int stratum = std::max(1, static_cast<int>(cfg_.node_separation));
    std::vector<std::pair<std::uint64_t, Cell>> order;
    order.reserve(pending_.size());
    for (auto c : pending_) {
      const std::uint64_t block = static_cast<std::uint64_t>(c.y / stratum) * 100000ULL + c.x / stratum;
      order.emplace_back((block << 20) | (rng.next() & 0xfffff), c);
    }
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first < b.first : a.second < b.second;
    });

    std::vector<Cell> keep;
    for (const auto& [key, c] : order) {
      if (covered(belief, c)) {
        pending_mark_[c] = 0;
        continue;
      }
      auto links = connectable(belief, c);
      if (links.empty()) {
        keep.push_back(c);
        continue;
      }
      pending_mark_[c] = 0;
      add_node(belief, c, links);
    }
    std::sort(keep.begin(), keep.end(), [](Cell a, Cell b) { return a.y != b.y ? a.y < b.y : a.x < b.x; });
    pending_ = std::move(keep);
    classify();
  }

  /// Recomputes the coverage gain of nodes whose rays may reach a changed
  /// cell. Returns true if any frontier flag or gain changed.
  bool update_gains(const WorldBelief& belief, std::span<const ExploredCell> changed) {
    if (changed.empty()) return false;
    std::vector<std::uint8_t> dirty(block_nodes_.size(), 0);
    for (const auto& e : changed) dirty[block_index(e.cell)] = 1;
    const int reach = static_cast<int>(std::ceil((cfg_.range + cfg_.recompute_margin) / kBlock));
    std::vector<std::uint8_t> visit(nodes_.size(), 0);
    for (int by = 0; by < blocks_y_; ++by) {
      for (int bx = 0; bx < blocks_x_; ++bx) {
        if (!dirty[static_cast<std::size_t>(by) * blocks_x_ + bx]) continue;
        for (int ny = std::max(0, by - reach); ny <= std::min(blocks_y_ - 1, by + reach); ++ny) {
          for (int nx = std::max(0, bx - reach); nx <= std::min(blocks_x_ - 1, bx + reach); ++nx) {
            for (int id : block_nodes_[static_cast<std::size_t>(ny) * blocks_x_ + nx]) visit[id] = 1;
          }
        }
      }
    }
    bool changed_any = false;
    for (std::size_t id = 0; id < nodes_.size(); ++id) {
      if (!visit[id] || nodes_[id].observed_from) continue;
      const double g = coverage_gain(belief, nodes_[id].cell, cfg_.rays, cfg_.range);
      if (g != nodes_[id].gain) {
        changed_any = true;
        set_gain(static_cast<int>(id), g);
      }
    }
    classify();
    return changed_any;
  }

  /// The robot has sensed from `id`: nothing new can be observed there.
  void mark_observed(int id) {
    auto& n = nodes_.at(id);
    n.observed_from = true;
    set_gain(id, 0.0);
    classify();
  }

  void set_robot_node(int id) { robot_node_ = id; }

  json snapshot() const {
    json nodes = json::array();
    json edges = json::array();
    for (const auto& n : nodes_) {
      nodes.push_back({{"id", n.id}, {"position", to_json_cell(n.cell)}, {"frontier", n.frontier}, {"gain", n.gain}});
      for (const auto& e : adjacency_[n.id]) {
        if (e.to > n.id) edges.push_back(json::array({n.id, e.to}));
      }
    }
    return {{"nodes", nodes}, {"edges", edges}, {"robot_node", robot_node_}};
  }

 private:
  std::size_t block_index(Cell c) const {
    return static_cast<std::size_t>(c.y / kBlock) * blocks_x_ + c.x / kBlock;
  }

  /// Some existing node within the separation distance sees `c`.
  bool covered(const WorldBelief& belief, Cell c) const {
    const double sep = cfg_.node_separation;
    const int r = static_cast<int>(std::ceil(sep));
    for (int y = std::max(0, c.y - r); y <= std::min(node_at_.height() - 1, c.y + r); ++y) {
      for (int x = std::max(0, c.x - r); x <= std::min(node_at_.width() - 1, c.x + r); ++x) {
        const int id = node_at_[Cell{x, y}];
        if (id < 0) continue;
        if (cell_distance(c, {x, y}) < sep && free_segment(belief, c, {x, y})) return true;
      }
    }
    return false;
  }

  /// Up to k nearest nodes reachable by a straight free segment.
  std::vector<int> connectable(const WorldBelief& belief, Cell c) const {
    const double radius = cfg_.connect_radius;
    const int r = static_cast<int>(std::ceil(radius));
    std::vector<std::pair<long, int>> candidates;
    for (int y = std::max(0, c.y - r); y <= std::min(node_at_.height() - 1, c.y + r); ++y) {
      for (int x = std::max(0, c.x - r); x <= std::min(node_at_.width() - 1, c.x + r); ++x) {
        const int id = node_at_[Cell{x, y}];
        if (id < 0) continue;
        const long d2 = squared_distance(c, {x, y});
        if (d2 <= radius * radius) candidates.emplace_back(d2, id);
      }
    }
    std::sort(candidates.begin(), candidates.end());
    std::vector<int> out;
    for (const auto& [d2, id] : candidates) {
      if (static_cast<int>(out.size()) >= cfg_.max_neighbors) break;
      if (free_segment(belief, c, nodes_[id].cell)) out.push_back(id);
    }
    return out;
  }

  int add_node(const WorldBelief& belief, Cell c, const std::vector<int>& links) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({id, c, 0.0, false, false});
    adjacency_.emplace_back();
    node_at_[c] = id;
    block_nodes_[block_index(c)].push_back(id);
    for (int other : links) {
      const double len = cell_distance(c, nodes_[other].cell) * cell_size_;
      adjacency_[id].push_back({other, len});
      adjacency_[other].push_back({id, len});
    }
    set_gain(id, coverage_gain(belief, c, cfg_.rays, cfg_.range));
    return id;
  }

  void set_gain(int id, double g) {
    auto& n = nodes_[id];
    n.gain = n.observed_from ? 0.0 : g;
  }

  /// Frontiers are nodes whose gain exceeds the threshold. Once none is
  /// left, any node that still sees unexplored cells qualifies, so the
  /// frontier set only empties when nothing observable remains.
  void classify() {
    bool strong = false;
    for (const auto& n : nodes_) strong = strong || n.gain > cfg_.gain_threshold;
    const double cut = strong ? cfg_.gain_threshold : 0.0;
    for (auto& n : nodes_) n.frontier = n.gain > cut;
  }

  TopoConfig cfg_;
  double cell_size_ = 0.25;
  std::vector<TopoNode> nodes_;
  std::vector<std::vector<TopoEdge>> adjacency_;
  Grid<int> node_at_;
  Grid<std::uint8_t> pending_mark_;
  std::vector<Cell> pending_;
  int blocks_x_ = 0;
  int blocks_y_ = 0;
  std::vector<std::vector<int>> block_nodes_;
  int robot_node_ = -1;
};

struct GraphPath {
  std::vector<int> nodes;
  double length = 0.0;
};

/// Single-source shortest path lengths (meters); infinity when unreachable.
inline std::vector<double> dijkstra(const TopoGraph& g, int source) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(g.size(), inf);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  dist.at(source) = 0.0;
  open.emplace(0.0, source);
  while (!open.empty()) {
    auto [d, u] = open.top();
    open.pop();
    if (d > dist[u]) continue;
    for (const auto& e : g.neighbors(u)) {
      const double nd = d + e.length;
      if (nd < dist[e.to]) {
        dist[e.to] = nd;
        open.emplace(nd, e.to);
      }
    }
  }
  return dist;
}

/// A* with the straight-line distance as heuristic. Ties on f are broken
/// by lower node id.
inline GraphPath shortest_path(const TopoGraph& g, int from, int to) {
  if (from < 0 || to < 0 || from >= static_cast<int>(g.size()) || to >= static_cast<int>(g.size())) {
    throw Unreachable("node id out of range");
  }
  if (from == to) return {{from}, 0.0};
  constexpr double inf = std::numeric_limits<double>::infinity();
  const Cell goal = g.node(to).cell;
  const auto h = [&](int id) { return cell_distance(g.node(id).cell, goal) * g.cell_size(); };
  std::vector<double> cost(g.size(), inf);
  std::vector<int> parent(g.size(), -1);
  std::vector<std::uint8_t> closed(g.size(), 0);
  using Item = std::tuple<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  cost[from] = 0.0;
  open.emplace(h(from), from);
  while (!open.empty()) {
    auto [f, u] = open.top();
    open.pop();
    if (closed[u]) continue;
    closed[u] = 1;
    if (u == to) break;
    for (const auto& e : g.neighbors(u)) {
      const double nc = cost[u] + e.length;
      if (nc < cost[e.to]) {
        cost[e.to] = nc;
        parent[e.to] = u;
        open.emplace(nc + h(e.to), e.to);
      }
    }
  }
  if (cost[to] == inf) throw Unreachable("no path between nodes " + std::to_string(from) + " and " + std::to_string(to));
  GraphPath path;
  path.length = cost[to];
  for (int v = to; v != -1; v = parent[v]) path.nodes.push_back(v);
  std::reverse(path.nodes.begin(), path.nodes.end());
  return path;
}

/// Pairwise shortest path lengths between `ids` through the graph.
inline std::vector<std::vector<double>> distance_matrix(const TopoGraph& g, std::span<const int> ids) {
  const std::size_t n = ids.size();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    const auto dist = dijkstra(g, ids[i]);
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (dist[ids[j]] == std::numeric_limits<double>::infinity()) {
        throw Unreachable("graph is disconnected");
      }
      d[i][j] = dist[ids[j]];
    }
  }
  // Symmetrize against floating-point path-order differences.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) d[j][i] = d[i][j];
  }
  return d;
}

}  // namespace semsearch
