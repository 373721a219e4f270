#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "semsearch/core/error.hpp"
#include "semsearch/core/rng.hpp"
#include "semsearch/topo.hpp"

namespace semsearch {

using Matrix = std::vector<std::vector<double>>;

/// Visiting order over the local index set {0..m-1}; order[0] = 0 is the
/// robot. `cost` is the priority-weighted latency of the order.
struct Tour {
  std::vector<int> order;
  double cost = 0.0;
};

/// Sum over tour positions i >= 1 of P(order[i]) times the path length
/// from the robot to order[i] along the tour.
inline double tour_cost(const std::vector<int>& order, const Matrix& d, const std::vector<double>& p) {
  double latency = 0.0;
  double cost = 0.0;
  for (std::size_t i = 1; i < order.size(); ++i) {
    latency += d[order[i - 1]][order[i]];
    cost += p[order[i]] * latency;
  }
  return cost;
}

inline bool is_valid_tour(const std::vector<int>& order, std::size_t m) {
  if (order.size() != m || m == 0 || order[0] != 0) return false;
  std::vector<std::uint8_t> seen(m, 0);
  for (int v : order) {
    if (v < 0 || static_cast<std::size_t>(v) >= m || seen[v]) return false;
    seen[v] = 1;
  }
  return true;
}

/// Global optimum by depth-first enumeration with bound pruning. Every
/// remaining node is reached no earlier than the current latency plus its
/// cheapest incoming edge, which gives an admissible bound for any
/// non-negative matrix.
inline Tour solve_exact(const Matrix& d, const std::vector<double>& p) {
  const int m = static_cast<int>(d.size());
  if (m == 0) throw ValidationError("empty instance");
  if (m > 12) throw ValidationError("exact solver limited to 12 nodes");
  std::vector<double> min_in(m, std::numeric_limits<double>::infinity());
  for (int j = 1; j < m; ++j) {
    for (int i = 0; i < m; ++i) {
      if (i != j) min_in[j] = std::min(min_in[j], d[i][j]);
    }
  }
  Tour best;
  best.cost = std::numeric_limits<double>::infinity();
  std::vector<int> order{0};
  std::vector<std::uint8_t> used(m, 0);
  used[0] = 1;
  const auto search = [&](auto&& self, double latency, double cost) -> void {
    if (static_cast<int>(order.size()) == m) {
      if (cost < best.cost) {
        best.cost = cost;
        best.order = order;
      }
      return;
    }
    double bound = cost;
    for (int v = 1; v < m; ++v) {
      if (!used[v]) bound += p[v] * (latency + min_in[v]);
    }
    if (bound >= best.cost) return;
    const int last = order.back();
    for (int v = 1; v < m; ++v) {
      if (used[v]) continue;
      const double lat = latency + d[last][v];
      used[v] = 1;
      order.push_back(v);
      self(self, lat, cost + p[v] * lat);
      order.pop_back();
      used[v] = 0;
    }
  };
  search(search, 0.0, 0.0);
  // Recompute along the final order so cost matches tour_cost bit for bit.
  best.cost = tour_cost(best.order, d, p);
  return best;
}

struct LnsConfig {
  int max_iters = 200;
  double destroy_fraction_max = 0.3;
  double time_budget_ms = 0.0;  // 0 disables the wall-clock cap
};

namespace detail {

/// Prefix/suffix sums that make insertion and 2-opt deltas O(1).
class TourState {
 public:
  TourState(const Matrix& d, const std::vector<double>& p) : d_(d), p_(p) {}

  void assign(std::vector<int> order) {
    order_ = std::move(order);
    refresh();
  }

  const std::vector<int>& order() const { return order_; }
  double cost() const { return cost_; }

  void refresh() {
    const std::size_t n = order_.size();
    edge_.assign(n + 1, 0.0);
    latency_.assign(n + 1, 0.0);
    suffix_.assign(n + 1, 0.0);
    prefix_e_.assign(n + 1, 0.0);
    prefix_ew_.assign(n + 1, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
      edge_[i] = d_[order_[i - 1]][order_[i]];
      latency_[i] = latency_[i - 1] + edge_[i];
    }
    for (std::size_t i = n; i-- > 1;) suffix_[i] = suffix_[i + 1] + p_[order_[i]];
    cost_ = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
      prefix_e_[i] = prefix_e_[i - 1] + edge_[i];
      prefix_ew_[i] = prefix_ew_[i - 1] + edge_[i] * suffix_[i];
      cost_ += p_[order_[i]] * latency_[i];
    }
  }

  /// Cost change of inserting `node` before position `pos` (pos == size
  /// appends).
  double insertion_delta(int node, std::size_t pos) const {
    const double a = d_[order_[pos - 1]][node];
    const double own = p_[node] * (latency_[pos - 1] + a);
    if (pos == order_.size()) return own;
    const double b = d_[node][order_[pos]];
    return own + (a + b - edge_[pos]) * suffix_[pos];
  }

  void insert(int node, std::size_t pos) {
    order_.insert(order_.begin() + static_cast<std::ptrdiff_t>(pos), node);
    refresh();
  }

  /// Cost change of reversing positions i..j (1 <= i < j < size).
  double reversal_delta(std::size_t i, std::size_t j) const {
    const std::size_t n = order_.size();
    const double w_i = suffix_[i];
    const double w_after = j + 1 < n ? suffix_[j + 1] : 0.0;
    double delta = (d_[order_[i - 1]][order_[j]] - edge_[i]) * w_i;
    delta += (w_after + w_i) * (prefix_e_[j] - prefix_e_[i]) - 2.0 * (prefix_ew_[j] - prefix_ew_[i]);
    if (j + 1 < n) delta += (d_[order_[i]][order_[j + 1]] - edge_[j + 1]) * w_after;
    return delta;
  }

  void reverse(std::size_t i, std::size_t j) {
    std::reverse(order_.begin() + static_cast<std::ptrdiff_t>(i), order_.begin() + static_cast<std::ptrdiff_t>(j) + 1);
    refresh();
  }

 private:
  const Matrix& d_;
  const std::vector<double>& p_;
  std::vector<int> order_;
  std::vector<double> edge_, latency_, suffix_, prefix_e_, prefix_ew_;
  double cost_ = 0.0;
};

inline double improvement_epsilon(double cost) { return 1e-12 * std::max(1.0, std::abs(cost)); }

/// Inserts `nodes` one at a time, always the (node, position) pair with the
/// smallest cost increase; ties go to the lower node index, then position.
inline void cheapest_insertion(TourState& t, std::vector<int> nodes) {
  std::sort(nodes.begin(), nodes.end());
  while (!nodes.empty()) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_k = 0, best_pos = 1;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      for (std::size_t pos = 1; pos <= t.order().size(); ++pos) {
        const double delta = t.insertion_delta(nodes[k], pos);
        if (delta < best) {
          best = delta;
          best_k = k;
          best_pos = pos;
        }
      }
    }
    t.insert(nodes[best_k], best_pos);
    nodes.erase(nodes.begin() + static_cast<std::ptrdiff_t>(best_k));
  }
}

/// Best-improvement 2-opt until no reversal lowers the cost.
inline void two_opt(TourState& t) {
  const std::size_t n = t.order().size();
  if (n < 3) return;
  while (true) {
    double best = -improvement_epsilon(t.cost());
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double delta = t.reversal_delta(i, j);
        if (delta < best) {
          best = delta;
          bi = i;
          bj = j;
        }
      }
    }
    if (bi == 0) return;
    t.reverse(bi, bj);
  }
}

}  // namespace detail

/// Cheapest-insertion construction from the robot node.
inline Tour greedy_tour(const Matrix& d, const std::vector<double>& p) {
  detail::TourState t(d, p);
  t.assign({0});
  std::vector<int> rest(d.size() > 0 ? d.size() - 1 : 0);
  std::iota(rest.begin(), rest.end(), 1);
  detail::cheapest_insertion(t, rest);
  return {t.order(), tour_cost(t.order(), d, p)};
}

/// Large neighborhood search: remove a random share (up to the destroy
/// fraction) of the tour, repair by cheapest insertion, polish with 2-opt,
/// keep strict improvements. Starts from the better of the warm start and
/// the greedy tour.
inline Tour solve_lns(const Matrix& d, const std::vector<double>& p, const LnsConfig& cfg, Rng& rng,
                      const std::optional<std::vector<int>>& warm_start = std::nullopt) {
  const std::size_t m = d.size();
  if (m == 0) throw ValidationError("empty instance");
  if (p.size() != m) throw ValidationError("priority vector size mismatch");
  if (m == 1) return {{0}, 0.0};

  detail::TourState current(d, p);
  const Tour greedy = greedy_tour(d, p);
  current.assign(greedy.order);
  if (warm_start && is_valid_tour(*warm_start, m) && tour_cost(*warm_start, d, p) < greedy.cost) {
    current.assign(*warm_start);
  }
  detail::two_opt(current);
  if (m == 2) return {current.order(), tour_cost(current.order(), d, p)};

  const auto start = std::chrono::steady_clock::now();
  const int max_remove = std::max(1, static_cast<int>(std::floor(cfg.destroy_fraction_max * static_cast<double>(m - 1))));
  detail::TourState trial(d, p);
  for (int it = 0; it < cfg.max_iters; ++it) {
    if (cfg.time_budget_ms > 0.0) {
      const auto elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      if (elapsed > cfg.time_budget_ms) break;
    }
    const int k = static_cast<int>(rng.uniform_int(1, max_remove));
    std::vector<int> positions(m - 1);
    std::iota(positions.begin(), positions.end(), 1);
    rng.shuffle(positions.begin(), positions.end());
    positions.resize(static_cast<std::size_t>(k));
    std::sort(positions.begin(), positions.end());
    std::vector<int> removed;
    std::vector<int> kept;
    kept.reserve(m);
    std::size_t next = 0;
    for (std::size_t pos = 0; pos < m; ++pos) {
      if (next < positions.size() && static_cast<std::size_t>(positions[next]) == pos) {
        removed.push_back(current.order()[pos]);
        ++next;
      } else {
        kept.push_back(current.order()[pos]);
      }
    }
    trial.assign(std::move(kept));
    detail::cheapest_insertion(trial, removed);
    detail::two_opt(trial);
    if (trial.cost() < current.cost() - detail::improvement_epsilon(current.cost())) current.assign(trial.order());
  }
  return {current.order(), tour_cost(current.order(), d, p)};
}

// ---------------------------------------------------------------------------
// Frontier priorities and the execution policy

enum class PlannerMode { learned, coverage, oracle_priorities, linear_oracle, oracle_interventions };

inline std::string to_string(PlannerMode m) {
  switch (m) {
    case PlannerMode::learned: return "learned";
    case PlannerMode::coverage: return "coverage";
    case PlannerMode::oracle_priorities: return "oracle_priorities";
    case PlannerMode::linear_oracle: return "linear_oracle";
    case PlannerMode::oracle_interventions: return "oracle_interventions";
  }
  return "?";
}

inline PlannerMode parse_planner_mode(const std::string& s) {
  for (auto m : {PlannerMode::learned, PlannerMode::coverage, PlannerMode::oracle_priorities, PlannerMode::linear_oracle,
                 PlannerMode::oracle_interventions}) {
    if (s == to_string(m)) return m;
  }
  if (s == "oracle") return PlannerMode::oracle_priorities;
  throw ParseError("unknown planner mode '" + s + "'");
}

/// Whether the mode schedules by semantic priorities (otherwise by
/// coverage gain alone).
inline bool uses_semantics(PlannerMode m) {
  return m == PlannerMode::learned || m == PlannerMode::oracle_priorities || m == PlannerMode::linear_oracle;
}

struct PlannerConfig {
  double alpha = 0.05;
  PlannerMode mode = PlannerMode::learned;
  LnsConfig lns;
  double gain_change_threshold = 0.05;  // relative change that triggers a replan
};

/// (p / p_max + alpha) * gain per frontier; p_max = 0 leaves alpha * gain.
/// An empty `semantic` vector gives the coverage priorities P = gain.
inline std::vector<double> planner_priorities(const std::vector<double>& semantic, const std::vector<double>& gains,
                                              double alpha) {
  if (semantic.empty()) return gains;
  if (semantic.size() != gains.size()) throw ValidationError("priority vector size mismatch");
  const double p_max = *std::max_element(semantic.begin(), semantic.end());
  std::vector<double> out(gains.size());
  for (std::size_t i = 0; i < gains.size(); ++i) {
    const double normalized = p_max > 0.0 ? semantic[i] / p_max : 0.0;
    out[i] = (normalized + alpha) * gains[i];
  }
  return out;
}

/// Outcome of one planning cycle.
struct PlanStep {
  bool replanned = false;
  int subgoal = -1;
  std::vector<int> tour;         // node ids, tour[0] = robot node
  std::vector<int> frontiers;    // node ids the priorities refer to
  std::vector<double> priorities;
  std::vector<double> semantic;  // p per frontier (empty for coverage)
};

/// Replans when the frontier set changes or a gain moves by more than the
/// relative threshold; otherwise keeps the subgoal and advances along the
/// tour once it is reached. An intervention pins the subgoal until reached
/// or gone.
class FrontierPolicy {
 public:
  explicit FrontierPolicy(PlannerConfig cfg = {}) : cfg_(cfg) {}

  const PlannerConfig& config() const { return cfg_; }
  int subgoal() const { return override_ >= 0 ? override_ : subgoal_; }
  const std::vector<int>& tour() const { return tour_; }
  int override_target() const { return override_; }
  std::size_t replans() const { return replans_; }

  /// `semantic_fn` yields p per frontier (empty for coverage scheduling);
  /// it is only evaluated on replans.
  template <class SemanticFn>
  PlanStep plan(const TopoGraph& g, SemanticFn&& semantic_fn, Rng& rng) {
    PlanStep out;
    const int robot = g.robot_node();
    std::vector<int> ids = g.frontier_ids();
    std::vector<double> gains;
    for (int id : ids) gains.push_back(g.node(id).gain);

    if (override_ >= 0 && (override_ == robot || !g.node(override_).frontier)) override_ = -1;

    bool replan = ids != last_frontiers_ || tour_.empty();
    if (!replan) {
      for (std::size_t i = 0; i < ids.size(); ++i) {
        const double before = last_gains_[i];
        if (std::abs(gains[i] - before) > cfg_.gain_change_threshold * std::max(before, 1e-12)) {
          replan = true;
          break;
        }
      }
    }
    if (!replan && robot == subgoal_) {
      // Advance to the next tour entry that is still a frontier.
      while (++cursor_ < tour_.size() && !g.node(tour_[cursor_]).frontier) {
      }
      if (cursor_ < tour_.size()) {
        subgoal_ = tour_[cursor_];
      } else {
        replan = true;
      }
    }
    if (replan && !ids.empty()) {
      out.replanned = true;
      ++replans_;
      std::vector<int> local{robot};
      local.insert(local.end(), ids.begin(), ids.end());
      const auto d = distance_matrix(g, local);
      std::vector<double> semantic = semantic_fn(ids);
      std::vector<double> p = planner_priorities(semantic, gains, cfg_.alpha);
      // With every semantic priority zero the schedule is the coverage one.
      std::vector<double> solve_p = p;
      if (!semantic.empty() && *std::max_element(semantic.begin(), semantic.end()) <= 0.0) solve_p = gains;
      std::vector<double> full{0.0};
      full.insert(full.end(), solve_p.begin(), solve_p.end());
      const auto warm = warm_start(local);
      const Tour t = solve_lns(d, full, cfg_.lns, rng, warm);
      tour_.clear();
      for (int idx : t.order) tour_.push_back(local[idx]);
      cursor_ = 1;
      subgoal_ = tour_.size() > 1 ? tour_[1] : -1;
      last_frontiers_ = ids;
      last_gains_ = gains;
      out.priorities = p;
      out.semantic = std::move(semantic);
    } else if (ids.empty()) {
      last_frontiers_.clear();
      last_gains_.clear();
    }
    out.subgoal = subgoal();
    out.tour = tour_;
    out.frontiers = ids;
    return out;
  }

  /// Pins the subgoal to `frontier` until it is reached or stops being a
  /// frontier.
  void override_subgoal(int frontier) { override_ = frontier; }

  /// Next node on the shortest path to the subgoal.
  int next_hop(const TopoGraph& g) const {
    const int goal = subgoal();
    if (goal < 0) throw Unreachable("no subgoal");
    const auto path = shortest_path(g, g.robot_node(), goal);
    return path.nodes.size() > 1 ? path.nodes[1] : path.nodes[0];
  }

  void reset() {
    tour_.clear();
    last_frontiers_.clear();
    last_gains_.clear();
    subgoal_ = -1;
    override_ = -1;
    cursor_ = 0;
    replans_ = 0;
  }

 private:
  /// Previous tour order restricted to surviving frontiers, as local
  /// indices, with new frontiers appended for the solver to reinsert.
  std::optional<std::vector<int>> warm_start(const std::vector<int>& local) const {
    if (tour_.empty()) return std::nullopt;
    std::vector<int> order{0};
    std::vector<std::uint8_t> placed(local.size(), 0);
    placed[0] = 1;
    for (std::size_t i = 1; i < tour_.size(); ++i) {
      auto it = std::lower_bound(local.begin() + 1, local.end(), tour_[i]);
      if (it != local.end() && *it == tour_[i]) {
        const auto idx = static_cast<int>(it - local.begin());
        if (!placed[idx]) {
          order.push_back(idx);
          placed[idx] = 1;
        }
      }
    }
    if (order.size() == local.size()) return order;
    return std::nullopt;  // new frontiers: greedy construction covers them
  }

  PlannerConfig cfg_;
  std::vector<int> tour_;
  std::vector<int> last_frontiers_;
  std::vector<double> last_gains_;
  std::size_t cursor_ = 0;
  int subgoal_ = -1;
  int override_ = -1;
  std::size_t replans_ = 0;
};

}  // namespace semsearch
