#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "semsearch/core/error.hpp"
#include "semsearch/core/grid.hpp"
#include "semsearch/core/rng.hpp"
#include "semsearch/scenario.hpp"

namespace semsearch {

struct SimConfig {
  double sensing_range = 3.0;  // meters
  double step_bound = 1.0;     // meters; every action is strictly shorter
  int max_steps = 20000;
};

inline void validate(const SimConfig& c, double cell_size) {
  if (!(c.sensing_range > 0.0)) throw ValidationError("sensing range must be positive");
  if (c.step_bound < cell_size * std::sqrt(2.0)) throw ValidationError("step bound below cell diagonal");
  if (c.max_steps <= 0) throw ValidationError("max_steps must be positive");
}

enum class CellState : std::int8_t { occupied = -1, unexplored = 0, free = 1 };

struct ExploredCell {
  Cell cell;
  CellState state;
};

/// Knowledge gained by one observation.
struct BeliefDelta {
  std::vector<ExploredCell> cells;  // newly explored, in row-major order
  std::vector<int> objects;         // newly observed object indices, ascending
};

/// The robot's evolving knowledge of the world.
class WorldBelief {
 public:
  WorldBelief() = default;
  WorldBelief(const Scenario& s)
      : occupancy_(s.grid_size, s.grid_size, CellState::unexplored),
        region_of_(s.grid_size, s.grid_size, -1),
        object_seen_(s.objects.size(), 0),
        robot_cell_(s.start_cell),
        path_log_{s.start_cell},
        cell_size_(s.cell_size),
        truth_regions_(s.region_map()) {}

  const Grid<CellState>& occupancy() const { return occupancy_; }
  CellState state(Cell c) const { return occupancy_.contains(c) ? occupancy_[c] : CellState::occupied; }
  bool known_free(Cell c) const { return state(c) == CellState::free; }
  bool explored(Cell c) const { return state(c) != CellState::unexplored; }

  const std::vector<int>& observed_objects() const { return observed_; }
  bool has_observed(int object_index) const { return object_seen_[object_index] != 0; }

  /// Region id of an explored free cell, -1 otherwise.
  int region_of(Cell c) const { return region_of_.contains(c) ? region_of_[c] : -1; }

  Cell robot_cell() const { return robot_cell_; }
  const std::vector<Cell>& path_log() const { return path_log_; }
  double traveled() const { return traveled_; }
  std::size_t explored_count() const { return explored_count_; }
  double cell_size() const { return cell_size_; }

  void apply(const BeliefDelta& delta) {
    for (const auto& e : delta.cells) {
      if (occupancy_[e.cell] != CellState::unexplored) continue;
      occupancy_[e.cell] = e.state;
      ++explored_count_;
      if (e.state == CellState::free) region_of_[e.cell] = truth_regions_[e.cell];
    }
    for (int o : delta.objects) {
      if (object_seen_[o]) continue;
      object_seen_[o] = 1;
      observed_.insert(std::upper_bound(observed_.begin(), observed_.end(), o), o);
    }
  }

  /// Moves the robot by `action` cells. The move must be strictly shorter
  /// than `step_bound` meters and end on a known-free cell.
  Cell apply_action(Cell action, double step_bound) {
    const double length = std::sqrt(static_cast<double>(squared_distance(action, {0, 0}))) * cell_size_;
    if (!(length < step_bound)) throw IllegalMove("action length " + std::to_string(length) + " m exceeds step bound");
    const Cell dest = robot_cell_ + action;
    if (!known_free(dest)) throw IllegalMove("destination not known to be free");
    if (action == Cell{0, 0}) return robot_cell_;
    robot_cell_ = dest;
    traveled_ += length;
    path_log_.push_back(dest);
    return robot_cell_;
  }

 private:
  Grid<CellState> occupancy_;
  Grid<int> region_of_;
  std::vector<std::uint8_t> object_seen_;
  std::vector<int> observed_;
  Cell robot_cell_;
  std::vector<Cell> path_log_;
  double traveled_ = 0.0;
  std::size_t explored_count_ = 0;
  double cell_size_ = 0.25;
  Grid<int> truth_regions_;
};

/// Observation from `position`: every cell within the sensing range whose
/// center is visible from the robot, and every object on such a cell.
/// Cells already explored are not repeated in the delta.
inline BeliefDelta sense(const Scenario& s, const WorldBelief& belief, Cell position, const SimConfig& cfg) {
  BeliefDelta delta;
  const double radius = cfg.sensing_range / s.cell_size;
  for_each_in_disc(position, radius, s.grid_size, s.grid_size, [&](Cell c) {
    if (belief.explored(c) || !truth_line_of_sight(s, position, c)) return;
    delta.cells.push_back({c, s.is_free(c) ? CellState::free : CellState::occupied});
  });
  const long r2 = static_cast<long>(std::floor(radius * radius));
  for (std::size_t i = 0; i < s.objects.size(); ++i) {
    if (belief.has_observed(static_cast<int>(i))) continue;
    const Cell p = s.objects[i].position;
    if (squared_distance(p, position) > r2) continue;
    if (truth_line_of_sight(s, position, p)) delta.objects.push_back(static_cast<int>(i));
  }
  return delta;
}

enum class Termination { running, found, exhausted };

inline Termination check_termination(const Scenario& s, const WorldBelief& belief, std::size_t frontier_count) {
  const int target = s.target_object();
  if (target >= 0 && belief.has_observed(target)) return Termination::found;
  if (frontier_count == 0) return Termination::exhausted;
  return Termination::running;
}

/// Cells from which `object` is observed: within range and visible.
inline std::vector<Cell> observation_cells(const Scenario& s, int object, const SimConfig& cfg) {
  std::vector<Cell> out;
  const Cell p = s.objects.at(object).position;
  const double radius = cfg.sensing_range / s.cell_size;
  for_each_in_disc(p, radius, s.grid_size, s.grid_size, [&](Cell c) {
    if (s.is_free(c) && truth_line_of_sight(s, c, p)) out.push_back(c);
  });
  return out;
}

/// Shortest free-space path length (meters) from the start to any cell that
/// observes the target; 0 when already observed at the start.
inline double shortest_observation_distance(const Scenario& s, const SimConfig& cfg) {
  const int target = s.target_object();
  if (target < 0) return 0.0;
  const auto dist = free_space_distances(s, s.start_cell);
  double best = std::numeric_limits<double>::infinity();
  for (auto c : observation_cells(s, target, cfg)) best = std::min(best, dist[c]);
  return best;
}

/// Order-independent digest of the belief map and observed objects.
inline std::uint64_t belief_checksum(const Grid<CellState>& occupancy, const std::vector<int>& objects) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto v : occupancy.raw()) {
    h ^= static_cast<std::uint8_t>(static_cast<std::int8_t>(v) + 1);
    h *= 0x100000001b3ULL;
  }
  auto sorted = objects;
  std::sort(sorted.begin(), sorted.end());
  for (int o : sorted) {
    h ^= mix64(static_cast<std::uint64_t>(o));
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace semsearch
