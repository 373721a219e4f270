#pragma once

#include <string>
#include <vector>

#include "semsearch/semsearch.hpp"

namespace semsearch::testing {

/// Scenario from ASCII rows: '#' wall, '.' free, 'S' start (free). All free
/// cells form region 0 of the given category; objects are added by callers.
inline Scenario ascii_scenario(const std::vector<std::string>& rows, RoomCategory category = RoomCategory::living_room,
                               std::vector<std::string> classes = GeneratorConfig{}.class_names()) {
  Scenario s;
  s.id = "fixture";
  s.grid_size = static_cast<int>(rows.size());
  s.cell_size = 0.25;
  s.occupancy = Grid<std::uint8_t>(s.grid_size, s.grid_size, 1);
  s.class_names = std::move(classes);
  Region r{0, {}, category};
  for (int y = 0; y < s.grid_size; ++y) {
    for (int x = 0; x < s.grid_size; ++x) {
      const char c = rows[y][x];
      if (c == '#') continue;
      s.occupancy[Cell{x, y}] = 0;
      r.cells.push_back({x, y});
      if (c == 'S') s.start_cell = {x, y};
    }
  }
  s.regions.push_back(r);
  return s;
}

/// Square open room with a one-cell wall border; start in the middle.
inline Scenario open_room(int size) {
  std::vector<std::string> rows(size, std::string(size, '.'));
  for (int i = 0; i < size; ++i) {
    rows[0][i] = rows[size - 1][i] = rows[i][0] = rows[i][size - 1] = '#';
  }
  rows[size / 2][size / 2] = 'S';
  return ascii_scenario(rows);
}

inline void add_object(Scenario& s, const std::string& cls, Cell at) {
  s.objects.push_back({at, s.class_index(cls)});
}

/// Random symmetric metric from points in the unit square scaled by 10.
inline Matrix random_metric(std::size_t m, Rng& rng) {
  std::vector<std::pair<double, double>> pts(m);
  for (auto& p : pts) p = {rng.uniform(0, 10), rng.uniform(0, 10)};
  Matrix d(m, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) d[i][j] = std::hypot(pts[i].first - pts[j].first, pts[i].second - pts[j].second);
  }
  return d;
}

/// Weighted latency written out directly: for every position, its priority times the
/// sum of all edges up to it.
inline double brute_tour_cost(const std::vector<int>& order, const Matrix& d, const std::vector<double>& p) {
  double cost = 0.0;
  for (std::size_t i = 1; i < order.size(); ++i) {
    double latency = 0.0;
    for (std::size_t j = 1; j <= i; ++j) latency += d[order[j - 1]][order[j]];
    cost += p[order[i]] * latency;
  }
  return cost;
}

/// Minimum over all orders starting at 0.
inline double enumerate_best(const Matrix& d, const std::vector<double>& p) {
  std::vector<int> rest(d.size() - 1);
  for (std::size_t i = 0; i < rest.size(); ++i) rest[i] = static_cast<int>(i + 1);
  double best = std::numeric_limits<double>::infinity();
  do {
    std::vector<int> order{0};
    order.insert(order.end(), rest.begin(), rest.end());
    best = std::min(best, brute_tour_cost(order, d, p));
  } while (std::next_permutation(rest.begin(), rest.end()));
  return best;
}

}  // namespace semsearch::testing
