#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <vector>

namespace semsearch {

/// Integer grid coordinate; x is the column, y the row.
struct Cell {
  int x = 0;
  int y = 0;

  friend constexpr auto operator<=>(const Cell&, const Cell&) = default;
  friend constexpr Cell operator+(Cell a, Cell b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Cell operator-(Cell a, Cell b) { return {a.x - b.x, a.y - b.y}; }
};

inline double cell_distance(Cell a, Cell b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

inline long squared_distance(Cell a, Cell b) {
  const long dx = a.x - b.x;
  const long dy = a.y - b.y;
  return dx * dx + dy * dy;
}

template <class T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, T fill = T{})
      : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }

  bool contains(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }

  std::size_t index(Cell c) const { return static_cast<std::size_t>(c.y) * width_ + c.x; }
  Cell cell(std::size_t i) const {
    return {static_cast<int>(i % width_), static_cast<int>(i / width_)};
  }

  T& operator[](Cell c) { return data_[index(c)]; }
  const T& operator[](Cell c) const { return data_[index(c)]; }

  std::vector<T>& raw() { return data_; }
  const std::vector<T>& raw() const { return data_; }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// Visits every cell the segment between the centers of `a` and `b` passes
/// through, in order from `a` to `b`. When the segment crosses a cell corner
/// exactly, both side cells are visited, so a diagonal gap between two
/// blocked cells never counts as open. `visit` returns false to stop early;
/// the function returns false iff it was stopped.
template <class Visit>
bool traverse_line(Cell a, Cell b, Visit&& visit) {
  int x = a.x;
  int y = a.y;
  const int dx = std::abs(b.x - a.x);
  const int dy = std::abs(b.y - a.y);
  const int x_inc = b.x > a.x ? 1 : -1;
  const int y_inc = b.y > a.y ? 1 : -1;
  long error = static_cast<long>(dx) - dy;
  const long ddx = 2L * dx;
  const long ddy = 2L * dy;
  int n = 1 + dx + dy;
  while (n > 0) {
    if (!visit(Cell{x, y})) return false;
    if (error > 0) {
      x += x_inc;
      error -= ddy;
      --n;
    } else if (error < 0) {
      y += y_inc;
      error += ddx;
      --n;
    } else {
      if (n == 1) break;
      if (!visit(Cell{x + x_inc, y})) return false;
      if (!visit(Cell{x, y + y_inc})) return false;
      x += x_inc;
      y += y_inc;
      error += ddx - ddy;
      n -= 2;
    }
  }
  return true;
}

/// Marches a ray of length `length` (cells) from the center of `origin` in
/// direction `angle`, visiting cells after the origin in the order the ray
/// enters them. A cell is visited iff the ray enters it strictly before
/// reaching `length`. Exact corner crossings step diagonally.
template <class Visit>
void march_ray(Cell origin, double angle, double length, Visit&& visit) {
  const double dir_x = std::cos(angle);
  const double dir_y = std::sin(angle);
  int x = origin.x;
  int y = origin.y;
  const int step_x = dir_x > 0 ? 1 : -1;
  const int step_y = dir_y > 0 ? 1 : -1;
  constexpr double inf = std::numeric_limits<double>::infinity();
  const double delta_x = dir_x != 0.0 ? std::abs(1.0 / dir_x) : inf;
  const double delta_y = dir_y != 0.0 ? std::abs(1.0 / dir_y) : inf;
  // The origin sits at the cell center, half a cell from each boundary.
  double t_max_x = 0.5 * delta_x;
  double t_max_y = 0.5 * delta_y;
  while (true) {
    double t;
    if (t_max_x < t_max_y) {
      t = t_max_x;
      x += step_x;
      t_max_x += delta_x;
    } else if (t_max_y < t_max_x) {
      t = t_max_y;
      y += step_y;
      t_max_y += delta_y;
    } else {
      t = t_max_x;
      x += step_x;
      y += step_y;
      t_max_x += delta_x;
      t_max_y += delta_y;
    }
    if (!(t < length)) return;
    if (!visit(Cell{x, y})) return;
  }
}

/// Cells whose center lies within `radius` (cells) of the center of `c`.
template <class Visit>
void for_each_in_disc(Cell c, double radius, int width, int height, Visit&& visit) {
  const int r = static_cast<int>(std::floor(radius));
  const double r2 = radius * radius;
  for (int y = std::max(0, c.y - r); y <= std::min(height - 1, c.y + r); ++y) {
    for (int x = std::max(0, c.x - r); x <= std::min(width - 1, c.x + r); ++x) {
      const double dx = x - c.x;
      const double dy = y - c.y;
      if (dx * dx + dy * dy <= r2) visit(Cell{x, y});
    }
  }
}

}  // namespace semsearch

template <>
struct std::hash<semsearch::Cell> {
  std::size_t operator()(const semsearch::Cell& c) const noexcept {
    return std::hash<long long>{}((static_cast<long long>(c.x) << 32) ^ static_cast<unsigned>(c.y));
  }
};
