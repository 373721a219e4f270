#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "semsearch/core/error.hpp"
#include "semsearch/core/grid.hpp"
#include "semsearch/core/json_util.hpp"
#include "semsearch/core/rng.hpp"

namespace semsearch {

enum class RoomCategory : std::uint8_t { kitchen, bathroom, living_room, bedroom, corridor };

inline constexpr std::array<const char*, 5> kRoomCategoryNames = {"kitchen", "bathroom", "living_room",
                                                                   "bedroom", "corridor"};

inline std::string to_string(RoomCategory c) { return kRoomCategoryNames[static_cast<int>(c)]; }

inline RoomCategory parse_room_category(const std::string& s) {
  for (std::size_t i = 0; i < kRoomCategoryNames.size(); ++i) {
    if (s == kRoomCategoryNames[i]) return static_cast<RoomCategory>(i);
  }
  throw ParseError("unknown room category '" + s + "'");
}

struct Region {
  int id = 0;
  std::vector<Cell> cells;
  RoomCategory category = RoomCategory::corridor;

  friend bool operator==(const Region&, const Region&) = default;
};

struct SemanticObject {
  Cell position;
  int class_index = 0;

  friend bool operator==(const SemanticObject&, const SemanticObject&) = default;
};

/// Names one object: the `instance`-th object of class `class_index` in the
/// scenario's object list.
struct ObjectRef {
  int class_index = 0;
  int instance = 0;

  friend bool operator==(const ObjectRef&, const ObjectRef&) = default;
};

/// Static ground truth of one search task.
struct Scenario {
  std::string id;
  int grid_size = 0;
  double cell_size = 0.25;
  Grid<std::uint8_t> occupancy;  // 1 = occupied, 0 = free
  std::vector<Region> regions;
  std::vector<SemanticObject> objects;
  Cell start_cell;
  std::optional<ObjectRef> target;  // empty for pure exploration tasks
  std::vector<std::string> class_names;

  bool is_free(Cell c) const { return occupancy.contains(c) && occupancy[c] == 0; }

  int class_index(const std::string& name) const {
    auto it = std::find(class_names.begin(), class_names.end(), name);
    return it == class_names.end() ? -1 : static_cast<int>(it - class_names.begin());
  }

  /// Index into `objects` of the target, or -1 when it does not resolve.
  int target_object() const {
    if (!target) return -1;
    int seen = 0;
    for (std::size_t i = 0; i < objects.size(); ++i) {
      if (objects[i].class_index != target->class_index) continue;
      if (seen++ == target->instance) return static_cast<int>(i);
    }
    return -1;
  }

  /// Region id per cell, -1 outside every region.
  Grid<int> region_map() const {
    Grid<int> map(grid_size, grid_size, -1);
    for (const auto& r : regions) {
      for (auto c : r.cells) {
        if (map.contains(c)) map[c] = r.id;
      }
    }
    return map;
  }

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

// ---------------------------------------------------------------------------
// Free-space queries on the truth grid

inline constexpr std::array<Cell, 4> kNeighbors4 = {Cell{1, 0}, Cell{-1, 0}, Cell{0, 1}, Cell{0, -1}};
inline constexpr std::array<Cell, 8> kNeighbors8 = {Cell{1, 0},  Cell{-1, 0}, Cell{0, 1},  Cell{0, -1},
                                                    Cell{1, 1},  Cell{1, -1}, Cell{-1, 1}, Cell{-1, -1}};

/// 4-connected flood fill over cells accepted by `passable`.
template <class Passable>
Grid<std::uint8_t> flood_fill(int width, int height, Cell seed, Passable&& passable) {
  Grid<std::uint8_t> seen(width, height, 0);
  if (!seen.contains(seed) || !passable(seed)) return seen;
  std::deque<Cell> queue{seed};
  seen[seed] = 1;
  while (!queue.empty()) {
    const Cell c = queue.front();
    queue.pop_front();
    for (auto d : kNeighbors4) {
      const Cell n = c + d;
      if (seen.contains(n) && !seen[n] && passable(n)) {
        seen[n] = 1;
        queue.push_back(n);
      }
    }
  }
  return seen;
}

/// Shortest free-space distances in meters from `source`, over the
/// 8-connected grid with straight steps of one cell and diagonal steps of
/// sqrt(2) cells. A diagonal step needs both side cells free.
inline Grid<double> free_space_distances(const Scenario& s, Cell source) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  Grid<double> dist(s.grid_size, s.grid_size, inf);
  if (!s.is_free(source)) return dist;
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  dist[source] = 0.0;
  open.emplace(0.0, dist.index(source));
  const double diag = std::sqrt(2.0);
  while (!open.empty()) {
    auto [d, i] = open.top();
    open.pop();
    const Cell c = dist.cell(i);
    if (d > dist[c]) continue;
    for (auto step : kNeighbors8) {
      const Cell n = c + step;
      if (!s.is_free(n)) continue;
      const bool diagonal = step.x != 0 && step.y != 0;
      if (diagonal && (!s.is_free(Cell{c.x + step.x, c.y}) || !s.is_free(Cell{c.x, c.y + step.y}))) continue;
      const double nd = d + (diagonal ? diag : 1.0);
      if (nd < dist[n]) {
        dist[n] = nd;
        open.emplace(nd, dist.index(n));
      }
    }
  }
  for (auto& v : dist.raw()) {
    if (v != inf) v *= s.cell_size;
  }
  return dist;
}

/// True iff no occupied truth cell lies strictly between the centers of
/// `from` and `to`.
inline bool truth_line_of_sight(const Scenario& s, Cell from, Cell to) {
  return traverse_line(from, to, [&](Cell c) { return c == from || c == to || s.is_free(c); });
}

// ---------------------------------------------------------------------------
// Validation

inline void validate(const Scenario& s) {
  const auto fail = [&](const std::string& what) { throw ValidationError(what + " (scenario '" + s.id + "')"); };
  if (s.grid_size <= 0) fail("grid_size must be positive");
  if (!(s.cell_size > 0.0)) fail("cell_size must be positive");
  if (s.occupancy.width() != s.grid_size || s.occupancy.height() != s.grid_size) fail("occupancy dimensions");
  {
    std::set<std::string> names(s.class_names.begin(), s.class_names.end());
    if (names.size() != s.class_names.size()) fail("duplicate class name");
  }
  if (!s.is_free(s.start_cell)) fail("start cell not free");

  Grid<int> owner(s.grid_size, s.grid_size, -1);
  for (std::size_t r = 0; r < s.regions.size(); ++r) {
    if (s.regions[r].id != static_cast<int>(r)) fail("region ids must be consecutive from 0");
    for (auto c : s.regions[r].cells) {
      if (!s.occupancy.contains(c)) fail("region cell out of bounds");
      if (!s.is_free(c)) fail("region cell occupied");
      if (owner[c] != -1) fail("regions overlap");
      owner[c] = static_cast<int>(r);
    }
  }
  for (std::size_t i = 0; i < owner.size(); ++i) {
    if (s.occupancy.raw()[i] == 0 && owner.raw()[i] == -1) fail("free cell outside every region");
  }

  for (const auto& o : s.objects) {
    if (o.class_index < 0 || o.class_index >= static_cast<int>(s.class_names.size())) fail("unknown object class");
    if (!s.occupancy.contains(o.position)) fail("object out of bounds");
    if (!s.is_free(o.position)) fail("object in occupied cell");
  }
  if (s.target) {
    if (s.target->class_index < 0 || s.target->class_index >= static_cast<int>(s.class_names.size())) {
      fail("target class unknown");
    }
    if (s.target_object() < 0) fail("target does not resolve to an object");
  }

  const auto reach = flood_fill(s.grid_size, s.grid_size, s.start_cell, [&](Cell c) { return s.is_free(c); });
  for (std::size_t i = 0; i < reach.size(); ++i) {
    if (s.occupancy.raw()[i] == 0 && !reach.raw()[i]) fail("free cell not connected to start");
  }
}

// ---------------------------------------------------------------------------
// Procedural generation

struct RoomSpec {
  RoomCategory category = RoomCategory::kitchen;
  int count = 1;
  int min_side = 10;
  int max_side = 20;
  std::vector<std::string> characteristic;  // one instance each
  std::vector<std::string> extras;          // small objects sampled with replacement
  int min_extras = 0;
  int max_extras = 0;
};

struct GeneratorConfig {
  int grid_size = 100;
  double cell_size = 0.25;
  RoomSpec living_room{RoomCategory::living_room, 1, 28, 40, {"sofa", "tv"}, {"lamp", "plant", "book", "chair"}, 2, 4};
  RoomSpec kitchen{RoomCategory::kitchen, 3, 14, 22, {"fridge", "sink", "countertop"}, {"cup", "plant", "chair"}, 1, 2};
  RoomSpec bathroom{RoomCategory::bathroom, 3, 9, 14, {"toilet", "shower"}, {"towel", "plant"}, 0, 1};
  RoomSpec bedroom{RoomCategory::bedroom, 1, 16, 24, {"bed", "wardrobe"}, {"lamp", "book", "chair"}, 1, 2};
  std::string door_class = "door";
  int door_min_width = 1;
  int door_max_width = 2;
  RoomCategory start_room = RoomCategory::kitchen;
  std::string target_class = "bed";  // empty: no target
  int max_attempts = 400;

  /// Ordered class list: characteristic classes per category, the door
  /// class, then extras in first-seen order.
  std::vector<std::string> class_names() const {
    std::vector<std::string> names;
    const auto add = [&](const std::string& n) {
      if (std::find(names.begin(), names.end(), n) == names.end()) names.push_back(n);
    };
    for (const auto* spec : {&kitchen, &bathroom, &living_room, &bedroom}) {
      for (const auto& n : spec->characteristic) add(n);
    }
    add(door_class);
    for (const auto* spec : {&kitchen, &bathroom, &living_room, &bedroom}) {
      for (const auto& n : spec->extras) add(n);
    }
    return names;
  }
};

inline json to_json(const RoomSpec& r) {
  return json{{"category", to_string(r.category)}, {"count", r.count},
              {"min_side", r.min_side},           {"max_side", r.max_side},
              {"characteristic", r.characteristic}, {"extras", r.extras},
              {"min_extras", r.min_extras},       {"max_extras", r.max_extras}};
}

inline RoomSpec room_spec_from_json(const json& j, RoomSpec fallback, const std::string& ctx) {
  RoomSpec r = fallback;
  r.count = optional_field(j, "count", r.count, ctx);
  r.min_side = optional_field(j, "min_side", r.min_side, ctx);
  r.max_side = optional_field(j, "max_side", r.max_side, ctx);
  r.characteristic = optional_field(j, "characteristic", r.characteristic, ctx);
  r.extras = optional_field(j, "extras", r.extras, ctx);
  r.min_extras = optional_field(j, "min_extras", r.min_extras, ctx);
  r.max_extras = optional_field(j, "max_extras", r.max_extras, ctx);
  if (r.count < 0 || r.min_side < 3 || r.max_side < r.min_side || r.min_extras < 0 || r.max_extras < r.min_extras) {
    throw ValidationError("room spec '" + ctx + "' is inconsistent");
  }
  return r;
}

inline json to_json(const GeneratorConfig& c) {
  return json{{"grid_size", c.grid_size},
              {"cell_size", c.cell_size},
              {"living_room", to_json(c.living_room)},
              {"kitchen", to_json(c.kitchen)},
              {"bathroom", to_json(c.bathroom)},
              {"bedroom", to_json(c.bedroom)},
              {"door_class", c.door_class},
              {"door_min_width", c.door_min_width},
              {"door_max_width", c.door_max_width},
              {"start_room", to_string(c.start_room)},
              {"target_class", c.target_class},
              {"max_attempts", c.max_attempts}};
}

inline GeneratorConfig generator_config_from_json(const json& j) {
  GeneratorConfig c;
  c.grid_size = optional_field(j, "grid_size", c.grid_size);
  c.cell_size = optional_field(j, "cell_size", c.cell_size);
  if (j.contains("living_room")) c.living_room = room_spec_from_json(j["living_room"], c.living_room, "living_room");
  if (j.contains("kitchen")) c.kitchen = room_spec_from_json(j["kitchen"], c.kitchen, "kitchen");
  if (j.contains("bathroom")) c.bathroom = room_spec_from_json(j["bathroom"], c.bathroom, "bathroom");
  if (j.contains("bedroom")) c.bedroom = room_spec_from_json(j["bedroom"], c.bedroom, "bedroom");
  c.door_class = optional_field(j, "door_class", c.door_class);
  c.door_min_width = optional_field(j, "door_min_width", c.door_min_width);
  c.door_max_width = optional_field(j, "door_max_width", c.door_max_width);
  c.start_room = parse_room_category(optional_field<std::string>(j, "start_room", to_string(c.start_room)));
  c.target_class = optional_field(j, "target_class", c.target_class);
  c.max_attempts = optional_field(j, "max_attempts", c.max_attempts);
  if (c.grid_size < 16 || !(c.cell_size > 0) || c.door_min_width < 1 || c.door_max_width < c.door_min_width ||
      c.max_attempts < 1) {
    throw ValidationError("generator config is inconsistent");
  }
  return c;
}

namespace detail {

/// Half-open interior rectangle of a room.
struct Rect {
  int x0, y0, x1, y1;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  bool contains(Cell c) const { return c.x >= x0 && c.x < x1 && c.y >= y0 && c.y < y1; }
  /// Interiors must keep at least one wall cell between them.
  bool clashes(const Rect& o) const {
    return !(x0 >= o.x1 + 1 || o.x0 >= x1 + 1 || y0 >= o.y1 + 1 || o.y0 >= y1 + 1);
  }
};

struct PlacedRoom {
  Rect rect;
  RoomCategory category;
  int parent = -1;
  std::vector<Cell> door;  // wall cells opened towards the parent
};

class FloorplanBuilder {
 public:
  FloorplanBuilder(const GeneratorConfig& cfg, Rng& rng) : cfg_(cfg), rng_(rng) {}

  bool build(std::vector<PlacedRoom>& rooms) {
    rooms.clear();
    const int m = cfg_.grid_size;
    const auto& lr = cfg_.living_room;
    for (int i = 0; i < lr.count; ++i) {
      if (i == 0) {
        const int w = side(lr), h = side(lr);
        if (w > m - 4 || h > m - 4) return false;
        const int x0 = static_cast<int>(rng_.uniform_int(2, m - 2 - w));
        const int y0 = static_cast<int>(rng_.uniform_int(2, m - 2 - h));
        rooms.push_back({{x0, y0, x0 + w, y0 + h}, RoomCategory::living_room, -1, {}});
      } else if (!attach(rooms, lr, {0})) {
        return false;
      }
    }
    const bool has_living = lr.count > 0;
    std::vector<const RoomSpec*> children;
    for (int i = 0; i < cfg_.kitchen.count; ++i) children.push_back(&cfg_.kitchen);
    for (int i = 0; i < cfg_.bedroom.count; ++i) children.push_back(&cfg_.bedroom);
    rng_.shuffle(children.begin(), children.end());
    std::vector<int> living_ids;
    for (std::size_t i = 0; i < rooms.size(); ++i) living_ids.push_back(static_cast<int>(i));
    for (const auto* spec : children) {
      if (!has_living) {
        if (rooms.empty()) {
          const int w = side(*spec), h = side(*spec);
          const int x0 = static_cast<int>(rng_.uniform_int(2, std::max(2, m - 2 - w)));
          const int y0 = static_cast<int>(rng_.uniform_int(2, std::max(2, m - 2 - h)));
          rooms.push_back({{x0, y0, x0 + w, y0 + h}, spec->category, -1, {}});
          continue;
        }
        std::vector<int> all;
        for (std::size_t i = 0; i < rooms.size(); ++i) all.push_back(static_cast<int>(i));
        if (!attach(rooms, *spec, all)) return false;
      } else if (!attach(rooms, *spec, living_ids)) {
        return false;
      }
    }
    std::vector<int> kitchens;
    for (std::size_t i = 0; i < rooms.size(); ++i) {
      if (rooms[i].category == RoomCategory::kitchen) kitchens.push_back(static_cast<int>(i));
    }
    for (int b = 0; b < cfg_.bathroom.count; ++b) {
      if (kitchens.empty()) {
        std::vector<int> all;
        for (std::size_t i = 0; i < rooms.size(); ++i) all.push_back(static_cast<int>(i));
        if (all.empty() || !attach(rooms, cfg_.bathroom, all)) return false;
        continue;
      }
      // Prefer spreading bathrooms across kitchens; fall back to any kitchen.
      std::vector<int> order;
      const int first = kitchens[static_cast<std::size_t>(b) % kitchens.size()];
      order.push_back(first);
      for (int k : kitchens) {
        if (k != first) order.push_back(k);
      }
      bool placed = false;
      for (int k : order) {
        if (attach(rooms, cfg_.bathroom, {k})) {
          placed = true;
          break;
        }
      }
      if (!placed) return false;
    }
    return true;
  }

 private:
  int side(const RoomSpec& s) { return static_cast<int>(rng_.uniform_int(s.min_side, s.max_side)); }

  bool attach(std::vector<PlacedRoom>& rooms, const RoomSpec& spec, const std::vector<int>& parents) {
    const int m = cfg_.grid_size;
    const int min_overlap = cfg_.door_max_width + 2;
    for (int attempt = 0; attempt < 60; ++attempt) {
      const int parent = parents[static_cast<std::size_t>(rng_.uniform_int(0, static_cast<std::int64_t>(parents.size()) - 1))];
      const Rect p = rooms[parent].rect;
      const int w = side(spec), h = side(spec);
      const int dir = static_cast<int>(rng_.uniform_int(0, 3));
      Rect r{};
      if (dir == 0 || dir == 1) {  // east / west
        const int lo = p.y0 - h + min_overlap, hi = p.y1 - min_overlap;
        if (hi < lo) continue;
        const int y0 = static_cast<int>(rng_.uniform_int(lo, hi));
        const int x0 = dir == 0 ? p.x1 + 1 : p.x0 - 1 - w;
        r = {x0, y0, x0 + w, y0 + h};
      } else {  // north / south
        const int lo = p.x0 - w + min_overlap, hi = p.x1 - min_overlap;
        if (hi < lo) continue;
        const int x0 = static_cast<int>(rng_.uniform_int(lo, hi));
        const int y0 = dir == 2 ? p.y1 + 1 : p.y0 - 1 - h;
        r = {x0, y0, x0 + w, y0 + h};
      }
      if (r.x0 < 1 || r.y0 < 1 || r.x1 > m - 1 || r.y1 > m - 1) continue;
      bool clash = false;
      for (const auto& other : rooms) {
        if (r.clashes(other.rect)) {
          clash = true;
          break;
        }
      }
      if (clash) continue;
      // Door along the shared wall, away from the wall ends.
      std::vector<Cell> door;
      const int width = static_cast<int>(rng_.uniform_int(cfg_.door_min_width, cfg_.door_max_width));
      if (dir == 0 || dir == 1) {
        const int lo = std::max(p.y0, r.y0) + 1, hi = std::min(p.y1, r.y1) - 1 - width;
        if (hi < lo) continue;
        const int start = static_cast<int>(rng_.uniform_int(lo, hi));
        const int wall_x = dir == 0 ? p.x1 : p.x0 - 1;
        for (int k = 0; k < width; ++k) door.push_back({wall_x, start + k});
      } else {
        const int lo = std::max(p.x0, r.x0) + 1, hi = std::min(p.x1, r.x1) - 1 - width;
        if (hi < lo) continue;
        const int start = static_cast<int>(rng_.uniform_int(lo, hi));
        const int wall_y = dir == 2 ? p.y1 : p.y0 - 1;
        for (int k = 0; k < width; ++k) door.push_back({start + k, wall_y});
      }
      rooms.push_back({r, spec.category, parent, std::move(door)});
      return true;
    }
    return false;
  }

  const GeneratorConfig& cfg_;
  Rng& rng_;
};

}  // namespace detail

/// Builds a multi-room floorplan: living rooms first, kitchens and bedrooms
/// opening into a living room, bathrooms opening into a kitchen. Door cells
/// belong to the region they open from.
inline Scenario generate_scenario(std::uint64_t seed, const GeneratorConfig& cfg) {
  const auto names = cfg.class_names();
  Rng rng(seed);
  std::vector<detail::PlacedRoom> rooms;
  bool ok = false;
  for (int attempt = 0; attempt < cfg.max_attempts && !ok; ++attempt) ok = detail::FloorplanBuilder(cfg, rng).build(rooms);
  if (!ok) {
    throw GenerationFailed("room packing failed after " + std::to_string(cfg.max_attempts) +
                           " attempts; configuration does not fit the grid");
  }

  Scenario s;
  s.id = "gen-" + std::to_string(seed);
  s.grid_size = cfg.grid_size;
  s.cell_size = cfg.cell_size;
  s.class_names = names;
  s.occupancy = Grid<std::uint8_t>(cfg.grid_size, cfg.grid_size, 1);
  const auto class_of = [&](const std::string& n) {
    return static_cast<int>(std::find(names.begin(), names.end(), n) - names.begin());
  };
  const auto spec_of = [&](RoomCategory c) -> const RoomSpec& {
    switch (c) {
      case RoomCategory::kitchen: return cfg.kitchen;
      case RoomCategory::bathroom: return cfg.bathroom;
      case RoomCategory::living_room: return cfg.living_room;
      default: return cfg.bedroom;
    }
  };

  for (std::size_t i = 0; i < rooms.size(); ++i) {
    Region region;
    region.id = static_cast<int>(i);
    region.category = rooms[i].category;
    const auto& r = rooms[i].rect;
    for (int y = r.y0; y < r.y1; ++y) {
      for (int x = r.x0; x < r.x1; ++x) region.cells.push_back({x, y});
    }
    s.regions.push_back(std::move(region));
  }
  for (const auto& room : rooms) {
    for (auto c : room.door) s.regions[room.parent].cells.push_back(c);
  }
  for (auto& region : s.regions) {
    std::sort(region.cells.begin(), region.cells.end(), [](Cell a, Cell b) {
      return a.y != b.y ? a.y < b.y : a.x < b.x;
    });
    for (auto c : region.cells) s.occupancy[c] = 0;
  }

  Grid<std::uint8_t> taken(cfg.grid_size, cfg.grid_size, 0);
  for (const auto& room : rooms) {
    for (auto c : room.door) taken[c] = 1;
  }
  const auto pick = [&](const detail::Rect& r, bool along_wall) -> std::optional<Cell> {
    std::vector<Cell> options;
    for (int y = r.y0; y < r.y1; ++y) {
      for (int x = r.x0; x < r.x1; ++x) {
        const bool edge = x == r.x0 || y == r.y0 || x == r.x1 - 1 || y == r.y1 - 1;
        if (along_wall && !edge) continue;
        const Cell c{x, y};
        // Keep a clear cell in front of doors.
        bool near_door = false;
        for (auto d : kNeighbors8) {
          if (taken.contains(c + d) && taken[c + d] == 1 && s.is_free(c + d) &&
              !r.contains(c + d)) {
            near_door = true;
          }
        }
        if (!taken[c] && !near_door) options.push_back(c);
      }
    }
    if (options.empty()) return std::nullopt;
    return options[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(options.size()) - 1))];
  };

  for (const auto& room : rooms) {
    if (room.parent >= 0) {
      s.objects.push_back({room.door.front(), class_of(cfg.door_class)});
    }
  }
  for (const auto& room : rooms) {
    const auto& spec = spec_of(room.category);
    for (const auto& name : spec.characteristic) {
      auto c = pick(room.rect, true);
      if (!c) throw GenerationFailed("no space for object '" + name + "'");
      taken[*c] = 2;
      s.objects.push_back({*c, class_of(name)});
    }
    if (spec.extras.empty()) continue;
    const int n_extra = static_cast<int>(rng.uniform_int(spec.min_extras, spec.max_extras));
    for (int k = 0; k < n_extra; ++k) {
      const auto& name =
          spec.extras[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(spec.extras.size()) - 1))];
      auto c = pick(room.rect, false);
      if (!c) break;
      taken[*c] = 2;
      s.objects.push_back({*c, class_of(name)});
    }
  }

  std::vector<int> start_rooms;
  for (std::size_t i = 0; i < rooms.size(); ++i) {
    if (rooms[i].category == cfg.start_room) start_rooms.push_back(static_cast<int>(i));
  }
  if (start_rooms.empty()) start_rooms.push_back(0);
  const auto& start_rect =
      rooms[start_rooms[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(start_rooms.size()) - 1))]].rect;
  const detail::Rect inner{start_rect.x0 + 1, start_rect.y0 + 1, start_rect.x1 - 1, start_rect.y1 - 1};
  auto start = pick(inner, false);
  if (!start) throw GenerationFailed("no free start cell");
  s.start_cell = *start;

  if (!cfg.target_class.empty()) {
    const int ci = class_of(cfg.target_class);
    if (ci >= static_cast<int>(names.size())) throw GenerationFailed("target class '" + cfg.target_class + "' never placed");
    s.target = ObjectRef{ci, 0};
    if (s.target_object() < 0) throw GenerationFailed("target class '" + cfg.target_class + "' never placed");
  }
  validate(s);
  return s;
}

// ---------------------------------------------------------------------------
// File format

inline constexpr int kScenarioFormatVersion = 1;

namespace detail {

inline std::string encode_row(const Grid<std::uint8_t>& g, int y) {
  std::string out;
  int x = 0;
  while (x < g.width()) {
    const auto v = g[Cell{x, y}];
    int run = 0;
    while (x < g.width() && g[Cell{x, y}] == v) {
      ++run;
      ++x;
    }
    out += std::to_string(run);
    out += v ? '#' : '.';
  }
  return out;
}

inline void decode_row(const std::string& row, int y, Grid<std::uint8_t>& g) {
  int x = 0;
  std::size_t i = 0;
  const auto bad = [&](const std::string& why) {
    throw ParseError("field 'occupancy[" + std::to_string(y) + "]': " + why);
  };
  while (i < row.size()) {
    int run = 0;
    std::size_t digits = 0;
    while (i < row.size() && row[i] >= '0' && row[i] <= '9') {
      run = run * 10 + (row[i] - '0');
      ++i;
      ++digits;
    }
    if (digits == 0 || i >= row.size()) bad("malformed run-length encoding");
    const char sym = row[i++];
    if (sym != '#' && sym != '.') bad(std::string("unknown cell symbol '") + sym + "'");
    if (x + run > g.width()) bad("row longer than grid_size");
    for (int k = 0; k < run; ++k) g[Cell{x++, y}] = sym == '#' ? 1 : 0;
  }
  if (x != g.width()) bad("row shorter than grid_size");
}

}  // namespace detail

inline json scenario_to_json(const Scenario& s) {
  json j;
  j["format_version"] = kScenarioFormatVersion;
  j["id"] = s.id;
  j["grid_size"] = s.grid_size;
  j["cell_size"] = s.cell_size;
  j["class_names"] = s.class_names;
  json rows = json::array();
  for (int y = 0; y < s.grid_size; ++y) rows.push_back(detail::encode_row(s.occupancy, y));
  j["occupancy"] = rows;
  json regions = json::array();
  for (const auto& r : s.regions) {
    // Cells as row spans [y, x_begin, x_end).
    json spans = json::array();
    auto cells = r.cells;
    std::sort(cells.begin(), cells.end(), [](Cell a, Cell b) { return a.y != b.y ? a.y < b.y : a.x < b.x; });
    std::size_t i = 0;
    while (i < cells.size()) {
      std::size_t k = i + 1;
      while (k < cells.size() && cells[k].y == cells[i].y && cells[k].x == cells[k - 1].x + 1) ++k;
      spans.push_back(json::array({cells[i].y, cells[i].x, cells[k - 1].x + 1}));
      i = k;
    }
    regions.push_back({{"id", r.id}, {"category", to_string(r.category)}, {"cells", spans}});
  }
  j["regions"] = regions;
  json objects = json::array();
  for (const auto& o : s.objects) {
    const std::string name =
        o.class_index >= 0 && o.class_index < static_cast<int>(s.class_names.size()) ? s.class_names[o.class_index] : "?";
    objects.push_back({{"class", name}, {"position", to_json_cell(o.position)}});
  }
  j["objects"] = objects;
  j["start_cell"] = to_json_cell(s.start_cell);
  if (s.target) {
    j["target"] = {{"class", s.class_names.at(s.target->class_index)}, {"instance", s.target->instance}};
  } else {
    j["target"] = nullptr;
  }
  return j;
}

inline std::string scenario_to_string(const Scenario& s) { return scenario_to_json(s).dump(1) + "\n"; }

/// Parses and validates a scenario document. Structural problems raise
/// ParseError naming the field; broken invariants raise ValidationError.
inline Scenario scenario_from_json(const json& j) {
  const int version = require<int>(j, "format_version");
  if (version != kScenarioFormatVersion) {
    throw ParseError("field 'format_version': unsupported version " + std::to_string(version));
  }
  Scenario s;
  s.id = require<std::string>(j, "id");
  s.grid_size = require<int>(j, "grid_size");
  s.cell_size = require<double>(j, "cell_size");
  if (s.grid_size <= 0 || s.grid_size > 100000) throw ParseError("field 'grid_size': out of range");
  s.class_names = require<std::vector<std::string>>(j, "class_names");
  const auto rows = require<std::vector<std::string>>(j, "occupancy");
  if (static_cast<int>(rows.size()) != s.grid_size) throw ParseError("field 'occupancy': expected grid_size rows");
  s.occupancy = Grid<std::uint8_t>(s.grid_size, s.grid_size, 1);
  for (int y = 0; y < s.grid_size; ++y) detail::decode_row(rows[y], y, s.occupancy);

  const auto& regions = require_node(j, "regions");
  if (!regions.is_array()) throw ParseError("field 'regions': expected an array");
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const std::string ctx = "regions[" + std::to_string(i) + "]";
    Region r;
    r.id = require<int>(regions[i], "id", ctx);
    try {
      r.category = parse_room_category(require<std::string>(regions[i], "category", ctx));
    } catch (const ParseError& e) {
      throw ParseError("field '" + ctx + ".category': " + e.what());
    }
    const auto spans = require<std::vector<std::vector<int>>>(regions[i], "cells", ctx);
    for (const auto& span : spans) {
      if (span.size() != 3 || span[2] < span[1]) throw ParseError("field '" + ctx + ".cells': expected [y, x0, x1]");
      for (int x = span[1]; x < span[2]; ++x) r.cells.push_back({x, span[0]});
    }
    s.regions.push_back(std::move(r));
  }

  const auto& objects = require_node(j, "objects");
  if (!objects.is_array()) throw ParseError("field 'objects': expected an array");
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const std::string ctx = "objects[" + std::to_string(i) + "]";
    const auto name = require<std::string>(objects[i], "class", ctx);
    const int ci = s.class_index(name);
    if (ci < 0) throw ValidationError(ctx + ": unknown class name '" + name + "'");
    s.objects.push_back({require_cell(objects[i], "position", ctx), ci});
  }
  s.start_cell = require_cell(j, "start_cell");
  if (j.contains("target") && !j["target"].is_null()) {
    const auto name = require<std::string>(j["target"], "class", "target");
    const int ci = s.class_index(name);
    if (ci < 0) throw ValidationError("target: unknown class name '" + name + "'");
    s.target = ObjectRef{ci, require<int>(j["target"], "instance", "target")};
  }
  validate(s);
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  return scenario_from_json(parse_document(read_file(path), path));
}

inline void save_scenario(const Scenario& s, const std::string& path) { write_file(path, scenario_to_string(s)); }

}  // namespace semsearch
