#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "semsearch/core/error.hpp"
#include "semsearch/core/json_util.hpp"
#include "semsearch/episode.hpp"

namespace semsearch {

inline constexpr int kProtocolVersion = 1;

enum class RunMode { paused, stepping, free_running };

inline std::string to_string(RunMode m) {
  switch (m) {
    case RunMode::paused: return "paused";
    case RunMode::stepping: return "stepping";
    case RunMode::free_running: return "free_running";
  }
  return "?";
}

/// '?' unexplored, '.' free, '#' occupied; runs prefixed by their length
/// when longer than one.
inline std::string encode_belief_row(const Grid<CellState>& g, int y) {
  std::string out;
  const auto symbol = [](CellState s) { return s == CellState::free ? '.' : s == CellState::occupied ? '#' : '?'; };
  int x = 0;
  while (x < g.width()) {
    const char c = symbol(g[Cell{x, y}]);
    int run = 1;
    while (x + run < g.width() && symbol(g[Cell{x + run, y}]) == c) ++run;
    if (run > 1) out += std::to_string(run);
    out += c;
    x += run;
  }
  return out;
}

inline void decode_belief_row(const std::string& row, int y, Grid<CellState>& g) {
  int x = 0;
  std::size_t i = 0;
  while (i < row.size()) {
    int run = 0;
    bool digits = false;
    while (i < row.size() && row[i] >= '0' && row[i] <= '9') {
      run = run * 10 + (row[i++] - '0');
      digits = true;
    }
    if (i >= row.size()) throw ParseError("belief row " + std::to_string(y) + ": dangling run length");
    if (!digits) run = 1;
    const char c = row[i++];
    CellState s;
    if (c == '.') {
      s = CellState::free;
    } else if (c == '#') {
      s = CellState::occupied;
    } else if (c == '?') {
      s = CellState::unexplored;
    } else {
      throw ParseError("belief row " + std::to_string(y) + ": bad symbol");
    }
    for (int k = 0; k < run; ++k) {
      if (x >= g.width()) throw ParseError("belief row " + std::to_string(y) + ": too long");
      g[Cell{x++, y}] = s;
    }
  }
  if (x != g.width()) throw ParseError("belief row " + std::to_string(y) + ": too short");
}

/// Newly explored cells as [y, x0, length, state] spans, state 1 free or -1
/// occupied.
inline json cell_spans(std::vector<ExploredCell> cells) {
  std::sort(cells.begin(), cells.end(), [](const ExploredCell& a, const ExploredCell& b) {
    return a.cell.y != b.cell.y ? a.cell.y < b.cell.y : a.cell.x < b.cell.x;
  });
  json out = json::array();
  std::size_t i = 0;
  while (i < cells.size()) {
    std::size_t j = i + 1;
    while (j < cells.size() && cells[j].cell.y == cells[i].cell.y && cells[j].cell.x == cells[j - 1].cell.x + 1 &&
           cells[j].state == cells[i].state) {
      ++j;
    }
    out.push_back(json::array({cells[i].cell.y, cells[i].cell.x, j - i, static_cast<int>(cells[i].state)}));
    i = j;
  }
  return out;
}

struct SessionConfig {
  EpisodeConfig episode;
  std::string session_id = "session-0";
  std::size_t history = 64;  // revisions whose frontier sets stay addressable
};

/// One live episode driven by commands. Every call returns the messages to
/// broadcast, in order; all state changes go through here.
class Session {
 public:
  Session(Scenario scenario, SessionConfig cfg) : scenario_(std::move(scenario)), cfg_(std::move(cfg)) {
    validate(scenario_);
    episode_ = std::make_unique<Episode>(scenario_, cfg_.episode);
    mark_published();
    remember_frontiers();
  }

  long revision() const { return revision_; }
  RunMode run_mode() const { return mode_; }
  const Episode& episode() const { return *episode_; }
  const std::vector<ChoiceRecord>& human_records() const { return human_records_; }
  std::optional<int> pending_intervention() const { return pending_; }

  /// Full state, sent to every client on connect.
  json snapshot() {
    const auto& b = episode_->belief();
    json rows = json::array();
    for (int y = 0; y < b.occupancy().height(); ++y) rows.push_back(encode_belief_row(b.occupancy(), y));
    json objects = json::array();
    for (int o : b.observed_objects()) objects.push_back(object_json(o));
    return {{"type", "snapshot"},
            {"revision", revision_},
            {"format_version", kProtocolVersion},
            {"session", cfg_.session_id},
            {"scenario_id", scenario_.id},
            {"grid", {{"width", scenario_.grid_size}, {"height", scenario_.grid_size}, {"cell_size", scenario_.cell_size}}},
            {"class_names", scenario_.class_names},
            {"run_mode", to_string(mode_)},
            {"planner_mode", to_string(episode_->config().planner.mode)},
            {"step", episode_->steps()},
            {"robot", to_json_cell(b.robot_cell())},
            {"traveled", b.traveled()},
            {"occupancy", rows},
            {"objects", objects},
            {"graph", episode_->graph().snapshot()},
            {"frontiers", frontier_table()},
            {"tour", episode_->policy().tour()},
            {"subgoal", episode_->policy().subgoal()},
            {"outcome", to_string(episode_->outcome())}};
  }

  /// Parses and applies one command line; malformed input yields an error
  /// message rather than an exception.
  std::vector<json> handle_line(const std::string& line) {
    json cmd;
    try {
      cmd = json::parse(line);
    } catch (const json::parse_error& e) {
      return {error_message("", "ParseError", e.what())};
    }
    return handle(cmd);
  }

  std::vector<json> handle(const json& cmd) {
    const std::string type = cmd.is_object() ? cmd.value("type", std::string()) : std::string();
    try {
      if (type == "pause") {
        mode_ = RunMode::paused;
        ++revision_;
        return {ack(cmd)};
      }
      if (type == "resume") {
        require_running();
        mode_ = RunMode::free_running;
        ++revision_;
        return {ack(cmd)};
      }
      if (type == "step") {
        if (mode_ == RunMode::free_running) throw IllegalCommand("step is not allowed while free running");
        require_running();
        const int n = cmd.value("n", 1);
        if (n <= 0) throw IllegalCommand("step count must be positive");
        mode_ = RunMode::stepping;
        std::vector<json> out{ack(cmd)};
        for (int k = 0; k < n && !episode_->done(); ++k) append(out, advance());
        return out;
      }
      if (type == "reset") {
        cfg_.episode.seed = cmd.value("seed", cfg_.episode.seed);
        episode_ = std::make_unique<Episode>(scenario_, cfg_.episode);
        pending_.reset();
        mode_ = RunMode::paused;
        ++revision_;
        frontier_history_.clear();
        mark_published();
        remember_frontiers();
        return {ack(cmd), snapshot()};
      }
      if (type == "set_mode") {
        const auto mode = parse_planner_mode(require<std::string>(cmd, "mode", "set_mode"));
        EpisodeConfig next = cfg_.episode;
        next.planner.mode = mode;
        if ((mode == PlannerMode::learned || mode == PlannerMode::linear_oracle) && !next.model) {
          throw IllegalCommand("mode " + to_string(mode) + " needs weights");
        }
        cfg_.episode = next;
        episode_->set_planner_mode(mode);
        ++revision_;
        return {ack(cmd)};
      }
      if (type == "intervene") return {intervene(cmd)};
      throw IllegalCommand("unknown command '" + type + "'");
    } catch (const InvalidIntervention& e) {
      return {error_message(type, "InvalidIntervention", e.what())};
    } catch (const IllegalCommand& e) {
      return {error_message(type, "IllegalCommand", e.what())};
    } catch (const Error& e) {
      return {error_message(type, "Error", e.what())};
    } catch (const json::exception& e) {
      return {error_message(type, "ParseError", e.what())};
    }
  }

  /// One step when free running; nothing otherwise.
  std::vector<json> tick() {
    if (mode_ != RunMode::free_running || episode_->done()) return {};
    return advance();
  }

 private:
  void require_running() const {
    if (episode_->done()) throw IllegalCommand("episode has ended");
  }

  static void append(std::vector<json>& out, std::vector<json> more) {
    for (auto& m : more) out.push_back(std::move(m));
  }

  json ack(const json& cmd) const {
    json a = {{"type", "ack"}, {"revision", revision_}, {"command", cmd.value("type", std::string())},
              {"run_mode", to_string(mode_)}};
    if (cmd.contains("id")) a["id"] = cmd["id"];
    return a;
  }

  json error_message(const std::string& command, const std::string& kind, const std::string& message) const {
    return {{"type", "error"}, {"revision", revision_}, {"command", command}, {"error", kind}, {"message", message}};
  }

  json object_json(int o) const {
    const auto& obj = scenario_.objects[o];
    return {{"index", o}, {"class", scenario_.class_names[obj.class_index]}, {"position", to_json_cell(obj.position)}};
  }

  /// Frontiers with features, semantic priority p (when available) and the
  /// planner priority P.
  json frontier_table() {
    const auto cands = episode_->candidates();
    std::vector<int> ids;
    std::vector<double> gains;
    for (const auto& c : cands) {
      ids.push_back(c.frontier_id);
      gains.push_back(c.gain);
    }
    std::vector<double> p;
    const auto& ec = episode_->config();
    if (uses_semantics(ec.planner.mode)) {
      p = episode_->semantic_priorities(ids);
    } else if (ec.model) {
      for (const auto& c : cands) p.push_back(priority(*ec.model, c.features));
    }
    const auto P = ids.empty() ? std::vector<double>{}
                               : planner_priorities(uses_semantics(ec.planner.mode) ? p : std::vector<double>{}, gains,
                                                    ec.planner.alpha);
    json out = json::array();
    for (std::size_t i = 0; i < cands.size(); ++i) {
      json f = {{"id", cands[i].frontier_id},
                {"position", to_json_cell(cands[i].position)},
                {"region", cands[i].region},
                {"gain", cands[i].gain},
                {"distance", cands[i].distance},
                {"phi", cands[i].features.values()},
                {"P", P[i]}};
      f["p"] = p.empty() ? json(nullptr) : json(p[i]);
      out.push_back(std::move(f));
    }
    return out;
  }

  void mark_published() {
    published_.clear();
    for (const auto& n : episode_->graph().nodes()) published_[n.id] = {n.frontier, n.gain};
  }

  void remember_frontiers() {
    frontier_history_.emplace_back(revision_, std::make_pair(episode_->steps(), episode_->candidates()));
    while (frontier_history_.size() > cfg_.history) frontier_history_.pop_front();
  }

  const std::pair<int, std::vector<Candidate>>* frontiers_at(long revision) const {
    // The frontier set named by a revision is the latest one published at
    // or before it.
    const std::pair<int, std::vector<Candidate>>* found = nullptr;
    for (const auto& [rev, entry] : frontier_history_) {
      if (rev <= revision) found = &entry;
    }
    return found;
  }

  json intervene(const json& cmd) {
    const int id = require<int>(cmd, "frontier_id", "intervene");
    const long rev = cmd.value("revision", revision_);
    if (episode_->done()) throw IllegalCommand("episode has ended");
    if (rev > revision_) throw InvalidIntervention("revision " + std::to_string(rev) + " is in the future", revision_);
    const auto* seen = frontiers_at(rev);
    if (!seen) throw InvalidIntervention("revision " + std::to_string(rev) + " is too old", revision_);
    const auto& [timestep, cands] = *seen;
    const bool listed = std::any_of(cands.begin(), cands.end(), [&](const Candidate& c) { return c.frontier_id == id; });
    const auto current = episode_->graph().frontier_ids();
    const bool alive = std::binary_search(current.begin(), current.end(), id);
    if (!listed || !alive) {
      throw InvalidIntervention("node " + std::to_string(id) + " is not a current frontier", revision_);
    }
    bool recorded = false;
    if (cands.size() >= 2) {
      human_records_.push_back(record_choice(id, cands, cfg_.episode.record_params, scenario_, timestep,
                                             Provenance::human, rev));
      recorded = true;
    }
    pending_ = id;
    ++revision_;
    json a = ack(cmd);
    a["frontier_id"] = id;
    a["recorded"] = recorded;
    a["referenced_revision"] = rev;
    return a;
  }

  std::vector<json> advance() {
    std::vector<json> out;
    if (pending_) {
      const auto current = episode_->graph().frontier_ids();
      if (std::binary_search(current.begin(), current.end(), *pending_)) episode_->pin_subgoal(*pending_);
      pending_.reset();
    }
    const auto info = episode_->step();
    ++revision_;
    remember_frontiers();
    json objects = json::array();
    for (int o : info.new_objects) objects.push_back(object_json(o));
    json nodes = json::array();
    const auto& g = episode_->graph();
    json edges = json::array();
    for (const auto& n : g.nodes()) {
      const auto known = published_.find(n.id);
      const bool changed = known == published_.end() || known->second.first != n.frontier || known->second.second != n.gain;
      if (known == published_.end()) {
        for (const auto& e : g.neighbors(n.id)) {
          if (e.to < n.id) edges.push_back(json::array({e.to, n.id}));
        }
      }
      if (changed) {
        nodes.push_back({{"id", n.id}, {"position", to_json_cell(n.cell)}, {"frontier", n.frontier}, {"gain", n.gain}});
        published_[n.id] = {n.frontier, n.gain};
      }
    }
    const auto& b = episode_->belief();
    out.push_back({{"type", "delta"},
                   {"revision", revision_},
                   {"step", info.step},
                   {"robot", to_json_cell(b.robot_cell())},
                   {"traveled", b.traveled()},
                   {"cells", cell_spans(info.new_cells)},
                   {"objects", objects},
                   {"nodes", nodes},
                   {"edges", edges},
                   {"robot_node", g.robot_node()},
                   {"frontiers", frontier_table()}});
    json tour = {{"type", "tour"},
                 {"revision", revision_},
                 {"replanned", info.plan.replanned},
                 {"tour", info.plan.tour},
                 {"subgoal", info.plan.subgoal}};
    if (info.intervention) tour["oracle_intervention"] = *info.intervention;
    out.push_back(std::move(tour));
    if (episode_->done()) {
      mode_ = RunMode::paused;
      out.push_back({{"type", "episode_end"},
                     {"revision", revision_},
                     {"outcome", to_string(episode_->outcome())},
                     {"steps", episode_->steps()},
                     {"traveled", b.traveled()},
                     {"human_interventions", human_records_.size()},
                     {"checksum", hex64(belief_checksum(b.occupancy(), b.observed_objects()))}});
    }
    return out;
  }

  Scenario scenario_;
  SessionConfig cfg_;
  std::unique_ptr<Episode> episode_;
  long revision_ = 0;
  RunMode mode_ = RunMode::paused;
  std::optional<int> pending_;
  std::vector<ChoiceRecord> human_records_;
  std::deque<std::pair<long, std::pair<int, std::vector<Candidate>>>> frontier_history_;
  std::map<int, std::pair<bool, double>> published_;
};

/// Rebuilds the belief map and observed objects from a message stream.
class BeliefReplay {
 public:
  void apply(const json& msg) {
    const auto type = require<std::string>(msg, "type", "message");
    if (type == "snapshot") {
      const auto& grid = require_node(msg, "grid", "snapshot");
      const int w = require<int>(grid, "width", "snapshot.grid");
      const int h = require<int>(grid, "height", "snapshot.grid");
      occupancy_ = Grid<CellState>(w, h, CellState::unexplored);
      const auto rows = require<std::vector<std::string>>(msg, "occupancy", "snapshot");
      if (static_cast<int>(rows.size()) != h) throw ParseError("snapshot: wrong number of occupancy rows");
      for (int y = 0; y < h; ++y) decode_belief_row(rows[y], y, occupancy_);
      objects_.clear();
      for (const auto& o : require_node(msg, "objects", "snapshot")) objects_.push_back(require<int>(o, "index", "object"));
    } else if (type == "delta") {
      for (const auto& span : require_node(msg, "cells", "delta")) {
        const int y = span[0].get<int>(), x0 = span[1].get<int>(), n = span[2].get<int>();
        const auto state = static_cast<CellState>(span[3].get<int>());
        for (int k = 0; k < n; ++k) occupancy_[Cell{x0 + k, y}] = state;
      }
      for (const auto& o : require_node(msg, "objects", "delta")) objects_.push_back(require<int>(o, "index", "object"));
    } else if (type == "episode_end") {
      final_checksum_ = require<std::string>(msg, "checksum", "episode_end");
    }
  }

  std::string checksum() const { return hex64(belief_checksum(occupancy_, objects_)); }
  const std::optional<std::string>& final_checksum() const { return final_checksum_; }
  const Grid<CellState>& occupancy() const { return occupancy_; }

 private:
  Grid<CellState> occupancy_;
  std::vector<int> objects_;
  std::optional<std::string> final_checksum_;
};

}  // namespace semsearch
