#pragma once

#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "semsearch/core/error.hpp"
#include "semsearch/core/json_util.hpp"
#include "semsearch/scenario.hpp"
#include "semsearch/sim.hpp"

namespace semsearch {

struct FeatureConfig {
  double lambda = 0.7;
  double local_radius = 6.0;  // cells; half the sensing range by default
  int novelty_count = 3;      // regions with fewer observed objects are novel
};

/// Frontier features: blended class indicators followed by region novelty.
struct FeatureVector {
  std::vector<double> semantic;  // one entry per class
  double novelty = 0.0;

  std::size_t size() const { return semantic.size() + 1; }

  /// [semantic..., novelty]
  std::vector<double> values() const {
    auto v = semantic;
    v.push_back(novelty);
    return v;
  }

  /// discount * [semantic..., novelty, gain]
  std::vector<double> augmented(double discount, double gain) const {
    auto v = values();
    v.push_back(gain);
    for (auto& x : v) x *= discount;
    return v;
  }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// Class s is 1 iff an observed object of class s lies within `radius`
/// cells of `position` with no known obstacle in between.
inline std::vector<std::uint8_t> local_semantic(const Scenario& s, const WorldBelief& belief, Cell position,
                                                double radius) {
  std::vector<std::uint8_t> out(s.class_names.size(), 0);
  const double r2 = radius * radius;
  for (int o : belief.observed_objects()) {
    const auto& obj = s.objects[o];
    if (out[obj.class_index]) continue;
    if (static_cast<double>(squared_distance(obj.position, position)) > r2) continue;
    const bool clear = traverse_line(position, obj.position, [&](Cell c) {
      return c == position || c == obj.position || belief.state(c) != CellState::occupied;
    });
    if (clear) out[obj.class_index] = 1;
  }
  return out;
}

/// Class s is 1 iff an observed object of class s lies in region `region`.
inline std::vector<std::uint8_t> region_semantic(const Scenario& s, const WorldBelief& belief, int region) {
  std::vector<std::uint8_t> out(s.class_names.size(), 0);
  if (region < 0) return out;
  for (int o : belief.observed_objects()) {
    const auto& obj = s.objects[o];
    if (belief.region_of(obj.position) == region) out[obj.class_index] = 1;
  }
  return out;
}

inline int observed_in_region(const Scenario& s, const WorldBelief& belief, int region) {
  if (region < 0) return 0;
  int n = 0;
  for (int o : belief.observed_objects()) {
    if (belief.region_of(s.objects[o].position) == region) ++n;
  }
  return n;
}

inline FeatureVector feature_vector(const Scenario& s, const WorldBelief& belief, Cell position, int region,
                                    const FeatureConfig& cfg) {
  const auto local = local_semantic(s, belief, position, cfg.local_radius);
  const auto in_region = region_semantic(s, belief, region);
  FeatureVector f;
  f.semantic.resize(s.class_names.size());
  for (std::size_t k = 0; k < f.semantic.size(); ++k) {
    f.semantic[k] = cfg.lambda * in_region[k] + (1.0 - cfg.lambda) * local[k];
  }
  f.novelty = observed_in_region(s, belief, region) < cfg.novelty_count ? 1.0 : 0.0;
  return f;
}

/// Memoizes feature vectors per node. Observed objects only ever grow, so
/// their count identifies the belief state the features depend on.
class FeatureCache {
 public:
  const FeatureVector& get(const Scenario& s, const WorldBelief& belief, int node, Cell position, int region,
                           const FeatureConfig& cfg) {
    const std::size_t stamp = belief.observed_objects().size();
    auto& slot = cache_[node];
    if (!slot.valid || slot.stamp != stamp) {
      slot.value = feature_vector(s, belief, position, region, cfg);
      slot.stamp = stamp;
      slot.valid = true;
    }
    return slot.value;
  }

 private:
  struct Entry {
    FeatureVector value;
    std::size_t stamp = 0;
    bool valid = false;
  };
  std::unordered_map<int, Entry> cache_;
};

/// Linear semantic priority over [classes..., novelty] plus the coverage
/// weight used only by the expert utility.
struct PriorityModel {
  std::vector<std::string> class_names;
  std::vector<double> w;  // size |classes| + 1, entries in [0, 1]
  double w_coverage = 0.0;
  json metadata = json::object();

  std::size_t dimension() const { return w.size(); }

  /// [w..., w_coverage]
  std::vector<double> augmented() const {
    auto v = w;
    v.push_back(w_coverage);
    return v;
  }

  static PriorityModel zeros(const std::vector<std::string>& classes) {
    return {classes, std::vector<double>(classes.size() + 1, 0.0), 0.0, json::object()};
  }

  /// Builds a model from named weights; unnamed classes get zero. The name
  /// "novelty" addresses the region-novelty weight.
  static PriorityModel from_named(const std::vector<std::string>& classes, const std::map<std::string, double>& named,
                                  double w_coverage = 0.0) {
    auto m = zeros(classes);
    for (const auto& [name, value] : named) {
      if (name == "novelty") {
        m.w.back() = value;
        continue;
      }
      auto it = std::find(classes.begin(), classes.end(), name);
      if (it == classes.end()) throw ValidationError("unknown class '" + name + "' in weights");
      m.w[static_cast<std::size_t>(it - classes.begin())] = value;
    }
    m.w_coverage = w_coverage;
    return m;
  }

  void clamp() {
    for (auto& x : w) x = std::clamp(x, 0.0, 1.0);
    w_coverage = std::max(0.0, w_coverage);
  }
};

inline double priority(const PriorityModel& model, const FeatureVector& f) {
  if (model.w.size() != f.size()) throw ValidationError("weight dimension does not match features");
  double p = 0.0;
  for (std::size_t k = 0; k < f.semantic.size(); ++k) p += model.w[k] * f.semantic[k];
  return p + model.w.back() * f.novelty;
}

inline constexpr int kWeightsFormatVersion = 1;

inline json model_to_json(const PriorityModel& m) {
  return {{"format_version", kWeightsFormatVersion},
          {"class_names", m.class_names},
          {"w", m.w},
          {"w_coverage", m.w_coverage},
          {"metadata", m.metadata}};
}

inline PriorityModel model_from_json(const json& j) {
  const int version = require<int>(j, "format_version");
  if (version != kWeightsFormatVersion) throw ParseError("field 'format_version': unsupported version");
  PriorityModel m;
  m.class_names = require<std::vector<std::string>>(j, "class_names");
  m.w = require<std::vector<double>>(j, "w");
  m.w_coverage = require<double>(j, "w_coverage");
  if (j.contains("metadata")) m.metadata = j["metadata"];
  if (m.w.size() != m.class_names.size() + 1) throw ValidationError("weights: expected one weight per class plus novelty");
  return m;
}

inline void save_model(const PriorityModel& m, const std::string& path) { write_file(path, model_to_json(m).dump(2) + "\n"); }

inline PriorityModel load_model(const std::string& path) { return model_from_json(parse_document(read_file(path), path)); }

/// Checks that a model was trained on the same class list as the scenario.
inline void check_compatible(const PriorityModel& m, const Scenario& s) {
  if (m.class_names != s.class_names) {
    throw ValidationError("weights class list does not match scenario '" + s.id + "'");
  }
}

}  // namespace semsearch
