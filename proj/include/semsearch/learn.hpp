#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "semsearch/core/error.hpp"
#include "semsearch/core/json_util.hpp"
#include "semsearch/core/rng.hpp"
#include "semsearch/expert.hpp"
#include "semsearch/semantics.hpp"

namespace semsearch {

struct TrainConfig {
  int epochs = 2000;
  double learning_rate = 0.01;
  double beta = 10.0;
  double rho = 0.1;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  bool clamp = true;

  void validate() const {
    if (epochs <= 0) throw ValidationError("epochs must be positive");
    if (!(learning_rate >= 0.0)) throw ValidationError("learning rate must be non-negative");
    if (!(rho >= 0.0 && rho < 0.5)) throw ValidationError("training rho must lie in [0, 0.5)");
  }
};

/// Feature differences phi~(chosen) - phi~(other), one per expanded pair.
inline std::vector<std::vector<double>> expand_pairs(const std::vector<ChoiceRecord>& records) {
  std::vector<std::vector<double>> out;
  for (const auto& r : records) {
    const auto chosen = r.chosen_index();
    const auto& fe = r.candidates[chosen].features;
    for (std::size_t i = 0; i < r.candidates.size(); ++i) {
      if (i == chosen) continue;
      const auto& f = r.candidates[i].features;
      std::vector<double> diff(fe.size());
      for (std::size_t k = 0; k < fe.size(); ++k) diff[k] = fe[k] - f[k];
      out.push_back(std::move(diff));
    }
  }
  return out;
}

namespace detail {

/// -log sigma_rho(x), stable for rho = 0.
inline double neg_log_sigma_rho(double x, double rho) {
  if (rho == 0.0) return x > 0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
  return -std::log(sigma_rho(x, rho));
}

/// d/dx of -log sigma_rho(x).
inline double neg_log_sigma_rho_slope(double x, double rho) {
  const double s = logistic(x);
  if (rho == 0.0) return -(1.0 - s);
  return -(1.0 - 2.0 * rho) * s * (1.0 - s) / sigma_rho(x, rho);
}

}  // namespace detail

inline double nll_pairs(const std::vector<std::vector<double>>& pairs, const std::vector<double>& w, double beta,
                        double rho) {
  double total = 0.0;
  for (const auto& d : pairs) total += detail::neg_log_sigma_rho(beta * dot(w, d), rho);
  return total;
}

inline std::vector<double> grad_nll_pairs(const std::vector<std::vector<double>>& pairs, const std::vector<double>& w,
                                          double beta, double rho) {
  std::vector<double> g(w.size(), 0.0);
  for (const auto& d : pairs) {
    const double slope = detail::neg_log_sigma_rho_slope(beta * dot(w, d), rho) * beta;
    for (std::size_t k = 0; k < g.size(); ++k) g[k] += slope * d[k];
  }
  return g;
}

/// Negative log-likelihood of every expanded pair under the choice model.
inline double nll(const std::vector<ChoiceRecord>& records, const std::vector<double>& w, double beta, double rho) {
  return nll_pairs(expand_pairs(records), w, beta, rho);
}

inline std::vector<double> grad_nll(const std::vector<ChoiceRecord>& records, const std::vector<double>& w, double beta,
                                    double rho) {
  if (records.empty()) return std::vector<double>(w.size(), 0.0);
  return grad_nll_pairs(expand_pairs(records), w, beta, rho);
}

struct TrainResult {
  PriorityModel model;
  std::vector<double> loss_curve;  // loss before each epoch, then the final loss
  std::uint64_t seed = 0;
};

inline std::uint64_t dataset_hash(const std::vector<ChoiceRecord>& records) { return fnv1a(dataset_to_string(records)); }

/// Adam on the full batch from a uniform [0,1] initialization. Weights are
/// projected back onto w in [0,1], w_coverage >= 0 after each step when
/// clamping. Returns the lowest-loss iterate.
inline TrainResult train(const std::vector<ChoiceRecord>& records, const TrainConfig& cfg, std::uint64_t seed,
                         const std::vector<std::string>& class_names) {
  cfg.validate();
  const auto pairs = expand_pairs(records);
  if (pairs.empty()) throw DegenerateDataset("dataset has no record with two or more candidates");
  const std::size_t dim = pairs.front().size();
  if (dim != class_names.size() + 2) {
    throw ValidationError("feature dimension " + std::to_string(dim) + " does not match " +
                          std::to_string(class_names.size()) + " classes");
  }
  for (const auto& p : pairs) {
    if (p.size() != dim) throw ValidationError("inconsistent feature dimensions in dataset");
  }

  Rng rng(mix64(seed) ^ 0x7261696eULL);
  std::vector<double> w(dim);
  for (auto& x : w) x = rng.uniform();

  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::vector<double> m(dim, 0.0), v(dim, 0.0);
  TrainResult result;
  result.seed = seed;
  double best_loss = std::numeric_limits<double>::infinity();
  std::vector<double> best = w;
  double b1t = 1.0, b2t = 1.0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double loss = nll_pairs(pairs, w, cfg.beta, cfg.rho);
    result.loss_curve.push_back(loss);
    if (loss < best_loss) {
      best_loss = loss;
      best = w;
    }
    const auto g = grad_nll_pairs(pairs, w, cfg.beta, cfg.rho);
    b1t *= beta1;
    b2t *= beta2;
    for (std::size_t k = 0; k < dim; ++k) {
      m[k] = beta1 * m[k] + (1 - beta1) * g[k];
      v[k] = beta2 * v[k] + (1 - beta2) * g[k] * g[k];
      const double m_hat = m[k] / (1 - b1t);
      const double v_hat = v[k] / (1 - b2t);
      w[k] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + eps);
    }
    if (cfg.clamp) {
      for (std::size_t k = 0; k + 1 < dim; ++k) w[k] = std::clamp(w[k], 0.0, 1.0);
      w.back() = std::max(0.0, w.back());
    }
  }
  const double final_loss = nll_pairs(pairs, w, cfg.beta, cfg.rho);
  result.loss_curve.push_back(final_loss);
  if (final_loss <= best_loss) {
    best_loss = final_loss;
    best = w;
  }

  result.model.class_names = class_names;
  result.model.w.assign(best.begin(), best.end() - 1);
  result.model.w_coverage = best.back();
  result.model.metadata = {{"dataset_hash", hex64(dataset_hash(records))},
                           {"seed", seed},
                           {"epochs", cfg.epochs},
                           {"learning_rate", cfg.learning_rate},
                           {"beta", cfg.beta},
                           {"rho", cfg.rho},
                           {"clamp", cfg.clamp},
                           {"records", records.size()},
                           {"pairs", pairs.size()},
                           {"final_nll", best_loss}};
  return result;
}

inline std::vector<TrainResult> train_seeds(const std::vector<ChoiceRecord>& records, const TrainConfig& cfg,
                                            const std::vector<std::string>& class_names) {
  std::vector<TrainResult> out;
  for (auto seed : cfg.seeds) out.push_back(train(records, cfg, seed, class_names));
  return out;
}

inline std::string loss_curve_csv(const std::vector<double>& curve) {
  std::string out = "epoch,nll\n";
  char buf[64];
  for (std::size_t i = 0; i < curve.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, curve[i]);
    out += buf;
  }
  return out;
}

}  // namespace semsearch
