#include "vcd/ssl_loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include "vcd/rng.hpp"

namespace vcd::loss {
namespace {

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (const double x : v) s += x * x;
  return std::sqrt(s);
}

double distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

Matrix zeros_like(const Matrix& m) {
  Matrix out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) out[i].assign(m[i].size(), 0.0);
  return out;
}

void check_info_nce_args(const EmbeddingBatch& batch, double tau) {
  validate_batch(batch);
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  if (batch.positive_pairs.empty()) throw std::invalid_argument("positive pair set is empty");
  for (std::size_t i = 0; i < batch.vectors.size(); ++i) {
    if (norm(batch.vectors[i]) == 0.0) {
      throw std::invalid_argument("vector " + std::to_string(i) + " is zero");
    }
  }
}

void check_koleo_args(const EmbeddingBatch& batch) {
  validate_batch(batch);
  if (batch.vectors.size() < 2) throw std::invalid_argument("koleo needs at least 2 vectors");
}

struct Similarities {
  Matrix unit;
  std::vector<double> norms;
  Matrix cos;
};

Similarities similarities(const Matrix& z) {
  Similarities s;
  const std::size_t n = z.size();
  s.unit.resize(n);
  s.norms.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.norms[i] = norm(z[i]);
    s.unit[i] = z[i];
    for (double& x : s.unit[i]) x /= s.norms[i];
  }
  s.cos.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      double d = 0.0;
      for (std::size_t c = 0; c < z[i].size(); ++c) d += s.unit[i][c] * s.unit[k][c];
      s.cos[i][k] = d;
    }
  }
  return s;
}

// log sum_{k != i} exp(cos[i][k] / tau), max-shifted.
double log_denominator(const Matrix& cos, std::size_t i, double tau) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < cos.size(); ++k) {
    if (k != i) m = std::max(m, cos[i][k] / tau);
  }
  double s = 0.0;
  for (std::size_t k = 0; k < cos.size(); ++k) {
    if (k != i) s += std::exp(cos[i][k] / tau - m);
  }
  return m + std::log(s);
}

}  // namespace

void validate_batch(const EmbeddingBatch& batch) {
  const std::size_t n = batch.vectors.size();
  if (n == 0) throw std::invalid_argument("empty batch");
  const std::size_t d = batch.vectors.front().size();
  for (const auto& v : batch.vectors) {
    if (v.size() != d) throw std::invalid_argument("ragged embedding batch");
    for (const double x : v) {
      if (!std::isfinite(x)) throw std::invalid_argument("non-finite embedding component");
    }
  }
  for (const auto& [i, j] : batch.positive_pairs) {
    if (i >= n || j >= n) throw std::invalid_argument("positive pair index out of range");
    if (i == j) throw std::invalid_argument("positive pair (i,i) is not allowed");
  }
}

double info_nce(const EmbeddingBatch& batch, double tau) {
  check_info_nce_args(batch, tau);
  const auto sim = similarities(batch.vectors);
  double total = 0.0;
  for (const auto& [i, j] : batch.positive_pairs) {
    total += sim.cos[i][j] / tau - log_denominator(sim.cos, i, tau);
  }
  return -total / static_cast<double>(batch.positive_pairs.size());
}

Matrix info_nce_grad(const EmbeddingBatch& batch, double tau) {
  check_info_nce_args(batch, tau);
  const std::size_t n = batch.vectors.size();
  const auto sim = similarities(batch.vectors);
  const double scale = 1.0 / static_cast<double>(batch.positive_pairs.size());

  // dL/dcos[i][k] for the anchor-oriented similarities.
  Matrix dcos(n, std::vector<double>(n, 0.0));
  for (const auto& [i, j] : batch.positive_pairs) {
    const double lse = log_denominator(sim.cos, i, tau);
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i) continue;
      const double p = std::exp(sim.cos[i][k] / tau - lse);
      dcos[i][k] += scale * p / tau;
    }
    dcos[i][j] -= scale / tau;
  }

  Matrix grad = zeros_like(batch.vectors);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t d = batch.vectors[i].size();
    std::vector<double> du(d, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      const double w = dcos[i][k] + dcos[k][i];
      if (w == 0.0) continue;
      for (std::size_t c = 0; c < d; ++c) du[c] += w * sim.unit[k][c];
    }
    // Project through u = z / |z|.
    double radial = 0.0;
    for (std::size_t c = 0; c < d; ++c) radial += du[c] * sim.unit[i][c];
    for (std::size_t c = 0; c < d; ++c) {
      grad[i][c] = (du[c] - radial * sim.unit[i][c]) / sim.norms[i];
    }
  }
  return grad;
}

std::vector<std::size_t> nearest_neighbors(const Matrix& vectors) {
  const std::size_t n = vectors.size();
  std::vector<std::size_t> nn(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = distance(vectors[i], vectors[j]);
      if (d < best) {
        best = d;
        nn[i] = j;
      }
    }
  }
  return nn;
}

double nearest_neighbor_tie_gap(const Matrix& vectors) {
  const std::size_t n = vectors.size();
  double gap = std::numeric_limits<double>::infinity();
  if (n < 3) return gap;
  for (std::size_t i = 0; i < n; ++i) {
    double first = std::numeric_limits<double>::infinity();
    double second = first;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = distance(vectors[i], vectors[j]);
      if (d < first) {
        second = first;
        first = d;
      } else if (d < second) {
        second = d;
      }
    }
    gap = std::min(gap, second - first);
  }
  return gap;
}

double koleo(const EmbeddingBatch& batch) {
  check_koleo_args(batch);
  const auto& z = batch.vectors;
  const auto nn = nearest_neighbors(z);
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double d = distance(z[i], z[nn[i]]);
    if (d < 1e-12) {
      throw std::invalid_argument("koleo: vectors " + std::to_string(std::min(i, nn[i])) +
                                  " and " + std::to_string(std::max(i, nn[i])) + " coincide");
    }
    total += std::log(d);
  }
  return -total / static_cast<double>(z.size());
}

Matrix koleo_grad(const EmbeddingBatch& batch) {
  koleo(batch);  // validation and duplicate detection
  const auto& z = batch.vectors;
  const auto nn = nearest_neighbors(z);
  const double scale = 1.0 / static_cast<double>(z.size());
  Matrix grad = zeros_like(z);
  for (std::size_t i = 0; i < z.size(); ++i) {
    const std::size_t j = nn[i];
    const double d = distance(z[i], z[j]);
    const double w = scale / (d * d);
    for (std::size_t c = 0; c < z[i].size(); ++c) {
      const double g = w * (z[i][c] - z[j][c]);
      grad[i][c] -= g;
      grad[j][c] += g;
    }
  }
  return grad;
}

LossValue combined_loss(const EmbeddingBatch& batch, const LossConfig& config) {
  if (!(config.lambda >= 0.0)) throw std::invalid_argument("lambda must be non-negative");
  LossValue out;
  out.value = info_nce(batch, config.tau);
  out.gradient = info_nce_grad(batch, config.tau);
  if (config.lambda != 0.0) {
    out.value += config.lambda * koleo(batch);
    const Matrix kg = koleo_grad(batch);
    for (std::size_t i = 0; i < kg.size(); ++i) {
      for (std::size_t c = 0; c < kg[i].size(); ++c) out.gradient[i][c] += config.lambda * kg[i][c];
    }
  }
  return out;
}

TrainResult toy_train(EmbeddingBatch batch, const LossConfig& config, int steps,
                      double learning_rate) {
  if (steps < 1) throw std::invalid_argument("steps must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  TrainResult result;
  auto project = [](Matrix& z) {
    for (auto& v : z) {
      const double n = norm(v);
      for (double& x : v) x /= n;
    }
  };
  project(batch.vectors);
  for (int step = 0; step <= steps; ++step) {
    const LossValue lv = combined_loss(batch, config);
    if (!std::isfinite(lv.value)) {
      throw std::runtime_error("toy_train diverged at step " + std::to_string(step));
    }
    result.trace.push_back(lv.value);
    if (step == steps) break;
    for (std::size_t i = 0; i < batch.vectors.size(); ++i) {
      for (std::size_t c = 0; c < batch.vectors[i].size(); ++c) {
        batch.vectors[i][c] -= learning_rate * lv.gradient[i][c];
      }
    }
    project(batch.vectors);
  }
  result.batch = std::move(batch);
  return result;
}

double min_pairwise_distance(const Matrix& vectors) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    for (std::size_t j = i + 1; j < vectors.size(); ++j) {
      best = std::min(best, distance(vectors[i], vectors[j]));
    }
  }
  return best;
}

GradCheck compare_gradients(const Matrix& analytic, const Matrix& numeric, double floor) {
  GradCheck out;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    for (std::size_t c = 0; c < analytic[i].size(); ++c) {
      const double a = analytic[i][c];
      const double n = numeric[i][c];
      const double rel = std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
      if (rel > out.max_rel_error) {
        out.max_rel_error = rel;
        out.worst_row = i;
        out.worst_col = c;
      }
    }
  }
  return out;
}

EmbeddingBatch random_batch(std::size_t n, std::size_t d, std::uint64_t seed) {
  if (n < 2 || d < 1) throw std::invalid_argument("random_batch needs n >= 2, d >= 1");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  EmbeddingBatch batch;
  batch.vectors.assign(n, std::vector<double>(d));
  for (auto& v : batch.vectors) {
    for (double& x : v) x = normal(rng);
  }
  // Pair consecutive indices (both orientations), plus one random extra pair.
  for (std::size_t i = 0; i + 1 < n; i += 2) {
    batch.positive_pairs.emplace_back(i, i + 1);
    batch.positive_pairs.emplace_back(i + 1, i);
  }
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  const std::size_t a = pick(rng);
  std::size_t b = pick(rng);
  if (b == a) b = (a + 1) % n;
  batch.positive_pairs.emplace_back(a, b);
  return batch;
}

}  // namespace vcd::loss
