#pragma once

// Self-supervised training objective: InfoNCE with cosine similarity, the
// KoLeo nearest-neighbour entropy term, and their weighted sum. Everything is
// 64-bit and comes with analytic gradients.

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

namespace vcd::loss {

using Matrix = std::vector<std::vector<double>>;

struct EmbeddingBatch {
  Matrix vectors;
  std::vector<std::pair<std::size_t, std::size_t>> positive_pairs;
};

struct LossConfig {
  double tau = 0.05;
  double lambda = 1.0;
};

struct LossValue {
  double value = 0.0;
  Matrix gradient;
};

// Throws std::invalid_argument on ragged vectors, out-of-range or (i,i) pairs.
void validate_batch(const EmbeddingBatch& batch);

double info_nce(const EmbeddingBatch& batch, double tau);
Matrix info_nce_grad(const EmbeddingBatch& batch, double tau);

double koleo(const EmbeddingBatch& batch);
Matrix koleo_grad(const EmbeddingBatch& batch);

// Index of the nearest neighbour of each vector; ties go to the lowest index.
std::vector<std::size_t> nearest_neighbors(const Matrix& vectors);

// Smallest gap between nearest and second-nearest distance over all anchors.
// Infinity for N < 3.
double nearest_neighbor_tie_gap(const Matrix& vectors);

LossValue combined_loss(const EmbeddingBatch& batch, const LossConfig& config);

struct TrainResult {
  EmbeddingBatch batch;
  std::vector<double> trace;  // trace[0] is the initial loss, trace[t] after step t
};

// Gradient descent on combined_loss, re-projecting every vector to the unit
// sphere after each step. Throws std::runtime_error naming the step on NaN.
TrainResult toy_train(EmbeddingBatch batch, const LossConfig& config, int steps,
                      double learning_rate);

double min_pairwise_distance(const Matrix& vectors);

// Central finite-difference check of an analytic gradient.
struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t worst_row = 0;
  std::size_t worst_col = 0;
};

// Relative error is |a - n| / max(|a|, |n|, floor).
inline constexpr double kGradCheckFloor = 1e-2;

template <typename Fn>
Matrix finite_difference(const Matrix& at, Fn&& f, double h = 1e-6) {
  Matrix out(at.size());
  Matrix probe = at;
  for (std::size_t i = 0; i < at.size(); ++i) {
    out[i].resize(at[i].size());
    for (std::size_t j = 0; j < at[i].size(); ++j) {
      const double orig = probe[i][j];
      probe[i][j] = orig + h;
      const double up = f(probe);
      probe[i][j] = orig - h;
      const double down = f(probe);
      probe[i][j] = orig;
      out[i][j] = (up - down) / (2.0 * h);
    }
  }
  return out;
}

GradCheck compare_gradients(const Matrix& analytic, const Matrix& numeric,
                            double floor = kGradCheckFloor);

// Random batch of n vectors in dim d with a random set of ordered positive pairs.
EmbeddingBatch random_batch(std::size_t n, std::size_t d, std::uint64_t seed);

}  // namespace vcd::loss
