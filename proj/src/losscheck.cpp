#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "vcd/pipeline.hpp"
#include "vcd/rng.hpp"
#include "vcd/ssl_loss.hpp"

namespace vcd::pipeline {
namespace {

using nlohmann::json;
using loss::EmbeddingBatch;
using loss::Matrix;

// Eight points in four tight pairs on the sphere; pairs are the positives.
EmbeddingBatch trainer_batch(std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  EmbeddingBatch batch;
  for (int p = 0; p < 4; ++p) {
    std::vector<double> a(4);
    std::vector<double> b(4);
    for (double& x : a) x = normal(rng);
    for (double& x : b) x = normal(rng);
    batch.vectors.push_back(std::move(a));
    batch.vectors.push_back(std::move(b));
    const std::size_t i = 2 * static_cast<std::size_t>(p);
    batch.positive_pairs.emplace_back(i, i + 1);
    batch.positive_pairs.emplace_back(i + 1, i);
  }
  return batch;
}

}  // namespace

LossCheckReport run_losscheck(const LossCheckOptions& opt) {
  if (!(opt.tau > 0.0)) throw std::invalid_argument("tau must be positive");
  if (!(opt.lambda >= 0.0)) throw std::invalid_argument("lambda must be non-negative");
  if (opt.batches < 1) throw std::invalid_argument("batches must be >= 1");

  Rng rng(opt.seed);
  std::uniform_int_distribution<std::size_t> pick_n(3, 16);
  std::uniform_int_distribution<std::size_t> pick_d(2, 8);
  double worst_nce = 0.0;
  double worst_koleo = 0.0;
  double worst_combined = 0.0;
  int skipped = 0;
  const loss::LossConfig cfg{opt.tau, opt.lambda};
  for (int b = 0; b < opt.batches; ++b) {
    const std::size_t n = pick_n(rng);
    const std::size_t d = pick_d(rng);
    EmbeddingBatch batch = loss::random_batch(n, d, rng());
    auto with = [&batch](const Matrix& z) {
      EmbeddingBatch copy = batch;
      copy.vectors = z;
      return copy;
    };
    const auto nce_fd = loss::finite_difference(batch.vectors, [&](const Matrix& z) {
      return loss::info_nce(with(z), opt.tau);
    });
    worst_nce = std::max(worst_nce,
                         loss::compare_gradients(loss::info_nce_grad(batch, opt.tau), nce_fd).max_rel_error);
    if (loss::nearest_neighbor_tie_gap(batch.vectors) < 1e-5) {
      ++skipped;
      continue;
    }
    const auto koleo_fd = loss::finite_difference(batch.vectors, [&](const Matrix& z) {
      return loss::koleo(with(z));
    });
    worst_koleo = std::max(worst_koleo, loss::compare_gradients(loss::koleo_grad(batch), koleo_fd).max_rel_error);
    const auto combined_fd = loss::finite_difference(batch.vectors, [&](const Matrix& z) {
      return loss::combined_loss(with(z), cfg).value;
    });
    worst_combined = std::max(
        worst_combined, loss::compare_gradients(loss::combined_loss(batch, cfg).gradient, combined_fd).max_rel_error);
  }

  EmbeddingBatch spot;
  spot.vectors = {{1.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
  spot.positive_pairs = {{0, 1}, {1, 0}};
  const double nce_spot = loss::info_nce(spot, 1.0);
  EmbeddingBatch line;
  line.vectors = {{0.0, 0.0}, {1.0, 0.0}, {3.0, 0.0}};
  const double koleo_spot = loss::koleo(line);

  const auto trained = loss::toy_train(trainer_batch(opt.seed), cfg, opt.train_steps, opt.learning_rate);
  bool window_monotone = true;
  for (std::size_t t = 0; t + 10 < trained.trace.size(); ++t) {
    if (trained.trace[t + 10] > trained.trace[t]) window_monotone = false;
  }
  const bool decreased = trained.trace.back() < trained.trace.front();

  const double worst = std::max({worst_nce, worst_koleo, worst_combined});
  std::string worst_name = "info_nce";
  if (worst == worst_koleo) worst_name = "koleo";
  if (worst == worst_combined) worst_name = "combined";
  if (worst == worst_nce) worst_name = "info_nce";

  LossCheckReport report;
  report.passed = worst < opt.tolerance && decreased && std::abs(nce_spot - (std::log(std::exp(1.0) + 1.0) - 1.0)) < 1e-8 &&
                  std::abs(koleo_spot + std::log(2.0) / 3.0) < 1e-10;
  report.json = {
      {"tau", opt.tau},
      {"lambda", opt.lambda},
      {"batches", opt.batches},
      {"near_tie_skipped", skipped},
      {"tolerance", opt.tolerance},
      {"max_gradient_rel_error",
       {{"info_nce", worst_nce}, {"koleo", worst_koleo}, {"combined", worst_combined}}},
      {"worst_component", worst_name},
      {"loss_values", {{"info_nce_n3_tau1", nce_spot}, {"koleo_line", koleo_spot}}},
      {"trainer",
       {{"steps", opt.train_steps},
        {"learning_rate", opt.learning_rate},
        {"initial_loss", trained.trace.front()},
        {"final_loss", trained.trace.back()},
        {"window10_non_increasing", window_monotone},
        {"trace", trained.trace}}},
      {"passed", report.passed},
  };
  return report;
}

}  // namespace vcd::pipeline
