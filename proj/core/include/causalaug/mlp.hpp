#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "causalaug/datagen.hpp"
#include "causalaug/dist_table.hpp"

namespace causalaug {

// Pins the BLAS backend to one thread and a kernel set matched to the host.
// Idempotent; called automatically before the first GEMM.
void blas_runtime_init();

struct MlpModel {
  std::vector<int> sizes;
  // w[l] is sizes[l+1] x sizes[l] row-major; b[l] has sizes[l+1] entries.
  std::vector<std::vector<float>> w;
  std::vector<std::vector<float>> b;

  static MlpModel glorot(const std::vector<int>& sizes, std::uint64_t seed);
  static MlpModel zeros(const std::vector<int>& sizes);
};

struct TrainConfig {
  int epochs = 30;
  int batch = 128;
  double lr = 0.05;
  // Learning rate halves entering each listed epoch (0-based).
  std::vector<int> decay_epochs = {15, 25};
  std::uint64_t seed = 0;
  std::vector<int> sizes = {kImageBytes, 256, 64, kClasses};
};

// Mini-batch SGD on cross-entropy against the soft labels. Deterministic
// given (dataset, config). When lr > 0, the full-data loss must strictly
// decrease over the run or training reports divergence.
MlpModel train(const Dataset& data, const TrainConfig& cfg,
               std::vector<double>* epoch_loss = nullptr);

std::array<float, 10> predict(const MlpModel& m, const Image& img);

struct Metrics {
  double accuracy = 0.0;
  std::array<double, 10> per_class{};
  double mean_loss = 0.0;
};

// Hard accuracy against the argmax of each instance's soft label.
Metrics evaluate(const MlpModel& m, const Dataset& data);

// Empirical joint over (zi, digit, yhat), in that order, ready for
// invariance_decomposition.
DistTable predicted_joint(const MlpModel& m, const Dataset& data, const std::string& zi);

// Flat binary checkpoint (dimensions + little-endian f64 parameters) with a
// JSON sidecar at path + ".json" recording config, seed, and dataset digest.
void save_model(const std::string& path, const MlpModel& m, const TrainConfig& cfg,
                const std::string& dataset_digest);
MlpModel load_model(const std::string& path);

// Builds a random small double-precision network and batch from `seed`,
// then returns the maximum relative error between analytic gradients and
// central finite differences at h = 1e-5.
double gradient_check(std::uint64_t seed);

}  // namespace causalaug
