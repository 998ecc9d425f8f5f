#include "causalaug/mlp.hpp"

#include <algorithm>
#include <cblas.h>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <numeric>

#include "causalaug/error.hpp"
#include "causalaug/info.hpp"
#include "causalaug/rng.hpp"

extern "C" void openblas_set_num_threads(int);

namespace causalaug {

namespace {

constexpr std::uint64_t kSaltInit = 0x61;
constexpr std::uint64_t kSaltShuffle = 0xE0;
// Pixels map to [-0.5, 0.5]; zero-centered inputs keep a unit's first-layer
// updates from sharing one sign across all weights.
constexpr float kPixelScale = 1.0f / 255.0f;
constexpr float kPixelShift = -0.5f;

void gemm(bool ta, bool tb, int m, int n, int k, float alpha, const float* a, int lda,
          const float* b, int ldb, float beta, float* c, int ldc) {
  cblas_sgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans, tb ? CblasTrans : CblasNoTrans, m, n,
              k, alpha, a, lda, b, ldb, beta, c, ldc);
}

void gemm(bool ta, bool tb, int m, int n, int k, double alpha, const double* a, int lda,
          const double* b, int ldb, double beta, double* c, int ldc) {
  cblas_dgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans, tb ? CblasTrans : CblasNoTrans, m, n,
              k, alpha, a, lda, b, ldb, beta, c, ldc);
}

template <typename Real>
struct Params {
  std::vector<int> sizes;
  std::vector<std::vector<Real>> w;
  std::vector<std::vector<Real>> b;

  std::size_t layers() const { return w.size(); }
};

template <typename Real>
Params<Real> zero_like(const std::vector<int>& sizes) {
  Params<Real> p;
  p.sizes = sizes;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    p.w.push_back(std::vector<Real>(
        static_cast<std::size_t>(sizes[l + 1]) * static_cast<std::size_t>(sizes[l]), Real(0)));
    p.b.push_back(std::vector<Real>(static_cast<std::size_t>(sizes[l + 1]), Real(0)));
  }
  return p;
}

void validate_sizes(const std::vector<int>& sizes) {
  if (sizes.size() < 2) throw ValidationError("mlp: need at least input and output layers");
  for (int s : sizes)
    if (s <= 0) throw ValidationError("mlp: layer sizes must be positive");
}

// Forward pass over a row-major batch X (rows x sizes[0]); activations[l]
// holds layer l's output, the last one softmax probabilities.
template <typename Real>
void forward(const std::vector<int>& sizes, const std::vector<std::vector<Real>>& w,
             const std::vector<std::vector<Real>>& b, const Real* x, int rows,
             std::vector<std::vector<Real>>& acts) {
  const std::size_t nl = w.size();
  acts.assign(nl + 1, {});
  acts[0].assign(x, x + static_cast<std::size_t>(rows) * static_cast<std::size_t>(sizes[0]));
  for (std::size_t l = 0; l < nl; ++l) {
    const int in = sizes[l], out = sizes[l + 1];
    auto& z = acts[l + 1];
    z.assign(static_cast<std::size_t>(rows) * static_cast<std::size_t>(out), Real(0));
    gemm(false, true, rows, out, in, Real(1), acts[l].data(), in, w[l].data(), in, Real(0),
         z.data(), out);
    for (int r = 0; r < rows; ++r)
      for (int j = 0; j < out; ++j) z[static_cast<std::size_t>(r) * out + j] += b[l][static_cast<std::size_t>(j)];
    if (l + 1 < nl) {
      for (auto& v : z) v = std::max(v, Real(0));
    } else {
      for (int r = 0; r < rows; ++r) {
        Real* row = z.data() + static_cast<std::size_t>(r) * out;
        Real mx = row[0];
        for (int j = 1; j < out; ++j) mx = std::max(mx, row[j]);
        Real total = Real(0);
        for (int j = 0; j < out; ++j) {
          row[j] = std::exp(row[j] - mx);
          total += row[j];
        }
        for (int j = 0; j < out; ++j) row[j] /= total;
      }
    }
  }
}

// Mean cross-entropy of softmax rows against soft labels.
template <typename Real>
Real batch_loss(const Real* probs, const Real* y, int rows, int out) {
  Real total = Real(0);
  for (std::size_t i = 0; i < static_cast<std::size_t>(rows) * static_cast<std::size_t>(out); ++i)
    if (y[i] != Real(0)) total -= y[i] * std::log(std::max(probs[i], Real(1e-30)));
  return total / Real(rows);
}

// Gradients of the mean cross-entropy; acts must come from forward().
template <typename Real>
void backward(const std::vector<int>& sizes, const std::vector<std::vector<Real>>& w,
              const std::vector<std::vector<Real>>& acts, const Real* y, int rows,
              Params<Real>& grad) {
  const std::size_t nl = w.size();
  const int out_last = sizes[nl];
  std::vector<Real> delta(acts[nl]);
  for (std::size_t i = 0;
       i < static_cast<std::size_t>(rows) * static_cast<std::size_t>(out_last); ++i)
    delta[i] = (delta[i] - y[i]) / Real(rows);
  for (std::size_t l = nl; l-- > 0;) {
    const int in = sizes[l], out = sizes[l + 1];
    gemm(true, false, out, in, rows, Real(1), delta.data(), out, acts[l].data(), in, Real(0),
         grad.w[l].data(), in);
    for (int j = 0; j < out; ++j) {
      Real s = Real(0);
      for (int r = 0; r < rows; ++r) s += delta[static_cast<std::size_t>(r) * out + j];
      grad.b[l][static_cast<std::size_t>(j)] = s;
    }
    if (l == 0) break;
    std::vector<Real> prev(static_cast<std::size_t>(rows) * static_cast<std::size_t>(in), Real(0));
    gemm(false, false, rows, in, out, Real(1), delta.data(), out, w[l].data(), in, Real(0),
         prev.data(), in);
    // ReLU mask of the producing layer.
    for (std::size_t i = 0; i < prev.size(); ++i)
      if (acts[l][i] <= Real(0)) prev[i] = Real(0);
    delta = std::move(prev);
  }
}

void fill_batch(const Dataset& data, const std::vector<std::size_t>& order, std::size_t begin,
                int rows, float* x, float* y) {
  for (int r = 0; r < rows; ++r) {
    const Instance& inst = data.instances[order[begin + static_cast<std::size_t>(r)]];
    float* xr = x + static_cast<std::size_t>(r) * kImageBytes;
    for (int j = 0; j < kImageBytes; ++j)
      xr[static_cast<std::size_t>(j)] = static_cast<float>(inst.image[static_cast<std::size_t>(j)]) * kPixelScale + kPixelShift;
    std::copy(inst.soft.begin(), inst.soft.end(), y + static_cast<std::size_t>(r) * kClasses);
  }
}

// Full-dataset mean loss, streaming in chunks.
double dataset_loss(const MlpModel& m, const Dataset& data) {
  const int chunk = 512;
  const std::size_t n = data.instances.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<float> x(static_cast<std::size_t>(chunk) * kImageBytes);
  std::vector<float> y(static_cast<std::size_t>(chunk) * kClasses);
  std::vector<std::vector<float>> acts;
  double total = 0.0;
  for (std::size_t at = 0; at < n; at += chunk) {
    const int rows = static_cast<int>(std::min<std::size_t>(chunk, n - at));
    fill_batch(data, order, at, rows, x.data(), y.data());
    forward(m.sizes, m.w, m.b, x.data(), rows, acts);
    total += static_cast<double>(batch_loss(acts.back().data(), y.data(), rows, kClasses)) * rows;
  }
  return total / static_cast<double>(n);
}

int soft_argmax(const std::array<float, 10>& soft) {
  int best = 0;
  for (int c = 1; c < 10; ++c)
    if (soft[static_cast<std::size_t>(c)] > soft[static_cast<std::size_t>(best)]) best = c;
  return best;
}

}  // namespace

// The container's virtualized CPUID makes the BLAS runtime pick a slow generic
// kernel set.  OpenBLAS snapshots OPENBLAS_CORETYPE in its own constructor, so
// the pin must run earlier: priority 101 sorts before the archive's
// default-priority init, and cpu_init is called explicitly because libgcc's
// feature-detection constructor may itself not have run yet.  An externally
// set OPENBLAS_CORETYPE still wins (setenv does not overwrite).
__attribute__((constructor(101))) static void pin_blas_core() {
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx512f")) setenv("OPENBLAS_CORETYPE", "SKYLAKEX", 0);
}

void blas_runtime_init() {
  static const bool done = [] {
    openblas_set_num_threads(1);
    return true;
  }();
  (void)done;
}

MlpModel MlpModel::glorot(const std::vector<int>& sizes, std::uint64_t seed) {
  validate_sizes(sizes);
  MlpModel m;
  m.sizes = sizes;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int in = sizes[l], out = sizes[l + 1];
    Stream s = substream(mix64(seed, kSaltInit), l);
    const double limit = std::sqrt(6.0 / (in + out));
    std::vector<float> wl(static_cast<std::size_t>(out) * static_cast<std::size_t>(in));
    for (auto& v : wl) v = static_cast<float>((2.0 * s.uniform01() - 1.0) * limit);
    m.w.push_back(std::move(wl));
    m.b.push_back(std::vector<float>(static_cast<std::size_t>(out), 0.0f));
  }
  return m;
}

MlpModel MlpModel::zeros(const std::vector<int>& sizes) {
  validate_sizes(sizes);
  auto p = zero_like<float>(sizes);
  MlpModel m;
  m.sizes = std::move(p.sizes);
  m.w = std::move(p.w);
  m.b = std::move(p.b);
  return m;
}

MlpModel train(const Dataset& data, const TrainConfig& cfg, std::vector<double>* epoch_loss) {
  blas_runtime_init();
  validate_sizes(cfg.sizes);
  if (data.instances.empty()) throw ValidationError("train: empty dataset");
  if (cfg.sizes.front() != kImageBytes || cfg.sizes.back() != kClasses)
    throw ValidationError("train: model dimensions do not match the data");
  if (cfg.epochs < 1) throw ValidationError("train: epochs must be >= 1");
  if (cfg.batch < 1) throw ValidationError("train: batch must be >= 1");
  if (cfg.lr < 0.0) throw ValidationError("train: negative learning rate");

  MlpModel m = MlpModel::glorot(cfg.sizes, cfg.seed);
  const double loss_start = dataset_loss(m, data);

  const std::size_t n = data.instances.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<float> x(static_cast<std::size_t>(cfg.batch) * kImageBytes);
  std::vector<float> y(static_cast<std::size_t>(cfg.batch) * kClasses);
  std::vector<std::vector<float>> acts;
  auto grad = zero_like<float>(cfg.sizes);
  if (epoch_loss) epoch_loss->clear();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double lr = cfg.lr;
    for (int d : cfg.decay_epochs)
      if (epoch >= d) lr *= 0.5;
    Stream shuffle = substream(mix64(cfg.seed, kSaltShuffle), static_cast<std::uint64_t>(epoch));
    for (std::size_t i = n - 1; i > 0; --i)
      std::swap(order[i], order[shuffle.uniform_int(static_cast<int>(i) + 1)]);

    double epoch_total = 0.0;
    std::size_t steps = 0;
    for (std::size_t at = 0; at < n; at += static_cast<std::size_t>(cfg.batch)) {
      const int rows = static_cast<int>(std::min<std::size_t>(cfg.batch, n - at));
      fill_batch(data, order, at, rows, x.data(), y.data());
      forward(m.sizes, m.w, m.b, x.data(), rows, acts);
      const float loss = batch_loss(acts.back().data(), y.data(), rows, kClasses);
      if (!std::isfinite(loss)) throw ValidationError("train: non-finite loss (divergence)");
      backward(m.sizes, m.w, acts, y.data(), rows, grad);
      const float f = static_cast<float>(lr);
      for (std::size_t l = 0; l < m.w.size(); ++l) {
        for (std::size_t i = 0; i < m.w[l].size(); ++i) m.w[l][i] -= f * grad.w[l][i];
        for (std::size_t i = 0; i < m.b[l].size(); ++i) m.b[l][i] -= f * grad.b[l][i];
      }
      epoch_total += loss;
      ++steps;
    }
    if (epoch_loss) epoch_loss->push_back(epoch_total / static_cast<double>(steps));
  }

  for (const auto& wl : m.w)
    for (float v : wl)
      if (!std::isfinite(v)) throw ValidationError("train: non-finite parameters (divergence)");
  if (cfg.lr > 0.0) {
    const double loss_end = dataset_loss(m, data);
    if (!(loss_end < loss_start))
      throw ValidationError("train: loss failed to decrease (divergence)");
  }
  return m;
}

std::array<float, 10> predict(const MlpModel& m, const Image& img) {
  blas_runtime_init();
  validate_sizes(m.sizes);
  if (m.sizes.front() != kImageBytes || m.sizes.back() != kClasses)
    throw ValidationError("predict: model dimensions do not match the image");
  std::vector<float> x(kImageBytes);
  for (int j = 0; j < kImageBytes; ++j)
    x[static_cast<std::size_t>(j)] = static_cast<float>(img[static_cast<std::size_t>(j)]) * kPixelScale + kPixelShift;
  std::vector<std::vector<float>> acts;
  forward(m.sizes, m.w, m.b, x.data(), 1, acts);
  std::array<float, 10> out{};
  std::copy(acts.back().begin(), acts.back().end(), out.begin());
  return out;
}

Metrics evaluate(const MlpModel& m, const Dataset& data) {
  blas_runtime_init();
  if (data.instances.empty()) throw ValidationError("evaluate: empty dataset");
  if (m.sizes.front() != kImageBytes || m.sizes.back() != kClasses)
    throw ValidationError("evaluate: model dimensions do not match the data");
  const int chunk = 512;
  const std::size_t n = data.instances.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<float> x(static_cast<std::size_t>(chunk) * kImageBytes);
  std::vector<float> y(static_cast<std::size_t>(chunk) * kClasses);
  std::vector<std::vector<float>> acts;
  Metrics out;
  std::array<std::size_t, 10> correct{}, seen{};
  double total_loss = 0.0;
  for (std::size_t at = 0; at < n; at += chunk) {
    const int rows = static_cast<int>(std::min<std::size_t>(chunk, n - at));
    fill_batch(data, order, at, rows, x.data(), y.data());
    forward(m.sizes, m.w, m.b, x.data(), rows, acts);
    total_loss += static_cast<double>(batch_loss(acts.back().data(), y.data(), rows, kClasses)) * rows;
    const auto& probs = acts.back();
    for (int r = 0; r < rows; ++r) {
      const Instance& inst = data.instances[at + static_cast<std::size_t>(r)];
      const int truth = soft_argmax(inst.soft);
      int pred = 0;
      const float* row = probs.data() + static_cast<std::size_t>(r) * kClasses;
      for (int c = 1; c < kClasses; ++c)
        if (row[c] > row[pred]) pred = c;
      ++seen[static_cast<std::size_t>(truth)];
      if (pred == truth) ++correct[static_cast<std::size_t>(truth)];
    }
  }
  std::size_t hits = 0;
  for (int c = 0; c < 10; ++c) {
    hits += correct[static_cast<std::size_t>(c)];
    out.per_class[static_cast<std::size_t>(c)] =
        seen[static_cast<std::size_t>(c)] == 0
            ? 0.0
            : static_cast<double>(correct[static_cast<std::size_t>(c)]) /
                  static_cast<double>(seen[static_cast<std::size_t>(c)]);
  }
  out.accuracy = static_cast<double>(hits) / static_cast<double>(n);
  out.mean_loss = total_loss / static_cast<double>(n);
  return out;
}

DistTable predicted_joint(const MlpModel& m, const Dataset& data, const std::string& zi) {
  const auto& styles = style_factors(data.spec.variant);
  if (std::find(styles.begin(), styles.end(), zi) == styles.end())
    throw ValidationError("predicted_joint: '" + zi + "' is not a style factor of this variant");
  blas_runtime_init();
  if (data.instances.empty()) throw ValidationError("predicted_joint: empty dataset");
  const int chunk = 512;
  const std::size_t n = data.instances.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<float> x(static_cast<std::size_t>(chunk) * kImageBytes);
  std::vector<float> y(static_cast<std::size_t>(chunk) * kClasses);
  std::vector<std::vector<float>> acts;
  std::vector<Assignment> rows_out;
  rows_out.reserve(n);
  for (std::size_t at = 0; at < n; at += chunk) {
    const int rows = static_cast<int>(std::min<std::size_t>(chunk, n - at));
    fill_batch(data, order, at, rows, x.data(), y.data());
    forward(m.sizes, m.w, m.b, x.data(), rows, acts);
    const auto& probs = acts.back();
    for (int r = 0; r < rows; ++r) {
      const Instance& inst = data.instances[at + static_cast<std::size_t>(r)];
      const int zi_val = factor_value(inst.factors, zi);
      if (zi_val < 0) throw ValidationError("predicted_joint: instance lacks factor '" + zi + "'");
      int pred = 0;
      const float* row = probs.data() + static_cast<std::size_t>(r) * kClasses;
      for (int c = 1; c < kClasses; ++c)
        if (row[c] > row[pred]) pred = c;
      rows_out.push_back({{zi, zi_val}, {"digit", inst.factors.digit}, {"yhat", pred}});
    }
  }
  JointCounts jc = JointCounts::from_samples(rows_out, {zi, "digit", "yhat"}, {10, 10, 10});
  return jc.to_dist();
}

void save_model(const std::string& path, const MlpModel& m, const TrainConfig& cfg,
                const std::string& dataset_digest) {
  validate_sizes(m.sizes);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("save_model: cannot open '" + path + "'");
  f.write("CAUGMLP1", 8);
  const std::uint32_t ns = static_cast<std::uint32_t>(m.sizes.size());
  f.write(reinterpret_cast<const char*>(&ns), 4);
  for (int s : m.sizes) {
    const std::uint32_t v = static_cast<std::uint32_t>(s);
    f.write(reinterpret_cast<const char*>(&v), 4);
  }
  auto write_reals = [&f](const std::vector<float>& vs) {
    for (float v : vs) {
      const double d = static_cast<double>(v);
      f.write(reinterpret_cast<const char*>(&d), 8);
    }
  };
  for (std::size_t l = 0; l < m.w.size(); ++l) {
    write_reals(m.w[l]);
    write_reals(m.b[l]);
  }
  if (!f) throw IoError("save_model: write failed for '" + path + "'");
  f.close();

  nlohmann::json side;
  side["format"] = "mlp-checkpoint-v1";
  side["sizes"] = m.sizes;
  side["epochs"] = cfg.epochs;
  side["batch"] = cfg.batch;
  side["lr"] = cfg.lr;
  side["decay_epochs"] = cfg.decay_epochs;
  side["seed"] = cfg.seed;
  side["dataset_digest"] = dataset_digest;
  std::ofstream sf(path + ".json");
  if (!sf) throw IoError("save_model: cannot open '" + path + ".json'");
  sf << side.dump(2) << "\n";
}

MlpModel load_model(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("load_model: cannot open '" + path + "'");
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, "CAUGMLP1", 8) != 0)
    throw IoError("load_model: bad magic in '" + path + "'");
  std::uint32_t ns = 0;
  f.read(reinterpret_cast<char*>(&ns), 4);
  if (!f || ns < 2 || ns > 64) throw IoError("load_model: corrupt layer count");
  std::vector<int> sizes(ns);
  for (auto& s : sizes) {
    std::uint32_t v = 0;
    f.read(reinterpret_cast<char*>(&v), 4);
    if (!f || v == 0 || v > (1u << 20)) throw IoError("load_model: corrupt layer size");
    s = static_cast<int>(v);
  }
  MlpModel m = MlpModel::zeros(sizes);
  auto read_reals = [&f, &path](std::vector<float>& vs) {
    for (auto& v : vs) {
      double d = 0.0;
      f.read(reinterpret_cast<char*>(&d), 8);
      if (!f) throw IoError("load_model: truncated parameters in '" + path + "'");
      v = static_cast<float>(d);
    }
  };
  for (std::size_t l = 0; l < m.w.size(); ++l) {
    read_reals(m.w[l]);
    read_reals(m.b[l]);
  }
  char extra;
  if (f.read(&extra, 1)) throw IoError("load_model: trailing bytes in '" + path + "'");
  return m;
}

double gradient_check(std::uint64_t seed) {
  Stream g(mix64(seed, 0x6C));
  std::vector<int> sizes{6 + g.uniform_int(6), 4 + g.uniform_int(5)};
  if (g.bernoulli(0.5)) sizes.push_back(3 + g.uniform_int(5));
  sizes.push_back(3 + g.uniform_int(4));
  const int rows = 2 + g.uniform_int(3);
  const int in = sizes.front(), out = sizes.back();

  Params<double> p;
  p.sizes = sizes;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const double limit = std::sqrt(6.0 / (sizes[l] + sizes[l + 1]));
    std::vector<double> wl(static_cast<std::size_t>(sizes[l + 1]) * static_cast<std::size_t>(sizes[l]));
    for (auto& v : wl) v = (2.0 * g.uniform01() - 1.0) * limit;
    p.w.push_back(std::move(wl));
    std::vector<double> bl(static_cast<std::size_t>(sizes[l + 1]));
    for (auto& v : bl) v = (2.0 * g.uniform01() - 1.0) * 0.1;
    p.b.push_back(std::move(bl));
  }
  std::vector<double> x(static_cast<std::size_t>(rows) * static_cast<std::size_t>(in));
  for (auto& v : x) v = g.uniform01();
  std::vector<double> y(static_cast<std::size_t>(rows) * static_cast<std::size_t>(out), 0.0);
  for (int r = 0; r < rows; ++r) {
    double total = 0.0;
    for (int c = 0; c < out; ++c) {
      const double u = g.uniform01() + 1e-3;
      y[static_cast<std::size_t>(r) * out + c] = u;
      total += u;
    }
    for (int c = 0; c < out; ++c) y[static_cast<std::size_t>(r) * out + c] /= total;
  }

  auto loss_at = [&](const Params<double>& q) {
    std::vector<std::vector<double>> acts;
    forward(q.sizes, q.w, q.b, x.data(), rows, acts);
    return batch_loss(acts.back().data(), y.data(), rows, out);
  };

  std::vector<std::vector<double>> acts;
  forward(p.sizes, p.w, p.b, x.data(), rows, acts);
  auto grad = zero_like<double>(sizes);
  backward(p.sizes, p.w, acts, y.data(), rows, grad);

  const double h = 1e-5;
  double max_rel = 0.0;
  auto probe = [&](std::vector<double>& slot, std::size_t i, double analytic) {
    const double keep = slot[i];
    slot[i] = keep + h;
    const double up = loss_at(p);
    slot[i] = keep - h;
    const double dn = loss_at(p);
    slot[i] = keep;
    const double fd = (up - dn) / (2.0 * h);
    const double rel = std::abs(analytic - fd) /
                       std::max({std::abs(analytic), std::abs(fd), 1e-2});
    max_rel = std::max(max_rel, rel);
  };
  for (std::size_t l = 0; l < p.w.size(); ++l) {
    for (std::size_t i = 0; i < p.w[l].size(); ++i) probe(p.w[l], i, grad.w[l][i]);
    for (std::size_t i = 0; i < p.b[l].size(); ++i) probe(p.b[l], i, grad.b[l][i]);
  }
  return max_rel;
}

}  // namespace causalaug
