#include "causalaug/augment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "causalaug/error.hpp"
#include "causalaug/rng.hpp"

namespace causalaug {

namespace {

constexpr std::uint64_t kSaltDoZ0 = 0x5A01;
constexpr std::uint64_t kSaltDoZcnf = 0x5A02;
constexpr std::uint64_t kSaltDoZ0AndZcnf = 0x5A03;
constexpr std::uint64_t kSaltDoX = 0x5A04;
constexpr std::uint64_t kSaltTruncate = 0x5A0F;

void validate_counterfactual_config(const AugmentConfig& cfg) {
  if (!(cfg.tau >= 0.0 && cfg.tau <= 1.0))
    throw ValidationError("augment: tau outside [0, 1]");
  if (cfg.per_instance < 1 || cfg.per_instance > 9)
    throw ValidationError("augment: per_instance outside 1..9");
  if (cfg.alpha_cap != -1 && cfg.alpha_cap <= 0)
    throw ValidationError("augment: alpha_cap must be positive or -1 (unlimited)");
}

Instance counterfactual_multi(const Instance& src, Variant v,
                              const std::vector<std::pair<std::string, int>>& actions) {
  const FactorTuple abducted = invert(src.image, v);
  if (!(abducted == src.factors))
    throw ValidationError("counterfactual: abduction mismatch between stored factors and image");
  FactorTuple f = src.factors;
  bool thickness_targeted = false;
  for (const auto& [name, value] : actions) {
    set_factor(f, name, value);
    thickness_targeted = thickness_targeted || name == "thickness";
  }
  if (f.digit != src.factors.digit && !thickness_targeted)
    f.thickness = thickness_rule(f.digit);
  Instance out;
  out.factors = f;
  out.origin = Origin::counterfactual;
  out.label = static_cast<std::uint8_t>(f.digit);
  out.soft.fill(0.0f);
  out.soft[static_cast<std::size_t>(f.digit)] = 1.0f;
  out.image = render(f, v);
  return out;
}

// Without-replacement draws over the nine values differing from `current`.
std::array<int, 9> draws_excluding(Stream& g, int current, int count) {
  std::array<int, 9> c{};
  int m = 0;
  for (int v = 0; v < 10; ++v)
    if (v != current) c[m++] = v;
  for (int e = 0; e < count; ++e) {
    int k = e + g.uniform_int(9 - e);
    std::swap(c[static_cast<std::size_t>(e)], c[static_cast<std::size_t>(k)]);
  }
  return c;
}

void truncate_uniform(std::vector<Instance>& out, const AugmentConfig& cfg, std::uint64_t salt) {
  if (cfg.alpha_cap < 0 || out.size() <= static_cast<std::size_t>(cfg.alpha_cap)) return;
  std::vector<std::size_t> idx(out.size());
  std::iota(idx.begin(), idx.end(), 0);
  Stream ts(mix64(mix64(cfg.seed, kSaltTruncate), salt));
  for (std::size_t i = out.size() - 1; i > 0; --i)
    std::swap(idx[i], idx[ts.uniform_int(static_cast<int>(i) + 1)]);
  idx.resize(static_cast<std::size_t>(cfg.alpha_cap));
  std::sort(idx.begin(), idx.end());
  std::vector<Instance> kept;
  kept.reserve(idx.size());
  for (std::size_t i : idx) kept.push_back(std::move(out[i]));
  out = std::move(kept);
}

std::vector<Instance> emit_counterfactuals(const Dataset& train, const AugmentConfig& cfg,
                                           bool resample_digit, bool resample_styles,
                                           std::uint64_t salt) {
  validate_counterfactual_config(cfg);
  const Variant v = train.spec.variant;
  const auto& styles = style_factors(v);
  auto selected = filter_confounded(train, cfg.tau);

  // Canonical emission order: source index, then trigger factor, then draw.
  std::vector<std::pair<std::size_t, std::size_t>> by_source;
  by_source.reserve(selected.size());
  for (const auto& [j, i] : selected) by_source.push_back({i, j});
  std::sort(by_source.begin(), by_source.end());

  const std::uint64_t base = mix64(cfg.seed, salt);
  std::vector<Instance> out;
  out.reserve(by_source.size() * static_cast<std::size_t>(cfg.per_instance));
  for (const auto& [i, j] : by_source) {
    const Instance& src = train.instances[i];
    Stream g = substream(mix64(base, j), i);
    std::array<int, 9> digit_draws{};
    if (resample_digit) digit_draws = draws_excluding(g, src.factors.digit, cfg.per_instance);
    std::vector<std::array<int, 9>> style_draws;
    if (resample_styles)
      for (const auto& s : styles)
        style_draws.push_back(draws_excluding(g, factor_value(src.factors, s), cfg.per_instance));
    for (int e = 0; e < cfg.per_instance; ++e) {
      std::vector<std::pair<std::string, int>> actions;
      if (resample_digit) actions.push_back({"digit", digit_draws[static_cast<std::size_t>(e)]});
      if (resample_styles)
        for (std::size_t s = 0; s < styles.size(); ++s)
          actions.push_back({styles[s], style_draws[s][static_cast<std::size_t>(e)]});
      Instance em = counterfactual_multi(src, v, actions);
      // Guard: never emit a duplicate of the source tuple.
      if (em.factors == src.factors) continue;
      out.push_back(std::move(em));
    }
  }
  truncate_uniform(out, cfg, salt);
  return out;
}

}  // namespace

std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::none: return "none";
    case Strategy::do_z0: return "do_z0";
    case Strategy::do_zcnf: return "do_zcnf";
    case Strategy::do_z0_and_zcnf: return "do_z0_and_zcnf";
    case Strategy::do_x: return "do_x";
    case Strategy::replicate_unconfounded: return "replicate_unconfounded";
  }
  throw ValidationError("strategy_name: unknown strategy");
}

Strategy strategy_from_name(const std::string& name) {
  if (name == "none") return Strategy::none;
  if (name == "do_z0") return Strategy::do_z0;
  if (name == "do_zcnf") return Strategy::do_zcnf;
  if (name == "do_z0_and_zcnf") return Strategy::do_z0_and_zcnf;
  if (name == "do_x") return Strategy::do_x;
  if (name == "replicate_unconfounded") return Strategy::replicate_unconfounded;
  throw ValidationError("strategy_from_name: unknown strategy '" + name + "'");
}

Instance counterfactual(const Instance& src, Variant v, const std::string& target, int value) {
  return counterfactual_multi(src, v, {{target, value}});
}

std::vector<std::pair<std::size_t, std::size_t>> filter_confounded(const Dataset& train,
                                                                   double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw ValidationError("filter_confounded: tau outside [0, 1]");
  const auto& styles = style_factors(train.spec.variant);
  const std::size_t n = train.instances.size();
  if (n == 0) throw ValidationError("filter_confounded: empty dataset");
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t j = 0; j < styles.size(); ++j) {
    std::array<std::size_t, 100> cells{};
    std::vector<int> cell_of(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& f = train.instances[i].factors;
      const int c = f.digit * 10 + factor_value(f, styles[j]);
      cell_of[i] = c;
      ++cells[static_cast<std::size_t>(c)];
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double mass = static_cast<double>(cells[static_cast<std::size_t>(cell_of[i])]) /
                          static_cast<double>(n);
      if (mass > tau) out.push_back({j, i});
    }
  }
  return out;
}

std::vector<Instance> do_z0(const Dataset& train, const AugmentConfig& cfg) {
  return emit_counterfactuals(train, cfg, true, false, kSaltDoZ0);
}

std::vector<Instance> do_zcnf(const Dataset& train, const AugmentConfig& cfg) {
  return emit_counterfactuals(train, cfg, false, true, kSaltDoZcnf);
}

std::vector<Instance> do_z0_and_zcnf(const Dataset& train, const AugmentConfig& cfg) {
  return emit_counterfactuals(train, cfg, true, true, kSaltDoZ0AndZcnf);
}

std::vector<Instance> do_x_patchmix(const Dataset& train, const AugmentConfig& cfg,
                                    std::vector<std::pair<FactorTuple, FactorTuple>>* parents) {
  if (train.instances.size() < 2)
    throw ValidationError("do_x_patchmix: need at least two instances");
  if (!(cfg.min_frac > 0.0 && cfg.min_frac <= cfg.max_frac && cfg.max_frac <= 1.0))
    throw ValidationError("do_x_patchmix: need 0 < min_frac <= max_frac <= 1");
  if (cfg.alpha_cap != -1 && cfg.alpha_cap <= 0)
    throw ValidationError("do_x_patchmix: alpha_cap must be positive or -1 (unlimited)");
  const std::size_t n = train.instances.size();
  const std::size_t n_emit =
      cfg.alpha_cap < 0 ? n : std::min(n, static_cast<std::size_t>(cfg.alpha_cap));
  const std::uint64_t base_seed = mix64(cfg.seed, kSaltDoX);
  std::vector<Instance> out;
  out.reserve(n_emit);
  if (parents) {
    parents->clear();
    parents->reserve(n_emit);
  }
  for (std::size_t k = 0; k < n_emit; ++k) {
    Stream rng = substream(base_seed, k);
    const Instance& b = train.instances[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(n)))];
    const Instance& d = train.instances[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(n)))];
    const double wf = cfg.min_frac + rng.uniform01() * (cfg.max_frac - cfg.min_frac);
    const double hf = cfg.min_frac + rng.uniform01() * (cfg.max_frac - cfg.min_frac);
    const int wp = std::clamp(static_cast<int>(std::lround(wf * kImageW)), 0, kImageW);
    const int hp = std::clamp(static_cast<int>(std::lround(hf * kImageH)), 0, kImageH);
    const int x0 = rng.uniform_int(kImageW - wp + 1);
    const int y0 = rng.uniform_int(kImageH - hp + 1);

    Instance em;
    em.image = b.image;
    for (int y = y0; y < y0 + hp; ++y) {
      const std::size_t off = (static_cast<std::size_t>(y) * kImageW + static_cast<std::size_t>(x0)) * 3;
      std::copy(d.image.begin() + static_cast<std::ptrdiff_t>(off),
                d.image.begin() + static_cast<std::ptrdiff_t>(off + static_cast<std::size_t>(wp) * 3),
                em.image.begin() + static_cast<std::ptrdiff_t>(off));
    }
    const float a = static_cast<float>(wp * hp) / static_cast<float>(kImageW * kImageH);
    for (std::size_t c = 0; c < em.soft.size(); ++c)
      em.soft[c] = (1.0f - a) * b.soft[c] + a * d.soft[c];
    std::size_t best = 0;
    for (std::size_t c = 1; c < em.soft.size(); ++c)
      if (em.soft[c] > em.soft[best]) best = c;
    em.label = static_cast<std::uint8_t>(best);
    em.factors = b.factors;
    em.origin = Origin::patchmix;
    if (parents) parents->push_back({b.factors, d.factors});
    out.push_back(std::move(em));
  }
  return out;
}

std::vector<Instance> replicate_unconfounded(const Dataset& train, const AugmentConfig&) {
  const auto subset = unconfounded_subset(train);
  const std::size_t n = train.instances.size();
  std::vector<Instance> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    Instance em = train.instances[subset[k % subset.size()]];
    em.origin = Origin::replica;
    out.push_back(std::move(em));
  }
  return out;
}

Dataset augment(const Dataset& train, Strategy strategy, const AugmentConfig& cfg) {
  std::vector<Instance> emitted;
  switch (strategy) {
    case Strategy::none: break;
    case Strategy::do_z0: emitted = do_z0(train, cfg); break;
    case Strategy::do_zcnf: emitted = do_zcnf(train, cfg); break;
    case Strategy::do_z0_and_zcnf: emitted = do_z0_and_zcnf(train, cfg); break;
    case Strategy::do_x: emitted = do_x_patchmix(train, cfg, nullptr); break;
    case Strategy::replicate_unconfounded: emitted = replicate_unconfounded(train, cfg); break;
  }
  Dataset out = train;
  out.instances.reserve(train.instances.size() + emitted.size());
  for (auto& em : emitted) out.instances.push_back(std::move(em));
  return out;
}

}  // namespace causalaug
