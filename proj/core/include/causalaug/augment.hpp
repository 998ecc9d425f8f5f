#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "causalaug/datagen.hpp"

namespace causalaug {

enum class Strategy { none, do_z0, do_zcnf, do_z0_and_zcnf, do_x, replicate_unconfounded };

std::string strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);

struct AugmentConfig {
  double tau = 0.05;
  int per_instance = 1;
  // Maximum emitted instances; -1 = unlimited.
  std::int64_t alpha_cap = -1;
  // Patch side-length fractions for the patch-mix strategy.
  double min_frac = 0.2;
  double max_frac = 0.5;
  std::uint64_t seed = 0;
};

// Three-step counterfactual on one instance: abduction recovers the factor
// tuple from the image and cross-checks it against the stored provenance,
// action overwrites the target factor, prediction re-renders. Thickness
// follows its mechanism when the digit actually changes; it stays put under
// style edits and under targeting it directly.
Instance counterfactual(const Instance& src, Variant v, const std::string& target, int value);

// Cells (digit, style value) whose empirical mass strictly exceeds tau,
// unioned over style factors. Returned as (style factor index, instance
// index) pairs sorted by factor then instance.
std::vector<std::pair<std::size_t, std::size_t>> filter_confounded(const Dataset& train,
                                                                   double tau);

// Counterfactual emission strategies over the filtered confounded cells.
// Resampling draws uniformly over the values differing from the current one;
// per_instance draws for one source are without replacement per coordinate.
std::vector<Instance> do_z0(const Dataset& train, const AugmentConfig& cfg);
std::vector<Instance> do_zcnf(const Dataset& train, const AugmentConfig& cfg);
std::vector<Instance> do_z0_and_zcnf(const Dataset& train, const AugmentConfig& cfg);

// Patch-mix emissions: donor rectangle pasted into a base image at shared
// coordinates, soft label mixed by patch area. When `parents` is non-null it
// receives the (base, donor) factor tuples per emission, in order.
std::vector<Instance> do_x_patchmix(
    const Dataset& train, const AugmentConfig& cfg,
    std::vector<std::pair<FactorTuple, FactorTuple>>* parents = nullptr);

// Cyclic replication of the unconfounded subset up to the dataset size.
std::vector<Instance> replicate_unconfounded(const Dataset& train, const AugmentConfig& cfg);

// Original instances followed by the strategy's emissions.
Dataset augment(const Dataset& train, Strategy strategy, const AugmentConfig& cfg);

}  // namespace causalaug
