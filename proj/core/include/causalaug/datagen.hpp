#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "causalaug/scm.hpp"

namespace causalaug {

enum class Variant { CM, DCM, WLM };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

inline constexpr int kImageH = 28;
inline constexpr int kImageW = 28;
inline constexpr int kImageC = 3;
inline constexpr int kImageBytes = kImageH * kImageW * kImageC;
inline constexpr int kClasses = 10;

using Image = std::array<std::uint8_t, kImageBytes>;

enum class Origin : std::uint8_t { real = 0, counterfactual = 1, patchmix = 2, replica = 3 };

// Discrete generative factors plus the continuous stroke scalar. Unused
// factors (textures in CM/DCM, colors in WLM) are -1, serialized as 255.
struct FactorTuple {
  int digit = 0;
  int thickness = 0;  // 0 thin, 1 thick
  int fg = -1;
  int bg = -1;
  int fg_tex = -1;
  int bg_tex = -1;
  float morph = 0.9f;

  bool operator==(const FactorTuple&) const = default;
};

struct Instance {
  std::uint8_t label = 0;
  FactorTuple factors;
  Origin origin = Origin::real;
  std::array<float, kClasses> soft{};
  Image image{};
};

struct DatasetSpec {
  Variant variant = Variant::CM;
  double r = 0.0;
  int n_train = 0;
  int n_test = 0;
  std::uint64_t seed = 0;
};

struct Dataset {
  DatasetSpec spec;
  std::string split;  // "train" or "test"
  std::vector<Instance> instances;
};

// Style factor names confounded with the digit in each variant.
const std::vector<std::string>& style_factors(Variant v);

// Canonical style value per digit; factor is one of fg, bg, fg_tex, bg_tex.
int canonical_value(const std::string& factor, int digit);

// Named access to the discrete factors (digit, thickness, fg, bg, fg_tex, bg_tex).
int factor_value(const FactorTuple& f, const std::string& name);
void set_factor(FactorTuple& f, const std::string& name, int value);

// Train-split stroke rule: digits 0-4 thin, 5-9 thick.
int thickness_rule(int digit);

// 10 maximally separated RGB colors; foreground uses the full value,
// background the half-intensity value, so the glyph mask never aliases.
const std::array<std::array<std::uint8_t, 3>, 10>& palette();

// Grayscale texture value in 0..255 for texture index 0..9 at pixel (x, y).
std::uint8_t texture_value(int tex, int x, int y);

// Deterministic 28x28x3 rendering of a factor tuple; the mechanism g.
Image render(const FactorTuple& f, Variant v);

// Exact inverse of render over the canonical-morph factor grid. Throws
// ValidationError naming the minimum byte distance for non-rendered input.
FactorTuple invert(const Image& img, Variant v);

// The confounded-family SCM behind a dataset spec: confounder u_digit, one
// Bernoulli(r) gate and one uniform noise root per style factor, digit a copy
// of u_digit, thickness its deterministic child.
Scm build_scm(const DatasetSpec& spec);

// Confounded train split and unconfounded (r=0, randomized nuisance) test split.
std::pair<Dataset, Dataset> generate_dataset(const DatasetSpec& spec);

// Indices of train instances deviating from the canonical map in at least one
// style coordinate. Throws ValidationError when empty (r = 1).
std::vector<std::size_t> unconfounded_subset(const Dataset& train);

}  // namespace causalaug
