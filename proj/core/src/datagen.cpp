#include <algorithm>
#include <cmath>

#include "causalaug/datagen.hpp"
#include "causalaug/error.hpp"
#include "causalaug/rng.hpp"

namespace causalaug {

namespace {

constexpr std::uint64_t kTrainStream = 1;
constexpr std::uint64_t kTestStream = 2;
constexpr std::uint64_t kOverrideSalt = 0x7111CC;

}  // namespace

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::CM: return "cm";
    case Variant::DCM: return "dcm";
    case Variant::WLM: return "wlm";
  }
  throw ValidationError("variant_name: unknown variant");
}

Variant variant_from_name(const std::string& name) {
  if (name == "cm") return Variant::CM;
  if (name == "dcm") return Variant::DCM;
  if (name == "wlm") return Variant::WLM;
  throw ValidationError("unknown variant name: " + name);
}

const std::vector<std::string>& style_factors(Variant v) {
  static const std::vector<std::string> cm = {"fg"};
  static const std::vector<std::string> dcm = {"fg", "bg"};
  static const std::vector<std::string> wlm = {"fg_tex", "bg_tex"};
  switch (v) {
    case Variant::CM: return cm;
    case Variant::DCM: return dcm;
    case Variant::WLM: return wlm;
  }
  throw ValidationError("style_factors: unknown variant");
}

int canonical_value(const std::string& factor, int digit) {
  if (digit < 0 || digit > 9) throw ValidationError("canonical_value: digit outside 0..9");
  if (factor == "fg" || factor == "fg_tex") return digit;
  if (factor == "bg" || factor == "bg_tex") return (digit + 5) % 10;
  throw ValidationError("canonical_value: unknown style factor " + factor);
}

int factor_value(const FactorTuple& f, const std::string& name) {
  if (name == "digit") return f.digit;
  if (name == "thickness") return f.thickness;
  if (name == "fg") return f.fg;
  if (name == "bg") return f.bg;
  if (name == "fg_tex") return f.fg_tex;
  if (name == "bg_tex") return f.bg_tex;
  throw ValidationError("factor_value: unknown factor " + name);
}

void set_factor(FactorTuple& f, const std::string& name, int value) {
  if (name == "digit")
    f.digit = value;
  else if (name == "thickness")
    f.thickness = value;
  else if (name == "fg")
    f.fg = value;
  else if (name == "bg")
    f.bg = value;
  else if (name == "fg_tex")
    f.fg_tex = value;
  else if (name == "bg_tex")
    f.bg_tex = value;
  else
    throw ValidationError("set_factor: unknown factor " + name);
}

Scm build_scm(const DatasetSpec& spec) {
  if (spec.r < 0.0 || spec.r > 1.0) throw ValidationError("build_scm: r outside [0, 1]");
  const auto& styles = style_factors(spec.variant);
  Scm scm;
  scm.dag.add_node("u_digit");
  scm.factors.push_back({"u_digit", 10});
  for (const auto& s : styles) {
    scm.dag.add_node("gate_" + s);
    scm.factors.push_back({"gate_" + s, 2});
    scm.dag.add_node("noise_" + s);
    scm.factors.push_back({"noise_" + s, 10});
  }
  scm.dag.add_node("digit");
  scm.factors.push_back({"digit", 10});
  for (const auto& s : styles) {
    scm.dag.add_node(s);
    scm.factors.push_back({s, 10});
  }
  scm.dag.add_node("thickness");
  scm.factors.push_back({"thickness", 2});
  if (spec.variant == Variant::CM) {
    // Active unconfounded background: a plain uniform root.
    scm.dag.add_node("bg");
    scm.factors.push_back({"bg", 10});
  }

  scm.dag.add_edge("u_digit", "digit");
  for (const auto& s : styles) {
    scm.dag.add_edge("u_digit", s);
    scm.dag.add_edge("gate_" + s, s);
    scm.dag.add_edge("noise_" + s, s);
  }
  scm.dag.add_edge("digit", "thickness");

  // Mechanisms in node order.
  scm.mechanisms.push_back({scm.dag.index_of("u_digit"), {}, std::vector<double>(10, 0.1)});
  for (const auto& s : styles) {
    scm.mechanisms.push_back(
        {scm.dag.index_of("gate_" + s), {}, {1.0 - spec.r, spec.r}});
    scm.mechanisms.push_back(
        {scm.dag.index_of("noise_" + s), {}, std::vector<double>(10, 0.1)});
  }
  {
    Mechanism digit;
    digit.child = scm.dag.index_of("digit");
    digit.parents = {scm.dag.index_of("u_digit")};
    digit.rows.assign(100, 0.0);
    for (int u = 0; u < 10; ++u) digit.rows[static_cast<std::size_t>(u) * 10 + u] = 1.0;
    scm.mechanisms.push_back(std::move(digit));
  }
  for (const auto& s : styles) {
    Mechanism m;
    m.child = scm.dag.index_of(s);
    m.parents = {scm.dag.index_of("u_digit"), scm.dag.index_of("gate_" + s),
                 scm.dag.index_of("noise_" + s)};
    m.rows.assign(10 * 2 * 10 * 10, 0.0);
    for (int u = 0; u < 10; ++u)
      for (int g = 0; g < 2; ++g)
        for (int n = 0; n < 10; ++n) {
          std::size_t row = (static_cast<std::size_t>(u) * 2 + g) * 10 + n;
          m.rows[row * 10 + (g ? canonical_value(s, u) : n)] = 1.0;
        }
    scm.mechanisms.push_back(std::move(m));
  }
  {
    Mechanism thick;
    thick.child = scm.dag.index_of("thickness");
    thick.parents = {scm.dag.index_of("digit")};
    thick.rows.assign(20, 0.0);
    for (int d = 0; d < 10; ++d)
      thick.rows[static_cast<std::size_t>(d) * 2 + thickness_rule(d)] = 1.0;
    scm.mechanisms.push_back(std::move(thick));
  }
  if (spec.variant == Variant::CM)
    scm.mechanisms.push_back({scm.dag.index_of("bg"), {}, std::vector<double>(10, 0.1)});

  scm.causal = "digit";
  scm.confounded = styles;
  scm.confounders = {"u_digit"};
  scm.validate();
  return scm;
}

namespace {

Instance instance_from_assignment(const Assignment& a, Variant variant, int thickness,
                                  float morph) {
  Instance inst;
  FactorTuple f;
  f.digit = a.at("digit");
  f.thickness = thickness;
  f.morph = morph;
  if (variant == Variant::WLM) {
    f.fg_tex = a.at("fg_tex");
    f.bg_tex = a.at("bg_tex");
  } else {
    f.fg = a.at("fg");
    f.bg = a.at("bg");
  }
  inst.factors = f;
  inst.label = static_cast<std::uint8_t>(f.digit);
  inst.origin = Origin::real;
  inst.soft.fill(0.0f);
  inst.soft[static_cast<std::size_t>(f.digit)] = 1.0f;
  inst.image = render(f, variant);
  return inst;
}

}  // namespace

std::pair<Dataset, Dataset> generate_dataset(const DatasetSpec& spec) {
  if (spec.n_train <= 0 || spec.n_test <= 0)
    throw ValidationError("generate_dataset: counts must be positive");
  if (spec.r < 0.0 || spec.r > 1.0) throw ValidationError("generate_dataset: r outside [0, 1]");

  Dataset train{spec, "train", {}};
  {
    Scm scm = build_scm(spec);
    auto draws = sample(scm, static_cast<std::size_t>(spec.n_train), mix64(spec.seed, kTrainStream));
    train.instances.reserve(draws.size());
    for (const auto& a : draws)
      train.instances.push_back(
          instance_from_assignment(a, spec.variant, a.at("thickness"), 0.9f));
  }

  Dataset test{spec, "test", {}};
  {
    DatasetSpec zero = spec;
    zero.r = 0.0;
    Scm scm = build_scm(zero);
    const std::uint64_t derived = mix64(spec.seed, kTestStream);
    auto draws = sample(scm, static_cast<std::size_t>(spec.n_test), derived);
    test.instances.reserve(draws.size());
    for (std::size_t i = 0; i < draws.size(); ++i) {
      // Nuisance overrides: thickness side uniform, morph truncated normal.
      Stream rng = substream(mix64(derived, kOverrideSalt), i);
      const int thickness = rng.bernoulli(0.5) ? 1 : 0;
      const float morph = static_cast<float>(rng.trunc_normal(0.9, 0.2, 0.3, 1.5));
      test.instances.push_back(instance_from_assignment(draws[i], spec.variant, thickness, morph));
    }
  }
  return {std::move(train), std::move(test)};
}

std::vector<std::size_t> unconfounded_subset(const Dataset& train) {
  const auto& styles = style_factors(train.spec.variant);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < train.instances.size(); ++i) {
    const auto& f = train.instances[i].factors;
    bool canonical = true;
    for (const auto& s : styles)
      if (factor_value(f, s) != canonical_value(s, f.digit)) {
        canonical = false;
        break;
      }
    if (!canonical) out.push_back(i);
  }
  if (out.empty())
    throw ValidationError("unconfounded_subset: empty (every instance is canonical)");
  return out;
}

}  // namespace causalaug
