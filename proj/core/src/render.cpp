#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "causalaug/datagen.hpp"
#include "causalaug/error.hpp"
#include "causalaug/rng.hpp"

namespace causalaug {

namespace {

// Segment bits: A top, B upper right, C lower right, D bottom, E lower left,
// F upper left, G middle.
constexpr std::uint8_t kA = 1, kB = 2, kC = 4, kD = 8, kE = 16, kF = 32, kG = 64;
constexpr std::uint8_t kSegs[10] = {
    kA | kB | kC | kD | kE | kF,       // 0
    kB | kC,                           // 1
    kA | kB | kG | kE | kD,            // 2
    kA | kB | kG | kC | kD,            // 3
    kF | kG | kB | kC,                 // 4
    kA | kF | kG | kC | kD,            // 5
    kA | kF | kG | kE | kD | kC,       // 6
    kA | kB | kC,                      // 7
    kA | kB | kC | kD | kE | kF | kG,  // 8
    kA | kB | kF | kG | kC | kD,       // 9
};

// Glyph box: x in [7, 20], y in [4, 23]; horizontal strokes thicken downward,
// vertical strokes thicken rightward, so morph up to 1.5 stays inside 28x28.
constexpr int kLeft = 7, kRight = 20, kTop = 4, kMid = 13, kBottom = 23;

std::array<bool, kImageH * kImageW> glyph_mask(int digit, int thickness, double morph) {
  std::array<bool, kImageH * kImageW> mask{};
  const double base = thickness ? 3.0 : 1.0;
  const int w = std::max(1, static_cast<int>(std::lround(base * morph)));
  auto hseg = [&](int y) {
    for (int dy = 0; dy < w; ++dy) {
      int yy = std::min(y + dy, kImageH - 1);
      for (int x = kLeft; x <= kRight; ++x) mask[static_cast<std::size_t>(yy) * kImageW + x] = true;
    }
  };
  auto vseg = [&](int x, int y0, int y1) {
    for (int dx = 0; dx < w; ++dx) {
      int xx = std::min(x + dx, kImageW - 1);
      for (int y = y0; y <= y1; ++y) mask[static_cast<std::size_t>(y) * kImageW + xx] = true;
    }
  };
  const std::uint8_t segs = kSegs[digit];
  if (segs & kA) hseg(kTop);
  if (segs & kG) hseg(kMid);
  if (segs & kD) hseg(kBottom);
  if (segs & kF) vseg(kLeft, kTop, kMid);
  if (segs & kB) vseg(kRight, kTop, kMid);
  if (segs & kE) vseg(kLeft, kMid, kBottom);
  if (segs & kC) vseg(kRight, kMid, kBottom);
  return mask;
}

void validate_tuple(const FactorTuple& f, Variant v) {
  if (f.digit < 0 || f.digit > 9) throw ValidationError("render: digit outside 0..9");
  if (f.thickness != 0 && f.thickness != 1) throw ValidationError("render: thickness not in {0,1}");
  if (!(f.morph >= 0.3 && f.morph <= 1.5)) throw ValidationError("render: morph outside [0.3, 1.5]");
  auto idx_ok = [](int i) { return i >= 0 && i <= 9; };
  if (v == Variant::WLM) {
    if (!idx_ok(f.fg_tex) || !idx_ok(f.bg_tex))
      throw ValidationError("render: texture index outside 0..9");
  } else {
    if (!idx_ok(f.fg) || !idx_ok(f.bg)) throw ValidationError("render: palette index outside 0..9");
  }
}

Image render_validated(const FactorTuple& f, Variant v) {
  const auto mask = glyph_mask(f.digit, f.thickness, f.morph);
  Image img{};
  if (v == Variant::WLM) {
    for (int y = 0; y < kImageH; ++y)
      for (int x = 0; x < kImageW; ++x) {
        const bool on = mask[static_cast<std::size_t>(y) * kImageW + x];
        const std::uint8_t v8 = texture_value(on ? f.fg_tex : f.bg_tex, x, y);
        // Foreground >= 128 > 127 >= background keeps the mask recoverable.
        const std::uint8_t out = on ? static_cast<std::uint8_t>(128 + v8 / 2)
                                    : static_cast<std::uint8_t>(v8 / 2);
        std::size_t p = (static_cast<std::size_t>(y) * kImageW + x) * 3;
        img[p] = img[p + 1] = img[p + 2] = out;
      }
    return img;
  }
  const auto& fg_rgb = palette()[static_cast<std::size_t>(f.fg)];
  const auto& bg_rgb = palette()[static_cast<std::size_t>(f.bg)];
  for (int y = 0; y < kImageH; ++y)
    for (int x = 0; x < kImageW; ++x) {
      const bool on = mask[static_cast<std::size_t>(y) * kImageW + x];
      std::size_t p = (static_cast<std::size_t>(y) * kImageW + x) * 3;
      for (int c = 0; c < 3; ++c)
        img[p + c] = on ? fg_rgb[static_cast<std::size_t>(c)]
                        : static_cast<std::uint8_t>(bg_rgb[static_cast<std::size_t>(c)] / 2);
    }
  return img;
}

// Exact-match template index over the canonical-morph grid, built lazily per
// rendering mode (color for CM/DCM, texture for WLM).
const std::map<Image, FactorTuple>& templates(Variant v) {
  static const std::map<Image, FactorTuple> color = [] {
    std::map<Image, FactorTuple> m;
    for (int d = 0; d < 10; ++d)
      for (int t = 0; t < 2; ++t)
        for (int fg = 0; fg < 10; ++fg)
          for (int bg = 0; bg < 10; ++bg) {
            FactorTuple f{d, t, fg, bg, -1, -1, 0.9f};
            m.emplace(render_validated(f, Variant::CM), f);
          }
    return m;
  }();
  static const std::map<Image, FactorTuple> texture = [] {
    std::map<Image, FactorTuple> m;
    for (int d = 0; d < 10; ++d)
      for (int t = 0; t < 2; ++t)
        for (int ft = 0; ft < 10; ++ft)
          for (int bt = 0; bt < 10; ++bt) {
            FactorTuple f{d, t, -1, -1, ft, bt, 0.9f};
            m.emplace(render_validated(f, Variant::WLM), f);
          }
    return m;
  }();
  return v == Variant::WLM ? texture : color;
}

}  // namespace

const std::array<std::array<std::uint8_t, 3>, 10>& palette() {
  static const std::array<std::array<std::uint8_t, 3>, 10> p = {{{230, 25, 75},
                                                                 {60, 180, 75},
                                                                 {255, 225, 25},
                                                                 {0, 130, 200},
                                                                 {245, 130, 48},
                                                                 {145, 30, 180},
                                                                 {70, 240, 240},
                                                                 {240, 50, 230},
                                                                 {210, 245, 60},
                                                                 {170, 110, 40}}};
  return p;
}

std::uint8_t texture_value(int tex, int x, int y) {
  if (tex < 0 || tex > 9) throw ValidationError("texture_value: index outside 0..9");
  int b;
  switch (tex) {
    case 0: b = (x >> 1) & 1; break;
    case 1: b = ((x + y) >> 1) & 1; break;
    case 2: b = (y >> 1) & 1; break;
    case 3: b = ((x - y + 28) >> 1) & 1; break;
    case 4: b = ((2 * x + y) >> 2) & 1; break;
    case 5: b = ((x >> 2) ^ (y >> 2)) & 1; break;
    case 6: b = x % 5 < 2 && y % 5 < 2; break;
    case 7: b = x >= 14; break;
    case 8:
      b = static_cast<int>(
          splitmix64(static_cast<std::uint64_t>(y) * kImageW + static_cast<std::uint64_t>(x)) >>
          63);
      break;
    default: {
      const double dx = x - 13.5, dy = y - 13.5;
      b = static_cast<int>(std::lround(std::hypot(dx, dy))) & 1;
    }
  }
  // Each texture owns a disjoint value band, so any nonempty pixel region
  // identifies the texture index; that keeps render injective even for
  // degenerate one-column glyphs where two binary patterns coincide.
  return static_cast<std::uint8_t>(24 * tex + 12 * b);
}

int thickness_rule(int digit) {
  if (digit < 0 || digit > 9) throw ValidationError("thickness_rule: digit outside 0..9");
  return digit >= 5 ? 1 : 0;
}

Image render(const FactorTuple& f, Variant v) {
  validate_tuple(f, v);
  return render_validated(f, v);
}

FactorTuple invert(const Image& img, Variant v) {
  const auto& index = templates(v);
  auto it = index.find(img);
  if (it != index.end()) return it->second;
  std::size_t best = kImageBytes + 1;
  const FactorTuple* nearest = nullptr;
  for (const auto& [timg, tf] : index) {
    std::size_t dist = 0;
    for (int i = 0; i < kImageBytes; ++i)
      dist += timg[static_cast<std::size_t>(i)] != img[static_cast<std::size_t>(i)];
    if (dist < best) {
      best = dist;
      nearest = &tf;
    }
  }
  std::string msg = "invert: no exact template match; nearest template at byte distance " +
                    std::to_string(best);
  if (nearest != nullptr) msg += " (digit " + std::to_string(nearest->digit) + ")";
  throw ValidationError(msg);
}

}  // namespace causalaug
