#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>

#include "causalaug/datagen.hpp"
#include "causalaug/dataset_io.hpp"
#include "causalaug/info.hpp"
#include "causalaug/rng.hpp"

using namespace causalaug;

namespace {

// Shared large CM dataset; generated once per test process.
const std::pair<Dataset, Dataset>& big_cm() {
  static const auto pr = generate_dataset({Variant::CM, 0.95, 60000, 10000, 42});
  return pr;
}

bool is_fg_pixel(const Image& img, int x, int y, int fg) {
  const auto& c = palette()[static_cast<std::size_t>(fg)];
  std::size_t p = (static_cast<std::size_t>(y) * kImageW + x) * 3;
  return img[p] == c[0] && img[p + 1] == c[1] && img[p + 2] == c[2];
}

JointCounts factor_counts(const Dataset& ds, const std::vector<std::string>& names,
                          const std::vector<int>& cards) {
  std::vector<Assignment> rows;
  rows.reserve(ds.instances.size());
  for (const auto& inst : ds.instances) {
    Assignment a;
    for (const auto& n : names) a[n] = factor_value(inst.factors, n);
    rows.push_back(std::move(a));
  }
  return JointCounts::from_samples(rows, names, cards);
}

double dataset_cnf(const Dataset& ds, const std::string& zi, const std::string& zj) {
  std::vector<Assignment> rows;
  rows.reserve(ds.instances.size());
  for (const auto& inst : ds.instances)
    rows.push_back({{zi, factor_value(inst.factors, zi)}, {zj, factor_value(inst.factors, zj)}});
  return cnf_empirical(rows, zi, zj);
}

}  // namespace

TEST_SUITE("palette and textures") {
  TEST_CASE("foreground and background intensities never alias") {
    for (const auto& c : palette()) {
      int full_max = std::max({int(c[0]), int(c[1]), int(c[2])});
      int half_max = full_max / 2;
      CHECK(full_max >= 170);
      CHECK(half_max <= 127);
    }
    // Pairwise distinct at full and at half intensity.
    std::set<std::array<int, 3>> fulls, halves;
    for (const auto& c : palette()) {
      fulls.insert({int(c[0]), int(c[1]), int(c[2])});
      halves.insert({c[0] / 2, c[1] / 2, c[2] / 2});
    }
    CHECK(fulls.size() == 10);
    CHECK(halves.size() == 10);
  }

  TEST_CASE("texture values are deterministic bytes") {
    for (int t = 0; t < 10; ++t)
      for (int y = 0; y < kImageH; ++y)
        for (int x = 0; x < kImageW; ++x)
          CHECK(texture_value(t, x, y) == texture_value(t, x, y));
    CHECK_THROWS_AS(texture_value(10, 0, 0), ValidationError);
  }
}

TEST_SUITE("render") {
  TEST_CASE("deterministic") {
    FactorTuple f{3, 1, 2, 7, -1, -1, 0.9f};
    CHECK(render(f, Variant::CM) == render(f, Variant::CM));
  }

  TEST_CASE("background change touches exactly the off-glyph pixels") {
    FactorTuple a{5, 0, 2, 3, -1, -1, 0.9f};
    FactorTuple b = a;
    b.bg = 8;
    Image ia = render(a, Variant::CM), ib = render(b, Variant::CM);
    for (int y = 0; y < kImageH; ++y)
      for (int x = 0; x < kImageW; ++x) {
        std::size_t p = (static_cast<std::size_t>(y) * kImageW + x) * 3;
        bool equal = ia[p] == ib[p] && ia[p + 1] == ib[p + 1] && ia[p + 2] == ib[p + 2];
        CHECK(equal == is_fg_pixel(ia, x, y, a.fg));
      }
  }

  TEST_CASE("stroke width follows thickness and morph") {
    // Digit 1 is two vertical segments at x=20; count fg pixels per row.
    FactorTuple thin{1, 0, 2, 3, -1, -1, 0.9f};
    FactorTuple thick{1, 1, 2, 3, -1, -1, 0.9f};
    Image it = render(thin, Variant::CM), ik = render(thick, Variant::CM);
    for (int y = 5; y <= 22; ++y) {
      int wt = 0, wk = 0;
      for (int x = 0; x < kImageW; ++x) {
        wt += is_fg_pixel(it, x, y, 2);
        wk += is_fg_pixel(ik, x, y, 2);
      }
      CHECK(wt == 1);
      CHECK(wk == 3);
    }
    // Thick at morph 1.5 widens to 5 and still stays inside the canvas.
    FactorTuple wide{8, 1, 2, 3, -1, -1, 1.5f};
    Image iw = render(wide, Variant::CM);
    CHECK(is_fg_pixel(iw, 13, 27, 2));
  }

  TEST_CASE("morph and index validation") {
    CHECK_THROWS_AS(render({3, 0, 2, 3, -1, -1, 0.2f}, Variant::CM), ValidationError);
    CHECK_THROWS_AS(render({3, 0, -1, 3, -1, -1, 0.9f}, Variant::CM), ValidationError);
    CHECK_THROWS_AS(render({3, 0, 2, 3, -1, -1, 0.9f}, Variant::WLM), ValidationError);
    CHECK_THROWS_AS(render({11, 0, 2, 3, -1, -1, 0.9f}, Variant::CM), ValidationError);
  }

  TEST_CASE("texture mode stores one grayscale value per pixel") {
    FactorTuple f{4, 1, -1, -1, 6, 1, 0.9f};
    Image img = render(f, Variant::WLM);
    for (int p = 0; p < kImageBytes; p += 3) {
      CHECK(img[static_cast<std::size_t>(p)] == img[static_cast<std::size_t>(p) + 1]);
      CHECK(img[static_cast<std::size_t>(p)] == img[static_cast<std::size_t>(p) + 2]);
    }
  }
}

TEST_SUITE("invert") {
  TEST_CASE("color grid: 2000 tuples render distinctly and invert exactly") {
    std::set<Image> images;
    for (int d = 0; d < 10; ++d)
      for (int t = 0; t < 2; ++t)
        for (int fg = 0; fg < 10; ++fg)
          for (int bg = 0; bg < 10; ++bg) {
            FactorTuple f{d, t, fg, bg, -1, -1, 0.9f};
            Image img = render(f, Variant::CM);
            images.insert(img);
            CHECK(invert(img, Variant::CM) == f);
          }
    CHECK(images.size() == 2000);
  }

  TEST_CASE("texture grid: 2000 tuples render distinctly and invert exactly") {
    std::set<Image> images;
    for (int d = 0; d < 10; ++d)
      for (int t = 0; t < 2; ++t)
        for (int ft = 0; ft < 10; ++ft)
          for (int bt = 0; bt < 10; ++bt) {
            FactorTuple f{d, t, -1, -1, ft, bt, 0.9f};
            Image img = render(f, Variant::WLM);
            images.insert(img);
            CHECK(invert(img, Variant::WLM) == f);
          }
    CHECK(images.size() == 2000);
  }

  TEST_CASE("one corrupted pixel reports the byte distance") {
    Image img = render({7, 1, 0, 4, -1, -1, 0.9f}, Variant::CM);
    img[500] = static_cast<std::uint8_t>(img[500] ^ 0x5A);
    try {
      invert(img, Variant::CM);
      FAIL("expected no-match error");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("distance 1") != std::string::npos);
    }
  }

  TEST_CASE("non-canonical morph does not match any template") {
    Image img = render({7, 1, 0, 4, -1, -1, 1.4f}, Variant::CM);
    CHECK_THROWS_AS(invert(img, Variant::CM), ValidationError);
  }

  TEST_CASE("palette relabeling commutes with counterfactual generation") {
    // h permutes palette indices of fg and bg. Computing a counterfactual in
    // original coordinates and re-encoding equals running the oracle pipeline
    // (invert, intervene, render) entirely in h-coordinates.
    Stream rng(2024);
    std::array<int, 10> perm{};
    for (int i = 0; i < 10; ++i) perm[static_cast<std::size_t>(i)] = i;
    for (int i = 9; i > 0; --i)
      std::swap(perm[static_cast<std::size_t>(i)],
                perm[static_cast<std::size_t>(rng.uniform_int(i + 1))]);
    auto apply_h = [&](FactorTuple z) {
      z.fg = perm[static_cast<std::size_t>(z.fg)];
      z.bg = perm[static_cast<std::size_t>(z.bg)];
      return z;
    };
    for (int trial = 0; trial < 100; ++trial) {
      FactorTuple z{rng.uniform_int(10), rng.uniform_int(2), rng.uniform_int(10),
                    rng.uniform_int(10), -1, -1, 0.9f};
      const std::string target = rng.bernoulli(0.5) ? "fg" : "bg";
      const int u = rng.uniform_int(10);

      FactorTuple cf = z;
      set_factor(cf, target, u);
      Image path_a = render(apply_h(cf), Variant::CM);

      FactorTuple hz = invert(render(apply_h(z), Variant::CM), Variant::CM);
      set_factor(hz, target, perm[static_cast<std::size_t>(u)]);
      Image path_b = render(hz, Variant::CM);

      CHECK(path_a == path_b);
    }
  }
}

TEST_SUITE("build_scm") {
  TEST_CASE("r=1 makes the canonical style certain") {
    Scm scm = build_scm({Variant::CM, 1.0, 1, 1, 0});
    DistTable j = exact_joint(scm, {"digit", "fg"});
    for (int d = 0; d < 10; ++d)
      for (int c = 0; c < 10; ++c) {
        double expect = c == canonical_value("fg", d) ? 0.1 : 0.0;
        CHECK(j.p[static_cast<std::size_t>(d) * 10 + c] ==
              doctest::Approx(expect).epsilon(1e-12));
      }
  }

  TEST_CASE("r=0 removes all confounding") {
    Scm scm = build_scm({Variant::CM, 0.0, 1, 1, 0});
    CHECK(std::abs(cnf_exact(scm, "digit", "fg")) <= 1e-12);
  }

  TEST_CASE("r=0.95 reproduces the closed form") {
    Scm scm = build_scm({Variant::DCM, 0.95, 1, 1, 0});
    for (const auto& s : style_factors(Variant::DCM)) {
      double cnf = cnf_exact(scm, "digit", s);
      CHECK(std::abs(cnf - gate_cnf_closed_form(0.95, 10)) <= 1e-9);
      CHECK(cnf == doctest::Approx(4.0404).epsilon(1e-4));
    }
  }

  TEST_CASE("CM background root is active but unconfounded") {
    Scm scm = build_scm({Variant::CM, 0.95, 1, 1, 0});
    CHECK(std::find(scm.confounded.begin(), scm.confounded.end(), "bg") == scm.confounded.end());
    CHECK(std::abs(cnf_exact(scm, "digit", "bg")) <= 1e-12);
    DistTable b = exact_joint(scm, {"bg"});
    for (double p : b.p) CHECK(p == doctest::Approx(0.1).epsilon(1e-12));
  }

  TEST_CASE("roles and the thickness mechanism") {
    Scm scm = build_scm({Variant::WLM, 0.5, 1, 1, 0});
    CHECK(scm.causal == "digit");
    CHECK(scm.confounded == std::vector<std::string>{"fg_tex", "bg_tex"});
    CHECK(scm.confounders == std::vector<std::string>{"u_digit"});
    DistTable j = exact_joint(scm, {"digit", "thickness"});
    for (int d = 0; d < 10; ++d) {
      CHECK(j.p[static_cast<std::size_t>(d) * 2 + thickness_rule(d)] ==
            doctest::Approx(0.1).epsilon(1e-12));
      CHECK(j.p[static_cast<std::size_t>(d) * 2 + (1 - thickness_rule(d))] == 0.0);
    }
  }
}

TEST_SUITE("generate_dataset") {
  TEST_CASE("deterministic and prefix-stable") {
    DatasetSpec small{Variant::DCM, 0.9, 40, 20, 7};
    auto a = generate_dataset(small);
    auto b = generate_dataset(small);
    REQUIRE(a.first.instances.size() == b.first.instances.size());
    for (std::size_t i = 0; i < a.first.instances.size(); ++i) {
      CHECK(a.first.instances[i].factors == b.first.instances[i].factors);
      CHECK(a.first.instances[i].image == b.first.instances[i].image);
    }
    DatasetSpec bigger = small;
    bigger.n_train = 80;
    bigger.n_test = 40;
    auto c = generate_dataset(bigger);
    for (std::size_t i = 0; i < a.first.instances.size(); ++i)
      CHECK(a.first.instances[i].factors == c.first.instances[i].factors);
    for (std::size_t i = 0; i < a.second.instances.size(); ++i)
      CHECK(a.second.instances[i].factors == c.second.instances[i].factors);
  }

  TEST_CASE("train split: thickness rule, constant morph, canonical fraction") {
    const auto& [train, test] = big_cm();
    std::size_t canonical = 0;
    for (const auto& inst : train.instances) {
      CHECK(inst.factors.thickness == thickness_rule(inst.factors.digit));
      CHECK(inst.factors.morph == 0.9f);
      CHECK(inst.origin == Origin::real);
      CHECK(inst.label == inst.factors.digit);
      canonical += inst.factors.fg == canonical_value("fg", inst.factors.digit);
    }
    double frac = static_cast<double>(canonical) / static_cast<double>(train.instances.size());
    CHECK(std::abs(frac - 0.955) < 0.004);
  }

  TEST_CASE("train empirical joint converges to the exact joint") {
    const auto& [train, test] = big_cm();
    Scm scm = build_scm(train.spec);
    DistTable exact = exact_joint(scm, {"digit", "fg"});
    DistTable emp = factor_counts(train, {"digit", "fg"}, {10, 10}).to_dist();
    double tv = 0.0;
    for (std::size_t i = 0; i < exact.p.size(); ++i) tv += std::abs(exact.p[i] - emp.p[i]);
    CHECK(tv / 2.0 < 0.01);
  }

  TEST_CASE("train empirical cnf matches the full-scale reference value") {
    const auto& [train, test] = big_cm();
    double cnf = dataset_cnf(train, "digit", "fg");
    CHECK(std::abs(cnf - 4.041) < 0.03);
  }

  TEST_CASE("test split is unconfounded with randomized nuisance factors") {
    const auto& [train, test] = big_cm();
    CHECK(dataset_cnf(test, "digit", "fg") < 0.02);
    // Thickness side independent of digit.
    std::vector<Assignment> rows;
    for (const auto& inst : test.instances)
      rows.push_back({{"digit", inst.factors.digit}, {"thickness", inst.factors.thickness}});
    JointCounts jc = JointCounts::from_samples(rows, {"digit", "thickness"}, {10, 2});
    CHECK(mutual_information(jc.to_dist(), {"digit"}, {"thickness"}) < 0.01);
    double morph_sum = 0.0;
    for (const auto& inst : test.instances) {
      CHECK(inst.factors.morph >= 0.3);
      CHECK(inst.factors.morph <= 1.5);
      morph_sum += inst.factors.morph;
    }
    CHECK(std::abs(morph_sum / static_cast<double>(test.instances.size()) - 0.9) < 0.01);
  }
}

TEST_SUITE("unconfounded_subset") {
  TEST_CASE("selects exactly the non-canonical instances") {
    const auto& [train, test] = big_cm();
    auto idx = unconfounded_subset(train);
    std::set<std::size_t> in_subset(idx.begin(), idx.end());
    for (std::size_t i = 0; i < train.instances.size(); ++i) {
      const auto& f = train.instances[i].factors;
      bool canonical = f.fg == canonical_value("fg", f.digit);
      CHECK(in_subset.count(i) == (canonical ? 0u : 1u));
    }
    double frac = static_cast<double>(idx.size()) / static_cast<double>(train.instances.size());
    CHECK(std::abs(frac - 0.045) < 0.004);
  }

  TEST_CASE("r=1 leaves the subset empty") {
    auto [train, test] = generate_dataset({Variant::CM, 1.0, 50, 10, 3});
    CHECK_THROWS_AS(unconfounded_subset(train), ValidationError);
  }
}

TEST_SUITE("dataset io") {
  TEST_CASE("record layout is frozen") {
    Instance inst;
    inst.label = 7;
    inst.factors = {7, 1, 3, 9, -1, -1, 0.9f};
    inst.origin = Origin::counterfactual;
    inst.soft.fill(0.0f);
    inst.soft[7] = 1.0f;
    inst.image = render(inst.factors, Variant::CM);
    std::array<std::uint8_t, kRecordBytes> rec{};
    encode_record(inst, rec.data());
    CHECK(rec[0] == 7);
    CHECK(rec[1] == 7);
    CHECK(rec[2] == 1);
    CHECK(rec[3] == 3);
    CHECK(rec[4] == 9);
    CHECK(rec[5] == 255);
    CHECK(rec[6] == 255);
    float morph = 0.0f;
    std::memcpy(&morph, rec.data() + 7, 4);
    CHECK(morph == doctest::Approx(0.9f));
    CHECK(rec[11] == 1);
    float s7 = 0.0f;
    std::memcpy(&s7, rec.data() + 12 + 7 * 4, 4);
    CHECK(s7 == 1.0f);
    CHECK(rec[52] == inst.image[0]);
    CHECK(rec[kRecordBytes - 1] == inst.image[kImageBytes - 1]);
    Instance back = decode_record(rec.data());
    CHECK(back.factors == inst.factors);
    CHECK(back.image == inst.image);
    CHECK(back.origin == inst.origin);
  }

  TEST_CASE("directory round trip is bit-exact") {
    namespace fs = std::filesystem;
    const std::string dir = (fs::temp_directory_path() / "causalaug_io_test").string();
    fs::remove_all(dir);
    auto [train, test] = generate_dataset({Variant::DCM, 0.8, 50, 10, 11});
    write_dataset(dir + "/train", train, "test-harness gen");
    Dataset back = read_dataset(dir + "/train");
    CHECK(back.split == "train");
    CHECK(back.spec.r == train.spec.r);
    CHECK(back.spec.variant == Variant::DCM);
    REQUIRE(back.instances.size() == train.instances.size());
    for (std::size_t i = 0; i < back.instances.size(); ++i) {
      CHECK(back.instances[i].factors == train.instances[i].factors);
      CHECK(back.instances[i].image == train.instances[i].image);
      CHECK(back.instances[i].soft == train.instances[i].soft);
    }
    // Rewriting produces the identical digest.
    const std::string digest = file_digest_hex(dir + "/train/data.bin");
    write_dataset(dir + "/train", train, "test-harness gen");
    CHECK(file_digest_hex(dir + "/train/data.bin") == digest);
    fs::remove_all(dir);
  }

  TEST_CASE("corruption is detected on read") {
    namespace fs = std::filesystem;
    const std::string dir = (fs::temp_directory_path() / "causalaug_io_corrupt").string();
    fs::remove_all(dir);
    auto [train, test] = generate_dataset({Variant::CM, 0.5, 20, 10, 1});
    write_dataset(dir, train, "test-harness gen");
    {
      std::fstream f(dir + "/data.bin", std::ios::in | std::ios::out | std::ios::binary);
      f.seekp(100);
      char b = 0x3C;
      f.write(&b, 1);
    }
    CHECK_THROWS_AS(read_dataset(dir), IoError);
    fs::remove_all(dir);
  }

  TEST_CASE("extra manifest fields are preserved") {
    namespace fs = std::filesystem;
    const std::string dir = (fs::temp_directory_path() / "causalaug_io_extra").string();
    fs::remove_all(dir);
    auto [train, test] = generate_dataset({Variant::CM, 0.5, 5, 5, 1});
    write_dataset(dir, train, "cmd", R"({"strategy":"do_z0","source_digest":"abc"})");
    std::ifstream man(dir + "/manifest.json");
    std::string text((std::istreambuf_iterator<char>(man)), std::istreambuf_iterator<char>());
    CHECK(text.find("\"strategy\": \"do_z0\"") != std::string::npos);
    CHECK(text.find("\"source_digest\": \"abc\"") != std::string::npos);
    fs::remove_all(dir);
  }

  TEST_CASE("wlm factors serialize with unused color bytes") {
    auto [train, test] = generate_dataset({Variant::WLM, 0.7, 5, 5, 9});
    for (const auto& inst : train.instances) {
      CHECK(inst.factors.fg == -1);
      CHECK(inst.factors.bg == -1);
      CHECK(inst.factors.fg_tex >= 0);
      CHECK(inst.factors.bg_tex >= 0);
    }
    std::array<std::uint8_t, kRecordBytes> rec{};
    encode_record(train.instances[0], rec.data());
    CHECK(rec[3] == 255);
    CHECK(rec[4] == 255);
  }
}
