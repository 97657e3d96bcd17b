#include "depthtk/gradcheck.hpp"
#include "depthtk/losses.hpp"
#include "depthtk/synth.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace depthtk;

namespace {

ImageGrid constant_image(int h, int w, int ch, float v) {
  ImageGrid img = ImageGrid::zeros(h, w, ch);
  for (auto& plane : img.channels) plane.setConstant(v);
  return img;
}

ImageGrid random_image(int h, int w, int ch, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> uni(0.0f, 1.0f);
  ImageGrid img = ImageGrid::zeros(h, w, ch);
  for (auto& plane : img.channels) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        plane(y, x) = uni(rng);
      }
    }
  }
  return img;
}

}  // namespace

TEST_CASE("ssim: identical images give exactly 1") {
  const ImageGrid x = random_image(9, 13, 3, 77);
  const loss::PhotometricConfig cfg;
  const GridF s = loss::ssim(x, x, cfg);
  CHECK((s == 1.0f).all());
}

TEST_CASE("ssim: inverted checkerboard is strongly negative") {
  const int n = 8;
  ImageGrid x = ImageGrid::zeros(n, n, 1);
  ImageGrid y = ImageGrid::zeros(n, n, 1);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const float v = static_cast<float>((r + c) % 2);
      x.channels[0](r, c) = v;
      y.channels[0](r, c) = 1.0f - v;
    }
  }
  const GridF s = loss::ssim(x, y, loss::PhotometricConfig{});
  CHECK((s < 0.0f).all());
}

TEST_CASE("ssim: zero-variance closed form") {
  const double c1 = 0.01 * 0.01;
  const ImageGrid x = constant_image(5, 5, 1, 0.4f);
  const ImageGrid y = constant_image(5, 5, 1, 0.5f);
  const GridF s = loss::ssim(x, y, loss::PhotometricConfig{});
  const double expect = (2.0 * 0.4 * 0.5 + c1) / (0.4 * 0.4 + 0.5 * 0.5 + c1);
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 5; ++c) {
      CHECK(s(r, c) == doctest::Approx(expect).epsilon(1e-6));
    }
  }
  CHECK_THROWS_AS(loss::ssim(x, constant_image(4, 5, 1, 0.1f), loss::PhotometricConfig{}),
                  InvalidInputError);
}

TEST_CASE("photometric_error endpoints") {
  const ImageGrid x = random_image(6, 6, 3, 5);
  loss::PhotometricConfig cfg;

  CHECK((loss::photometric_error(x, x, cfg) == 0.0f).all());

  cfg.alpha = 0.0;
  const GridF l1 = loss::photometric_error(constant_image(4, 4, 3, 0.2f),
                                           constant_image(4, 4, 3, 0.5f), cfg);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      CHECK(l1(r, c) == doctest::Approx(0.3).epsilon(1e-6));
    }
  }

  cfg.alpha = 1.0;
  const ImageGrid a = constant_image(5, 5, 1, 0.4f);
  const ImageGrid b = constant_image(5, 5, 1, 0.5f);
  const GridF pe = loss::photometric_error(a, b, cfg);
  const GridF s = loss::ssim(a, b, cfg);
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 5; ++c) {
      CHECK(pe(r, c) == doctest::Approx((1.0 - s(r, c)) / 2.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("cycle_mask: percentile threshold, outlier exclusion, degenerate fallback") {
  loss::PhotometricConfig cfg;
  cfg.alpha = 0.0;  // pure L1 so per-pixel errors are directly controllable
  const MaskMap all = MaskMap::Constant(2, 5, true);

  SUBCASE("errors 1..10 keep the six pixels strictly below the 70th percentile") {
    const ImageGrid i_t = constant_image(2, 5, 1, 0.0f);
    ImageGrid i_rt = ImageGrid::zeros(2, 5, 1);
    // Errors k/100 for k = 1..10 laid out row-major.
    for (int k = 0; k < 10; ++k) {
      i_rt.channels[0](k / 5, k % 5) = static_cast<float>(k + 1) / 100.0f;
    }
    const MaskMap m = loss::cycle_mask(i_t, i_rt, all, cfg, 0.7);
    // gamma = 0.07; pixels with error < 0.07 are the first six.
    CHECK(m.count() == 6);
    for (int k = 0; k < 10; ++k) {
      CHECK(m(k / 5, k % 5) == (k + 1 < 7));
    }
  }

  SUBCASE("a single large outlier is excluded") {
    const ImageGrid i_t = constant_image(2, 5, 1, 0.0f);
    ImageGrid i_rt = ImageGrid::zeros(2, 5, 1);
    i_rt.channels[0](1, 4) = 0.9f;
    const MaskMap m = loss::cycle_mask(i_t, i_rt, all, cfg, 0.7);
    CHECK_FALSE(m(1, 4));
    CHECK(m.count() == 9);
  }

  SUBCASE("perfect round trip keeps every valid pixel") {
    const ImageGrid i_t = random_image(2, 5, 1, 9);
    MaskMap valid = all;
    valid(0, 0) = false;
    const MaskMap m = loss::cycle_mask(i_t, i_t, valid, cfg, 0.7);
    CHECK((m == valid).all());
  }

  SUBCASE("no valid pixels is an empty-domain error") {
    const ImageGrid i_t = random_image(2, 5, 1, 9);
    CHECK_THROWS_AS(loss::cycle_mask(i_t, i_t, MaskMap::Constant(2, 5, false), cfg, 0.7),
                    EmptyDomainError);
  }
}

TEST_CASE("min_mask keeps the per-pixel argmin with index tie-break") {
  GridF e0(1, 3), e1(1, 3), e2(1, 3);
  e0 << 0.1f, 0.1f, 3.0f;
  e1 << 0.2f, 0.1f, 1.0f;
  e2 << 0.3f, 0.5f, 2.0f;
  const std::vector<MaskMap> masks = loss::min_mask({e0, e1, e2});
  // Pixel 0: source 0 wins; pixel 1: tie -> source 0; pixel 2: source 1.
  CHECK(masks[0](0, 0));
  CHECK_FALSE(masks[1](0, 0));
  CHECK(masks[0](0, 1));
  CHECK_FALSE(masks[1](0, 1));
  CHECK(masks[1](0, 2));
  CHECK_FALSE(masks[0](0, 2));
  CHECK_FALSE(masks[2](0, 2));

  CHECK_THROWS_AS(loss::min_mask({e0}), InvalidInputError);
}

TEST_CASE("auto_mask basics") {
  loss::PhotometricConfig cfg;
  cfg.alpha = 0.0;
  const int h = 4, w = 4;
  const ImageGrid target = random_image(h, w, 1, 123);
  const ImageGrid shifted = random_image(h, w, 1, 321);  // stands in for a moved source
  const MaskMap all = MaskMap::Constant(h, w, true);

  SUBCASE("perfect warp on a static scene keeps the pixel") {
    const MaskMap m = loss::auto_mask(target, {shifted}, {target}, {all}, cfg);
    CHECK(m.all());  // warped error 0 < unwarped error > 0
  }

  SUBCASE("identical target and source everywhere is masked out") {
    const MaskMap m = loss::auto_mask(target, {target}, {target}, {all}, cfg);
    CHECK_FALSE(m.any());  // 0 < 0 fails
  }

  SUBCASE("pixels with no valid warp are masked out") {
    const MaskMap none = MaskMap::Constant(h, w, false);
    const MaskMap m = loss::auto_mask(target, {shifted}, {target}, {none}, cfg);
    CHECK_FALSE(m.any());
  }
}

TEST_CASE("motion_mask truth table at threshold 0.6") {
  auto ratio_case = [](float d, float t) {
    const DepthMap dm = DepthMap::constant(2, 2, d);
    const DepthMap tm = DepthMap::constant(2, 2, t);
    return loss::motion_mask(dm, tm).all();
  };
  CHECK(ratio_case(1.0f, 1.0f));        // max(0, 0) = 0 < 0.6
  CHECK(ratio_case(1.5f, 1.0f));        // max(0.5, -1/3) = 0.5 < 0.6
  CHECK_FALSE(ratio_case(2.0f, 1.0f));  // max(1, -0.5) = 1 >= 0.6
  CHECK(ratio_case(1.0f, 1.5f));        // max(-1/3, 0.5) = 0.5 < 0.6
  CHECK_FALSE(ratio_case(1.0f, 2.0f));  // max(-0.5, 1) = 1 >= 0.6

  DepthMap bad = DepthMap::constant(2, 2, 1.0f);
  bad.values(0, 0) = -1.0f;
  CHECK_THROWS_AS(loss::motion_mask(bad, DepthMap::constant(2, 2, 1.0f)), InvalidInputError);
  DepthMap invalid = DepthMap::constant(2, 2, 1.0f);
  invalid.valid(1, 1) = false;
  CHECK_THROWS_AS(loss::motion_mask(invalid, DepthMap::constant(2, 2, 1.0f)), InvalidInputError);
}

TEST_CASE("motion_loss reduces |D - T| outside the motion mask") {
  const DepthMap d = DepthMap::constant(2, 2, 2.0f);
  const DepthMap t = DepthMap::constant(2, 2, 1.0f);
  const MaskMap m = loss::motion_mask(d, t);  // all false (ratio 1 >= 0.6)
  REQUIRE_FALSE(m.any());
  const loss::LossResult r = loss::motion_loss(d, t, m);
  CHECK(r.scalar == doctest::Approx(1.0).epsilon(1e-7));
  CHECK((r.map == 1.0f).all());

  // Identical maps: zero loss everywhere.
  const loss::LossResult zero = loss::motion_loss(t, t, loss::motion_mask(t, t));
  CHECK(zero.scalar == 0.0);

  // Every pixel inside the mask: empty reduction domain, scalar defined as 0.
  const loss::LossResult empty = loss::motion_loss(d, t, MaskMap::Constant(2, 2, true));
  CHECK(empty.scalar == 0.0);
  CHECK_FALSE(empty.mask.any());
}

TEST_CASE("photometric_loss takes the pixel-wise minimum over valid sources") {
  loss::PhotometricConfig cfg;
  cfg.alpha = 0.0;
  const int h = 3, w = 3;
  const ImageGrid target = constant_image(h, w, 1, 0.5f);
  const ImageGrid warp_a = constant_image(h, w, 1, 0.7f);  // error 0.2
  const ImageGrid warp_b = constant_image(h, w, 1, 0.6f);  // error 0.1
  const MaskMap all = MaskMap::Constant(h, w, true);

  SUBCASE("perfect warps give zero") {
    const loss::LossResult r = loss::photometric_loss(target, {target}, {all}, all, all, cfg);
    CHECK(r.scalar == 0.0);
  }

  SUBCASE("minimum of 0.2 and 0.1 is 0.1") {
    const loss::LossResult r =
        loss::photometric_loss(target, {warp_a, warp_b}, {all, all}, all, all, cfg);
    CHECK(r.scalar == doctest::Approx(0.1).epsilon(1e-5));
  }

  SUBCASE("masked-out pixels are excluded from the mean") {
    MaskMap motion = all;
    motion(0, 0) = false;
    const loss::LossResult r =
        loss::photometric_loss(target, {warp_a, warp_b}, {all, all}, motion, all, cfg);
    CHECK_FALSE(r.mask(0, 0));
    CHECK(r.scalar == doctest::Approx(0.1).epsilon(1e-5));
    // Scalar equals the unmasked map averaged over mask-true pixels only.
    double acc = 0.0;
    int n = 0;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (r.mask(y, x)) {
          acc += r.map(y, x);
          ++n;
        }
      }
    }
    CHECK(r.scalar == doctest::Approx(acc / n).epsilon(1e-9));
  }

  SUBCASE("invalid warp candidates leave the pixel to the other source") {
    MaskMap b_only = all;
    b_only(1, 1) = false;  // source b invalid at center
    const loss::LossResult r =
        loss::photometric_loss(target, {warp_a, warp_b}, {all, b_only}, all, all, cfg);
    CHECK(r.map(1, 1) == doctest::Approx(0.2).epsilon(1e-5));
    CHECK(r.map(0, 0) == doctest::Approx(0.1).epsilon(1e-5));
  }
}

TEST_CASE("smoothness_loss: constant depth, step sign, 2x2 closed form") {
  const ImageGrid flat = constant_image(4, 4, 3, 0.3f);
  CHECK(loss::smoothness_loss(DepthMap::constant(4, 4, 2.5f), flat).scalar == 0.0);

  DepthMap step = DepthMap::constant(4, 4, 1.0f);
  step.values.col(2).setConstant(2.0f);
  step.values.col(3).setConstant(2.0f);
  CHECK(loss::smoothness_loss(step, flat).scalar > 0.0);

  // 2x2 case: depths (1, 2 | 1, 2), image edge of gradient g between the
  // columns. Normalized inverse depths are (4/3, 2/3); both row terms are
  // |2/3 - 4/3| * e^-g and the scalar is their mean over 4 pixels: e^-g / 3.
  const double g = 0.5;
  DepthMap d(2, 2);
  d.values << 1.0f, 2.0f, 1.0f, 2.0f;
  d.valid.setConstant(true);
  ImageGrid img = ImageGrid::zeros(2, 2, 1);
  img.channels[0] << 0.0f, static_cast<float>(g), 0.0f, static_cast<float>(g);
  const loss::LossResult r = loss::smoothness_loss(d, img);
  CHECK(r.scalar == doctest::Approx(std::exp(-g) / 3.0).epsilon(1e-6));
}

TEST_CASE("geometric_loss: value range, symmetry, exact scale invariance") {
  const MaskMap all = MaskMap::Constant(1, 3, true);
  geom::DepthPair pair;
  pair.computed.resize(1, 3);
  pair.interpolated.resize(1, 3);
  pair.valid = all;
  pair.computed << 2.0f, 4.0f, 3.0f;
  pair.interpolated << 4.0f, 2.0f, 3.0f;

  const loss::LossResult r = loss::geometric_loss(pair, all, all, all);
  CHECK(r.map(0, 0) == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(r.map(0, 1) == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(r.map(0, 2) == 0.0f);

  // Swapping the two depth readings leaves the map unchanged (bitwise).
  geom::DepthPair swapped = pair;
  std::swap(swapped.computed, swapped.interpolated);
  const loss::LossResult rs = loss::geometric_loss(swapped, all, all, all);
  CHECK((rs.map == r.map).all());

  // Scaling both readings by a power of two is exactly invariant.
  geom::DepthPair scaled = pair;
  scaled.computed *= 2.0f;
  scaled.interpolated *= 2.0f;
  const loss::LossResult rsc = loss::geometric_loss(scaled, all, all, all);
  CHECK((rsc.map == r.map).all());
  CHECK(rsc.scalar == r.scalar);

  // Range [0, 1) over random positive pairs.
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<float> uni(0.01f, 50.0f);
  geom::DepthPair random_pair;
  random_pair.computed.resize(8, 8);
  random_pair.interpolated.resize(8, 8);
  random_pair.valid = MaskMap::Constant(8, 8, true);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      random_pair.computed(y, x) = uni(rng);
      random_pair.interpolated(y, x) = uni(rng);
    }
  }
  const MaskMap all8 = MaskMap::Constant(8, 8, true);
  const loss::LossResult rr = loss::geometric_loss(random_pair, all8, all8, all8);
  CHECK((rr.map >= 0.0f).all());
  CHECK((rr.map < 1.0f).all());
}

TEST_CASE("reference_loss means the absolute difference") {
  const DepthMap a = DepthMap::constant(2, 2, 3.0f);
  CHECK(loss::reference_loss(a, a).scalar == 0.0);

  DepthMap b = a;
  b.values += 0.5f;
  CHECK(loss::reference_loss(a, b).scalar == doctest::Approx(0.5).epsilon(1e-7));

  DepthMap half = a;
  half.values(0, 0) += 1.0f;
  half.values(0, 1) += 1.0f;
  CHECK(loss::reference_loss(a, half).scalar == doctest::Approx(0.5).epsilon(1e-7));
}

TEST_CASE("total_loss is the weighted sum") {
  loss::LossComponents parts;
  CHECK(loss::total_loss(parts, loss::LossWeights{}) == 0.0);

  parts = {1.0, 1.0, 1.0, 1.0, 1.0};
  CHECK(loss::total_loss(parts, loss::LossWeights{2.0, 3.0, 4.0}) == doctest::Approx(11.0));

  parts = {0.25, 9.0, 9.0, 9.0, 0.5};
  CHECK(loss::total_loss(parts, loss::LossWeights{0.0, 0.0, 0.0}) == doctest::Approx(0.75));
}

TEST_CASE("analytic gradients: hand values and masked-out zeros") {
  SUBCASE("geometric at (computed 2, interpolated 4) is 2/16 = 0.125") {
    GridF a(1, 1), b(1, 1);
    a << 2.0f;
    b << 4.0f;
    const MaskMap one = MaskMap::Constant(1, 1, true);
    const GridD g = loss::geometric_loss_gradient(a, b, one);
    CHECK(g(0, 0) == doctest::Approx(0.125).epsilon(1e-9));
  }

  SUBCASE("reference gradient is sign / N") {
    DepthMap d_t = DepthMap::constant(2, 2, 1.0f);
    DepthMap d_ref = d_t;
    d_ref.values(0, 0) = 1.5f;
    d_ref.values(0, 1) = 0.5f;
    const GridD g = loss::reference_loss_gradient(d_t, d_ref);
    CHECK(g(0, 0) == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(g(0, 1) == doctest::Approx(-0.25).epsilon(1e-9));
    CHECK(g(1, 0) == 0.0);
  }

  SUBCASE("masked-out pixels get zero gradient") {
    GridF a = GridF::Constant(2, 2, 2.0f);
    GridF b = GridF::Constant(2, 2, 4.0f);
    MaskMap m = MaskMap::Constant(2, 2, true);
    m(1, 1) = false;
    const GridD g = loss::geometric_loss_gradient(a, b, m);
    CHECK(g(1, 1) == 0.0);
    CHECK(g(0, 0) != 0.0);
  }

  SUBCASE("unknown loss name throws") {
    CHECK_THROWS_AS(loss::loss_kind_from_name("fancy"), InvalidInputError);
    CHECK(loss::loss_kind_from_name("photometric-l1") == loss::LossKind::photometric_l1);
  }
}

TEST_CASE("finite differences agree with every analytic gradient") {
  using loss::LossKind;
  for (const LossKind kind : {LossKind::geometric, LossKind::photometric_l1, LossKind::smoothness,
                              LossKind::motion, LossKind::reference}) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const gradcheck::Report r = gradcheck::run(kind, 8, seed);
      INFO("loss ", loss::loss_kind_name(kind), " seed ", seed);
      CHECK(r.max_rel_err < 1e-4);
      CHECK(r.pixels_checked > 0);
    }
  }
}
