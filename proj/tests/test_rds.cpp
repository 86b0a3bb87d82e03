#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rds_oracle.hpp"
#include "stereo/errors.hpp"
#include "stereo/rds.hpp"

using namespace stereo;

TEST_CASE("correction offset follows the piecewise mapping") {
  CHECK(compute_correction_offset(7.0) == -5);
  CHECK(compute_correction_offset(4.59) == 3);
  CHECK(compute_correction_offset(5.5) == -3);
  for (double o1 = 0.1; o1 <= 10.0; o1 += 0.01) {
    const int expect = o1 >= 7.0 ? -5 : o1 >= 6.0 ? -4 : o1 >= 5.0 ? -3 : 3;
    CHECK(compute_correction_offset(o1) == expect);
  }
  CHECK_THROWS_AS(compute_correction_offset(0.05), DomainError);
  CHECK_THROWS_AS(compute_correction_offset(10.01), DomainError);
  CHECK_THROWS_AS(compute_correction_offset(NAN), DomainError);
}

TEST_CASE("layout geometry") {
  const RdsConfig cfg;
  const auto layout = make_layout(cfg);
  CHECK(layout.side_px == doctest::Approx(86.0 / 0.3225));
  CHECK(layout.origin_x == doctest::Approx((800 - layout.side_px) / 2));
  CHECK(layout.origin_y == doctest::Approx((600 - layout.side_px) / 2));
  CHECK(layout.shape_side_px == doctest::Approx(0.6 * layout.side_px));
  // Hidden share of the area equals hidden_dots / dots_per_layer.
  CHECK(layout.shape_area() / (layout.side_px * layout.side_px) == doctest::Approx(8400.0 / 30000.0));
  CHECK(layout.bar_px == doctest::Approx(layout.shape_side_px / 3.0));

  // Mask area by Monte Carlo agrees with the closed form for each shape.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, layout.side_px);
  for (Shape s : kAllShapes) {
    int in = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) in += layout.in_shape(s, u(rng), u(rng));
    CHECK(double(in) / n == doctest::Approx(layout.shape_area() / (layout.side_px * layout.side_px)).epsilon(0.02));
  }
}

TEST_CASE("shape masks open on the named side") {
  const auto layout = make_layout(RdsConfig{});
  const double a = layout.shape_origin, s = layout.shape_side_px, w = layout.bar_px;
  const double mid = a + s / 2, top = a + w / 2, bottom = a + s - w / 2, left = a + w / 2, right = a + s - w / 2;
  CHECK_FALSE(layout.in_shape(Shape::OpenUp, mid, top));
  CHECK(layout.in_shape(Shape::OpenUp, mid, bottom));
  CHECK(layout.in_shape(Shape::OpenDown, mid, top));
  CHECK_FALSE(layout.in_shape(Shape::OpenDown, mid, bottom));
  CHECK_FALSE(layout.in_shape(Shape::OpenRight, right, mid));
  CHECK(layout.in_shape(Shape::OpenRight, left, mid));
  CHECK(layout.in_shape(Shape::OpenLeft, right, mid));
  CHECK_FALSE(layout.in_shape(Shape::OpenLeft, left, mid));
  for (Shape sh : kAllShapes) CHECK_FALSE(layout.in_shape(sh, mid, mid));
}

TEST_CASE("shape names") {
  for (Shape s : kAllShapes) {
    CHECK(parse_shape(to_string(s)) == s);
    CHECK(parse_shape(std::string(1, char('0' + int(s)))) == s);
  }
  CHECK_FALSE(parse_shape("circle").has_value());
  CHECK_FALSE(parse_shape("4").has_value());
}

TEST_CASE("config validation") {
  RdsConfig c;
  c.hidden_dots = c.dots_per_layer;
  CHECK_THROWS_AS(make_layout(c), ConfigError);
  c = RdsConfig{};
  c.dots_per_layer = 80000;  // more dots than texture pixels
  CHECK_THROWS_AS(make_layout(c), ConfigError);
  c = RdsConfig{};
  c.texture_size_mm = 300.0;
  CHECK_THROWS_AS(make_layout(c), ConfigError);
  c = RdsConfig{};
  c.dot_size_px = 0.0;
  CHECK_THROWS_AS(make_layout(c), ConfigError);
  CHECK_THROWS_AS(generate_rds(RdsConfig{}, 0.0, Shape::OpenUp, 1), DomainError);
  CHECK_THROWS_AS(generate_rds(RdsConfig{}, 11.0, Shape::OpenUp, 1), DomainError);
}

TEST_CASE("generation is seeded and structurally sound") {
  const RdsConfig cfg;
  const auto a = generate_rds(cfg, 4.59, Shape::OpenUp, 42);
  const auto b = generate_rds(cfg, 4.59, Shape::OpenUp, 42);
  REQUIRE(a.left_dots.size() == 30000);
  REQUIRE(a.right_dots.size() == 30000);
  CHECK(a.o2_px == 3);
  bool identical = true;
  for (std::size_t i = 0; i < a.left_dots.size(); ++i) {
    identical &= a.left_dots[i].x == b.left_dots[i].x && a.left_dots[i].y == b.left_dots[i].y;
    identical &= a.right_dots[i].x == b.right_dots[i].x && a.right_dots[i].y == b.right_dots[i].y;
  }
  CHECK(identical);

  const auto c = generate_rds(cfg, 4.59, Shape::OpenUp, 43);
  CHECK(c.left_dots[0].x != a.left_dots[0].x);

  int hidden = 0;
  bool background_identical = true, inside = true, rows_kept = true;
  const auto& L = a.layout;
  for (std::size_t i = 0; i < a.left_dots.size(); ++i) {
    const Dot& l = a.left_dots[i];
    const Dot& r = a.right_dots[i];
    hidden += l.hidden;
    if (!l.hidden) background_identical &= l.x == r.x && l.y == r.y;
    rows_kept &= l.y == r.y;
    for (const Dot* d : {&l, &r})
      inside &= d->x >= L.origin_x && d->x < L.origin_x + L.side_px && d->y >= L.origin_y &&
                d->y < L.origin_y + L.side_px;
  }
  CHECK(hidden == 8400);
  CHECK(background_identical);
  CHECK(inside);
  CHECK(rows_kept);
}

TEST_CASE("hidden region disparity matches o1 for every shape") {
  const RdsConfig cfg;
  for (Shape s : kAllShapes)
    for (double o1 : {0.1, 2.0, 6.5, 10.0}) {
      const auto stim = generate_rds(cfg, o1, s, 1000 + int(s));
      CHECK(std::abs(disparity_audit(stim, AuditRegion::Hidden) - o1) <= 0.01);
      CHECK(std::abs(rds_oracle::hidden_offset(stim) - o1) <= 0.01);
    }
}

TEST_CASE("background has zero disparity") {
  const auto stim = generate_rds(RdsConfig{}, 7.0, Shape::OpenLeft, 5);
  CHECK(std::abs(disparity_audit(stim, AuditRegion::Background)) <= 0.01);
}

TEST_CASE("generated layers pass the monocular audit; an injected cue fails") {
  const RdsConfig cfg;
  const auto stim = generate_rds(cfg, 4.59, Shape::OpenRight, 9);
  const auto rep = monocular_cue_audit(stim);
  CHECK(rep.density_chi2_p > 0.01);
  CHECK(rep.single_layer_shape_score < kShapeCueThreshold);

  const auto cued = rds_oracle::inject_cue(stim);
  const auto bad = monocular_cue_audit(cued);
  CHECK(bad.single_layer_shape_score > kShapeCueThreshold);
  CHECK(bad.density_chi2_p < 0.01);
}

TEST_CASE("rasterize: empty and single-dot images") {
  RdsConfig cfg;
  RdsStimulus empty;
  empty.layout = make_layout(cfg);
  const auto black = rasterize(empty, cfg);
  CHECK(black.width == 800);
  CHECK(black.height == 600);
  bool all_zero = true;
  for (auto v : black.pixels) all_zero &= v == 0;
  CHECK(all_zero);

  RdsStimulus one = empty;
  one.left_dots.push_back({100.0, 50.0, 1.0, false});
  const auto img = rasterize(one, cfg);
  int lit = 0;
  for (int y = 0; y < 600; ++y)
    for (int x = 0; x < 800; ++x)
      for (int c = 0; c < 3; ++c) lit += img.at(x, y, c) != 0;
  CHECK(lit == 1);
  CHECK(img.at(100, 50, 0) == 255);

  RdsStimulus cyan = empty;
  cyan.right_dots.push_back({10.0, 20.0, 1.0, false});
  const auto ci = rasterize(cyan, cfg);
  CHECK(ci.at(10, 20, 0) == 0);
  CHECK(ci.at(10, 20, 1) == 255);
  CHECK(ci.at(10, 20, 2) == 255);

  // A half-pixel offset splits coverage between two neighbours.
  RdsStimulus half = empty;
  half.left_dots.push_back({100.5, 50.0, 1.0, false});
  const auto hi = rasterize(half, cfg);
  CHECK(hi.at(100, 50, 0) == 128);
  CHECK(hi.at(101, 50, 0) == 128);
}

TEST_CASE("rasterize applies the lookup table per channel") {
  RdsConfig cfg;
  RdsStimulus s;
  s.layout = make_layout(cfg);
  s.left_dots.push_back({100.0, 50.0, 0.5, false});
  CHECK(rasterize(s, cfg).at(100, 50, 0) == 128);
  const auto t = build_normalized_gamma_table(2.0);
  CHECK(rasterize(s, cfg, t).at(100, 50, 0) == std::lround(t.entries[128] * 255.0));
}

TEST_CASE("red and cyan channels carry equal energy") {
  const RdsConfig cfg;
  const auto img = rasterize(generate_rds(cfg, 4.59, Shape::OpenUp, 42), cfg);
  double r = 0, g = 0, b = 0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      r += img.at(x, y, 0);
      g += img.at(x, y, 1);
      b += img.at(x, y, 2);
    }
  CHECK(std::abs(r - g) / r < 0.02);
  CHECK(std::abs(r - b) / r < 0.02);
  CHECK(img.channel_mean(0) == doctest::Approx(r / (255.0 * 800 * 600)));
}

TEST_CASE("wire payload withholds the shape") {
  const auto stim = generate_rds(RdsConfig{}, 2.0, Shape::OpenDown, 11);
  const auto j = to_wire_json(stim);
  CHECK(j.at("o2") == stim.o2_px);
  CHECK(j.at("shape_hidden") == false);
  REQUIRE(j.at("layers").size() == 2);
  CHECK(j["layers"][0]["channel"] == "red");
  CHECK(j["layers"][1]["channel"] == "cyan");
  CHECK(j["layers"][0]["dots"].size() == 30000);
  CHECK(j["layers"][0]["dots"][0].size() == 3);
  std::vector<std::string> keys;
  for (auto& [k, v] : j.items()) keys.push_back(k);
  CHECK(keys == std::vector<std::string>{"layers", "o2", "shape_hidden"});
  for (auto& layer : j["layers"]) {
    std::vector<std::string> lk;
    for (auto& [k, v] : layer.items()) lk.push_back(k);
    CHECK(lk == std::vector<std::string>{"channel", "dots"});
  }
  const auto text = j.dump();
  for (const char* leak : {"open_", "\"shape\"", "hidden\":true", "seed"}) CHECK(text.find(leak) == std::string::npos);
}

TEST_CASE("single-layer shape scores match uniform layers") {
  const RdsConfig cfg;
  const auto layout = make_layout(cfg);
  std::vector<double> generated, uniform;
  for (int seed = 0; seed < 100; ++seed) {
    const Shape s = kAllShapes[seed % 4];
    const auto stim = generate_rds(cfg, 4.59, s, 7000 + seed);
    generated.push_back(single_layer_shape_score(stim.right_dots, layout, stim.o2_px));
    uniform.push_back(single_layer_shape_score(rds_oracle::uniform_layer(layout, 30000, 9000 + seed), layout,
                                               stim.o2_px));
  }
  CHECK(oracle::ks_two_sample_p(generated, uniform) > 0.01);
  for (double v : uniform) CHECK(v < kShapeCueThreshold);
}
