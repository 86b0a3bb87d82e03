#include "stereo/rds.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_map>

#include <boost/math/special_functions/gamma.hpp>

#include "stereo/errors.hpp"
#include "stereo/random.hpp"

namespace stereo {

std::string_view to_string(Shape shape) {
  switch (shape) {
    case Shape::OpenUp: return "open_up";
    case Shape::OpenDown: return "open_down";
    case Shape::OpenRight: return "open_right";
    case Shape::OpenLeft: return "open_left";
  }
  return "unknown";
}

std::optional<Shape> parse_shape(std::string_view text) {
  for (Shape s : kAllShapes) {
    if (text == to_string(s) || (text.size() == 1 && text[0] == static_cast<char>('0' + static_cast<int>(s))))
      return s;
  }
  return std::nullopt;
}

std::vector<std::pair<double, double>> TextureLayout::row_segments(Shape shape, double v) const {
  const double s = shape_side_px;
  const double w = bar_px;
  const double a = shape_origin;
  const double lv = v - a;
  if (lv < 0.0 || lv >= s) return {};
  const bool top_bar = lv < w;
  const bool bottom_bar = lv >= s - w;
  switch (shape) {
    case Shape::OpenUp:
      if (bottom_bar) return {{a, a + s}};
      return {{a, a + w}, {a + s - w, a + s}};
    case Shape::OpenDown:
      if (top_bar) return {{a, a + s}};
      return {{a, a + w}, {a + s - w, a + s}};
    case Shape::OpenRight:
      if (top_bar || bottom_bar) return {{a, a + s}};
      return {{a, a + w}};
    case Shape::OpenLeft:
      if (top_bar || bottom_bar) return {{a, a + s}};
      return {{a + s - w, a + s}};
  }
  return {};
}

bool TextureLayout::in_shape(Shape shape, double u, double v) const {
  for (const auto& [b, e] : row_segments(shape, v)) {
    if (u >= b && u < e) return true;
  }
  return false;
}

double TextureLayout::shape_area() const {
  const double s = shape_side_px;
  const double w = bar_px;
  return 3.0 * s * w - 2.0 * w * w;
}

TextureLayout make_layout(const RdsConfig& config) {
  config.profile.validate();
  if (!(config.texture_size_mm > 0.0)) throw ConfigError("texture size must be positive");
  if (config.dots_per_layer <= 0 || config.hidden_dots <= 0)
    throw ConfigError("dot counts must be positive");
  if (config.hidden_dots >= config.dots_per_layer)
    throw ConfigError("hidden dots must be fewer than dots per layer");
  if (!(config.shape_fraction > 0.0 && config.shape_fraction <= 1.0))
    throw ConfigError("shape fraction must lie in (0, 1]");
  if (!(config.dot_size_px > 0.0)) throw ConfigError("dot size must be positive");

  TextureLayout layout;
  layout.side_px = mm_to_pixels(config.texture_size_mm, config.profile);
  if (layout.side_px > config.profile.horizontal_resolution_px ||
      layout.side_px > config.profile.vertical_resolution_px)
    throw ConfigError("texture does not fit on the display");
  if (static_cast<double>(config.dots_per_layer) > layout.side_px * layout.side_px)
    throw ConfigError("dot count exceeds texture area capacity");

  layout.origin_x = (config.profile.horizontal_resolution_px - layout.side_px) / 2.0;
  layout.origin_y = (config.profile.vertical_resolution_px - layout.side_px) / 2.0;
  layout.shape_side_px = config.shape_fraction * layout.side_px;
  layout.shape_origin = (layout.side_px - layout.shape_side_px) / 2.0;

  // Bracket area 3sw - 2w^2 must equal the hidden share of the texture area.
  const double s = layout.shape_side_px;
  const double area = layout.side_px * layout.side_px * config.hidden_dots / config.dots_per_layer;
  if (area > s * s) throw ConfigError("hidden dot share does not fit inside the shape region");
  layout.bar_px = (3.0 * s - std::sqrt(9.0 * s * s - 8.0 * area)) / 4.0;
  if (layout.bar_px < 1.0) throw ConfigError("shape bars narrower than one pixel");
  return layout;
}

int compute_correction_offset(double o1_px) {
  if (!std::isfinite(o1_px) || o1_px < kMinDisparityPx || o1_px > kMaxDisparityPx)
    throw DomainError("disparity outside [0.1, 10] px");
  if (o1_px >= 7.0) return -5;
  if (o1_px >= 6.0) return -4;
  if (o1_px >= 5.0) return -3;
  return 3;
}

namespace {

double wrap(double x, double begin, double end) {
  const double width = end - begin;
  double r = std::fmod(x - begin, width);
  if (r < 0.0) r += width;
  return begin + r;
}

}  // namespace

RdsStimulus generate_rds(const RdsConfig& config, double o1_px, Shape shape, std::uint64_t seed) {
  const TextureLayout layout = make_layout(config);
  RdsStimulus stim;
  stim.o1_px = o1_px;
  stim.o2_px = compute_correction_offset(o1_px);
  stim.shape = shape;
  stim.seed = seed;
  stim.layout = layout;

  std::mt19937_64 rng(seed);
  const double side = layout.side_px;
  const double a = layout.shape_origin;
  const double s = layout.shape_side_px;

  std::vector<Dot> base;
  base.reserve(static_cast<std::size_t>(config.dots_per_layer));
  while (static_cast<int>(base.size()) < config.hidden_dots) {
    const double u = a + s * uniform01(rng);
    const double v = a + s * uniform01(rng);
    if (layout.in_shape(shape, u, v)) base.push_back({u, v, 1.0, true});
  }
  while (static_cast<int>(base.size()) < config.dots_per_layer) {
    const double u = side * uniform01(rng);
    const double v = side * uniform01(rng);
    if (!layout.in_shape(shape, u, v)) base.push_back({u, v, 1.0, false});
  }
  for (std::size_t i = base.size() - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i + 1));
    std::swap(base[i], base[std::min(j, i)]);
  }

  std::vector<Dot> right = base;
  for (Dot& d : right) {
    if (!d.hidden) continue;
    for (const auto& [b, e] : layout.row_segments(shape, d.y)) {
      if (d.x >= b && d.x < e) {
        d.x = wrap(d.x - o1_px, b, e);
        break;
      }
    }
  }

  auto place = [&](std::vector<Dot> dots) {
    for (Dot& d : dots) {
      d.x = layout.origin_x + wrap(d.x + stim.o2_px, 0.0, side);
      d.y = layout.origin_y + d.y;
    }
    return dots;
  };
  stim.left_dots = place(std::move(base));
  stim.right_dots = place(std::move(right));
  return stim;
}

namespace {

void splat(std::vector<double>& plane, int width, int height, double cx, double cy, double size, double value) {
  const double x0 = cx - size / 2.0, x1 = cx + size / 2.0;
  const double y0 = cy - size / 2.0, y1 = cy + size / 2.0;
  // Pixel i covers [i - 0.5, i + 0.5).
  const int i_begin = std::max(0, static_cast<int>(std::floor(x0 + 0.5)));
  const int i_end = std::min(width - 1, static_cast<int>(std::ceil(x1 + 0.5)) - 1);
  const int j_begin = std::max(0, static_cast<int>(std::floor(y0 + 0.5)));
  const int j_end = std::min(height - 1, static_cast<int>(std::ceil(y1 + 0.5)) - 1);
  for (int j = j_begin; j <= j_end; ++j) {
    const double oy = std::min(y1, j + 0.5) - std::max(y0, j - 0.5);
    if (oy <= 0.0) continue;
    for (int i = i_begin; i <= i_end; ++i) {
      const double ox = std::min(x1, i + 0.5) - std::max(x0, i - 0.5);
      if (ox <= 0.0) continue;
      plane[static_cast<std::size_t>(j) * width + i] += value * ox * oy;
    }
  }
}

std::uint8_t through_lut(double v, const NormalizedGammaTable& lut) {
  const auto level = static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
  return static_cast<std::uint8_t>(std::lround(std::clamp(lut.entries[level], 0.0, 1.0) * 255.0));
}

}  // namespace

RgbImage rasterize(const RdsStimulus& stimulus, const RdsConfig& config, const NormalizedGammaTable& lut) {
  const int width = config.profile.horizontal_resolution_px;
  const int height = config.profile.vertical_resolution_px;
  std::vector<double> left(static_cast<std::size_t>(width) * height, 0.0);
  std::vector<double> right(left.size(), 0.0);
  for (const Dot& d : stimulus.left_dots) splat(left, width, height, d.x, d.y, config.dot_size_px, d.intensity);
  for (const Dot& d : stimulus.right_dots) splat(right, width, height, d.x, d.y, config.dot_size_px, d.intensity);

  RgbImage image(width, height);
  const auto& cl = config.colors.left;
  const auto& cr = config.colors.right;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t k = static_cast<std::size_t>(y) * width + x;
      const double l = std::min(left[k], 1.0);
      const double r = std::min(right[k], 1.0);
      for (int c = 0; c < 3; ++c) image.at(x, y, c) = through_lut(cl[c] * l + cr[c] * r, lut);
    }
  }
  return image;
}

nlohmann::json to_wire_json(const RdsStimulus& stimulus) {
  auto layer = [](const std::vector<Dot>& dots, const char* channel) {
    nlohmann::json list = nlohmann::json::array();
    for (const Dot& d : dots) {
      list.push_back({std::round(d.x * 1e4) / 1e4, std::round(d.y * 1e4) / 1e4, d.intensity});
    }
    return nlohmann::json{{"channel", channel}, {"dots", std::move(list)}};
  };
  return nlohmann::json{{"o2", stimulus.o2_px},
                        {"shape_hidden", false},
                        {"layers", nlohmann::json::array({layer(stimulus.left_dots, "red"),
                                                          layer(stimulus.right_dots, "cyan")})}};
}

namespace {

struct PairOffset {
  double dx;
  double dy;
};

constexpr double kAuditKernelSigma = 0.3;
constexpr double kAuditMaxLag = 16.0;

std::vector<PairOffset> candidate_pairs(const std::vector<Dot>& left, const std::vector<Dot>& right) {
  // Bucket right dots by integer row; compare only rows within the kernel reach.
  std::unordered_map<long, std::vector<double>> rows_x;
  std::unordered_map<long, std::vector<double>> rows_y;
  for (const Dot& d : right) {
    const long r = static_cast<long>(std::floor(d.y));
    rows_x[r].push_back(d.x);
    rows_y[r].push_back(d.y);
  }
  const double dy_reach = 4.0 * kAuditKernelSigma;
  const double dx_reach = kAuditMaxLag + 4.0 * kAuditKernelSigma;
  std::vector<PairOffset> pairs;
  for (const Dot& d : left) {
    const long r0 = static_cast<long>(std::floor(d.y - dy_reach));
    const long r1 = static_cast<long>(std::floor(d.y + dy_reach));
    for (long r = r0; r <= r1; ++r) {
      auto it = rows_x.find(r);
      if (it == rows_x.end()) continue;
      const auto& xs = it->second;
      const auto& ys = rows_y[r];
      for (std::size_t k = 0; k < xs.size(); ++k) {
        const double dx = d.x - xs[k];
        const double dy = d.y - ys[k];
        if (std::abs(dy) <= dy_reach && std::abs(dx) <= dx_reach) pairs.push_back({dx, dy});
      }
    }
  }
  return pairs;
}

double kernel_correlation(const std::vector<PairOffset>& pairs, double lag) {
  const double inv = 1.0 / (2.0 * kAuditKernelSigma * kAuditKernelSigma);
  double sum = 0.0;
  for (const auto& p : pairs) {
    const double ex = p.dx - lag;
    if (std::abs(ex) > 4.0 * kAuditKernelSigma) continue;
    sum += std::exp(-(ex * ex + p.dy * p.dy) * inv);
  }
  return sum;
}

}  // namespace

double disparity_audit(const RdsStimulus& stimulus, AuditRegion region) {
  const bool want_hidden = region == AuditRegion::Hidden;
  std::vector<Dot> left, right;
  for (const Dot& d : stimulus.left_dots)
    if (d.hidden == want_hidden) left.push_back(d);
  for (const Dot& d : stimulus.right_dots)
    if (d.hidden == want_hidden) right.push_back(d);
  if (left.empty() || right.empty()) throw DomainError("audit region holds no dots");

  const auto pairs = candidate_pairs(left, right);

  // Coarse scan at a quarter pixel, then a fine scan around the best lag.
  double best_lag = 0.0;
  double best = -1.0;
  for (double lag = -kAuditMaxLag; lag <= kAuditMaxLag + 1e-9; lag += 0.25) {
    const double c = kernel_correlation(pairs, lag);
    if (c > best) {
      best = c;
      best_lag = lag;
    }
  }
  constexpr double h = 0.01;
  const int half = 50;
  std::vector<double> fine(2 * half + 1);
  for (int k = -half; k <= half; ++k) fine[k + half] = kernel_correlation(pairs, best_lag + k * h);
  const auto peak = static_cast<int>(std::max_element(fine.begin(), fine.end()) - fine.begin());
  double lag = best_lag + (peak - half) * h;
  if (peak > 0 && peak < 2 * half) {
    const double fm = fine[peak - 1], f0 = fine[peak], fp = fine[peak + 1];
    const double denom = fm - 2.0 * f0 + fp;
    if (denom < 0.0) lag += 0.5 * h * (fm - fp) / denom;
  }
  return lag;
}

namespace {

std::vector<double> grid_counts(const std::vector<Dot>& layer, const TextureLayout& layout) {
  std::vector<double> counts(kAuditGrid * kAuditGrid, 0.0);
  const double cell = layout.side_px / kAuditGrid;
  for (const Dot& d : layer) {
    const int gx = std::clamp(static_cast<int>((d.x - layout.origin_x) / cell), 0, kAuditGrid - 1);
    const int gy = std::clamp(static_cast<int>((d.y - layout.origin_y) / cell), 0, kAuditGrid - 1);
    counts[gy * kAuditGrid + gx] += 1.0;
  }
  return counts;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

std::vector<double> shape_template(Shape shape, const TextureLayout& layout, int o2_px) {
  constexpr int kSub = 8;
  std::vector<double> cover(kAuditGrid * kAuditGrid, 0.0);
  const double cell = layout.side_px / kAuditGrid;
  for (int gy = 0; gy < kAuditGrid; ++gy) {
    for (int gx = 0; gx < kAuditGrid; ++gx) {
      int hits = 0;
      for (int sy = 0; sy < kSub; ++sy) {
        for (int sx = 0; sx < kSub; ++sx) {
          const double u = (gx + (sx + 0.5) / kSub) * cell;
          const double v = (gy + (sy + 0.5) / kSub) * cell;
          if (layout.in_shape(shape, wrap(u - o2_px, 0.0, layout.side_px), v)) ++hits;
        }
      }
      cover[gy * kAuditGrid + gx] = static_cast<double>(hits) / (kSub * kSub);
    }
  }
  return cover;
}

}  // namespace

double single_layer_shape_score(const std::vector<Dot>& layer, const TextureLayout& layout, int o2_px) {
  const auto counts = grid_counts(layer, layout);
  double best = -1.0;
  for (Shape s : kAllShapes) best = std::max(best, pearson(counts, shape_template(s, layout, o2_px)));
  return best;
}

MonocularAuditReport monocular_cue_audit(const RdsStimulus& stimulus) {
  MonocularAuditReport report;
  const std::vector<Dot>* layers[2] = {&stimulus.left_dots, &stimulus.right_dots};
  double score = -1.0;
  for (int k = 0; k < 2; ++k) {
    const auto counts = grid_counts(*layers[k], stimulus.layout);
    const double expected = static_cast<double>(layers[k]->size()) / counts.size();
    double chi2 = 0.0;
    for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
    const double dof = static_cast<double>(counts.size() - 1);
    report.layer_chi2_p[k] = boost::math::gamma_q(dof / 2.0, chi2 / 2.0);
    score = std::max(score, single_layer_shape_score(*layers[k], stimulus.layout, stimulus.o2_px));
  }
  report.density_chi2_p = std::min(report.layer_chi2_p[0], report.layer_chi2_p[1]);
  report.single_layer_shape_score = score;
  return report;
}

}  // namespace stereo
