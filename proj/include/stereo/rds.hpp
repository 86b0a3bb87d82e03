#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "stereo/gamma_cal.hpp"
#include "stereo/geometry.hpp"
#include "stereo/image.hpp"

namespace stereo {

/// The four hidden bracket shapes, named by the side left open.
enum class Shape : int {
  OpenUp = 0,     // ⊔
  OpenDown = 1,   // ⊓
  OpenRight = 2,  // ⊏
  OpenLeft = 3,   // ⊐
};

inline constexpr std::array<Shape, 4> kAllShapes = {Shape::OpenUp, Shape::OpenDown, Shape::OpenRight,
                                                    Shape::OpenLeft};

std::string_view to_string(Shape shape);
/// Accepts the names above ("open_up", ...) or the numeric ids "0".."3".
std::optional<Shape> parse_shape(std::string_view text);

struct AnaglyphColors {
  std::array<double, 3> left{1.0, 0.0, 0.0};   // red filter over the left eye
  std::array<double, 3> right{0.0, 1.0, 1.0};  // cyan
};

struct RdsConfig {
  double texture_size_mm = 86.0;
  int dots_per_layer = 30000;
  int hidden_dots = 8400;
  /// Edge length of the square dot footprint used when rasterizing.
  double dot_size_px = 1.0;
  /// Edge of the bracket's bounding square relative to the texture edge.
  double shape_fraction = 0.6;
  AnaglyphColors colors;
  DisplayProfile profile;
};

/// Pixel geometry of the texture and of the hidden bracket, derived from a
/// config. The bracket bar width is chosen so the hidden region holds
/// hidden_dots at the same density as the surrounding texture.
struct TextureLayout {
  double origin_x = 0.0;
  double origin_y = 0.0;
  double side_px = 0.0;
  double shape_side_px = 0.0;
  double bar_px = 0.0;
  double shape_origin = 0.0;  // texture-local offset of the bracket square

  /// Horizontal runs [begin, end) of the bracket on texture-local row v.
  /// Coordinates are texture-local (0 at the texture's left/top edge).
  std::vector<std::pair<double, double>> row_segments(Shape shape, double v) const;
  bool in_shape(Shape shape, double u, double v) const;
  double shape_area() const;
};

TextureLayout make_layout(const RdsConfig& config);

struct Dot {
  double x = 0.0;  // screen pixels
  double y = 0.0;
  double intensity = 1.0;
  bool hidden = false;  // never serialized to clients
};

struct RdsStimulus {
  double o1_px = 0.0;
  int o2_px = 0;
  Shape shape = Shape::OpenUp;
  std::uint64_t seed = 0;
  TextureLayout layout;
  std::vector<Dot> left_dots;
  std::vector<Dot> right_dots;
};

/// Whole-pixel correction shift paired with a sub-pixel disparity.
int compute_correction_offset(double o1_px);

/// Two dot layers sharing a uniform background; inside the bracket the right
/// layer's dots are displaced left by o1 (wrapping within each bracket row
/// run), and both layers are then translated by O2 with horizontal wrap.
/// The left-minus-right offset of the hidden region is o1.
RdsStimulus generate_rds(const RdsConfig& config, double o1_px, Shape shape, std::uint64_t seed);

/// Left dots go to the left colour, right dots to the right colour, on
/// black; dots are box-splatted with sub-pixel coverage and each channel is
/// passed through the lookup table.
RgbImage rasterize(const RdsStimulus& stimulus, const RdsConfig& config,
                   const NormalizedGammaTable& lut = identity_gamma_table());

/// Client payload: {o2, shape_hidden: false, layers: [{channel, dots: [[x,y,i],...]}]}.
/// Carries no field identifying the shape.
nlohmann::json to_wire_json(const RdsStimulus& stimulus);

enum class AuditRegion { Hidden, Background };

/// Horizontal left-minus-right offset of one region, from the peak of the
/// Gaussian-kernel density cross-correlation between the two layers with
/// parabolic sub-sample interpolation.
double disparity_audit(const RdsStimulus& stimulus, AuditRegion region);

struct MonocularAuditReport {
  std::array<double, 2> layer_chi2_p{};  // left, right
  double density_chi2_p = 0.0;           // min over layers
  double single_layer_shape_score = 0.0; // max correlation over layers x shapes
};

inline constexpr int kAuditGrid = 16;
/// Shape score above which a single layer is considered to carry a
/// monocular shape cue.
inline constexpr double kShapeCueThreshold = 0.3;

MonocularAuditReport monocular_cue_audit(const RdsStimulus& stimulus);

/// Correlation of one layer's grid density against each bracket template.
double single_layer_shape_score(const std::vector<Dot>& layer, const TextureLayout& layout, int o2_px);

}  // namespace stereo
