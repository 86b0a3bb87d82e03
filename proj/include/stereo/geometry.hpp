#pragma once

#include <nlohmann/json.hpp>

namespace stereo {

/// Physical description of the presentation display.
///
/// Disparities are specified in screen pixels and converted to visual angle
/// through the effective pixel pitch (physical width / horizontal resolution)
/// and the viewing distance.
struct DisplayProfile {
  int horizontal_resolution_px = 800;
  int vertical_resolution_px = 600;
  double physical_width_mm = 258.0;
  double viewing_distance_mm = 400.0;

  double pixel_pitch_mm() const { return physical_width_mm / horizontal_resolution_px; }

  /// Throws ConfigError when any field is non-positive or non-finite.
  void validate() const;

  bool operator==(const DisplayProfile&) const = default;
};

/// 800x600 over 258 mm viewed at 400 mm.
DisplayProfile reference_profile();

constexpr double kArcsecPerRadian = 206264.80624709636;

/// Supported disparity range; the upper end is also the recorded ceiling.
inline constexpr double kMinDisparityPx = 0.1;
inline constexpr double kMaxDisparityPx = 10.0;

double pixels_to_arcsec(double offset_px, const DisplayProfile& profile);
double arcsec_to_pixels(double disparity_arcsec, const DisplayProfile& profile);
double extent_to_visual_angle_deg(double extent_mm, const DisplayProfile& profile);
double mm_to_pixels(double extent_mm, const DisplayProfile& profile);

// {h_px, v_px, width_mm, distance_mm}
void to_json(nlohmann::json& j, const DisplayProfile& p);
void from_json(const nlohmann::json& j, DisplayProfile& p);

}  // namespace stereo
