#include "stereo/geometry.hpp"

#include <cmath>
#include <numbers>

#include "stereo/errors.hpp"

namespace stereo {

void DisplayProfile::validate() const {
  if (horizontal_resolution_px <= 0 || vertical_resolution_px <= 0)
    throw ConfigError("display resolution must be positive");
  if (!std::isfinite(physical_width_mm) || physical_width_mm <= 0.0)
    throw ConfigError("display width must be positive and finite");
  if (!std::isfinite(viewing_distance_mm) || viewing_distance_mm <= 0.0)
    throw ConfigError("viewing distance must be positive and finite");
}

DisplayProfile reference_profile() { return DisplayProfile{}; }

double pixels_to_arcsec(double offset_px, const DisplayProfile& profile) {
  if (!std::isfinite(offset_px) || offset_px < 0.0)
    throw DomainError("pixel offset must be finite and non-negative");
  profile.validate();
  const double half = offset_px * profile.pixel_pitch_mm() / (2.0 * profile.viewing_distance_mm);
  return 2.0 * std::atan(half) * kArcsecPerRadian;
}

double arcsec_to_pixels(double disparity_arcsec, const DisplayProfile& profile) {
  if (!std::isfinite(disparity_arcsec) || disparity_arcsec < 0.0)
    throw DomainError("disparity must be finite and non-negative");
  profile.validate();
  const double half_angle = disparity_arcsec / kArcsecPerRadian / 2.0;
  if (half_angle >= std::numbers::pi / 2.0) throw DomainError("disparity exceeds 180 degrees");
  return 2.0 * profile.viewing_distance_mm * std::tan(half_angle) / profile.pixel_pitch_mm();
}

double extent_to_visual_angle_deg(double extent_mm, const DisplayProfile& profile) {
  if (!std::isfinite(extent_mm) || extent_mm < 0.0)
    throw DomainError("extent must be finite and non-negative");
  profile.validate();
  return 2.0 * std::atan(extent_mm / (2.0 * profile.viewing_distance_mm)) * 180.0 / std::numbers::pi;
}

double mm_to_pixels(double extent_mm, const DisplayProfile& profile) {
  if (!std::isfinite(extent_mm) || extent_mm < 0.0)
    throw DomainError("extent must be finite and non-negative");
  profile.validate();
  return extent_mm / profile.pixel_pitch_mm();
}

void to_json(nlohmann::json& j, const DisplayProfile& p) {
  j = nlohmann::json{{"h_px", p.horizontal_resolution_px},
                     {"v_px", p.vertical_resolution_px},
                     {"width_mm", p.physical_width_mm},
                     {"distance_mm", p.viewing_distance_mm}};
}

void from_json(const nlohmann::json& j, DisplayProfile& p) {
  try {
    p.horizontal_resolution_px = j.at("h_px").get<int>();
    p.vertical_resolution_px = j.at("v_px").get<int>();
    p.physical_width_mm = j.at("width_mm").get<double>();
    p.viewing_distance_mm = j.at("distance_mm").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed display profile: ") + e.what());
  }
  p.validate();
}

}  // namespace stereo
