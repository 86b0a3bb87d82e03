#pragma once

// Test-side stimulus checks that do not reuse the library's audit code.

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <vector>

#include "stereo/rds.hpp"

namespace rds_oracle {

/// Mode of the pairwise horizontal offsets between left and right hidden
/// dots lying on the same row band, refined by mean shift. This is the peak
/// of the point-process cross-correlation with a box kernel.
inline double hidden_offset(const stereo::RdsStimulus& stim, bool hidden = true) {
  std::multimap<double, double> right;  // y -> x
  for (const auto& d : stim.right_dots)
    if (d.hidden == hidden) right.emplace(d.y, d.x);
  std::vector<double> dx;
  for (const auto& l : stim.left_dots) {
    if (l.hidden != hidden) continue;
    for (auto it = right.lower_bound(l.y - 0.25); it != right.end() && it->first <= l.y + 0.25; ++it) {
      const double d = l.x - it->second;
      if (std::abs(d) <= 16.0) dx.push_back(d);
    }
  }
  // Histogram at 0.05 px to locate the mode.
  std::map<long, int> hist;
  for (double d : dx) ++hist[std::lround(d / 0.05)];
  long mode = 0;
  int best = -1;
  for (auto [bin, n] : hist)
    if (n > best) {
      best = n;
      mode = bin;
    }
  double center = mode * 0.05;
  for (int iter = 0; iter < 50; ++iter) {
    double sum = 0.0;
    int n = 0;
    for (double d : dx)
      if (std::abs(d - center) <= 0.1) {
        sum += d;
        ++n;
      }
    const double next = sum / n;
    if (std::abs(next - center) < 1e-12) break;
    center = next;
  }
  return center;
}

/// Copy of the stimulus whose left layer carries every hidden dot twice,
/// a density cue visible to one eye.
inline stereo::RdsStimulus inject_cue(const stereo::RdsStimulus& stim) {
  auto out = stim;
  for (const auto& d : stim.left_dots)
    if (d.hidden) out.left_dots.push_back(d);
  return out;
}

/// n dots uniform over the texture, no hidden region.
inline std::vector<stereo::Dot> uniform_layer(const stereo::TextureLayout& layout, int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.0, layout.side_px);
  std::vector<stereo::Dot> dots;
  for (int i = 0; i < n; ++i) dots.push_back({layout.origin_x + u(rng), layout.origin_y + u(rng), 1.0, false});
  return dots;
}

}  // namespace rds_oracle
