#pragma once

#include <vector>

#include "dcloss/regularizers.hpp"

namespace dcloss {

/// Piecewise-constant test phantom: three nested ellipses (levels 1, 2 and a
/// cold core at 0.5) plus two small hot lesions at 4, all times `intensity`.
/// Pixel values are sampled at pixel centres.
Image2D ellipse_phantom(std::size_t side, double intensity = 1.0);

/// Support of the non-zero pixels dilated by a disc of `radius` pixels.
std::vector<double> support_mask(const Image2D& image, double radius = 2.0);

/// sin(10 pi x) + 0.5 sin(40 pi x) on n uniform points of [0, 1].
std::vector<double> two_tone_signal(std::size_t n);

}  // namespace dcloss
