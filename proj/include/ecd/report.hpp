#pragma once

#include <string>

#include "ecd/io.hpp"
#include "ecd/ragability.hpp"

namespace ecd {

/// "grid,green,blue" header then one row per grid point.
std::string profile_csv(const DensityProfile& profile);

/// Standalone SVG: both curves, a zero axis and dashed peak markers with labels.
std::string profile_svg(const DensityProfile& profile, const std::string& title);

json peaks_json(const DensityProfile& profile);

}  // namespace ecd
