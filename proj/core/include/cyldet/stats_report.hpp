#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cyldet/voxelizer.hpp"

namespace cyldet {

// CSV with header "range_m,mean_cyl,mean_cart".
void write_stats_csv(const std::vector<VoxelStatsRow>& rows, std::ostream& os);

// Static SVG line plot of both series with a logarithmic y-axis.
std::string stats_svg(const std::vector<VoxelStatsRow>& rows);

}  // namespace cyldet
