#pragma once

#include <filesystem>

#include "decor/cluster.hpp"
#include "decor/outlier.hpp"
#include "decor/wafer.hpp"

namespace decor {

// Writes a binary PPM (P6) montage of one cluster's wafer maps. Tiles are
// laid out row-major by sample index on a ceil(sqrt(M))-column grid; unused
// trailing grid cells stay black. Cells render off-wafer black, normal
// mid-gray, defective white; members whose final outlier flag is set are
// framed with a 2-pixel red border inside their tile. The cluster id is
// 0-based and must name a non-empty cluster of the assignment.
void render_montage(const Dataset& ds, const Assignments& assignments,
                    const OutlierReport& report, int cluster,
                    const std::filesystem::path& out_path);

}  // namespace decor
