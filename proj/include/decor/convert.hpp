#pragma once

#include <filesystem>

namespace decor {

// Converts a numpy .npz archive of wafer maps into a WFR1 dataset file and
// returns the number of maps written.
//
// The archive must hold one 3-d uint8 array (N, height, width) of cell values
// in {0, 1, 2} and may hold one 2-d uint8 array (N, 8) of 0/1 label
// indicators, column j setting defect bit j. Without a label array every map
// is unlabeled. An archive with no members converts to an empty dataset.
//
// Both stored and deflate-compressed members are accepted; zip64 archives and
// fortran-order or non-uint8 arrays are rejected. Malformed container or
// array headers raise format errors carrying a byte offset into the archive.
long convert_external(const std::filesystem::path& archive,
                      const std::filesystem::path& out_wfr1);

}  // namespace decor
