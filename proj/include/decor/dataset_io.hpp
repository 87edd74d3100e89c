#pragma once

#include <filesystem>
#include <vector>

#include "decor/wafer.hpp"

namespace decor {

// WFR1 container: "WFR1" | u32 count | u16 height | u16 width, then per map a
// u8 label bitmask (bit 0 = Center … bit 7 = Random) followed by height×width
// cell bytes, row-major. Little-endian throughout.
void write_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);

// IMG1 container for preprocessed image stacks: "IMG1" | u32 count |
// u16 height | u16 width, then per image height×width float32 pixels,
// row-major. All images share one shape; pixels must be finite.
void write_images(const std::vector<ImageTensor>& images, const std::filesystem::path& path);
std::vector<ImageTensor> read_images(const std::filesystem::path& path);

}  // namespace decor
