#include "decor/dataset_io.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "decor/bytes.hpp"
#include "decor/common.hpp"

namespace decor {

void write_dataset(const Dataset& ds, const std::filesystem::path& path) {
  int height = 0;
  int width = 0;
  if (!ds.maps.empty()) {
    height = ds.maps.front().cells.height();
    width = ds.maps.front().cells.width();
    for (const WaferMap& map : ds.maps) {
      if (map.cells.height() != height || map.cells.width() != width) {
        throw shape_error("all maps in a dataset file must share one grid shape");
      }
    }
    if (height > std::numeric_limits<std::uint16_t>::max() ||
        width > std::numeric_limits<std::uint16_t>::max()) {
      throw shape_error("grid dimensions exceed the u16 range of the file format");
    }
  }

  ByteWriter w;
  w.magic("WFR1");
  w.u32(static_cast<std::uint32_t>(ds.maps.size()));
  w.u16(static_cast<std::uint16_t>(height));
  w.u16(static_cast<std::uint16_t>(width));
  for (const WaferMap& map : ds.maps) {
    w.u8(map.labels.mask());
    w.bytes(map.cells.raw().data(), map.cells.raw().size());
  }
  write_file_bytes(path, w.data());
}

Dataset read_dataset(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> raw = read_file_bytes(path);
  ByteReader r(raw);
  r.magic("WFR1");
  const std::uint32_t count = r.u32();
  const std::uint16_t height = r.u16();
  const std::uint16_t width = r.u16();
  if (count > 0 && (height == 0 || width == 0)) {
    throw format_error("map dimensions must be positive when the file holds maps", 8);
  }

  Dataset ds;
  ds.provenance = "file:" + path.filename().string();
  ds.maps.reserve(count);
  for (std::uint32_t m = 0; m < count; ++m) {
    WaferMap map;
    map.labels = DefectLabelSet(r.u8());
    map.cells = Grid<std::uint8_t>(height, width);
    const std::size_t cells_at = r.offset();
    r.bytes(map.cells.raw().data(), map.cells.raw().size());
    for (std::size_t i = 0; i < map.cells.raw().size(); ++i) {
      if (map.cells.raw()[i] > kCellDefect) {
        throw format_error("cell value outside {0,1,2}", cells_at + i);
      }
    }
    ds.maps.push_back(std::move(map));
  }
  r.expect_end();
  return ds;
}

void write_images(const std::vector<ImageTensor>& images, const std::filesystem::path& path) {
  int height = 0;
  int width = 0;
  if (!images.empty()) {
    height = images.front().height();
    width = images.front().width();
    for (const ImageTensor& img : images) {
      if (img.height() != height || img.width() != width) {
        throw shape_error("all images in a stack file must share one shape");
      }
    }
    if (height > std::numeric_limits<std::uint16_t>::max() ||
        width > std::numeric_limits<std::uint16_t>::max()) {
      throw shape_error("image dimensions exceed the u16 range of the file format");
    }
  }

  ByteWriter w;
  w.magic("IMG1");
  w.u32(static_cast<std::uint32_t>(images.size()));
  w.u16(static_cast<std::uint16_t>(height));
  w.u16(static_cast<std::uint16_t>(width));
  for (const ImageTensor& img : images) {
    for (float v : img.raw()) w.f32(v);
  }
  write_file_bytes(path, w.data());
}

std::vector<ImageTensor> read_images(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> raw = read_file_bytes(path);
  ByteReader r(raw);
  r.magic("IMG1");
  const std::uint32_t count = r.u32();
  const std::uint16_t height = r.u16();
  const std::uint16_t width = r.u16();
  if (count > 0 && (height == 0 || width == 0)) {
    throw format_error("image dimensions must be positive when the file holds images", 8);
  }

  std::vector<ImageTensor> images;
  images.reserve(count);
  for (std::uint32_t m = 0; m < count; ++m) {
    ImageTensor img(height, width);
    for (float& v : img.raw()) {
      const std::size_t at = r.offset();
      v = r.f32();
      if (!std::isfinite(v)) throw format_error("non-finite pixel value", at);
    }
    images.push_back(std::move(img));
  }
  r.expect_end();
  return images;
}

}  // namespace decor
