#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "decor/common.hpp"

namespace decor {

// Little-endian buffer writer for the binary artifact formats.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { data_.push_back(v); }
  void u16(std::uint16_t v) { put_le(v); }
  void u32(std::uint32_t v) { put_le(v); }
  void u64(std::uint64_t v) { put_le(v); }
  void f32(float v) { put_le(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { put_le(std::bit_cast<std::uint64_t>(v)); }
  void bytes(const void* src, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(src);
    data_.insert(data_.end(), p, p + n);
  }
  void magic(const char (&tag)[5]) { bytes(tag, 4); }

  const std::vector<std::uint8_t>& data() const { return data_; }
  std::size_t size() const { return data_.size(); }

 private:
  template <typename U>
  void put_le(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      data_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
  }

  std::vector<std::uint8_t> data_;
};

// Little-endian buffer reader. Every failure throws format_error carrying the
// byte offset where the trouble starts.
class ByteReader {
 public:
  ByteReader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}
  explicit ByteReader(const std::vector<std::uint8_t>& data)
      : ByteReader(data.data(), data.size()) {}

  std::uint8_t u8() { return take_le<std::uint8_t>(); }
  std::uint16_t u16() { return take_le<std::uint16_t>(); }
  std::uint32_t u32() { return take_le<std::uint32_t>(); }
  std::uint64_t u64() { return take_le<std::uint64_t>(); }
  float f32() { return std::bit_cast<float>(take_le<std::uint32_t>()); }
  double f64() { return std::bit_cast<double>(take_le<std::uint64_t>()); }

  void bytes(void* dst, std::size_t n) {
    require(n, "payload");
    std::memcpy(dst, data_ + offset_, n);
    offset_ += n;
  }

  void magic(const char (&tag)[5]) {
    require(4, "magic");
    if (std::memcmp(data_ + offset_, tag, 4) != 0) {
      fail(std::string("bad magic, expected \"") + tag + "\"");
    }
    offset_ += 4;
  }

  std::size_t offset() const { return offset_; }
  std::size_t remaining() const { return size_ - offset_; }

  void expect_end() const {
    if (offset_ != size_) {
      throw format_error("unexpected trailing data", offset_);
    }
  }

  [[noreturn]] void fail(const std::string& what) const { throw format_error(what, offset_); }

 private:
  void require(std::size_t n, const char* what) {
    if (size_ - offset_ < n) {
      throw format_error(std::string("truncated while reading ") + what, offset_);
    }
  }

  template <typename U>
  U take_le() {
    require(sizeof(U), "integer field");
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v = static_cast<U>(v | (static_cast<U>(data_[offset_ + i]) << (8 * i)));
    }
    offset_ += sizeof(U);
    return v;
  }

  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t offset_ = 0;
};

// Whole-file helpers. Writes land atomically: temp file in the same
// directory, then rename over the target.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const void* data, std::size_t size);
inline void write_file_bytes(const std::filesystem::path& path,
                             const std::vector<std::uint8_t>& data) {
  write_file_bytes(path, data.data(), data.size());
}
void write_file_text(const std::filesystem::path& path, const std::string& text);
std::string read_file_text(const std::filesystem::path& path);

}  // namespace decor
