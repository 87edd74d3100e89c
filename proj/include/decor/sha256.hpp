#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace decor {

// Incremental SHA-256. Feed bytes, then call hex_digest() once.
class Sha256 {
 public:
  Sha256();
  void update(const void* data, std::size_t len);
  std::string hex_digest();

 private:
  void process_block(const std::uint8_t* block);

  std::uint32_t state_[8];
  std::uint64_t total_bytes_ = 0;
  std::uint8_t buffer_[64];
  std::size_t buffered_ = 0;
  bool finished_ = false;
};

std::string sha256_hex(const void* data, std::size_t len);
std::string sha256_hex(const std::string& data);
std::string sha256_file_hex(const std::filesystem::path& path);

}  // namespace decor
