#include "decor/bytes.hpp"

#include <cstdio>
#include <fstream>
#include <system_error>

namespace decor {
namespace fs = std::filesystem;

std::vector<std::uint8_t> read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());
  std::vector<std::uint8_t> data;
  in.seekg(0, std::ios::end);
  const std::streamoff len = in.tellg();
  if (len < 0) throw std::runtime_error("cannot determine size of file: " + path.string());
  data.resize(static_cast<std::size_t>(len));
  in.seekg(0, std::ios::beg);
  if (len > 0) {
    in.read(reinterpret_cast<char*>(data.data()), len);
    if (!in) throw std::runtime_error("failed to read file: " + path.string());
  }
  return data;
}

void write_file_bytes(const fs::path& path, const void* data, std::size_t size) {
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  std::error_code ec;
  fs::create_directories(dir, ec);  // best effort; the open below reports real failures

  fs::path tmp = dir / (path.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open file for writing: " + tmp.string());
    if (size > 0) out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp, ec);
      throw std::runtime_error("failed to write file: " + tmp.string());
    }
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw std::runtime_error("failed to move " + tmp.string() + " into place: " + path.string());
  }
}

void write_file_text(const fs::path& path, const std::string& text) {
  write_file_bytes(path, text.data(), text.size());
}

std::string read_file_text(const fs::path& path) {
  const std::vector<std::uint8_t> raw = read_file_bytes(path);
  return std::string(raw.begin(), raw.end());
}

}  // namespace decor
