#include "decor/convert.hpp"

#include <zlib.h>

#include <cctype>
#include <cstdint>
#include <cstring>
#include <string>
#include <utility>
#include <vector>

#include "decor/bytes.hpp"
#include "decor/common.hpp"
#include "decor/dataset_io.hpp"
#include "decor/wafer.hpp"

namespace decor {
namespace {

using Bytes = std::vector<std::uint8_t>;

std::uint16_t le16(const Bytes& b, std::size_t at) {
  if (at + 2 > b.size()) throw format_error("truncated zip structure", at);
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t le32(const Bytes& b, std::size_t at) {
  if (at + 4 > b.size()) throw format_error("truncated zip structure", at);
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

struct ZipMember {
  std::string name;
  int method = 0;  // 0 stored, 8 deflate
  std::uint32_t crc = 0;
  std::size_t comp_size = 0;
  std::size_t uncomp_size = 0;
  std::size_t data_offset = 0;  // payload position in the archive
};

constexpr std::size_t kEocdLen = 22;

std::vector<ZipMember> zip_directory(const Bytes& zip) {
  if (zip.size() < kEocdLen) throw format_error("file too small to be a zip archive", 0);

  // The end record sits last, preceded only by an up-to-64-KiB comment.
  const std::size_t last = zip.size() - kEocdLen;
  const std::size_t lo = last >= 65535 ? last - 65535 : 0;
  std::size_t eocd = zip.size();
  for (std::size_t i = last + 1; i-- > lo;) {
    if (le32(zip, i) == 0x06054b50u) {
      eocd = i;
      break;
    }
  }
  if (eocd == zip.size()) {
    throw format_error("zip end-of-central-directory record not found", last);
  }

  const std::uint16_t entries = le16(zip, eocd + 10);
  const std::uint32_t cd_size = le32(zip, eocd + 12);
  const std::uint32_t cd_off = le32(zip, eocd + 16);
  if (entries == 0xffff || cd_off == 0xffffffffu || cd_size == 0xffffffffu) {
    throw format_error("zip64 archives are not supported", eocd);
  }
  if (static_cast<std::size_t>(cd_off) + cd_size > eocd) {
    throw format_error("zip central directory overruns its end record", eocd + 12);
  }

  std::vector<ZipMember> members;
  members.reserve(entries);
  std::size_t at = cd_off;
  for (int e = 0; e < entries; ++e) {
    if (le32(zip, at) != 0x02014b50u) {
      throw format_error("bad zip central-directory entry signature", at);
    }
    ZipMember m;
    m.method = le16(zip, at + 10);
    m.crc = le32(zip, at + 16);
    m.comp_size = le32(zip, at + 20);
    m.uncomp_size = le32(zip, at + 24);
    const std::uint16_t name_len = le16(zip, at + 28);
    const std::uint16_t extra_len = le16(zip, at + 30);
    const std::uint16_t comment_len = le16(zip, at + 32);
    const std::size_t local_off = le32(zip, at + 42);
    if (at + 46 + name_len > zip.size()) throw format_error("truncated zip entry name", at + 46);
    m.name.assign(reinterpret_cast<const char*>(zip.data()) + at + 46, name_len);

    // Sizes come from the central directory (the local copy may be deferred
    // behind a data descriptor); the local header fixes the payload position.
    if (le32(zip, local_off) != 0x04034b50u) {
      throw format_error("bad zip local-header signature for member '" + m.name + "'", local_off);
    }
    const std::uint16_t local_name = le16(zip, local_off + 26);
    const std::uint16_t local_extra = le16(zip, local_off + 28);
    m.data_offset = local_off + 30 + local_name + local_extra;
    if (m.data_offset + m.comp_size > zip.size()) {
      throw format_error("zip member '" + m.name + "' overruns the file", m.data_offset);
    }
    members.push_back(std::move(m));
    at += 46 + static_cast<std::size_t>(name_len) + extra_len + comment_len;
  }
  return members;
}

Bytes member_bytes(const Bytes& zip, const ZipMember& m) {
  Bytes out;
  if (m.method == 0) {
    if (m.comp_size != m.uncomp_size) {
      throw format_error("stored zip member '" + m.name + "' has mismatched sizes", m.data_offset);
    }
    out.assign(zip.begin() + m.data_offset, zip.begin() + m.data_offset + m.comp_size);
  } else if (m.method == 8) {
    out.resize(m.uncomp_size);
    std::uint8_t scratch = 0;
    z_stream zs{};
    if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) throw numerical_error("zlib initialization failed");
    zs.next_in = const_cast<Bytef*>(zip.data() + m.data_offset);
    zs.avail_in = static_cast<uInt>(m.comp_size);
    zs.next_out = m.uncomp_size ? out.data() : &scratch;
    zs.avail_out = static_cast<uInt>(m.uncomp_size ? m.uncomp_size : 1);
    const int rc = inflate(&zs, Z_FINISH);
    const bool ok = rc == Z_STREAM_END && zs.total_out == m.uncomp_size;
    inflateEnd(&zs);
    if (!ok) {
      throw format_error("corrupt deflate stream in zip member '" + m.name + "'", m.data_offset);
    }
  } else {
    throw format_error("unsupported zip compression method " + std::to_string(m.method) +
                           " for member '" + m.name + "'",
                       m.data_offset);
  }
  if (crc32(0L, out.data(), static_cast<uInt>(out.size())) != m.crc) {
    throw format_error("crc mismatch in zip member '" + m.name + "'", m.data_offset);
  }
  return out;
}

struct NpyArray {
  std::string member;
  std::size_t file_offset = 0;  // payload position, for error reporting
  std::string descr;
  std::vector<long> shape;
  Bytes data;
};

[[noreturn]] void npy_fail(const NpyArray& a, const std::string& what) {
  throw format_error("member '" + a.member + "': " + what, a.file_offset);
}

// Position just past the quoted key inside the header dict.
std::size_t dict_key(const NpyArray& a, const std::string& header, const std::string& key) {
  const std::string quoted = "'" + key + "'";
  const std::size_t at = header.find(quoted);
  if (at == std::string::npos) npy_fail(a, "numpy header lacks the " + quoted + " field");
  std::size_t p = at + quoted.size();
  while (p < header.size() && (header[p] == ' ' || header[p] == ':')) ++p;
  return p;
}

std::string dict_string(const NpyArray& a, const std::string& header, const std::string& key) {
  std::size_t p = dict_key(a, header, key);
  if (p >= header.size() || header[p] != '\'') npy_fail(a, "malformed '" + key + "' field");
  const std::size_t end = header.find('\'', p + 1);
  if (end == std::string::npos) npy_fail(a, "malformed '" + key + "' field");
  return header.substr(p + 1, end - p - 1);
}

std::string dict_word(const NpyArray& a, const std::string& header, const std::string& key) {
  std::size_t p = dict_key(a, header, key);
  std::size_t end = p;
  while (end < header.size() && std::isalpha(static_cast<unsigned char>(header[end]))) ++end;
  if (end == p) npy_fail(a, "malformed '" + key + "' field");
  return header.substr(p, end - p);
}

std::vector<long> dict_shape(const NpyArray& a, const std::string& header) {
  std::size_t p = dict_key(a, header, "shape");
  if (p >= header.size() || header[p] != '(') npy_fail(a, "malformed 'shape' field");
  ++p;
  std::vector<long> shape;
  while (p < header.size() && header[p] != ')') {
    while (p < header.size() && (header[p] == ' ' || header[p] == ',')) ++p;
    if (p >= header.size() || header[p] == ')') break;
    long v = 0;
    bool any = false;
    while (p < header.size() && std::isdigit(static_cast<unsigned char>(header[p]))) {
      v = v * 10 + (header[p] - '0');
      ++p;
      any = true;
    }
    if (!any) npy_fail(a, "malformed 'shape' field");
    shape.push_back(v);
  }
  if (p >= header.size()) npy_fail(a, "malformed 'shape' field");
  return shape;
}

NpyArray parse_npy(std::string member, std::size_t file_offset, Bytes bytes) {
  NpyArray a;
  a.member = std::move(member);
  a.file_offset = file_offset;
  if (bytes.size() < 10 || std::memcmp(bytes.data(), "\x93NUMPY", 6) != 0) {
    npy_fail(a, "missing numpy magic");
  }
  const int major = bytes[6];
  std::size_t header_at = 0;
  std::size_t header_len = 0;
  if (major == 1) {
    header_at = 10;
    header_len = bytes[8] | (static_cast<std::size_t>(bytes[9]) << 8);
  } else if (major == 2 || major == 3) {
    if (bytes.size() < 12) npy_fail(a, "truncated numpy header");
    header_at = 12;
    header_len = bytes[8] | (static_cast<std::size_t>(bytes[9]) << 8) |
                 (static_cast<std::size_t>(bytes[10]) << 16) |
                 (static_cast<std::size_t>(bytes[11]) << 24);
  } else {
    npy_fail(a, "unsupported numpy format version " + std::to_string(major));
  }
  if (header_at + header_len > bytes.size()) npy_fail(a, "truncated numpy header");
  const std::string header(reinterpret_cast<const char*>(bytes.data()) + header_at, header_len);

  a.descr = dict_string(a, header, "descr");
  const std::string order = dict_word(a, header, "fortran_order");
  if (order == "True") npy_fail(a, "fortran-order arrays are not supported");
  if (order != "False") npy_fail(a, "malformed 'fortran_order' field");
  a.shape = dict_shape(a, header);
  a.data.assign(bytes.begin() + header_at + header_len, bytes.end());
  return a;
}

}  // namespace

long convert_external(const std::filesystem::path& archive,
                      const std::filesystem::path& out_wfr1) {
  const Bytes zip = read_file_bytes(archive);
  const std::vector<ZipMember> members = zip_directory(zip);

  std::vector<NpyArray> arrays;
  for (const ZipMember& m : members) {
    if (!m.name.empty() && m.name.back() == '/') continue;  // directory entry
    arrays.push_back(parse_npy(m.name, m.data_offset, member_bytes(zip, m)));
  }

  Dataset ds;
  ds.provenance = "converted:" + archive.filename().string();
  if (arrays.empty()) {
    write_dataset(ds, out_wfr1);
    return 0;
  }

  const NpyArray* maps = nullptr;
  const NpyArray* labels = nullptr;
  for (const NpyArray& a : arrays) {
    if (a.shape.size() == 3) {
      if (maps) npy_fail(a, "archive holds more than one 3-d map array");
      maps = &a;
    } else if (a.shape.size() == 2 && a.shape[1] == static_cast<long>(kDefectTypeCount)) {
      if (labels) npy_fail(a, "archive holds more than one label array");
      labels = &a;
    }
  }
  if (!maps) throw format_error("no 3-d map array found in the archive", 0);
  if (maps->descr != "|u1") {
    npy_fail(*maps, "map array dtype must be '|u1', got '" + maps->descr + "'");
  }
  const long n = maps->shape[0];
  const long h = maps->shape[1];
  const long w = maps->shape[2];
  if (h <= 0 || w <= 0) npy_fail(*maps, "map dimensions must be positive");
  if (h > 65535 || w > 65535) npy_fail(*maps, "map dimensions exceed the dataset format range");
  if (maps->data.size() != static_cast<std::size_t>(n) * h * w) {
    npy_fail(*maps, "map payload size does not match its shape");
  }

  std::vector<std::uint8_t> masks(static_cast<std::size_t>(n), 0);
  if (labels) {
    if (labels->descr != "|u1") {
      npy_fail(*labels, "label array dtype must be '|u1', got '" + labels->descr + "'");
    }
    if (labels->shape[0] != n) {
      npy_fail(*labels, "label rows (" + std::to_string(labels->shape[0]) +
                            ") do not match the map count (" + std::to_string(n) + ")");
    }
    if (labels->data.size() != static_cast<std::size_t>(n) * kDefectTypeCount) {
      npy_fail(*labels, "label payload size does not match its shape");
    }
    for (long i = 0; i < n; ++i) {
      for (int j = 0; j < kDefectTypeCount; ++j) {
        const std::uint8_t v = labels->data[static_cast<std::size_t>(i) * kDefectTypeCount + j];
        if (v > 1) {
          npy_fail(*labels,
                   "label indicator value " + std::to_string(int(v)) + " outside {0,1}");
        }
        masks[i] = static_cast<std::uint8_t>(masks[i] | (v << j));
      }
    }
  }

  ds.maps.reserve(n);
  for (long i = 0; i < n; ++i) {
    WaferMap map;
    map.labels = DefectLabelSet(masks[i]);
    map.cells = Grid<std::uint8_t>(static_cast<int>(h), static_cast<int>(w));
    const std::uint8_t* src = maps->data.data() + static_cast<std::size_t>(i) * h * w;
    for (std::size_t c = 0; c < map.cells.raw().size(); ++c) {
      if (src[c] > kCellDefect) {
        npy_fail(*maps, "map cell value " + std::to_string(int(src[c])) + " outside {0,1,2}");
      }
      map.cells.raw()[c] = src[c];
    }
    ds.maps.push_back(std::move(map));
  }

  write_dataset(ds, out_wfr1);
  return n;
}

}  // namespace decor
