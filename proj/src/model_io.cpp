#include "decor/model_io.hpp"

#include <string>

#include "decor/bytes.hpp"

namespace decor {

namespace {
constexpr std::uint32_t kCheckpointVersion = 1;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  ckpt.arch.validate();
  const Autoencoder<float> model(ckpt.arch);
  if (ckpt.params.size() != model.param_count()) {
    throw shape_error("parameter vector does not match the architecture");
  }

  ByteWriter w;
  w.magic("RCAE");
  w.u32(kCheckpointVersion);
  w.u8(ckpt.arch.equivariant ? 1 : 0);
  w.u8(ckpt.arch.group_pool_mean ? 1 : 0);
  w.u32((std::uint32_t)ckpt.arch.input_size);
  w.u32((std::uint32_t)ckpt.arch.fields1);
  w.u32((std::uint32_t)ckpt.arch.fields2);
  w.u32((std::uint32_t)ckpt.arch.fields3);
  w.u32((std::uint32_t)ckpt.arch.conv1);
  w.u32((std::uint32_t)ckpt.arch.conv2);
  w.u32((std::uint32_t)ckpt.arch.conv3);
  w.u32((std::uint32_t)ckpt.arch.conv4);
  w.u32((std::uint32_t)ckpt.arch.latent_dim);
  w.u32((std::uint32_t)ckpt.arch.dec1);
  w.u32((std::uint32_t)ckpt.arch.dec2);
  w.u32((std::uint32_t)ckpt.arch.dec3);
  w.u32((std::uint32_t)ckpt.image.target_size);
  w.u32((std::uint32_t)ckpt.image.edge_margin);
  w.u32((std::uint32_t)ckpt.image.blur_kernel);
  w.f64(ckpt.image.blur_sigma);
  w.u64(ckpt.params.size());
  for (float p : ckpt.params) w.f32(p);
  write_file_bytes(path, w.data());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  ByteReader r(bytes);
  r.magic("RCAE");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw format_error("unsupported checkpoint version " + std::to_string(version), 4);
  }

  Checkpoint ckpt;
  ckpt.arch.equivariant = r.u8() != 0;
  ckpt.arch.group_pool_mean = r.u8() != 0;
  ckpt.arch.input_size = (int)r.u32();
  ckpt.arch.fields1 = (int)r.u32();
  ckpt.arch.fields2 = (int)r.u32();
  ckpt.arch.fields3 = (int)r.u32();
  ckpt.arch.conv1 = (int)r.u32();
  ckpt.arch.conv2 = (int)r.u32();
  ckpt.arch.conv3 = (int)r.u32();
  ckpt.arch.conv4 = (int)r.u32();
  ckpt.arch.latent_dim = (int)r.u32();
  ckpt.arch.dec1 = (int)r.u32();
  ckpt.arch.dec2 = (int)r.u32();
  ckpt.arch.dec3 = (int)r.u32();
  ckpt.image.target_size = (int)r.u32();
  ckpt.image.edge_margin = (int)r.u32();
  ckpt.image.blur_kernel = (int)r.u32();
  ckpt.image.blur_sigma = r.f64();

  try {
    ckpt.arch.validate();
  } catch (const std::runtime_error& e) {
    throw format_error(std::string("checkpoint declares an invalid architecture: ") + e.what(),
                       6);
  }
  if (ckpt.arch.input_size != ckpt.image.target_size) {
    throw format_error("image target size does not match the architecture input size",
                       r.offset());
  }

  const std::size_t count_offset = r.offset();
  const std::uint64_t declared = r.u64();
  const Autoencoder<float> model(ckpt.arch);
  if (declared != model.param_count()) {
    throw format_error("parameter count " + std::to_string(declared) +
                           " does not match the declared architecture (expected " +
                           std::to_string(model.param_count()) + ")",
                       count_offset);
  }
  ckpt.params.resize((std::size_t)declared);
  for (auto& p : ckpt.params) p = r.f32();
  r.expect_end();
  return ckpt;
}

void write_embeddings(const std::filesystem::path& path, const RowMat<float>& emb) {
  ByteWriter w;
  w.magic("EMB1");
  w.u32((std::uint32_t)emb.rows);
  w.u32((std::uint32_t)emb.cols);
  for (float v : emb.v) w.f32(v);
  write_file_bytes(path, w.data());
}

RowMat<float> read_embeddings(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  ByteReader r(bytes);
  r.magic("EMB1");
  const std::uint32_t count = r.u32();
  const std::size_t dim_offset = r.offset();
  const std::uint32_t dim = r.u32();
  if (count > 0 && dim == 0) {
    throw format_error("embedding dimension is zero for a non-empty matrix", dim_offset);
  }
  RowMat<float> emb((int)count, (int)dim);
  for (auto& v : emb.v) v = r.f32();
  r.expect_end();
  return emb;
}

}  // namespace decor
