#pragma once

#include <filesystem>
#include <vector>

#include "decor/autoencoder.hpp"
#include "decor/nn.hpp"
#include "decor/preprocess.hpp"

namespace decor {

// Encoder checkpoint: magic "RCAE", format version, the architecture and
// image-preparation settings the parameters were trained under, then the raw
// float32 parameter vector in the architecture's segment order.
struct Checkpoint {
  ArchConfig arch;
  ImageConfig image;
  std::vector<float> params;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Embedding matrix: magic "EMB1", u32 row count, u32 dimension, float32
// values row-major. Rows are samples in dataset order.
void write_embeddings(const std::filesystem::path& path, const RowMat<float>& emb);
RowMat<float> read_embeddings(const std::filesystem::path& path);

}  // namespace decor
