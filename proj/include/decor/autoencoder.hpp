#pragma once

// The two autoencoder architectures. The equivariant path lifts the image
// into 8 orientation channels per field, stacks two more group convolutions,
// collapses orientations (GroupPooling) and spatial D4 orbits, and applies an
// affine map to the 128-dim latent; that construction makes the latent
// invariant to the 8 dihedral transforms of the input by design. The plain
// path is an ordinary CNN of the same depth. Both share a transpose-conv
// decoder that reconstructs the input through a final sigmoid.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "decor/common.hpp"
#include "decor/grid.hpp"
#include "decor/nn.hpp"

namespace decor {

struct ArchConfig {
  int input_size = 32;       // square side, divisible by 8
  bool equivariant = true;   // false selects the plain-CNN encoder
  bool group_pool_mean = false;  // default max; mean behind this switch

  // Equivariant encoder: regular-representation field counts per block.
  int fields1 = 8, fields2 = 16, fields3 = 32;

  // Plain encoder: channel widths per block.
  int conv1 = 16, conv2 = 32, conv3 = 64, conv4 = 256;

  int latent_dim = 128;

  // Decoder channel widths (dec3 also feeds the 1x1 output layer).
  int dec1 = 32, dec2 = 16, dec3 = 8;

  void validate() const {
    if (input_size < 8 || input_size % 8 != 0)
      throw shape_error("encoder input side must be a positive multiple of 8");
    if (fields1 < 1 || fields2 < 1 || fields3 < 1 || conv1 < 1 || conv2 < 1 || conv3 < 1 ||
        conv4 < 1 || dec1 < 1 || dec2 < 1 || dec3 < 1 || latent_dim < 1)
      throw config_error("all architecture widths must be positive");
  }
};

// One named slice of the flat parameter vector.
struct ParamSegment {
  std::string name;
  std::size_t offset = 0;
  std::size_t count = 0;
  std::size_t fan_in = 0;  // 0 for biases (initialized to zero)
};

template <typename T>
struct Cache;

template <typename T>
struct Prepared;

template <typename T>
class Autoencoder {
 public:
  explicit Autoencoder(const ArchConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    side_ = cfg_.input_size;
    s8_ = side_ / 8;
    orbits_ = make_orbit_table(s8_);

    auto add = [&](const std::string& name, std::size_t count, std::size_t fan_in) {
      segments_.push_back({name, total_, count, fan_in});
      total_ += count;
    };
    if (cfg_.equivariant) {
      add("enc.w1", (std::size_t)cfg_.fields1 * 9, 9);
      add("enc.b1", (std::size_t)cfg_.fields1, 0);
      add("enc.w2", (std::size_t)cfg_.fields2 * cfg_.fields1 * 8 * 9,
          (std::size_t)cfg_.fields1 * 8 * 9);
      add("enc.b2", (std::size_t)cfg_.fields2, 0);
      add("enc.w3", (std::size_t)cfg_.fields3 * cfg_.fields2 * 8 * 9,
          (std::size_t)cfg_.fields2 * 8 * 9);
      add("enc.b3", (std::size_t)cfg_.fields3, 0);
      invariant_dim_ = (std::size_t)cfg_.fields3 * orbits_.count;
      add("enc.wd", (std::size_t)cfg_.latent_dim * invariant_dim_, invariant_dim_);
      add("enc.bd", (std::size_t)cfg_.latent_dim, 0);
    } else {
      add("enc.w1", (std::size_t)cfg_.conv1 * 9, 9);
      add("enc.b1", (std::size_t)cfg_.conv1, 0);
      add("enc.w2", (std::size_t)cfg_.conv2 * cfg_.conv1 * 9, (std::size_t)cfg_.conv1 * 9);
      add("enc.b2", (std::size_t)cfg_.conv2, 0);
      add("enc.w3", (std::size_t)cfg_.conv3 * cfg_.conv2 * 9, (std::size_t)cfg_.conv2 * 9);
      add("enc.b3", (std::size_t)cfg_.conv3, 0);
      add("enc.w4", (std::size_t)cfg_.conv4 * cfg_.conv3 * 9, (std::size_t)cfg_.conv3 * 9);
      add("enc.b4", (std::size_t)cfg_.conv4, 0);
      invariant_dim_ = (std::size_t)cfg_.conv4 * s8_ * s8_;
      add("enc.wd", (std::size_t)cfg_.latent_dim * invariant_dim_, invariant_dim_);
      add("enc.bd", (std::size_t)cfg_.latent_dim, 0);
    }
    const std::size_t zres = (std::size_t)cfg_.dec1 * s8_ * s8_;
    add("dec.wz", zres * cfg_.latent_dim, (std::size_t)cfg_.latent_dim);
    add("dec.bz", zres, 0);
    add("dec.w1", (std::size_t)cfg_.dec2 * cfg_.dec1 * 9, (std::size_t)cfg_.dec1 * 9);
    add("dec.b1", (std::size_t)cfg_.dec2, 0);
    add("dec.w2", (std::size_t)cfg_.dec3 * cfg_.dec2 * 9, (std::size_t)cfg_.dec2 * 9);
    add("dec.b2", (std::size_t)cfg_.dec3, 0);
    add("dec.w3", (std::size_t)cfg_.dec3 * cfg_.dec3 * 9, (std::size_t)cfg_.dec3 * 9);
    add("dec.b3", (std::size_t)cfg_.dec3, 0);
    add("dec.wo", (std::size_t)cfg_.dec3, (std::size_t)cfg_.dec3);
    add("dec.bo", 1, 0);
  }

  const ArchConfig& config() const { return cfg_; }
  std::size_t param_count() const { return total_; }
  const std::vector<ParamSegment>& segments() const { return segments_; }
  const OrbitTable& orbits() const { return orbits_; }
  std::size_t invariant_dim() const { return invariant_dim_; }

  const ParamSegment& segment(const std::string& name) const {
    for (const auto& s : segments_)
      if (s.name == name) return s;
    throw config_error("unknown parameter segment: " + name);
  }

  // Base weights uniform in +/- sqrt(1/fan_in), biases zero; seeded.
  std::vector<T> init_params(std::uint64_t seed) const {
    std::vector<T> p(total_, T{});
    Rng rng(seed);
    for (const auto& s : segments_) {
      if (s.fan_in == 0) continue;
      const double bound = std::sqrt(1.0 / (double)s.fan_in);
      for (std::size_t i = 0; i < s.count; ++i)
        p[s.offset + i] = (T)rng.uniform(-bound, bound);
    }
    return p;
  }

  Prepared<T> prepare(const std::vector<T>& params) const;

  // Batched forward. images = B contiguous side*side planes. Returns the
  // mean squared reconstruction error against the inputs themselves.
  T forward(const Prepared<T>& prep, const T* images, int batch, Cache<T>& c) const;

  // Accumulates parameter gradients of the mean batch loss into grad
  // (size param_count). Must follow a forward() on the same cache.
  void backward(const Prepared<T>& prep, const T* images, int batch, Cache<T>& c,
                std::vector<T>& grad) const;

  // Encoder only (fills cache up to the latent z).
  void encode_batch(const Prepared<T>& prep, const T* images, int batch, Cache<T>& c) const;

  std::vector<T> encode(const std::vector<T>& params, const Grid<T>& img) const {
    if (!img.square()) throw shape_error("encoder input must be square");
    if (img.height() != side_)
      throw shape_error("encoder input side " + std::to_string(img.height()) +
                        " does not match the configured " + std::to_string(side_));
    Prepared<T> prep = prepare(params);
    Cache<T> c;
    encode_batch(prep, img.raw().data(), 1, c);
    return std::vector<T>(c.z.v.begin(), c.z.v.end());
  }

  Grid<T> decode(const std::vector<T>& params, const std::vector<T>& z) const {
    if ((int)z.size() != cfg_.latent_dim) throw shape_error("latent size mismatch");
    for (T x : z)
      if (!std::isfinite((double)x)) throw numerical_error("latent vector must be finite");
    Prepared<T> prep = prepare(params);
    Cache<T> c;
    c.z.resize(cfg_.latent_dim, 1);
    for (int i = 0; i < cfg_.latent_dim; ++i) c.z.at(i, 0) = z[i];
    decode_from_latent(prep, 1, c);
    Grid<T> img(side_, side_);
    for (int i = 0; i < side_ * side_; ++i) img.raw()[(std::size_t)i] = c.recon.v[(std::size_t)i];
    return img;
  }

  void decode_from_latent(const Prepared<T>& prep, int batch, Cache<T>& c) const;

 private:
  ArchConfig cfg_;
  int side_ = 0, s8_ = 0;
  OrbitTable orbits_;
  std::size_t total_ = 0;
  std::size_t invariant_dim_ = 0;
  std::vector<ParamSegment> segments_;
};

// Expanded weight banks (equivariant path) plus the raw parameter pointer.
template <typename T>
struct Prepared {
  const std::vector<T>* params = nullptr;
  std::vector<T> w1e, w2e, w3e;  // effective banks when equivariant

  const T* at(const ParamSegment& s) const { return params->data() + s.offset; }
};

template <typename T>
struct Cache {
  // Encoder activations (post-ReLU where applicable).
  RowMat<T> in, a1, p1, a2, p2, a3, p3, a4, gp, inv, z;
  std::vector<std::uint8_t> gp_argmax;
  // Decoder activations.
  RowMat<T> dz, d0, u1, t1, u2, t2, u3, t3, pre, recon;
  // im2col scratch (kept for backward).
  RowMat<T> col1, col2, col3, col4, colT1, colT2, colT3, colO;
  // Backward scratch.
  RowMat<T> db1, db2, db3, dcol;
  std::vector<T> dweff;
};

template <typename T>
Prepared<T> Autoencoder<T>::prepare(const std::vector<T>& params) const {
  if (params.size() != total_) throw shape_error("parameter vector size mismatch");
  Prepared<T> prep;
  prep.params = &params;
  if (cfg_.equivariant) {
    expand_lift_weights(prep.at(segment("enc.w1")), cfg_.fields1, prep.w1e);
    expand_group_weights(prep.at(segment("enc.w2")), cfg_.fields2, cfg_.fields1, prep.w2e);
    expand_group_weights(prep.at(segment("enc.w3")), cfg_.fields3, cfg_.fields2, prep.w3e);
  }
  return prep;
}

template <typename T>
void Autoencoder<T>::encode_batch(const Prepared<T>& prep, const T* images, int batch,
                                  Cache<T>& c) const {
  const int S = side_;
  c.in.resize(1, batch * S * S);
  std::copy(images, images + (std::size_t)batch * S * S, c.in.v.begin());

  BatchShape g0{batch, S, S};
  BatchShape g1{batch, S / 2, S / 2};
  BatchShape g2{batch, S / 4, S / 4};
  BatchShape g3{batch, S / 8, S / 8};

  if (cfg_.equivariant) {
    conv_forward(c.in, g0, prep.w1e.data(), cfg_.fields1 * 8, prep.at(segment("enc.b1")), 8, 3,
                 c.col1, c.a1);
    relu_inplace(c.a1);
    avg_pool2_forward(c.a1, g0, c.p1);

    conv_forward(c.p1, g1, prep.w2e.data(), cfg_.fields2 * 8, prep.at(segment("enc.b2")), 8, 3,
                 c.col2, c.a2);
    relu_inplace(c.a2);
    avg_pool2_forward(c.a2, g1, c.p2);

    conv_forward(c.p2, g2, prep.w3e.data(), cfg_.fields3 * 8, prep.at(segment("enc.b3")), 8, 3,
                 c.col3, c.a3);
    relu_inplace(c.a3);
    avg_pool2_forward(c.a3, g2, c.p3);

    group_pool_forward(c.p3, cfg_.group_pool_mean, c.gp, c.gp_argmax);
    orbit_avg_forward(c.gp, g3, orbits_, c.inv);
    dense_forward(c.inv, prep.at(segment("enc.wd")), prep.at(segment("enc.bd")),
                  cfg_.latent_dim, c.z);
  } else {
    conv_forward(c.in, g0, prep.at(segment("enc.w1")), cfg_.conv1, prep.at(segment("enc.b1")), 1,
                 3, c.col1, c.a1);
    relu_inplace(c.a1);
    avg_pool2_forward(c.a1, g0, c.p1);

    conv_forward(c.p1, g1, prep.at(segment("enc.w2")), cfg_.conv2, prep.at(segment("enc.b2")), 1,
                 3, c.col2, c.a2);
    relu_inplace(c.a2);
    avg_pool2_forward(c.a2, g1, c.p2);

    conv_forward(c.p2, g2, prep.at(segment("enc.w3")), cfg_.conv3, prep.at(segment("enc.b3")), 1,
                 3, c.col3, c.a3);
    relu_inplace(c.a3);
    avg_pool2_forward(c.a3, g2, c.p3);

    conv_forward(c.p3, g3, prep.at(segment("enc.w4")), cfg_.conv4, prep.at(segment("enc.b4")), 1,
                 3, c.col4, c.a4);
    relu_inplace(c.a4);

    // Flatten (channel-major per sample) into one column per sample.
    const int hw = g3.pixels();
    c.inv.resize(cfg_.conv4 * hw, batch);
    for (int ch = 0; ch < cfg_.conv4; ++ch) {
      const T* src = c.a4.row(ch);
      for (int b = 0; b < batch; ++b)
        for (int p = 0; p < hw; ++p)
          c.inv.at(ch * hw + p, b) = src[(std::size_t)b * hw + p];
    }
    dense_forward(c.inv, prep.at(segment("enc.wd")), prep.at(segment("enc.bd")),
                  cfg_.latent_dim, c.z);
  }
}

template <typename T>
void Autoencoder<T>::decode_from_latent(const Prepared<T>& prep, int batch, Cache<T>& c) const {
  const int S = side_, s = s8_;
  const int zres = cfg_.dec1 * s * s;

  dense_forward(c.z, prep.at(segment("dec.wz")), prep.at(segment("dec.bz")), zres, c.dz);
  // Column-per-sample -> channel-major planes.
  c.d0.resize(cfg_.dec1, batch * s * s);
  for (int ch = 0; ch < cfg_.dec1; ++ch)
    for (int b = 0; b < batch; ++b)
      for (int p = 0; p < s * s; ++p)
        c.d0.row(ch)[(std::size_t)b * s * s + p] = c.dz.at(ch * s * s + p, b);

  BatchShape gd0{batch, s, s};
  BatchShape gd1{batch, 2 * s, 2 * s};
  BatchShape gd2{batch, 4 * s, 4 * s};
  BatchShape gd3{batch, S, S};

  zero_stuff2_forward(c.d0, gd0, c.u1);
  conv_forward(c.u1, gd1, prep.at(segment("dec.w1")), cfg_.dec2, prep.at(segment("dec.b1")), 1,
               3, c.colT1, c.t1);
  relu_inplace(c.t1);

  zero_stuff2_forward(c.t1, gd1, c.u2);
  conv_forward(c.u2, gd2, prep.at(segment("dec.w2")), cfg_.dec3, prep.at(segment("dec.b2")), 1,
               3, c.colT2, c.t2);
  relu_inplace(c.t2);

  zero_stuff2_forward(c.t2, gd2, c.u3);
  conv_forward(c.u3, gd3, prep.at(segment("dec.w3")), cfg_.dec3, prep.at(segment("dec.b3")), 1,
               3, c.colT3, c.t3);
  relu_inplace(c.t3);

  conv_forward(c.t3, gd3, prep.at(segment("dec.wo")), 1, prep.at(segment("dec.bo")), 1, 1,
               c.colO, c.pre);
  sigmoid(c.pre, c.recon);
}

template <typename T>
T Autoencoder<T>::forward(const Prepared<T>& prep, const T* images, int batch,
                          Cache<T>& c) const {
  encode_batch(prep, images, batch, c);
  decode_from_latent(prep, batch, c);
  const std::size_t n = c.recon.v.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = (double)c.recon.v[i] - (double)images[i];
    acc += d * d;
  }
  return (T)(acc / (double)n);
}

template <typename T>
void Autoencoder<T>::backward(const Prepared<T>& prep, const T* images, int batch, Cache<T>& c,
                              std::vector<T>& grad) const {
  if (grad.size() != total_) throw shape_error("gradient vector size mismatch");
  const int S = side_, s = s8_;
  BatchShape g0{batch, S, S};
  BatchShape g1{batch, S / 2, S / 2};
  BatchShape g2{batch, S / 4, S / 4};
  BatchShape g3{batch, s, s};
  BatchShape gd1{batch, 2 * s, 2 * s};
  BatchShape gd2{batch, 4 * s, 4 * s};

  auto seg = [&](const char* name) { return grad.data() + segment(name).offset; };

  // d(loss)/d(pre-sigmoid): 2 (r - x) / n * r (1 - r).
  const std::size_t n = c.recon.v.size();
  RowMat<T>& dpre = c.db1;
  dpre.resize(1, (int)n);
  const T scale = T(2) / T((double)n);
  for (std::size_t i = 0; i < n; ++i) {
    const T r = c.recon.v[i];
    dpre.v[i] = scale * (r - images[i]) * r * (T(1) - r);
  }

  // 1x1 output conv.
  RowMat<T>& d_t3 = c.db2;
  conv_backward(dpre, c.colO, g0, prep.at(segment("dec.wo")), 1, cfg_.dec3, 1, seg("dec.wo"),
                seg("dec.bo"), 1, c.dcol, d_t3);

  // Transpose-conv block 3.
  relu_backward_inplace(c.t3, d_t3);
  RowMat<T>& d_u3 = c.db3;
  conv_backward(d_t3, c.colT3, g0, prep.at(segment("dec.w3")), cfg_.dec3, cfg_.dec3, 3,
                seg("dec.w3"), seg("dec.b3"), 1, c.dcol, d_u3);
  RowMat<T>& d_t2 = c.db1;
  zero_stuff2_backward(d_u3, gd2, d_t2);

  // Block 2.
  relu_backward_inplace(c.t2, d_t2);
  RowMat<T>& d_u2 = c.db3;
  conv_backward(d_t2, c.colT2, gd2, prep.at(segment("dec.w2")), cfg_.dec3, cfg_.dec2, 3,
                seg("dec.w2"), seg("dec.b2"), 1, c.dcol, d_u2);
  RowMat<T>& d_t1 = c.db1;
  zero_stuff2_backward(d_u2, gd1, d_t1);

  // Block 1.
  relu_backward_inplace(c.t1, d_t1);
  RowMat<T>& d_u1 = c.db3;
  conv_backward(d_t1, c.colT1, gd1, prep.at(segment("dec.w1")), cfg_.dec2, cfg_.dec1, 3,
                seg("dec.w1"), seg("dec.b1"), 1, c.dcol, d_u1);
  RowMat<T>& d_d0 = c.db1;
  zero_stuff2_backward(d_u1, g3, d_d0);

  // Planes -> column-per-sample, through the latent dense pair.
  RowMat<T>& d_dz = c.db3;
  d_dz.resize(cfg_.dec1 * s * s, batch);
  for (int ch = 0; ch < cfg_.dec1; ++ch)
    for (int b = 0; b < batch; ++b)
      for (int p = 0; p < s * s; ++p)
        d_dz.at(ch * s * s + p, b) = d_d0.row(ch)[(std::size_t)b * s * s + p];

  RowMat<T>& d_z = c.db1;
  dense_backward(d_dz, c.z, prep.at(segment("dec.wz")), cfg_.dec1 * s * s, seg("dec.wz"),
                 seg("dec.bz"), d_z);

  RowMat<T>& d_inv = c.db3;
  dense_backward(d_z, c.inv, prep.at(segment("enc.wd")), cfg_.latent_dim, seg("enc.wd"),
                 seg("enc.bd"), d_inv);

  if (cfg_.equivariant) {
    RowMat<T>& d_gp = c.db1;
    orbit_avg_backward(d_inv, g3, orbits_, cfg_.fields3, d_gp);
    RowMat<T>& d_p3 = c.db3;
    group_pool_backward(d_gp, cfg_.group_pool_mean, c.gp_argmax, d_p3);

    RowMat<T>& d_a3 = c.db1;
    avg_pool2_backward(d_p3, g2, d_a3);
    relu_backward_inplace(c.a3, d_a3);
    c.dweff.assign(prep.w3e.size(), T{});
    RowMat<T>& d_p2 = c.db3;
    conv_backward(d_a3, c.col3, g2, prep.w3e.data(), cfg_.fields3 * 8, cfg_.fields2 * 8, 3,
                  c.dweff.data(), seg("enc.b3"), 8, c.dcol, d_p2);
    scatter_group_gradient(c.dweff.data(), cfg_.fields3, cfg_.fields2, seg("enc.w3"));

    RowMat<T>& d_a2 = c.db1;
    avg_pool2_backward(d_p2, g1, d_a2);
    relu_backward_inplace(c.a2, d_a2);
    c.dweff.assign(prep.w2e.size(), T{});
    RowMat<T>& d_p1 = c.db3;
    conv_backward(d_a2, c.col2, g1, prep.w2e.data(), cfg_.fields2 * 8, cfg_.fields1 * 8, 3,
                  c.dweff.data(), seg("enc.b2"), 8, c.dcol, d_p1);
    scatter_group_gradient(c.dweff.data(), cfg_.fields2, cfg_.fields1, seg("enc.w2"));

    RowMat<T>& d_a1 = c.db1;
    avg_pool2_backward(d_p1, g0, d_a1);
    relu_backward_inplace(c.a1, d_a1);
    c.dweff.assign(prep.w1e.size(), T{});
    RowMat<T>& d_in = c.db3;
    conv_backward(d_a1, c.col1, g0, prep.w1e.data(), cfg_.fields1 * 8, 1, 3, c.dweff.data(),
                  seg("enc.b1"), 8, c.dcol, d_in);
    scatter_lift_gradient(c.dweff.data(), cfg_.fields1, seg("enc.w1"));
  } else {
    const int hw = g3.pixels();
    RowMat<T>& d_a4 = c.db1;
    d_a4.resize(cfg_.conv4, batch * hw);
    for (int ch = 0; ch < cfg_.conv4; ++ch) {
      T* dst = d_a4.row(ch);
      for (int b = 0; b < batch; ++b)
        for (int p = 0; p < hw; ++p) dst[(std::size_t)b * hw + p] = d_inv.at(ch * hw + p, b);
    }
    relu_backward_inplace(c.a4, d_a4);
    RowMat<T>& d_p3 = c.db3;
    conv_backward(d_a4, c.col4, g3, prep.at(segment("enc.w4")), cfg_.conv4, cfg_.conv3, 3,
                  seg("enc.w4"), seg("enc.b4"), 1, c.dcol, d_p3);

    RowMat<T>& d_a3 = c.db1;
    avg_pool2_backward(d_p3, g2, d_a3);
    relu_backward_inplace(c.a3, d_a3);
    RowMat<T>& d_p2 = c.db3;
    conv_backward(d_a3, c.col3, g2, prep.at(segment("enc.w3")), cfg_.conv3, cfg_.conv2, 3,
                  seg("enc.w3"), seg("enc.b3"), 1, c.dcol, d_p2);

    RowMat<T>& d_a2 = c.db1;
    avg_pool2_backward(d_p2, g1, d_a2);
    relu_backward_inplace(c.a2, d_a2);
    RowMat<T>& d_p1 = c.db3;
    conv_backward(d_a2, c.col2, g1, prep.at(segment("enc.w2")), cfg_.conv2, cfg_.conv1, 3,
                  seg("enc.w2"), seg("enc.b2"), 1, c.dcol, d_p1);

    RowMat<T>& d_a1 = c.db1;
    avg_pool2_backward(d_p1, g0, d_a1);
    relu_backward_inplace(c.a1, d_a1);
    RowMat<T>& d_in = c.db3;
    conv_backward(d_a1, c.col1, g0, prep.at(segment("enc.w1")), cfg_.conv1, 1, 3, seg("enc.w1"),
                  seg("enc.b1"), 1, c.dcol, d_in);
  }
}

// ---------------------------------------------------------------------------
// Standalone layer entry points used by the invariance and oracle tests.

// Lift convolution of a single-channel batch; base = out_fields x 9 taps.
template <typename T>
RowMat<T> lift_conv(const RowMat<T>& in, const BatchShape& g, const T* base, int out_fields,
                    const T* bias) {
  if (in.rows != 1) throw shape_error("lift convolution expects one input channel");
  if (in.cols != g.columns()) throw shape_error("batch geometry does not match input");
  std::vector<T> eff;
  expand_lift_weights(base, out_fields, eff);
  RowMat<T> col, out;
  conv_forward(in, g, eff.data(), out_fields * 8, bias, 8, 3, col, out);
  return out;
}

// Group convolution; in carries in_fields*8 channels, base =
// out_fields x in_fields x 8 x 9.
template <typename T>
RowMat<T> group_conv(const RowMat<T>& in, const BatchShape& g, const T* base, int in_fields,
                     int out_fields, const T* bias) {
  if (in.rows != in_fields * 8) throw shape_error("group convolution channel count mismatch");
  if (in.cols != g.columns()) throw shape_error("batch geometry does not match input");
  std::vector<T> eff;
  expand_group_weights(base, out_fields, in_fields, eff);
  RowMat<T> col, out;
  conv_forward(in, g, eff.data(), out_fields * 8, bias, 8, 3, col, out);
  return out;
}

// The D4 action on a regular-representation feature map: spatial transform
// plus orientation-channel reindexing h -> g^-1 h per field.
template <typename T>
RowMat<T> d4_act_on_features(const RowMat<T>& in, const BatchShape& g, D4Element elem) {
  if (g.height != g.width) throw shape_error("feature planes must be square");
  if (in.rows % 8 != 0) throw shape_error("regular-representation maps carry 8k channels");
  const int n = g.height, HW = g.pixels();
  RowMat<T> out(in.rows, in.cols);
  const D4Element ginv = d4_inverse(elem);
  for (int f = 0; f < in.rows / 8; ++f)
    for (int h = 0; h < 8; ++h) {
      const int src_ch = f * 8 + d4_compose(ginv, D4Element::from_index(h)).index();
      const T* src = in.row(src_ch);
      T* dst = out.row(f * 8 + h);
      for (int b = 0; b < g.batch; ++b)
        d4_transform_plane(src + (std::size_t)b * HW, dst + (std::size_t)b * HW, n, elem);
    }
  return out;
}

// Mean squared error between two equal-shaped images.
template <typename T>
double mse_loss(const Grid<T>& a, const Grid<T>& b) {
  if (a.height() != b.height() || a.width() != b.width())
    throw shape_error("mse_loss requires equal shapes");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.raw().size(); ++i) {
    const double d = (double)a.raw()[i] - (double)b.raw()[i];
    acc += d * d;
  }
  return acc / (double)a.raw().size();
}

}  // namespace decor
