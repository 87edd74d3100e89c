#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "decor/autoencoder.hpp"
#include "decor/common.hpp"
#include "decor/preprocess.hpp"
#include "decor/wafer.hpp"

namespace decor {

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 128;
  int epochs = 50;
  std::uint64_t seed = 0;
  bool equivariance_enabled = true;

  void validate() const {
    if (learning_rate < 0.0) throw config_error("learning rate must be non-negative");
    if (batch_size < 1) throw config_error("batch size must be positive");
    if (epochs < 1) throw config_error("epochs must be at least 1");
  }
};

template <typename T>
struct TrainOutput {
  std::vector<T> params;
  std::vector<double> loss_curve;  // one mean training MSE per epoch
};

// Adam on flattened images; deterministic for fixed (images, configs):
// fixed shuffle stream, fixed batch boundaries, fixed accumulation order.
template <typename T>
TrainOutput<T> train_autoencoder(const std::vector<Grid<T>>& images, const ArchConfig& arch,
                                 const TrainConfig& cfg) {
  cfg.validate();
  if (images.empty()) throw config_error("training set is empty");
  const Autoencoder<T> model(arch);
  const int side = arch.input_size;
  for (const auto& img : images) {
    if (img.height() != side || img.width() != side)
      throw shape_error("training image size does not match the architecture");
  }

  const std::size_t n = images.size();
  const std::size_t pixels = (std::size_t)side * side;
  const std::size_t p_count = model.param_count();

  TrainOutput<T> out;
  out.params = model.init_params(cfg.seed);

  std::vector<T> grad(p_count), m(p_count, T{}), v(p_count, T{});
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long step = 0;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), (std::size_t)0);
  Rng shuffle_rng = Rng(cfg.seed).fork(1);

  const std::size_t bs = (std::size_t)cfg.batch_size;
  std::vector<T> batch_buf(bs * pixels);
  Cache<T> cache;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;

    for (std::size_t start = 0, batch_idx = 0; start < n; start += bs, ++batch_idx) {
      const std::size_t b = std::min(bs, n - start);
      for (std::size_t i = 0; i < b; ++i) {
        const auto& img = images[order[start + i]];
        std::copy(img.raw().begin(), img.raw().end(), batch_buf.begin() + i * pixels);
      }

      Prepared<T> prep = model.prepare(out.params);
      const T loss = model.forward(prep, batch_buf.data(), (int)b, cache);
      if (!std::isfinite((double)loss)) {
        throw numerical_error("training loss is not finite at epoch " +
                              std::to_string(epoch + 1) + ", batch " +
                              std::to_string(batch_idx + 1));
      }
      epoch_loss += (double)loss * (double)b;

      std::fill(grad.begin(), grad.end(), T{});
      model.backward(prep, batch_buf.data(), (int)b, cache, grad);

      ++step;
      const double c1 = 1.0 - std::pow(beta1, (double)step);
      const double c2 = 1.0 - std::pow(beta2, (double)step);
      bool finite = true;
      for (std::size_t i = 0; i < p_count; ++i) {
        const double g = (double)grad[i];
        const double mi = beta1 * (double)m[i] + (1.0 - beta1) * g;
        const double vi = beta2 * (double)v[i] + (1.0 - beta2) * g * g;
        m[i] = (T)mi;
        v[i] = (T)vi;
        const double update = cfg.learning_rate * (mi / c1) / (std::sqrt(vi / c2) + eps);
        const T next = (T)((double)out.params[i] - update);
        out.params[i] = next;
        finite &= std::isfinite((double)next);
      }
      if (!finite) {
        throw numerical_error("parameters became non-finite at epoch " +
                              std::to_string(epoch + 1) + ", batch " +
                              std::to_string(batch_idx + 1));
      }
    }
    out.loss_curve.push_back(epoch_loss / (double)n);
  }
  return out;
}

// Rows of the result are the latent vectors, dataset order preserved.
template <typename T>
RowMat<T> embed_images(const std::vector<Grid<T>>& images, const ArchConfig& arch,
                       const std::vector<T>& params, int batch_size = 64) {
  const Autoencoder<T> model(arch);
  const int side = arch.input_size;
  const std::size_t pixels = (std::size_t)side * side;
  RowMat<T> emb((int)images.size(), arch.latent_dim);
  if (images.empty()) return emb;

  Prepared<T> prep = model.prepare(params);
  Cache<T> cache;
  std::vector<T> buf((std::size_t)batch_size * pixels);
  for (std::size_t start = 0; start < images.size(); start += (std::size_t)batch_size) {
    const std::size_t b = std::min((std::size_t)batch_size, images.size() - start);
    for (std::size_t i = 0; i < b; ++i) {
      const auto& img = images[start + i];
      if (img.height() != side || img.width() != side)
        throw shape_error("image size does not match the architecture");
      std::copy(img.raw().begin(), img.raw().end(), buf.begin() + i * pixels);
    }
    model.encode_batch(prep, buf.data(), (int)b, cache);
    for (std::size_t i = 0; i < b; ++i)
      for (int d = 0; d < arch.latent_dim; ++d)
        emb.at((int)(start + i), d) = cache.z.at(d, (int)i);
  }
  return emb;
}

// Dataset-level conveniences (float path used by the pipeline).
inline TrainOutput<float> train_autoencoder(const Dataset& ds, const ArchConfig& arch,
                                            const TrainConfig& cfg, const ImageConfig& image) {
  if (ds.empty()) throw config_error("training set is empty");
  return train_autoencoder(preprocess_dataset(ds, image), arch, cfg);
}

inline RowMat<float> embed_dataset(const Dataset& ds, const ArchConfig& arch,
                                   const std::vector<float>& params, const ImageConfig& image) {
  return embed_images(preprocess_dataset(ds, image), arch, params);
}

}  // namespace decor
