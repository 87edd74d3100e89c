#pragma once

// Dense batched building blocks for the autoencoders. Activations live in
// channel-major matrices: rows = channels, columns = batch-sample-major
// pixels (column b*H*W + r*W + c). All heavy lifting is Eigen GEMM; every
// loop runs in a fixed order so results are bit-deterministic.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "decor/common.hpp"
#include "decor/d4.hpp"

namespace decor {

template <typename T>
using EigenRowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
struct RowMat {
  int rows = 0, cols = 0;
  std::vector<T> v;

  RowMat() = default;
  RowMat(int r, int c) { resize(r, c); }

  void resize(int r, int c) {
    rows = r;
    cols = c;
    v.assign((std::size_t)r * (std::size_t)c, T{});
  }

  T* row(int r) { return v.data() + (std::size_t)r * cols; }
  const T* row(int r) const { return v.data() + (std::size_t)r * cols; }
  T& at(int r, int c) { return v[(std::size_t)r * cols + c]; }
  const T& at(int r, int c) const { return v[(std::size_t)r * cols + c]; }

  Eigen::Map<EigenRowMat<T>> map() { return {v.data(), rows, cols}; }
  Eigen::Map<const EigenRowMat<T>> map() const { return {v.data(), rows, cols}; }

  bool operator==(const RowMat&) const = default;
};

// Geometry of the samples behind the column dimension of a RowMat.
struct BatchShape {
  int batch = 0, height = 0, width = 0;
  int pixels() const { return height * width; }
  int columns() const { return batch * pixels(); }
};

// ---------------------------------------------------------------------------
// im2col convolution, zero same-padding, odd kernel.

// col gets (C_in*K*K) x (B*H*W); entry ((ci*K+kr)*K+kc, b*HW + r*W + c) =
// in(ci, r+kr-K/2, c+kc-K/2) or 0 outside the image.
template <typename T>
void im2col(const RowMat<T>& in, const BatchShape& g, int K, RowMat<T>& col) {
  const int H = g.height, W = g.width, HW = g.pixels(), half = K / 2;
  col.resize(in.rows * K * K, g.columns());
  for (int ci = 0; ci < in.rows; ++ci) {
    const T* src = in.row(ci);
    for (int kr = 0; kr < K; ++kr) {
      for (int kc = 0; kc < K; ++kc) {
        T* dst = col.row((ci * K + kr) * K + kc);
        const int dr = kr - half, dc = kc - half;
        for (int b = 0; b < g.batch; ++b) {
          const T* plane = src + (std::size_t)b * HW;
          T* out = dst + (std::size_t)b * HW;
          for (int r = 0; r < H; ++r) {
            const int sr = r + dr;
            if (sr < 0 || sr >= H) {
              for (int c = 0; c < W; ++c) out[r * W + c] = T{};
              continue;
            }
            for (int c = 0; c < W; ++c) {
              const int sc = c + dc;
              out[r * W + c] = (sc < 0 || sc >= W) ? T{} : plane[sr * W + sc];
            }
          }
        }
      }
    }
  }
}

// Scatter-add of a column gradient back onto the input layout.
template <typename T>
void col2im_add(const RowMat<T>& dcol, const BatchShape& g, int K, RowMat<T>& din) {
  const int H = g.height, W = g.width, HW = g.pixels(), half = K / 2;
  for (int ci = 0; ci < din.rows; ++ci) {
    T* dst = din.row(ci);
    for (int kr = 0; kr < K; ++kr) {
      for (int kc = 0; kc < K; ++kc) {
        const T* src = dcol.row((ci * K + kr) * K + kc);
        const int dr = kr - half, dc = kc - half;
        for (int b = 0; b < g.batch; ++b) {
          const T* grad = src + (std::size_t)b * HW;
          T* plane = dst + (std::size_t)b * HW;
          for (int r = 0; r < H; ++r) {
            const int sr = r + dr;
            if (sr < 0 || sr >= H) continue;
            for (int c = 0; c < W; ++c) {
              const int sc = c + dc;
              if (sc >= 0 && sc < W) plane[sr * W + sc] += grad[r * W + c];
            }
          }
        }
      }
    }
  }
}

// out = weights (C_out x C_in*K*K) * col + bias; out channel c uses
// bias[c / bias_group] (group 8 shares one bias across the orientation
// channels of a field; group 1 is a plain per-channel bias).
template <typename T>
void conv_forward(const RowMat<T>& in, const BatchShape& g, const T* weights, int c_out,
                  const T* bias, int bias_group, int K, RowMat<T>& col, RowMat<T>& out) {
  im2col(in, g, K, col);
  out.resize(c_out, g.columns());
  Eigen::Map<const EigenRowMat<T>> w(weights, c_out, col.rows);
  out.map().noalias() = w * col.map();
  if (bias != nullptr) {
    for (int c = 0; c < c_out; ++c) {
      const T b = bias[c / bias_group];
      T* row = out.row(c);
      for (int i = 0; i < out.cols; ++i) row[i] += b;
    }
  }
}

// Backward of conv_forward. dweights/dbias are accumulated (+=); din is
// overwritten. col must still hold the forward columns.
template <typename T>
void conv_backward(const RowMat<T>& dout, const RowMat<T>& col, const BatchShape& g,
                   const T* weights, int c_out, int c_in, int K, T* dweights, T* dbias,
                   int bias_group, RowMat<T>& dcol, RowMat<T>& din) {
  Eigen::Map<EigenRowMat<T>> dw(dweights, c_out, c_in * K * K);
  dw.noalias() += dout.map() * col.map().transpose();

  if (dbias != nullptr) {
    for (int c = 0; c < c_out; ++c) {
      T acc{};
      const T* row = dout.row(c);
      for (int i = 0; i < dout.cols; ++i) acc += row[i];
      dbias[c / bias_group] += acc;
    }
  }

  Eigen::Map<const EigenRowMat<T>> w(weights, c_out, c_in * K * K);
  dcol.resize(c_in * K * K, g.columns());
  dcol.map().noalias() = w.transpose() * dout.map();
  din.resize(c_in, g.columns());
  col2im_add(dcol, g, K, din);
}

// ---------------------------------------------------------------------------
// Pointwise pieces.

template <typename T>
void relu_inplace(RowMat<T>& a) {
  for (T& x : a.v) x = x > T{} ? x : T{};
}

// dpre = dpost where the forward output was positive, else 0.
template <typename T>
void relu_backward_inplace(const RowMat<T>& post, RowMat<T>& grad) {
  for (std::size_t i = 0; i < grad.v.size(); ++i) {
    if (!(post.v[i] > T{})) grad.v[i] = T{};
  }
}

template <typename T>
T sigmoid_scalar(T x) {
  if (x >= T{}) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

template <typename T>
void sigmoid(const RowMat<T>& in, RowMat<T>& out) {
  out.resize(in.rows, in.cols);
  for (std::size_t i = 0; i < in.v.size(); ++i) out.v[i] = sigmoid_scalar(in.v[i]);
}

// ---------------------------------------------------------------------------
// 2x2 average pooling, stride 2.

template <typename T>
void avg_pool2_forward(const RowMat<T>& in, const BatchShape& g, RowMat<T>& out) {
  if (g.height % 2 != 0 || g.width % 2 != 0)
    throw shape_error("average pooling requires even spatial size");
  const int H = g.height, W = g.width, H2 = H / 2, W2 = W / 2;
  out.resize(in.rows, g.batch * H2 * W2);
  for (int c = 0; c < in.rows; ++c) {
    const T* src = in.row(c);
    T* dst = out.row(c);
    for (int b = 0; b < g.batch; ++b) {
      const T* plane = src + (std::size_t)b * H * W;
      T* oplane = dst + (std::size_t)b * H2 * W2;
      for (int r = 0; r < H2; ++r)
        for (int col = 0; col < W2; ++col) {
          const T* p = plane + (2 * r) * W + 2 * col;
          oplane[r * W2 + col] = (p[0] + p[1] + p[W] + p[W + 1]) * T(0.25);
        }
    }
  }
}

template <typename T>
void avg_pool2_backward(const RowMat<T>& dout, const BatchShape& g, RowMat<T>& din) {
  const int H = g.height, W = g.width, H2 = H / 2, W2 = W / 2;
  din.resize(dout.rows, g.columns());
  for (int c = 0; c < dout.rows; ++c) {
    const T* src = dout.row(c);
    T* dst = din.row(c);
    for (int b = 0; b < g.batch; ++b) {
      const T* gplane = src + (std::size_t)b * H2 * W2;
      T* plane = dst + (std::size_t)b * H * W;
      for (int r = 0; r < H2; ++r)
        for (int col = 0; col < W2; ++col) {
          const T v = gplane[r * W2 + col] * T(0.25);
          T* p = plane + (2 * r) * W + 2 * col;
          p[0] = v;
          p[1] = v;
          p[W] = v;
          p[W + 1] = v;
        }
    }
  }
}

// ---------------------------------------------------------------------------
// Group pooling: collapse the 8 orientation channels of each field.

template <typename T>
void group_pool_forward(const RowMat<T>& in, bool mean, RowMat<T>& out,
                        std::vector<std::uint8_t>& argmax) {
  if (in.rows % 8 != 0) throw shape_error("group pooling needs a multiple of 8 channels");
  const int fields = in.rows / 8;
  out.resize(fields, in.cols);
  if (mean) {
    argmax.clear();
    for (int f = 0; f < fields; ++f) {
      T* dst = out.row(f);
      for (int gch = 0; gch < 8; ++gch) {
        const T* src = in.row(f * 8 + gch);
        for (int i = 0; i < in.cols; ++i) dst[i] += src[i];
      }
      for (int i = 0; i < in.cols; ++i) dst[i] *= T(0.125);
    }
    return;
  }
  argmax.assign((std::size_t)fields * in.cols, 0);
  for (int f = 0; f < fields; ++f) {
    T* dst = out.row(f);
    std::uint8_t* arg = argmax.data() + (std::size_t)f * in.cols;
    for (int i = 0; i < in.cols; ++i) dst[i] = in.at(f * 8, i);
    for (int gch = 1; gch < 8; ++gch) {
      const T* src = in.row(f * 8 + gch);
      for (int i = 0; i < in.cols; ++i) {
        if (src[i] > dst[i]) {
          dst[i] = src[i];
          arg[i] = (std::uint8_t)gch;
        }
      }
    }
  }
}

template <typename T>
void group_pool_backward(const RowMat<T>& dout, bool mean,
                         const std::vector<std::uint8_t>& argmax, RowMat<T>& din) {
  const int fields = dout.rows;
  din.resize(fields * 8, dout.cols);
  if (mean) {
    for (int f = 0; f < fields; ++f) {
      const T* src = dout.row(f);
      for (int gch = 0; gch < 8; ++gch) {
        T* dst = din.row(f * 8 + gch);
        for (int i = 0; i < dout.cols; ++i) dst[i] = src[i] * T(0.125);
      }
    }
    return;
  }
  for (int f = 0; f < fields; ++f) {
    const T* src = dout.row(f);
    const std::uint8_t* arg = argmax.data() + (std::size_t)f * dout.cols;
    for (int i = 0; i < dout.cols; ++i) {
      din.at(f * 8 + arg[i], i) = src[i];
    }
  }
}

// ---------------------------------------------------------------------------
// Spatial D4 orbits of an n x n grid. Averaging pooled features over each
// orbit is what makes the final affine map orientation-invariant.

struct OrbitTable {
  int grid = 0;
  int count = 0;                    // number of orbits
  std::vector<int> orbit_of;       // grid*grid entries
  std::vector<std::vector<int>> members;  // positions per orbit, ascending
};

inline OrbitTable make_orbit_table(int n) {
  OrbitTable t;
  t.grid = n;
  t.orbit_of.assign((std::size_t)n * n, -1);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      if (t.orbit_of[(std::size_t)r * n + c] >= 0) continue;
      const int id = t.count++;
      std::vector<int> mem;
      for (const D4Element& g : D4Element::all()) {
        auto [sr, sc] = d4_source(g, n, r, c);
        const int pos = sr * n + sc;
        if (t.orbit_of[(std::size_t)pos] < 0) {
          t.orbit_of[(std::size_t)pos] = id;
          mem.push_back(pos);
        }
      }
      std::sort(mem.begin(), mem.end());
      t.members.push_back(std::move(mem));
    }
  return t;
}

// in: (fields x B*n*n) -> out: (fields*count x B), feature (f, o) = mean of
// field f over orbit o.
template <typename T>
void orbit_avg_forward(const RowMat<T>& in, const BatchShape& g, const OrbitTable& t,
                       RowMat<T>& out) {
  const int HW = g.pixels();
  out.resize(in.rows * t.count, g.batch);
  for (int f = 0; f < in.rows; ++f) {
    const T* src = in.row(f);
    for (int o = 0; o < t.count; ++o) {
      T* dst = out.row(f * t.count + o);
      const auto& mem = t.members[(std::size_t)o];
      const T scale = T(1) / T(mem.size());
      for (int b = 0; b < g.batch; ++b) {
        T acc{};
        const T* plane = src + (std::size_t)b * HW;
        for (int pos : mem) acc += plane[pos];
        dst[b] = acc * scale;
      }
    }
  }
}

template <typename T>
void orbit_avg_backward(const RowMat<T>& dout, const BatchShape& g, const OrbitTable& t,
                        int fields, RowMat<T>& din) {
  const int HW = g.pixels();
  din.resize(fields, g.columns());
  for (int f = 0; f < fields; ++f) {
    T* dst = din.row(f);
    for (int o = 0; o < t.count; ++o) {
      const T* src = dout.row(f * t.count + o);
      const auto& mem = t.members[(std::size_t)o];
      const T scale = T(1) / T(mem.size());
      for (int b = 0; b < g.batch; ++b) {
        const T v = src[b] * scale;
        T* plane = dst + (std::size_t)b * HW;
        for (int pos : mem) plane[pos] += v;
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Dense layer on column-per-sample matrices: out (M x B) = W (M x N) X (N x B).

template <typename T>
void dense_forward(const RowMat<T>& x, const T* weights, const T* bias, int m, RowMat<T>& out) {
  out.resize(m, x.cols);
  Eigen::Map<const EigenRowMat<T>> w(weights, m, x.rows);
  out.map().noalias() = w * x.map();
  if (bias != nullptr) {
    for (int r = 0; r < m; ++r) {
      T* row = out.row(r);
      for (int b = 0; b < x.cols; ++b) row[b] += bias[r];
    }
  }
}

template <typename T>
void dense_backward(const RowMat<T>& dout, const RowMat<T>& x, const T* weights, int m,
                    T* dweights, T* dbias, RowMat<T>& dx) {
  Eigen::Map<EigenRowMat<T>> dw(dweights, m, x.rows);
  dw.noalias() += dout.map() * x.map().transpose();
  if (dbias != nullptr) {
    for (int r = 0; r < m; ++r) {
      T acc{};
      const T* row = dout.row(r);
      for (int b = 0; b < dout.cols; ++b) acc += row[b];
      dbias[r] += acc;
    }
  }
  Eigen::Map<const EigenRowMat<T>> w(weights, m, x.rows);
  dx.resize(x.rows, x.cols);
  dx.map().noalias() = w.transpose() * dout.map();
}

// ---------------------------------------------------------------------------
// Stride-2 zero insertion: in (C x B*H*W) -> out (C x B*2H*2W) with
// out(2r, 2c) = in(r, c). Transpose convolution = zero insertion + 3x3
// correlation at the doubled resolution.

template <typename T>
void zero_stuff2_forward(const RowMat<T>& in, const BatchShape& g, RowMat<T>& out) {
  const int H = g.height, W = g.width, H2 = 2 * H, W2 = 2 * W;
  out.resize(in.rows, g.batch * H2 * W2);
  for (int c = 0; c < in.rows; ++c) {
    const T* src = in.row(c);
    T* dst = out.row(c);
    for (int b = 0; b < g.batch; ++b) {
      const T* plane = src + (std::size_t)b * H * W;
      T* oplane = dst + (std::size_t)b * H2 * W2;
      for (int r = 0; r < H; ++r)
        for (int col = 0; col < W; ++col) oplane[(2 * r) * W2 + 2 * col] = plane[r * W + col];
    }
  }
}

template <typename T>
void zero_stuff2_backward(const RowMat<T>& dout, const BatchShape& g, RowMat<T>& din) {
  const int H = g.height, W = g.width, H2 = 2 * H, W2 = 2 * W;
  din.resize(dout.rows, g.columns());
  for (int c = 0; c < dout.rows; ++c) {
    const T* src = dout.row(c);
    T* dst = din.row(c);
    for (int b = 0; b < g.batch; ++b) {
      const T* gplane = src + (std::size_t)b * H2 * W2;
      T* plane = dst + (std::size_t)b * H * W;
      for (int r = 0; r < H; ++r)
        for (int col = 0; col < W; ++col) plane[r * W + col] = gplane[(2 * r) * W2 + 2 * col];
    }
  }
}

// ---------------------------------------------------------------------------
// D4 kernel-orbit machinery.

// tap_src[g][t]: index into the base 3x3 taps that lands on tap t after the
// kernel is spatially transformed by element g.
struct KernelOrbitTable {
  int tap_src[8][9];
  int orient_src[8][8];  // orient_src[g][k] = index of g^-1 * k

  KernelOrbitTable() {
    for (const D4Element& g : D4Element::all()) {
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          auto [si, sj] = d4_source(g, 3, i, j);
          tap_src[g.index()][i * 3 + j] = si * 3 + sj;
        }
      const D4Element ginv = d4_inverse(g);
      for (int k = 0; k < 8; ++k) {
        orient_src[g.index()][k] = d4_compose(ginv, D4Element::from_index(k)).index();
      }
    }
  }
};

inline const KernelOrbitTable& kernel_orbit_table() {
  static const KernelOrbitTable t;
  return t;
}

// Public orbit operation: taps hold in_orient contiguous 3x3 kernels
// (in_orient = 1 for a trivial input representation). Returns the kernel for
// output orientation g: spatially transformed taps with input orientation
// channels permuted by the regular representation.
template <typename T>
std::vector<T> kernel_orbit(const std::vector<T>& taps, int in_orient, int kernel_size,
                            D4Element g) {
  if (kernel_size % 2 == 0 || kernel_size <= 0)
    throw config_error("kernel size must be odd and positive");
  if (kernel_size != 3) throw config_error("only 3x3 kernels are supported");
  if (taps.size() != (std::size_t)in_orient * 9) throw shape_error("tap buffer size mismatch");
  const auto& tab = kernel_orbit_table();
  std::vector<T> out(taps.size());
  for (int k = 0; k < in_orient; ++k) {
    const int src_k = in_orient == 1 ? 0 : tab.orient_src[g.index()][k];
    for (int t = 0; t < 9; ++t) {
      out[(std::size_t)k * 9 + t] = taps[(std::size_t)src_k * 9 + tab.tap_src[g.index()][t]];
    }
  }
  return out;
}

// Expands a lift-convolution base (out_fields x 1 x 9) into the effective
// bank (out_fields*8 x 9): row (o*8+g) = kernel_orbit of field o by g.
template <typename T>
void expand_lift_weights(const T* base, int out_fields, std::vector<T>& eff) {
  const auto& tab = kernel_orbit_table();
  eff.resize((std::size_t)out_fields * 8 * 9);
  for (int o = 0; o < out_fields; ++o)
    for (int g = 0; g < 8; ++g)
      for (int t = 0; t < 9; ++t)
        eff[((std::size_t)o * 8 + g) * 9 + t] = base[(std::size_t)o * 9 + tab.tap_src[g][t]];
}

// Expands a group-convolution base (out_fields x in_fields x 8 x 9) into
// (out_fields*8 x in_fields*8*9): row (o*8+g), column ((i*8+k)*9+t) =
// base[o][i][g^-1 k][tap_src[g][t]].
template <typename T>
void expand_group_weights(const T* base, int out_fields, int in_fields, std::vector<T>& eff) {
  const auto& tab = kernel_orbit_table();
  const std::size_t in_stride = (std::size_t)in_fields * 8 * 9;
  eff.resize((std::size_t)out_fields * 8 * in_stride);
  for (int o = 0; o < out_fields; ++o)
    for (int g = 0; g < 8; ++g) {
      T* row = eff.data() + ((std::size_t)o * 8 + g) * in_stride;
      const T* brow = base + (std::size_t)o * in_stride;
      for (int i = 0; i < in_fields; ++i)
        for (int k = 0; k < 8; ++k) {
          const T* src = brow + ((std::size_t)i * 8 + tab.orient_src[g][k]) * 9;
          T* dst = row + ((std::size_t)i * 8 + k) * 9;
          for (int t = 0; t < 9; ++t) dst[t] = src[tab.tap_src[g][t]];
        }
    }
}

// Scatter of an effective-bank gradient back onto the base tensors; exact
// adjoints of the expansions above.
template <typename T>
void scatter_lift_gradient(const T* deff, int out_fields, T* dbase) {
  const auto& tab = kernel_orbit_table();
  for (int o = 0; o < out_fields; ++o)
    for (int g = 0; g < 8; ++g)
      for (int t = 0; t < 9; ++t)
        dbase[(std::size_t)o * 9 + tab.tap_src[g][t]] +=
            deff[((std::size_t)o * 8 + g) * 9 + t];
}

template <typename T>
void scatter_group_gradient(const T* deff, int out_fields, int in_fields, T* dbase) {
  const auto& tab = kernel_orbit_table();
  const std::size_t in_stride = (std::size_t)in_fields * 8 * 9;
  for (int o = 0; o < out_fields; ++o)
    for (int g = 0; g < 8; ++g) {
      const T* row = deff + ((std::size_t)o * 8 + g) * in_stride;
      T* brow = dbase + (std::size_t)o * in_stride;
      for (int i = 0; i < in_fields; ++i)
        for (int k = 0; k < 8; ++k) {
          T* dst = brow + ((std::size_t)i * 8 + tab.orient_src[g][k]) * 9;
          const T* src = row + ((std::size_t)i * 8 + k) * 9;
          for (int t = 0; t < 9; ++t) dst[tab.tap_src[g][t]] += src[t];
        }
    }
}

}  // namespace decor
