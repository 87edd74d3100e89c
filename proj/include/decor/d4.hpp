#pragma once

#include <array>
#include <utility>

#include "decor/grid.hpp"

namespace decor {

// Element of the dihedral group of the square: g = R^rot ∘ F^flip,
// where R is a quarter-turn and F a horizontal mirror. Eight elements,
// indexed rot + 4*flip.
struct D4Element {
  int rot = 0;    // quarter-turns, 0..3
  bool flip = false;

  int index() const { return rot + (flip ? 4 : 0); }

  static D4Element from_index(int i) { return {i & 3, (i & 4) != 0}; }

  static const std::array<D4Element, 8>& all() {
    static const std::array<D4Element, 8> g = {{{0, false},
                                                {1, false},
                                                {2, false},
                                                {3, false},
                                                {0, true},
                                                {1, true},
                                                {2, true},
                                                {3, true}}};
    return g;
  }

  bool operator==(const D4Element&) const = default;
};

// F∘R = R⁻¹∘F gives the twist on the rotation part.
inline D4Element d4_compose(D4Element a, D4Element b) {
  int rot = a.flip ? (a.rot + 4 - b.rot) & 3 : (a.rot + b.rot) & 3;
  return {rot, a.flip != b.flip};
}

inline D4Element d4_inverse(D4Element g) {
  return g.flip ? g : D4Element{(4 - g.rot) & 3, false};
}

// Source pixel of out(i,j) under the action out = g·M, M square of side n.
inline std::pair<int, int> d4_source(D4Element g, int n, int i, int j) {
  for (int t = 0; t < g.rot; ++t) {
    int ni = j, nj = n - 1 - i;
    i = ni;
    j = nj;
  }
  if (g.flip) j = n - 1 - j;
  return {i, j};
}

// Exact pixel permutation; no interpolation. Quarter-turn of
// [[1,2,3],[4,5,6],[7,8,9]] yields [[3,6,9],[2,5,8],[1,4,7]].
template <typename T>
Grid<T> d4_transform(const Grid<T>& img, D4Element g) {
  if (!img.square()) throw shape_error("d4_transform requires a square image");
  const int n = img.height();
  Grid<T> out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      auto [si, sj] = d4_source(g, n, i, j);
      out(i, j) = img(si, sj);
    }
  return out;
}

// Same permutation on a raw row-major plane (used on conv feature maps
// and filter taps, where building a Grid per channel would be wasteful).
template <typename T>
void d4_transform_plane(const T* in, T* out, int n, D4Element g) {
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      auto [si, sj] = d4_source(g, n, i, j);
      out[i * n + j] = in[si * n + sj];
    }
}

}  // namespace decor
