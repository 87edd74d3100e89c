#include "decor/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "decor/d4.hpp"

namespace decor {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Frame {
  int size;
  double cx, cy, radius;
  double x(int c) const { return c + 0.5 - cx; }
  double y(int r) const { return r + 0.5 - cy; }
  double dist(int r, int c) const { return std::hypot(x(c), y(r)); }
};

using Mask = Grid<std::uint8_t>;

void stamp_disk(Mask& m, const Frame& f, double px, double py, double radius) {
  for (int r = 0; r < f.size; ++r)
    for (int c = 0; c < f.size; ++c) {
      double dx = f.x(c) - px, dy = f.y(r) - py;
      if (dx * dx + dy * dy <= radius * radius) m(r, c) = 1;
    }
}

Mask draw_center(const Frame& f, const PatternGeometry& g, Rng& rng) {
  Mask m(f.size, f.size);
  double radius = g.center_radius * f.radius * rng.uniform(0.85, 1.15);
  stamp_disk(m, f, 0.0, 0.0, radius);
  return m;
}

Mask draw_donut(const Frame& f, const PatternGeometry& g, Rng& rng) {
  Mask m(f.size, f.size);
  double inner = g.donut_inner * f.radius * rng.uniform(0.9, 1.1);
  double outer = g.donut_outer * f.radius * rng.uniform(0.9, 1.1);
  if (outer < inner + 1.0) outer = inner + 1.0;
  for (int r = 0; r < f.size; ++r)
    for (int c = 0; c < f.size; ++c) {
      double d = f.dist(r, c);
      if (d >= inner && d <= outer) m(r, c) = 1;
    }
  return m;
}

Mask draw_edge_ring(const Frame& f, const PatternGeometry& g, Rng& rng) {
  Mask m(f.size, f.size);
  int t = g.ring_thickness_min +
          (int)rng.below((std::uint64_t)(g.ring_thickness_max - g.ring_thickness_min + 1));
  for (int r = 0; r < f.size; ++r)
    for (int c = 0; c < f.size; ++c)
      if (f.dist(r, c) >= f.radius - t) m(r, c) = 1;
  return m;
}

Mask draw_edge_loc(const Frame& f, const PatternGeometry& g, Rng& rng) {
  Mask m(f.size, f.size);
  double theta = rng.uniform(0.0, 2.0 * kPi);
  double span = rng.uniform(g.edge_loc_span_min, g.edge_loc_span_max);
  int t = g.edge_loc_thickness_min +
          (int)rng.below((std::uint64_t)(g.edge_loc_thickness_max - g.edge_loc_thickness_min + 1));
  for (int r = 0; r < f.size; ++r)
    for (int c = 0; c < f.size; ++c) {
      if (f.dist(r, c) < f.radius - t) continue;
      double a = std::atan2(f.y(r), f.x(c));
      double delta = std::remainder(a - theta, 2.0 * kPi);
      if (std::abs(delta) <= span / 2.0) m(r, c) = 1;
    }
  return m;
}

Mask draw_loc(const Frame& f, const PatternGeometry& g, Rng& rng) {
  Mask m(f.size, f.size);
  double rho = rng.uniform(0.15, 0.55) * f.radius;
  double phi = rng.uniform(0.0, 2.0 * kPi);
  double radius = rng.uniform(g.loc_radius_min, g.loc_radius_max) * f.radius;
  stamp_disk(m, f, rho * std::cos(phi), rho * std::sin(phi), radius);
  return m;
}

Mask draw_scratch(const Frame& f, const PatternGeometry& g, Rng& rng) {
  Mask m(f.size, f.size);
  double theta = rng.uniform(0.0, kPi);
  double len = rng.uniform(g.scratch_length_min, g.scratch_length_max) * f.radius;
  int width = g.scratch_width_min +
              (int)rng.below((std::uint64_t)(g.scratch_width_max - g.scratch_width_min + 1));
  double rho = rng.uniform(0.0, 0.3) * f.radius;
  double phi = rng.uniform(0.0, 2.0 * kPi);
  double mx = rho * std::cos(phi), my = rho * std::sin(phi);
  double dx = std::cos(theta), dy = std::sin(theta);
  double half = len / 2.0, halfw = width / 2.0;
  for (int r = 0; r < f.size; ++r)
    for (int c = 0; c < f.size; ++c) {
      double px = f.x(c) - mx, py = f.y(r) - my;
      double along = px * dx + py * dy;
      double across = std::abs(-px * dy + py * dx);
      if (std::abs(along) <= half && across <= halfw) m(r, c) = 1;
    }
  return m;
}

void pick_without_replacement(std::vector<int>& pool, std::size_t k, Rng& rng,
                              std::vector<int>& out) {
  out.clear();
  for (std::size_t i = 0; i < k && i < pool.size(); ++i) {
    std::size_t j = i + (std::size_t)rng.below(pool.size() - i);
    std::swap(pool[i], pool[j]);
    out.push_back(pool[i]);
  }
}

}  // namespace

bool on_wafer(int size, int r, int c) {
  double half = size / 2.0;
  double x = c + 0.5 - half, y = r + 0.5 - half;
  return x * x + y * y <= half * half;
}

Dataset generate_synthetic(const GeneratorSpec& spec, std::uint64_t seed) {
  if (spec.size < 16 || spec.size % 2 != 0)
    throw config_error("generator size must be even and >= 16, got " +
                       std::to_string(spec.size));
  for (const auto& p : spec.patterns)
    if (p.count < 0) throw config_error("pattern counts must be non-negative");
  if (spec.noise_rate < 0.0 || spec.noise_rate > 0.1)
    throw config_error("noise rate must lie in [0, 0.1]");

  const int n = spec.size;
  Frame frame{n, n / 2.0, n / 2.0, n / 2.0};

  Grid<std::uint8_t> blank(n, n, kCellOffWafer);
  std::vector<int> wafer_cells;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      if (on_wafer(n, r, c)) {
        blank(r, c) = kCellNormal;
        wafer_cells.push_back(r * n + c);
      }

  Dataset ds;
  ds.seed = seed;
  ds.provenance = "synthetic(size=" + std::to_string(n) + ")";
  Rng base(seed);

  std::vector<int> pool, picked;
  for (std::size_t pi = 0; pi < spec.patterns.size(); ++pi) {
    const auto& pat = spec.patterns[pi];
    for (int rep = 0; rep < pat.count; ++rep) {
      Rng rng = base.fork(pi).fork((std::uint64_t)rep);
      WaferMap map;
      map.cells = blank;
      map.labels = pat.combo;

      for (int bit : pat.combo.bits()) {
        Mask mask(n, n);
        switch ((Defect)bit) {
          case Defect::Center: mask = draw_center(frame, spec.geometry, rng); break;
          case Defect::Donut: mask = draw_donut(frame, spec.geometry, rng); break;
          case Defect::EdgeLoc: mask = draw_edge_loc(frame, spec.geometry, rng); break;
          case Defect::EdgeRing: mask = draw_edge_ring(frame, spec.geometry, rng); break;
          case Defect::Loc: mask = draw_loc(frame, spec.geometry, rng); break;
          case Defect::NearFull: {
            double f = rng.uniform(spec.geometry.near_full_min, spec.geometry.near_full_max);
            pool = wafer_cells;
            pick_without_replacement(pool, (std::size_t)std::lround(f * wafer_cells.size()),
                                     rng, picked);
            for (int idx : picked) mask.raw()[(std::size_t)idx] = 1;
            break;
          }
          case Defect::Scratch: mask = draw_scratch(frame, spec.geometry, rng); break;
          case Defect::Random: {
            for (int idx : wafer_cells)
              if (rng.uniform() < spec.geometry.random_rate) mask.raw()[(std::size_t)idx] = 1;
            break;
          }
        }
        D4Element orient = D4Element::from_index((int)rng.below(8));
        mask = d4_transform(mask, orient);
        for (int idx : wafer_cells)
          if (mask.raw()[(std::size_t)idx]) map.cells.raw()[(std::size_t)idx] = kCellDefect;
      }

      if (spec.noise_rate > 0.0) {
        std::size_t flips = (std::size_t)std::lround(spec.noise_rate * wafer_cells.size());
        pool = wafer_cells;
        pick_without_replacement(pool, flips, rng, picked);
        for (int idx : picked) {
          auto& cell = map.cells.raw()[(std::size_t)idx];
          cell = (cell == kCellDefect) ? kCellNormal : kCellDefect;
        }
      }

      ds.maps.push_back(std::move(map));
    }
  }
  return ds;
}

}  // namespace decor
