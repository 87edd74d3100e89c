#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <vector>

#include "decor/bytes.hpp"
#include "decor/common.hpp"
#include "decor/d4.hpp"
#include "decor/dataset_io.hpp"
#include "decor/preprocess.hpp"
#include "decor/sha256.hpp"
#include "decor/split.hpp"
#include "decor/synthetic.hpp"
#include "doctest.h"

namespace fs = std::filesystem;
using namespace decor;

namespace {

GeneratorSpec single_pattern(int size, DefectLabelSet combo, int count) {
  GeneratorSpec spec;
  spec.size = size;
  spec.patterns.push_back({combo, count});
  return spec;
}

DefectLabelSet labels_of(std::initializer_list<Defect> defects) {
  DefectLabelSet s;
  for (Defect d : defects) s.add(d);
  return s;
}

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / ("decor_test_" + name);
}

}  // namespace

TEST_CASE("rng: deterministic, forked streams independent") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng base(7);
  Rng f1 = base.fork(1), f2 = base.fork(2);
  int same = 0;
  for (int i = 0; i < 64; ++i) same += (f1.next_u64() == f2.next_u64());
  CHECK(same == 0);

  Rng c(9);
  for (int i = 0; i < 10000; ++i) {
    double u = c.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  for (std::uint64_t n : {1ull, 2ull, 7ull, 1000ull}) {
    for (int i = 0; i < 200; ++i) CHECK(c.below(n) < n);
  }

  // Box-Muller sanity: mean ~0, variance ~1 over a large draw.
  Rng g(123);
  double sum = 0.0, sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    double x = g.normal();
    sum += x;
    sq += x * x;
  }
  CHECK(std::abs(sum / n) < 0.03);
  CHECK(std::abs(sq / n - 1.0) < 0.05);

  // Shuffle keeps the multiset.
  std::vector<int> v = {1, 2, 3, 4, 5, 6, 7, 8};
  Rng s(5);
  s.shuffle(v);
  std::multiset<int> got(v.begin(), v.end());
  CHECK(got == std::multiset<int>({1, 2, 3, 4, 5, 6, 7, 8}));
}

TEST_CASE("d4: quarter-turn matches the documented permutation") {
  Grid<float> m(3, 3);
  float k = 1.0f;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m(r, c) = k++;

  Grid<float> turned = d4_transform(m, D4Element{1, false});
  const float want[3][3] = {{3, 6, 9}, {2, 5, 8}, {1, 4, 7}};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) CHECK(turned(r, c) == want[r][c]);
}

TEST_CASE("d4: identity, order-4 rotation, involutive flip") {
  Rng rng(11);
  Grid<float> m(6, 6);
  for (auto& x : m.raw()) x = (float)rng.uniform();

  CHECK(d4_transform(m, D4Element{0, false}) == m);

  Grid<float> r = m;
  for (int i = 0; i < 4; ++i) r = d4_transform(r, D4Element{1, false});
  CHECK(r == m);

  Grid<float> f = d4_transform(d4_transform(m, D4Element{0, true}), D4Element{0, true});
  CHECK(f == m);
}

TEST_CASE("d4: group action law holds for all 64 ordered pairs") {
  Rng rng(3);
  Grid<float> m(8, 8);
  for (auto& x : m.raw()) x = (float)rng.uniform();

  for (const D4Element& a : D4Element::all()) {
    for (const D4Element& b : D4Element::all()) {
      Grid<float> lhs = d4_transform(d4_transform(m, b), a);
      Grid<float> rhs = d4_transform(m, d4_compose(a, b));
      CHECK(lhs == rhs);
    }
  }
}

TEST_CASE("d4: inverse undoes the transform; non-square rejected") {
  Rng rng(17);
  Grid<float> m(5, 5);
  for (auto& x : m.raw()) x = (float)rng.uniform();
  for (const D4Element& g : D4Element::all()) {
    CHECK(d4_transform(d4_transform(m, g), d4_inverse(g)) == m);
    CHECK(d4_compose(g, d4_inverse(g)) == D4Element{0, false});
    CHECK(d4_compose(d4_inverse(g), g) == D4Element{0, false});
  }

  Grid<float> rect(3, 4);
  CHECK_THROWS_AS(d4_transform(rect, D4Element{1, false}), shape_error);
}

TEST_CASE("generator: label bookkeeping and cell domain") {
  Dataset ds = generate_synthetic(single_pattern(32, labels_of({Defect::Center}), 10), 7);
  CHECK(ds.maps.size() == 10);
  for (const WaferMap& map : ds.maps) {
    CHECK(map.labels.mask() == 0b00000001);
    CHECK(map.height() == 32);
    CHECK(map.width() == 32);
    bool domain_ok = true, off_matches_disk = true;
    for (int r = 0; r < 32; ++r)
      for (int c = 0; c < 32; ++c) {
        domain_ok &= map.cells(r, c) <= kCellDefect;
        off_matches_disk &= (map.cells(r, c) == kCellOffWafer) == !on_wafer(32, r, c);
      }
    CHECK(domain_ok);
    CHECK(off_matches_disk);
  }

  Dataset mixed = generate_synthetic(
      single_pattern(32, labels_of({Defect::Center, Defect::Scratch}), 5), 1);
  CHECK(mixed.maps.size() == 5);
  for (const WaferMap& map : mixed.maps) {
    CHECK(map.labels == labels_of({Defect::Center, Defect::Scratch}));
  }

  Dataset normal = generate_synthetic(single_pattern(32, DefectLabelSet{}, 3), 2);
  for (const WaferMap& map : normal.maps) {
    CHECK(map.labels.empty());
    for (auto cell : map.cells.raw()) CHECK(cell != kCellDefect);
  }
}

TEST_CASE("generator: deterministic per (spec, seed)") {
  GeneratorSpec spec = single_pattern(32, labels_of({Defect::Donut}), 4);
  spec.patterns.push_back({labels_of({Defect::Scratch}), 4});
  spec.noise_rate = 0.02;

  Dataset a = generate_synthetic(spec, 99);
  Dataset b = generate_synthetic(spec, 99);
  REQUIRE(a.maps.size() == b.maps.size());
  for (std::size_t i = 0; i < a.maps.size(); ++i) CHECK(a.maps[i] == b.maps[i]);

  Dataset c = generate_synthetic(spec, 100);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.maps.size(); ++i) any_diff |= !(a.maps[i] == c.maps[i]);
  CHECK(any_diff);
}

TEST_CASE("generator: salt noise flips the configured fraction") {
  GeneratorSpec spec = single_pattern(32, DefectLabelSet{}, 1);
  spec.noise_rate = 0.05;
  Dataset ds = generate_synthetic(spec, 21);

  int wafer = 0;
  for (int r = 0; r < 32; ++r)
    for (int c = 0; c < 32; ++c) wafer += on_wafer(32, r, c);

  int defects = 0;
  for (auto cell : ds.maps[0].cells.raw()) defects += (cell == kCellDefect);
  CHECK(defects == (int)std::lround(0.05 * wafer));
}

TEST_CASE("generator: near-full coverage honors its floor") {
  Dataset ds = generate_synthetic(single_pattern(32, labels_of({Defect::NearFull}), 3), 5);
  int wafer = 0;
  for (int r = 0; r < 32; ++r)
    for (int c = 0; c < 32; ++c) wafer += on_wafer(32, r, c);
  for (const WaferMap& map : ds.maps) {
    int defects = 0;
    for (auto cell : map.cells.raw()) defects += (cell == kCellDefect);
    CHECK((double)defects / wafer >= 0.89);  // floor 0.90 minus rounding slack
  }
}

TEST_CASE("generator: input validation") {
  CHECK_THROWS_AS(generate_synthetic(single_pattern(15, DefectLabelSet{}, 1), 0), config_error);
  CHECK_THROWS_AS(generate_synthetic(single_pattern(17, DefectLabelSet{}, 1), 0), config_error);
  CHECK_THROWS_AS(generate_synthetic(single_pattern(14, DefectLabelSet{}, 1), 0), config_error);

  GeneratorSpec neg = single_pattern(32, DefectLabelSet{}, -1);
  CHECK_THROWS_AS(generate_synthetic(neg, 0), config_error);

  GeneratorSpec noisy = single_pattern(32, DefectLabelSet{}, 1);
  noisy.noise_rate = 0.11;
  CHECK_THROWS_AS(generate_synthetic(noisy, 0), config_error);
  noisy.noise_rate = -0.01;
  CHECK_THROWS_AS(generate_synthetic(noisy, 0), config_error);
}

TEST_CASE("generator: class means separate between center and donut") {
  GeneratorSpec spec;
  spec.size = 32;
  spec.patterns.push_back({labels_of({Defect::Center}), 100});
  spec.patterns.push_back({labels_of({Defect::Donut}), 100});
  spec.noise_rate = 0.02;
  Dataset ds = generate_synthetic(spec, 3);
  REQUIRE(ds.maps.size() == 200);

  const std::size_t cells = 32 * 32;
  auto indicator = [&](const WaferMap& m, std::size_t i) {
    return m.cells.raw()[i] == kCellDefect ? 1.0 : 0.0;
  };
  std::vector<double> mean_center(cells, 0.0), mean_donut(cells, 0.0);
  for (int i = 0; i < 100; ++i)
    for (std::size_t p = 0; p < cells; ++p) {
      mean_center[p] += indicator(ds.maps[(std::size_t)i], p) / 100.0;
      mean_donut[p] += indicator(ds.maps[(std::size_t)(100 + i)], p) / 100.0;
    }

  double between = 0.0;
  for (std::size_t p = 0; p < cells; ++p) between += std::abs(mean_center[p] - mean_donut[p]);

  auto within = [&](std::size_t base, const std::vector<double>& mean) {
    double acc = 0.0;
    for (std::size_t i = 0; i < 100; ++i)
      for (std::size_t p = 0; p < cells; ++p)
        acc += std::abs(indicator(ds.maps[base + i], p) - mean[p]);
    return acc / 100.0;
  };

  CHECK(between > within(0, mean_center));
  CHECK(between > within(100, mean_donut));
}

TEST_CASE("gaussian taps: normalized, symmetric, validated") {
  auto taps = gaussian_taps(5, 1.0);
  REQUIRE(taps.size() == 5);
  double sum = 0.0;
  for (double t : taps) sum += t;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(taps[0] == doctest::Approx(taps[4]).epsilon(1e-15));
  CHECK(taps[1] == doctest::Approx(taps[3]).epsilon(1e-15));

  // Hand-computed: raw weights e^{-x^2/2} for x = -2..2.
  const double raw_sum = 1.0 + 2.0 * std::exp(-0.5) + 2.0 * std::exp(-2.0);
  CHECK(taps[2] == doctest::Approx(1.0 / raw_sum).epsilon(1e-12));
  CHECK(taps[1] == doctest::Approx(std::exp(-0.5) / raw_sum).epsilon(1e-12));
  CHECK(taps[0] == doctest::Approx(std::exp(-2.0) / raw_sum).epsilon(1e-12));

  CHECK_THROWS_AS(gaussian_taps(4, 1.0), config_error);
  CHECK_THROWS_AS(gaussian_taps(-3, 1.0), config_error);
  CHECK_THROWS_AS(gaussian_taps(5, 0.0), config_error);
}

TEST_CASE("normalize_and_mask: zero map stays zero") {
  WaferMap map;
  map.cells = Grid<std::uint8_t>(16, 16, kCellOffWafer);
  ImageTensor img = normalize_and_mask(map, MaskBlurConfig{});
  for (float v : img.raw()) CHECK(v == 0.0f);
}

TEST_CASE("normalize_and_mask: unblurred all-defect map is the inscribed disk") {
  WaferMap map;
  map.cells = Grid<std::uint8_t>(32, 32, kCellDefect);
  MaskBlurConfig cfg;
  cfg.blur_kernel = 0;
  cfg.edge_margin = 0;
  ImageTensor img = normalize_and_mask(map, cfg);
  for (int r = 0; r < 32; ++r)
    for (int c = 0; c < 32; ++c) {
      CHECK(img(r, c) == (on_wafer(32, r, c) ? 1.0f : 0.0f));
    }
}

TEST_CASE("normalize_and_mask: single die blurs to value x center tap squared") {
  const double raw_sum = 1.0 + 2.0 * std::exp(-0.5) + 2.0 * std::exp(-2.0);
  const double w0 = 1.0 / raw_sum;

  for (std::uint8_t cell : {kCellNormal, kCellDefect}) {
    WaferMap map;
    map.cells = Grid<std::uint8_t>(9, 9, kCellOffWafer);
    map.cells(4, 4) = cell;
    MaskBlurConfig cfg;
    cfg.edge_margin = 0;
    ImageTensor img = normalize_and_mask(map, cfg);
    const double scaled = cell * 0.5;
    CHECK(img(4, 4) == doctest::Approx(scaled * w0 * w0).epsilon(1e-6));
  }
}

TEST_CASE("normalize_and_mask: output bounded in [0,1] on noisy input") {
  GeneratorSpec spec = single_pattern(32, labels_of({Defect::NearFull, Defect::Random}), 8);
  spec.noise_rate = 0.1;
  Dataset ds = generate_synthetic(spec, 13);
  for (const WaferMap& map : ds.maps) {
    ImageTensor img = normalize_and_mask(map, MaskBlurConfig{});
    for (float v : img.raw()) {
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
    }
  }
}

TEST_CASE("resize: identity, block upscale, value-set preservation") {
  Rng rng(31);
  ImageTensor img(32, 32);
  for (auto& x : img.raw()) x = (float)rng.uniform();
  CHECK(resize_nearest(img, 32) == img);

  ImageTensor tiny(2, 2);
  tiny(0, 0) = 0.1f;
  tiny(0, 1) = 0.2f;
  tiny(1, 0) = 0.3f;
  tiny(1, 1) = 0.4f;
  ImageTensor up = resize_nearest(tiny, 8);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) CHECK(up(r, c) == tiny(r / 4, c / 4));

  CHECK_THROWS_AS(resize_nearest(img, 7), config_error);
}

TEST_CASE("resize: 52x52 map keeps the discrete value set before blur") {
  Dataset ds = generate_synthetic(single_pattern(52, labels_of({Defect::EdgeRing}), 1), 4);
  MaskBlurConfig cfg;
  cfg.blur_kernel = 0;
  ImageTensor native = normalize_and_mask(ds.maps[0], cfg);
  ImageTensor resized = resize_nearest(native, 128);
  for (float v : resized.raw()) {
    CHECK((v == 0.0f || v == 0.5f || v == 1.0f));
  }
}

TEST_CASE("preprocess_dataset: matches per-map path and ignores worker count") {
  GeneratorSpec spec = single_pattern(20, labels_of({Defect::Loc}), 6);
  Dataset ds = generate_synthetic(spec, 8);
  ImageConfig cfg;
  cfg.target_size = 16;

  std::vector<ImageTensor> serial;
  for (const WaferMap& map : ds.maps) serial.push_back(preprocess_map(map, cfg));

  setenv("DECOR_THREADS", "3", 1);
  std::vector<ImageTensor> parallel = preprocess_dataset(ds, cfg);
  setenv("DECOR_THREADS", "1", 1);
  std::vector<ImageTensor> single = preprocess_dataset(ds, cfg);
  unsetenv("DECOR_THREADS");

  REQUIRE(parallel.size() == serial.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(parallel[i] == serial[i]);
    CHECK(single[i] == serial[i]);
  }
}

TEST_CASE("split: single-label dataset lands exactly on the fraction") {
  Dataset ds = generate_synthetic(single_pattern(16, labels_of({Defect::Center}), 10), 6);
  auto [train, test] = multilabel_stratified_split(ds, 0.2, 42);
  CHECK(train.maps.size() == 8);
  CHECK(test.maps.size() == 2);
}

TEST_CASE("split: all-normal dataset halves evenly") {
  Dataset ds = generate_synthetic(single_pattern(16, DefectLabelSet{}, 10), 6);
  auto [train, test] = multilabel_stratified_split(ds, 0.5, 3);
  CHECK(train.maps.size() == 5);
  CHECK(test.maps.size() == 5);
}

TEST_CASE("split: mixed three-label set keeps every label within one example of 25%") {
  std::vector<DefectLabelSet> labels;
  for (int i = 0; i < 15; ++i) labels.push_back(labels_of({Defect::Center}));
  for (int i = 0; i < 15; ++i) labels.push_back(labels_of({Defect::Donut}));
  for (int i = 0; i < 15; ++i) labels.push_back(labels_of({Defect::Center, Defect::Donut}));
  for (int i = 0; i < 15; ++i) labels.push_back(labels_of({Defect::Scratch}));

  auto [train_idx, test_idx] = stratified_split_indices(labels, 0.25, 12);

  // Partition check.
  std::vector<bool> seen(labels.size(), false);
  for (std::size_t i : train_idx) seen[i] = true;
  for (std::size_t i : test_idx) {
    CHECK(!seen[i]);
    seen[i] = true;
  }
  for (bool s : seen) CHECK(s);

  for (Defect d : {Defect::Center, Defect::Donut, Defect::Scratch}) {
    double total = 0, in_test = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) total += labels[i].has(d);
    for (std::size_t i : test_idx) in_test += labels[i].has(d);
    CHECK(std::abs(in_test - 0.25 * total) <= 1.0);
  }
}

TEST_CASE("split: randomized multi-label trials stay within one example per label") {
  Rng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 20 + rng.below(120);
    std::vector<DefectLabelSet> labels(n);
    for (auto& ls : labels) {
      int k = (int)rng.below(3);  // 0..2 labels per example
      for (int j = 0; j < k; ++j) ls.add((Defect)rng.below(8));
    }
    const double fraction = rng.uniform(0.15, 0.5);
    auto [train_idx, test_idx] = stratified_split_indices(labels, fraction, rng.next_u64());
    CHECK(train_idx.size() + test_idx.size() == n);

    for (int d = 0; d < kDefectTypeCount; ++d) {
      double total = 0, in_test = 0;
      for (std::size_t i = 0; i < n; ++i) total += labels[i].has((Defect)d);
      for (std::size_t i : test_idx) in_test += labels[i].has((Defect)d);
      if (total == 0) continue;
      CHECK(std::abs(in_test - fraction * total) <= 1.0);
    }
  }
}

TEST_CASE("split: deterministic per seed; bad fractions rejected") {
  Dataset ds = generate_synthetic(single_pattern(16, labels_of({Defect::Loc}), 30), 1);
  auto [a_train, a_test] = multilabel_stratified_split(ds, 0.3, 77);
  auto [b_train, b_test] = multilabel_stratified_split(ds, 0.3, 77);
  CHECK(a_train.maps == b_train.maps);
  CHECK(a_test.maps == b_test.maps);

  CHECK_THROWS_AS(multilabel_stratified_split(ds, 0.0, 0), config_error);
  CHECK_THROWS_AS(multilabel_stratified_split(ds, 1.0, 0), config_error);
  CHECK_THROWS_AS(multilabel_stratified_split(ds, -0.2, 0), config_error);
  CHECK_THROWS_AS(multilabel_stratified_split(ds, 1.2, 0), config_error);

  Dataset empty;
  CHECK_THROWS_AS(multilabel_stratified_split(empty, 0.5, 0), config_error);
}

TEST_CASE("dataset io: round-trips bit-exactly") {
  const fs::path path = temp_file("roundtrip.wfr");

  Dataset empty;
  write_dataset(empty, path);
  Dataset back = read_dataset(path);
  CHECK(back.maps.empty());

  GeneratorSpec spec = single_pattern(20, labels_of({Defect::Center, Defect::Random}), 7);
  spec.noise_rate = 0.03;
  Dataset ds = generate_synthetic(spec, 44);
  write_dataset(ds, path);
  Dataset loaded = read_dataset(path);
  REQUIRE(loaded.maps.size() == ds.maps.size());
  for (std::size_t i = 0; i < ds.maps.size(); ++i) CHECK(loaded.maps[i] == ds.maps[i]);

  fs::remove(path);
}

TEST_CASE("dataset io: corrupted magic is a format error at offset zero") {
  const fs::path path = temp_file("badmagic.wfr");
  Dataset ds = generate_synthetic(single_pattern(16, DefectLabelSet{}, 1), 0);
  write_dataset(ds, path);

  // Flip one magic byte.
  std::vector<std::uint8_t> raw = read_file_bytes(path);
  raw[0] ^= 0xFF;
  write_file_bytes(path, raw);

  try {
    read_dataset(path);
    FAIL("expected format_error");
  } catch (const format_error& e) {
    CHECK(e.offset == 0);
    CHECK(std::string(e.what()).find("byte offset 0") != std::string::npos);
  }
  fs::remove(path);
}

TEST_CASE("dataset io: truncation and bad cell values carry offsets") {
  const fs::path path = temp_file("broken.wfr");
  Dataset ds = generate_synthetic(single_pattern(16, DefectLabelSet{}, 2), 0);
  write_dataset(ds, path);

  std::vector<std::uint8_t> raw = read_file_bytes(path);
  std::vector<std::uint8_t> cut(raw.begin(), raw.end() - 5);
  write_file_bytes(path, cut);
  try {
    read_dataset(path);
    FAIL("expected format_error");
  } catch (const format_error& e) {
    CHECK(e.offset <= cut.size());
    CHECK(std::string(e.what()).find("truncated") != std::string::npos);
  }

  // Hand-build a file whose third cell value is 9.
  ByteWriter w;
  w.magic("WFR1");
  w.u32(1);
  w.u16(4);
  w.u16(4);
  w.u8(0);
  for (int i = 0; i < 16; ++i) w.u8(i == 2 ? 9 : 1);
  write_file_bytes(path, w.data());
  try {
    read_dataset(path);
    FAIL("expected format_error");
  } catch (const format_error& e) {
    CHECK(e.offset == 12 + 1 + 2);
  }

  // Trailing garbage is rejected too.
  write_dataset(ds, path);
  raw = read_file_bytes(path);
  raw.push_back(0);
  write_file_bytes(path, raw);
  CHECK_THROWS_AS(read_dataset(path), format_error);

  fs::remove(path);
}

TEST_CASE("dataset io: mixed shapes rejected on write") {
  Dataset ds;
  WaferMap a, b;
  a.cells = Grid<std::uint8_t>(8, 8, kCellNormal);
  b.cells = Grid<std::uint8_t>(10, 10, kCellNormal);
  ds.maps = {a, b};
  CHECK_THROWS_AS(write_dataset(ds, temp_file("mixed.wfr")), shape_error);
}

TEST_CASE("sha256: known answers and incremental equivalence") {
  CHECK(sha256_hex(std::string{}) ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex(std::string{"abc"}) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex(std::string{"The quick brown fox jumps over the lazy dog"}) ==
        "d7a8fbb307d7809469ca9abcb0082e4f8d5651e46d3cdb762d02d0bf37c9e592");

  std::string blob;
  for (int i = 0; i < 1000; ++i) blob.push_back((char)('a' + i % 26));
  Sha256 inc;
  std::size_t at = 0;
  for (std::size_t chunk : {1u, 63u, 64u, 65u, 500u, 307u}) {
    std::size_t take = std::min(chunk, blob.size() - at);
    inc.update(blob.data() + at, take);
    at += take;
  }
  REQUIRE(at == blob.size());
  CHECK(inc.hex_digest() == sha256_hex(blob));

  const fs::path path = temp_file("hash.bin");
  write_file_text(path, blob);
  CHECK(sha256_file_hex(path) == sha256_hex(blob));
  fs::remove(path);
}
