#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "decor/bytes.hpp"
#include "decor/common.hpp"
#include "decor/outlier.hpp"
#include "doctest.h"

namespace fs = std::filesystem;
using namespace decor;

namespace {

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / ("decor_test_" + name);
}

Eigen::MatrixXd gaussian_cloud(int n, int d, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, scale);
  Eigen::MatrixXd x(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = normal(gen);
  return x;
}

// Independent normalizer built from the exact harmonic number rather than the
// ln + gamma approximation the library uses; close enough for rank checks.
double exact_path_normalizer(int n) {
  if (n < 2) return 0.0;
  double h = 0.0;
  for (int i = 1; i < n; ++i) h += 1.0 / i;
  return 2.0 * h - 2.0 * (n - 1.0) / n;
}

// Brute-force isolation forest oracle: fully grown trees (no depth cap) on
// the whole dataset, its own RNG, scores from first principles.
std::vector<double> brute_force_if(const Eigen::MatrixXd& x, int trees, std::uint64_t seed) {
  const int n = (int)x.rows(), d = (int)x.cols();
  std::mt19937_64 gen(seed);
  std::vector<double> path_sum((std::size_t)n, 0.0);
  std::function<void(std::vector<int>, int)> grow = [&](std::vector<int> idx, int depth) {
    if (idx.size() < 2) {
      for (int i : idx) path_sum[(std::size_t)i] += depth;
      return;
    }
    std::vector<int> feats;
    std::vector<double> los((std::size_t)d), his((std::size_t)d);
    for (int f = 0; f < d; ++f) {
      double lo = x(idx[0], f), hi = lo;
      for (int i : idx) {
        lo = std::min(lo, x(i, f));
        hi = std::max(hi, x(i, f));
      }
      los[(std::size_t)f] = lo;
      his[(std::size_t)f] = hi;
      if (hi > lo) feats.push_back(f);
    }
    if (feats.empty()) {
      const double tail = exact_path_normalizer((int)idx.size());
      for (int i : idx) path_sum[(std::size_t)i] += depth + tail;
      return;
    }
    const int f = feats[std::uniform_int_distribution<std::size_t>(0, feats.size() - 1)(gen)];
    const double s =
        std::uniform_real_distribution<double>(los[(std::size_t)f], his[(std::size_t)f])(gen);
    std::vector<int> left, right;
    for (int i : idx) (x(i, f) < s ? left : right).push_back(i);
    grow(std::move(left), depth + 1);
    grow(std::move(right), depth + 1);
  };
  std::vector<int> all((std::size_t)n);
  std::iota(all.begin(), all.end(), 0);
  for (int t = 0; t < trees; ++t) grow(all, 0);
  const double norm = exact_path_normalizer(n);
  std::vector<double> out((std::size_t)n);
  for (int i = 0; i < n; ++i)
    out[(std::size_t)i] = std::pow(2.0, -(path_sum[(std::size_t)i] / trees) / norm);
  return out;
}

// Textbook LOF, written independently: full pairwise-distance sort per point.
std::vector<double> brute_force_lof(const Eigen::MatrixXd& x, int k) {
  const int n = (int)x.rows();
  Eigen::MatrixXd dist(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) dist(a, b) = (x.row(a) - x.row(b)).norm();
  std::vector<double> kdist((std::size_t)n);
  std::vector<std::vector<int>> nbrs((std::size_t)n);
  for (int a = 0; a < n; ++a) {
    std::vector<double> ds;
    for (int b = 0; b < n; ++b)
      if (b != a) ds.push_back(dist(a, b));
    std::sort(ds.begin(), ds.end());
    kdist[(std::size_t)a] = ds[(std::size_t)(k - 1)];
    for (int b = 0; b < n; ++b)
      if (b != a && dist(a, b) <= kdist[(std::size_t)a]) nbrs[(std::size_t)a].push_back(b);
  }
  std::vector<double> lrd((std::size_t)n);
  for (int a = 0; a < n; ++a) {
    double sum = 0.0;
    for (int b : nbrs[(std::size_t)a]) sum += std::max(kdist[(std::size_t)b], dist(a, b));
    const double mean = sum / (double)nbrs[(std::size_t)a].size();
    lrd[(std::size_t)a] = mean > 0.0 ? 1.0 / mean : 1e10;
  }
  std::vector<double> out((std::size_t)n);
  for (int a = 0; a < n; ++a) {
    double sum = 0.0;
    for (int b : nbrs[(std::size_t)a]) sum += lrd[(std::size_t)b];
    out[(std::size_t)a] = sum / ((double)nbrs[(std::size_t)a].size() * lrd[(std::size_t)a]);
  }
  return out;
}

// One cluster of inliers around the origin plus five planted points at
// radius 10 along coordinate axes; generic fixture for I/O and rule tests.
Eigen::MatrixXd planted_cloud(int inliers, int d, std::uint64_t seed) {
  Eigen::MatrixXd x(inliers + 5, d);
  x.topRows(inliers) = gaussian_cloud(inliers, d, seed);
  x.bottomRows(5).setZero();
  x(inliers + 0, 0) = 10.0;
  x(inliers + 1, 0) = -10.0;
  x(inliers + 2, 1) = 10.0;
  x(inliers + 3, 1) = -10.0;
  x(inliers + 4, 2) = 10.0;
  return x;
}

// Detection fixture: 8-d inliers plus five planted points at radius 10, each
// spread over a distinct axis triple. Concentrating the displacement on one
// axis would leave a point dead-center on the seven others, where the
// depth-capped forest rarely finds the separating split; three axes give
// every planted point several isolating features.
Eigen::MatrixXd planted_radius10_8d(std::uint64_t seed) {
  Eigen::MatrixXd x(205, 8);
  x.topRows(200) = gaussian_cloud(200, 8, seed);
  x.bottomRows(5).setZero();
  const double a = 10.0 / std::sqrt(3.0);
  const int triples[5][3] = {{0, 1, 2}, {3, 4, 5}, {5, 6, 7}, {0, 3, 6}, {1, 4, 7}};
  for (int p = 0; p < 5; ++p)
    for (int j = 0; j < 3; ++j) x(200 + p, triples[p][j]) = a;
  return x;
}

int count_true(const std::vector<bool>& v) { return (int)std::count(v.begin(), v.end(), true); }

}  // namespace

TEST_CASE("robust cut matches hand-worked medians") {
  // median 3, deviations {2,1,0,1,97} -> MAD 1, cut = 3 + 3*1.
  CHECK(robust_cut({1.0, 2.0, 3.0, 4.0, 100.0}, 3.0) == doctest::Approx(6.0).epsilon(1e-15));
  // Even length: median 2.5, deviations {1.5,0.5,0.5,1.5} -> MAD 1.
  CHECK(robust_cut({1.0, 2.0, 3.0, 4.0}, 2.0) == doctest::Approx(4.5).epsilon(1e-15));
  CHECK(robust_cut({7.5, 7.5, 7.5}, 3.0) == doctest::Approx(7.5).epsilon(1e-15));
  CHECK(robust_cut({42.0}, 0.0) == doctest::Approx(42.0).epsilon(1e-15));
}

TEST_CASE("robust cut is translation and positive-scale equivariant") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::vector<double> s(31);
  for (double& v : s) v = u(gen);
  const double base = robust_cut(s, 3.0);
  std::vector<double> shifted = s, scaled = s;
  for (double& v : shifted) v += 2.75;
  for (double& v : scaled) v *= 1.8;
  CHECK(robust_cut(shifted, 3.0) == doctest::Approx(base + 2.75).epsilon(1e-12));
  CHECK(robust_cut(scaled, 3.0) == doctest::Approx(base * 1.8).epsilon(1e-12));
}

TEST_CASE("robust cut rejects empty input") {
  CHECK_THROWS_AS(robust_cut({}, 3.0), config_error);
}

TEST_CASE("adaptive LOF neighborhood tracks sqrt(N) within bounds") {
  CHECK(adaptive_k(100) == 10);
  CHECK(adaptive_k(10000) == 50);
  CHECK(adaptive_k(25) == 10);
  CHECK(adaptive_k(400) == 20);
  CHECK(adaptive_k(2025) == 45);
  // The N - 1 cap binds when the lower bound exceeds the sample count.
  CHECK(adaptive_k(5) == 4);
  CHECK(adaptive_k(2) == 1);
  for (int n = 2; n < 300; n += 7) {
    const int k = adaptive_k(n);
    CHECK(k >= 1);
    CHECK(k <= n - 1);
    CHECK(k <= 50);
  }
}

TEST_CASE("adaptive LOF neighborhood rejects bad parameters") {
  CHECK_THROWS_AS(adaptive_k(1), config_error);
  CHECK_THROWS_AS(adaptive_k(100, 0, 50), config_error);
  CHECK_THROWS_AS(adaptive_k(100, 20, 10), config_error);
}

TEST_CASE("average path length matches its closed form") {
  constexpr double gamma = 0.57721566490153286;
  CHECK(average_path_length(0) == 0.0);
  CHECK(average_path_length(1) == 0.0);
  CHECK(average_path_length(2) == doctest::Approx(2.0 * gamma - 1.0).epsilon(1e-15));
  for (int n : {3, 16, 256, 4096}) {
    const double expected = 2.0 * (std::log(n - 1.0) + gamma) - 2.0 * (n - 1.0) / n;
    CHECK(average_path_length(n) == doctest::Approx(expected).epsilon(1e-15));
  }
}

TEST_CASE("isolation forest on identical points scores everyone 0.5") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Constant(40, 3, 2.5);
  const auto model = fit_isolation_forest(x, 25, 256, 9);
  const auto scores = if_scores(model, x);
  // Every tree collapses to a zero-spread root leaf, so E[h] = c(psi) and
  // the score lands exactly on the 0.5 midpoint.
  for (double s : scores) CHECK(s == doctest::Approx(0.5).epsilon(1e-15));
  for (const auto& tree : model.trees) {
    CHECK(tree.nodes.size() == 1);
    CHECK(tree.max_depth() == 0);
  }
}

TEST_CASE("isolation trees respect the depth cap and score range") {
  const Eigen::MatrixXd x = gaussian_cloud(300, 4, 21);
  const auto model = fit_isolation_forest(x, 50, 128, 3);
  CHECK(model.subsample == 128);
  const int cap = (int)std::ceil(std::log2(128.0));
  for (const auto& tree : model.trees) CHECK(tree.max_depth() <= cap);
  const auto scores = if_scores(model, x);
  for (double s : scores) {
    CHECK(s > 0.0);
    CHECK(s < 1.0);
  }
}

TEST_CASE("isolation forest agrees with a brute-force forest on a planted point") {
  Eigen::MatrixXd x(201, 2);
  x.topRows(200) = gaussian_cloud(200, 2, 5);
  x(200, 0) = 10.0;
  x(200, 1) = 10.0;

  const auto model = fit_isolation_forest(x, 100, 256, 17);
  const auto scores = if_scores(model, x);
  const auto brute = brute_force_if(x, 1000, 99);

  const auto argmax = [](const std::vector<double>& v) {
    return (int)(std::max_element(v.begin(), v.end()) - v.begin());
  };
  CHECK(argmax(scores) == 200);
  CHECK(argmax(brute) == 200);
  CHECK(scores[200] > 0.6);
  // The planted point separates cleanly from the bulk in both forests.
  double second = 0.0;
  for (int i = 0; i < 200; ++i) second = std::max(second, brute[(std::size_t)i]);
  CHECK(brute[200] > second + 0.05);
}

TEST_CASE("isolation forest is deterministic in its seed") {
  const Eigen::MatrixXd x = gaussian_cloud(120, 3, 31);
  const auto a = if_scores(fit_isolation_forest(x, 40, 64, 77), x);
  const auto b = if_scores(fit_isolation_forest(x, 40, 64, 77), x);
  const auto c = if_scores(fit_isolation_forest(x, 40, 64, 78), x);
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("isolation forest rejects bad parameters") {
  const Eigen::MatrixXd x = gaussian_cloud(10, 2, 1);
  CHECK_THROWS_AS(fit_isolation_forest(x, 0, 256, 0), config_error);
  CHECK_THROWS_AS(fit_isolation_forest(x, 10, 1, 0), config_error);
  CHECK_THROWS_AS(fit_isolation_forest(Eigen::MatrixXd::Zero(1, 2), 10, 256, 0), config_error);
  CHECK_THROWS_AS(if_scores(IsolationForestModel{}, x), config_error);
}

TEST_CASE("LOF matches a brute-force implementation") {
  const Eigen::MatrixXd x = gaussian_cloud(60, 3, 13);
  const auto fast = lof_scores(x, 7);
  const auto slow = brute_force_lof(x, 7);
  REQUIRE(fast.size() == slow.size());
  for (std::size_t i = 0; i < fast.size(); ++i)
    CHECK(fast[i] == doctest::Approx(slow[i]).epsilon(1e-12));
}

TEST_CASE("LOF sits near one inside a uniform grid") {
  Eigen::MatrixXd x(100, 2);
  for (int r = 0; r < 10; ++r)
    for (int c = 0; c < 10; ++c) {
      x(r * 10 + c, 0) = (double)r;
      x(r * 10 + c, 1) = (double)c;
    }
  const auto scores = lof_scores(x, adaptive_k(100));
  for (int r = 2; r < 8; ++r)
    for (int c = 2; c < 8; ++c) {
      CHECK(scores[(std::size_t)(r * 10 + c)] > 0.9);
      CHECK(scores[(std::size_t)(r * 10 + c)] < 1.1);
    }
}

TEST_CASE("LOF flags a far point against a tight blob") {
  Eigen::MatrixXd x(51, 2);
  x.topRows(50) = gaussian_cloud(50, 2, 3, 0.1);
  x(50, 0) = 10.0;
  x(50, 1) = 10.0;
  const auto scores = lof_scores(x, 10);
  CHECK(scores[50] > 2.0);
  const double top = *std::max_element(scores.begin(), scores.end() - 1);
  CHECK(scores[50] > top);
}

TEST_CASE("LOF of identical points is exactly one") {
  const Eigen::MatrixXd x = Eigen::MatrixXd::Constant(12, 4, -1.25);
  for (double s : lof_scores(x, 5)) CHECK(s == 1.0);
}

TEST_CASE("LOF rejects out-of-range neighborhoods") {
  const Eigen::MatrixXd x = gaussian_cloud(10, 2, 2);
  CHECK_NOTHROW(lof_scores(x, 9));
  CHECK_THROWS_AS(lof_scores(x, 0), config_error);
  CHECK_THROWS_AS(lof_scores(x, 10), config_error);
  CHECK_THROWS_AS(lof_scores(Eigen::MatrixXd::Zero(1, 2), 1), config_error);
}

TEST_CASE("outlier config validation") {
  OutlierConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  auto bad = cfg;
  bad.trees = 0;
  CHECK_THROWS_AS(bad.validate(), config_error);
  bad = cfg;
  bad.subsample = 1;
  CHECK_THROWS_AS(bad.validate(), config_error);
  bad = cfg;
  bad.k_cut = -0.5;
  CHECK_THROWS_AS(bad.validate(), config_error);
  bad = cfg;
  bad.hi_cont = 0.0;
  CHECK_THROWS_AS(bad.validate(), config_error);
  bad = cfg;
  bad.hi_cont = 1.5;
  CHECK_THROWS_AS(bad.validate(), config_error);
  bad = cfg;
  bad.min_k = 60;  // exceeds max_k
  CHECK_THROWS_AS(bad.validate(), config_error);
  bad = cfg;
  bad.min_cluster = 1;
  CHECK_THROWS_AS(bad.validate(), config_error);
}

TEST_CASE("detection finds planted outliers with few false positives") {
  const Eigen::MatrixXd z = planted_radius10_8d(20);
  const std::vector<int> labels((std::size_t)z.rows(), 0);
  OutlierConfig cfg;
  cfg.seed = 0;
  const OutlierReport report = detect_outliers(z, labels, cfg);

  REQUIRE(report.clusters.size() == 1);
  CHECK(report.skipped.empty());
  for (int planted = 200; planted < 205; ++planted)
    CHECK(std::count(report.flagged.begin(), report.flagged.end(), planted) == 1);
  // <= 2% false positives on 205 samples.
  CHECK((int)report.flagged.size() - 5 <= 4);

  const ClusterOutliers& c = report.clusters.front();
  CHECK(count_true(c.if_flags) <= 41);
  CHECK(std::is_sorted(report.flagged.begin(), report.flagged.end()));
  // Flag algebra: final = IF and LOF, O* = the final flags.
  int finals = 0;
  for (std::size_t i = 0; i < c.members.size(); ++i) {
    CHECK(bool(c.final_flags[i]) == (bool(c.if_flags[i]) && bool(c.lof_flags[i])));
    finals += c.final_flags[i];
  }
  CHECK((std::size_t)finals == report.flagged.size());
  CHECK(finals <= std::min(count_true(c.if_flags), count_true(c.lof_flags)));
}

TEST_CASE("contamination quota uses an exact ceiling") {
  // 0.2 * 205 = 41 exactly; float round-up to 42 would betray the guard.
  const Eigen::MatrixXd z = planted_cloud(200, 8, 7);
  const std::vector<int> labels((std::size_t)z.rows(), 0);
  OutlierConfig cfg;
  cfg.if_rule = OutlierConfig::IfRule::quantile_only;
  const OutlierReport report = detect_outliers(z, labels, cfg);
  REQUIRE(report.clusters.size() == 1);
  CHECK(count_true(report.clusters.front().if_flags) == 41);
}

TEST_CASE("IF flag rule variants compose as documented") {
  const Eigen::MatrixXd z = planted_cloud(200, 8, 7);
  const std::vector<int> labels((std::size_t)z.rows(), 0);
  OutlierConfig cfg;
  const auto both = detect_outliers(z, labels, cfg);
  cfg.if_rule = OutlierConfig::IfRule::quantile_only;
  const auto quant = detect_outliers(z, labels, cfg);
  cfg.if_rule = OutlierConfig::IfRule::cut_only;
  const auto cut = detect_outliers(z, labels, cfg);

  const auto& bf = both.clusters.front().if_flags;
  const auto& qf = quant.clusters.front().if_flags;
  const auto& cf = cut.clusters.front().if_flags;
  REQUIRE(bf.size() == qf.size());
  REQUIRE(bf.size() == cf.size());
  for (std::size_t i = 0; i < bf.size(); ++i) CHECK(bool(bf[i]) == (bool(qf[i]) && bool(cf[i])));
}

TEST_CASE("constant clusters produce no outliers") {
  Eigen::MatrixXd z(40, 3);
  z.topRows(20).setConstant(1.0);
  z.bottomRows(20).setConstant(-4.0);
  std::vector<int> labels(40, 0);
  std::fill(labels.begin() + 20, labels.end(), 1);
  const OutlierReport report = detect_outliers(z, labels);
  REQUIRE(report.clusters.size() == 2);
  CHECK(report.flagged.empty());
  for (const auto& c : report.clusters) {
    CHECK(count_true(c.final_flags) == 0);
    // Scores are flat, so the cut equals the score and strict > never fires.
    CHECK(count_true(c.lof_flags) == 0);
  }
}

TEST_CASE("small clusters are skipped with zero flags") {
  Eigen::MatrixXd z(38, 2);
  z.topRows(30) = gaussian_cloud(30, 2, 19);
  z.bottomRows(8) = gaussian_cloud(8, 2, 23).array() + 50.0;
  z(37, 0) = 500.0;  // extreme even within the small cluster
  std::vector<int> labels(38, 0);
  std::fill(labels.begin() + 30, labels.end(), 1);

  const OutlierReport report = detect_outliers(z, labels);
  REQUIRE(report.clusters.size() == 1);
  CHECK(report.clusters.front().cluster == 0);
  REQUIRE(report.skipped.size() == 1);
  CHECK(report.skipped.front() == std::pair<int, int>(1, 8));
  // Nothing from the skipped cluster reaches O*.
  for (int i : report.flagged) CHECK(i < 30);
}

TEST_CASE("detection is deterministic and order-independent per cluster") {
  const Eigen::MatrixXd z = planted_cloud(100, 4, 29);
  const std::vector<int> labels((std::size_t)z.rows(), 0);
  OutlierConfig cfg;
  cfg.seed = 5;
  const auto a = detect_outliers(z, labels, cfg);
  const auto b = detect_outliers(z, labels, cfg);
  REQUIRE(a.clusters.size() == b.clusters.size());
  for (std::size_t c = 0; c < a.clusters.size(); ++c) {
    CHECK(a.clusters[c].if_scores == b.clusters[c].if_scores);
    CHECK(a.clusters[c].lof_scores == b.clusters[c].lof_scores);
    CHECK(a.clusters[c].final_flags == b.clusters[c].final_flags);
    CHECK(a.clusters[c].if_cut == b.clusters[c].if_cut);
    CHECK(a.clusters[c].lof_cut == b.clusters[c].lof_cut);
  }
  CHECK(a.flagged == b.flagged);
  CHECK(a.skipped == b.skipped);
}

TEST_CASE("detection rejects malformed labels") {
  const Eigen::MatrixXd z = gaussian_cloud(20, 2, 1);
  CHECK_THROWS_AS(detect_outliers(z, std::vector<int>(19, 0)), shape_error);
  std::vector<int> labels(20, 0);
  labels[3] = -1;
  CHECK_THROWS_AS(detect_outliers(z, labels), shape_error);
}

TEST_CASE("outlier report round-trips through its text form") {
  Eigen::MatrixXd z(213, 8);
  z.topRows(205) = planted_cloud(200, 8, 7);
  z.bottomRows(8) = gaussian_cloud(8, 8, 41).array() + 30.0;
  std::vector<int> labels(213, 0);
  std::fill(labels.begin() + 205, labels.end(), 1);

  const OutlierReport report = detect_outliers(z, labels);
  const fs::path path = temp_file("outliers.txt");
  write_outlier_report(path, report);
  const OutlierReport loaded = read_outlier_report(path);

  REQUIRE(loaded.clusters.size() == report.clusters.size());
  for (std::size_t c = 0; c < report.clusters.size(); ++c) {
    const auto& orig = report.clusters[c];
    const auto& back = loaded.clusters[c];
    CHECK(back.cluster == orig.cluster);
    CHECK(back.members == orig.members);
    CHECK(back.if_scores == orig.if_scores);  // %.17g keeps doubles bit-exact
    CHECK(back.lof_scores == orig.lof_scores);
    CHECK(back.if_flags == orig.if_flags);
    CHECK(back.lof_flags == orig.lof_flags);
    CHECK(back.final_flags == orig.final_flags);
    CHECK(std::isnan(back.if_cut));
    CHECK(std::isnan(back.lof_cut));
  }
  CHECK(loaded.skipped == report.skipped);
  CHECK(loaded.flagged == report.flagged);
  fs::remove(path);
}

TEST_CASE("outlier report text is 1-based and globally ordered") {
  Eigen::MatrixXd z(23, 2);
  z.topRows(15) = gaussian_cloud(15, 2, 3);
  z.bottomRows(8) = gaussian_cloud(8, 2, 4);
  std::vector<int> labels(23, 1);
  std::fill(labels.begin() + 15, labels.end(), 0);  // cluster 0 is the small one

  const OutlierReport report = detect_outliers(z, labels);
  const fs::path path = temp_file("outliers_text.txt");
  write_outlier_report(path, report);
  const std::string text = read_file_text(path);
  fs::remove(path);

  CHECK(text.rfind("sample_index, cluster, if_score, lof_score, if_flag, lof_flag, final_flag\n",
                   0) == 0);
  // The first data row is global sample 1 in cluster 2 (both 1-based).
  CHECK(text.find("\n1, 2, ") != std::string::npos);
  // Rows only cover the processed cluster; the 8-member one lands in the footer.
  CHECK(text.find("skipped: 1 (8 members)\n") != std::string::npos);
  std::vector<long> samples;
  std::size_t pos = 0;
  for (int line = 0; pos < text.size(); ++line) {
    const std::size_t end = text.find('\n', pos);
    const std::string row = text.substr(pos, end - pos);
    pos = end + 1;
    if (line == 0 || row.rfind("skipped:", 0) == 0) continue;
    samples.push_back(std::stol(row.substr(0, row.find(','))));
  }
  CHECK(samples.size() == 15);
  CHECK(std::is_sorted(samples.begin(), samples.end()));
  CHECK(samples.front() == 1);
}

TEST_CASE("outlier report reader rejects malformed tables") {
  const fs::path path = temp_file("outliers_bad.txt");
  const std::string header =
      "sample_index, cluster, if_score, lof_score, if_flag, lof_flag, final_flag\n";
  const auto rejects = [&](const std::string& body) {
    write_file_text(path, body);
    CHECK_THROWS_AS(read_outlier_report(path), format_error);
  };
  rejects("");
  rejects("sample, cluster\n1, 1, 0.5, 1.0, 0, 0, 0\nskipped: none\n");
  rejects(header);  // no footer
  rejects(header + "1, 1, 0.5, 1.0, 0, 0, 0\n");
  rejects(header + "1, 1, 0.5, 1.0, 2, 0, 0\nskipped: none\n");   // flag not 0/1
  rejects(header + "1, 1, 0.5, 1.0, 0, 1, 1\nskipped: none\n");   // final != if && lof
  rejects(header + "1, 1, 0.5, 1.0, 1, 1, 0\nskipped: none\n");   // conjunction missed
  rejects(header + "2, 1, 0.5, 1.0, 0, 0, 0\n1, 1, 0.5, 1.0, 0, 0, 0\nskipped: none\n");
  rejects(header + "1, 1, 0.5, 1.0, 0, 0, 0\n1, 1, 0.5, 1.0, 0, 0, 0\nskipped: none\n");
  rejects(header + "0, 1, 0.5, 1.0, 0, 0, 0\nskipped: none\n");   // sample ids are 1-based
  rejects(header + "1, 0, 0.5, 1.0, 0, 0, 0\nskipped: none\n");   // cluster ids are 1-based
  rejects(header + "1, 1, 0.5, 1.0, 0, 0\nskipped: none\n");      // missing field
  rejects(header + "1, 1, 0.5, 1.0, 0, 0, 0, 9\nskipped: none\n");  // extra field
  rejects(header + "1, 1, oops, 1.0, 0, 0, 0\nskipped: none\n");
  rejects(header + "1, 1, 0.5, 1.0, 0, 0, 0\nskipped: 2\n");      // footer lacks member count
  rejects(header + "1, 1, 0.5, 1.0, 0, 0, 0\nskipped: x (3 members)\n");
  fs::remove(path);
}

TEST_CASE("outlier report reader accepts an all-skipped table") {
  const fs::path path = temp_file("outliers_skipped.txt");
  write_file_text(path,
                  "sample_index, cluster, if_score, lof_score, if_flag, lof_flag, final_flag\n"
                  "skipped: 1 (3 members), 4 (12 members)\n");
  const OutlierReport report = read_outlier_report(path);
  fs::remove(path);
  CHECK(report.clusters.empty());
  CHECK(report.flagged.empty());
  REQUIRE(report.skipped.size() == 2);
  CHECK(report.skipped[0] == std::pair<int, int>(0, 3));
  CHECK(report.skipped[1] == std::pair<int, int>(3, 12));
}
