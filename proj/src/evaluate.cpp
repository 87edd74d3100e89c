#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "decor/bytes.hpp"
#include "decor/cluster.hpp"
#include "decor/evaluate.hpp"
#include "decor/kv.hpp"
#include "decor/textio.hpp"

namespace decor {

ContingencyTable contingency(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size())
    throw shape_error("label vectors differ in length (" + std::to_string(a.size()) + " vs " +
                      std::to_string(b.size()) + ")");
  int rows = 0, cols = 0;
  for (int v : a) {
    if (v < 0) throw shape_error("labels must be non-negative");
    rows = std::max(rows, v + 1);
  }
  for (int v : b) {
    if (v < 0) throw shape_error("labels must be non-negative");
    cols = std::max(cols, v + 1);
  }
  ContingencyTable t;
  t.counts.assign((std::size_t)rows, std::vector<long>((std::size_t)cols, 0));
  t.row_sum.assign((std::size_t)rows, 0);
  t.col_sum.assign((std::size_t)cols, 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++t.counts[(std::size_t)a[i]][(std::size_t)b[i]];
    ++t.row_sum[(std::size_t)a[i]];
    ++t.col_sum[(std::size_t)b[i]];
    ++t.total;
  }
  return t;
}

namespace {

double entropy(const std::vector<long>& marginal, double n) {
  double h = 0.0;
  for (long c : marginal)
    if (c > 0) h -= ((double)c / n) * std::log((double)c / n);
  return h;
}

}  // namespace

double nmi(const std::vector<int>& a, const std::vector<int>& b, NmiNorm norm) {
  if (a.empty()) throw shape_error("NMI needs at least one sample");
  const ContingencyTable t = contingency(a, b);
  const double n = (double)t.total;
  const double ha = entropy(t.row_sum, n), hb = entropy(t.col_sum, n);
  double mi = 0.0;
  for (std::size_t i = 0; i < t.counts.size(); ++i)
    for (std::size_t j = 0; j < t.counts[i].size(); ++j)
      if (const long c = t.counts[i][j]; c > 0)
        mi += ((double)c / n) *
              std::log(n * (double)c / ((double)t.row_sum[i] * (double)t.col_sum[j]));

  double denom = 0.0;
  switch (norm) {
    case NmiNorm::arithmetic: denom = 0.5 * (ha + hb); break;
    case NmiNorm::min: denom = std::min(ha, hb); break;
    case NmiNorm::geometric: denom = std::sqrt(ha * hb); break;
    case NmiNorm::max: denom = std::max(ha, hb); break;
  }
  // Two constant labelings leave nothing to explain: perfect agreement by
  // convention. A zero normalizer with any entropy left means zero shared
  // information.
  if (denom <= 0.0) return ha == 0.0 && hb == 0.0 ? 1.0 : 0.0;
  return std::clamp(mi / denom, 0.0, 1.0);
}

double ari(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() < 2) throw shape_error("ARI needs at least two samples");
  const ContingencyTable t = contingency(a, b);
  const auto choose2 = [](double x) { return 0.5 * x * (x - 1.0); };
  double index = 0.0, sa = 0.0, sb = 0.0;
  for (const auto& row : t.counts)
    for (long c : row) index += choose2((double)c);
  for (long c : t.row_sum) sa += choose2((double)c);
  for (long c : t.col_sum) sb += choose2((double)c);
  const double expected = sa * sb / choose2((double)t.total);
  const double denom = 0.5 * (sa + sb) - expected;
  // The denominator vanishes only when both labelings are constant or both
  // are all-singletons — identical partitions either way.
  if (denom == 0.0) return 1.0;
  return (index - expected) / denom;
}

std::vector<int> dominant_label_reduction(const std::vector<DefectLabelSet>& labels,
                                          const std::vector<int>& clusters) {
  if (labels.size() != clusters.size())
    throw shape_error("label sets and cluster labels differ in length (" +
                      std::to_string(labels.size()) + " vs " + std::to_string(clusters.size()) +
                      ")");
  int k = 0;
  for (int c : clusters) {
    if (c < 0) throw shape_error("cluster labels must be non-negative");
    k = std::max(k, c + 1);
  }
  std::vector<std::array<long, kDefectTypeCount>> counts((std::size_t)k);
  for (auto& row : counts) row.fill(0);
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (int bit : labels[i].bits()) ++counts[(std::size_t)clusters[i]][(std::size_t)bit];

  std::vector<int> out(labels.size(), kNormalCategory);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].empty()) continue;  // normal wafers form their own category
    const auto& row = counts[(std::size_t)clusters[i]];
    int best = -1;
    long best_count = -1;
    for (int bit : labels[i].bits())  // ascending, so ties keep the lowest
      if (row[(std::size_t)bit] > best_count) {
        best = bit;
        best_count = row[(std::size_t)bit];
      }
    out[i] = best;
  }
  return out;
}

SeedMetrics evaluate_run(const std::vector<DefectLabelSet>& labels, const Eigen::MatrixXd& p) {
  if ((Eigen::Index)labels.size() != p.rows())
    throw shape_error("label count " + std::to_string(labels.size()) +
                      " does not match the " + std::to_string(p.rows()) + " membership rows");
  const std::vector<int> hard = hard_labels(p);
  const std::vector<int> reduced = dominant_label_reduction(labels, hard);
  SeedMetrics m;
  m.k = (int)p.cols();
  m.nmi = nmi(reduced, hard);
  m.ari = ari(reduced, hard);
  return m;
}

namespace {

MetricsSummary summarize(const std::vector<double>& values) {
  MetricsSummary s;
  const double n = (double)values.size();
  for (double v : values) s.mean += v;
  s.mean /= n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / (n - 1.0));
  }
  s.std_error = s.stddev / std::sqrt(n);
  return s;
}

std::vector<double> pluck(const std::vector<SeedMetrics>& seeds, double (*get)(const SeedMetrics&)) {
  std::vector<double> out;
  out.reserve(seeds.size());
  for (const auto& m : seeds) out.push_back(get(m));
  return out;
}

}  // namespace

MetricsReport aggregate(const std::vector<SeedMetrics>& seeds) {
  if (seeds.empty()) throw config_error("aggregation needs at least one run");
  MetricsReport report;
  report.seeds = seeds;
  report.nmi = summarize(pluck(seeds, [](const SeedMetrics& m) { return m.nmi; }));
  report.ari = summarize(pluck(seeds, [](const SeedMetrics& m) { return m.ari; }));
  report.k = summarize(pluck(seeds, [](const SeedMetrics& m) { return (double)m.k; }));
  return report;
}

void write_run_metrics(const std::filesystem::path& path, const std::string& embedding,
                       const std::string& clustering, const SeedMetrics& metrics) {
  KvPairs pairs;
  pairs.emplace_back("embedding", embedding);
  pairs.emplace_back("clustering", clustering);
  pairs.emplace_back("seed", std::to_string(metrics.seed));
  pairs.emplace_back("k", std::to_string(metrics.k));
  pairs.emplace_back("nmi", format_double(metrics.nmi));
  pairs.emplace_back("ari", format_double(metrics.ari));
  write_file_text(path, format_kv(pairs));
}

RunMetricsFile read_run_metrics(const std::filesystem::path& path) {
  const KvPairs pairs = parse_kv(read_file_text(path));
  const auto need = [&](const std::string& key) -> const std::string& {
    const std::string* v = find_kv(pairs, key);
    if (!v) throw format_error("metrics file is missing the \"" + key + "\" key", 0);
    return *v;
  };
  RunMetricsFile file;
  file.embedding = need("embedding");
  file.clustering = need("clustering");
  file.metrics.seed = parse_u64(need("seed"), 0, "seed");
  const long k = parse_long(need("k"), 0, "cluster count");
  if (k < 1) throw format_error("metrics file declares a non-positive cluster count", 0);
  file.metrics.k = (int)k;
  file.metrics.nmi = parse_double(need("nmi"), 0, "NMI value");
  file.metrics.ari = parse_double(need("ari"), 0, "ARI value");
  return file;
}

namespace {

std::string fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::string summary_cell(const MetricsSummary& s) {
  return fixed3(s.mean) + " ± " + fixed3(s.stddev) + " (se " + fixed3(s.std_error) + ")";
}

}  // namespace

std::string format_metrics_table(const std::vector<MetricsRow>& rows) {
  std::vector<std::array<std::string, 5>> cells;
  cells.push_back({"Embedding", "Clustering", "Final K", "NMI", "ARI"});
  for (const MetricsRow& row : rows)
    cells.push_back({row.embedding, row.clustering, summary_cell(row.report.k),
                     summary_cell(row.report.nmi), summary_cell(row.report.ari)});
  std::array<std::size_t, 5> width{};
  for (const auto& row : cells)
    for (int c = 0; c < 5; ++c) width[(std::size_t)c] = std::max(width[(std::size_t)c], row[(std::size_t)c].size());
  std::string out;
  for (const auto& row : cells) {
    for (int c = 0; c < 5; ++c) {
      out += row[(std::size_t)c];
      if (c < 4) out += std::string(width[(std::size_t)c] - row[(std::size_t)c].size() + 2, ' ');
    }
    out += "\n";
  }
  return out;
}

void write_metrics_table(const std::filesystem::path& path, const std::vector<MetricsRow>& rows) {
  write_file_text(path, format_metrics_table(rows));
}

}  // namespace decor
