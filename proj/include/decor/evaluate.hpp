#pragma once

// Multi-label-aware clustering evaluation: cluster-aware dominant-label
// reduction, NMI, ARI, and aggregation of metrics across seeds.

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "decor/common.hpp"
#include "decor/wafer.hpp"

namespace decor {

// ---------------------------------------------------------------------------
// Agreement metrics.

// Joint label counts (rows: values of a, columns: values of b) with
// marginals; labels are non-negative integers indexed by value.
struct ContingencyTable {
  std::vector<std::vector<long>> counts;
  std::vector<long> row_sum, col_sum;
  long total = 0;
};

ContingencyTable contingency(const std::vector<int>& a, const std::vector<int>& b);

// How the mutual information is normalized; the arithmetic mean of the two
// entropies is the default, the alternatives exist for comparability with
// other toolkits.
enum class NmiNorm { arithmetic, min, geometric, max };

// I(a;b) normalized by the chosen mean of H(a) and H(b), natural logs.
// Two constant labelings share no uncertainty to explain and score 1 by
// convention; a zero normalizer otherwise scores 0.
double nmi(const std::vector<int>& a, const std::vector<int>& b,
           NmiNorm norm = NmiNorm::arithmetic);

// Adjusted Rand index over co-membership pair counts, ≤ 1. A degenerate
// denominator (both labelings constant or both all-singleton) scores 1 when
// the partitions coincide and 0 otherwise.
double ari(const std::vector<int>& a, const std::vector<int>& b);

// ---------------------------------------------------------------------------
// Dominant-label reduction.

// Collapses multi-label ground truth to one label per sample: within each
// cluster, base-label occurrences are counted across the members' label
// sets, and every multi-label sample takes whichever of ITS OWN labels has
// the highest cluster-level count (ties toward the lowest label index).
// Single-label samples keep their label; normal samples (empty set) map to
// kNormalCategory. Output values lie in [0, kNormalCategory].
std::vector<int> dominant_label_reduction(const std::vector<DefectLabelSet>& labels,
                                          const std::vector<int>& clusters);

// ---------------------------------------------------------------------------
// Per-run evaluation and multi-seed aggregation.

struct SeedMetrics {
  std::uint64_t seed = 0;
  double nmi = 0.0;
  double ari = 0.0;
  int k = 0;  // cluster count of the evaluated assignment
};

struct MetricsSummary {
  double mean = 0.0;
  double stddev = 0.0;     // sample standard deviation (n - 1), 0 for n = 1
  double std_error = 0.0;  // stddev / sqrt(n)
};

struct MetricsReport {
  std::vector<SeedMetrics> seeds;
  MetricsSummary nmi, ari, k;
};

// Hard labels from the soft membership rows, dominant reduction against
// them, then NMI and ARI between the reduced labels and the hard labels.
// The seed field is left 0 for the caller to stamp.
SeedMetrics evaluate_run(const std::vector<DefectLabelSet>& labels, const Eigen::MatrixXd& p);

// Mean, sample standard deviation, and standard error per metric.
MetricsReport aggregate(const std::vector<SeedMetrics>& seeds);

// ---------------------------------------------------------------------------
// Metrics files.

// Per-run key-value file: embedding/clustering names, seed, k, nmi, ari.
void write_run_metrics(const std::filesystem::path& path, const std::string& embedding,
                       const std::string& clustering, const SeedMetrics& metrics);

struct RunMetricsFile {
  std::string embedding, clustering;
  SeedMetrics metrics;
};

RunMetricsFile read_run_metrics(const std::filesystem::path& path);

// Human-readable summary table with columns Embedding, Clustering, Final K,
// NMI, ARI; one row per configuration, mean ± sample std dev with the
// standard error alongside.
struct MetricsRow {
  std::string embedding, clustering;
  MetricsReport report;
};

std::string format_metrics_table(const std::vector<MetricsRow>& rows);
void write_metrics_table(const std::filesystem::path& path, const std::vector<MetricsRow>& rows);

}  // namespace decor
