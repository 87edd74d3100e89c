#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>

#include "decor/bytes.hpp"
#include "decor/outlier.hpp"
#include "decor/textio.hpp"

namespace decor {

namespace {

double median_inplace(std::vector<double>& v) {
  const std::size_t n = v.size();
  std::sort(v.begin(), v.end());
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

double robust_cut(const std::vector<double>& scores, double k) {
  if (scores.empty()) throw config_error("robust cut needs a non-empty score vector");
  std::vector<double> work = scores;
  const double med = median_inplace(work);
  for (double& s : work) s = std::abs(s - med);
  const double mad = median_inplace(work);
  return med + k * mad;
}

int adaptive_k(int n, int min_k, int max_k) {
  if (n < 2) throw config_error("adaptive LOF neighborhood needs at least two points");
  if (min_k < 1 || min_k > max_k)
    throw config_error("LOF neighborhood bounds need 1 <= min_k <= max_k");
  const int root = (int)std::floor(std::sqrt((double)n));
  return std::min(std::clamp(root, min_k, max_k), n - 1);
}

std::vector<double> lof_scores(const EmbMatrix& x, int k_lof) {
  const int n = (int)x.rows();
  if (n < 2) throw config_error("LOF needs at least two points");
  if (k_lof < 1 || k_lof > n - 1)
    throw config_error("LOF neighborhood k = " + std::to_string(k_lof) +
                       " outside [1, N-1] for N = " + std::to_string(n));

  // k-distance and neighborhood (ties included) per point.
  std::vector<double> kdist((std::size_t)n, 0.0);
  std::vector<std::vector<std::pair<int, double>>> nbrs((std::size_t)n);
  std::vector<std::pair<double, int>> dist;
  dist.reserve((std::size_t)n - 1);
  for (int a = 0; a < n; ++a) {
    dist.clear();
    for (int b = 0; b < n; ++b)
      if (b != a) dist.emplace_back((x.row(a) - x.row(b)).norm(), b);
    std::nth_element(dist.begin(), dist.begin() + (k_lof - 1), dist.end());
    kdist[(std::size_t)a] = dist[(std::size_t)(k_lof - 1)].first;
    for (int b = 0; b < n; ++b)
      if (b != a) {
        const double d = (x.row(a) - x.row(b)).norm();
        if (d <= kdist[(std::size_t)a]) nbrs[(std::size_t)a].emplace_back(b, d);
      }
  }

  // Local reachability density; duplicate sets (zero mean reachability)
  // saturate so identical points come out at exactly LOF 1.
  constexpr double kDensityCap = 1e10;
  std::vector<double> lrd((std::size_t)n, 0.0);
  for (int a = 0; a < n; ++a) {
    double reach = 0.0;
    for (const auto& [b, d] : nbrs[(std::size_t)a]) reach += std::max(kdist[(std::size_t)b], d);
    const double mean = reach / (double)nbrs[(std::size_t)a].size();
    lrd[(std::size_t)a] = mean > 0.0 ? 1.0 / mean : kDensityCap;
  }

  std::vector<double> out((std::size_t)n, 0.0);
  for (int a = 0; a < n; ++a) {
    double ratio = 0.0;
    for (const auto& [b, d] : nbrs[(std::size_t)a]) ratio += lrd[(std::size_t)b] / lrd[(std::size_t)a];
    out[(std::size_t)a] = ratio / (double)nbrs[(std::size_t)a].size();
  }
  return out;
}

void OutlierConfig::validate() const {
  if (trees < 1) throw config_error("tree count must be positive");
  if (subsample < 2) throw config_error("forest subsample must be at least 2");
  if (k_cut < 0.0) throw config_error("robust-cut scale must not be negative");
  if (!(hi_cont > 0.0) || hi_cont > 1.0)
    throw config_error("contamination prior must sit in (0, 1]");
  if (min_k < 1 || min_k > max_k)
    throw config_error("LOF neighborhood bounds need 1 <= min_k <= max_k");
  if (min_cluster < 2) throw config_error("minimum cluster size must be at least 2");
}

OutlierReport detect_outliers(const EmbMatrix& z, const std::vector<int>& labels,
                              const OutlierConfig& cfg) {
  cfg.validate();
  if ((Eigen::Index)labels.size() != z.rows())
    throw shape_error("label count " + std::to_string(labels.size()) +
                      " does not match the " + std::to_string(z.rows()) + " embedding rows");
  for (int l : labels)
    if (l < 0) throw shape_error("hard labels must be non-negative");

  int k = 0;
  for (int l : labels) k = std::max(k, l + 1);

  OutlierReport report;
  Rng master(cfg.seed);
  for (int c = 0; c < k; ++c) {
    std::vector<int> members;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == c) members.push_back((int)i);
    const int m = (int)members.size();
    if (m == 0) continue;
    if (m < cfg.min_cluster) {
      report.skipped.emplace_back(c, m);
      continue;
    }

    ClusterOutliers out;
    out.cluster = c;
    out.members = members;

    EmbMatrix local(m, z.cols());
    for (int i = 0; i < m; ++i) local.row(i) = z.row(members[(std::size_t)i]);

    const IsolationForestModel forest = fit_isolation_forest(
        local, cfg.trees, cfg.subsample, master.fork((std::uint64_t)c).origin());
    out.if_scores = if_scores(forest, local);
    out.lof_scores = lof_scores(local, adaptive_k(m, cfg.min_k, cfg.max_k));
    out.if_cut = robust_cut(out.if_scores, cfg.k_cut);
    out.lof_cut = robust_cut(out.lof_scores, cfg.k_cut);

    // Contamination prefilter: the ceil(hi_cont * m) highest forest scores,
    // ties broken toward the lower index. The epsilon keeps an exact product
    // like 0.2 * 205 = 41 from rounding up through float error.
    const int quota = (int)std::ceil(cfg.hi_cont * (double)m - 1e-9);
    std::vector<int> order(members.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (out.if_scores[(std::size_t)a] != out.if_scores[(std::size_t)b])
        return out.if_scores[(std::size_t)a] > out.if_scores[(std::size_t)b];
      return a < b;
    });
    std::vector<bool> in_top((std::size_t)m, false);
    for (int i = 0; i < std::min(quota, m); ++i) in_top[(std::size_t)order[(std::size_t)i]] = true;

    out.if_flags.resize((std::size_t)m);
    out.lof_flags.resize((std::size_t)m);
    out.final_flags.resize((std::size_t)m);
    for (int i = 0; i < m; ++i) {
      const bool beats_cut = out.if_scores[(std::size_t)i] > out.if_cut;
      bool if_flag = false;
      switch (cfg.if_rule) {
        case OutlierConfig::IfRule::quantile_and_cut:
          if_flag = in_top[(std::size_t)i] && beats_cut;
          break;
        case OutlierConfig::IfRule::quantile_only:
          if_flag = in_top[(std::size_t)i];
          break;
        case OutlierConfig::IfRule::cut_only:
          if_flag = beats_cut;
          break;
      }
      out.if_flags[(std::size_t)i] = if_flag;
      out.lof_flags[(std::size_t)i] = out.lof_scores[(std::size_t)i] > out.lof_cut;
      out.final_flags[(std::size_t)i] = if_flag && out.lof_flags[(std::size_t)i];
      if (out.final_flags[(std::size_t)i]) report.flagged.push_back(members[(std::size_t)i]);
    }
    report.clusters.push_back(std::move(out));
  }
  std::sort(report.flagged.begin(), report.flagged.end());
  return report;
}

namespace {

constexpr const char* kReportHeader =
    "sample_index, cluster, if_score, lof_score, if_flag, lof_flag, final_flag";

}  // namespace

void write_outlier_report(const std::filesystem::path& path, const OutlierReport& report) {
  // Rows globally ordered by sample index.
  struct Row {
    int sample, cluster;
    double if_score, lof_score;
    bool if_flag, lof_flag, final_flag;
  };
  std::vector<Row> rows;
  for (const ClusterOutliers& c : report.clusters)
    for (std::size_t i = 0; i < c.members.size(); ++i)
      rows.push_back(Row{c.members[i], c.cluster, c.if_scores[i], c.lof_scores[i],
                         bool(c.if_flags[i]), bool(c.lof_flags[i]), bool(c.final_flags[i])});
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.sample < b.sample; });

  std::string text = std::string(kReportHeader) + "\n";
  for (const Row& r : rows) {
    text += std::to_string(r.sample + 1);
    text += ", " + std::to_string(r.cluster + 1);
    text += ", " + format_double(r.if_score);
    text += ", " + format_double(r.lof_score);
    text += r.if_flag ? ", 1" : ", 0";
    text += r.lof_flag ? ", 1" : ", 0";
    text += r.final_flag ? ", 1\n" : ", 0\n";
  }
  if (report.skipped.empty()) {
    text += "skipped: none\n";
  } else {
    text += "skipped: ";
    for (std::size_t i = 0; i < report.skipped.size(); ++i) {
      if (i) text += ", ";
      text += std::to_string(report.skipped[i].first + 1) + " (" +
              std::to_string(report.skipped[i].second) + " members)";
    }
    text += "\n";
  }
  write_file_text(path, text);
}

OutlierReport read_outlier_report(const std::filesystem::path& path) {
  const std::string text = read_file_text(path);
  const auto lines = split_lines(text);
  if (lines.empty() || lines.front().second != kReportHeader)
    throw format_error("outlier report must start with its column header", 0);
  if (lines.size() < 2 || lines.back().second.rfind("skipped: ", 0) != 0)
    throw format_error("outlier report must end with a skipped-clusters footer",
                       lines.empty() ? 0 : lines.back().first);

  OutlierReport report;
  std::map<int, ClusterOutliers> clusters;
  int prev_sample = 0;
  for (std::size_t row = 1; row + 1 < lines.size(); ++row) {
    const auto& [at, line] = lines[row];
    std::size_t pos = 0;
    std::string field;
    const auto take = [&](const char* what) {
      if (!next_field(line, pos, field))
        throw format_error(std::string("outlier report row is missing the ") + what, at);
      return field;
    };
    const long sample = parse_long(take("sample index"), at, "sample index");
    if (sample <= prev_sample)
      throw format_error("outlier report sample indices must increase", at);
    prev_sample = (int)sample;
    const long cluster = parse_long(take("cluster id"), at, "cluster id");
    if (cluster < 1) throw format_error("cluster ids are 1-based on disk", at);
    const double if_score = parse_double(take("IF score"), at, "IF score");
    const double lof_score = parse_double(take("LOF score"), at, "LOF score");
    const auto flag = [&](const char* what) {
      const long v = parse_long(take(what), at, what);
      if (v != 0 && v != 1) throw format_error(std::string(what) + " must be 0 or 1", at);
      return v == 1;
    };
    const bool if_flag = flag("IF flag");
    const bool lof_flag = flag("LOF flag");
    const bool final_flag = flag("final flag");
    if (final_flag != (if_flag && lof_flag))
      throw format_error("final flag must be the conjunction of the detector flags", at);
    if (next_field(line, pos, field))
      throw format_error("outlier report row holds extra fields", at);

    ClusterOutliers& c = clusters[(int)cluster - 1];
    c.cluster = (int)cluster - 1;
    c.members.push_back((int)sample - 1);
    c.if_scores.push_back(if_score);
    c.lof_scores.push_back(lof_score);
    c.if_flags.push_back(if_flag);
    c.lof_flags.push_back(lof_flag);
    c.final_flags.push_back(final_flag);
    if (final_flag) report.flagged.push_back((int)sample - 1);
  }

  const auto& [foot_at, footer] = lines.back();
  const std::string skipped = footer.substr(std::string("skipped: ").size());
  if (skipped != "none") {
    std::size_t pos = 0;
    std::string field;
    while (next_field(skipped, pos, field)) {
      const std::size_t paren = field.find(" (");
      if (paren == std::string::npos || field.back() != ')' ||
          field.find(" members)") == std::string::npos)
        throw format_error("malformed skipped-cluster entry \"" + field + "\"", foot_at);
      const long id = parse_long(field.substr(0, paren), foot_at, "skipped cluster id");
      const long count = parse_long(
          field.substr(paren + 2, field.size() - (paren + 2) - std::string(" members)").size()),
          foot_at, "skipped member count");
      if (id < 1 || count < 0)
        throw format_error("malformed skipped-cluster entry \"" + field + "\"", foot_at);
      report.skipped.emplace_back((int)id - 1, (int)count);
    }
  }

  for (auto& [id, c] : clusters) {
    c.if_cut = std::numeric_limits<double>::quiet_NaN();
    c.lof_cut = std::numeric_limits<double>::quiet_NaN();
    report.clusters.push_back(std::move(c));
  }
  std::sort(report.flagged.begin(), report.flagged.end());
  return report;
}

}  // namespace decor
