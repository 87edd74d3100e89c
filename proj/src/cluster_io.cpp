#include <cmath>
#include <cstdio>
#include <string>

#include "decor/bytes.hpp"
#include "decor/cluster.hpp"
#include "decor/textio.hpp"

namespace decor {

namespace {

constexpr std::uint32_t kClusterModelVersion = 1;

void write_vector(ByteWriter& w, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) w.f64(v(i));
}

void write_matrix(ByteWriter& w, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) w.f64(m(r, c));
}

Eigen::VectorXd read_vector(ByteReader& r, int n) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = r.f64();
  return v;
}

Eigen::MatrixXd read_matrix(ByteReader& r, int rows, int cols) {
  Eigen::MatrixXd m(rows, cols);
  for (int a = 0; a < rows; ++a)
    for (int b = 0; b < cols; ++b) m(a, b) = r.f64();
  return m;
}

}  // namespace

void save_cluster_model(const std::filesystem::path& path, const ClusterModel& model) {
  const ClusterState& state = model.state;
  const int d = state.prior.dim();
  state.prior.validate();
  if (state.K < 1) throw shape_error("cluster model holds no clusters");
  if ((int)state.stats.size() != state.K || (int)state.weights.size() != state.K)
    throw shape_error("cluster statistics do not match the cluster count");
  for (const GaussStats& s : state.stats) {
    if (s.mean.size() != d || s.scatter.rows() != d || s.scatter.cols() != d)
      throw shape_error("cluster statistics do not match the prior dimension");
  }
  const bool has_head = model.head.k != 0;
  if (has_head) {
    if (model.head.k != state.K)
      throw shape_error("head class count does not match the cluster count");
    if (model.head.params.size() != model.head.param_count())
      throw shape_error("head parameter count does not match its dimensions");
  }

  ByteWriter w;
  w.magic("DPM1");
  w.u32(kClusterModelVersion);
  w.u8(state.prior.diagonal ? 1 : 0);
  w.u32((std::uint32_t)d);
  w.u32((std::uint32_t)state.K);
  w.f64(state.prior.kappa0);
  w.f64(state.prior.nu);
  write_vector(w, state.prior.mu0);
  write_matrix(w, state.prior.psi);
  for (int c = 0; c < state.K; ++c) {
    const GaussStats& s = state.stats[(std::size_t)c];
    w.f64(s.n);
    write_vector(w, s.mean);
    write_matrix(w, s.scatter);
    w.f64(state.weights[(std::size_t)c]);
  }
  w.u8(state.converged ? 1 : 0);
  w.u32((std::uint32_t)state.epochs_run);
  w.u32((std::uint32_t)(has_head ? model.head.in_dim : 0));
  w.u32((std::uint32_t)(has_head ? model.head.hidden : 0));
  w.u32((std::uint32_t)(has_head ? model.head.k : 0));
  if (has_head)
    for (double p : model.head.params) w.f64(p);
  write_file_bytes(path, w.data());
}

ClusterModel load_cluster_model(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> blob = read_file_bytes(path);
  ByteReader r(blob);
  r.magic("DPM1");
  {
    const std::size_t at = r.offset();
    const std::uint32_t version = r.u32();
    if (version != kClusterModelVersion)
      throw format_error("unsupported cluster model version " + std::to_string(version), at);
  }

  ClusterModel model;
  ClusterState& state = model.state;
  state.prior.diagonal = r.u8() != 0;
  const std::size_t dims_at = r.offset();
  const int d = (int)r.u32();
  state.K = (int)r.u32();
  if (d < 1) throw format_error("cluster model dimension must be positive", dims_at);
  if (state.K < 1) throw format_error("cluster model must hold at least one cluster", dims_at + 4);
  state.prior.kappa0 = r.f64();
  state.prior.nu = r.f64();
  state.prior.mu0 = read_vector(r, d);
  state.prior.psi = read_matrix(r, d, d);
  try {
    state.prior.validate();
  } catch (const std::runtime_error& e) {
    throw format_error(std::string("cluster model declares an invalid prior: ") + e.what(),
                       dims_at);
  }
  for (int c = 0; c < state.K; ++c) {
    GaussStats s;
    const std::size_t at = r.offset();
    s.n = r.f64();
    if (!(s.n > 0.0) || !std::isfinite(s.n))
      throw format_error("cluster " + std::to_string(c + 1) + " has a non-positive count", at);
    s.mean = read_vector(r, d);
    s.scatter = read_matrix(r, d, d);
    state.stats.push_back(std::move(s));
    state.weights.push_back(r.f64());
  }
  state.converged = r.u8() != 0;
  state.epochs_run = (int)r.u32();

  const std::size_t head_at = r.offset();
  model.head.in_dim = (int)r.u32();
  model.head.hidden = (int)r.u32();
  model.head.k = (int)r.u32();
  if (model.head.k != 0) {
    if (model.head.in_dim < 1 || model.head.hidden < 1)
      throw format_error("head dimensions must be positive", head_at);
    if (model.head.k != state.K)
      throw format_error("head class count does not match the cluster count", head_at + 8);
    model.head.params.resize(model.head.param_count());
    for (double& p : model.head.params) p = r.f64();
  } else if (model.head.in_dim != 0 || model.head.hidden != 0) {
    throw format_error("headless model must declare all head dimensions as zero", head_at);
  }
  r.expect_end();
  return model;
}

void write_assignments(const std::filesystem::path& path, const Eigen::MatrixXd& p) {
  if (p.cols() < 1) throw shape_error("membership matrix has no columns");
  const std::vector<int> hard = hard_labels(p);
  std::string text = "K=" + std::to_string(p.cols()) + "\n";
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    text += std::to_string(i + 1);
    text += ", ";
    text += std::to_string(hard[(std::size_t)i] + 1);
    for (Eigen::Index c = 0; c < p.cols(); ++c) {
      text += ", ";
      text += format_double(p(i, c));
    }
    text += "\n";
  }
  write_file_text(path, text);
}

Assignments read_assignments(const std::filesystem::path& path) {
  const std::string text = read_file_text(path);
  const auto lines = split_lines(text);
  if (lines.empty()) throw format_error("assignment table is empty", 0);
  const auto& [hdr_at, hdr] = lines.front();
  if (hdr.rfind("K=", 0) != 0)
    throw format_error("assignment table must start with a K=<count> header", hdr_at);
  const long k = parse_long(hdr.substr(2), hdr_at, "cluster count");
  if (k < 1) throw format_error("cluster count must be positive", hdr_at);

  Assignments out;
  out.k = (int)k;
  const std::size_t rows = lines.size() - 1;
  out.p.resize((Eigen::Index)rows, (Eigen::Index)k);
  out.hard.resize(rows);
  for (std::size_t row = 0; row < rows; ++row) {
    const auto& [at, line] = lines[row + 1];
    std::size_t pos = 0;
    std::string field;

    if (!next_field(line, pos, field))
      throw format_error("assignment row is empty", at);
    const long index = parse_long(field, at, "sample index");
    if (index != (long)row + 1)
      throw format_error("sample index " + std::to_string(index) + " out of order, expected " +
                             std::to_string(row + 1),
                         at);

    if (!next_field(line, pos, field))
      throw format_error("assignment row is missing the hard label", at);
    const long label = parse_long(field, at, "hard label");
    if (label < 1 || label > k)
      throw format_error("hard label " + std::to_string(label) + " outside 1.." +
                             std::to_string(k),
                         at);
    out.hard[row] = (int)label - 1;

    for (long c = 0; c < k; ++c) {
      if (!next_field(line, pos, field))
        throw format_error("assignment row holds fewer than " + std::to_string(k) +
                               " probabilities",
                           at);
      out.p((Eigen::Index)row, (Eigen::Index)c) = parse_double(field, at, "probability");
    }
    if (next_field(line, pos, field))
      throw format_error("assignment row holds extra fields", at);
  }
  return out;
}

}  // namespace decor
