#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "decor/cluster.hpp"
#include "decor/evaluate.hpp"
#include "decor/outlier.hpp"
#include "decor/preprocess.hpp"
#include "decor/synthetic.hpp"
#include "decor/train.hpp"

namespace decor {

// Everything one run needs, parsed from a sectioned key-value config file:
//
//   [data]    source, path, classes, per_class, noise_rate, map_size, seed,
//             test_fraction, fit_on, eval_on
//   [image]   target_size, edge_margin, blur_kernel, blur_sigma
//   [encoder] equivariant, learning_rate, batch_size, epochs
//   [cluster] k_init, max_epochs, alpha, diagonal
//   [outlier] trees, subsample, k_cut, hi_cont, min_k, max_k, min_cluster
//   [run]     seeds, out
//
// `classes` is a comma list of defect names ('+' joins multi-defect combos,
// 'normal' is the defect-free class); every listed class contributes
// `per_class` maps. Unknown keys are rejected.
struct PipelineConfig {
  std::string source = "synthetic";    // "synthetic" | "wfr1"
  std::filesystem::path dataset_path;  // input file for the wfr1 source
  GeneratorSpec synthetic;
  std::uint64_t data_seed = 1;
  double test_fraction = 0.2;
  std::string fit_on = "train";  // "train" | "all"
  std::string eval_on = "test";  // "test" | "all"

  ImageConfig image;

  bool equivariant = true;  // false selects the plain-CNN baseline encoder
  TrainConfig encoder;      // the seed field is ignored; run seeds derive it

  DpmmConfig cluster;  // ditto; diagonal covariance by default
  HeadFitConfig head;
  OutlierConfig outlier;

  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::filesystem::path out_dir;
  std::string config_text;  // verbatim source, echoed into the manifest

  PipelineConfig() { cluster.diagonal = true; }

  void validate() const;
};

PipelineConfig parse_pipeline_config(const std::string& text);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

// Encoder architecture implied by the config: stock widths at the config's
// input size and equivariance switch.
ArchConfig encoder_arch(const PipelineConfig& cfg);

// ---------------------------------------------------------------------------
// Run manifest.

struct StageTiming {
  std::string stage;  // "generate", "seed-1/cluster", ..., "aggregate"
  double seconds = 0.0;
};

struct ArtifactEntry {
  std::string path;  // relative to the output directory; inputs keep theirs
  std::string sha256;
};

struct SeedOutcome {
  SeedMetrics metrics;                                // seed, k, nmi, ari
  std::vector<double> loss_curve;                     // encoder mean MSE per epoch
  int flagged = 0;                                    // |O*| on the evaluation set
  std::vector<std::pair<int, int>> cluster_outliers;  // (1-based cluster, final flags)
  std::vector<std::pair<int, int>> skipped_clusters;  // (1-based cluster, member count)
};

struct RunManifest {
  std::string config_text;
  std::vector<std::uint64_t> seeds;
  std::string embedding, clustering;  // metric row names ("rcae"/"cae", "dpmm")
  std::vector<StageTiming> timings;
  std::vector<SeedOutcome> outcomes;  // config seed order
  MetricsReport summary;
  std::vector<ArtifactEntry> artifacts;  // every written file except the manifest
  std::vector<ArtifactEntry> inputs;     // external files the run read
};

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Execution.

// Worker cap for concurrent seed execution: DECOR_THREADS when set (must be
// a positive integer), otherwise the hardware concurrency.
int worker_threads();

std::filesystem::path seed_dir(const std::filesystem::path& out_dir, std::uint64_t seed);

// Individual pipeline stages behind the CLI subcommands. Each stage reads its
// inputs from the files earlier stages persisted, so any stage can be rerun
// in isolation and reproduces the full run's bytes. generate writes
// dataset.wfr1 at the output root; per-seed stages populate seed-<S>/.
void generate_stage(const PipelineConfig& cfg);
void preprocess_stage(const PipelineConfig& cfg, std::uint64_t seed);
std::vector<double> train_encoder_stage(const PipelineConfig& cfg, std::uint64_t seed);
void embed_stage(const PipelineConfig& cfg, std::uint64_t seed);
int cluster_stage(const PipelineConfig& cfg, std::uint64_t seed);
OutlierReport detect_stage(const PipelineConfig& cfg, std::uint64_t seed);
SeedMetrics evaluate_stage(const PipelineConfig& cfg, std::uint64_t seed);

// The full run: dataset, every per-seed stage (seeds may execute on parallel
// workers), metric aggregation from the per-seed metric files, then the
// manifest with a hash of every artifact. A stage failure aborts the run with
// the stage name, leaving previously written artifacts intact.
RunManifest run_pipeline(const PipelineConfig& cfg);

}  // namespace decor
