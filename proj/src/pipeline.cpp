#include "decor/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <stdexcept>
#include <thread>
#include <type_traits>

#include "json.hpp"

#include "decor/bytes.hpp"
#include "decor/dataset_io.hpp"
#include "decor/kv.hpp"
#include "decor/model_io.hpp"
#include "decor/sha256.hpp"
#include "decor/split.hpp"

namespace decor {
namespace {

// One derived random stream per randomness-consuming stage, so a stage rerun
// through its subcommand draws exactly what the full run drew.
constexpr std::uint64_t kSplitStream = 1;
constexpr std::uint64_t kEncoderStream = 2;
constexpr std::uint64_t kClusterStream = 3;
constexpr std::uint64_t kHeadStream = 4;
constexpr std::uint64_t kOutlierStream = 5;

std::uint64_t stream_seed(std::uint64_t run_seed, std::uint64_t stream) {
  return Rng(run_seed).fork(stream).origin();
}

std::string trimmed(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  std::size_t e = s.find_last_not_of(" \t");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

long to_int(const std::string& key, const std::string& value) {
  long v = 0;
  const auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc{} || p != value.data() + value.size()) {
    throw config_error("config key '" + key + "': expected an integer, got '" + value + "'");
  }
  return v;
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc{} || p != value.data() + value.size()) {
    throw config_error("config key '" + key + "': expected an unsigned integer, got '" + value +
                       "'");
  }
  return v;
}

double to_double(const std::string& key, const std::string& value) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc{} || p != value.data() + value.size()) {
    throw config_error("config key '" + key + "': expected a number, got '" + value + "'");
  }
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true") return true;
  if (value == "false") return false;
  throw config_error("config key '" + key + "': expected 'true' or 'false', got '" + value + "'");
}

std::vector<std::uint64_t> to_seed_list(const std::string& key, const std::string& value) {
  std::vector<std::uint64_t> seeds;
  std::size_t at = 0;
  while (at <= value.size()) {
    const std::size_t comma = std::min(value.find(',', at), value.size());
    seeds.push_back(to_u64(key, trimmed(value.substr(at, comma - at))));
    at = comma + 1;
  }
  return seeds;
}

std::vector<PatternSpec> parse_classes(const std::string& raw, long per_class) {
  if (per_class < 1) {
    throw config_error("data.per_class must be a positive count per listed class");
  }
  std::vector<PatternSpec> patterns;
  std::size_t at = 0;
  while (at <= raw.size()) {
    const std::size_t comma = std::min(raw.find(',', at), raw.size());
    const std::string token = trimmed(raw.substr(at, comma - at));
    at = comma + 1;
    if (token.empty()) throw config_error("data.classes lists an empty entry");

    PatternSpec spec;
    spec.count = static_cast<int>(per_class);
    if (token != "normal") {
      std::size_t part = 0;
      while (part <= token.size()) {
        const std::size_t plus = std::min(token.find('+', part), token.size());
        const std::string name = trimmed(token.substr(part, plus - part));
        part = plus + 1;
        if (name == "normal") {
          throw config_error("'normal' cannot combine with defect names in data.classes");
        }
        int defect = -1;
        for (int d = 0; d < kDefectTypeCount; ++d) {
          if (defect_names()[d] == name) defect = d;
        }
        if (defect < 0) throw config_error("unknown defect class '" + name + "' in data.classes");
        if (spec.combo.has(static_cast<Defect>(defect))) {
          throw config_error("duplicate defect '" + name + "' in data.classes entry '" + token +
                             "'");
        }
        spec.combo.add(static_cast<Defect>(defect));
      }
    }
    patterns.push_back(spec);
  }
  return patterns;
}

void require_out_dir(const PipelineConfig& cfg) {
  if (cfg.out_dir.empty()) {
    throw config_error("run.out (or --out) must name an output directory");
  }
}

Dataset load_source_dataset(const PipelineConfig& cfg) {
  if (cfg.source == "wfr1") return read_dataset(cfg.dataset_path);
  return read_dataset(cfg.out_dir / "dataset.wfr1");
}

// ---------------------------------------------------------------------------
// Stage wrapping: timing plus error attribution that keeps the error type
// (and with it the CLI exit code) intact.

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string without_offset_suffix(const format_error& e) {
  std::string msg = e.what();
  const std::string suffix = " (at byte offset " + std::to_string(e.offset) + ")";
  if (msg.size() >= suffix.size() &&
      msg.compare(msg.size() - suffix.size(), suffix.size(), suffix) == 0) {
    msg.erase(msg.size() - suffix.size());
  }
  return msg;
}

template <typename F>
auto stage_step(std::vector<StageTiming>& timings, const std::string& label,
                const std::string& prefix, F&& fn) -> decltype(fn()) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      timings.push_back({label, seconds_since(t0)});
    } else {
      auto value = fn();
      timings.push_back({label, seconds_since(t0)});
      return value;
    }
  } catch (const config_error& e) {
    throw config_error(prefix + e.what());
  } catch (const format_error& e) {
    throw format_error(prefix + without_offset_suffix(e), e.offset);
  } catch (const shape_error& e) {
    throw shape_error(prefix + e.what());
  } catch (const numerical_error& e) {
    throw numerical_error(prefix + e.what());
  } catch (const std::exception& e) {
    throw std::runtime_error(prefix + e.what());
  }
}

std::string stage_prefix(const char* name, std::uint64_t seed) {
  return "stage " + std::string(name) + " (seed " + std::to_string(seed) + "): ";
}

}  // namespace

// ---------------------------------------------------------------------------
// Config.

void PipelineConfig::validate() const {
  if (source != "synthetic" && source != "wfr1") {
    throw config_error("data.source must be 'synthetic' or 'wfr1'");
  }
  if (source == "wfr1" && dataset_path.empty()) {
    throw config_error("data.path must name the input dataset when data.source is 'wfr1'");
  }
  if (source == "synthetic") {
    if (synthetic.patterns.empty()) {
      throw config_error("data.classes must list at least one class for the synthetic source");
    }
    for (const PatternSpec& p : synthetic.patterns) {
      if (p.count < 1) throw config_error("data.per_class must be a positive count");
    }
    if (synthetic.size < 16 || synthetic.size % 2 != 0) {
      throw config_error("data.map_size must be an even number of at least 16");
    }
    if (!(synthetic.noise_rate >= 0.0 && synthetic.noise_rate < 1.0)) {
      throw config_error("data.noise_rate must lie in [0, 1)");
    }
  }
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw config_error("data.test_fraction must lie in (0, 1)");
  }
  if (fit_on != "train" && fit_on != "all") {
    throw config_error("data.fit_on must be 'train' or 'all'");
  }
  if (eval_on != "test" && eval_on != "all") {
    throw config_error("data.eval_on must be 'test' or 'all'");
  }
  if (image.edge_margin < 0) throw config_error("image.edge_margin must be non-negative");
  if (image.blur_kernel < 1 || image.blur_kernel % 2 == 0) {
    throw config_error("image.blur_kernel must be odd and positive");
  }
  if (image.blur_sigma <= 0.0) throw config_error("image.blur_sigma must be positive");
  try {
    encoder_arch(*this).validate();
  } catch (const shape_error& e) {
    throw config_error(std::string("image.target_size: ") + e.what());
  }
  encoder.validate();
  cluster.validate();
  outlier.validate();
  if (seeds.empty()) throw config_error("run.seeds must list at least one seed");
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    for (std::size_t j = i + 1; j < seeds.size(); ++j) {
      if (seeds[i] == seeds[j]) {
        throw config_error("run.seeds must be distinct (seed " + std::to_string(seeds[i]) +
                           " repeats)");
      }
    }
  }
}

PipelineConfig parse_pipeline_config(const std::string& text) {
  KvPairs pairs;
  try {
    pairs = parse_kv(text);
  } catch (const format_error& e) {
    throw config_error(std::string("config syntax: ") + e.what());
  }

  PipelineConfig cfg;
  cfg.config_text = text;
  std::string classes_raw;
  bool have_classes = false;
  long per_class = -1;

  for (const auto& [key, value] : pairs) {
    if (key == "data.source") {
      cfg.source = value;
    } else if (key == "data.path") {
      cfg.dataset_path = value;
    } else if (key == "data.classes") {
      classes_raw = value;
      have_classes = true;
    } else if (key == "data.per_class") {
      per_class = to_int(key, value);
    } else if (key == "data.noise_rate") {
      cfg.synthetic.noise_rate = to_double(key, value);
    } else if (key == "data.map_size") {
      cfg.synthetic.size = static_cast<int>(to_int(key, value));
    } else if (key == "data.seed") {
      cfg.data_seed = to_u64(key, value);
    } else if (key == "data.test_fraction") {
      cfg.test_fraction = to_double(key, value);
    } else if (key == "data.fit_on") {
      cfg.fit_on = value;
    } else if (key == "data.eval_on") {
      cfg.eval_on = value;
    } else if (key == "image.target_size") {
      cfg.image.target_size = static_cast<int>(to_int(key, value));
    } else if (key == "image.edge_margin") {
      cfg.image.edge_margin = static_cast<int>(to_int(key, value));
    } else if (key == "image.blur_kernel") {
      cfg.image.blur_kernel = static_cast<int>(to_int(key, value));
    } else if (key == "image.blur_sigma") {
      cfg.image.blur_sigma = to_double(key, value);
    } else if (key == "encoder.equivariant") {
      cfg.equivariant = to_bool(key, value);
    } else if (key == "encoder.learning_rate") {
      cfg.encoder.learning_rate = to_double(key, value);
    } else if (key == "encoder.batch_size") {
      cfg.encoder.batch_size = static_cast<int>(to_int(key, value));
    } else if (key == "encoder.epochs") {
      cfg.encoder.epochs = static_cast<int>(to_int(key, value));
    } else if (key == "cluster.k_init") {
      cfg.cluster.k_init = static_cast<int>(to_int(key, value));
    } else if (key == "cluster.max_epochs") {
      cfg.cluster.max_epochs = static_cast<int>(to_int(key, value));
    } else if (key == "cluster.alpha") {
      cfg.cluster.alpha = to_double(key, value);
    } else if (key == "cluster.diagonal") {
      cfg.cluster.diagonal = to_bool(key, value);
    } else if (key == "outlier.trees") {
      cfg.outlier.trees = static_cast<int>(to_int(key, value));
    } else if (key == "outlier.subsample") {
      cfg.outlier.subsample = static_cast<int>(to_int(key, value));
    } else if (key == "outlier.k_cut") {
      cfg.outlier.k_cut = to_double(key, value);
    } else if (key == "outlier.hi_cont") {
      cfg.outlier.hi_cont = to_double(key, value);
    } else if (key == "outlier.min_k") {
      cfg.outlier.min_k = static_cast<int>(to_int(key, value));
    } else if (key == "outlier.max_k") {
      cfg.outlier.max_k = static_cast<int>(to_int(key, value));
    } else if (key == "outlier.min_cluster") {
      cfg.outlier.min_cluster = static_cast<int>(to_int(key, value));
    } else if (key == "run.seeds") {
      cfg.seeds = to_seed_list(key, value);
    } else if (key == "run.out") {
      cfg.out_dir = value;
    } else {
      throw config_error("unknown config key '" + key + "'");
    }
  }

  if (cfg.source == "synthetic") {
    if (have_classes != (per_class >= 0)) {
      throw config_error("data.classes and data.per_class must appear together");
    }
    if (have_classes) cfg.synthetic.patterns = parse_classes(classes_raw, per_class);
  } else if (have_classes || per_class >= 0) {
    throw config_error("data.classes and data.per_class only apply to the synthetic source");
  }

  cfg.validate();
  return cfg;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file_text(path);
  } catch (const std::exception& e) {
    throw config_error(std::string("config file: ") + e.what());
  }
  return parse_pipeline_config(text);
}

ArchConfig encoder_arch(const PipelineConfig& cfg) {
  ArchConfig arch;
  arch.input_size = cfg.image.target_size;
  arch.equivariant = cfg.equivariant;
  return arch;
}

// ---------------------------------------------------------------------------
// Stages.

std::filesystem::path seed_dir(const std::filesystem::path& out_dir, std::uint64_t seed) {
  return out_dir / ("seed-" + std::to_string(seed));
}

void generate_stage(const PipelineConfig& cfg) {
  if (cfg.source != "synthetic") {
    throw config_error("data.source is '" + cfg.source + "'; only the synthetic source generates");
  }
  require_out_dir(cfg);
  std::filesystem::create_directories(cfg.out_dir);
  write_dataset(generate_synthetic(cfg.synthetic, cfg.data_seed), cfg.out_dir / "dataset.wfr1");
}

void preprocess_stage(const PipelineConfig& cfg, std::uint64_t seed) {
  require_out_dir(cfg);
  const Dataset full = load_source_dataset(cfg);
  const std::filesystem::path dir = seed_dir(cfg.out_dir, seed);
  std::filesystem::create_directories(dir);

  Dataset fit;
  Dataset eval;
  if (cfg.fit_on == "all" && cfg.eval_on == "all") {
    fit = full;
    eval = full;
  } else {
    auto [train, test] =
        multilabel_stratified_split(full, cfg.test_fraction, stream_seed(seed, kSplitStream));
    fit = cfg.fit_on == "train" ? std::move(train) : full;
    eval = cfg.eval_on == "test" ? std::move(test) : full;
  }
  write_dataset(fit, dir / "fit.wfr1");
  write_dataset(eval, dir / "eval.wfr1");
  write_images(preprocess_dataset(fit, cfg.image), dir / "fit.img");
  write_images(preprocess_dataset(eval, cfg.image), dir / "eval.img");
}

std::vector<double> train_encoder_stage(const PipelineConfig& cfg, std::uint64_t seed) {
  require_out_dir(cfg);
  const std::filesystem::path dir = seed_dir(cfg.out_dir, seed);
  const std::vector<ImageTensor> images = read_images(dir / "fit.img");
  const ArchConfig arch = encoder_arch(cfg);
  TrainConfig train_cfg = cfg.encoder;
  train_cfg.seed = stream_seed(seed, kEncoderStream);
  TrainOutput<float> out = train_autoencoder(images, arch, train_cfg);
  save_checkpoint(dir / "encoder.rcae", Checkpoint{arch, cfg.image, std::move(out.params)});
  return out.loss_curve;
}

void embed_stage(const PipelineConfig& cfg, std::uint64_t seed) {
  require_out_dir(cfg);
  const std::filesystem::path dir = seed_dir(cfg.out_dir, seed);
  const Checkpoint ckpt = load_checkpoint(dir / "encoder.rcae");
  for (const char* name : {"fit", "eval"}) {
    const std::vector<ImageTensor> images = read_images(dir / (std::string(name) + ".img"));
    write_embeddings(dir / (std::string(name) + ".emb"),
                     embed_images(images, ckpt.arch, ckpt.params));
  }
}

int cluster_stage(const PipelineConfig& cfg, std::uint64_t seed) {
  require_out_dir(cfg);
  const std::filesystem::path dir = seed_dir(cfg.out_dir, seed);
  const EmbMatrix z_fit = to_double_matrix(read_embeddings(dir / "fit.emb"));
  DpmmConfig cluster_cfg = cfg.cluster;
  cluster_cfg.seed = stream_seed(seed, kClusterStream);
  const ClusterState state = fit_dpmm(z_fit, cluster_cfg);
  HeadFitConfig head_cfg = cfg.head;
  head_cfg.seed = stream_seed(seed, kHeadStream);
  const HeadFitResult head = fit_head(z_fit, state, head_cfg);
  save_cluster_model(dir / "model.dpm", ClusterModel{state, head.head});
  const EmbMatrix z_eval = to_double_matrix(read_embeddings(dir / "eval.emb"));
  write_assignments(dir / "assignments.txt", soft_cluster(z_eval, head.head));
  return state.K;
}

OutlierReport detect_stage(const PipelineConfig& cfg, std::uint64_t seed) {
  require_out_dir(cfg);
  const std::filesystem::path dir = seed_dir(cfg.out_dir, seed);
  const EmbMatrix z = to_double_matrix(read_embeddings(dir / "eval.emb"));
  const Assignments assignments = read_assignments(dir / "assignments.txt");
  OutlierConfig outlier_cfg = cfg.outlier;
  outlier_cfg.seed = stream_seed(seed, kOutlierStream);
  const OutlierReport report = detect_outliers(z, assignments.hard, outlier_cfg);
  write_outlier_report(dir / "outliers.txt", report);
  return report;
}

SeedMetrics evaluate_stage(const PipelineConfig& cfg, std::uint64_t seed) {
  require_out_dir(cfg);
  const std::filesystem::path dir = seed_dir(cfg.out_dir, seed);
  const Dataset eval = read_dataset(dir / "eval.wfr1");
  const Assignments assignments = read_assignments(dir / "assignments.txt");
  std::vector<DefectLabelSet> labels;
  labels.reserve(eval.size());
  for (const WaferMap& map : eval.maps) labels.push_back(map.labels);
  SeedMetrics metrics = evaluate_run(labels, assignments.p);
  metrics.seed = seed;
  write_run_metrics(dir / "metrics.kv", cfg.equivariant ? "rcae" : "cae", "dpmm", metrics);
  return metrics;
}

// ---------------------------------------------------------------------------
// Full run.

int worker_threads() {
  const char* env = std::getenv("DECOR_THREADS");
  if (!env) {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
  }
  int v = 0;
  const auto [p, ec] = std::from_chars(env, env + std::strlen(env), v);
  if (ec != std::errc{} || p != env + std::strlen(env) || v < 1) {
    throw config_error("DECOR_THREADS must be a positive integer");
  }
  return v;
}

RunManifest run_pipeline(const PipelineConfig& cfg) {
  cfg.validate();
  require_out_dir(cfg);
  const int workers = worker_threads();
  std::filesystem::create_directories(cfg.out_dir);

  RunManifest man;
  man.config_text = cfg.config_text;
  man.seeds = cfg.seeds;

  if (cfg.source == "synthetic") {
    stage_step(man.timings, "generate", "stage generate: ", [&] { generate_stage(cfg); });
  } else {
    man.inputs.push_back({cfg.dataset_path.string(), sha256_file_hex(cfg.dataset_path)});
  }

  struct Slot {
    std::vector<StageTiming> timings;
    SeedOutcome outcome;
    std::exception_ptr error;
  };
  std::vector<Slot> slots(cfg.seeds.size());

  auto run_one = [&](std::size_t idx) {
    Slot& slot = slots[idx];
    const std::uint64_t seed = cfg.seeds[idx];
    const std::string dir_label = "seed-" + std::to_string(seed) + "/";
    auto step = [&](const char* name, auto&& fn) -> decltype(fn()) {
      return stage_step(slot.timings, dir_label + name, stage_prefix(name, seed),
                        std::forward<decltype(fn)>(fn));
    };
    try {
      step("preprocess", [&] { preprocess_stage(cfg, seed); });
      slot.outcome.loss_curve =
          step("train-encoder", [&] { return train_encoder_stage(cfg, seed); });
      step("embed", [&] { embed_stage(cfg, seed); });
      step("cluster", [&] { cluster_stage(cfg, seed); });
      const OutlierReport report = step("detect", [&] { return detect_stage(cfg, seed); });
      slot.outcome.flagged = static_cast<int>(report.flagged.size());
      for (const ClusterOutliers& c : report.clusters) {
        int count = 0;
        for (const bool f : c.final_flags) count += f ? 1 : 0;
        slot.outcome.cluster_outliers.emplace_back(c.cluster + 1, count);
      }
      for (const auto& [id, members] : report.skipped) {
        slot.outcome.skipped_clusters.emplace_back(id + 1, members);
      }
      slot.outcome.metrics = step("evaluate", [&] { return evaluate_stage(cfg, seed); });
    } catch (...) {
      slot.error = std::current_exception();
    }
  };

  const int pool_size = std::min<int>(workers, static_cast<int>(cfg.seeds.size()));
  if (pool_size <= 1) {
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(pool_size);
    for (int t = 0; t < pool_size; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < cfg.seeds.size();) run_one(i);
      });
    }
    for (std::thread& th : pool) th.join();
  }

  for (Slot& slot : slots) {
    if (slot.error) std::rethrow_exception(slot.error);
  }
  for (Slot& slot : slots) {
    man.timings.insert(man.timings.end(), slot.timings.begin(), slot.timings.end());
    man.outcomes.push_back(std::move(slot.outcome));
  }

  stage_step(man.timings, "aggregate", "stage aggregate: ", [&] {
    std::vector<SeedMetrics> per_seed;
    per_seed.reserve(cfg.seeds.size());
    for (const std::uint64_t seed : cfg.seeds) {
      const RunMetricsFile file = read_run_metrics(seed_dir(cfg.out_dir, seed) / "metrics.kv");
      per_seed.push_back(file.metrics);
      man.embedding = file.embedding;
      man.clustering = file.clustering;
    }
    man.summary = aggregate(per_seed);
    write_metrics_table(cfg.out_dir / "metrics-table.txt",
                        {MetricsRow{man.embedding, man.clustering, man.summary}});
  });

  auto add_artifact = [&](const std::filesystem::path& rel) {
    man.artifacts.push_back({rel.generic_string(), sha256_file_hex(cfg.out_dir / rel)});
  };
  if (cfg.source == "synthetic") add_artifact("dataset.wfr1");
  for (const std::uint64_t seed : cfg.seeds) {
    const std::filesystem::path rel = "seed-" + std::to_string(seed);
    for (const char* name : {"fit.wfr1", "eval.wfr1", "fit.img", "eval.img", "encoder.rcae",
                             "fit.emb", "eval.emb", "model.dpm", "assignments.txt", "outliers.txt",
                             "metrics.kv"}) {
      add_artifact(rel / name);
    }
  }
  add_artifact("metrics-table.txt");

  write_manifest(man, cfg.out_dir / "manifest.json");
  return man;
}

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path) {
  nlohmann::json j;
  j["config"] = manifest.config_text;
  j["seeds"] = manifest.seeds;
  j["embedding"] = manifest.embedding;
  j["clustering"] = manifest.clustering;

  auto& stages = j["stages"] = nlohmann::json::array();
  for (const StageTiming& t : manifest.timings) {
    stages.push_back({{"stage", t.stage}, {"seconds", t.seconds}});
  }

  auto& runs = j["runs"] = nlohmann::json::array();
  for (const SeedOutcome& o : manifest.outcomes) {
    nlohmann::json r;
    r["seed"] = o.metrics.seed;
    r["k"] = o.metrics.k;
    r["nmi"] = o.metrics.nmi;
    r["ari"] = o.metrics.ari;
    r["flagged"] = o.flagged;
    auto& per_cluster = r["outliers_per_cluster"] = nlohmann::json::array();
    for (const auto& [cluster, count] : o.cluster_outliers) {
      per_cluster.push_back({{"cluster", cluster}, {"count", count}});
    }
    auto& skipped = r["skipped_clusters"] = nlohmann::json::array();
    for (const auto& [cluster, members] : o.skipped_clusters) {
      skipped.push_back({{"cluster", cluster}, {"members", members}});
    }
    r["loss_curve"] = o.loss_curve;
    runs.push_back(std::move(r));
  }

  auto summary_json = [](const MetricsSummary& s) {
    return nlohmann::json{{"mean", s.mean}, {"stddev", s.stddev}, {"std_error", s.std_error}};
  };
  j["summary"] = {{"nmi", summary_json(manifest.summary.nmi)},
                  {"ari", summary_json(manifest.summary.ari)},
                  {"k", summary_json(manifest.summary.k)}};

  auto& artifacts = j["artifacts"] = nlohmann::json::array();
  for (const ArtifactEntry& a : manifest.artifacts) {
    artifacts.push_back({{"path", a.path}, {"sha256", a.sha256}});
  }
  auto& inputs = j["inputs"] = nlohmann::json::array();
  for (const ArtifactEntry& a : manifest.inputs) {
    inputs.push_back({{"path", a.path}, {"sha256", a.sha256}});
  }

  write_file_text(path, j.dump(2) + "\n");
}

}  // namespace decor
