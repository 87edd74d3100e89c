#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "decor/cluster.hpp"
#include "decor/common.hpp"
#include "decor/convert.hpp"
#include "decor/dataset_io.hpp"
#include "decor/outlier.hpp"
#include "decor/pipeline.hpp"
#include "decor/render.hpp"

namespace {

int fail(const char* what, int code) {
  std::fprintf(stderr, "decor: error: %s\n", what);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wafer defect map clustering and outlier detection pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::string convert_in;
  std::string convert_out;
  int cluster_id = 0;

  auto* generate = app.add_subcommand("generate", "write the synthetic dataset");
  auto* convert = app.add_subcommand("convert", "convert a numpy .npz archive to WFR1");
  auto* preprocess =
      app.add_subcommand("preprocess", "split the dataset and write per-seed image stacks");
  auto* train_encoder = app.add_subcommand("train-encoder", "train the encoder on fit.img");
  auto* embed = app.add_subcommand("embed", "embed the image stacks with the saved encoder");
  auto* cluster =
      app.add_subcommand("cluster", "fit the mixture and assign the evaluation embeddings");
  auto* detect = app.add_subcommand("detect", "run the per-cluster outlier ensemble");
  auto* evaluate = app.add_subcommand("evaluate", "score assignments against dataset labels");
  auto* render = app.add_subcommand("render", "render one cluster as a PPM montage");
  auto* pipeline = app.add_subcommand("pipeline", "run every stage for every seed");

  convert->add_option("input", convert_in, "source .npz archive")->required();
  convert->add_option("output", convert_out, "destination .wfr1 file")->required();
  render->add_option("--cluster", cluster_id, "1-based cluster id")->required();

  const std::vector<CLI::App*> config_subs = {generate, preprocess, train_encoder, embed,
                                              cluster,  detect,     evaluate,      render,
                                              pipeline};
  for (CLI::App* sub : config_subs) {
    sub->add_option("--config", config_path, "pipeline config file")->required();
    sub->add_option("--out", out_dir, "output directory (overrides run.out)");
    sub->add_option("--seed", seed,
                    "seed override: the data seed for generate, the run seed list for "
                    "pipeline, the run seed otherwise");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (convert->parsed()) {
      const long count = decor::convert_external(convert_in, convert_out);
      std::printf("wrote %s (%ld maps)\n", convert_out.c_str(), count);
      return 0;
    }

    decor::PipelineConfig cfg = decor::load_pipeline_config(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    bool seed_given = false;
    for (CLI::App* sub : config_subs) {
      if (sub->parsed() && sub->count("--seed") > 0) seed_given = true;
    }

    if (generate->parsed()) {
      if (seed_given) cfg.data_seed = seed;
      decor::generate_stage(cfg);
      std::printf("wrote %s\n", (cfg.out_dir / "dataset.wfr1").string().c_str());
      return 0;
    }

    if (pipeline->parsed()) {
      if (seed_given) cfg.seeds = {seed};
      const decor::RunManifest man = decor::run_pipeline(cfg);
      for (const decor::SeedOutcome& o : man.outcomes) {
        std::printf("seed %llu: K=%d nmi=%.4f ari=%.4f flagged=%d\n",
                    static_cast<unsigned long long>(o.metrics.seed), o.metrics.k, o.metrics.nmi,
                    o.metrics.ari, o.flagged);
      }
      std::printf("nmi %.4f +- %.4f | ari %.4f +- %.4f | K %.1f\n", man.summary.nmi.mean,
                  man.summary.nmi.stddev, man.summary.ari.mean, man.summary.ari.stddev,
                  man.summary.k.mean);
      std::printf("wrote %s\n", (cfg.out_dir / "manifest.json").string().c_str());
      return 0;
    }

    const std::uint64_t run_seed = seed_given ? seed : cfg.seeds.front();
    if (preprocess->parsed()) {
      decor::preprocess_stage(cfg, run_seed);
    } else if (train_encoder->parsed()) {
      const std::vector<double> curve = decor::train_encoder_stage(cfg, run_seed);
      std::printf("trained %zu epochs, final mse %.6g\n", curve.size(), curve.back());
    } else if (embed->parsed()) {
      decor::embed_stage(cfg, run_seed);
    } else if (cluster->parsed()) {
      std::printf("K=%d\n", decor::cluster_stage(cfg, run_seed));
    } else if (detect->parsed()) {
      const decor::OutlierReport report = decor::detect_stage(cfg, run_seed);
      std::printf("flagged %zu samples\n", report.flagged.size());
    } else if (evaluate->parsed()) {
      const decor::SeedMetrics m = decor::evaluate_stage(cfg, run_seed);
      std::printf("k=%d nmi=%.4f ari=%.4f\n", m.k, m.nmi, m.ari);
    } else if (render->parsed()) {
      const std::filesystem::path dir = decor::seed_dir(cfg.out_dir, run_seed);
      const decor::Dataset ds = decor::read_dataset(dir / "eval.wfr1");
      const decor::Assignments assignments = decor::read_assignments(dir / "assignments.txt");
      const decor::OutlierReport report = decor::read_outlier_report(dir / "outliers.txt");
      const std::filesystem::path out = dir / ("cluster-" + std::to_string(cluster_id) + ".ppm");
      decor::render_montage(ds, assignments, report, cluster_id - 1, out);
      std::printf("wrote %s\n", out.string().c_str());
    }
    return 0;
  } catch (const decor::config_error& e) {
    return fail(e.what(), 2);
  } catch (const decor::format_error& e) {
    return fail(e.what(), 3);
  } catch (const decor::numerical_error& e) {
    return fail(e.what(), 4);
  } catch (const decor::shape_error& e) {
    return fail(e.what(), 2);
  } catch (const std::exception& e) {
    return fail(e.what(), 2);
  }
}
