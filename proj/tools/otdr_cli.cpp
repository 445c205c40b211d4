// SPDX-License-Identifier: Apache-2.0
#include <CLI11.hpp>

#include <cstdio>
#include <exception>

#include "otdr/pipeline.hpp"

using namespace otdr;

namespace {

pipe::RunConfig resolve_config(const std::string& config_path, std::int64_t seed_override,
                               const std::string& out_override,
                               const std::vector<real>& snr_override) {
  pipe::RunConfig cfg =
      config_path.empty() ? pipe::RunConfig() : pipe::RunConfig::load(config_path);
  if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
  if (!out_override.empty()) cfg.out_dir = out_override;
  if (!snr_override.empty()) cfg.dataset.snr_grid = snr_override;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"OTDR trace simulation, denoising and fault analysis toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  std::string config_path;
  std::int64_t seed_override = -1;
  std::string out_override;
  std::vector<real> snr_override;
  app.add_option("--config", config_path, "run configuration file (JSON)");
  app.add_option("--seed", seed_override, "override the run seed");
  app.add_option("--out", out_override, "override the output directory");
  app.add_option("--snr", snr_override, "override the SNR grid (dB list)");

  auto* gen = app.add_subcommand("gen", "synthesize traces and build both datasets");
  auto* train_dcae = app.add_subcommand("train-dcae", "train the denoising autoencoder");
  auto* train_faultnet =
      app.add_subcommand("train-faultnet", "train both fault analyzers (clean and noisy arms)");
  auto* train_baselines =
      app.add_subcommand("train-baselines", "tune classical baselines and train reference denoisers");
  auto* eval = app.add_subcommand("eval", "evaluate everything and emit the report");
  auto* sweep = app.add_subcommand("sweep", "hyperparameter sweep (depth, kernel, window length)");
  auto* report = app.add_subcommand("report", "re-emit the CSV view of a stored report");

  auto* denoise = app.add_subcommand("denoise", "denoise a trace CSV file");
  std::string den_in, den_out;
  int den_stride = 50;
  denoise->add_option("input", den_in, "trace CSV (index,distance_m,power)")->required();
  denoise->add_option("output", den_out, "output trace CSV")->required();
  denoise->add_option("--stride", den_stride, "window stride for stitching (<= 100)");

  auto* analyze = app.add_subcommand("analyze", "detect/localize/diagnose events in a trace CSV");
  std::string an_in, an_out;
  analyze->add_option("input", an_in, "trace CSV")->required();
  analyze->add_option("output", an_out, "findings (JSON lines)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? 1 : 0;
  }

  try {
    pipe::RunConfig cfg = resolve_config(config_path, seed_override, out_override, snr_override);
    if (gen->parsed()) {
      pipe::run_gen(cfg);
      std::printf("datasets written to %s (config %s)\n", cfg.out_dir.c_str(),
                  cfg.config_hash().c_str());
    } else if (train_dcae->parsed()) {
      auto log = pipe::run_train_dcae(cfg);
      std::printf("dcae trained: best val mse %.6f at epoch %d (%.0f s)\n", log.best_val_loss,
                  log.best_epoch, log.seconds);
    } else if (train_faultnet->parsed()) {
      pipe::run_train_faultnets(cfg);
      std::printf("fault analyzers trained\n");
    } else if (train_baselines->parsed()) {
      pipe::run_train_baselines(cfg);
      std::printf("baselines tuned and reference denoisers trained\n");
    } else if (eval->parsed()) {
      auto rep = pipe::run_eval(cfg);
      std::printf("report written: %zu denoise rows, %zu detection rows\n", rep.denoise.size(),
                  rep.detection.size());
    } else if (sweep->parsed()) {
      auto rep = pipe::run_sweep(cfg);
      std::printf("sweep finished: %zu grid points\n", rep.rows.size());
    } else if (report->parsed()) {
      pipe::run_report(cfg);
      std::printf("report.csv refreshed\n");
    } else if (denoise->parsed()) {
      pipe::run_denoise(cfg, den_in, den_out, den_stride);
      std::printf("denoised trace written to %s\n", den_out.c_str());
    } else if (analyze->parsed()) {
      pipe::run_analyze(cfg, an_in, an_out);
      std::printf("findings written to %s\n", an_out.c_str());
    }
  } catch (const invalid_argument_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "failure: %s\n", e.what());
    return 2;
  }
  return 0;
}
