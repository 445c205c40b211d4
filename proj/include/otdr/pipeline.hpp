// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "otdr/checkpoint.hpp"
#include "otdr/config.hpp"
#include "otdr/metrics.hpp"

namespace otdr::pipe {

struct DenoiseRow {
  real bucket_snr_db = 0.0;
  std::string method;
  metrics::Aggregate snr_in, snr_out, snr_imp, rmse, prd, mse;
};

struct DetectionRow {
  real bucket_snr_db = 0.0;
  std::string pipeline;  // "dcae+bilstm" or "bilstm_noisy"
  real accuracy = 0.0;   // event-type accuracy over all windows
  real diagnosis_accuracy = 0.0;  // cause accuracy
  real mean_loc_err_m = 0.0;      // event windows only
  std::size_t n = 0;
  std::size_t n_events = 0;
};

struct DiagnosisBlock {
  real bucket_snr_db = 0.0;
  metrics::ClassReport combined;
  metrics::ClassReport noisy_trained;
};

struct EvalReport {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<DenoiseRow> denoise;
  std::vector<DetectionRow> detection;
  DiagnosisBlock diagnosis;

  nlohmann::json to_json() const;
  void write_files(const std::string& out_dir) const;  // report.json + report.csv
  void write_csv(const std::string& out_dir) const;
};

// artifact paths within a run directory
std::string dataset_path(const RunConfig& cfg, const std::string& kind);
std::string checkpoint_path(const RunConfig& cfg, const std::string& name);

void run_gen(const RunConfig& cfg);
nn::TrainLog run_train_dcae(const RunConfig& cfg);
void run_train_faultnets(const RunConfig& cfg);
void run_train_baselines(const RunConfig& cfg);
EvalReport run_eval(const RunConfig& cfg);
dcae::SweepReport run_sweep(const RunConfig& cfg);
void run_denoise(const RunConfig& cfg, const std::string& trace_csv_in,
                 const std::string& trace_csv_out, int stride);
void run_analyze(const RunConfig& cfg, const std::string& trace_csv_in,
                 const std::string& findings_jsonl_out);
void run_report(const RunConfig& cfg);

// The comparison arm trains on raw noisy windows; this derives that dataset
// from the denoising pairs.
data::Dataset make_noisy_fault_dataset(const data::Dataset& denoise_ds);

// Detection/localization/diagnosis curves for the denoise-then-analyze
// pipeline versus the noisy-trained model, over the test partition.
struct CompareResult {
  std::vector<DetectionRow> rows;
  DiagnosisBlock diagnosis_at_zero;
};
CompareResult compare_with_without_denoising(dcae::DcaeModel& denoiser,
                                             faultnet::FaultNetModel& combined,
                                             faultnet::FaultNetModel& noisy_trained,
                                             const data::Dataset& denoise_test,
                                             real sample_spacing_m);

}  // namespace otdr::pipe
