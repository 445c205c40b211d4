// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>

#include "otdr/sim.hpp"

namespace otdr::data {

enum class Partition : int { Train = 0, Val = 1, Test = 2 };

struct Record {
  std::vector<float> input;   // model input (noisy, or corrupted clean)
  std::vector<float> target;  // clean reference
  std::uint8_t e_t = 0;
  std::uint8_t e_p = sim::kPositionSentinel;
  std::uint8_t e_c = 0;
  float snr_in = 0.0f;
  int bucket = 0;  // index into snr_grid (generation target), metadata only
};

struct Span {
  std::size_t offset = 0;
  std::size_t count = 0;
};

// Records are stored sorted by (partition, bucket); spans index into them.
struct Dataset {
  std::string kind;  // "dcae" or "fault"
  int seq_len = 100;
  std::vector<real> snr_grid;
  std::vector<Record> records;
  std::array<Span, 3> partitions;
  std::array<std::vector<Span>, 3> buckets;  // [partition][bucket]
  std::uint64_t seed = 0;
  std::string config_hash;

  const Span& part(Partition p) const { return partitions[static_cast<std::size_t>(p)]; }
  const Span& bucket_span(Partition p, int b) const {
    return buckets[static_cast<std::size_t>(p)][static_cast<std::size_t>(b)];
  }
};

struct BuildOptions {
  int n_traces = 2700;
  std::vector<real> snr_grid = {-5, -3, -1, 0, 1, 3, 5, 10, 15};
  int window_len = 100;
  int stride = 100;
  std::array<real, 3> split = {0.6, 0.2, 0.2};
  // target dataset proportions: no-event, reflective, non-reflective, merged.
  // Traces carry a handful of events (a loss budget keeps the far end alive);
  // no-event windows are subsampled to reach the first proportion.
  std::array<real, 4> event_mix = {0.4, 0.2, 0.2, 0.2};
  int events_per_type_lo = 1;
  int events_per_type_hi = 2;
  real mask_prob_lo = 0.02;
  real mask_prob_hi = 0.15;
  real loss_db_lo = 0.8;
  real loss_db_hi = 3.0;
  real reflect_db_lo = 3.0;
  real reflect_db_hi = 9.0;
  std::uint64_t seed = 1;
  std::string config_hash;
};

struct DatasetPair {
  Dataset denoise;  // (noisy, clean) pairs
  Dataset fault;    // (corrupted clean, labels)
};

// Synthesizes n_traces with parameterized events, injects per-trace noise over
// the SNR grid, segments/labels/normalizes windows, and assembles both model
// datasets with a stratified (event type x SNR bucket) 60/20/20 split.
DatasetPair build_datasets(const sim::SimConfig& cfg, const BuildOptions& opts);

void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);
void export_dataset_csv(const Dataset& ds, const std::string& path);

// Traces exchanged as CSV (index, distance_m, power).
void save_trace_csv(const sim::Trace& t, const std::string& path);
sim::Trace load_trace_csv(const std::string& path);

}  // namespace otdr::data
