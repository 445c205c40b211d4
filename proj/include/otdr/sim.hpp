// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <vector>

#include "otdr/common.hpp"

namespace otdr::sim {

inline constexpr real kSpeedOfLightMps = 299792458.0;

struct SimConfig {
  real fiber_length_km = 5.0;
  real attenuation_db_per_km = 0.3;
  real pulse_width_ns = 50.0;
  real sampling_period_ns = 8.0;
  real group_index = 1.468;
  real launch_power_dbm = 10.0;
  real noise_floor_db = -40.0;  // level (relative dB) past a terminating event
  std::uint64_t rng_seed = 1;

  real sample_spacing_m() const {
    return kSpeedOfLightMps * sampling_period_ns * 1e-9 / (2.0 * group_index);
  }
  real pulse_width_m() const {
    return kSpeedOfLightMps * pulse_width_ns * 1e-9 / (2.0 * group_index);
  }
  int trace_samples() const {
    return static_cast<int>(std::ceil(fiber_length_km * 1000.0 / sample_spacing_m()));
  }
  void validate() const;
};

enum class EventType : std::uint8_t { NoEvent = 0, Reflective = 1, NonReflective = 2, Merged = 3 };
enum class EventCause : std::uint8_t { NoEvent = 0, FiberCut = 1, FiberBend = 2, DirtyConnector = 3 };

EventCause cause_for(EventType t);
const char* to_string(EventType t);
const char* to_string(EventCause c);

struct EventSpec {
  real position_m = 0.0;
  EventType type = EventType::Reflective;
  real loss_db = 0.0;
  real reflect_height_db = 0.0;
  bool terminates_fiber = false;
};

struct Trace {
  std::vector<real> samples;  // linear power scaled to [0,1]
  real sample_spacing_m = 0.0;
  real pulse_width_m = 0.0;   // acquisition pulse extent, used as event footprint
  std::vector<EventSpec> events;
  bool is_clean = true;
  std::optional<real> snr_db;  // present iff noisy
};

// Piecewise log-linear backscatter baseline with compact pulse-shaped
// reflection peaks. Events must be sorted, inside the fiber, separated by at
// least one pulse width, with at most one terminating event (the last).
Trace synthesize_clean_trace(const SimConfig& cfg, std::vector<EventSpec> events);

// Adds white Gaussian noise scaled so that 10*log10(sum x^2 / sum (x~-x)^2)
// over the full trace equals target_snr_db. Deterministic per seed.
Trace inject_noise(const Trace& trace, real target_snr_db, std::uint64_t seed);

struct NormalizedSeq {
  std::vector<real> values;
  bool degenerate = false;
};

// y = (x - lo)/(hi - lo) clamped to [0,1]; hi == lo yields all-0.5, flagged.
NormalizedSeq normalize_sequence(const std::vector<real>& x, real lo, real hi);

// Each element zeroed independently with probability mask_prob.
std::vector<real> corrupt_mask(const std::vector<real>& x, real mask_prob, std::uint64_t seed);

inline constexpr int kPositionSentinel = 255;

struct LabeledSequence {
  std::vector<real> noisy;  // normalized with the clean window's min/max, clamped
  std::vector<real> clean;  // normalized to [0,1]
  EventType event_type = EventType::NoEvent;
  int event_position = kPositionSentinel;  // index within the window
  EventCause event_cause = EventCause::NoEvent;
  real snr_in_db = 0.0;  // computed on the pre-normalization window pair
};

struct SegmentOptions {
  int window_len = 100;
  int stride = 100;
};

// Non-overlapping by default; windows seeing two distinct event footprints
// are dropped. The remainder tail that does not fill a window is dropped.
std::vector<LabeledSequence> segment_and_label(const Trace& clean, const Trace& noisy,
                                               SegmentOptions opts = {});

// Per-window SNR of a raw (pre-normalization) pair.
real window_snr_db(const std::vector<real>& clean, const std::vector<real>& noisy,
                   std::size_t offset, std::size_t len);

}  // namespace otdr::sim
