// SPDX-License-Identifier: Apache-2.0
#include "otdr/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace otdr::sim {

namespace {

// Compact pulse bump: unit peak, exact zero at |d| >= width, half height at
// width/2. Solves u^4 - 2u + 1 = 0 for the truncation level.
constexpr real kBumpU = 0.5436890126920764;

real pulse_bump(real d, real width) {
  const real ad = std::abs(d);
  if (ad >= width) return 0.0;
  const real sigma2 = width * width / (8.0 * (-std::log(kBumpU)));
  const real e = kBumpU * kBumpU * kBumpU * kBumpU;  // exp(-width^2 / (2 sigma^2))
  return (std::exp(-ad * ad / (2.0 * sigma2)) - e) / (1.0 - e);
}

}  // namespace

void SimConfig::validate() const {
  require(fiber_length_km > 0, "sim: fiber_length_km must be positive");
  require(attenuation_db_per_km > 0, "sim: attenuation must be positive");
  require(pulse_width_ns > 0 && sampling_period_ns > 0, "sim: pulse/sampling must be positive");
  require(group_index > 0, "sim: group_index must be positive");
  require(sample_spacing_m() > 0, "sim: sample spacing must be positive");
  require(pulse_width_ns >= sampling_period_ns, "sim: pulse width must cover a sampling period");
}

EventCause cause_for(EventType t) {
  switch (t) {
    case EventType::Reflective: return EventCause::FiberCut;
    case EventType::NonReflective: return EventCause::FiberBend;
    case EventType::Merged: return EventCause::DirtyConnector;
    default: return EventCause::NoEvent;
  }
}

const char* to_string(EventType t) {
  switch (t) {
    case EventType::NoEvent: return "no_event";
    case EventType::Reflective: return "reflective";
    case EventType::NonReflective: return "non_reflective";
    default: return "merged";
  }
}

const char* to_string(EventCause c) {
  switch (c) {
    case EventCause::NoEvent: return "no_event";
    case EventCause::FiberCut: return "fiber_cut";
    case EventCause::FiberBend: return "fiber_bend";
    default: return "dirty_connector";
  }
}

Trace synthesize_clean_trace(const SimConfig& cfg, std::vector<EventSpec> events) {
  cfg.validate();
  const real fiber_len_m = cfg.fiber_length_km * 1000.0;
  const real pw_m = cfg.pulse_width_m();
  for (std::size_t i = 0; i < events.size(); ++i) {
    const EventSpec& e = events[i];
    require(e.position_m >= 0 && e.position_m <= fiber_len_m, "sim: event outside fiber");
    require(e.loss_db >= 0 && e.reflect_height_db >= 0, "sim: negative event magnitudes");
    switch (e.type) {
      case EventType::Reflective:
        require(e.reflect_height_db > 0, "sim: reflective event needs a reflection height");
        break;
      case EventType::NonReflective:
        require(e.reflect_height_db == 0, "sim: non-reflective event cannot reflect");
        break;
      case EventType::Merged:
        require(e.loss_db > 0 && e.reflect_height_db > 0,
                "sim: merged event needs both loss and reflection");
        break;
      default:
        throw invalid_argument_error("sim: NoEvent is not a placeable event");
    }
    if (i > 0) {
      require(events[i].position_m > events[i - 1].position_m, "sim: events must be sorted");
      require(events[i].position_m - events[i - 1].position_m >= pw_m,
              "sim: event footprints overlap (closer than one pulse width)");
      require(!events[i - 1].terminates_fiber, "sim: terminating event must be last");
    }
  }

  const int n = cfg.trace_samples();
  const real dz = cfg.sample_spacing_m();
  const real p0 = cfg.launch_power_dbm;
  const real two_alpha = 2.0 * cfg.attenuation_db_per_km / 1000.0;  // dB per meter, two-way

  std::vector<real> db(static_cast<std::size_t>(n));
  real term_pos = std::numeric_limits<real>::infinity();
  for (const auto& e : events)
    if (e.terminates_fiber) term_pos = e.position_m;

  for (int i = 0; i < n; ++i) {
    const real z = i * dz;
    real v = p0 - two_alpha * z;
    for (const auto& e : events)
      if (z > e.position_m) v -= 2.0 * e.loss_db;
    if (z > term_pos) v = cfg.noise_floor_db;
    db[static_cast<std::size_t>(i)] = v;
  }

  std::vector<real> lin(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) lin[static_cast<std::size_t>(i)] = std::pow(10.0, db[static_cast<std::size_t>(i)] / 10.0);

  // Reflection peaks rise from the pre-event backscatter level.
  for (const auto& e : events) {
    if (e.type == EventType::NonReflective) continue;
    const real base_db = p0 - two_alpha * e.position_m -
                         [&] {
                           real acc = 0.0;
                           for (const auto& o : events)
                             if (o.position_m < e.position_m) acc += 2.0 * o.loss_db;
                           return acc;
                         }();
    const real amp = std::pow(10.0, base_db / 10.0) * (std::pow(10.0, e.reflect_height_db / 10.0) - 1.0);
    const int lo = std::max(0, static_cast<int>(std::floor((e.position_m - pw_m) / dz)));
    const int hi = std::min(n - 1, static_cast<int>(std::ceil((e.position_m + pw_m) / dz)));
    for (int i = lo; i <= hi; ++i)
      lin[static_cast<std::size_t>(i)] += amp * pulse_bump(i * dz - e.position_m, pw_m);
  }

  real peak = 0.0;
  for (real v : lin) peak = std::max(peak, v);
  for (real& v : lin) v /= peak;

  Trace t;
  t.samples = std::move(lin);
  t.sample_spacing_m = dz;
  t.pulse_width_m = pw_m;
  t.events = std::move(events);
  t.is_clean = true;
  return t;
}

Trace inject_noise(const Trace& trace, real target_snr_db, std::uint64_t seed) {
  require(trace.is_clean, "inject_noise: input must be a clean trace");
  require(std::isfinite(target_snr_db), "inject_noise: target SNR must be finite");
  real sig_energy = 0.0;
  for (real v : trace.samples) sig_energy += v * v;
  require(sig_energy > 0.0, "inject_noise: all-zero trace has undefined SNR");

  Rng rng(seed);
  std::vector<real> noise(trace.samples.size());
  real e2 = 0.0;
  for (auto& v : noise) {
    v = rng.normal();
    e2 += v * v;
  }
  const real target_energy = sig_energy * std::pow(10.0, -target_snr_db / 10.0);
  const real s = std::sqrt(target_energy / e2);

  Trace out = trace;
  for (std::size_t i = 0; i < noise.size(); ++i) out.samples[i] += s * noise[i];
  out.is_clean = false;
  out.snr_db = target_snr_db;
  return out;
}

NormalizedSeq normalize_sequence(const std::vector<real>& x, real lo, real hi) {
  require(hi >= lo, "normalize_sequence: hi must not be below lo");
  NormalizedSeq out;
  out.values.resize(x.size());
  if (hi == lo) {
    std::fill(out.values.begin(), out.values.end(), 0.5);
    out.degenerate = true;
    return out;
  }
  const real inv = 1.0 / (hi - lo);
  for (std::size_t i = 0; i < x.size(); ++i)
    out.values[i] = std::clamp((x[i] - lo) * inv, 0.0, 1.0);
  return out;
}

std::vector<real> corrupt_mask(const std::vector<real>& x, real mask_prob, std::uint64_t seed) {
  require(mask_prob >= 0.0 && mask_prob <= 1.0, "corrupt_mask: probability outside [0,1]");
  Rng rng(seed);
  std::vector<real> out = x;
  for (auto& v : out)
    if (rng.uniform() < mask_prob) v = 0.0;
  return out;
}

real window_snr_db(const std::vector<real>& clean, const std::vector<real>& noisy,
                   std::size_t offset, std::size_t len) {
  real se = 0.0, ne = 0.0;
  for (std::size_t i = offset; i < offset + len; ++i) {
    se += clean[i] * clean[i];
    const real d = noisy[i] - clean[i];
    ne += d * d;
  }
  if (ne == 0.0) return std::numeric_limits<real>::infinity();
  return 10.0 * std::log10(se / ne);
}

std::vector<LabeledSequence> segment_and_label(const Trace& clean, const Trace& noisy,
                                               SegmentOptions opts) {
  require(clean.samples.size() == noisy.samples.size(), "segment: traces must be aligned");
  require(clean.sample_spacing_m == noisy.sample_spacing_m, "segment: spacing mismatch");
  require(opts.window_len >= 2 && opts.stride >= 1, "segment: bad window/stride");
  const auto n = static_cast<std::int64_t>(clean.samples.size());
  const real dz = clean.sample_spacing_m;
  const real pw = clean.pulse_width_m;  // footprint half-width

  std::vector<LabeledSequence> out;
  if (n < opts.window_len) return out;
  const std::int64_t n_windows = (n - opts.window_len) / opts.stride + 1;
  out.reserve(static_cast<std::size_t>(n_windows));

  for (std::int64_t wi = 0; wi < n_windows; ++wi) {
    const std::int64_t w0 = wi * opts.stride;
    const std::int64_t w1 = w0 + opts.window_len;  // exclusive

    // collect events whose footprint [pos - pw, pos + pw] intersects the window
    int n_touching = 0;
    const EventSpec* labeled = nullptr;
    for (const auto& e : clean.events) {
      const real lo_m = e.position_m - pw;
      const real hi_m = e.position_m + pw;
      const real wlo_m = static_cast<real>(w0) * dz;
      const real whi_m = static_cast<real>(w1 - 1) * dz;
      if (hi_m < wlo_m || lo_m > whi_m) continue;
      ++n_touching;
      const std::int64_t pos_idx = static_cast<std::int64_t>(std::llround(e.position_m / dz));
      if (pos_idx >= w0 && pos_idx < w1) labeled = &e;
    }
    if (n_touching >= 2) continue;  // ambiguous ground truth, dropped

    LabeledSequence seq;
    const auto off = static_cast<std::size_t>(w0);
    const auto len = static_cast<std::size_t>(opts.window_len);
    std::vector<real> cwin(clean.samples.begin() + w0, clean.samples.begin() + w1);
    std::vector<real> nwin(noisy.samples.begin() + w0, noisy.samples.begin() + w1);
    const real lo = *std::min_element(cwin.begin(), cwin.end());
    const real hi = *std::max_element(cwin.begin(), cwin.end());
    seq.clean = normalize_sequence(cwin, lo, hi).values;
    seq.noisy = normalize_sequence(nwin, lo, hi).values;
    seq.snr_in_db = window_snr_db(clean.samples, noisy.samples, off, len);

    if (labeled) {
      seq.event_type = labeled->type;
      seq.event_cause = cause_for(labeled->type);
      seq.event_position =
          static_cast<int>(std::llround(labeled->position_m / dz) - w0);
    }
    out.push_back(std::move(seq));
  }
  return out;
}

}  // namespace otdr::sim
