// SPDX-License-Identifier: Apache-2.0
#include "otdr/dataset.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace otdr::data {

using nlohmann::json;

namespace {

struct StratumAlloc {
  std::array<std::size_t, 3> counts;
};

// Largest-remainder allocation; per-stratum counts stay within one sample of
// the exact proportions.
StratumAlloc allocate_split(std::size_t n, const std::array<real, 3>& split) {
  StratumAlloc a{};
  std::array<real, 3> exact{};
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    exact[static_cast<std::size_t>(i)] = split[static_cast<std::size_t>(i)] * static_cast<real>(n);
    a.counts[static_cast<std::size_t>(i)] = static_cast<std::size_t>(std::floor(exact[static_cast<std::size_t>(i)]));
    assigned += a.counts[static_cast<std::size_t>(i)];
  }
  std::array<int, 3> order = {0, 1, 2};
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    const real fx = exact[static_cast<std::size_t>(x)] - std::floor(exact[static_cast<std::size_t>(x)]);
    const real fy = exact[static_cast<std::size_t>(y)] - std::floor(exact[static_cast<std::size_t>(y)]);
    if (fx != fy) return fx > fy;
    return x < y;
  });
  std::size_t rem = n - assigned;
  for (std::size_t i = 0; i < rem; ++i) ++a.counts[static_cast<std::size_t>(order[i % 3])];
  return a;
}

void write_u64(std::ostream& os, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t read_u64(std::istream& is) {
  unsigned char buf[8];
  is.read(reinterpret_cast<char*>(buf), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

void write_f32(std::ostream& os, const std::vector<float>& v) {
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(float)));
}

constexpr char kMagic[8] = {'O', 'T', 'D', 'R', 'D', 'S', '1', '\0'};

}  // namespace

DatasetPair build_datasets(const sim::SimConfig& cfg, const BuildOptions& opts) {
  cfg.validate();
  const int grid_n = static_cast<int>(opts.snr_grid.size());
  require(grid_n >= 1, "build_datasets: empty SNR grid");
  require(opts.n_traces >= 1, "build_datasets: need at least one trace");
  require(std::abs(opts.split[0] + opts.split[1] + opts.split[2] - 1.0) < 1e-9,
          "build_datasets: split must sum to 1");

  const real dz = cfg.sample_spacing_m();
  const real pw_m = cfg.pulse_width_m();
  const int margin = static_cast<int>(std::ceil(pw_m / dz)) + 1;
  require(opts.window_len > 2 * margin + 2,
          "build_datasets: window too short for the pulse footprint");
  const int n_samples = cfg.trace_samples();
  const int n_windows = (n_samples - opts.window_len) / opts.stride + 1;
  require(n_windows >= 1, "build_datasets: trace shorter than one window");

  struct Seq {
    sim::LabeledSequence s;
    int bucket;
    std::uint64_t uid;
  };
  std::vector<std::vector<Seq>> per_trace(static_cast<std::size_t>(opts.n_traces));

  // expected retained windows per trace, used only for sizing hints
  const real mix_events = opts.event_mix[1] + opts.event_mix[2] + opts.event_mix[3];
  require(mix_events > 0 && opts.event_mix[0] >= 0, "build_datasets: bad event mix");

  parallel_for(opts.n_traces, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t ti = lo; ti < hi; ++ti) {
      Rng rng = Rng::child(opts.seed, static_cast<std::uint64_t>(ti));
      const int bucket = static_cast<int>(ti % grid_n);
      const real target_snr = opts.snr_grid[static_cast<std::size_t>(bucket)];

      // per-type event counts scaled by the configured mix (0.2 = one base unit)
      const int span = opts.events_per_type_hi - opts.events_per_type_lo + 1;
      auto draw_count = [&](int type_idx) {
        const int base =
            opts.events_per_type_lo + static_cast<int>(rng.index(static_cast<std::size_t>(span)));
        const real w = opts.event_mix[static_cast<std::size_t>(type_idx)] / 0.2;
        return static_cast<int>(std::llround(base * w));
      };
      const int n_refl = draw_count(1);
      const int n_nonrefl = draw_count(2);
      const int n_merged = draw_count(3);
      const int n_events = n_refl + n_nonrefl + n_merged;

      // distinct window slots, one event at most per window
      std::vector<int> slots(static_cast<std::size_t>(n_windows));
      for (int w = 0; w < n_windows; ++w) slots[static_cast<std::size_t>(w)] = w;
      rng.shuffle(slots);
      // types are assigned against the still-shuffled slot order so that no
      // fault class is confounded with position along the fiber
      std::vector<int> event_slots(slots.begin(), slots.begin() + std::min(n_events, n_windows));

      std::vector<sim::EventSpec> events;
      events.reserve(event_slots.size());
      // in-window positions sit on a coarse grid: events model discrete
      // physical sites (connectors, splices) sampled by the acquisition
      const int grid_step = 5;
      const int grid_lo = (margin + grid_step - 1) / grid_step;
      const int grid_hi = (opts.window_len - 1 - margin) / grid_step;
      for (std::size_t k = 0; k < event_slots.size(); ++k) {
        const int w = event_slots[k];
        const int rel = grid_step * (grid_lo + static_cast<int>(rng.index(
                                        static_cast<std::size_t>(grid_hi - grid_lo + 1))));
        const real loss = rng.uniform(opts.loss_db_lo, opts.loss_db_hi);
        const real refl = rng.uniform(opts.reflect_db_lo, opts.reflect_db_hi);
        sim::EventSpec e;
        e.position_m = (static_cast<real>(w * opts.stride + rel)) * dz;
        if (k < static_cast<std::size_t>(n_refl)) {
          e.type = sim::EventType::Reflective;
          e.reflect_height_db = refl;
          e.loss_db = 0.05 * loss;  // small insertion loss
        } else if (k < static_cast<std::size_t>(n_refl + n_nonrefl)) {
          e.type = sim::EventType::NonReflective;
          e.loss_db = loss;
        } else {
          e.type = sim::EventType::Merged;
          e.loss_db = loss;
          e.reflect_height_db = refl;
        }
        events.push_back(e);
      }
      std::sort(events.begin(), events.end(),
                [](const sim::EventSpec& a, const sim::EventSpec& b) {
                  return a.position_m < b.position_m;
                });

      sim::Trace clean = sim::synthesize_clean_trace(cfg, std::move(events));
      sim::Trace noisy = sim::inject_noise(clean, target_snr,
                                           Rng::child(opts.seed, 0x9000000ull + static_cast<std::uint64_t>(ti)).next_u64());
      sim::SegmentOptions seg;
      seg.window_len = opts.window_len;
      seg.stride = opts.stride;
      auto seqs = sim::segment_and_label(clean, noisy, seg);

      // keep every event window; subsample no-event windows to the target mix
      std::vector<std::size_t> event_wins, empty_wins;
      for (std::size_t wi = 0; wi < seqs.size(); ++wi) {
        if (seqs[wi].event_type == sim::EventType::NoEvent)
          empty_wins.push_back(wi);
        else
          event_wins.push_back(wi);
      }
      rng.shuffle(empty_wins);
      const std::size_t keep_empty = std::min(
          empty_wins.size(),
          static_cast<std::size_t>(std::llround(
              static_cast<real>(event_wins.size()) * opts.event_mix[0] / mix_events)));
      empty_wins.resize(keep_empty);

      std::vector<std::size_t> kept = event_wins;
      kept.insert(kept.end(), empty_wins.begin(), empty_wins.end());
      std::sort(kept.begin(), kept.end());

      auto& dst = per_trace[static_cast<std::size_t>(ti)];
      dst.reserve(kept.size());
      for (std::size_t wi : kept) {
        Seq q;
        q.s = std::move(seqs[wi]);
        q.bucket = bucket;
        q.uid = static_cast<std::uint64_t>(ti) * 4096ull + wi;
        dst.push_back(std::move(q));
      }
    }
  });

  // strata keyed by (event type, bucket)
  const int n_strata = 4 * grid_n;
  std::vector<std::vector<Seq>> strata(static_cast<std::size_t>(n_strata));
  for (auto& tr : per_trace)
    for (auto& q : tr) {
      const int et = static_cast<int>(q.s.event_type);
      strata[static_cast<std::size_t>(et * grid_n + q.bucket)].push_back(std::move(q));
    }

  std::size_t min_stratum = SIZE_MAX;
  for (const auto& s : strata) min_stratum = std::min(min_stratum, s.size());
  if (min_stratum < 5) {
    const int needed = opts.n_traces * 5 / std::max<int>(1, static_cast<int>(min_stratum) + 1);
    throw invalid_argument_error(
        "build_datasets: n_traces too small for stratification (smallest stratum " +
        std::to_string(min_stratum) + " < 5); need roughly " +
        std::to_string(std::max(needed, opts.n_traces * 2)) + " traces");
  }

  // partition each stratum deterministically
  struct Tagged {
    Seq q;
    Partition part;
  };
  std::vector<Tagged> tagged;
  for (int si = 0; si < n_strata; ++si) {
    auto& s = strata[static_cast<std::size_t>(si)];
    Rng shuffle_rng = Rng::child(opts.seed, 0xA000000ull + static_cast<std::uint64_t>(si));
    shuffle_rng.shuffle(s);
    const StratumAlloc alloc = allocate_split(s.size(), opts.split);
    std::size_t idx = 0;
    for (int p = 0; p < 3; ++p)
      for (std::size_t i = 0; i < alloc.counts[static_cast<std::size_t>(p)]; ++i, ++idx) {
        tagged.push_back({std::move(s[idx]), static_cast<Partition>(p)});
      }
  }

  // order records by (partition, bucket, uid) so spans are contiguous and
  // files are byte-stable
  std::sort(tagged.begin(), tagged.end(), [](const Tagged& a, const Tagged& b) {
    if (a.part != b.part) return static_cast<int>(a.part) < static_cast<int>(b.part);
    if (a.q.bucket != b.q.bucket) return a.q.bucket < b.q.bucket;
    return a.q.uid < b.q.uid;
  });

  auto make_dataset = [&](const std::string& kind) {
    Dataset ds;
    ds.kind = kind;
    ds.seq_len = opts.window_len;
    ds.snr_grid = opts.snr_grid;
    ds.seed = opts.seed;
    ds.config_hash = opts.config_hash;
    for (auto& b : ds.buckets) b.assign(static_cast<std::size_t>(grid_n), Span{});
    return ds;
  };
  DatasetPair pair{make_dataset("dcae"), make_dataset("fault")};

  auto push = [&](Dataset& ds, const Tagged& t, std::vector<float> input) {
    Record r;
    r.input = std::move(input);
    r.target.resize(t.q.s.clean.size());
    for (std::size_t i = 0; i < t.q.s.clean.size(); ++i)
      r.target[i] = static_cast<float>(t.q.s.clean[i]);
    r.e_t = static_cast<std::uint8_t>(t.q.s.event_type);
    r.e_p = t.q.s.event_type == sim::EventType::NoEvent
                ? static_cast<std::uint8_t>(sim::kPositionSentinel)
                : static_cast<std::uint8_t>(t.q.s.event_position);
    r.e_c = static_cast<std::uint8_t>(t.q.s.event_cause);
    r.snr_in = static_cast<float>(t.q.s.snr_in_db);
    r.bucket = t.q.bucket;
    ds.records.push_back(std::move(r));
  };

  for (const Tagged& t : tagged) {
    std::vector<float> noisy(t.q.s.noisy.size());
    for (std::size_t i = 0; i < noisy.size(); ++i) noisy[i] = static_cast<float>(t.q.s.noisy[i]);
    push(pair.denoise, t, std::move(noisy));

    Rng mask_rng = Rng::child(opts.seed, 0xB000000ull + t.q.uid);
    const real p = mask_rng.uniform(opts.mask_prob_lo, opts.mask_prob_hi);
    auto corrupted = sim::corrupt_mask(t.q.s.clean, p, mask_rng.next_u64());
    std::vector<float> cin(corrupted.size());
    for (std::size_t i = 0; i < cin.size(); ++i) cin[i] = static_cast<float>(corrupted[i]);
    push(pair.fault, t, std::move(cin));
  }

  // spans
  auto fill_spans = [&](Dataset& ds) {
    std::size_t i = 0;
    for (int p = 0; p < 3; ++p) {
      Span& ps = ds.partitions[static_cast<std::size_t>(p)];
      ps.offset = i;
      while (i < tagged.size() && static_cast<int>(tagged[i].part) == p) {
        ++i;
      }
      ps.count = i - ps.offset;
      std::size_t j = ps.offset;
      for (int b = 0; b < grid_n; ++b) {
        Span& bs = ds.buckets[static_cast<std::size_t>(p)][static_cast<std::size_t>(b)];
        bs.offset = j;
        while (j < ps.offset + ps.count && tagged[j].q.bucket == b) ++j;
        bs.count = j - bs.offset;
      }
    }
  };
  fill_spans(pair.denoise);
  fill_spans(pair.fault);
  return pair;
}

void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  require(os.good(), "save_dataset: cannot open " + path);
  os.write(kMagic, 8);

  json meta;
  meta["kind"] = ds.kind;
  meta["seq_len"] = ds.seq_len;
  meta["snr_grid"] = ds.snr_grid;
  meta["seed"] = ds.seed;
  meta["config_hash"] = ds.config_hash;
  meta["count"] = ds.records.size();
  json parts = json::array();
  const char* names[3] = {"train", "val", "test"};
  for (int p = 0; p < 3; ++p) {
    json jp;
    jp["name"] = names[p];
    jp["offset"] = ds.partitions[static_cast<std::size_t>(p)].offset;
    jp["count"] = ds.partitions[static_cast<std::size_t>(p)].count;
    json jb = json::array();
    for (std::size_t b = 0; b < ds.snr_grid.size(); ++b) {
      const Span& s = ds.buckets[static_cast<std::size_t>(p)][b];
      jb.push_back({{"snr_db", ds.snr_grid[b]}, {"offset", s.offset}, {"count", s.count}});
    }
    jp["buckets"] = jb;
    parts.push_back(jp);
  }
  meta["partitions"] = parts;
  const std::string mjson = meta.dump();
  write_u64(os, mjson.size());
  os.write(mjson.data(), static_cast<std::streamsize>(mjson.size()));

  write_u64(os, ds.records.size());
  for (const Record& r : ds.records) {
    write_f32(os, r.input);
    write_f32(os, r.target);
    os.put(static_cast<char>(r.e_t));
    os.put(static_cast<char>(r.e_p));
    os.put(static_cast<char>(r.e_c));
    os.write(reinterpret_cast<const char*>(&r.snr_in), sizeof(float));
  }
  require(os.good(), "save_dataset: write failed for " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), "load_dataset: cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  require(is.good() && std::memcmp(magic, kMagic, 8) == 0,
          "load_dataset: bad magic in " + path);

  const std::uint64_t jlen = read_u64(is);
  std::string mjson(jlen, '\0');
  is.read(mjson.data(), static_cast<std::streamsize>(jlen));
  require(is.good(), "load_dataset: truncated metadata in " + path);
  json meta = json::parse(mjson);

  Dataset ds;
  ds.kind = meta.at("kind").get<std::string>();
  ds.seq_len = meta.at("seq_len").get<int>();
  ds.snr_grid = meta.at("snr_grid").get<std::vector<real>>();
  ds.seed = meta.at("seed").get<std::uint64_t>();
  ds.config_hash = meta.at("config_hash").get<std::string>();
  for (auto& b : ds.buckets) b.assign(ds.snr_grid.size(), Span{});
  const auto& parts = meta.at("partitions");
  for (int p = 0; p < 3; ++p) {
    ds.partitions[static_cast<std::size_t>(p)].offset = parts[static_cast<std::size_t>(p)].at("offset").get<std::size_t>();
    ds.partitions[static_cast<std::size_t>(p)].count = parts[static_cast<std::size_t>(p)].at("count").get<std::size_t>();
    const auto& jb = parts[static_cast<std::size_t>(p)].at("buckets");
    for (std::size_t b = 0; b < ds.snr_grid.size(); ++b) {
      ds.buckets[static_cast<std::size_t>(p)][b].offset = jb[b].at("offset").get<std::size_t>();
      ds.buckets[static_cast<std::size_t>(p)][b].count = jb[b].at("count").get<std::size_t>();
    }
  }

  const std::uint64_t n = read_u64(is);
  ds.records.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    Record& r = ds.records[i];
    r.input.resize(static_cast<std::size_t>(ds.seq_len));
    r.target.resize(static_cast<std::size_t>(ds.seq_len));
    is.read(reinterpret_cast<char*>(r.input.data()),
            static_cast<std::streamsize>(r.input.size() * sizeof(float)));
    is.read(reinterpret_cast<char*>(r.target.data()),
            static_cast<std::streamsize>(r.target.size() * sizeof(float)));
    int c1 = is.get(), c2 = is.get(), c3 = is.get();
    r.e_t = static_cast<std::uint8_t>(c1);
    r.e_p = static_cast<std::uint8_t>(c2);
    r.e_c = static_cast<std::uint8_t>(c3);
    is.read(reinterpret_cast<char*>(&r.snr_in), sizeof(float));
    require(is.good(), "load_dataset: truncated record " + std::to_string(i) + " in " + path);
  }
  // recover bucket tags from spans
  for (int p = 0; p < 3; ++p)
    for (std::size_t b = 0; b < ds.snr_grid.size(); ++b) {
      const Span& s = ds.buckets[static_cast<std::size_t>(p)][b];
      for (std::size_t i = s.offset; i < s.offset + s.count; ++i)
        ds.records[i].bucket = static_cast<int>(b);
    }
  return ds;
}

void export_dataset_csv(const Dataset& ds, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  require(os.good(), "export_dataset_csv: cannot open " + path);
  os << "partition,bucket_snr_db,e_t,e_p,e_c,snr_in_db";
  for (int i = 0; i < ds.seq_len; ++i) os << ",in_" << i;
  for (int i = 0; i < ds.seq_len; ++i) os << ",target_" << i;
  os << "\n";
  const char* names[3] = {"train", "val", "test"};
  for (int p = 0; p < 3; ++p) {
    const Span& ps = ds.partitions[static_cast<std::size_t>(p)];
    for (std::size_t i = ps.offset; i < ps.offset + ps.count; ++i) {
      const Record& r = ds.records[i];
      os << names[p] << "," << ds.snr_grid[static_cast<std::size_t>(r.bucket)] << ","
         << static_cast<int>(r.e_t) << "," << static_cast<int>(r.e_p) << ","
         << static_cast<int>(r.e_c) << "," << r.snr_in;
      for (float v : r.input) os << "," << v;
      for (float v : r.target) os << "," << v;
      os << "\n";
    }
  }
}

void save_trace_csv(const sim::Trace& t, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  require(os.good(), "save_trace_csv: cannot open " + path);
  os << "index,distance_m,power\n";
  os.precision(13);
  for (std::size_t i = 0; i < t.samples.size(); ++i)
    os << i << "," << (static_cast<real>(i) * t.sample_spacing_m) << "," << t.samples[i] << "\n";
}

sim::Trace load_trace_csv(const std::string& path) {
  std::ifstream is(path);
  require(is.good(), "load_trace_csv: cannot open " + path);
  std::string line;
  std::getline(is, line);  // header
  sim::Trace t;
  real prev_d = 0.0;
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tok;
    std::getline(ls, tok, ',');
    std::getline(ls, tok, ',');
    const real d = std::stod(tok);
    std::getline(ls, tok, ',');
    t.samples.push_back(std::stod(tok));
    if (!first) t.sample_spacing_m = d - prev_d;
    prev_d = d;
    first = false;
  }
  require(t.samples.size() >= 2, "load_trace_csv: too few samples in " + path);
  t.is_clean = false;
  return t;
}

}  // namespace otdr::data
