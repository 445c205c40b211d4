// SPDX-License-Identifier: Apache-2.0
#include "otdr/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

namespace otdr::pipe {

using nlohmann::json;

namespace {

std::vector<real> widen(const std::vector<float>& v) {
  return std::vector<real>(v.begin(), v.end());
}

json trainlog_json(const nn::TrainLog& log) {
  json epochs = json::array();
  for (const auto& e : log.epochs)
    epochs.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss}});
  return {{"epochs", epochs},
          {"best_epoch", log.best_epoch},
          {"best_val_loss", log.best_val_loss},
          {"seconds", log.seconds}};
}

void write_json(const json& j, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  require(os.good(), "cannot open " + path);
  os << j.dump(2) << "\n";
}

json load_json(const std::string& path) {
  std::ifstream is(path);
  require(is.good(), "cannot open " + path);
  json j;
  is >> j;
  return j;
}

void check_hash(const std::string& artifact, const std::string& artifact_hash,
                const std::string& expected) {
  require(artifact_hash == expected, "eval: artifact '" + artifact + "' carries config hash " +
                                         artifact_hash + " but the run expects " + expected +
                                         "; refusing to mix runs");
}

json agg_json(const metrics::Aggregate& a) {
  return {{"mean", a.mean}, {"std", a.stddev}, {"n", a.n}};
}

json confusion_json(const metrics::ClassReport& r) {
  json rows = json::array();
  auto rn = r.row_normalized();
  for (int i = 0; i < 4; ++i) {
    json row = json::array();
    for (int j = 0; j < 4; ++j)
      row.push_back({{"count", r.confusion[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]},
                     {"rate", rn[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]}});
    rows.push_back(row);
  }
  return {{"rows", rows}, {"accuracy", r.accuracy}};
}

}  // namespace

std::string dataset_path(const RunConfig& cfg, const std::string& kind) {
  return cfg.out_dir + "/" + kind + ".ds";
}

std::string checkpoint_path(const RunConfig& cfg, const std::string& name) {
  return cfg.out_dir + "/" + name + ".ck";
}

void run_gen(const RunConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  data::BuildOptions opts = cfg.dataset;
  opts.seed = cfg.seed;
  opts.config_hash = cfg.config_hash();
  sim::SimConfig sim_cfg = cfg.sim;
  sim_cfg.rng_seed = cfg.seed;

  auto pair = data::build_datasets(sim_cfg, opts);
  data::save_dataset(pair.denoise, dataset_path(cfg, "dcae"));
  data::save_dataset(pair.fault, dataset_path(cfg, "fault"));

  json echo = cfg.to_json();
  echo["config_hash"] = cfg.config_hash();
  write_json(echo, cfg.out_dir + "/config_echo.json");
}

nn::TrainLog run_train_dcae(const RunConfig& cfg) {
  data::Dataset ds = data::load_dataset(dataset_path(cfg, "dcae"));
  check_hash("dcae.ds", ds.config_hash, cfg.config_hash());
  dcae::DcaeModel model(cfg.dcae_arch, cfg.seed);
  nn::TrainLog log = dcae::train_dcae(model, ds, cfg.dcae_train);
  const real test_mse = dcae::dataset_mse(model, ds, data::Partition::Test);
  ckpt::save_dcae(model, checkpoint_path(cfg, "dcae"),
                  {{"config_hash", cfg.config_hash()},
                   {"trainlog", trainlog_json(log)},
                   {"test_mse", test_mse}});
  write_json(trainlog_json(log), cfg.out_dir + "/trainlog_dcae.json");
  return log;
}

data::Dataset make_noisy_fault_dataset(const data::Dataset& denoise_ds) {
  data::Dataset out = denoise_ds;
  out.kind = "fault_noisy";
  return out;  // inputs are already the noisy windows; labels ride along
}

void run_train_faultnets(const RunConfig& cfg) {
  data::Dataset fault_ds = data::load_dataset(dataset_path(cfg, "fault"));
  check_hash("fault.ds", fault_ds.config_hash, cfg.config_hash());

  faultnet::FaultNetModel combined(cfg.fault_arch, cfg.seed);
  nn::TrainLog log1 = faultnet::train_faultnet(combined, fault_ds, cfg.fault_train);
  ckpt::save_faultnet(combined, checkpoint_path(cfg, "faultnet"),
                      {{"config_hash", cfg.config_hash()},
                       {"protocol", "corrupted_clean"},
                       {"trainlog", trainlog_json(log1)}});
  write_json(trainlog_json(log1), cfg.out_dir + "/trainlog_faultnet.json");

  data::Dataset denoise_ds = data::load_dataset(dataset_path(cfg, "dcae"));
  check_hash("dcae.ds", denoise_ds.config_hash, cfg.config_hash());
  data::Dataset noisy_ds = make_noisy_fault_dataset(denoise_ds);
  faultnet::FaultNetModel direct(cfg.fault_arch, cfg.seed + 1);
  nn::TrainLog log2 = faultnet::train_faultnet(direct, noisy_ds, cfg.fault_train);
  ckpt::save_faultnet(direct, checkpoint_path(cfg, "faultnet_noisy"),
                      {{"config_hash", cfg.config_hash()},
                       {"protocol", "noisy_direct"},
                       {"trainlog", trainlog_json(log2)}});
  write_json(trainlog_json(log2), cfg.out_dir + "/trainlog_faultnet_noisy.json");
}

namespace {

// (noisy, clean) window pairs for one bucket of one partition
baselines::WindowPairs bucket_pairs(const data::Dataset& ds, data::Partition part, int bucket,
                                    std::size_t limit = 0) {
  baselines::WindowPairs out;
  const data::Span& span = ds.bucket_span(part, bucket);
  const std::size_t n = limit ? std::min(limit, span.count) : span.count;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const data::Record& r = ds.records[span.offset + i];
    out.emplace_back(widen(r.input), widen(r.target));
  }
  return out;
}

}  // namespace

void run_train_baselines(const RunConfig& cfg) {
  data::Dataset ds = data::load_dataset(dataset_path(cfg, "dcae"));
  check_hash("dcae.ds", ds.config_hash, cfg.config_hash());

  // per-SNR-bucket classical parameter tuning on the validation partition
  json tuned = json::array();
  for (std::size_t b = 0; b < ds.snr_grid.size(); ++b) {
    auto pairs = bucket_pairs(ds, data::Partition::Val, static_cast<int>(b), 400);
    require(!pairs.empty(), "train-baselines: empty validation bucket");
    auto tb = baselines::tune_butterworth(pairs);
    auto tw = baselines::tune_wavelet(pairs);
    tuned.push_back({{"snr_db", ds.snr_grid[b]},
                     {"butterworth", baselines::tuned_to_json(tb)},
                     {"wavelet", baselines::tuned_to_json(tw)}});
  }
  write_json({{"config_hash", cfg.config_hash()}, {"buckets", tuned}},
             cfg.out_dir + "/baselines.json");

  for (auto kind : cfg.ref_kinds) {
    baselines::ReferenceDenoiser model(kind, cfg.dataset.window_len, cfg.seed);
    nn::TrainLog log = baselines::train_reference(model, ds, cfg.ref_train);
    const std::string name = std::string("ref_") + baselines::to_string(kind);
    ckpt::save_reference(model, checkpoint_path(cfg, name),
                         {{"config_hash", cfg.config_hash()}, {"trainlog", trainlog_json(log)}});
    write_json(trainlog_json(log), cfg.out_dir + "/trainlog_" + name + ".json");
  }
}

CompareResult compare_with_without_denoising(dcae::DcaeModel& denoiser,
                                             faultnet::FaultNetModel& combined,
                                             faultnet::FaultNetModel& noisy_trained,
                                             const data::Dataset& denoise_test,
                                             real sample_spacing_m) {
  CompareResult result;
  int zero_bucket = 0;
  for (std::size_t b = 0; b < denoise_test.snr_grid.size(); ++b)
    if (std::abs(denoise_test.snr_grid[b]) <
        std::abs(denoise_test.snr_grid[static_cast<std::size_t>(zero_bucket)]))
      zero_bucket = static_cast<int>(b);

  for (std::size_t b = 0; b < denoise_test.snr_grid.size(); ++b) {
    const data::Span& span = denoise_test.bucket_span(data::Partition::Test, static_cast<int>(b));
    if (span.count == 0) continue;
    std::vector<std::vector<real>> noisy(span.count);
    for (std::size_t i = 0; i < span.count; ++i)
      noisy[i] = widen(denoise_test.records[span.offset + i].input);

    auto denoised = dcae::denoise_windows(denoiser, noisy);
    auto pred_combined = combined.predict_batch(denoised);
    auto pred_noisy = noisy_trained.predict_batch(noisy);

    auto evaluate = [&](const std::vector<faultnet::FaultPrediction>& preds,
                        const std::string& name) {
      DetectionRow row;
      row.bucket_snr_db = denoise_test.snr_grid[b];
      row.pipeline = name;
      row.n = span.count;
      std::size_t correct = 0, cause_correct = 0;
      real loc_acc = 0.0;
      std::size_t n_events = 0;
      std::vector<int> cause_pred, cause_true;
      for (std::size_t i = 0; i < span.count; ++i) {
        const data::Record& r = denoise_test.records[span.offset + i];
        if (preds[i].predicted_type() == r.e_t) ++correct;
        if (preds[i].predicted_cause() == r.e_c) ++cause_correct;
        cause_pred.push_back(preds[i].predicted_cause());
        cause_true.push_back(r.e_c);
        if (r.e_t != 0) {
          ++n_events;
          loc_acc += metrics::localization_error_m(preds[i].position_norm, r.e_p, sample_spacing_m);
        }
      }
      row.accuracy = static_cast<real>(correct) / static_cast<real>(span.count);
      row.diagnosis_accuracy = static_cast<real>(cause_correct) / static_cast<real>(span.count);
      row.mean_loc_err_m = n_events ? loc_acc / static_cast<real>(n_events) : 0.0;
      row.n_events = n_events;
      result.rows.push_back(row);
      if (static_cast<int>(b) == zero_bucket) {
        auto rep = metrics::classification_report(cause_pred, cause_true);
        result.diagnosis_at_zero.bucket_snr_db = denoise_test.snr_grid[b];
        if (name == "dcae+bilstm")
          result.diagnosis_at_zero.combined = rep;
        else
          result.diagnosis_at_zero.noisy_trained = rep;
      }
    };
    evaluate(pred_combined, "dcae+bilstm");
    evaluate(pred_noisy, "bilstm_noisy");
  }
  return result;
}

EvalReport run_eval(const RunConfig& cfg) {
  const std::string expected = cfg.config_hash();
  data::Dataset ds = data::load_dataset(dataset_path(cfg, "dcae"));
  check_hash("dcae.ds", ds.config_hash, expected);

  json dcae_meta;
  dcae::DcaeModel denoiser = ckpt::load_dcae(checkpoint_path(cfg, "dcae"), &dcae_meta);
  check_hash("dcae.ck", dcae_meta.at("extra").value("config_hash", ""), expected);
  json fn_meta, fnn_meta;
  faultnet::FaultNetModel combined =
      ckpt::load_faultnet(checkpoint_path(cfg, "faultnet"), &fn_meta);
  check_hash("faultnet.ck", fn_meta.at("extra").value("config_hash", ""), expected);
  faultnet::FaultNetModel direct =
      ckpt::load_faultnet(checkpoint_path(cfg, "faultnet_noisy"), &fnn_meta);
  check_hash("faultnet_noisy.ck", fnn_meta.at("extra").value("config_hash", ""), expected);

  json tuned = load_json(cfg.out_dir + "/baselines.json");
  check_hash("baselines.json", tuned.value("config_hash", ""), expected);

  std::vector<std::pair<std::string, baselines::ReferenceDenoiser>> refs;
  for (auto kind : cfg.ref_kinds) {
    const std::string name = std::string("ref_") + baselines::to_string(kind);
    json meta;
    refs.emplace_back(baselines::to_string(kind),
                      ckpt::load_reference(checkpoint_path(cfg, name), &meta));
    check_hash(name, meta.at("extra").value("config_hash", ""), expected);
  }

  EvalReport report;
  report.config_hash = expected;
  report.seed = cfg.seed;

  // --- denoising metric table over the test partition ---
  for (std::size_t b = 0; b < ds.snr_grid.size(); ++b) {
    const data::Span& span = ds.bucket_span(data::Partition::Test, static_cast<int>(b));
    if (span.count == 0) continue;
    std::vector<std::vector<real>> noisy(span.count), clean(span.count);
    for (std::size_t i = 0; i < span.count; ++i) {
      noisy[i] = widen(ds.records[span.offset + i].input);
      clean[i] = widen(ds.records[span.offset + i].target);
    }

    const auto& bucket_tuning = tuned.at("buckets")[b];
    auto tb = baselines::tuned_butterworth_from_json(bucket_tuning.at("butterworth"));
    auto tw = baselines::tuned_wavelet_from_json(bucket_tuning.at("wavelet"));
    const baselines::IirFilter filt = baselines::design_butterworth3(tb.cutoff_norm);
    baselines::WaveletSpec wspec;
    wspec.family = tw.family;
    wspec.levels = tw.levels;

    auto add_row = [&](const std::string& method,
                       const std::function<std::vector<real>(const std::vector<real>&,
                                                             std::size_t)>& denoise_fn) {
      std::vector<real> v_in, v_out, v_imp, v_rmse, v_prd, v_mse;
      for (std::size_t i = 0; i < span.count; ++i) {
        const std::vector<real> den = denoise_fn(noisy[i], i);
        auto m = metrics::denoise_metrics(clean[i], noisy[i], den);
        // infinite SNR (zero residual) only arises in synthetic edge cases;
        // keep aggregate means finite
        if (std::isfinite(m.snr_in_db)) v_in.push_back(m.snr_in_db);
        if (std::isfinite(m.snr_out_db)) {
          v_out.push_back(m.snr_out_db);
          if (std::isfinite(m.snr_in_db)) v_imp.push_back(m.snr_imp_db);
        }
        v_rmse.push_back(m.rmse);
        v_prd.push_back(m.prd_percent);
        v_mse.push_back(m.mse);
      }
      DenoiseRow row;
      row.bucket_snr_db = ds.snr_grid[b];
      row.method = method;
      row.snr_in = metrics::aggregate(v_in);
      row.snr_out = metrics::aggregate(v_out);
      row.snr_imp = metrics::aggregate(v_imp);
      row.rmse = metrics::aggregate(v_rmse);
      row.prd = metrics::aggregate(v_prd);
      row.mse = metrics::aggregate(v_mse);
      report.denoise.push_back(row);
    };

    auto dcae_out = dcae::denoise_windows(denoiser, noisy);
    add_row("dcae", [&](const std::vector<real>&, std::size_t i) { return dcae_out[i]; });
    add_row("identity", [&](const std::vector<real>& w, std::size_t) { return w; });
    add_row("butterworth", [&](const std::vector<real>& w, std::size_t) {
      return baselines::butterworth_lowpass(w, filt);
    });
    add_row("wavelet", [&](const std::vector<real>& w, std::size_t) {
      return baselines::wavelet_denoise(w, wspec);
    });
    for (auto& [name, model] : refs) {
      auto out = model.denoise(noisy);
      add_row(name, [&](const std::vector<real>&, std::size_t i) { return out[i]; });
    }
  }

  // --- robustness to a new layout: variant simulator configuration ---
  {
    sim::SimConfig variant = cfg.sim;
    variant.fiber_length_km = cfg.sim.fiber_length_km * 1.6;
    variant.attenuation_db_per_km = cfg.sim.attenuation_db_per_km * 1.4;
    data::BuildOptions vopts = cfg.dataset;
    vopts.n_traces = std::max(6 * static_cast<int>(cfg.dataset.snr_grid.size()), 54);
    vopts.seed = cfg.seed + 777;
    vopts.config_hash = expected;
    auto vpair = data::build_datasets(variant, vopts);
    std::vector<real> v_imp, v_mse;
    for (std::size_t b = 0; b < vpair.denoise.snr_grid.size(); ++b) {
      const data::Span& span =
          vpair.denoise.bucket_span(data::Partition::Test, static_cast<int>(b));
      std::vector<std::vector<real>> noisy(span.count), clean(span.count);
      for (std::size_t i = 0; i < span.count; ++i) {
        noisy[i] = widen(vpair.denoise.records[span.offset + i].input);
        clean[i] = widen(vpair.denoise.records[span.offset + i].target);
      }
      auto den = dcae::denoise_windows(denoiser, noisy);
      std::vector<real> imp, mse;
      for (std::size_t i = 0; i < span.count; ++i) {
        auto m = metrics::denoise_metrics(clean[i], noisy[i], den[i]);
        if (std::isfinite(m.snr_imp_db)) imp.push_back(m.snr_imp_db);
        mse.push_back(m.mse);
      }
      DenoiseRow row;
      row.bucket_snr_db = vpair.denoise.snr_grid[b];
      row.method = "dcae_new_layout";
      row.snr_imp = metrics::aggregate(imp);
      row.mse = metrics::aggregate(mse);
      report.denoise.push_back(row);
    }
  }

  // --- detection / localization / diagnosis curves ---
  auto cmp = compare_with_without_denoising(denoiser, combined, direct, ds,
                                            cfg.sim.sample_spacing_m());
  report.detection = cmp.rows;
  report.diagnosis = cmp.diagnosis_at_zero;

  // --- learned shared features at low SNR, for external embedding tools ---
  {
    std::vector<std::vector<real>> seqs;
    std::vector<const data::Record*> recs;
    for (std::size_t b = 0; b < ds.snr_grid.size() && seqs.size() < 400; ++b) {
      if (ds.snr_grid[b] > 0.0) continue;
      const data::Span& span = ds.bucket_span(data::Partition::Test, static_cast<int>(b));
      for (std::size_t i = 0; i < span.count && seqs.size() < 400; ++i) {
        seqs.push_back(widen(ds.records[span.offset + i].input));
        recs.push_back(&ds.records[span.offset + i]);
      }
    }
    if (!seqs.empty()) {
      auto den = dcae::denoise_windows(denoiser, seqs);
      auto feats = faultnet::export_shared_features(combined, den);
      std::ofstream os(cfg.out_dir + "/features.csv", std::ios::trunc);
      os << "e_c,snr_in_db";
      for (int i = 0; i < static_cast<int>(feats[0].size()); ++i) os << ",f" << i;
      os << "\n";
      os.precision(8);
      for (std::size_t i = 0; i < feats.size(); ++i) {
        os << static_cast<int>(recs[i]->e_c) << "," << recs[i]->snr_in;
        for (real v : feats[i]) os << "," << v;
        os << "\n";
      }
    }
  }

  report.write_files(cfg.out_dir);
  return report;
}

json EvalReport::to_json() const {
  json j;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  json dn = json::array();
  for (const auto& r : denoise)
    dn.push_back({{"snr_bucket_db", r.bucket_snr_db},
                  {"method", r.method},
                  {"snr_in_db", agg_json(r.snr_in)},
                  {"snr_out_db", agg_json(r.snr_out)},
                  {"snr_imp_db", agg_json(r.snr_imp)},
                  {"rmse", agg_json(r.rmse)},
                  {"prd_percent", agg_json(r.prd)},
                  {"mse", agg_json(r.mse)}});
  j["denoise"] = dn;
  json det = json::array();
  for (const auto& r : detection)
    det.push_back({{"snr_bucket_db", r.bucket_snr_db},
                   {"pipeline", r.pipeline},
                   {"detection_accuracy", r.accuracy},
                   {"diagnosis_accuracy", r.diagnosis_accuracy},
                   {"mean_localization_error_m", r.mean_loc_err_m},
                   {"n", r.n},
                   {"n_events", r.n_events}});
  j["detection"] = det;
  j["diagnosis_at_bucket_db"] = diagnosis.bucket_snr_db;
  j["diagnosis_combined"] = confusion_json(diagnosis.combined);
  j["diagnosis_noisy_trained"] = confusion_json(diagnosis.noisy_trained);
  return j;
}

void EvalReport::write_files(const std::string& out_dir) const {
  write_json(to_json(), out_dir + "/report.json");
  write_csv(out_dir);
}

void EvalReport::write_csv(const std::string& out_dir) const {
  std::ofstream os(out_dir + "/report.csv", std::ios::trunc);
  require(os.good(), "cannot open report.csv");
  os << "snr_bucket_db,method,snr_in_mean,snr_out_mean,snr_imp_mean,snr_imp_std,rmse_mean,"
        "rmse_std,prd_mean,prd_std,mse_mean,mse_std,n\n";
  char buf[512];
  for (const auto& r : denoise) {
    std::snprintf(buf, sizeof(buf),
                  "%.9g,%s,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%zu\n",
                  r.bucket_snr_db, r.method.c_str(), r.snr_in.mean, r.snr_out.mean, r.snr_imp.mean,
                  r.snr_imp.stddev, r.rmse.mean, r.rmse.stddev, r.prd.mean, r.prd.stddev,
                  r.mse.mean, r.mse.stddev, r.mse.n);
    os << buf;
  }
  os << "snr_bucket_db,pipeline,detection_accuracy,diagnosis_accuracy,mean_localization_error_m,"
        "n,n_events\n";
  for (const auto& r : detection) {
    std::snprintf(buf, sizeof(buf), "%.9g,%s,%.9g,%.9g,%.9g,%zu,%zu\n", r.bucket_snr_db,
                  r.pipeline.c_str(), r.accuracy, r.diagnosis_accuracy, r.mean_loc_err_m, r.n,
                  r.n_events);
    os << buf;
  }
}

dcae::SweepReport run_sweep(const RunConfig& cfg) {
  // one dataset per window length, identically seeded
  std::map<int, data::Dataset> cache;
  auto builder = [&](int input_len) -> const data::Dataset& {
    auto it = cache.find(input_len);
    if (it == cache.end()) {
      data::BuildOptions opts = cfg.dataset;
      opts.window_len = input_len;
      opts.stride = input_len;
      opts.seed = cfg.seed;
      opts.config_hash = cfg.config_hash();
      opts.n_traces = std::max(60, cfg.dataset.n_traces / 8);
      sim::SimConfig sim_cfg = cfg.sim;
      it = cache.emplace(input_len, data::build_datasets(sim_cfg, opts).denoise).first;
    }
    return it->second;
  };
  auto report = dcae::sweep_hyperparams(cfg.sweep, builder, cfg.sweep_train);

  json rows = json::array();
  for (const auto& r : report.rows)
    rows.push_back({{"depth", r.point.depth},
                    {"kernel_size", r.point.kernel_size},
                    {"input_len", r.point.input_len},
                    {"valid", r.valid},
                    {"note", r.note},
                    {"val_mse", r.val_mse},
                    {"test_mse", r.test_mse}});
  std::filesystem::create_directories(cfg.out_dir);
  write_json({{"config_hash", cfg.config_hash()}, {"rows", rows}}, cfg.out_dir + "/sweep.json");

  std::ofstream os(cfg.out_dir + "/sweep.csv", std::ios::trunc);
  os << "depth,kernel_size,input_len,valid,val_mse,test_mse\n";
  for (const auto& r : report.rows)
    os << r.point.depth << "," << r.point.kernel_size << "," << r.point.input_len << ","
       << (r.valid ? 1 : 0) << "," << r.val_mse << "," << r.test_mse << "\n";
  return report;
}

void run_denoise(const RunConfig& cfg, const std::string& trace_csv_in,
                 const std::string& trace_csv_out, int stride) {
  sim::Trace in = data::load_trace_csv(trace_csv_in);
  dcae::DcaeModel model = ckpt::load_dcae(checkpoint_path(cfg, "dcae"));
  sim::Trace out = dcae::denoise_trace(model, in, stride);
  data::save_trace_csv(out, trace_csv_out);
}

void run_analyze(const RunConfig& cfg, const std::string& trace_csv_in,
                 const std::string& findings_jsonl_out) {
  sim::Trace in = data::load_trace_csv(trace_csv_in);
  dcae::DcaeModel denoiser = ckpt::load_dcae(checkpoint_path(cfg, "dcae"));
  faultnet::FaultNetModel model = ckpt::load_faultnet(checkpoint_path(cfg, "faultnet"));
  auto findings = faultnet::analyze_trace(&denoiser, model, in);

  std::ofstream os(findings_jsonl_out, std::ios::trunc);
  require(os.good(), "cannot open " + findings_jsonl_out);
  for (const auto& f : findings) {
    json line = {{"window", f.window_index},
                 {"type", sim::to_string(static_cast<sim::EventType>(f.prediction.predicted_type()))},
                 {"type_conf", f.prediction.type_confidence()},
                 {"cause", sim::to_string(static_cast<sim::EventCause>(f.prediction.predicted_cause()))},
                 {"cause_conf", f.prediction.cause_confidence()},
                 {"position_m", f.position_m}};
    os << line.dump() << "\n";
  }
}

void run_report(const RunConfig& cfg) {
  json j = load_json(cfg.out_dir + "/report.json");
  require(j.value("config_hash", "") == cfg.config_hash(),
          "report: stored report does not match this config");
  // re-emit the CSV view from the stored JSON
  EvalReport rep;
  rep.config_hash = j["config_hash"].get<std::string>();
  rep.seed = j["seed"].get<std::uint64_t>();
  for (const auto& r : j["denoise"]) {
    DenoiseRow row;
    row.bucket_snr_db = r["snr_bucket_db"].get<real>();
    row.method = r["method"].get<std::string>();
    auto agg = [](const json& a) {
      metrics::Aggregate out;
      out.mean = a["mean"].get<real>();
      out.stddev = a["std"].get<real>();
      out.n = a["n"].get<std::size_t>();
      return out;
    };
    row.snr_in = agg(r["snr_in_db"]);
    row.snr_out = agg(r["snr_out_db"]);
    row.snr_imp = agg(r["snr_imp_db"]);
    row.rmse = agg(r["rmse"]);
    row.prd = agg(r["prd_percent"]);
    row.mse = agg(r["mse"]);
    rep.denoise.push_back(row);
  }
  for (const auto& r : j["detection"]) {
    DetectionRow row;
    row.bucket_snr_db = r["snr_bucket_db"].get<real>();
    row.pipeline = r["pipeline"].get<std::string>();
    row.accuracy = r["detection_accuracy"].get<real>();
    row.diagnosis_accuracy = r["diagnosis_accuracy"].get<real>();
    row.mean_loc_err_m = r["mean_localization_error_m"].get<real>();
    row.n = r["n"].get<std::size_t>();
    row.n_events = r["n_events"].get<std::size_t>();
    rep.detection.push_back(row);
  }
  rep.diagnosis.bucket_snr_db = j["diagnosis_at_bucket_db"].get<real>();
  rep.write_csv(cfg.out_dir);
}

}  // namespace otdr::pipe
