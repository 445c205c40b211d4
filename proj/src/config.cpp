// SPDX-License-Identifier: Apache-2.0
#include "otdr/config.hpp"

#include <fstream>

namespace otdr::pipe {

using nlohmann::json;

namespace {

json train_to_json(const nn::TrainOptions& t) {
  return {{"lr", t.lr},
          {"batch", t.batch},
          {"max_epochs", t.max_epochs},
          {"patience", t.patience},
          {"max_train", t.max_train},
          {"max_val", t.max_val},
          {"lr_decay_factor", t.lr_decay_factor},
          {"lr_decay_every", t.lr_decay_every}};
}

void train_from_json(const json& j, nn::TrainOptions& t) {
  t.lr = j.value("lr", t.lr);
  t.batch = j.value("batch", t.batch);
  t.max_epochs = j.value("max_epochs", t.max_epochs);
  t.patience = j.value("patience", t.patience);
  t.max_train = j.value("max_train", t.max_train);
  t.max_val = j.value("max_val", t.max_val);
  t.lr_decay_factor = j.value("lr_decay_factor", t.lr_decay_factor);
  t.lr_decay_every = j.value("lr_decay_every", t.lr_decay_every);
}

}  // namespace

RunConfig::RunConfig() {
  // desk-scale defaults; the paper-scale dataset is configurable upward
  dcae_train.lr = 2e-3;
  dcae_train.batch = 64;
  dcae_train.max_epochs = 18;
  dcae_train.patience = 7;
  dcae_train.lr_decay_factor = 0.55;
  dcae_train.lr_decay_every = 5;

  fault_train.lr = 2e-3;
  fault_train.batch = 64;
  fault_train.max_epochs = 16;
  fault_train.patience = 5;
  fault_train.lr_decay_factor = 0.5;
  fault_train.lr_decay_every = 6;

  ref_train.lr = 1e-3;
  ref_train.batch = 64;
  ref_train.max_epochs = 4;
  ref_train.patience = 4;
  ref_train.max_train = 6000;

  sweep.depths = {3, 7, 11};
  sweep.kernel_sizes = {4, 16};
  sweep.input_lens = {50, 100};
  sweep_train = dcae_train;
  sweep_train.max_epochs = 6;
  sweep_train.patience = 3;
  sweep_train.max_train = 4000;
}

json RunConfig::to_json() const {
  json j;
  j["seed"] = seed;
  j["out_dir"] = out_dir;
  j["sim"] = {{"fiber_length_km", sim.fiber_length_km},
              {"attenuation_db_per_km", sim.attenuation_db_per_km},
              {"pulse_width_ns", sim.pulse_width_ns},
              {"sampling_period_ns", sim.sampling_period_ns},
              {"group_index", sim.group_index},
              {"launch_power_dbm", sim.launch_power_dbm},
              {"noise_floor_db", sim.noise_floor_db}};
  j["dataset"] = {{"n_traces", dataset.n_traces},
                  {"snr_grid", dataset.snr_grid},
                  {"window_len", dataset.window_len},
                  {"stride", dataset.stride},
                  {"split", dataset.split},
                  {"event_mix", dataset.event_mix},
                  {"events_per_type", {dataset.events_per_type_lo, dataset.events_per_type_hi}},
                  {"mask_prob", {dataset.mask_prob_lo, dataset.mask_prob_hi}},
                  {"loss_db", {dataset.loss_db_lo, dataset.loss_db_hi}},
                  {"reflect_db", {dataset.reflect_db_lo, dataset.reflect_db_hi}}};
  j["dcae"] = {{"arch", dcae_arch.to_json()}, {"train", train_to_json(dcae_train)}};
  j["faultnet"] = {{"arch", fault_arch.to_json()},
                   {"train", train_to_json(fault_train)},
                   {"loss_weights",
                    {fault_train.loss_weights.detection, fault_train.loss_weights.localization,
                     fault_train.loss_weights.diagnosis}}};
  json kinds = json::array();
  for (auto k : ref_kinds) kinds.push_back(baselines::to_string(k));
  j["baselines"] = {{"train", train_to_json(ref_train)}, {"kinds", kinds}};
  j["sweep"] = {{"depths", sweep.depths},
                {"kernel_sizes", sweep.kernel_sizes},
                {"input_lens", sweep.input_lens},
                {"train", train_to_json(sweep_train)}};
  return j;
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  c.seed = j.value("seed", c.seed);
  c.out_dir = j.value("out_dir", c.out_dir);
  if (j.contains("sim")) {
    const json& s = j.at("sim");
    c.sim.fiber_length_km = s.value("fiber_length_km", c.sim.fiber_length_km);
    c.sim.attenuation_db_per_km = s.value("attenuation_db_per_km", c.sim.attenuation_db_per_km);
    c.sim.pulse_width_ns = s.value("pulse_width_ns", c.sim.pulse_width_ns);
    c.sim.sampling_period_ns = s.value("sampling_period_ns", c.sim.sampling_period_ns);
    c.sim.group_index = s.value("group_index", c.sim.group_index);
    c.sim.launch_power_dbm = s.value("launch_power_dbm", c.sim.launch_power_dbm);
    c.sim.noise_floor_db = s.value("noise_floor_db", c.sim.noise_floor_db);
  }
  if (j.contains("dataset")) {
    const json& d = j.at("dataset");
    c.dataset.n_traces = d.value("n_traces", c.dataset.n_traces);
    if (d.contains("snr_grid")) c.dataset.snr_grid = d.at("snr_grid").get<std::vector<real>>();
    c.dataset.window_len = d.value("window_len", c.dataset.window_len);
    c.dataset.stride = d.value("stride", c.dataset.stride);
    if (d.contains("split")) c.dataset.split = d.at("split").get<std::array<real, 3>>();
    if (d.contains("event_mix")) c.dataset.event_mix = d.at("event_mix").get<std::array<real, 4>>();
    if (d.contains("events_per_type")) {
      c.dataset.events_per_type_lo = d.at("events_per_type")[0].get<int>();
      c.dataset.events_per_type_hi = d.at("events_per_type")[1].get<int>();
    }
    if (d.contains("mask_prob")) {
      c.dataset.mask_prob_lo = d.at("mask_prob")[0].get<real>();
      c.dataset.mask_prob_hi = d.at("mask_prob")[1].get<real>();
    }
    if (d.contains("loss_db")) {
      c.dataset.loss_db_lo = d.at("loss_db")[0].get<real>();
      c.dataset.loss_db_hi = d.at("loss_db")[1].get<real>();
    }
    if (d.contains("reflect_db")) {
      c.dataset.reflect_db_lo = d.at("reflect_db")[0].get<real>();
      c.dataset.reflect_db_hi = d.at("reflect_db")[1].get<real>();
    }
  }
  if (j.contains("dcae")) {
    if (j.at("dcae").contains("arch")) c.dcae_arch = dcae::DcaeArch::from_json(j.at("dcae").at("arch"));
    if (j.at("dcae").contains("train")) train_from_json(j.at("dcae").at("train"), c.dcae_train);
  }
  if (j.contains("faultnet")) {
    const json& f = j.at("faultnet");
    if (f.contains("arch")) c.fault_arch = faultnet::FaultNetArch::from_json(f.at("arch"));
    if (f.contains("train")) train_from_json(f.at("train"), c.fault_train);
    if (f.contains("loss_weights")) {
      c.fault_train.loss_weights.detection = f.at("loss_weights")[0].get<real>();
      c.fault_train.loss_weights.localization = f.at("loss_weights")[1].get<real>();
      c.fault_train.loss_weights.diagnosis = f.at("loss_weights")[2].get<real>();
    }
  }
  if (j.contains("baselines")) {
    const json& b = j.at("baselines");
    if (b.contains("train")) train_from_json(b.at("train"), c.ref_train);
    if (b.contains("kinds")) {
      c.ref_kinds.clear();
      for (const auto& k : b.at("kinds"))
        c.ref_kinds.push_back(baselines::ref_kind_from_string(k.get<std::string>()));
    }
  }
  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    if (s.contains("depths")) c.sweep.depths = s.at("depths").get<std::vector<int>>();
    if (s.contains("kernel_sizes"))
      c.sweep.kernel_sizes = s.at("kernel_sizes").get<std::vector<int>>();
    if (s.contains("input_lens")) c.sweep.input_lens = s.at("input_lens").get<std::vector<int>>();
    if (s.contains("train")) train_from_json(s.at("train"), c.sweep_train);
  }
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream is(path);
  require(is.good(), "config: cannot open " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw invalid_argument_error("config: parse error in " + path + ": " + e.what());
  }
  return from_json(j);
}

std::string RunConfig::config_hash() const {
  json j = to_json();
  j.erase("out_dir");  // artifacts are location-independent
  return hex64(fnv1a(j.dump()));
}

}  // namespace otdr::pipe
