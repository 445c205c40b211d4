// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include "otdr/baselines.hpp"
#include "otdr/dcae.hpp"
#include "otdr/faultnet.hpp"

namespace otdr::pipe {

// One document drives a whole run; every stage re-derives what it needs from
// here, so a run is a pure function of this structure.
struct RunConfig {
  std::uint64_t seed = 1;
  std::string out_dir = "out";

  sim::SimConfig sim;
  data::BuildOptions dataset;

  dcae::DcaeArch dcae_arch;
  nn::TrainOptions dcae_train;

  faultnet::FaultNetArch fault_arch;
  faultnet::FaultTrainOptions fault_train;

  nn::TrainOptions ref_train;
  std::vector<baselines::RefKind> ref_kinds = {baselines::RefKind::Dae, baselines::RefKind::Cnn,
                                               baselines::RefKind::Lstm};

  dcae::SweepGrid sweep;
  nn::TrainOptions sweep_train;

  RunConfig();

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::string& path);

  std::string config_hash() const;  // hash of the fully-resolved document
};

}  // namespace otdr::pipe
