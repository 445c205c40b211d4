// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include "otdr/baselines.hpp"
#include "otdr/dcae.hpp"
#include "otdr/faultnet.hpp"

namespace otdr::ckpt {

// Container: magic, one JSON metadata block, then named float32 blocks in the
// order declared by the manifest. Parameters are stored as float32; loading
// widens them back, so a save/load round trip is idempotent byte-for-byte.
struct Checkpoint {
  nlohmann::json meta;
  std::vector<std::pair<std::string, std::vector<float>>> blocks;
};

void write_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint read_checkpoint(const std::string& path);

void save_dcae(dcae::DcaeModel& model, const std::string& path,
               const nlohmann::json& extra_meta = {});
dcae::DcaeModel load_dcae(const std::string& path, nlohmann::json* meta_out = nullptr);

void save_faultnet(faultnet::FaultNetModel& model, const std::string& path,
                   const nlohmann::json& extra_meta = {});
faultnet::FaultNetModel load_faultnet(const std::string& path, nlohmann::json* meta_out = nullptr);

void save_reference(baselines::ReferenceDenoiser& model, const std::string& path,
                    const nlohmann::json& extra_meta = {});
baselines::ReferenceDenoiser load_reference(const std::string& path,
                                            nlohmann::json* meta_out = nullptr);

}  // namespace otdr::ckpt
