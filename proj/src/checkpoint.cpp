// SPDX-License-Identifier: Apache-2.0
#include "otdr/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace otdr::ckpt {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'O', 'T', 'D', 'R', 'C', 'K', '1', '\0'};

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

std::vector<float> narrow(const std::vector<real>& v) {
  std::vector<float> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i]);
  return out;
}

void widen_into(const std::vector<float>& src, std::vector<real>& dst) {
  require(src.size() == dst.size(), "checkpoint: block size mismatch");
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<real>(src[i]);
}

template <typename Model>
Checkpoint pack(Model& model, const std::string& kind, const json& arch,
                const json& extra_meta) {
  Checkpoint ck;
  ck.meta["format"] = 1;
  ck.meta["kind"] = kind;
  ck.meta["arch"] = arch;
  ck.meta["normalization"] = "minmax_clean_window";
  ck.meta["init_seed"] = model.init_seed();
  if (!extra_meta.is_null()) ck.meta["extra"] = extra_meta;
  json manifest = json::array();
  for (auto* p : model.parameters()) {
    manifest.push_back({{"name", p->name}, {"shape", p->value.shape()}});
    ck.blocks.emplace_back(p->name, narrow(p->value.vec()));
  }
  for (auto& [name, buf] : model.named_buffers()) {
    manifest.push_back({{"name", name}, {"shape", json::array({buf->size()})}, {"buffer", true}});
    ck.blocks.emplace_back(name, narrow(*buf));
  }
  ck.meta["blocks"] = manifest;
  return ck;
}

template <typename Model>
void unpack(Model& model, const Checkpoint& ck) {
  std::size_t bi = 0;
  for (auto* p : model.parameters()) {
    require(bi < ck.blocks.size() && ck.blocks[bi].first == p->name,
            "checkpoint: parameter order mismatch at '" + p->name + "'");
    widen_into(ck.blocks[bi].second, p->value.vec());
    ++bi;
  }
  for (auto& [name, buf] : model.named_buffers()) {
    require(bi < ck.blocks.size() && ck.blocks[bi].first == name,
            "checkpoint: buffer order mismatch at '" + name + "'");
    widen_into(ck.blocks[bi].second, *buf);
    ++bi;
  }
  require(bi == ck.blocks.size(), "checkpoint: trailing unused blocks");
}

}  // namespace

void write_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  require(os.good(), "write_checkpoint: cannot open " + path);
  os.write(kMagic, 8);
  const std::string meta = ck.meta.dump();
  write_u64(os, meta.size());
  os.write(meta.data(), static_cast<std::streamsize>(meta.size()));
  write_u64(os, ck.blocks.size());
  for (const auto& [name, data] : ck.blocks) {
    write_u64(os, name.size());
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u64(os, data.size());
    os.write(reinterpret_cast<const char*>(data.data()),
             static_cast<std::streamsize>(data.size() * sizeof(float)));
  }
  require(os.good(), "write_checkpoint: write failed for " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), "read_checkpoint: cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  require(is.good() && std::memcmp(magic, kMagic, 8) == 0,
          "read_checkpoint: bad magic at offset 0 in " + path);
  Checkpoint ck;
  const std::uint64_t mlen = read_u64(is);
  std::string meta(mlen, '\0');
  is.read(meta.data(), static_cast<std::streamsize>(mlen));
  require(is.good(), "read_checkpoint: truncated metadata (offset 16) in " + path);
  ck.meta = json::parse(meta);
  require(ck.meta.value("format", 0) == 1,
          "read_checkpoint: unsupported format version in " + path);
  const std::uint64_t nblocks = read_u64(is);
  for (std::uint64_t i = 0; i < nblocks; ++i) {
    const std::uint64_t nlen = read_u64(is);
    std::string name(nlen, '\0');
    is.read(name.data(), static_cast<std::streamsize>(nlen));
    const std::uint64_t dlen = read_u64(is);
    std::vector<float> data(dlen);
    is.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(dlen * sizeof(float)));
    require(is.good(), "read_checkpoint: truncated block " + std::to_string(i) + " ('" + name +
                           "') in " + path);
    ck.blocks.emplace_back(std::move(name), std::move(data));
  }
  return ck;
}

void save_dcae(dcae::DcaeModel& model, const std::string& path, const json& extra_meta) {
  write_checkpoint(pack(model, "dcae", model.arch().to_json(), extra_meta), path);
}

dcae::DcaeModel load_dcae(const std::string& path, json* meta_out) {
  Checkpoint ck = read_checkpoint(path);
  require(ck.meta.at("kind") == "dcae", "load_dcae: checkpoint kind mismatch in " + path);
  dcae::DcaeModel model(dcae::DcaeArch::from_json(ck.meta.at("arch")),
                        ck.meta.at("init_seed").get<std::uint64_t>());
  unpack(model, ck);
  if (meta_out) *meta_out = ck.meta;
  return model;
}

void save_faultnet(faultnet::FaultNetModel& model, const std::string& path,
                   const json& extra_meta) {
  Checkpoint ck;
  ck.meta["format"] = 1;
  ck.meta["kind"] = "faultnet";
  ck.meta["arch"] = model.arch().to_json();
  ck.meta["normalization"] = "minmax_clean_window";
  ck.meta["init_seed"] = model.init_seed();
  if (!extra_meta.is_null()) ck.meta["extra"] = extra_meta;
  json manifest = json::array();
  for (auto* p : model.parameters()) {
    manifest.push_back({{"name", p->name}, {"shape", p->value.shape()}});
    ck.blocks.emplace_back(p->name, narrow(p->value.vec()));
  }
  ck.meta["blocks"] = manifest;
  write_checkpoint(ck, path);
}

faultnet::FaultNetModel load_faultnet(const std::string& path, json* meta_out) {
  Checkpoint ck = read_checkpoint(path);
  require(ck.meta.at("kind") == "faultnet", "load_faultnet: checkpoint kind mismatch in " + path);
  faultnet::FaultNetModel model(faultnet::FaultNetArch::from_json(ck.meta.at("arch")),
                                ck.meta.at("init_seed").get<std::uint64_t>());
  std::size_t bi = 0;
  for (auto* p : model.parameters()) {
    require(bi < ck.blocks.size() && ck.blocks[bi].first == p->name,
            "load_faultnet: parameter order mismatch at '" + p->name + "'");
    widen_into(ck.blocks[bi].second, p->value.vec());
    ++bi;
  }
  require(bi == ck.blocks.size(), "load_faultnet: trailing unused blocks");
  if (meta_out) *meta_out = ck.meta;
  return model;
}

void save_reference(baselines::ReferenceDenoiser& model, const std::string& path,
                    const json& extra_meta) {
  json arch = {{"ref_kind", baselines::to_string(model.kind())},
               {"input_len", model.input_len()}};
  write_checkpoint(pack(model, "reference", arch, extra_meta), path);
}

baselines::ReferenceDenoiser load_reference(const std::string& path, json* meta_out) {
  Checkpoint ck = read_checkpoint(path);
  require(ck.meta.at("kind") == "reference",
          "load_reference: checkpoint kind mismatch in " + path);
  baselines::ReferenceDenoiser model(
      baselines::ref_kind_from_string(ck.meta.at("arch").at("ref_kind").get<std::string>()),
      ck.meta.at("arch").at("input_len").get<int>(),
      ck.meta.at("init_seed").get<std::uint64_t>());
  unpack(model, ck);
  if (meta_out) *meta_out = ck.meta;
  return model;
}

}  // namespace otdr::ckpt
