// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "otdr/checkpoint.hpp"

using namespace otdr;
using nn::Tensor;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}

std::vector<real> run_dcae(dcae::DcaeModel& m, const Tensor& x) {
  nn::NoGradGuard ng;
  Tensor y = m.forward(x, false);
  return y.vec();
}

}  // namespace

TEST_CASE("dcae checkpoint: persisted weights give bit-identical forward outputs") {
  dcae::DcaeModel model(dcae::DcaeArch{}, 5);
  Rng rng(5);
  Tensor x = Tensor::zeros({2, 1, 100});
  nn::fill_uniform(x, rng, 0, 1);

  ckpt::save_dcae(model, "/tmp/otdr_ck1.bin", {{"note", "unit"}});
  dcae::DcaeModel m1 = ckpt::load_dcae("/tmp/otdr_ck1.bin");
  auto out1 = run_dcae(m1, x);

  // a persisted model round-trips exactly: float32 narrowing is idempotent
  ckpt::save_dcae(m1, "/tmp/otdr_ck2.bin", {{"note", "unit"}});
  CHECK(slurp("/tmp/otdr_ck1.bin").substr(0, 8) == slurp("/tmp/otdr_ck2.bin").substr(0, 8));
  dcae::DcaeModel m2 = ckpt::load_dcae("/tmp/otdr_ck2.bin");
  auto out2 = run_dcae(m2, x);
  REQUIRE(out1.size() == out2.size());
  for (std::size_t i = 0; i < out1.size(); ++i) CHECK(out1[i] == out2[i]);  // max abs diff 0

  // parameter blocks themselves are byte-identical across the round trip
  auto c1 = ckpt::read_checkpoint("/tmp/otdr_ck1.bin");
  auto c2 = ckpt::read_checkpoint("/tmp/otdr_ck2.bin");
  REQUIRE(c1.blocks.size() == c2.blocks.size());
  for (std::size_t i = 0; i < c1.blocks.size(); ++i) {
    CHECK(c1.blocks[i].first == c2.blocks[i].first);
    CHECK(c1.blocks[i].second == c2.blocks[i].second);
  }
  std::remove("/tmp/otdr_ck1.bin");
  std::remove("/tmp/otdr_ck2.bin");
}

TEST_CASE("faultnet and reference checkpoints round trip") {
  faultnet::FaultNetModel fn(faultnet::FaultNetArch{}, 9);
  ckpt::save_faultnet(fn, "/tmp/otdr_fn.bin");
  faultnet::FaultNetModel fn2 = ckpt::load_faultnet("/tmp/otdr_fn.bin");
  Rng rng(2);
  std::vector<real> window(100);
  for (auto& v : window) v = rng.uniform(0, 1);
  // quantize-once then compare quantized copies exactly
  ckpt::save_faultnet(fn2, "/tmp/otdr_fn2.bin");
  faultnet::FaultNetModel fn3 = ckpt::load_faultnet("/tmp/otdr_fn2.bin");
  auto p2 = fn2.predict(window);
  auto p3 = fn3.predict(window);
  CHECK(p2.position_norm == p3.position_norm);
  for (int i = 0; i < 4; ++i) {
    CHECK(p2.type_probs[static_cast<std::size_t>(i)] == p3.type_probs[static_cast<std::size_t>(i)]);
    CHECK(p2.cause_probs[static_cast<std::size_t>(i)] == p3.cause_probs[static_cast<std::size_t>(i)]);
  }
  std::remove("/tmp/otdr_fn.bin");
  std::remove("/tmp/otdr_fn2.bin");

  for (auto kind : {baselines::RefKind::Dae, baselines::RefKind::Cnn, baselines::RefKind::Lstm}) {
    baselines::ReferenceDenoiser ref(kind, 100, 3);
    ckpt::save_reference(ref, "/tmp/otdr_ref.bin");
    baselines::ReferenceDenoiser back = ckpt::load_reference("/tmp/otdr_ref.bin");
    CHECK(back.kind() == kind);
    std::vector<std::vector<real>> w{std::vector<real>(100, 0.4)};
    ckpt::save_reference(back, "/tmp/otdr_ref2.bin");
    baselines::ReferenceDenoiser again = ckpt::load_reference("/tmp/otdr_ref2.bin");
    auto o1 = back.denoise(w);
    auto o2 = again.denoise(w);
    for (std::size_t i = 0; i < 100; ++i) CHECK(o1[0][i] == o2[0][i]);
    std::remove("/tmp/otdr_ref.bin");
    std::remove("/tmp/otdr_ref2.bin");
  }
}

TEST_CASE("metadata echoes configuration and kind mismatches are rejected") {
  dcae::DcaeModel model(dcae::DcaeArch{}, 5);
  ckpt::save_dcae(model, "/tmp/otdr_meta.bin", {{"config_hash", "abc123"}});
  nlohmann::json meta;
  ckpt::load_dcae("/tmp/otdr_meta.bin", &meta);
  CHECK(meta.at("extra").at("config_hash") == "abc123");
  CHECK(meta.at("kind") == "dcae");
  CHECK(meta.at("normalization") == "minmax_clean_window");

  CHECK_THROWS_AS(ckpt::load_faultnet("/tmp/otdr_meta.bin"), invalid_argument_error);
  std::remove("/tmp/otdr_meta.bin");
}

TEST_CASE("corrupt magic and truncation rejected with an offset diagnostic") {
  dcae::DcaeModel model(dcae::DcaeArch{}, 5);
  ckpt::save_dcae(model, "/tmp/otdr_bad.bin");
  {
    std::fstream f("/tmp/otdr_bad.bin", std::ios::in | std::ios::out | std::ios::binary);
    f.write("BOGUS!!!", 8);
  }
  try {
    ckpt::read_checkpoint("/tmp/otdr_bad.bin");
    FAIL("expected bad magic rejection");
  } catch (const invalid_argument_error& e) {
    CHECK(std::string(e.what()).find("magic") != std::string::npos);
  }

  ckpt::save_dcae(model, "/tmp/otdr_bad.bin");
  auto whole = slurp("/tmp/otdr_bad.bin");
  {
    std::ofstream f("/tmp/otdr_bad.bin", std::ios::binary | std::ios::trunc);
    f.write(whole.data(), static_cast<std::streamsize>(whole.size() - 257));
  }
  try {
    ckpt::read_checkpoint("/tmp/otdr_bad.bin");
    FAIL("expected truncation rejection");
  } catch (const invalid_argument_error& e) {
    CHECK(std::string(e.what()).find("truncated") != std::string::npos);
  }
  std::remove("/tmp/otdr_bad.bin");
}
