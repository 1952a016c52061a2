// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "mogen/io.hpp"

using namespace mogen;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("mogen_io_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string str(const std::string& name) const { return (path / name).string(); }
};

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.d_model = 16;
  cfg.d_mlp = 32;
  cfg.layers = 1;
  cfg.heads = 2;
  cfg.window = 8;
  cfg.d_text = 8;
  cfg.max_text_tokens = 8;
  cfg.d_video = 6;
  cfg.d_music = 8;
  cfg.timesteps = 50;
  return cfg;
}

bool same_tensor(const Tensor& a, const Tensor& b) {
  if (a.defined() != b.defined()) return false;
  if (!a.defined()) return true;
  if (a.shape() != b.shape()) return false;
  for (int64_t i = 0; i < a.numel(); ++i) {
    if (a.data()[i] != b.data()[i]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("tensors round-trip through JSON bitwise") {
  RngStream rng(1, "t");
  Tensor t = Tensor::zeros({3, 5});
  for (int64_t i = 0; i < t.numel(); ++i) t.data()[i] = rng.normal();
  const Tensor back = tensor_from_json(tensor_to_json(t));
  CHECK(same_tensor(t, back));
  // undefined maps to null and back
  CHECK(tensor_to_json(Tensor{}).is_null());
  CHECK(!tensor_from_json(nullptr).defined());
  // corrupt shape rejected
  ojson bad = tensor_to_json(t);
  bad["shape"] = {2, 2};
  CHECK_THROWS_AS((void)tensor_from_json(bad), Error);
}

TEST_CASE("motion sequences round-trip through JSON bitwise") {
  RngStream rng(2, "m");
  const MotionSequence seq = synth_motion("walk", 32, 30.0, rng).seq;
  const ojson j = motion_to_json(seq);
  const MotionSequence back = motion_from_json(j, seq.skeleton);
  const Tensor xa = flatten(seq), xb = flatten(back);
  CHECK(same_tensor(xa, xb));
  CHECK(back.fps == seq.fps);

  Skeleton other = Skeleton::toy12();
  other.joints = 13;
  CHECK_THROWS_AS((void)motion_from_json(j, other), Error);
}

TEST_CASE("condition sets round-trip through JSON") {
  DatasetParams p;
  p.n_mocap3d = 2;
  p.n_text3d = 2;
  p.n_text2d = 2;
  p.n_music3d = 1;
  for (const auto& s : make_dataset(p)) {
    const ConditionSet back = conditions_from_json(conditions_to_json(s.cond));
    CHECK(back.frames == s.cond.frames);
    CHECK(same_tensor(back.video, s.cond.video));
    CHECK(same_tensor(back.camera, s.cond.camera));
    CHECK(same_tensor(back.kp2d, s.cond.kp2d));
    CHECK(same_tensor(back.music, s.cond.music));
    CHECK(same_tensor(back.bbox, s.cond.bbox));
    REQUIRE(back.prompts.size() == s.cond.prompts.size());
    for (size_t i = 0; i < back.prompts.size(); ++i) {
      CHECK(back.prompts[i].text == s.cond.prompts[i].text);
      CHECK(back.prompts[i].tokens == s.cond.prompts[i].tokens);
      CHECK(back.prompts[i].win_start == s.cond.prompts[i].win_start);
      CHECK(back.prompts[i].win_end == s.cond.prompts[i].win_end);
    }
  }
}

TEST_CASE("model config round-trips through JSON") {
  const ModelConfig cfg = tiny_config();
  const ModelConfig back = config_from_json(config_to_json(cfg));
  CHECK(back.d_model == cfg.d_model);
  CHECK(back.layers == cfg.layers);
  CHECK(back.window == cfg.window);
  CHECK(back.timesteps == cfg.timesteps);
  CHECK(back.rope_base == cfg.rope_base);
  CHECK(param_specs(back).size() == param_specs(cfg).size());
}

TEST_CASE("datasets round-trip through a directory and write stable bytes") {
  TempDir tmp;
  DatasetParams p;
  p.n_mocap3d = 3;
  p.n_text3d = 2;
  p.n_text2d = 2;
  p.n_music3d = 1;
  const auto ds = make_dataset(p);
  save_dataset(tmp.str("data"), ds);
  const auto back = load_dataset(tmp.str("data"));
  REQUIRE(back.size() == ds.size());
  for (size_t i = 0; i < ds.size(); ++i) {
    CHECK(back[i].id == ds[i].id);
    CHECK(back[i].subset == ds[i].subset);
    CHECK(back[i].family == ds[i].family);
    CHECK(back[i].split == ds[i].split);
    CHECK(back[i].has_3d == ds[i].has_3d);
    CHECK(back[i].beats == ds[i].beats);
    CHECK(back[i].K.f == ds[i].K.f);
    CHECK(same_tensor(flatten(back[i].seq), flatten(ds[i].seq)));
    CHECK(same_tensor(back[i].cond.kp2d, ds[i].cond.kp2d));
    CHECK(back[i].cond.prompts.size() == ds[i].cond.prompts.size());
  }
  // identical corpus serializes to identical bytes
  save_dataset(tmp.str("data2"), ds);
  const std::string id0 = ds[0].id;
  CHECK(read_text_file(tmp.str("data/samples/" + id0 + ".json")) ==
        read_text_file(tmp.str("data2/samples/" + id0 + ".json")));
  CHECK(read_text_file(tmp.str("data/manifest.json")) ==
        read_text_file(tmp.str("data2/manifest.json")));
}

TEST_CASE("checkpoints round-trip parameters, normalizer and optimizer state") {
  TempDir tmp;
  Checkpoint ck;
  ck.config = tiny_config();
  ck.params = init_params(ck.config, 99);
  RngStream rng(3, "norm");
  std::vector<Tensor> clips;
  for (int k = 0; k < 3; ++k) {
    Tensor c = Tensor::zeros({8, ck.config.pose_dim()});
    for (int64_t i = 0; i < c.numel(); ++i) c.data()[i] = rng.normal(0.3, 1.7);
    clips.push_back(c);
  }
  ck.norm = Normalizer::fit(clips);
  ck.has_opt = true;
  ck.opt.step = 7;
  ck.opt.cfg.lr = 3e-4;
  for (const auto& [name, t] : ck.params) {
    std::vector<double> m(static_cast<size_t>(t.numel())), v(m.size());
    for (size_t i = 0; i < m.size(); ++i) {
      m[i] = rng.normal();
      v[i] = std::fabs(rng.normal());
    }
    ck.opt.m[name] = std::move(m);
    ck.opt.v[name] = std::move(v);
  }
  ck.epoch = 12;
  ck.best_metric = 123.456;
  ck.seed = 777;

  save_checkpoint(tmp.str("model.ckpt"), ck);
  const Checkpoint back = load_checkpoint(tmp.str("model.ckpt"));
  CHECK(back.config.d_model == ck.config.d_model);
  CHECK(back.epoch == 12);
  CHECK(back.best_metric == 123.456);
  CHECK(back.seed == 777);
  CHECK(back.has_opt);
  CHECK(back.opt.step == 7);
  CHECK(back.opt.cfg.lr == 3e-4);
  REQUIRE(back.params.size() == ck.params.size());
  for (const auto& [name, t] : ck.params) {
    REQUIRE(back.params.count(name) == 1);
    CHECK(same_tensor(back.params.at(name), t));
    CHECK(back.opt.m.at(name) == ck.opt.m.at(name));
    CHECK(back.opt.v.at(name) == ck.opt.v.at(name));
  }
  CHECK(back.norm.mean == ck.norm.mean);
  CHECK(back.norm.stdev == ck.norm.stdev);

  // a checkpoint without optimizer state skips those blobs
  ck.has_opt = false;
  save_checkpoint(tmp.str("slim.ckpt"), ck);
  const Checkpoint slim = load_checkpoint(tmp.str("slim.ckpt"));
  CHECK(!slim.has_opt);
  CHECK(slim.opt.m.empty());
  CHECK(fs::file_size(tmp.path / "slim.ckpt") < fs::file_size(tmp.path / "model.ckpt"));
}

TEST_CASE("corrupt checkpoints are rejected") {
  TempDir tmp;
  Checkpoint ck;
  ck.config = tiny_config();
  ck.params = init_params(ck.config, 1);
  ck.norm = Normalizer::identity(ck.config.pose_dim());
  save_checkpoint(tmp.str("ok.ckpt"), ck);

  write_text_file(tmp.str("bad.ckpt"), "definitely not a checkpoint");
  CHECK_THROWS_AS((void)load_checkpoint(tmp.str("bad.ckpt")), Error);
  CHECK_THROWS_AS((void)load_checkpoint(tmp.str("missing.ckpt")), Error);

  std::string bytes = read_text_file(tmp.str("ok.ckpt"));
  write_text_file(tmp.str("cut.ckpt"), bytes.substr(0, bytes.size() - 16));
  CHECK_THROWS_AS((void)load_checkpoint(tmp.str("cut.ckpt")), Error);
  write_text_file(tmp.str("fat.ckpt"), bytes + "xx");
  CHECK_THROWS_AS((void)load_checkpoint(tmp.str("fat.ckpt")), Error);

  // census guards the save side too: a dropped parameter is an error
  ck.params.erase(ck.params.begin());
  CHECK_THROWS_AS(save_checkpoint(tmp.str("short.ckpt"), ck), Error);
}

TEST_CASE("history lines append as parseable JSONL") {
  TempDir tmp;
  ojson a;
  a["epoch"] = 1;
  a["loss"] = 0.5;
  ojson b;
  b["epoch"] = 2;
  b["loss"] = 0.25;
  append_jsonl(tmp.str("h.jsonl"), a);
  append_jsonl(tmp.str("h.jsonl"), b);
  const std::string text = read_text_file(tmp.str("h.jsonl"));
  const auto nl = text.find('\n');
  REQUIRE(nl != std::string::npos);
  CHECK(ojson::parse(text.substr(0, nl))["epoch"] == 1);
  CHECK(ojson::parse(text.substr(nl + 1))["loss"] == 0.25);
}
