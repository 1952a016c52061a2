// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "mogen/io.hpp"
#include "mogen/trainer.hpp"

using namespace mogen;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("mogen_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string str(const std::string& name) const { return (path / name).string(); }
};

// Runs the CLI with stdout/stderr captured; returns the exit code.
int run_cli(const TempDir& td, const std::string& args, const std::string& log) {
  const std::string cmd =
      std::string(MOGEN_CLI_PATH) + " " + args + " > " + td.str(log) + " 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

// One shared fixture: tiny dataset and a 2-epoch model, reused across cases.
const TempDir& fixture() {
  static TempDir td;
  static bool ready = false;
  if (!ready) {
    TrainConfig tc;
    tc.model.d_model = 16;
    tc.model.d_mlp = 32;
    tc.model.layers = 1;
    tc.model.heads = 2;
    tc.model.window = 8;
    tc.model.d_text = 8;
    tc.model.max_text_tokens = 8;
    tc.model.d_video = 32;
    tc.model.d_music = 8;
    tc.model.timesteps = 50;
    tc.epochs = 2;
    tc.batch_size = 4;
    tc.crop_frames = 16;
    tc.lr = 3e-4;
    tc.eval_every = 2;
    tc.seed = 5;
    write_text_file(td.str("tc.json"), train_config_to_json(tc).dump());
    REQUIRE(run_cli(td,
                    "gen-data --out " + td.str("data") +
                        " --mocap3d 6 --text3d 4 --text2d 2 --music3d 2 --frames 32 --seed 77",
                    "gen.log") == 0);
    REQUIRE(run_cli(td,
                    "train --data " + td.str("data") + " --out " + td.str("run") + " --config " +
                        td.str("tc.json"),
                    "train.log") == 0);
    // a bare ground-truth motion file for evaluate/inbetween
    const ojson sample = ojson::parse(read_text_file(td.str("data/samples/mocap3d-0.json")));
    write_text_file(td.str("gt.json"), sample.at("motion").dump());
    ready = true;
  }
  return td;
}

}  // namespace

TEST_CASE("every command prints its resolved config") {
  const TempDir& td = fixture();
  const std::string gen = read_text_file(td.str("gen.log"));
  CHECK(gen.find("resolved: {\"command\":\"gen-data\"") != std::string::npos);
  CHECK(gen.find("\"seed\":77") != std::string::npos);
  const std::string train_log = read_text_file(td.str("train.log"));
  CHECK(train_log.find("resolved: {\"model\":") != std::string::npos);
  CHECK(train_log.find("\"seed\":5") != std::string::npos);
  CHECK(fs::exists(td.str("run/best.ckpt")));
  CHECK(fs::exists(td.str("run/last.ckpt")));
  CHECK(fs::exists(td.str("run/history.jsonl")));
}

TEST_CASE("sampling twice with one seed writes identical motion files") {
  const TempDir& td = fixture();
  const std::string base = "sample --checkpoint " + td.str("run/best.ckpt") +
                           " --text \"a person walks forward\" --window 0:48"
                           " --length 48 --steps 6 --seed 7 --out ";
  REQUIRE(run_cli(td, base + td.str("s1.json"), "s1.log") == 0);
  REQUIRE(run_cli(td, base + td.str("s2.json"), "s2.log") == 0);
  const std::string a = read_text_file(td.str("s1.json"));
  CHECK(a == read_text_file(td.str("s2.json")));
  CHECK(!a.empty());
  // a different seed diverges
  REQUIRE(run_cli(td,
                  "sample --checkpoint " + td.str("run/best.ckpt") +
                      " --text \"a person walks forward\" --window 0:48"
                      " --length 48 --steps 6 --seed 8 --out " +
                      td.str("s3.json"),
                  "s3.log") == 0);
  CHECK(a != read_text_file(td.str("s3.json")));
}

TEST_CASE("estimate then evaluate yields a finite error report") {
  const TempDir& td = fixture();
  REQUIRE(run_cli(td,
                  "estimate --conditions " + td.str("data/samples/mocap3d-0.json") +
                      " --checkpoint " + td.str("run/best.ckpt") + " --out " + td.str("est.json"),
                  "est.log") == 0);
  REQUIRE(run_cli(td,
                  "evaluate --pred " + td.str("est.json") + " --gt " + td.str("gt.json") +
                      " --out " + td.str("report.json"),
                  "eval.log") == 0);
  const ojson report = ojson::parse(read_text_file(td.str("report.json")));
  CHECK(report.at("frames").get<int64_t>() == 32);
  const double err = report.at("mpjpe").get<double>();
  CHECK(std::isfinite(err));
  CHECK(err > 0.0);
  CHECK(std::isfinite(report.at("wa_mpjpe").get<double>()));
}

TEST_CASE("a model trained at 48 frames samples any length") {
  const TempDir& td = fixture();
  REQUIRE(run_cli(td,
                  "sample --checkpoint " + td.str("run/best.ckpt") +
                      " --text \"the person runs forward fast\" --length 144 --steps 4 --seed 3"
                      " --out " +
                      td.str("long.json"),
                  "long.log") == 0);
  const ojson m = ojson::parse(read_text_file(td.str("long.json")));
  CHECK(m.at("frames").get<int64_t>() == 144);
  CHECK(m.at("data").size() == 144);
}

TEST_CASE("in-betweening and SVG export run from the shell") {
  const TempDir& td = fixture();
  REQUIRE(run_cli(td,
                  "inbetween --checkpoint " + td.str("run/best.ckpt") + " --keyframes " +
                      td.str("gt.json") + " --frames 0,15,31 --steps 4 --seed 4 --out " +
                      td.str("ib.json") + " --svg " + td.str("ib.svg"),
                  "ib.log") == 0);
  const ojson m = ojson::parse(read_text_file(td.str("ib.json")));
  CHECK(m.at("frames").get<int64_t>() == 32);
  const std::string svg = read_text_file(td.str("ib.svg"));
  CHECK(svg.find("<animate ") != std::string::npos);

  REQUIRE(run_cli(td,
                  "export-svg --motion " + td.str("gt.json") + " --out " + td.str("gt.svg"),
                  "exp.log") == 0);
  CHECK(read_text_file(td.str("gt.svg")).find("<svg ") != std::string::npos);
}

TEST_CASE("bad input exits 1 with a single-line error") {
  const TempDir& td = fixture();
  CHECK(run_cli(td, "sample --no-such-flag", "e1.log") == 1);
  CHECK(run_cli(td,
                "evaluate --pred " + td.str("est.json") + " --gt " + td.str("nope.json"),
                "e2.log") == 1);
  CHECK(run_cli(td, "frobnicate", "e3.log") == 1);
  for (const char* log : {"e1.log", "e2.log", "e3.log"}) {
    const std::string text = read_text_file(td.str(log));
    CAPTURE(log);
    CHECK(text.find("error: ") != std::string::npos);
    // the error itself is one line
    const size_t at = text.find("error: ");
    const size_t eol = text.find('\n', at);
    CHECK(eol == text.size() - 1);
  }
}
