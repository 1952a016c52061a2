// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mogen/conditioning.hpp"
#include "mogen/motion.hpp"

using namespace mogen;

TEST_CASE("vocabulary maps words stably and unknowns to <unk>") {
  CHECK(vocab_size() == 40);
  CHECK(vocab()[0] == "<unk>");
  const auto ids = tokenize("A person walks forward, slowly!");
  REQUIRE(ids.size() == 5);
  CHECK(vocab()[static_cast<size_t>(ids[0])] == "a");
  CHECK(vocab()[static_cast<size_t>(ids[1])] == "person");
  CHECK(vocab()[static_cast<size_t>(ids[2])] == "walks");
  CHECK(vocab()[static_cast<size_t>(ids[3])] == "forward");
  CHECK(vocab()[static_cast<size_t>(ids[4])] == "slowly");
  const auto unk = tokenize("zebra walks");
  CHECK(unk[0] == 0);
  CHECK(unk[1] == ids[2]);
}

TEST_CASE("prompt windows gate exactly the covered frames") {
  const TextPrompt p = make_prompt("wave the left hand", 3, 7);
  const auto g = prompt_gate(p, 10);
  for (int i = 0; i < 10; ++i) CHECK(g[static_cast<size_t>(i)] == ((i >= 3 && i < 7) ? 1.0 : 0.0));
  CHECK_THROWS_AS(make_prompt("walk", 5, 5), Error);
  CHECK_THROWS_AS(make_prompt("", 0, 4), Error);
}

TEST_CASE("condition validation catches shape and window errors") {
  ConditionSet c;
  c.frames = 8;
  c.kp2d = Tensor::zeros({8, 36});
  validate_conditions(c, 8, 12);
  c.kp2d = Tensor::zeros({8, 35});
  CHECK_THROWS_AS(validate_conditions(c, 8, 12), Error);
  c.kp2d = Tensor();
  c.prompts.push_back(make_prompt("run", 0, 4));
  c.prompts[0].win_start = 9;  // beyond the sequence
  CHECK_THROWS_AS(validate_conditions(c, 8, 12), Error);
}

namespace {
MotionSequence camera_facing_rest(int64_t n) {
  MotionSequence seq;
  seq.skeleton = Skeleton::toy12();
  seq.frames.assign(static_cast<size_t>(n), make_rest_frame(seq.skeleton));
  std::vector<CameraPose> cams(static_cast<size_t>(n));
  for (auto& c : cams) {
    c.t = {0.0, 0.3, -3.0};
    c.R = look_at(c.t, {0, 0.3, 0});
  }
  attach_camera(seq, cams);
  return seq;
}
}  // namespace

TEST_CASE("keypoints project the pelvis to the principal point for a centered camera") {
  MotionSequence seq = camera_facing_rest(3);
  CameraIntrinsics K;
  const Tensor kp = make_kp2d(seq, K);
  CHECK(kp.dim(0) == 3);
  CHECK(kp.dim(1) == 36);
  // camera looks at (0, 0.3, 0); pelvis world pos is (0, 0, 0) -> below center
  const double x0 = kp.data()[0], y0 = kp.data()[1], v0 = kp.data()[2];
  CHECK(v0 == 1.0);
  CHECK(x0 == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(y0 > 0.0);  // image y grows downward
  // head (joint 1, world y=0.6) appears above center: negative normalized y
  CHECK(kp.data()[1 * 3 + 2] == 1.0);
  CHECK(kp.data()[1 * 3 + 1] < 0.0);
}

TEST_CASE("keypoints behind the camera or out of frame are invalid") {
  MotionSequence seq = camera_facing_rest(2);
  // move the camera so the subject is behind it
  std::vector<CameraPose> cams(2);
  for (auto& c : cams) {
    c.t = {0.0, 0.3, -3.0};
    c.R = look_at(c.t, {0.0, 0.3, -6.0});  // looking away
  }
  attach_camera(seq, cams);
  const Tensor kp = make_kp2d(seq, CameraIntrinsics{});
  for (int64_t i = 0; i < kp.numel(); ++i) CHECK(kp.data()[i] == 0.0);
}

TEST_CASE("bbox wraps the valid keypoints and zeroes empty rows") {
  Tensor kp = Tensor::zeros({2, 36});
  // row 0: two valid joints at (-0.1, 0.2) and (0.3, 0.4)
  kp.data()[0] = -0.1;
  kp.data()[1] = 0.2;
  kp.data()[2] = 1.0;
  kp.data()[3] = 0.3;
  kp.data()[4] = 0.4;
  kp.data()[5] = 1.0;
  const Tensor bb = make_bbox(kp, 12);
  CHECK(bb.data()[0] == doctest::Approx(0.1));
  CHECK(bb.data()[1] == doctest::Approx(0.3));
  CHECK(bb.data()[2] == doctest::Approx(0.4));
  CHECK(bb.data()[3] == doctest::Approx(0.2));
  for (int k = 0; k < 4; ++k) CHECK(bb.data()[4 + k] == 0.0);
}

TEST_CASE("camera channel mirrors the pose camera fields") {
  MotionSequence seq = camera_facing_rest(2);
  const Tensor cc = make_camera_channel(seq);
  CHECK(cc.dim(1) == 9);
  for (int k = 0; k < 6; ++k) {
    CHECK(cc.data()[k] == seq.frames[0].cam_orient[static_cast<size_t>(k)]);
  }
  CHECK(cc.data()[8] == doctest::Approx(-3.0));
}

TEST_CASE("keypoint perturbation respects validity and dropout zeroes joints") {
  MotionSequence seq = camera_facing_rest(4);
  const Tensor kp = make_kp2d(seq, CameraIntrinsics{});
  RngStream rng(7, "perturb");
  const Tensor noisy = perturb_kp2d(kp, 12, 0.01, 0.5, rng);
  int dropped = 0, moved = 0;
  for (int64_t i = 0; i < kp.dim(0) * 12; ++i) {
    const double* a = kp.data() + i * 3;
    const double* b = noisy.data() + i * 3;
    if (a[2] == 1.0 && b[2] == 0.0) {
      ++dropped;
      CHECK(b[0] == 0.0);
      CHECK(b[1] == 0.0);
    } else if (a[2] == 1.0) {
      CHECK(b[0] != a[0]);
      ++moved;
    }
  }
  CHECK(dropped > 0);
  CHECK(moved > 0);
}

TEST_CASE("condition dropout removes whole modalities with the configured rate") {
  ConditionSet c;
  c.frames = 4;
  c.video = Tensor::zeros({4, 8});
  c.music = Tensor::zeros({4, 8});
  c.prompts.push_back(make_prompt("walk", 0, 4));
  RngStream rng(3, "drop");
  int video_kept = 0, prompts_kept = 0;
  const int trials = 2000;
  for (int i = 0; i < trials; ++i) {
    const ConditionSet d = drop_conditions(c, 0.25, 0.25, rng);
    video_kept += d.video.defined() ? 1 : 0;
    prompts_kept += d.prompts.empty() ? 0 : 1;
  }
  CHECK(video_kept > trials * 0.70);
  CHECK(video_kept < trials * 0.80);
  // prompt survives modality gate (0.75) times per-prompt gate (0.75)
  CHECK(prompts_kept > trials * 0.51);
  CHECK(prompts_kept < trials * 0.62);
}
