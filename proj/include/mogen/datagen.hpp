// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mogen/conditioning.hpp"
#include "mogen/motion.hpp"
#include "mogen/rng.hpp"

namespace mogen {

// A synthesized motion with its construction-time ground truth.
struct FamilyOutput {
  MotionSequence seq;  // contacts channel holds the constructed stance mask
  std::vector<int64_t> beats;  // beat frames (dance family), else empty
};

// Procedural motion families. All sequences start at the world origin
// (T[0] = 0), keep exact bone lengths and plant stance feet exactly
// (zero world displacement across stance frames).
//   walk    straight walk, forward or backward
//   run     faster gait with a flight phase (duty < 0.5)
//   circle  walk along a circular arc
//   spin    turn in place with stepping feet
//   still   stand with subtle arm sway
//   jump    vertical jump: crouch, parabolic flight (no contacts), landing
//   wave    stand and wave one raised hand
//   dance   bounce and loop the arms so joint-speed minima land on beats
extern const std::vector<std::string> kFamilies;

FamilyOutput synth_motion(const std::string& family, int64_t n_frames, double fps,
                          RngStream& rng);

// Smooth camera rigs: static, orbit, pan (tracks the subject), handheld.
std::vector<CameraPose> make_camera_rig(const std::string& rig, const MotionSequence& seq,
                                        RngStream& rng);

// Appearance-like per-frame features: a fixed random projection of noisy 2D
// keypoints plus a per-sequence identity latent. (N, d_video)
Tensor make_video_features(const Tensor& kp2d, int joints, int64_t d_video, RngStream& rng);

// Beat-locked audio features: decaying beat envelope, beat-phase harmonics
// and tempo. (N, d_music with d_music >= 8 uses the first 8 channels)
Tensor make_music_features(int64_t n_frames, int64_t beat_period, int64_t d_music);

// One dataset entry: ground-truth sequence plus the subset's condition menu.
struct DataSample {
  std::string id;
  std::string subset;  // mocap3d | text3d | text2d | music3d
  std::string family;
  std::string split;   // train | test
  MotionSequence seq;
  CameraIntrinsics K;
  ConditionSet cond;
  std::vector<int64_t> beats;
  bool has_3d = true;  // text2d entries train without their 3D ground truth
};

struct DatasetParams {
  int64_t n_mocap3d = 800;
  int64_t n_text3d = 600;
  int64_t n_text2d = 360;
  int64_t n_music3d = 240;
  int64_t n_frames = 48;
  double fps = 30.0;
  uint64_t seed = 1234;
};

// Deterministic synthetic corpus. Subset menus:
//   mocap3d  video + kp2d + camera + bbox      (3D supervision)
//   text3d   text prompts only                  (3D supervision)
//   text2d   kp2d + bbox + text                 (2D supervision only;
//            the wave family appears exclusively here)
//   music3d  music only                         (3D supervision)
// Every seventh entry of each subset is assigned to the test split.
std::vector<DataSample> make_dataset(const DatasetParams& p);

}  // namespace mogen
