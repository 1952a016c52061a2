// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mogen/motion.hpp"
#include "mogen/rng.hpp"
#include "mogen/tensor.hpp"

namespace mogen {

// --- Prompt text ------------------------------------------------------------

// Fixed closed vocabulary; id 0 is <unk>.
const std::vector<std::string>& vocab();
int64_t vocab_size();

// Lowercases, strips punctuation, splits on whitespace; unknown words map
// to <unk>. Returns one id per word.
std::vector<int64_t> tokenize(const std::string& text);

// A text prompt scoped to a frame window [win_start, win_end).
struct TextPrompt {
  std::string text;
  std::vector<int64_t> tokens;
  int64_t win_start = 0;
  int64_t win_end = 0;
};

TextPrompt make_prompt(const std::string& text, int64_t win_start, int64_t win_end);

// 1.0 for frames inside the prompt window, 0.0 outside.
std::vector<double> prompt_gate(const TextPrompt& p, int64_t n_frames);

// --- Per-frame condition channels --------------------------------------------

// Input conditions for one sequence. An undefined tensor means the modality
// is absent; the model substitutes its learned null embedding.
struct ConditionSet {
  int64_t frames = 0;
  Tensor video;   // (N, d_video) appearance features
  Tensor camera;  // (N, 9): camera 6D orientation + world translation
  Tensor kp2d;    // (N, 3J): normalized (x, y, valid) per joint
  Tensor music;   // (N, d_music) audio features
  Tensor bbox;    // (N, 4): normalized center x/y, width, height
  std::vector<TextPrompt> prompts;

  bool any_defined() const {
    return video.defined() || camera.defined() || kp2d.defined() || music.defined() ||
           bbox.defined() || !prompts.empty();
  }
};

// Shape/window validation; throws Error on mismatch.
void validate_conditions(const ConditionSet& c, int64_t n_frames, int joints);

// Projects the sequence's camera-space joints through the pinhole camera and
// normalizes pixels to camera-plane units: x = (u - cx) / f, y = (v - cy) / f.
// Joints behind the camera or outside the image get valid = 0 and zeroed
// coordinates. Returns (N, 3J) rows of (x, y, valid).
Tensor make_kp2d(const MotionSequence& seq, const CameraIntrinsics& K);

// Tight box around the valid keypoints of each row of a (N, 3J) kp2d tensor,
// as (center_x, center_y, width, height) in the same normalized units.
// Rows without any valid joint are zero.
Tensor make_bbox(const Tensor& kp2d, int joints);

// Camera condition channel from the sequence's camera pose channels:
// per frame, 6D orientation followed by world translation. (N, 9)
Tensor make_camera_channel(const MotionSequence& seq);

// Additive keypoint noise + random joint dropout, in normalized units.
// Dropped joints get valid = 0 and zeroed coordinates.
Tensor perturb_kp2d(const Tensor& kp2d, int joints, double noise_std, double p_drop,
                    RngStream& rng);

// Training-time condition dropout: each modality is independently removed
// with probability p_modality, each prompt with p_prompt. Text is treated as
// one modality gate plus per-prompt gates.
ConditionSet drop_conditions(const ConditionSet& c, double p_modality, double p_prompt,
                             RngStream& rng);

}  // namespace mogen
