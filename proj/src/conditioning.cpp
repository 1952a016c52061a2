// SPDX-License-Identifier: Apache-2.0
#include "mogen/conditioning.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <unordered_map>

#include "mogen/kernels.hpp"

namespace mogen {

const std::vector<std::string>& vocab() {
  static const std::vector<std::string> words = {
      "<unk>",  "a",       "person",   "the",    "walks",  "walk",   "runs",
      "run",    "stands",  "still",    "waves",  "wave",   "hand",   "left",
      "right",  "jumps",   "jump",     "place",  "spins",  "spin",   "around",
      "dances", "dance",   "beat",     "music",  "to",     "in",     "circle",
      "forward", "backward", "slowly", "quickly", "fast",   "slow",   "and",
      "then",   "bounces", "bounce",   "arm",    "raises",
  };
  return words;
}

int64_t vocab_size() { return static_cast<int64_t>(vocab().size()); }

std::vector<int64_t> tokenize(const std::string& text) {
  static const std::unordered_map<std::string, int64_t> index = [] {
    std::unordered_map<std::string, int64_t> m;
    const auto& w = vocab();
    for (size_t i = 0; i < w.size(); ++i) m[w[i]] = static_cast<int64_t>(i);
    return m;
  }();
  std::string cleaned;
  cleaned.reserve(text.size());
  for (char ch : text) {
    if (std::isalpha(static_cast<unsigned char>(ch))) {
      cleaned.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    } else if (std::isspace(static_cast<unsigned char>(ch))) {
      cleaned.push_back(' ');
    } else {
      cleaned.push_back(' ');  // punctuation splits words
    }
  }
  std::istringstream is(cleaned);
  std::vector<int64_t> ids;
  std::string word;
  while (is >> word) {
    auto it = index.find(word);
    ids.push_back(it == index.end() ? 0 : it->second);
  }
  return ids;
}

TextPrompt make_prompt(const std::string& text, int64_t win_start, int64_t win_end) {
  TextPrompt p;
  p.text = text;
  p.tokens = tokenize(text);
  p.win_start = win_start;
  p.win_end = win_end;
  if (p.tokens.empty()) fail_value("make_prompt: no tokens in \"", text, "\"");
  if (win_start < 0 || win_end <= win_start) {
    fail_value("make_prompt: bad window [", win_start, ", ", win_end, ")");
  }
  return p;
}

std::vector<double> prompt_gate(const TextPrompt& p, int64_t n_frames) {
  std::vector<double> g(static_cast<size_t>(n_frames), 0.0);
  const int64_t lo = std::max<int64_t>(0, p.win_start);
  const int64_t hi = std::min<int64_t>(n_frames, p.win_end);
  for (int64_t i = lo; i < hi; ++i) g[static_cast<size_t>(i)] = 1.0;
  return g;
}

void validate_conditions(const ConditionSet& c, int64_t n_frames, int joints) {
  auto check = [&](const Tensor& t, const char* name, int64_t width) {
    if (!t.defined()) return;
    if (t.rank() != 2 || t.dim(0) != n_frames || (width > 0 && t.dim(1) != width)) {
      fail_shape("conditions: ", name, " has shape ", shape_str(t.shape()), ", expected (",
                 n_frames, ",", width > 0 ? std::to_string(width) : std::string("d"), ")");
    }
  };
  if (c.frames != n_frames) {
    fail_shape("conditions: frame count ", c.frames, " vs sequence length ", n_frames);
  }
  check(c.video, "video", -1);
  check(c.camera, "camera", 9);
  check(c.kp2d, "kp2d", static_cast<int64_t>(joints) * 3);
  check(c.music, "music", -1);
  check(c.bbox, "bbox", 4);
  for (const auto& p : c.prompts) {
    if (p.tokens.empty()) fail_value("conditions: prompt without tokens");
    if (p.win_start < 0 || p.win_end <= p.win_start || p.win_start >= n_frames) {
      fail_value("conditions: prompt window [", p.win_start, ", ", p.win_end,
                 ") out of range for ", n_frames, " frames");
    }
  }
}

Tensor make_kp2d(const MotionSequence& seq, const CameraIntrinsics& K) {
  const int J = seq.skeleton.joints;
  const int64_t N = seq.length();
  const std::vector<double> pc = camera_joints(seq);
  const int64_t P = N * J;
  std::vector<double> uv(static_cast<size_t>(P) * 2);
  std::vector<double> valid(static_cast<size_t>(P));
  kernels::project_rows(P, pc.data(), K.f, K.cx, K.cy, K.z_near, uv.data(), valid.data());
  Tensor out = Tensor::zeros({N, static_cast<int64_t>(J) * 3});
  for (int64_t i = 0; i < N; ++i) {
    for (int j = 0; j < J; ++j) {
      const int64_t p = i * J + j;
      const double u = uv[static_cast<size_t>(p * 2)];
      const double v = uv[static_cast<size_t>(p * 2 + 1)];
      const bool in_image = valid[static_cast<size_t>(p)] > 0.5 && u >= 0.0 &&
                            u < static_cast<double>(K.width) && v >= 0.0 &&
                            v < static_cast<double>(K.height);
      double* row = out.data() + (i * J + j) * 3;
      if (in_image) {
        row[0] = (u - K.cx) / K.f;
        row[1] = (v - K.cy) / K.f;
        row[2] = 1.0;
      }
    }
  }
  return out;
}

Tensor make_bbox(const Tensor& kp2d, int joints) {
  if (kp2d.rank() != 2 || kp2d.dim(1) != static_cast<int64_t>(joints) * 3) {
    fail_shape("make_bbox: kp2d ", shape_str(kp2d.shape()), " for ", joints, " joints");
  }
  const int64_t N = kp2d.dim(0);
  Tensor out = Tensor::zeros({N, 4});
  for (int64_t i = 0; i < N; ++i) {
    const double* row = kp2d.data() + i * joints * 3;
    double lo_x = 0, hi_x = 0, lo_y = 0, hi_y = 0;
    bool any = false;
    for (int j = 0; j < joints; ++j) {
      if (row[j * 3 + 2] <= 0.5) continue;
      const double x = row[j * 3], y = row[j * 3 + 1];
      if (!any) {
        lo_x = hi_x = x;
        lo_y = hi_y = y;
        any = true;
      } else {
        lo_x = std::min(lo_x, x);
        hi_x = std::max(hi_x, x);
        lo_y = std::min(lo_y, y);
        hi_y = std::max(hi_y, y);
      }
    }
    if (any) {
      double* o = out.data() + i * 4;
      o[0] = 0.5 * (lo_x + hi_x);
      o[1] = 0.5 * (lo_y + hi_y);
      o[2] = hi_x - lo_x;
      o[3] = hi_y - lo_y;
    }
  }
  return out;
}

Tensor make_camera_channel(const MotionSequence& seq) {
  const int64_t N = seq.length();
  Tensor out = Tensor::zeros({N, 9});
  for (int64_t i = 0; i < N; ++i) {
    const PoseFrame& f = seq.frames[static_cast<size_t>(i)];
    double* o = out.data() + i * 9;
    for (int k = 0; k < 6; ++k) o[k] = f.cam_orient[static_cast<size_t>(k)];
    for (int k = 0; k < 3; ++k) o[6 + k] = f.cam_transl[static_cast<size_t>(k)];
  }
  return out;
}

Tensor perturb_kp2d(const Tensor& kp2d, int joints, double noise_std, double p_drop,
                    RngStream& rng) {
  if (kp2d.rank() != 2 || kp2d.dim(1) != static_cast<int64_t>(joints) * 3) {
    fail_shape("perturb_kp2d: kp2d ", shape_str(kp2d.shape()), " for ", joints, " joints");
  }
  Tensor out = kp2d.clone();
  const int64_t N = out.dim(0);
  for (int64_t i = 0; i < N; ++i) {
    double* row = out.data() + i * joints * 3;
    for (int j = 0; j < joints; ++j) {
      if (row[j * 3 + 2] <= 0.5) continue;
      if (rng.uniform() < p_drop) {
        row[j * 3] = 0.0;
        row[j * 3 + 1] = 0.0;
        row[j * 3 + 2] = 0.0;
        continue;
      }
      row[j * 3] += noise_std * rng.normal();
      row[j * 3 + 1] += noise_std * rng.normal();
    }
  }
  return out;
}

ConditionSet drop_conditions(const ConditionSet& c, double p_modality, double p_prompt,
                             RngStream& rng) {
  ConditionSet out = c;
  if (out.video.defined() && rng.uniform() < p_modality) out.video = Tensor();
  if (out.camera.defined() && rng.uniform() < p_modality) out.camera = Tensor();
  if (out.kp2d.defined() && rng.uniform() < p_modality) out.kp2d = Tensor();
  if (out.music.defined() && rng.uniform() < p_modality) out.music = Tensor();
  if (out.bbox.defined() && rng.uniform() < p_modality) out.bbox = Tensor();
  if (!out.prompts.empty()) {
    if (rng.uniform() < p_modality) {
      out.prompts.clear();
    } else {
      std::vector<TextPrompt> kept;
      for (const auto& p : out.prompts) {
        if (rng.uniform() >= p_prompt) kept.push_back(p);
      }
      out.prompts = std::move(kept);
    }
  }
  return out;
}

}  // namespace mogen
