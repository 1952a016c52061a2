// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "mogen/datagen.hpp"

using namespace mogen;

namespace {

// World positions of joint j, row-major (N, J, 3).
std::array<double, 3> joint_at(const std::vector<double>& wj, int joints, int64_t i, int j) {
  const size_t base = (static_cast<size_t>(i) * joints + static_cast<size_t>(j)) * 3;
  return {wj[base], wj[base + 1], wj[base + 2]};
}

double dist3(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

}  // namespace

TEST_CASE("every family synthesizes a valid sequence starting at the origin") {
  for (const auto& fam : kFamilies) {
    RngStream rng(11, "fam/" + fam);
    FamilyOutput out = synth_motion(fam, 48, 30.0, rng);
    CHECK(out.seq.length() == 48);
    const WorldTrajectory traj = world_trajectory(out.seq);
    CHECK(traj.T[0][0] == 0.0);
    CHECK(traj.T[0][1] == 0.0);
    CHECK(traj.T[0][2] == 0.0);
    const Tensor x = flatten(out.seq);
    for (int64_t i = 0; i < x.numel(); ++i) CHECK(std::isfinite(x.data()[i]));
    // contacts channel is a binary stance mask
    for (const auto& f : out.seq.frames) {
      for (double c : f.contacts) CHECK((c == 0.0 || c == 1.0));
      CHECK(f.contacts[2] == 0.0);  // hands never in contact
      CHECK(f.contacts[3] == 0.0);
    }
    CHECK((fam == "dance" ? !out.beats.empty() : out.beats.empty()));
  }
  RngStream rng(11, "bad");
  CHECK_THROWS_AS((void)synth_motion("moonwalk", 48, 30.0, rng), Error);
}

TEST_CASE("bone lengths are exact for scaled bodies") {
  RngStream rng(5, "bones");
  FamilyOutput out = synth_motion("run", 48, 30.0, rng);
  const Skeleton sk = out.seq.skeleton;
  const double sg = out.seq.frames[0].shape[0];
  const double sl = out.seq.frames[0].shape[1];
  const std::vector<double> wj = world_joints(out.seq);
  for (int64_t i = 0; i < out.seq.length(); ++i) {
    for (int j = 1; j < sk.joints; ++j) {
      const double rest = std::sqrt(sk.offsets[static_cast<size_t>(j)][0] * sk.offsets[static_cast<size_t>(j)][0] +
                                    sk.offsets[static_cast<size_t>(j)][1] * sk.offsets[static_cast<size_t>(j)][1] +
                                    sk.offsets[static_cast<size_t>(j)][2] * sk.offsets[static_cast<size_t>(j)][2]);
      const double want = rest * sg * (sk.limb_mask[static_cast<size_t>(j)] ? sl : 1.0);
      const double got = dist3(joint_at(wj, sk.joints, i, j),
                               joint_at(wj, sk.joints, i, sk.parents[static_cast<size_t>(j)]));
      CHECK(got == doctest::Approx(want).epsilon(1e-9));
    }
  }
}

TEST_CASE("stance feet are planted exactly and share one ground height") {
  for (const std::string fam : {"walk", "run", "circle", "spin"}) {
    RngStream rng(7, "plant/" + fam);
    FamilyOutput out = synth_motion(fam, 48, 30.0, rng);
    const std::vector<double> wj = world_joints(out.seq);
    const int feet[2] = {8, 11};
    int stance_frames = 0, swing_frames = 0;
    for (int side = 0; side < 2; ++side) {
      double ground = 0.0;
      bool seen = false;
      for (int64_t i = 0; i + 1 < out.seq.length(); ++i) {
        const bool s0 = out.seq.frames[static_cast<size_t>(i)].contacts[static_cast<size_t>(side)] == 1.0;
        const bool s1 = out.seq.frames[static_cast<size_t>(i + 1)].contacts[static_cast<size_t>(side)] == 1.0;
        (s0 ? stance_frames : swing_frames)++;
        const auto p0 = joint_at(wj, 12, i, feet[side]);
        if (s0 && s1) {
          // planted: zero world displacement across consecutive stance frames
          CHECK(dist3(p0, joint_at(wj, 12, i + 1, feet[side])) < 1e-9);
        }
        if (s0) {
          if (!seen) {
            ground = p0[1];
            seen = true;
          }
          CHECK(std::fabs(p0[1] - ground) < 1e-9);  // same height at every plant
        }
      }
      CHECK(seen);
    }
    CHECK(stance_frames > 0);
    CHECK(swing_frames > 0);  // gait families actually lift their feet
  }
}

TEST_CASE("still keeps both feet planted through the whole clip") {
  RngStream rng(9, "still");
  FamilyOutput out = synth_motion("still", 48, 30.0, rng);
  const std::vector<double> wj = world_joints(out.seq);
  for (int side = 0; side < 2; ++side) {
    const auto p0 = joint_at(wj, 12, 0, side == 0 ? 8 : 11);
    for (int64_t i = 0; i < 48; ++i) {
      CHECK(out.seq.frames[static_cast<size_t>(i)].contacts[static_cast<size_t>(side)] == 1.0);
      CHECK(dist3(p0, joint_at(wj, 12, i, side == 0 ? 8 : 11)) < 1e-9);
    }
  }
}

TEST_CASE("jump has a contact-free flight with a raised pelvis") {
  RngStream rng(3, "jump");
  FamilyOutput out = synth_motion("jump", 48, 30.0, rng);
  const WorldTrajectory traj = world_trajectory(out.seq);
  int airborne = 0;
  double max_y = 0.0;
  for (int64_t i = 0; i < 48; ++i) {
    const auto& c = out.seq.frames[static_cast<size_t>(i)].contacts;
    if (c[0] == 0.0 && c[1] == 0.0) ++airborne;
    max_y = std::max(max_y, traj.T[static_cast<size_t>(i)][1]);
  }
  CHECK(airborne >= 10);
  CHECK(airborne <= 20);
  CHECK(max_y > 0.15);
  // grounded before and after the event
  CHECK(out.seq.frames[0].contacts[0] == 1.0);
  CHECK(out.seq.frames[47].contacts[0] == 1.0);
  // pelvis height changes smoothly (no single-frame teleport)
  for (int64_t i = 0; i + 1 < 48; ++i) {
    CHECK(std::fabs(traj.T[static_cast<size_t>(i + 1)][1] - traj.T[static_cast<size_t>(i)][1]) < 0.12);
  }
}

TEST_CASE("wave raises one hand above its shoulder mid-clip") {
  for (int trial = 0; trial < 4; ++trial) {
    RngStream rng(20 + static_cast<uint64_t>(trial), "wave");
    FamilyOutput out = synth_motion("wave", 48, 30.0, rng);
    const std::vector<double> wj = world_joints(out.seq);
    int raised_frames = 0;
    for (int64_t i = 12; i < 36; ++i) {
      const double lh = joint_at(wj, 12, i, 3)[1] - joint_at(wj, 12, i, 2)[1];
      const double rh = joint_at(wj, 12, i, 5)[1] - joint_at(wj, 12, i, 4)[1];
      if (std::max(lh, rh) > 0.0) ++raised_frames;
    }
    CHECK(raised_frames == 24);
    // feet stay planted while waving
    for (const auto& f : out.seq.frames) {
      CHECK(f.contacts[0] == 1.0);
      CHECK(f.contacts[1] == 1.0);
    }
  }
}

TEST_CASE("dance joint-speed minima land on the beat frames") {
  RngStream rng(4, "dance");
  FamilyOutput out = synth_motion("dance", 48, 30.0, rng);
  REQUIRE(!out.beats.empty());
  CHECK(out.beats[0] == 0);
  const std::vector<double> wj = world_joints(out.seq);
  const int64_t n = out.seq.length();
  std::vector<double> speed(static_cast<size_t>(n - 1), 0.0);
  for (int64_t i = 0; i + 1 < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < 12; ++j) s += dist3(joint_at(wj, 12, i, j), joint_at(wj, 12, i + 1, j));
    speed[static_cast<size_t>(i)] = s;
  }
  const int64_t P = out.beats[1] - out.beats[0];
  for (int64_t b : out.beats) {
    if (b == 0 || b + P / 2 >= n - 1) continue;  // interior beats only
    int64_t best = b - P / 2;
    for (int64_t i = b - P / 2; i <= b + P / 2 && i < n - 1; ++i) {
      if (speed[static_cast<size_t>(i)] < speed[static_cast<size_t>(best)]) best = i;
    }
    // discrete speed samples straddle the beat, so allow one frame of slack
    CHECK(std::llabs(best - b) <= 1);
  }
}

TEST_CASE("synthesis is deterministic for a fixed stream") {
  for (const auto& fam : kFamilies) {
    RngStream a(123, "det/" + fam), b(123, "det/" + fam);
    const Tensor xa = flatten(synth_motion(fam, 48, 30.0, a).seq);
    const Tensor xb = flatten(synth_motion(fam, 48, 30.0, b).seq);
    REQUIRE(xa.numel() == xb.numel());
    for (int64_t i = 0; i < xa.numel(); ++i) CHECK(xa.data()[i] == xb.data()[i]);
  }
}

TEST_CASE("camera rigs keep the subject in front of the lens") {
  RngStream rng(6, "rig");
  FamilyOutput out = synth_motion("walk", 48, 30.0, rng);
  for (const std::string rig : {"static", "orbit", "pan", "handheld"}) {
    RngStream crng(6, "rig/" + rig);
    const auto cams = make_camera_rig(rig, out.seq, crng);
    REQUIRE(cams.size() == 48);
    const WorldTrajectory traj = world_trajectory(out.seq);
    for (int64_t i = 0; i < 48; ++i) {
      // camera-space pelvis depth is positive and a few meters out
      const Vec3 d = vec3_sub(traj.T[static_cast<size_t>(i)], cams[static_cast<size_t>(i)].t);
      const Vec3 pc = mat3_apply(mat3_transpose(cams[static_cast<size_t>(i)].R), d);
      CHECK(pc[2] > 1.5);
      CHECK(pc[2] < 6.0);
    }
    if (rig == "static") {
      CHECK(dist3(cams[0].t, cams[47].t) < 1e-12);
    } else if (rig == "orbit") {
      CHECK(dist3(cams[0].t, cams[47].t) > 0.3);
    }
  }
}

TEST_CASE("music features peak on the beat") {
  const Tensor m = make_music_features(48, 12, 8);
  REQUIRE(m.dim(0) == 48);
  REQUIRE(m.dim(1) == 8);
  for (int64_t b : {0, 12, 24, 36}) {
    CHECK(m.data()[b * 8 + 0] == doctest::Approx(1.0));  // envelope resets
    CHECK(m.data()[b * 8 + 1] == doctest::Approx(1.0));  // cos(phase) = 1
    CHECK(m.data()[b * 8 + 2] == doctest::Approx(0.0).epsilon(1e-12));
  }
  // envelope decays between beats
  CHECK(m.data()[3 * 8 + 0] < 0.5);
  CHECK_THROWS_AS((void)make_music_features(48, 12, 4), Error);
}

TEST_CASE("video features are a stable projection with a per-sequence latent") {
  RngStream rng(8, "vid-seq");
  FamilyOutput out = synth_motion("walk", 48, 30.0, rng);
  const auto cams = make_camera_rig("static", out.seq, rng);
  attach_camera(out.seq, cams);
  const Tensor kp = make_kp2d(out.seq, CameraIntrinsics{});
  RngStream v1(9, "vid"), v2(9, "vid"), v3(10, "vid");
  const Tensor f1 = make_video_features(kp, 12, 32, v1);
  const Tensor f2 = make_video_features(kp, 12, 32, v2);
  const Tensor f3 = make_video_features(kp, 12, 32, v3);
  REQUIRE(f1.dim(0) == 48);
  REQUIRE(f1.dim(1) == 32);
  double same = 0.0, diff = 0.0;
  for (int64_t i = 0; i < f1.numel(); ++i) {
    same += std::fabs(f1.data()[i] - f2.data()[i]);
    diff += std::fabs(f1.data()[i] - f3.data()[i]);
  }
  CHECK(same == 0.0);  // same stream -> identical features
  CHECK(diff > 1.0);   // different stream -> different noise + latent
}

TEST_CASE("dataset is deterministic with correct menus, splits and prompts") {
  DatasetParams p;
  p.n_mocap3d = 8;
  p.n_text3d = 8;
  p.n_text2d = 6;
  p.n_music3d = 4;
  const auto ds = make_dataset(p);
  REQUIRE(static_cast<int64_t>(ds.size()) == 26);

  std::set<std::string> ids;
  int n_test = 0, n_wave_2d = 0;
  for (const auto& s : ds) {
    CHECK(ids.insert(s.id).second);
    CHECK(s.seq.length() == p.n_frames);
    validate_conditions(s.cond, p.n_frames, s.seq.skeleton.joints);
    if (s.split == "test") ++n_test;

    if (s.subset == "mocap3d") {
      CHECK(s.cond.video.defined());
      CHECK(s.cond.kp2d.defined());
      CHECK(s.cond.camera.defined());
      CHECK(s.cond.bbox.defined());
      CHECK(s.cond.prompts.empty());
      CHECK(!s.cond.music.defined());
      CHECK(s.has_3d);
      CHECK(s.family != "wave");
    } else if (s.subset == "text3d") {
      CHECK(!s.cond.video.defined());
      CHECK(!s.cond.kp2d.defined());
      CHECK(!s.cond.prompts.empty());
      CHECK(s.has_3d);
      CHECK(s.family != "wave");
    } else if (s.subset == "text2d") {
      CHECK(s.cond.kp2d.defined());
      CHECK(s.cond.bbox.defined());
      CHECK(!s.cond.video.defined());
      CHECK(!s.cond.camera.defined());
      CHECK(!s.cond.prompts.empty());
      CHECK(!s.has_3d);
      if (s.family == "wave") ++n_wave_2d;
    } else if (s.subset == "music3d") {
      CHECK(s.cond.music.defined());
      CHECK(!s.cond.video.defined());
      CHECK(s.cond.prompts.empty());
      CHECK(s.has_3d);
      CHECK(s.family == "dance");
      CHECK(!s.beats.empty());
    } else {
      FAIL("unknown subset ", s.subset);
    }
    // prompt text stays inside the known vocabulary
    for (const auto& pr : s.cond.prompts) {
      CHECK(!pr.tokens.empty());
      for (int64_t t : pr.tokens) CHECK(t != 0);
      CHECK(pr.win_start < pr.win_end);
      CHECK(pr.win_end <= p.n_frames);
    }
  }
  CHECK(n_test == 4);  // every seventh entry of each subset
  CHECK(n_wave_2d >= 2);

  // 2D observations mostly land inside the image
  double valid = 0.0, total = 0.0;
  for (const auto& s : ds) {
    if (!s.cond.kp2d.defined()) continue;
    for (int64_t i = 0; i < s.cond.kp2d.dim(0); ++i) {
      for (int j = 0; j < 12; ++j) {
        valid += s.cond.kp2d.data()[i * 36 + j * 3 + 2];
        total += 1.0;
      }
    }
  }
  CHECK(valid / total > 0.85);

  // byte-for-byte reproducible
  const auto ds2 = make_dataset(p);
  for (size_t k : {size_t(0), size_t(9), size_t(20), size_t(25)}) {
    const Tensor xa = flatten(ds[k].seq), xb = flatten(ds2[k].seq);
    for (int64_t i = 0; i < xa.numel(); ++i) CHECK(xa.data()[i] == xb.data()[i]);
    CHECK(ds[k].K.f == ds2[k].K.f);
    if (ds[k].cond.kp2d.defined()) {
      for (int64_t i = 0; i < ds[k].cond.kp2d.numel(); ++i) {
        CHECK(ds[k].cond.kp2d.data()[i] == ds2[k].cond.kp2d.data()[i]);
      }
    }
  }
}
