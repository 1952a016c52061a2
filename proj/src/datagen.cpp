// SPDX-License-Identifier: Apache-2.0
#include "mogen/datagen.hpp"

#include <algorithm>
#include <cmath>

#include "mogen/common.hpp"

namespace mogen {

const std::vector<std::string> kFamilies = {"walk", "run",  "circle", "spin",
                                            "still", "jump", "wave",   "dance"};

namespace {

double smoothstep(double s) { return s * s * (3.0 - 2.0 * s); }

struct GaitParams {
  double stride = 0.5;   // meters per cycle
  double duty = 0.6;     // stance fraction of the cycle
  double lift = 0.045;   // swing foot apex height
  double crouch = 0.04;  // standing knee bend (pelvis drop below full reach)
  double bob = 0.008;    // pelvis vertical bob amplitude
  double arm_swing = 0.25;
  double turn_phase_gain = 0.35;  // meters of phase per radian of heading
};

// Exact two-bone leg inverse kinematics in the pelvis-local frame.
// d: hip -> target, l1/l2 thigh/shank lengths. Knee bends toward local +z.
struct LegIk {
  Mat3 hip;   // thigh rotation (joint frame)
  Mat3 knee;  // shank rotation relative to the thigh
};

LegIk leg_ik(const Vec3& d, double l1, double l2) {
  const double D = vec3_norm(d);
  if (D >= l1 + l2 - 1e-4) {
    fail_internal("leg IK target out of reach: ", D, " vs ", l1 + l2);
  }
  if (D < 1e-6) fail_internal("leg IK target collapsed onto the hip");
  const Vec3 dn = vec3_scale(d, 1.0 / D);
  auto clamp1 = [](double v) { return std::max(-1.0, std::min(1.0, v)); };
  const double psi = std::acos(clamp1((l1 * l1 + D * D - l2 * l2) / (2.0 * l1 * D)));
  Vec3 axis = vec3_cross(dn, {0, 0, 1});
  const double an = vec3_norm(axis);
  axis = an < 1e-9 ? Vec3{1, 0, 0} : vec3_scale(axis, 1.0 / an);
  const Vec3 thigh_dir = rotate_about(dn, axis, psi);
  const Vec3 knee_pos = vec3_scale(thigh_dir, l1);
  const Vec3 shank_dir = vec3_normalize(vec3_sub(d, knee_pos));
  const Mat3 r_thigh = minimal_rotation({0, -1, 0}, thigh_dir);
  const Mat3 r_chain = minimal_rotation({0, -1, 0}, shank_dir);
  LegIk out;
  out.hip = r_thigh;
  out.knee = mat3_mul(mat3_transpose(r_thigh), r_chain);
  return out;
}

struct BodyScale {
  double s_global = 1.0;
  double s_limb = 1.0;
  double l1, l2, hip_x, hip_y, reach;
  explicit BodyScale(double sg, double sl) : s_global(sg), s_limb(sl) {
    l1 = 0.42 * sg * sl;
    l2 = 0.42 * sg * sl;
    hip_x = 0.10 * sg;
    hip_y = -0.05 * sg;
    reach = l1 + l2;
  }
};

// Per-frame construction state shared by the family builders.
struct Rig {
  int64_t n;
  double fps;
  BodyScale body;
  std::vector<Mat3> R;       // pelvis heading
  std::vector<Vec3> T;       // pelvis world position (T[0] = 0)
  std::vector<double> phase; // gait phase in cycles
  MotionSequence seq;
  std::vector<std::array<double, 2>> foot_stance;  // per frame L/R stance flags

  Rig(int64_t n_frames, double fps_, const BodyScale& b)
      : n(n_frames), fps(fps_), body(b) {
    seq.skeleton = Skeleton::toy12();
    seq.fps = fps_;
    seq.frames.assign(static_cast<size_t>(n), make_rest_frame(seq.skeleton));
    for (auto& f : seq.frames) f.shape = {b.s_global, b.s_limb};
    R.assign(static_cast<size_t>(n), mat3_identity());
    T.assign(static_cast<size_t>(n), Vec3{0, 0, 0});
    phase.assign(static_cast<size_t>(n), 0.0);
    foot_stance.assign(static_cast<size_t>(n), {1.0, 1.0});
  }
};

// Heading angle of R_y-style pelvis rotations (atan2 of forward vector).
double heading_of(const Mat3& R) {
  // forward = R * (0,0,1)
  return std::atan2(R[2], R[8]);
}

Vec3 hip_world(const Rig& rig, int64_t i, int side /*0 = left, 1 = right*/) {
  const Vec3 off{side == 0 ? rig.body.hip_x : -rig.body.hip_x, rig.body.hip_y, 0.0};
  return vec3_add(rig.T[static_cast<size_t>(i)],
                  mat3_apply(rig.R[static_cast<size_t>(i)], off));
}

// Build phase from accumulated travel + heading change.
void fill_phase(Rig& rig, const GaitParams& g) {
  double p = 0.0;
  rig.phase[0] = 0.0;
  for (int64_t i = 1; i < rig.n; ++i) {
    const Vec3 d = vec3_sub(rig.T[static_cast<size_t>(i)], rig.T[static_cast<size_t>(i - 1)]);
    const double ds = std::sqrt(d[0] * d[0] + d[2] * d[2]);
    double dpsi = heading_of(rig.R[static_cast<size_t>(i)]) -
                  heading_of(rig.R[static_cast<size_t>(i - 1)]);
    while (dpsi > M_PI) dpsi -= 2.0 * M_PI;
    while (dpsi < -M_PI) dpsi += 2.0 * M_PI;
    p += (ds + g.turn_phase_gain * std::fabs(dpsi)) / g.stride;
    rig.phase[static_cast<size_t>(i)] = p;
  }
}

// Stance-exact locomotion legs: feet are planted at fixed world positions
// during stance and swing between plants with a smooth arc. Frames flagged
// in `skip` (airborne) are left untouched.
void fill_legs(Rig& rig, const GaitParams& g, double ground_y,
               const std::vector<char>* skip = nullptr) {
  const double offsets[2] = {0.0, 0.5};  // left phase, right phase
  for (int side = 0; side < 2; ++side) {
    // plant(n) = ground projection of the hip at the mid-stance of cycle n
    auto plant = [&](int64_t cyc) {
      const double target_phase = static_cast<double>(cyc) + g.duty * 0.5 + offsets[side];
      int64_t j = rig.n - 1;
      for (int64_t f = 0; f < rig.n; ++f) {
        if (rig.phase[static_cast<size_t>(f)] >= target_phase) {
          j = f;
          break;
        }
      }
      Vec3 p = hip_world(rig, j, side);
      p[1] = ground_y;
      return p;
    };
    for (int64_t i = 0; i < rig.n; ++i) {
      if (skip && (*skip)[static_cast<size_t>(i)]) continue;
      const double ph = rig.phase[static_cast<size_t>(i)] - offsets[side];
      const double cyc = std::floor(ph);
      const double u = ph - cyc;
      const int64_t c = static_cast<int64_t>(cyc);
      Vec3 target;
      bool stance;
      if (u < g.duty) {
        target = plant(c);
        stance = true;
      } else {
        const Vec3 a = plant(c), b = plant(c + 1);
        const double s = smoothstep((u - g.duty) / (1.0 - g.duty));
        target = {a[0] + (b[0] - a[0]) * s, ground_y, a[2] + (b[2] - a[2]) * s};
        const double travel = vec3_norm(vec3_sub(b, a));
        if (travel > 1e-9) {
          target[1] += g.lift * std::sin(M_PI * s);
        }
        stance = false;
      }
      rig.foot_stance[static_cast<size_t>(i)][static_cast<size_t>(side)] = stance ? 1.0 : 0.0;
      // pelvis-local IK
      const Vec3 q = mat3_apply(mat3_transpose(rig.R[static_cast<size_t>(i)]),
                                vec3_sub(target, rig.T[static_cast<size_t>(i)]));
      const Vec3 h0{side == 0 ? rig.body.hip_x : -rig.body.hip_x, rig.body.hip_y, 0.0};
      const LegIk ik = leg_ik(vec3_sub(q, h0), rig.body.l1, rig.body.l2);
      PoseFrame& f = rig.seq.frames[static_cast<size_t>(i)];
      const int hip_j = side == 0 ? 6 : 9;
      const int knee_j = side == 0 ? 7 : 10;
      f.joint_angles[static_cast<size_t>(hip_j)] = rot_to_6d(ik.hip);
      f.joint_angles[static_cast<size_t>(knee_j)] = rot_to_6d(ik.knee);
    }
  }
}

// Legs frozen in a bent "tucked" pose (airborne).
void fill_legs_tucked(Rig& rig, int64_t i, double tuck) {
  for (int side = 0; side < 2; ++side) {
    const double drop = rig.body.reach * (1.0 - 0.25 * tuck);
    const Vec3 d{0.0, -drop, -0.05 * tuck};
    const LegIk ik = leg_ik(d, rig.body.l1, rig.body.l2);
    PoseFrame& f = rig.seq.frames[static_cast<size_t>(i)];
    f.joint_angles[static_cast<size_t>(side == 0 ? 6 : 9)] = rot_to_6d(ik.hip);
    f.joint_angles[static_cast<size_t>(side == 0 ? 7 : 10)] = rot_to_6d(ik.knee);
    rig.foot_stance[static_cast<size_t>(i)][static_cast<size_t>(side)] = 0.0;
  }
}

void fill_arm_swing(Rig& rig, double amp, double time_period_frames) {
  for (int64_t i = 0; i < rig.n; ++i) {
    const double ph = rig.phase[static_cast<size_t>(i)];
    double a;
    if (time_period_frames > 0.0) {  // time-based sway (no locomotion phase)
      a = amp * std::sin(2.0 * M_PI * static_cast<double>(i) / time_period_frames);
    } else {
      a = amp * std::sin(2.0 * M_PI * ph);
    }
    PoseFrame& f = rig.seq.frames[static_cast<size_t>(i)];
    f.joint_angles[2] = rot_to_6d(rot_x(-a));  // left arm opposite the left leg
    f.joint_angles[4] = rot_to_6d(rot_x(a));
  }
}

void finish(Rig& rig, FamilyOutput& out) {
  WorldTrajectory traj;
  traj.R = rig.R;
  traj.T = rig.T;
  set_world_trajectory(rig.seq, traj);
  for (int64_t i = 0; i < rig.n; ++i) {
    PoseFrame& f = rig.seq.frames[static_cast<size_t>(i)];
    f.contacts = {rig.foot_stance[static_cast<size_t>(i)][0],
                  rig.foot_stance[static_cast<size_t>(i)][1], 0.0, 0.0};
  }
  out.seq = std::move(rig.seq);
}

// Shared straight/circular locomotion builder.
FamilyOutput build_locomotion(int64_t n, double fps, RngStream& rng, bool running,
                              double turn_rate, double speed_sign) {
  const BodyScale body(rng.uniform(0.97, 1.03), rng.uniform(0.97, 1.03));
  GaitParams g;
  double v;
  if (running) {
    v = rng.uniform(0.026, 0.033);
    g.stride = v * 18.0;
    g.duty = 0.4;
    g.lift = 0.08;
    g.crouch = 0.06;
    g.bob = 0.012;
    g.arm_swing = 0.5;
  } else {
    v = rng.uniform(0.012, 0.018);
    g.stride = v * 30.0;
    g.duty = 0.6;
    g.lift = 0.045;
    g.crouch = 0.05;
    g.bob = 0.008;
    g.arm_swing = 0.25;
  }
  Rig rig(n, fps, body);
  const double stand_h = -body.hip_y + body.reach - g.crouch;  // pelvis height
  const double ground_y = -stand_h;
  double psi = 0.0;
  Vec3 pos{0, 0, 0};
  for (int64_t i = 0; i < n; ++i) {
    rig.R[static_cast<size_t>(i)] = rot_y(psi);
    rig.T[static_cast<size_t>(i)] = pos;
    const Vec3 fwd = mat3_apply(rig.R[static_cast<size_t>(i)], {0, 0, 1});
    pos = vec3_add(pos, vec3_scale(fwd, speed_sign * v));
    psi += turn_rate;
  }
  fill_phase(rig, g);
  for (int64_t i = 0; i < n; ++i) {
    rig.T[static_cast<size_t>(i)][1] =
        -g.bob * 0.5 * (1.0 - std::cos(4.0 * M_PI * rig.phase[static_cast<size_t>(i)]));
  }
  fill_legs(rig, g, ground_y);
  fill_arm_swing(rig, g.arm_swing, 0.0);
  FamilyOutput out;
  finish(rig, out);
  return out;
}

FamilyOutput build_spin(int64_t n, double fps, RngStream& rng) {
  const BodyScale body(rng.uniform(0.97, 1.03), rng.uniform(0.97, 1.03));
  GaitParams g;
  g.stride = 0.3;
  g.duty = 0.6;
  g.lift = 0.03;
  g.crouch = 0.04;
  g.bob = 0.004;
  Rig rig(n, fps, body);
  const double ground_y = -(-body.hip_y + body.reach - g.crouch);
  const double omega = rng.uniform(0.02, 0.04) * (rng.uniform() < 0.5 ? 1.0 : -1.0);
  for (int64_t i = 0; i < n; ++i) {
    rig.R[static_cast<size_t>(i)] = rot_y(omega * static_cast<double>(i));
    rig.T[static_cast<size_t>(i)] = {0, 0, 0};
  }
  fill_phase(rig, g);
  for (int64_t i = 0; i < n; ++i) {
    rig.T[static_cast<size_t>(i)][1] =
        -g.bob * 0.5 * (1.0 - std::cos(4.0 * M_PI * rig.phase[static_cast<size_t>(i)]));
  }
  fill_legs(rig, g, ground_y);
  fill_arm_swing(rig, 0.12, 0.0);
  FamilyOutput out;
  finish(rig, out);
  return out;
}

FamilyOutput build_still(int64_t n, double fps, RngStream& rng, bool sway_arms) {
  const BodyScale body(rng.uniform(0.97, 1.03), rng.uniform(0.97, 1.03));
  GaitParams g;
  g.crouch = 0.035;
  Rig rig(n, fps, body);
  const double ground_y = -(-body.hip_y + body.reach - g.crouch);
  fill_phase(rig, g);  // all zero: feet stay planted
  fill_legs(rig, g, ground_y);
  if (sway_arms) fill_arm_swing(rig, 0.03, 40.0);
  FamilyOutput out;
  finish(rig, out);
  return out;
}

FamilyOutput build_jump(int64_t n, double fps, RngStream& rng) {
  const BodyScale body(rng.uniform(0.97, 1.03), rng.uniform(0.97, 1.03));
  GaitParams g;
  g.crouch = 0.04;
  Rig rig(n, fps, body);
  const double ground_y = -(-body.hip_y + body.reach - g.crouch);
  fill_phase(rig, g);
  // jump event centered in the clip: crouch, parabolic flight, recovery
  const int64_t nc = 6, nf = 14, nl = 6;
  const int64_t t0 = std::max<int64_t>(2, n / 2 - (nc + nf / 2));
  const double peak = rng.uniform(0.20, 0.28);
  const double dip = rng.uniform(0.07, 0.10);
  std::vector<char> airborne(static_cast<size_t>(n), 0);
  for (int64_t i = 0; i < n; ++i) {
    const int64_t k = i - t0;
    double y = 0.0;
    if (k >= 0 && k < nc) {  // crouch down to -dip
      y = -dip * smoothstep(static_cast<double>(k + 1) / static_cast<double>(nc));
    } else if (k >= nc && k < nc + nf) {  // flight: parabola from/to -dip
      const double s = static_cast<double>(k - nc + 1) / static_cast<double>(nf + 1);
      y = -dip + 4.0 * (peak + dip) * s * (1.0 - s);
      airborne[static_cast<size_t>(i)] = 1;
    } else if (k >= nc + nf && k < nc + nf + nl) {  // landing recovery
      const double s = static_cast<double>(k - nc - nf + 1) / static_cast<double>(nl);
      y = -dip * (1.0 - smoothstep(s));
    }
    rig.T[static_cast<size_t>(i)][1] = y;
  }
  fill_legs(rig, g, ground_y, &airborne);
  for (int64_t i = 0; i < n; ++i) {
    if (!airborne[static_cast<size_t>(i)]) continue;
    const double s = static_cast<double>(i - t0 - nc + 1) / static_cast<double>(nf + 1);
    fill_legs_tucked(rig, i, std::sin(M_PI * s));
  }
  fill_arm_swing(rig, 0.05, 36.0);
  FamilyOutput out;
  finish(rig, out);
  return out;
}

FamilyOutput build_wave(int64_t n, double fps, RngStream& rng) {
  FamilyOutput out = build_still(n, fps, rng, /*sway_arms=*/false);
  const bool left = rng.uniform() < 0.7;  // mostly left-hand waves
  const int shoulder = left ? 2 : 4;
  const double raise_max = rng.uniform(2.1, 2.5) * (left ? 1.0 : -1.0);
  const double wave_amp = rng.uniform(0.3, 0.45);
  const double wave_period = rng.uniform(10.0, 14.0);
  const int64_t ramp = 8;
  for (int64_t i = 0; i < n; ++i) {
    double lift = 1.0;
    if (i < ramp) lift = smoothstep(static_cast<double>(i) / static_cast<double>(ramp));
    if (i >= n - ramp) {
      lift = smoothstep(static_cast<double>(n - 1 - i) / static_cast<double>(ramp));
    }
    const double osc = wave_amp * std::sin(2.0 * M_PI * static_cast<double>(i) / wave_period);
    const Mat3 rot = mat3_mul(rot_z(raise_max * lift), rot_x(osc * lift));
    out.seq.frames[static_cast<size_t>(i)].joint_angles[static_cast<size_t>(shoulder)] =
        rot_to_6d(rot);
  }
  return out;
}

FamilyOutput build_dance(int64_t n, double fps, RngStream& rng, int64_t beat_period) {
  FamilyOutput out = build_still(n, fps, rng, /*sway_arms=*/false);
  const double P = static_cast<double>(beat_period);
  const double bounce = rng.uniform(0.02, 0.03);
  // pelvis bounce with zero velocity exactly on beats
  WorldTrajectory traj = world_trajectory(out.seq);
  for (int64_t i = 0; i < n; ++i) {
    traj.T[static_cast<size_t>(i)][1] =
        -bounce * 0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<double>(i) / P));
  }
  // arm loop driven by a warped phase whose speed vanishes on beats
  for (int64_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i);
    const double warped =
        (2.0 * M_PI / P) * (t - (P / (2.0 * M_PI)) * std::sin(2.0 * M_PI * t / P));
    PoseFrame& f = out.seq.frames[static_cast<size_t>(i)];
    f.joint_angles[2] = rot_to_6d(mat3_mul(rot_z(0.9), rot_x(warped)));
    f.joint_angles[4] = rot_to_6d(mat3_mul(rot_z(-0.9), rot_x(-warped)));
  }
  // Re-solve legs for the bounced pelvis: brute-force via the still rig is
  // simpler than threading state, so rebuild with the same body and plants.
  MotionSequence& seq = out.seq;
  const BodyScale body(seq.frames[0].shape[0], seq.frames[0].shape[1]);
  const double crouch = 0.035;
  const double ground_y = -(-body.hip_y + body.reach - crouch);
  for (int64_t i = 0; i < n; ++i) {
    for (int side = 0; side < 2; ++side) {
      const Vec3 h0{side == 0 ? body.hip_x : -body.hip_x, body.hip_y, 0.0};
      const Vec3 plant{h0[0], ground_y, 0.0};
      const Vec3 q = vec3_sub(plant, traj.T[static_cast<size_t>(i)]);
      const LegIk ik = leg_ik(vec3_sub(q, h0), body.l1, body.l2);
      seq.frames[static_cast<size_t>(i)].joint_angles[static_cast<size_t>(side == 0 ? 6 : 9)] =
          rot_to_6d(ik.hip);
      seq.frames[static_cast<size_t>(i)].joint_angles[static_cast<size_t>(side == 0 ? 7 : 10)] =
          rot_to_6d(ik.knee);
    }
  }
  set_world_trajectory(seq, traj);
  for (int64_t b = 0; b * beat_period < n; ++b) out.beats.push_back(b * beat_period);
  return out;
}

}  // namespace

FamilyOutput synth_motion(const std::string& family, int64_t n_frames, double fps,
                          RngStream& rng) {
  if (n_frames < 24) fail_value("synth_motion: need at least 24 frames, got ", n_frames);
  if (family == "walk") {
    const bool backward = rng.uniform() < 0.25;
    return build_locomotion(n_frames, fps, rng, false, 0.0, backward ? -1.0 : 1.0);
  }
  if (family == "run") return build_locomotion(n_frames, fps, rng, true, 0.0, 1.0);
  if (family == "circle") {
    const double turn = rng.uniform(0.012, 0.02) * (rng.uniform() < 0.5 ? 1.0 : -1.0);
    return build_locomotion(n_frames, fps, rng, false, turn, 1.0);
  }
  if (family == "spin") return build_spin(n_frames, fps, rng);
  if (family == "still") return build_still(n_frames, fps, rng, true);
  if (family == "jump") return build_jump(n_frames, fps, rng);
  if (family == "wave") return build_wave(n_frames, fps, rng);
  if (family == "dance") {
    const int64_t periods[3] = {12, 15, 18};
    return build_dance(n_frames, fps, rng, periods[rng.uniform_int(0, 3)]);
  }
  fail_value("synth_motion: unknown family \"", family, "\"");
}

std::vector<CameraPose> make_camera_rig(const std::string& rig, const MotionSequence& seq,
                                        RngStream& rng) {
  const int64_t n = seq.length();
  const WorldTrajectory traj = world_trajectory(seq);
  Vec3 center{0, 0, 0};
  for (const auto& t : traj.T) center = vec3_add(center, t);
  center = vec3_scale(center, 1.0 / static_cast<double>(n));
  const double radius = rng.uniform(2.8, 3.8);
  const double height = rng.uniform(0.6, 1.4);
  const double alpha0 = rng.uniform(0.0, 2.0 * M_PI);
  const double orbit_rate =
      (rig == "orbit") ? rng.uniform(0.006, 0.012) * (rng.uniform() < 0.5 ? 1.0 : -1.0) : 0.0;
  const double p1 = rng.uniform(0.0, 6.28), p2 = rng.uniform(0.0, 6.28),
               p3 = rng.uniform(0.0, 6.28);
  std::vector<CameraPose> cams(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    const double a = alpha0 + orbit_rate * static_cast<double>(i);
    Vec3 eye = vec3_add(center, {radius * std::cos(a), height, radius * std::sin(a)});
    Vec3 target = vec3_add(center, {0, 0.3, 0});
    if (rig == "pan") {
      target = vec3_add(traj.T[static_cast<size_t>(i)], {0, 0.3, 0});
    } else if (rig == "handheld") {
      const double t = static_cast<double>(i);
      eye = vec3_add(eye, {0.02 * std::sin(0.31 * t + p1), 0.015 * std::sin(0.27 * t + p2),
                           0.02 * std::sin(0.23 * t + p3)});
    }
    cams[static_cast<size_t>(i)].t = eye;
    cams[static_cast<size_t>(i)].R = look_at(eye, target);
  }
  return cams;
}

Tensor make_video_features(const Tensor& kp2d, int joints, int64_t d_video, RngStream& rng) {
  const int64_t n = kp2d.dim(0);
  const int64_t k = static_cast<int64_t>(joints) * 3;
  if (kp2d.rank() != 2 || kp2d.dim(1) != k) {
    fail_shape("make_video_features: kp2d ", shape_str(kp2d.shape()));
  }
  // fixed projection: identical across the whole corpus
  RngStream wrng(0xfeedbeef, "video-projection");
  std::vector<double> W(static_cast<size_t>(d_video * k));
  for (auto& w : W) w = wrng.normal() / std::sqrt(static_cast<double>(k));
  // per-sequence appearance latent
  std::vector<double> latent(static_cast<size_t>(d_video));
  for (auto& l : latent) l = 0.3 * rng.normal();
  Tensor noisy = perturb_kp2d(kp2d, joints, 0.008, 0.03, rng);
  Tensor out = Tensor::zeros({n, d_video});
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t d = 0; d < d_video; ++d) {
      double acc = latent[static_cast<size_t>(d)];
      for (int64_t c = 0; c < k; ++c) {
        acc += W[static_cast<size_t>(d * k + c)] * noisy.data()[i * k + c];
      }
      out.data()[i * d_video + d] = acc;
    }
  }
  return out;
}

Tensor make_music_features(int64_t n_frames, int64_t beat_period, int64_t d_music) {
  if (d_music < 8) fail_value("make_music_features: need at least 8 channels, got ", d_music);
  Tensor out = Tensor::zeros({n_frames, d_music});
  const double P = static_cast<double>(beat_period);
  for (int64_t i = 0; i < n_frames; ++i) {
    const double since = static_cast<double>(i % beat_period);
    const double env = std::exp(-since / 2.0);
    const double phi = 2.0 * M_PI * since / P;
    double* r = out.data() + i * d_music;
    r[0] = env;
    r[1] = std::cos(phi);
    r[2] = std::sin(phi);
    r[3] = std::cos(2.0 * phi);
    r[4] = std::sin(2.0 * phi);
    r[5] = 30.0 / P;  // beats per second at 30 fps
    r[6] = env * std::cos(phi);
    r[7] = env * std::sin(phi);
  }
  return out;
}

namespace {

std::vector<TextPrompt> make_prompts(const std::string& family, const MotionSequence& seq,
                                     int64_t n, RngStream& rng) {
  std::vector<TextPrompt> out;
  std::string text;
  if (family == "walk") {
    const WorldTrajectory traj = world_trajectory(seq);
    // backward walks move against the facing direction
    const Vec3 d = vec3_sub(traj.T.back(), traj.T.front());
    const Vec3 fwd = mat3_apply(traj.R[0], {0, 0, 1});
    const bool backward = vec3_dot(d, fwd) < 0.0;
    text = backward ? "a person walks backward" : "a person walks forward";
    const double dist = vec3_norm({d[0], 0, d[2]});
    if (!backward) text += dist < 0.7 ? " slowly" : " quickly";
  } else if (family == "run") {
    text = "the person runs forward fast";
  } else if (family == "circle") {
    text = "a person walks in a circle";
  } else if (family == "spin") {
    text = "the person spins around in place";
  } else if (family == "still") {
    text = "a person stands still";
  } else if (family == "jump") {
    text = "the person jumps in place";
  } else if (family == "wave") {
    text = "a person waves the left hand";  // datagen waves are mostly left
  } else if (family == "dance") {
    text = "the person dances to the beat";
  } else {
    fail_value("make_prompts: unknown family \"", family, "\"");
  }
  out.push_back(make_prompt(text, 0, n));
  if (rng.uniform() < 0.4) {  // truthful sub-window restatement
    const int64_t a = n / 4, b = (3 * n) / 4;
    std::string second;
    if (family == "walk" || family == "circle") second = "the person walks";
    else if (family == "run") second = "the person runs";
    else if (family == "spin") second = "spins around";
    else if (family == "still") second = "stands still";
    else if (family == "jump") second = "jumps";
    else if (family == "wave") second = "waves the hand";
    else second = "dances";
    out.push_back(make_prompt(second, a, b));
  }
  return out;
}

}  // namespace

std::vector<DataSample> make_dataset(const DatasetParams& p) {
  std::vector<DataSample> out;
  const std::vector<std::string> rigs = {"static", "orbit", "pan", "handheld"};

  struct SubsetPlan {
    std::string name;
    int64_t count;
    std::vector<std::string> families;
  };
  const std::vector<SubsetPlan> plans = {
      {"mocap3d", p.n_mocap3d, {"walk", "run", "circle", "spin", "still", "jump"}},
      {"text3d", p.n_text3d, {"walk", "run", "circle", "spin", "still", "jump"}},
      {"text2d", p.n_text2d, {"wave", "wave", "walk", "run"}},  // wave-heavy, wave-exclusive
      {"music3d", p.n_music3d, {"dance"}},
  };

  for (const auto& plan : plans) {
    for (int64_t i = 0; i < plan.count; ++i) {
      DataSample s;
      s.subset = plan.name;
      s.id = strcat_all(plan.name, "-", i);
      s.family = plan.families[static_cast<size_t>(i) % plan.families.size()];
      s.split = (i % 7 == 3) ? "test" : "train";
      RngStream rng(p.seed, strcat_all("sample/", s.id));
      FamilyOutput fam = synth_motion(s.family, p.n_frames, p.fps, rng);
      s.seq = std::move(fam.seq);
      s.beats = std::move(fam.beats);
      const auto cams = make_camera_rig(rigs[static_cast<size_t>(rng.uniform_int(0, 4))], s.seq, rng);
      attach_camera(s.seq, cams);
      // wide enough that the full body stays in frame from 2.8 m away
      s.K.f = rng.uniform(360.0, 480.0);
      s.cond.frames = p.n_frames;
      const Tensor kp_clean = make_kp2d(s.seq, s.K);
      if (plan.name == "mocap3d") {
        s.cond.kp2d = perturb_kp2d(kp_clean, s.seq.skeleton.joints, 0.004, 0.02, rng);
        s.cond.bbox = make_bbox(s.cond.kp2d, s.seq.skeleton.joints);
        s.cond.video = make_video_features(kp_clean, s.seq.skeleton.joints, 32, rng);
        s.cond.camera = make_camera_channel(s.seq);
        s.has_3d = true;
      } else if (plan.name == "text3d") {
        s.cond.prompts = make_prompts(s.family, s.seq, p.n_frames, rng);
        s.has_3d = true;
      } else if (plan.name == "text2d") {
        s.cond.kp2d = perturb_kp2d(kp_clean, s.seq.skeleton.joints, 0.004, 0.02, rng);
        s.cond.bbox = make_bbox(s.cond.kp2d, s.seq.skeleton.joints);
        s.cond.prompts = make_prompts(s.family, s.seq, p.n_frames, rng);
        s.has_3d = false;
      } else {  // music3d
        int64_t period = 15;
        if (!s.beats.empty() && s.beats.size() >= 2) period = s.beats[1] - s.beats[0];
        s.cond.music = make_music_features(p.n_frames, period, 8);
        s.has_3d = true;
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace mogen
