// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mogen/datagen.hpp"
#include "mogen/diffusion.hpp"
#include "mogen/io.hpp"
#include "mogen/metrics.hpp"
#include "mogen/svg.hpp"
#include "mogen/trainer.hpp"

using namespace mogen;

namespace {

std::string single_line(std::string msg) {
  for (char& c : msg) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return msg;
}

void print_resolved(const ojson& j) { std::cout << "resolved: " << j.dump() << "\n"; }

ojson parse_file(const std::string& path) {
  try {
    return ojson::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    fail_io("invalid JSON in ", path, ": ", e.what());
  }
}

// Accepts either a bare conditions document or a dataset sample file
// (which nests one under "conditions").
ConditionSet load_conditions_file(const std::string& path) {
  const ojson j = parse_file(path);
  return conditions_from_json(j.contains("conditions") ? j.at("conditions") : j);
}

std::vector<int64_t> parse_index_list(const std::string& text) {
  std::vector<int64_t> out;
  size_t at = 0;
  while (at <= text.size()) {
    const size_t comma = std::min(text.find(',', at), text.size());
    const std::string tok = text.substr(at, comma - at);
    try {
      size_t used = 0;
      out.push_back(std::stoll(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      fail_value("bad frame index \"", tok, "\" in \"", text, "\"");
    }
    at = comma + 1;
    if (comma == text.size()) break;
  }
  return out;
}

void add_prompts(ConditionSet& cond, const std::vector<std::string>& texts,
                 const std::vector<std::string>& windows, int64_t length) {
  if (!windows.empty() && windows.size() != texts.size()) {
    fail_value("got ", texts.size(), " --text but ", windows.size(),
               " --window; give one window per text or none");
  }
  for (size_t i = 0; i < texts.size(); ++i) {
    int64_t s = 0, e = length;
    if (!windows.empty()) {
      const size_t colon = windows[i].find(':');
      if (colon == std::string::npos) fail_value("bad --window \"", windows[i], "\", want s:e");
      try {
        s = std::stoll(windows[i].substr(0, colon));
        e = std::stoll(windows[i].substr(colon + 1));
      } catch (const std::exception&) {
        fail_value("bad --window \"", windows[i], "\", want s:e");
      }
    }
    cond.prompts.push_back(make_prompt(texts[i], s, e));
  }
}

void write_motion_outputs(const Tensor& x_raw, double fps, const std::string& out,
                          const std::string& svg) {
  const MotionSequence seq = unflatten(x_raw, Skeleton::toy12(), fps);
  write_text_file(out, motion_to_json(seq).dump());
  std::cout << "motion: " << out << "\n";
  if (!svg.empty()) {
    write_text_file(svg, render_svg(seq));
    std::cout << "svg: " << svg << "\n";
  }
}

struct GenDataArgs {
  std::string out;
  DatasetParams p;
};

void run_gen_data(const GenDataArgs& a) {
  ojson r;
  r["command"] = "gen-data";
  r["out"] = a.out;
  r["mocap3d"] = a.p.n_mocap3d;
  r["text3d"] = a.p.n_text3d;
  r["text2d"] = a.p.n_text2d;
  r["music3d"] = a.p.n_music3d;
  r["frames"] = a.p.n_frames;
  r["fps"] = a.p.fps;
  r["seed"] = a.p.seed;
  print_resolved(r);
  const std::vector<DataSample> ds = make_dataset(a.p);
  save_dataset(a.out, ds);
  std::cout << "dataset: " << a.out << " (" << ds.size() << " samples)\n";
}

struct TrainArgs {
  std::string data;
  std::string out;
  std::string config;
  std::string resume;
  int64_t epochs = 0;
  std::string mode;
  uint64_t seed = 0;
  CLI::Option* epochs_opt = nullptr;
  CLI::Option* mode_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
};

void run_train(const TrainArgs& a) {
  TrainConfig cfg;
  if (!a.config.empty()) cfg = train_config_from_json(parse_file(a.config));
  if (a.epochs_opt->count()) cfg.epochs = a.epochs;
  if (a.mode_opt->count()) cfg.mode = a.mode;
  if (a.seed_opt->count()) cfg.seed = a.seed;
  ojson r = train_config_to_json(cfg);
  r["command"] = "train";
  r["data"] = a.data;
  r["out"] = a.out;
  print_resolved(r);

  Checkpoint resume;
  const bool resuming = !a.resume.empty();
  if (resuming) resume = load_checkpoint(a.resume);
  const std::vector<DataSample> ds = load_dataset(a.data);
  const TrainResult res = train(cfg, ds, a.out, resuming ? &resume : nullptr);
  for (const auto& e : res.history) {
    std::cout << "epoch " << e.epoch << ": loss " << e.mean_loss;
    if (e.eval_mpjpe >= 0.0) std::cout << ", eval mpjpe " << e.eval_mpjpe << " mm";
    std::cout << "\n";
  }
  std::cout << "checkpoints: " << a.out << "/best.ckpt " << a.out << "/last.ckpt\n";
}

struct SampleArgs {
  std::string checkpoint;
  std::string out;
  std::string svg;
  std::string conditions;
  std::vector<std::string> texts;
  std::vector<std::string> windows;
  int64_t music_period = 0;
  int64_t length = 48;
  int64_t steps = 50;
  uint64_t seed = 7;
  double fps = 30.0;
  CLI::Option* length_opt = nullptr;
};

void run_sample(const SampleArgs& a) {
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  ConditionSet cond;
  int64_t length = a.length;
  if (!a.conditions.empty()) {
    cond = load_conditions_file(a.conditions);
    if (a.length_opt->count() && a.length != cond.frames) {
      fail_value("--length ", a.length, " does not match the conditions file (", cond.frames,
                 " frames)");
    }
    length = cond.frames;
  }
  cond.frames = length;
  add_prompts(cond, a.texts, a.windows, length);
  if (a.music_period > 0) {
    cond.music = make_music_features(length, a.music_period, ck.config.d_music);
  }
  validate_conditions(cond, length, ck.config.joints);

  ojson r;
  r["command"] = "sample";
  r["checkpoint"] = a.checkpoint;
  r["length"] = length;
  r["steps"] = a.steps;
  r["seed"] = a.seed;
  r["fps"] = a.fps;
  r["texts"] = a.texts;
  r["windows"] = a.windows;
  r["conditions"] = a.conditions;
  r["music_period"] = a.music_period;
  r["model"] = config_to_json(ck.config);
  print_resolved(r);

  const NoiseSchedule ns = NoiseSchedule::cosine(ck.config.timesteps);
  RngStream rng(a.seed, "sample");
  SampleOptions opt;
  opt.steps = a.steps;
  const Tensor x = ddim_sample(cond, length, ck.config, ck.params, ns, ck.norm, opt, rng);
  write_motion_outputs(x, a.fps, a.out, a.svg);
}

struct EstimateArgs {
  std::string checkpoint;
  std::string conditions;
  std::string out;
  std::string svg;
  double fps = 30.0;
};

void run_estimate(const EstimateArgs& a) {
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  const ConditionSet cond = load_conditions_file(a.conditions);
  if (!supports_estimation(cond)) {
    fail_value("conditions in ", a.conditions,
               " carry no per-frame observations (video or 2D keypoints) to estimate from");
  }
  validate_conditions(cond, cond.frames, ck.config.joints);

  ojson r;
  r["command"] = "estimate";
  r["checkpoint"] = a.checkpoint;
  r["conditions"] = a.conditions;
  r["length"] = cond.frames;
  r["fps"] = a.fps;
  r["seed"] = 0;  // estimation is deterministic
  r["model"] = config_to_json(ck.config);
  print_resolved(r);

  const NoiseSchedule ns = NoiseSchedule::cosine(ck.config.timesteps);
  const Tensor x = estimate(cond, cond.frames, ck.config, ck.params, ns, ck.norm);
  write_motion_outputs(x, a.fps, a.out, a.svg);
}

struct InbetweenArgs {
  std::string checkpoint;
  std::string keyframes;
  std::string frames;
  std::string out;
  std::string svg;
  std::vector<std::string> texts;
  std::vector<std::string> windows;
  int64_t length = 0;
  int64_t steps = 50;
  uint64_t seed = 7;
  double fps = 30.0;
};

void run_inbetween(const InbetweenArgs& a) {
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  const MotionSequence kf = motion_from_json(parse_file(a.keyframes), Skeleton::toy12());
  const int64_t length = a.length > 0 ? a.length : kf.length();

  KeyframeLock lock;
  lock.frames = parse_index_list(a.frames);
  const Tensor kf_rows = flatten(kf);
  lock.rows_raw = Tensor::zeros({static_cast<int64_t>(lock.frames.size()), kf_rows.dim(1)});
  for (size_t i = 0; i < lock.frames.size(); ++i) {
    const int64_t f = lock.frames[i];
    if (f < 0 || f >= kf.length()) {
      fail_value("keyframe index ", f, " outside the keyframe motion (", kf.length(), " frames)");
    }
    if (f >= length) fail_value("keyframe index ", f, " outside the output length ", length);
    for (int64_t c = 0; c < kf_rows.dim(1); ++c) {
      lock.rows_raw.data()[static_cast<int64_t>(i) * kf_rows.dim(1) + c] =
          kf_rows.data()[f * kf_rows.dim(1) + c];
    }
  }
  lock.channels = pose_lock_channels(kf.skeleton);

  ConditionSet cond;
  cond.frames = length;
  add_prompts(cond, a.texts, a.windows, length);
  validate_conditions(cond, length, ck.config.joints);

  ojson r;
  r["command"] = "inbetween";
  r["checkpoint"] = a.checkpoint;
  r["keyframes"] = a.keyframes;
  r["frames"] = ojson(lock.frames);
  r["length"] = length;
  r["steps"] = a.steps;
  r["seed"] = a.seed;
  r["fps"] = a.fps;
  r["texts"] = a.texts;
  r["windows"] = a.windows;
  r["model"] = config_to_json(ck.config);
  print_resolved(r);

  const NoiseSchedule ns = NoiseSchedule::cosine(ck.config.timesteps);
  RngStream rng(a.seed, "inbetween");
  const Tensor x =
      inbetween_sample(cond, length, ck.config, ck.params, ns, ck.norm, lock, a.steps, rng);
  write_motion_outputs(x, a.fps, a.out, a.svg);
}

struct EvaluateArgs {
  std::string pred;
  std::string gt;
  std::string out;
  std::string beats;
};

void run_evaluate(const EvaluateArgs& a) {
  ojson r;
  r["command"] = "evaluate";
  r["pred"] = a.pred;
  r["gt"] = a.gt;
  r["out"] = a.out;
  r["beats"] = a.beats;
  r["seed"] = 0;  // evaluation is deterministic
  print_resolved(r);

  const Skeleton sk = Skeleton::toy12();
  const MotionSequence pred = motion_from_json(parse_file(a.pred), sk);
  const MotionSequence gt = motion_from_json(parse_file(a.gt), sk);
  if (pred.length() != gt.length()) {
    fail_value("length mismatch: pred has ", pred.length(), " frames, gt has ", gt.length());
  }
  const int64_t n = pred.length();
  const std::vector<double> pp = world_joints(pred);
  const std::vector<double> gp = world_joints(gt);

  ojson report;
  report["frames"] = n;
  report["joints"] = sk.joints;
  report["mpjpe"] = mpjpe(pp, gp, n, sk.joints);
  report["pa_mpjpe"] = pa_mpjpe(pp, gp, n, sk.joints);
  report["w_mpjpe"] = w_mpjpe(pp, gp, n, sk.joints);
  report["wa_mpjpe"] = wa_mpjpe(pp, gp, n, sk.joints);

  // trajectory drift is undefined against a stationary reference
  double gt_path = 0.0;
  for (int64_t i = 0; i + 1 < n; ++i) {
    const double* q0 = gp.data() + i * sk.joints * 3;
    const double* q1 = gp.data() + (i + 1) * sk.joints * 3;
    gt_path += std::sqrt((q1[0] - q0[0]) * (q1[0] - q0[0]) + (q1[1] - q0[1]) * (q1[1] - q0[1]) +
                         (q1[2] - q0[2]) * (q1[2] - q0[2]));
  }
  if (gt_path >= 1e-9) {
    report["rte_percent"] = rte_percent(pp, gp, n, sk.joints);
  } else {
    report["rte_percent"] = nullptr;
  }
  report["accel_error"] = n >= 3 ? ojson(accel_error(pp, gp, n, sk.joints)) : ojson(nullptr);
  report["jitter_pred"] = n >= 4 ? ojson(jitter(pp, n, sk.joints, pred.fps)) : ojson(nullptr);
  report["jitter_gt"] = n >= 4 ? ojson(jitter(gp, n, sk.joints, gt.fps)) : ojson(nullptr);

  std::vector<std::array<double, 4>> pc(pred.frames.size());
  for (size_t i = 0; i < pred.frames.size(); ++i) pc[i] = pred.frames[i].contacts;
  report["foot_sliding_pred"] = foot_sliding(pp, pc, n, sk);
  std::vector<std::array<double, 4>> gc(gt.frames.size());
  for (size_t i = 0; i < gt.frames.size(); ++i) gc[i] = gt.frames[i].contacts;
  report["foot_sliding_gt"] = foot_sliding(gp, gc, n, sk);

  if (!a.beats.empty()) {
    report["beat_alignment_pred"] = beat_alignment(pp, n, sk.joints, parse_index_list(a.beats));
  }

  if (a.out.empty()) {
    std::cout << report.dump(2) << "\n";
  } else {
    write_text_file(a.out, report.dump(2));
    std::cout << "report: " << a.out << "\n";
  }
}

struct ExportSvgArgs {
  std::string motion;
  std::string out;
  double fps = 0.0;
};

void run_export_svg(const ExportSvgArgs& a) {
  ojson r;
  r["command"] = "export-svg";
  r["motion"] = a.motion;
  r["out"] = a.out;
  r["fps"] = a.fps;
  r["seed"] = 0;  // rendering is deterministic
  print_resolved(r);
  export_svg(a.motion, a.out, a.fps);
  std::cout << "svg: " << a.out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale human motion engine: one diffusion model for "
               "estimation and generation"};
  app.require_subcommand(1);

  GenDataArgs gd;
  auto* gen_data = app.add_subcommand("gen-data", "Write the synthetic dataset");
  gen_data->add_option("--out", gd.out, "Dataset directory")->required();
  gen_data->add_option("--mocap3d", gd.p.n_mocap3d, "Observed 3D clips")->capture_default_str();
  gen_data->add_option("--text3d", gd.p.n_text3d, "Text-labelled 3D clips")->capture_default_str();
  gen_data->add_option("--text2d", gd.p.n_text2d, "Text + 2D-keypoint clips")
      ->capture_default_str();
  gen_data->add_option("--music3d", gd.p.n_music3d, "Music-conditioned clips")
      ->capture_default_str();
  gen_data->add_option("--frames", gd.p.n_frames, "Frames per clip")->capture_default_str();
  gen_data->add_option("--fps", gd.p.fps, "Frame rate")->capture_default_str();
  gen_data->add_option("--seed", gd.p.seed, "Corpus seed")->capture_default_str();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train the model");
  train_cmd->add_option("--data", tr.data, "Dataset directory")->required();
  train_cmd->add_option("--out", tr.out, "Output directory for checkpoints")->required();
  train_cmd->add_option("--config", tr.config, "Training config JSON (TrainConfig fields)");
  train_cmd->add_option("--resume", tr.resume, "Checkpoint to continue from");
  tr.epochs_opt = train_cmd->add_option("--epochs", tr.epochs, "Override epoch count");
  tr.mode_opt = train_cmd->add_option("--mode", tr.mode, "dual | generation | estimation");
  tr.seed_opt = train_cmd->add_option("--seed", tr.seed, "Override training seed");

  SampleArgs sa;
  auto* sample_cmd = app.add_subcommand("sample", "Generate motion from conditions");
  sample_cmd->add_option("--checkpoint", sa.checkpoint, "Model checkpoint")->required();
  sample_cmd->add_option("--out", sa.out, "Motion JSON output path")->required();
  sample_cmd->add_option("--text", sa.texts, "Text prompt (repeatable)");
  sample_cmd->add_option("--window", sa.windows, "Frame window s:e for the matching --text");
  sample_cmd->add_option("--conditions", sa.conditions, "Conditions JSON to generate against");
  sample_cmd->add_option("--music-period", sa.music_period, "Synthesize beat features (frames)")
      ->capture_default_str();
  sa.length_opt = sample_cmd->add_option("--length", sa.length, "Output frames")
                      ->capture_default_str();
  sample_cmd->add_option("--steps", sa.steps, "Denoising steps")->capture_default_str();
  sample_cmd->add_option("--seed", sa.seed, "Sampling seed")->capture_default_str();
  sample_cmd->add_option("--fps", sa.fps, "Output frame rate")->capture_default_str();
  sample_cmd->add_option("--svg", sa.svg, "Also render an animated SVG here");

  EstimateArgs es;
  auto* estimate_cmd = app.add_subcommand("estimate", "Estimate motion from observations");
  estimate_cmd->add_option("--checkpoint", es.checkpoint, "Model checkpoint")->required();
  estimate_cmd->add_option("--conditions", es.conditions, "Conditions JSON with observations")
      ->required();
  estimate_cmd->add_option("--out", es.out, "Motion JSON output path")->required();
  estimate_cmd->add_option("--fps", es.fps, "Output frame rate")->capture_default_str();
  estimate_cmd->add_option("--svg", es.svg, "Also render an animated SVG here");

  InbetweenArgs ib;
  auto* inbetween_cmd = app.add_subcommand("inbetween", "Generate between locked keyframes");
  inbetween_cmd->add_option("--checkpoint", ib.checkpoint, "Model checkpoint")->required();
  inbetween_cmd->add_option("--keyframes", ib.keyframes, "Motion JSON holding the keyframes")
      ->required();
  inbetween_cmd->add_option("--frames", ib.frames, "Comma-separated keyframe indices")
      ->required();
  inbetween_cmd->add_option("--out", ib.out, "Motion JSON output path")->required();
  inbetween_cmd->add_option("--text", ib.texts, "Text prompt (repeatable)");
  inbetween_cmd->add_option("--window", ib.windows, "Frame window s:e for the matching --text");
  inbetween_cmd->add_option("--length", ib.length, "Output frames (default: keyframe length)");
  inbetween_cmd->add_option("--steps", ib.steps, "Denoising steps")->capture_default_str();
  inbetween_cmd->add_option("--seed", ib.seed, "Sampling seed")->capture_default_str();
  inbetween_cmd->add_option("--fps", ib.fps, "Output frame rate")->capture_default_str();
  inbetween_cmd->add_option("--svg", ib.svg, "Also render an animated SVG here");

  EvaluateArgs ev;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Compare a motion against ground truth");
  evaluate_cmd->add_option("--pred", ev.pred, "Predicted motion JSON")->required();
  evaluate_cmd->add_option("--gt", ev.gt, "Ground-truth motion JSON")->required();
  evaluate_cmd->add_option("--out", ev.out, "Report path (default: stdout)");
  evaluate_cmd->add_option("--beats", ev.beats, "Comma-separated beat frames for alignment");

  ExportSvgArgs ex;
  auto* export_cmd = app.add_subcommand("export-svg", "Render a motion JSON as animated SVG");
  export_cmd->add_option("--motion", ex.motion, "Motion JSON input")->required();
  export_cmd->add_option("--out", ex.out, "SVG output path")->required();
  export_cmd->add_option("--fps", ex.fps, "Playback rate (0: the motion's own)")
      ->capture_default_str();

  gen_data->callback([&] { run_gen_data(gd); });
  train_cmd->callback([&] { run_train(tr); });
  sample_cmd->callback([&] { run_sample(sa); });
  estimate_cmd->callback([&] { run_estimate(es); });
  inbetween_cmd->callback([&] { run_inbetween(ib); });
  evaluate_cmd->callback([&] { run_evaluate(ev); });
  export_cmd->callback([&] { run_export_svg(ex); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << single_line(e.what()) << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << single_line(e.what()) << "\n";
    return e.kind() == Error::Kind::internal ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << single_line(e.what()) << "\n";
    return 2;
  }
  return 0;
}
