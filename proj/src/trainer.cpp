// SPDX-License-Identifier: Apache-2.0
#include "mogen/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>

#include "mogen/common.hpp"
#include "mogen/metrics.hpp"

namespace mogen {

namespace {

Tensor slice_rows(const Tensor& t, int64_t start, int64_t len) {
  if (!t.defined()) return {};
  const int64_t d = t.dim(1);
  Tensor out = Tensor::zeros({len, d});
  std::memcpy(out.data(), t.data() + start * d, static_cast<size_t>(len * d) * sizeof(double));
  return out;
}

void validate_config(const TrainConfig& cfg) {
  if (cfg.epochs < 1) fail_value("train: epochs must be positive");
  if (cfg.batch_size < 1) fail_value("train: batch_size must be positive");
  if (cfg.crop_frames < 8) fail_value("train: crop_frames must be at least 8");
  if (cfg.mode != "dual" && cfg.mode != "generation" && cfg.mode != "estimation") {
    fail_value("train: mode must be dual, generation or estimation, got \"", cfg.mode, "\"");
  }
  if (cfg.lr <= 0.0) fail_value("train: lr must be positive");
}

void shuffle_indices(std::vector<size_t>& idx, RngStream& rng) {
  for (size_t i = idx.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(i)));
    std::swap(idx[i - 1], idx[j]);
  }
}

}  // namespace

DataSample crop_sample(const DataSample& s, int64_t start, int64_t len) {
  const int64_t n = s.seq.length();
  if (len < 2 || start < 0 || start + len > n) {
    fail_value("crop_sample: window [", start, ", ", start + len, ") out of ", n, " frames");
  }
  DataSample c;
  c.id = s.id;
  c.subset = s.subset;
  c.family = s.family;
  c.split = s.split;
  c.K = s.K;
  c.has_3d = s.has_3d;
  c.seq.skeleton = s.seq.skeleton;
  c.seq.fps = s.seq.fps;
  c.seq.frames.assign(s.seq.frames.begin() + start, s.seq.frames.begin() + start + len);
  for (int64_t b : s.beats) {
    if (b >= start && b < start + len) c.beats.push_back(b - start);
  }
  c.cond.frames = len;
  c.cond.video = slice_rows(s.cond.video, start, len);
  c.cond.camera = slice_rows(s.cond.camera, start, len);
  c.cond.kp2d = slice_rows(s.cond.kp2d, start, len);
  c.cond.music = slice_rows(s.cond.music, start, len);
  c.cond.bbox = slice_rows(s.cond.bbox, start, len);
  for (const auto& p : s.cond.prompts) {
    const int64_t ws = std::max<int64_t>(0, p.win_start - start);
    const int64_t we = std::min<int64_t>(len, p.win_end - start);
    if (we > ws) c.cond.prompts.push_back(make_prompt(p.text, ws, we));
  }
  return c;
}

double eval_estimation_mpjpe(const std::vector<DataSample>& samples, const ModelConfig& cfg,
                             const ParamMap& params, const NoiseSchedule& ns,
                             const Normalizer& nrm) {
  double acc = 0.0;
  int64_t used = 0;
  for (const auto& s : samples) {
    if (!s.has_3d || !supports_estimation(s.cond)) continue;
    const Tensor x = estimate(s.cond, s.seq.length(), cfg, params, ns, nrm);
    const MotionSequence est_seq = unflatten(x, s.seq.skeleton, s.seq.fps);
    acc += mpjpe(world_joints(est_seq), world_joints(s.seq), s.seq.length(),
                 s.seq.skeleton.joints);
    ++used;
  }
  return used == 0 ? -1.0 : acc / static_cast<double>(used);
}

namespace {

struct PreparedSample {
  DiffusionSample ds;
  bool can_estimate = false;
};

// Crop, decode supervision targets, then apply condition dropout to the
// model inputs only (supervision keeps the observed keypoints).
PreparedSample prepare_sample(const DataSample& s, const TrainConfig& cfg,
                              const Normalizer& nrm, RngStream& rng) {
  const int64_t n = s.seq.length();
  const int64_t len = std::min<int64_t>(cfg.crop_frames, n);
  const int64_t start = len < n ? rng.uniform_int(0, n - len + 1) : 0;
  const DataSample c = crop_sample(s, start, len);

  PreparedSample out;
  out.can_estimate = supports_estimation(c.cond);
  out.ds.skeleton = c.seq.skeleton;
  out.ds.has_3d = c.has_3d;
  if (c.has_3d) {
    out.ds.x0_raw = flatten(c.seq);
    out.ds.x0_norm = nrm.normalize(out.ds.x0_raw);
    out.ds.targets = make_geo_targets(out.ds.x0_raw, c.seq.skeleton, c.cond.kp2d, c.K);
  } else {
    if (!c.cond.kp2d.defined()) {
      fail_internal("2D-only sample ", c.id, " without keypoint evidence");
    }
    out.ds.targets.kp2d = c.cond.kp2d;
    out.ds.targets.K = c.K;
  }
  out.ds.cond = drop_conditions(c.cond, cfg.p_drop_modality, cfg.p_drop_prompt, rng);
  return out;
}

Checkpoint snapshot(const TrainConfig& cfg, const ParamMap& params, const Normalizer& nrm,
                    const OptimizerState* opt, int64_t epoch, double best_metric) {
  Checkpoint ck;
  ck.config = cfg.model;
  for (const auto& [name, t] : params) ck.params.emplace(name, t.clone());
  ck.norm = nrm;
  if (opt) {
    ck.has_opt = true;
    ck.opt = *opt;
  } else {
    ck.opt.cfg.lr = cfg.lr;
    ck.opt.cfg.weight_decay = cfg.weight_decay;
  }
  ck.epoch = epoch;
  ck.best_metric = best_metric;
  ck.seed = cfg.seed;
  return ck;
}

}  // namespace

ojson train_config_to_json(const TrainConfig& cfg) {
  ojson j;
  j["model"] = config_to_json(cfg.model);
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["crop_frames"] = cfg.crop_frames;
  j["lr"] = cfg.lr;
  j["weight_decay"] = cfg.weight_decay;
  j["grad_clip"] = cfg.grad_clip;
  j["p_drop_modality"] = cfg.p_drop_modality;
  j["p_drop_prompt"] = cfg.p_drop_prompt;
  j["mode"] = cfg.mode;
  j["seed"] = cfg.seed;
  j["eval_every"] = cfg.eval_every;
  ojson w;
  w["simple"] = cfg.weights.simple;
  w["geo"] = cfg.weights.geo;
  w["contact"] = cfg.weights.contact;
  w["reproj2d"] = cfg.weights.reproj2d;
  j["weights"] = std::move(w);
  return j;
}

TrainConfig train_config_from_json(const ojson& j) {
  TrainConfig cfg;
  try {
    if (j.contains("model")) cfg.model = config_from_json(j.at("model"));
    if (j.contains("epochs")) cfg.epochs = j.at("epochs").get<int64_t>();
    if (j.contains("batch_size")) cfg.batch_size = j.at("batch_size").get<int64_t>();
    if (j.contains("crop_frames")) cfg.crop_frames = j.at("crop_frames").get<int64_t>();
    if (j.contains("lr")) cfg.lr = j.at("lr").get<double>();
    if (j.contains("weight_decay")) cfg.weight_decay = j.at("weight_decay").get<double>();
    if (j.contains("grad_clip")) cfg.grad_clip = j.at("grad_clip").get<double>();
    if (j.contains("p_drop_modality")) cfg.p_drop_modality = j.at("p_drop_modality").get<double>();
    if (j.contains("p_drop_prompt")) cfg.p_drop_prompt = j.at("p_drop_prompt").get<double>();
    if (j.contains("mode")) cfg.mode = j.at("mode").get<std::string>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<uint64_t>();
    if (j.contains("eval_every")) cfg.eval_every = j.at("eval_every").get<int64_t>();
    if (j.contains("weights")) {
      const ojson& w = j.at("weights");
      if (w.contains("simple")) cfg.weights.simple = w.at("simple").get<double>();
      if (w.contains("geo")) cfg.weights.geo = w.at("geo").get<double>();
      if (w.contains("contact")) cfg.weights.contact = w.at("contact").get<double>();
      if (w.contains("reproj2d")) cfg.weights.reproj2d = w.at("reproj2d").get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    fail_io("train config: ", e.what());
  }
  return cfg;
}

TrainResult train(const TrainConfig& cfg, const std::vector<DataSample>& dataset,
                  const std::string& out_dir, const Checkpoint* resume) {
  validate_config(cfg);

  std::vector<size_t> train_idx;
  std::vector<DataSample> test_samples;
  for (size_t i = 0; i < dataset.size(); ++i) {
    if (dataset[i].split == "test") {
      test_samples.push_back(dataset[i]);
    } else {
      train_idx.push_back(i);
    }
  }
  if (train_idx.empty()) fail_value("train: dataset has no train split");

  // group the train split by subset: batches stay condition-homogeneous
  std::map<std::string, std::vector<size_t>> by_subset;
  for (size_t i : train_idx) by_subset[dataset[i].subset].push_back(i);

  Normalizer nrm;
  ParamMap params;
  OptimizerState opt;
  opt.cfg.lr = cfg.lr;
  opt.cfg.weight_decay = cfg.weight_decay;
  int64_t start_epoch = 0;
  if (resume) {
    if (param_specs(resume->config).size() != param_specs(cfg.model).size()) {
      fail_value("train: resume checkpoint does not match the model config");
    }
    nrm = resume->norm;
    for (const auto& [name, t] : resume->params) {
      params.emplace(name, t.clone().set_requires_grad(true));
    }
    if (resume->has_opt) opt = resume->opt;
    start_epoch = resume->epoch;
  } else {
    std::vector<Tensor> clips;
    for (size_t i : train_idx) {
      if (dataset[i].has_3d) clips.push_back(flatten(dataset[i].seq));
    }
    if (clips.empty()) fail_value("train: no 3D-supervised samples to fit the normalizer");
    nrm = Normalizer::fit(clips);
    params = init_params(cfg.model, cfg.seed);
  }
  const NoiseSchedule ns = NoiseSchedule::cosine(cfg.model.timesteps);

  if (!out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) fail_io("cannot create ", out_dir, ": ", ec.message());
    // fresh runs start a fresh log; resumed runs keep appending
    if (!resume) {
      std::error_code rm;
      std::filesystem::remove(std::filesystem::path(out_dir) / "history.jsonl", rm);
    }
  }

  TrainResult result;
  double best_metric = resume ? resume->best_metric : -1.0;
  bool have_best = resume && resume->best_metric >= 0.0;
  result.best = snapshot(cfg, params, nrm, nullptr, start_epoch, best_metric);

  for (int64_t epoch = start_epoch + 1; epoch <= cfg.epochs; ++epoch) {
    // per-subset shuffles, then a shuffled batch order
    std::vector<std::vector<size_t>> batches;
    for (auto& [subset, idx] : by_subset) {
      std::vector<size_t> order = idx;
      RngStream srng(cfg.seed, strcat_all("shuffle/", epoch, "/", subset));
      shuffle_indices(order, srng);
      for (size_t at = 0; at < order.size(); at += static_cast<size_t>(cfg.batch_size)) {
        const size_t end = std::min(order.size(), at + static_cast<size_t>(cfg.batch_size));
        batches.emplace_back(order.begin() + static_cast<int64_t>(at),
                             order.begin() + static_cast<int64_t>(end));
      }
    }
    {
      std::vector<size_t> order(batches.size());
      for (size_t i = 0; i < order.size(); ++i) order[i] = i;
      RngStream brng(cfg.seed, strcat_all("order/", epoch));
      shuffle_indices(order, brng);
      std::vector<std::vector<size_t>> shuffled(batches.size());
      for (size_t i = 0; i < order.size(); ++i) shuffled[i] = std::move(batches[order[i]]);
      batches = std::move(shuffled);
    }

    EpochStats stats;
    stats.epoch = epoch;
    double loss_sum = 0.0;
    double norm_sum = 0.0;

    for (size_t b = 0; b < batches.size(); ++b) {
      GradMap batch_grads;
      int64_t n_ok = 0;
      for (size_t idx : batches[b]) {
        const DataSample& raw = dataset[idx];
        RngStream rng(cfg.seed, strcat_all("e", epoch, "/b", b, "/", raw.id));
        const PreparedSample ps = prepare_sample(raw, cfg, nrm, rng);
        const bool estimate_branch =
            ps.can_estimate && (cfg.mode == "dual" || cfg.mode == "estimation");
        const bool generation_branch = cfg.mode == "dual" || cfg.mode == "generation";
        if (!estimate_branch && !generation_branch) {
          ++stats.skipped_inapplicable;
          continue;
        }
        const int64_t t = rng.uniform_int(1, ns.T + 1);
        Tape tape;
        Tensor loss;
        {
          TapeScope scope(tape);
          if (generation_branch) {
            loss = ps.ds.has_3d
                       ? loss_generation(ps.ds, t, cfg.model, params, ns, nrm, cfg.weights, rng)
                       : loss_generation_2d(ps.ds, t, cfg.model, params, ns, nrm, rng);
          }
          if (estimate_branch) {
            Tensor le = ps.ds.has_3d
                            ? loss_estimation(ps.ds, cfg.model, params, ns, nrm, cfg.weights, rng)
                            : loss_estimation_2d(ps.ds, cfg.model, params, ns, nrm, rng);
            loss = loss.defined() ? add(loss, le) : le;
          }
        }
        const double lval = loss.item();
        if (!std::isfinite(lval)) {
          ++stats.skipped_nonfinite;
          continue;
        }
        // keep only parameter gradients: intermediate slots die with the tape
        const GradMap g = backward(loss, tape);
        for (const auto& [name, p] : params) {
          if (const auto* gp = g.find(p.node())) {
            auto& dst = batch_grads.at_or_create(p.node(), p.numel());
            for (int64_t i = 0; i < p.numel(); ++i) dst[i] += (*gp)[i];
          }
        }
        loss_sum += lval;
        ++n_ok;
      }
      if (n_ok == 0) continue;
      const double inv = 1.0 / static_cast<double>(n_ok);
      for (auto& [node, g] : batch_grads.slots) {
        for (double& x : g) x *= inv;
      }
      norm_sum += clip_global_norm(params, batch_grads, cfg.grad_clip);
      adamw_step(params, batch_grads, opt);
      stats.samples_used += n_ok;
      ++stats.batches;
    }
    stats.mean_loss = stats.samples_used > 0 ? loss_sum / static_cast<double>(stats.samples_used) : 0.0;
    stats.mean_grad_norm = stats.batches > 0 ? norm_sum / static_cast<double>(stats.batches) : 0.0;

    if ((cfg.eval_every > 0 && epoch % cfg.eval_every == 0) || epoch == cfg.epochs) {
      stats.eval_mpjpe = eval_estimation_mpjpe(test_samples, cfg.model, params, ns, nrm);
      if (stats.eval_mpjpe >= 0.0 && (!have_best || stats.eval_mpjpe < best_metric)) {
        best_metric = stats.eval_mpjpe;
        have_best = true;
        result.best = snapshot(cfg, params, nrm, nullptr, epoch, best_metric);
      }
    }
    result.history.push_back(stats);
    if (!out_dir.empty()) {
      ojson row;
      row["epoch"] = stats.epoch;
      row["mean_loss"] = stats.mean_loss;
      row["mean_grad_norm"] = stats.mean_grad_norm;
      row["batches"] = stats.batches;
      row["samples_used"] = stats.samples_used;
      row["skipped_nonfinite"] = stats.skipped_nonfinite;
      row["skipped_inapplicable"] = stats.skipped_inapplicable;
      row["eval_mpjpe"] = stats.eval_mpjpe;
      append_jsonl((std::filesystem::path(out_dir) / "history.jsonl").string(), row);
    }
  }

  if (!have_best) {  // never evaluated: fall back to the final parameters
    result.best = snapshot(cfg, params, nrm, nullptr, cfg.epochs, -1.0);
  }
  result.last = snapshot(cfg, params, nrm, &opt, cfg.epochs, best_metric);
  if (!out_dir.empty()) {
    save_checkpoint((std::filesystem::path(out_dir) / "best.ckpt").string(), result.best);
    save_checkpoint((std::filesystem::path(out_dir) / "last.ckpt").string(), result.last);
  }
  return result;
}

}  // namespace mogen
