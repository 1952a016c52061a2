// SPDX-License-Identifier: Apache-2.0
#include "mogen/denoiser.hpp"

#include <cmath>
#include <limits>

#include "mogen/rng.hpp"

namespace mogen {

namespace {

void push_linear(std::vector<ParamSpec>& out, const std::string& prefix, int64_t d_in,
                 int64_t d_out, bool zero_weight = false) {
  out.push_back({prefix + ".w", {d_in, d_out},
                 zero_weight ? ParamSpec::Init::zeros : ParamSpec::Init::linear});
  out.push_back({prefix + ".b", {d_out}, ParamSpec::Init::zeros});
}

void push_layer_norm(std::vector<ParamSpec>& out, const std::string& prefix, int64_t d) {
  out.push_back({prefix + ".g", {d}, ParamSpec::Init::ones});
  out.push_back({prefix + ".b", {d}, ParamSpec::Init::zeros});
}

// 2-layer condition encoder + learned null embedding for absent inputs.
void push_encoder(std::vector<ParamSpec>& out, const std::string& prefix, int64_t d_in,
                  int64_t d) {
  push_linear(out, prefix + ".l1", d_in, d);
  push_linear(out, prefix + ".l2", d, d);
  out.push_back({prefix + ".null", {d}, ParamSpec::Init::small});
}

}  // namespace

std::vector<ParamSpec> param_specs(const ModelConfig& cfg) {
  if (cfg.d_model % cfg.heads != 0) {
    fail_value("model config: d_model ", cfg.d_model, " not divisible by heads ", cfg.heads);
  }
  if (cfg.head_dim() % 2 != 0) {
    fail_value("model config: head_dim ", cfg.head_dim(), " must be even for rotary positions");
  }
  if (cfg.d_model % 2 != 0) fail_value("model config: d_model must be even");
  const int64_t d = cfg.d_model;
  const int64_t D = cfg.pose_dim();
  std::vector<ParamSpec> s;
  push_linear(s, "enc.proj_x", D, d);
  push_encoder(s, "enc.video", cfg.d_video, d);
  push_encoder(s, "enc.camera", 9, d);
  push_encoder(s, "enc.kp2d", static_cast<int64_t>(cfg.joints) * 3, d);
  push_encoder(s, "enc.music", cfg.d_music, d);
  push_encoder(s, "enc.bbox", 4, d);
  s.push_back({"enc.text.table", {vocab_size(), cfg.d_text}, ParamSpec::Init::embedding});
  s.push_back({"enc.text.pos", {cfg.max_text_tokens, cfg.d_text}, ParamSpec::Init::small});
  push_linear(s, "time.l1", d, d);
  push_linear(s, "time.l2", d, d);
  for (int64_t i = 0; i < cfg.layers; ++i) {
    const std::string L = strcat_all("layer", i);
    push_layer_norm(s, L + ".self.ln", d);
    push_linear(s, L + ".self.wq", d, d);
    push_linear(s, L + ".self.wk", d, d);
    push_linear(s, L + ".self.wv", d, d);
    push_linear(s, L + ".self.wo", d, d, /*zero_weight=*/true);
    push_layer_norm(s, L + ".inj.ln", d);
    push_linear(s, L + ".inj.wq", d, d);
    push_linear(s, L + ".inj.wk", cfg.d_text, d);
    push_linear(s, L + ".inj.wv", cfg.d_text, d);
    push_linear(s, L + ".inj.wo", d, d, /*zero_weight=*/true);
    push_layer_norm(s, L + ".mlp.ln", d);
    push_linear(s, L + ".mlp.l1", d, cfg.d_mlp);
    push_linear(s, L + ".mlp.l2", cfg.d_mlp, d, /*zero_weight=*/true);
  }
  push_layer_norm(s, "final.ln", d);
  push_linear(s, "head", d, D, /*zero_weight=*/true);
  return s;
}

ParamMap init_params(const ModelConfig& cfg, uint64_t seed) {
  ParamMap p;
  for (const ParamSpec& spec : param_specs(cfg)) {
    Tensor t = Tensor::zeros(spec.shape, /*requires_grad=*/true);
    t.set_name(spec.name);
    RngStream rng(seed, spec.name);
    switch (spec.init) {
      case ParamSpec::Init::linear: {
        const double std = 1.0 / std::sqrt(static_cast<double>(spec.shape[0]));
        for (int64_t i = 0; i < t.numel(); ++i) t.data()[i] = std * rng.normal();
        break;
      }
      case ParamSpec::Init::zeros:
        break;
      case ParamSpec::Init::ones:
        for (int64_t i = 0; i < t.numel(); ++i) t.data()[i] = 1.0;
        break;
      case ParamSpec::Init::embedding:
        for (int64_t i = 0; i < t.numel(); ++i) t.data()[i] = 0.3 * rng.normal();
        break;
      case ParamSpec::Init::small:
        for (int64_t i = 0; i < t.numel(); ++i) t.data()[i] = 0.1 * rng.normal();
        break;
    }
    p.emplace(spec.name, t);
  }
  return p;
}

int64_t param_count(const ModelConfig& cfg) {
  int64_t n = 0;
  for (const ParamSpec& s : param_specs(cfg)) n += shape_numel(s.shape);
  return n;
}

Tensor timestep_features(int64_t t, int64_t d) {
  if (d % 2 != 0) fail_value("timestep_features: odd dimension ", d);
  Tensor out = Tensor::zeros({d});
  const int64_t half = d / 2;
  for (int64_t p = 0; p < half; ++p) {
    const double freq =
        std::exp(-std::log(10000.0) * static_cast<double>(p) / static_cast<double>(half));
    out.data()[p] = std::sin(static_cast<double>(t) * freq);
    out.data()[half + p] = std::cos(static_cast<double>(t) * freq);
  }
  return out;
}

Tensor attention_window_mask(int64_t n, int64_t window) {
  const int64_t radius = window / 2;
  Tensor m = Tensor::zeros({n, n});
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t j = 0; j < n; ++j) {
      if (std::llabs(i - j) > radius) m.data()[i * n + j] = 1.0;
    }
  }
  return m;
}

namespace {

const Tensor& P(const ParamMap& params, const std::string& name) {
  auto it = params.find(name);
  if (it == params.end()) fail_value("missing parameter \"", name, "\"");
  return it->second;
}

Tensor linear(const Tensor& x, const ParamMap& p, const std::string& prefix) {
  return add(matmul(x, P(p, prefix + ".w")), P(p, prefix + ".b"));
}

Tensor layer_norm_affine(const Tensor& x, const ParamMap& p, const std::string& prefix) {
  return add(mul(layer_norm(x), P(p, prefix + ".g")), P(p, prefix + ".b"));
}

// Condition encoder: 2-layer MLP on defined input, else the learned null
// embedding broadcast over all frames.
Tensor encode_channel(const Tensor& c, const ParamMap& p, const std::string& prefix,
                      const Tensor& tokens) {
  if (!c.defined()) return add(tokens, P(p, prefix + ".null"));
  return add(tokens, linear(gelu(linear(c, p, prefix + ".l1")), p, prefix + ".l2"));
}

// Multi-head attention core shared by self-attention and text injection.
// q/k/v are full-width (rows, d_model); mask (optional) blocks logits.
Tensor mha(const Tensor& q, const Tensor& k, const Tensor& v, int64_t heads,
           const Tensor* mask) {
  const int64_t dh = q.dim(1) / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Tensor> outs;
  outs.reserve(static_cast<size_t>(heads));
  for (int64_t h = 0; h < heads; ++h) {
    Tensor qh = slice(q, 1, h * dh, (h + 1) * dh);
    Tensor kh = slice(k, 1, h * dh, (h + 1) * dh);
    Tensor vh = slice(v, 1, h * dh, (h + 1) * dh);
    Tensor logits = scale(matmul(qh, kh, false, /*trans_b=*/true), inv_sqrt);
    if (mask) logits = masked_fill(logits, *mask, -std::numeric_limits<double>::infinity());
    outs.push_back(matmul(softmax(logits), vh));
  }
  return concat(outs, 1);
}

}  // namespace

Tensor denoise(const Tensor& x_t, int64_t t, const ConditionSet& cond, const ModelConfig& cfg,
               const ParamMap& params, const DenoiseOptions& opt) {
  const int64_t D = cfg.pose_dim();
  if (x_t.rank() != 2 || x_t.dim(1) != D) {
    fail_shape("denoise: expected (N,", D, ") motion tensor, got ", shape_str(x_t.shape()));
  }
  if (t < 0 || t > cfg.timesteps) {
    fail_value("denoise: timestep ", t, " outside [0, ", cfg.timesteps, "]");
  }
  const int64_t N = x_t.dim(0);
  validate_conditions(cond, N, cfg.joints);

  // Additive fusion of the noisy motion, condition channels and timestep.
  Tensor h = linear(x_t, params, "enc.proj_x");
  h = encode_channel(cond.video, params, "enc.video", h);
  h = encode_channel(cond.camera, params, "enc.camera", h);
  h = encode_channel(cond.kp2d, params, "enc.kp2d", h);
  h = encode_channel(cond.music, params, "enc.music", h);
  h = encode_channel(cond.bbox, params, "enc.bbox", h);
  Tensor tf = reshape(timestep_features(t, cfg.d_model), {1, cfg.d_model});
  Tensor temb = linear(gelu(linear(tf, params, "time.l1")), params, "time.l2");
  h = add(h, reshape(temb, {cfg.d_model}));

  // Prompt token embeddings: word embedding + learned position rows.
  std::vector<Tensor> prompt_emb;
  std::vector<Tensor> prompt_gates;
  for (const TextPrompt& pr : cond.prompts) {
    if (static_cast<int64_t>(pr.tokens.size()) > cfg.max_text_tokens) {
      fail_value("denoise: prompt \"", pr.text, "\" has ", pr.tokens.size(),
                 " tokens, limit ", cfg.max_text_tokens);
    }
    const int64_t n_tok = static_cast<int64_t>(pr.tokens.size());
    Tensor emb = embedding_lookup(P(params, "enc.text.table"), pr.tokens);
    emb = add(emb, slice(P(params, "enc.text.pos"), 0, 0, n_tok));
    prompt_emb.push_back(emb);
    prompt_gates.push_back(Tensor::from({N}, prompt_gate(pr, N)));
  }

  const Tensor wmask = attention_window_mask(N, cfg.window);
  for (int64_t i = 0; i < cfg.layers; ++i) {
    const std::string L = strcat_all("layer", i);
    {  // windowed rotary self-attention
      Tensor s = layer_norm_affine(h, params, L + ".self.ln");
      Tensor q = rope(linear(s, params, L + ".self.wq"), cfg.heads, cfg.rope_base, opt.pos0);
      Tensor k = rope(linear(s, params, L + ".self.wk"), cfg.heads, cfg.rope_base, opt.pos0);
      Tensor v = linear(s, params, L + ".self.wv");
      Tensor attn = mha(q, k, v, cfg.heads, &wmask);
      h = add(h, linear(attn, params, L + ".self.wo"));
    }
    if (!prompt_emb.empty()) {  // per-prompt gated text injection
      Tensor s = layer_norm_affine(h, params, L + ".inj.ln");
      Tensor q = linear(s, params, L + ".inj.wq");
      Tensor acc;
      for (size_t pidx = 0; pidx < prompt_emb.size(); ++pidx) {
        Tensor k = linear(prompt_emb[pidx], params, L + ".inj.wk");
        Tensor v = linear(prompt_emb[pidx], params, L + ".inj.wv");
        Tensor a = mha(q, k, v, cfg.heads, nullptr);
        if (!opt.ungated_text) a = row_scale(a, prompt_gates[pidx]);
        acc = acc.defined() ? add(acc, a) : a;
      }
      h = add(h, linear(acc, params, L + ".inj.wo"));
    }
    {  // position-wise MLP
      Tensor s = layer_norm_affine(h, params, L + ".mlp.ln");
      h = add(h, linear(gelu(linear(s, params, L + ".mlp.l1")), params, L + ".mlp.l2"));
    }
  }
  return linear(layer_norm_affine(h, params, "final.ln"), params, "head");
}

}  // namespace mogen
