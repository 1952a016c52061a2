// SPDX-License-Identifier: Apache-2.0
#include "mogen/io.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

#include "mogen/common.hpp"

namespace mogen {

namespace fs = std::filesystem;

namespace {

constexpr char kCkptMagic[8] = {'M', 'G', 'C', 'K', 'P', 'T', '1', '\n'};

ojson parse_json(const std::string& text, const std::string& where) {
  try {
    return ojson::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail_io("invalid JSON in ", where, ": ", e.what());
  }
}

// Throwing accessor so malformed files turn into io errors, not aborts.
template <typename T>
T get_field(const ojson& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail_io(where, ": bad or missing field \"", key, "\": ", e.what());
  }
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_io("cannot open ", path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) fail_io("read error on ", path);
  return text;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail_io("cannot write ", path);
  out << content;
  if (!out) fail_io("write error on ", path);
}

ojson tensor_to_json(const Tensor& t) {
  if (!t.defined()) return nullptr;
  ojson j;
  j["shape"] = t.shape();
  j["data"] = std::vector<double>(t.data(), t.data() + t.numel());
  return j;
}

Tensor tensor_from_json(const ojson& j) {
  if (j.is_null()) return {};
  const auto shape = get_field<std::vector<int64_t>>(j, "shape", "tensor");
  const auto data = get_field<std::vector<double>>(j, "data", "tensor");
  Tensor t = Tensor::zeros(shape);
  if (t.numel() != static_cast<int64_t>(data.size())) {
    fail_io("tensor: shape ", shape_str(shape), " does not hold ", data.size(), " values");
  }
  std::memcpy(t.data(), data.data(), data.size() * sizeof(double));
  return t;
}

ojson motion_to_json(const MotionSequence& seq) {
  const Tensor x = flatten(seq);
  ojson j;
  j["fps"] = seq.fps;
  j["joints"] = seq.skeleton.joints;
  j["shape_dim"] = seq.skeleton.shape_dim;
  j["frames"] = seq.length();
  ojson rows = ojson::array();
  const int64_t d = x.dim(1);
  for (int64_t i = 0; i < x.dim(0); ++i) {
    rows.push_back(std::vector<double>(x.data() + i * d, x.data() + (i + 1) * d));
  }
  j["data"] = std::move(rows);
  return j;
}

MotionSequence motion_from_json(const ojson& j, const Skeleton& sk) {
  const auto joints = get_field<int>(j, "joints", "motion");
  const auto shape_dim = get_field<int>(j, "shape_dim", "motion");
  if (joints != sk.joints || shape_dim != sk.shape_dim) {
    fail_io("motion: stored for ", joints, " joints / ", shape_dim,
            " shape factors, expected ", sk.joints, " / ", sk.shape_dim);
  }
  const auto fps = get_field<double>(j, "fps", "motion");
  const auto frames = get_field<int64_t>(j, "frames", "motion");
  if (frames < 1) fail_io("motion: empty sequence");
  const ChannelLayout layout(sk);
  Tensor x = Tensor::zeros({frames, layout.D});
  const auto& rows = j.at("data");
  if (!rows.is_array() || static_cast<int64_t>(rows.size()) != frames) {
    fail_io("motion: data rows do not match frame count");
  }
  for (int64_t i = 0; i < frames; ++i) {
    const auto row = rows[static_cast<size_t>(i)].get<std::vector<double>>();
    if (static_cast<int64_t>(row.size()) != layout.D) {
      fail_io("motion: row ", i, " holds ", row.size(), " values, want ", layout.D);
    }
    std::memcpy(x.data() + i * layout.D, row.data(), row.size() * sizeof(double));
  }
  return unflatten(x, sk, fps);
}

ojson conditions_to_json(const ConditionSet& c) {
  ojson j;
  j["frames"] = c.frames;
  j["video"] = tensor_to_json(c.video);
  j["camera"] = tensor_to_json(c.camera);
  j["kp2d"] = tensor_to_json(c.kp2d);
  j["music"] = tensor_to_json(c.music);
  j["bbox"] = tensor_to_json(c.bbox);
  ojson prompts = ojson::array();
  for (const auto& p : c.prompts) {
    ojson e;
    e["text"] = p.text;
    e["window"] = {p.win_start, p.win_end};
    prompts.push_back(std::move(e));
  }
  j["prompts"] = std::move(prompts);
  return j;
}

ConditionSet conditions_from_json(const ojson& j) {
  ConditionSet c;
  c.frames = get_field<int64_t>(j, "frames", "conditions");
  c.video = tensor_from_json(j.at("video"));
  c.camera = tensor_from_json(j.at("camera"));
  c.kp2d = tensor_from_json(j.at("kp2d"));
  c.music = tensor_from_json(j.at("music"));
  c.bbox = tensor_from_json(j.at("bbox"));
  for (const auto& e : j.at("prompts")) {
    const auto text = get_field<std::string>(e, "text", "prompt");
    const auto win = get_field<std::vector<int64_t>>(e, "window", "prompt");
    if (win.size() != 2) fail_io("prompt: window must be [start, end]");
    c.prompts.push_back(make_prompt(text, win[0], win[1]));
  }
  return c;
}

ojson config_to_json(const ModelConfig& cfg) {
  ojson j;
  j["joints"] = cfg.joints;
  j["shape_dim"] = cfg.shape_dim;
  j["d_model"] = cfg.d_model;
  j["d_mlp"] = cfg.d_mlp;
  j["layers"] = cfg.layers;
  j["heads"] = cfg.heads;
  j["window"] = cfg.window;
  j["d_text"] = cfg.d_text;
  j["max_text_tokens"] = cfg.max_text_tokens;
  j["d_video"] = cfg.d_video;
  j["d_music"] = cfg.d_music;
  j["timesteps"] = cfg.timesteps;
  j["rope_base"] = cfg.rope_base;
  return j;
}

ModelConfig config_from_json(const ojson& j) {
  ModelConfig cfg;
  cfg.joints = get_field<int>(j, "joints", "config");
  cfg.shape_dim = get_field<int>(j, "shape_dim", "config");
  cfg.d_model = get_field<int64_t>(j, "d_model", "config");
  cfg.d_mlp = get_field<int64_t>(j, "d_mlp", "config");
  cfg.layers = get_field<int64_t>(j, "layers", "config");
  cfg.heads = get_field<int64_t>(j, "heads", "config");
  cfg.window = get_field<int64_t>(j, "window", "config");
  cfg.d_text = get_field<int64_t>(j, "d_text", "config");
  cfg.max_text_tokens = get_field<int64_t>(j, "max_text_tokens", "config");
  cfg.d_video = get_field<int64_t>(j, "d_video", "config");
  cfg.d_music = get_field<int64_t>(j, "d_music", "config");
  cfg.timesteps = get_field<int64_t>(j, "timesteps", "config");
  cfg.rope_base = get_field<double>(j, "rope_base", "config");
  return cfg;
}

void save_dataset(const std::string& dir, const std::vector<DataSample>& ds) {
  std::error_code ec;
  fs::create_directories(fs::path(dir) / "samples", ec);
  if (ec) fail_io("cannot create ", dir, ": ", ec.message());
  ojson manifest;
  manifest["version"] = 1;
  manifest["count"] = ds.size();
  ojson entries = ojson::array();
  for (const auto& s : ds) {
    ojson j;
    j["id"] = s.id;
    j["subset"] = s.subset;
    j["family"] = s.family;
    j["split"] = s.split;
    j["has_3d"] = s.has_3d;
    j["beats"] = s.beats;
    ojson k;
    k["f"] = s.K.f;
    k["cx"] = s.K.cx;
    k["cy"] = s.K.cy;
    k["width"] = s.K.width;
    k["height"] = s.K.height;
    k["z_near"] = s.K.z_near;
    j["intrinsics"] = std::move(k);
    j["motion"] = motion_to_json(s.seq);
    j["conditions"] = conditions_to_json(s.cond);
    const std::string rel = strcat_all("samples/", s.id, ".json");
    write_text_file((fs::path(dir) / rel).string(), j.dump());
    ojson m;
    m["id"] = s.id;
    m["subset"] = s.subset;
    m["family"] = s.family;
    m["split"] = s.split;
    m["has_3d"] = s.has_3d;
    m["file"] = rel;
    entries.push_back(std::move(m));
  }
  manifest["samples"] = std::move(entries);
  write_text_file((fs::path(dir) / "manifest.json").string(), manifest.dump(2));
}

std::vector<DataSample> load_dataset(const std::string& dir) {
  const ojson manifest =
      parse_json(read_text_file((fs::path(dir) / "manifest.json").string()), "manifest");
  std::vector<DataSample> out;
  const Skeleton sk = Skeleton::toy12();
  for (const auto& m : manifest.at("samples")) {
    const auto rel = get_field<std::string>(m, "file", "manifest entry");
    const std::string full = (fs::path(dir) / rel).string();
    const ojson j = parse_json(read_text_file(full), full);
    DataSample s;
    s.id = get_field<std::string>(j, "id", full);
    s.subset = get_field<std::string>(j, "subset", full);
    s.family = get_field<std::string>(j, "family", full);
    s.split = get_field<std::string>(j, "split", full);
    s.has_3d = get_field<bool>(j, "has_3d", full);
    s.beats = get_field<std::vector<int64_t>>(j, "beats", full);
    const auto& k = j.at("intrinsics");
    s.K.f = get_field<double>(k, "f", full);
    s.K.cx = get_field<double>(k, "cx", full);
    s.K.cy = get_field<double>(k, "cy", full);
    s.K.width = get_field<int>(k, "width", full);
    s.K.height = get_field<int>(k, "height", full);
    s.K.z_near = get_field<double>(k, "z_near", full);
    s.seq = motion_from_json(j.at("motion"), sk);
    s.cond = conditions_from_json(j.at("conditions"));
    validate_conditions(s.cond, s.seq.length(), sk.joints);
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

void write_raw(std::ofstream& out, const void* p, size_t bytes, const std::string& path) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(bytes));
  if (!out) fail_io("write error on ", path);
}

void read_raw(std::ifstream& in, void* p, size_t bytes, const std::string& path) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(bytes));
  if (in.gcount() != static_cast<std::streamsize>(bytes)) fail_io("truncated checkpoint ", path);
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  const auto specs = param_specs(ck.config);
  if (ck.params.size() != specs.size()) {
    fail_value("checkpoint: ", ck.params.size(), " parameters, census wants ", specs.size());
  }
  const int64_t d = ck.config.pose_dim();
  if (ck.norm.dim() != d) {
    fail_value("checkpoint: normalizer dim ", ck.norm.dim(), ", pose dim ", d);
  }
  ojson header;
  header["config"] = config_to_json(ck.config);
  ojson plist = ojson::array();
  for (const auto& spec : specs) {
    const auto it = ck.params.find(spec.name);
    if (it == ck.params.end()) fail_value("checkpoint: missing parameter ", spec.name);
    if (it->second.shape() != spec.shape) {
      fail_value("checkpoint: parameter ", spec.name, " has shape ",
                 shape_str(it->second.shape()), ", census wants ", shape_str(spec.shape));
    }
    ojson e;
    e["name"] = spec.name;
    e["shape"] = spec.shape;
    plist.push_back(std::move(e));
  }
  header["params"] = std::move(plist);
  ojson opt;
  opt["present"] = ck.has_opt;
  opt["step"] = ck.opt.step;
  opt["lr"] = ck.opt.cfg.lr;
  opt["beta1"] = ck.opt.cfg.beta1;
  opt["beta2"] = ck.opt.cfg.beta2;
  opt["eps"] = ck.opt.cfg.eps;
  opt["weight_decay"] = ck.opt.cfg.weight_decay;
  header["optimizer"] = std::move(opt);
  header["epoch"] = ck.epoch;
  header["best_metric"] = ck.best_metric;
  header["seed"] = ck.seed;
  const std::string head = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail_io("cannot write ", path);
  write_raw(out, kCkptMagic, sizeof(kCkptMagic), path);
  const uint64_t head_len = head.size();
  write_raw(out, &head_len, sizeof(head_len), path);
  write_raw(out, head.data(), head.size(), path);
  for (const auto& spec : specs) {
    const Tensor& t = ck.params.at(spec.name);
    write_raw(out, t.data(), static_cast<size_t>(t.numel()) * sizeof(double), path);
  }
  write_raw(out, ck.norm.mean.data(), static_cast<size_t>(d) * sizeof(double), path);
  write_raw(out, ck.norm.stdev.data(), static_cast<size_t>(d) * sizeof(double), path);
  if (ck.has_opt) {
    for (const char* slot : {"m", "v"}) {
      const auto& bank = slot[0] == 'm' ? ck.opt.m : ck.opt.v;
      for (const auto& spec : specs) {
        const int64_t numel = ck.params.at(spec.name).numel();
        const auto it = bank.find(spec.name);
        if (it != bank.end()) {
          if (static_cast<int64_t>(it->second.size()) != numel) {
            fail_value("checkpoint: optimizer ", slot, " for ", spec.name, " has ",
                       it->second.size(), " values, want ", numel);
          }
          write_raw(out, it->second.data(), static_cast<size_t>(numel) * sizeof(double), path);
        } else {  // parameter never stepped: store zero moments
          const std::vector<double> z(static_cast<size_t>(numel), 0.0);
          write_raw(out, z.data(), static_cast<size_t>(numel) * sizeof(double), path);
        }
      }
    }
  }
  if (!out) fail_io("write error on ", path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_io("cannot open ", path);
  char magic[sizeof(kCkptMagic)];
  read_raw(in, magic, sizeof(magic), path);
  if (std::memcmp(magic, kCkptMagic, sizeof(magic)) != 0) {
    fail_io(path, " is not a checkpoint (bad magic)");
  }
  uint64_t head_len = 0;
  read_raw(in, &head_len, sizeof(head_len), path);
  if (head_len > (1u << 20)) fail_io(path, ": implausible header size ", head_len);
  std::string head(head_len, '\0');
  read_raw(in, head.data(), head_len, path);
  const ojson header = parse_json(head, path);

  Checkpoint ck;
  ck.config = config_from_json(header.at("config"));
  const auto specs = param_specs(ck.config);
  const auto& plist = header.at("params");
  if (plist.size() != specs.size()) {
    fail_io(path, ": header lists ", plist.size(), " parameters, census wants ", specs.size());
  }
  for (size_t i = 0; i < specs.size(); ++i) {
    const auto name = get_field<std::string>(plist[i], "name", path);
    const auto shape = get_field<std::vector<int64_t>>(plist[i], "shape", path);
    if (name != specs[i].name || shape != specs[i].shape) {
      fail_io(path, ": parameter census mismatch at ", specs[i].name);
    }
  }
  for (const auto& spec : specs) {
    Tensor t = Tensor::zeros(spec.shape);
    read_raw(in, t.data(), static_cast<size_t>(t.numel()) * sizeof(double), path);
    ck.params.emplace(spec.name, std::move(t));
  }
  const int64_t d = ck.config.pose_dim();
  ck.norm.mean.resize(static_cast<size_t>(d));
  ck.norm.stdev.resize(static_cast<size_t>(d));
  read_raw(in, ck.norm.mean.data(), static_cast<size_t>(d) * sizeof(double), path);
  read_raw(in, ck.norm.stdev.data(), static_cast<size_t>(d) * sizeof(double), path);

  const auto& opt = header.at("optimizer");
  ck.has_opt = get_field<bool>(opt, "present", path);
  ck.opt.step = get_field<int64_t>(opt, "step", path);
  ck.opt.cfg.lr = get_field<double>(opt, "lr", path);
  ck.opt.cfg.beta1 = get_field<double>(opt, "beta1", path);
  ck.opt.cfg.beta2 = get_field<double>(opt, "beta2", path);
  ck.opt.cfg.eps = get_field<double>(opt, "eps", path);
  ck.opt.cfg.weight_decay = get_field<double>(opt, "weight_decay", path);
  if (ck.has_opt) {
    for (const char* slot : {"m", "v"}) {
      auto& bank = slot[0] == 'm' ? ck.opt.m : ck.opt.v;
      for (const auto& spec : specs) {
        const int64_t numel = ck.params.at(spec.name).numel();
        std::vector<double> buf(static_cast<size_t>(numel));
        read_raw(in, buf.data(), buf.size() * sizeof(double), path);
        bank.emplace(spec.name, std::move(buf));
      }
    }
  }
  ck.epoch = get_field<int64_t>(header, "epoch", path);
  ck.best_metric = get_field<double>(header, "best_metric", path);
  ck.seed = get_field<uint64_t>(header, "seed", path);
  // the stream must be exactly exhausted
  char extra;
  in.read(&extra, 1);
  if (!in.eof()) fail_io(path, ": trailing bytes after checkpoint payload");
  return ck;
}

void append_jsonl(const std::string& path, const ojson& row) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) fail_io("cannot append to ", path);
  out << row.dump() << '\n';
  if (!out) fail_io("write error on ", path);
}

}  // namespace mogen
