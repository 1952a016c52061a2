// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "mogen/datagen.hpp"
#include "mogen/denoiser.hpp"
#include "mogen/diffusion.hpp"
#include "mogen/optim.hpp"

namespace mogen {

// All JSON writers use ordered maps and fixed field orders, so identical
// inputs always serialize to identical bytes.
using ojson = nlohmann::ordered_json;

ojson tensor_to_json(const Tensor& t);
Tensor tensor_from_json(const ojson& j);

ojson motion_to_json(const MotionSequence& seq);
MotionSequence motion_from_json(const ojson& j, const Skeleton& sk);

ojson conditions_to_json(const ConditionSet& c);
ConditionSet conditions_from_json(const ojson& j);

ojson config_to_json(const ModelConfig& cfg);
ModelConfig config_from_json(const ojson& j);

// Dataset directory layout: <dir>/manifest.json + <dir>/samples/<id>.json.
void save_dataset(const std::string& dir, const std::vector<DataSample>& ds);
std::vector<DataSample> load_dataset(const std::string& dir);

// Binary model checkpoint: magic, JSON header (config, parameter census,
// optimizer hyperparameters, bookkeeping), then float64 blobs for every
// parameter, the normalizer, and (optionally) the optimizer moments.
// Loading re-derives the parameter census from the stored config and
// rejects any mismatch before touching blob data.
struct Checkpoint {
  ModelConfig config;
  ParamMap params;
  Normalizer norm;
  OptimizerState opt;
  bool has_opt = false;
  int64_t epoch = 0;
  double best_metric = 0.0;
  uint64_t seed = 0;
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

// Appends one compact JSON line (training history and similar logs).
void append_jsonl(const std::string& path, const ojson& row);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace mogen
