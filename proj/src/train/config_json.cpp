// SPDX-License-Identifier: Apache-2.0
#include "shapefat/train/config_json.hpp"

#include "shapefat/error.hpp"
#include "shapefat/model/serialize.hpp"

namespace shapefat::train {
namespace {

using nlohmann::json;

template <typename T>
void read(const json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

void require_object(const json& j, const char* what) {
  if (!j.is_object()) throw ConfigError(std::string(what) + " config must be a JSON object");
}

}  // namespace

json to_json(const ad::Schedule& s) {
  return {{"base_lr", s.base_lr},
          {"decay_factor", s.decay_factor},
          {"decay_every", s.decay_every},
          {"momentum", s.momentum}};
}

json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},   {"batch", c.batch}, {"schedule", to_json(c.schedule)},
          {"seed", c.seed},       {"folds", c.folds}, {"stratified", c.stratified},
          {"clip_norm", c.clip_norm}};
}

json to_json(const shape::FatCalib& c) {
  return {{"c0", c.c0}, {"c1", c.c1}, {"thresholds", c.thresholds}};
}

json to_json(const CvConfig& c) {
  std::vector<std::string> methods;
  for (const auto& m : c.methods) methods.push_back(canonical_method(m));
  return {{"train", to_json(c.train)},
          {"model", model::config_to_json(c.model)},
          {"methods", methods},
          {"calib", to_json(c.calib)},
          {"pca_threshold", c.pca_threshold},
          {"pca_side", c.pca_side},
          {"jobs", c.jobs}};
}

json to_json(const phantom::DatasetOptions& o) {
  return {{"n", o.n},
          {"seed", o.seed},
          {"grade_mix", o.grade_mix},
          {"sigma", o.sigma},
          {"calib", to_json(o.calib)},
          {"threshold_hu", o.projection.threshold_hu},
          {"input_size", o.projection.out_size},
          {"depth_scale_mm", o.projection.depth_scale_mm},
          {"save_volumes", o.save_volumes},
          {"jobs", o.jobs}};
}

ad::Schedule schedule_from_json(const json& j, ad::Schedule s) {
  require_object(j, "schedule");
  read(j, "base_lr", s.base_lr);
  read(j, "decay_factor", s.decay_factor);
  read(j, "decay_every", s.decay_every);
  read(j, "momentum", s.momentum);
  return s;
}

TrainConfig train_config_from_json(const json& j, TrainConfig c) {
  require_object(j, "train");
  read(j, "epochs", c.epochs);
  read(j, "batch", c.batch);
  read(j, "seed", c.seed);
  read(j, "folds", c.folds);
  read(j, "stratified", c.stratified);
  read(j, "clip_norm", c.clip_norm);
  if (j.contains("schedule")) c.schedule = schedule_from_json(j.at("schedule"), c.schedule);
  return c;
}

shape::FatCalib calib_from_json(const json& j, shape::FatCalib c) {
  require_object(j, "calib");
  read(j, "c0", c.c0);
  read(j, "c1", c.c1);
  read(j, "thresholds", c.thresholds);
  return c;
}

CvConfig cv_config_from_json(const json& j, CvConfig c) {
  require_object(j, "cv");
  if (j.contains("train")) c.train = train_config_from_json(j.at("train"), c.train);
  if (j.contains("model")) c.model = model::config_from_json(j.at("model"), c.model);
  read(j, "methods", c.methods);
  if (j.contains("calib")) c.calib = calib_from_json(j.at("calib"), c.calib);
  read(j, "pca_threshold", c.pca_threshold);
  read(j, "pca_side", c.pca_side);
  read(j, "jobs", c.jobs);
  return c;
}

phantom::DatasetOptions dataset_options_from_json(const json& j, phantom::DatasetOptions o) {
  require_object(j, "phantom");
  read(j, "n", o.n);
  read(j, "seed", o.seed);
  read(j, "grade_mix", o.grade_mix);
  read(j, "sigma", o.sigma);
  if (j.contains("calib")) o.calib = calib_from_json(j.at("calib"), o.calib);
  read(j, "threshold_hu", o.projection.threshold_hu);
  read(j, "input_size", o.projection.out_size);
  read(j, "depth_scale_mm", o.projection.depth_scale_mm);
  read(j, "save_volumes", o.save_volumes);
  read(j, "jobs", o.jobs);
  return o;
}

}  // namespace shapefat::train
