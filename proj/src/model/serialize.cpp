// SPDX-License-Identifier: Apache-2.0
#include "shapefat/model/serialize.hpp"

#include <fstream>
#include <set>

#include "shapefat/error.hpp"

namespace shapefat::model {
namespace {

using nlohmann::json;

constexpr const char* kParamPrefix = "param/";
constexpr const char* kBnPrefix = "bn/";

json read_sidecar(const std::filesystem::path& checkpoint) {
  const auto path = sidecar_path(checkpoint);
  std::ifstream in(path);
  if (!in) throw Error("cannot open model sidecar " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("malformed model sidecar " + path.string() + ": " + e.what());
  }
}

template <typename T>
void read_field(const json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model config field '") + key + "': " + e.what());
  }
}

}  // namespace

json config_to_json(const ModelConfig& c) {
  json stages = json::array();
  for (const auto& s : c.stages) stages.push_back({{"channels", s.channels}, {"blocks", s.blocks}});
  return {
      {"variant", std::string(to_string(c.variant))},
      {"input_size", c.input_size},
      {"input_phase_channels", c.input_phase_channels},
      {"stages", stages},
      {"attention_channels", c.attention_channels},
      {"head_widths", c.head_widths},
      {"mlp_hidden", c.mlp_hidden},
      {"loss_weights",
       {{"lambda1", c.loss_weights.reg},
        {"alpha1", c.loss_weights.att_reg},
        {"alpha2", c.loss_weights.att_cls}}},
  };
}

ModelConfig config_from_json(const json& j, ModelConfig c) {
  if (!j.is_object()) throw ConfigError("model config must be a JSON object");
  if (j.contains("variant")) {
    std::string name;
    read_field(j, "variant", name);
    c.variant = parse_variant(name);
  }
  read_field(j, "input_size", c.input_size);
  read_field(j, "input_phase_channels", c.input_phase_channels);
  read_field(j, "attention_channels", c.attention_channels);
  read_field(j, "head_widths", c.head_widths);
  read_field(j, "mlp_hidden", c.mlp_hidden);
  if (j.contains("stages")) {
    const json& s = j.at("stages");
    if (!s.is_array()) throw ConfigError("model config field 'stages' must be an array");
    c.stages.clear();
    for (const json& e : s) {
      StagePlan plan;
      read_field(e, "channels", plan.channels);
      read_field(e, "blocks", plan.blocks);
      c.stages.push_back(plan);
    }
  }
  if (j.contains("loss_weights")) {
    const json& w = j.at("loss_weights");
    read_field(w, "lambda1", c.loss_weights.reg);
    read_field(w, "alpha1", c.loss_weights.att_reg);
    read_field(w, "alpha2", c.loss_weights.att_cls);
  }
  return c;
}

std::vector<ad::NamedTensor> to_named_tensors(const ModelParams& model) {
  std::vector<ad::NamedTensor> out;
  for (const auto& [name, entry] : model.params.entries()) {
    const ad::Tensor& v = entry.param->value;
    out.push_back({kParamPrefix + name, ad::Tensor(v.shape(), std::vector<double>(v.values().begin(), v.values().end()))});
  }
  for (const auto& [name, state] : model.batchnorm) {
    const ad::Shape s{state.running_mean.size()};
    out.push_back({kBnPrefix + name + "/running_mean", ad::Tensor(s, state.running_mean)});
    out.push_back({kBnPrefix + name + "/running_var", ad::Tensor(s, state.running_var)});
  }
  return out;
}

void assign_named_tensors(ModelParams& model, const std::vector<ad::NamedTensor>& tensors) {
  std::map<std::string, const ad::Tensor*> by_name;
  for (const auto& t : tensors) {
    if (!by_name.emplace(t.name, &t.tensor).second) {
      throw FormatError("checkpoint holds tensor '" + t.name + "' twice");
    }
  }
  std::set<std::string> used;
  auto fetch = [&](const std::string& key, const ad::Shape& shape) -> const ad::Tensor& {
    auto it = by_name.find(key);
    if (it == by_name.end()) throw FormatError("checkpoint is missing tensor '" + key + "'");
    if (it->second->shape() != shape) {
      throw FormatError("checkpoint tensor '" + key + "' has shape " +
                        ad::to_string(it->second->shape()) + ", model expects " +
                        ad::to_string(shape));
    }
    used.insert(key);
    return *it->second;
  };
  for (auto& [name, entry] : model.params.entries()) {
    ad::Tensor& dst = entry.param->value;
    const ad::Tensor& src = fetch(kParamPrefix + name, dst.shape());
    std::copy(src.values().begin(), src.values().end(), dst.values().begin());
    std::fill(entry.velocity.begin(), entry.velocity.end(), 0.0);
  }
  for (auto& [name, state] : model.batchnorm) {
    const ad::Shape s{state.running_mean.size()};
    const auto& mean = fetch(kBnPrefix + name + "/running_mean", s);
    const auto& var = fetch(kBnPrefix + name + "/running_var", s);
    state.running_mean.assign(mean.values().begin(), mean.values().end());
    state.running_var.assign(var.values().begin(), var.values().end());
    state.initialized = true;
  }
  if (used.size() != by_name.size()) {
    for (const auto& [name, t] : by_name) {
      if (!used.count(name)) throw FormatError("checkpoint holds unexpected tensor '" + name + "'");
    }
  }
}

std::filesystem::path sidecar_path(const std::filesystem::path& checkpoint) {
  auto p = checkpoint;
  p.replace_extension(".json");
  return p;
}

void save_model(const ModelParams& model, const std::filesystem::path& checkpoint,
                const json& metadata) {
  ad::save_checkpoint(checkpoint, to_named_tensors(model));
  const json sidecar = {
      {"format", "shapefat-model"},
      {"version", 1},
      {"checkpoint", checkpoint.filename().string()},
      {"trained", model.trained},
      {"config", config_to_json(model.config)},
      {"metadata", metadata},
  };
  const auto path = sidecar_path(checkpoint);
  std::ofstream out(path);
  if (!out) throw Error("cannot write model sidecar " + path.string());
  out << sidecar.dump(2) << '\n';
  if (!out) throw Error("failed writing model sidecar " + path.string());
}

ModelParams load_model(const std::filesystem::path& checkpoint) {
  if (!std::filesystem::exists(checkpoint)) {
    throw Error("model checkpoint " + checkpoint.string() + " does not exist");
  }
  const json sidecar = read_sidecar(checkpoint);
  if (sidecar.value("format", "") != "shapefat-model" || !sidecar.contains("config")) {
    throw FormatError("model sidecar " + sidecar_path(checkpoint).string() +
                      " is not a shapefat model description");
  }
  ModelParams model = build_model(config_from_json(sidecar.at("config")), 0);
  assign_named_tensors(model, ad::load_checkpoint(checkpoint));
  model.trained = sidecar.value("trained", false);
  return model;
}

json load_model_metadata(const std::filesystem::path& checkpoint) {
  const json sidecar = read_sidecar(checkpoint);
  return sidecar.value("metadata", json::object());
}

}  // namespace shapefat::model
