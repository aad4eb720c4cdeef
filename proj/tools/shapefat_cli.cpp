// SPDX-License-Identifier: Apache-2.0
// Command-line entry point: phantom, preprocess, train, eval, cv, gradcam, report.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "shapefat/error.hpp"
#include "shapefat/gradcam/gradcam.hpp"
#include "shapefat/model/serialize.hpp"
#include "shapefat/parallel.hpp"
#include "shapefat/phantom/phantom.hpp"
#include "shapefat/shape/io.hpp"
#include "shapefat/train/config_json.hpp"
#include "shapefat/train/cross_validation.hpp"
#include "shapefat/train/folds.hpp"
#include "shapefat/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace shapefat;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<double> parse_list(const std::string& text, std::size_t count, const char* flag) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) {
      throw UsageError(std::string(flag) + ": '" + item + "' is not a number");
    }
    values.push_back(v);
  }
  if (values.size() != count) {
    throw UsageError(std::string(flag) + " expects " + std::to_string(count) +
                     " comma-separated values, got " + std::to_string(values.size()));
  }
  return values;
}

std::vector<std::string> split_names(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

/// A run.json nests the effective configuration under "config".
json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config file '" + path + "': " + e.what());
  }
  if (j.is_object() && j.contains("config")) return j.at("config");
  return j;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

bool given(const CLI::App* app, const std::string& name) {
  const CLI::Option* opt = app->get_option_no_throw(name);
  return opt != nullptr && opt->count() > 0;
}

// Options shared by several subcommands.
struct Shared {
  std::uint64_t seed = 7;
  std::string config;
  std::string out;
  std::size_t jobs = 1;
  std::size_t input_size = 64;
  std::string loss_weights;
  std::string calib;
};

void add_seed(CLI::App* app, Shared& s) { app->add_option("--seed", s.seed, "Random seed"); }
void add_config(CLI::App* app, Shared& s) {
  app->add_option("--config", s.config, "JSON configuration (or a previous run.json)")
      ->check(CLI::ExistingFile);
}
void add_out(CLI::App* app, Shared& s, bool required = true) {
  auto* o = app->add_option("--out", s.out, "Output directory");
  if (required) o->required();
}
void add_jobs(CLI::App* app, Shared& s) {
  app->add_option("--jobs", s.jobs, "Worker threads")->check(CLI::Range(1, 4096));
}
void add_input_size(CLI::App* app, Shared& s) {
  app->add_option("--input-size", s.input_size, "Depth map side in pixels")
      ->check(CLI::IsMember({64, 128, 512}));
}
void add_loss_weights(CLI::App* app, Shared& s) {
  app->add_option("--loss-weights", s.loss_weights, "lambda1,alpha1,alpha2");
}
void add_calib(CLI::App* app, Shared& s) {
  app->add_option("--calib", s.calib, "c0,c1,t1,t2,t3");
}

void apply_calib(const Shared& s, shape::FatCalib& calib) {
  if (s.calib.empty()) return;
  const auto v = parse_list(s.calib, 5, "--calib");
  calib.c0 = v[0];
  calib.c1 = v[1];
  calib.thresholds = {v[2], v[3], v[4]};
  calib.validate();
}

void apply_loss_weights(const Shared& s, model::LossWeights& w) {
  if (s.loss_weights.empty()) return;
  const auto v = parse_list(s.loss_weights, 3, "--loss-weights");
  w = {v[0], v[1], v[2]};
}

std::string table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& r : rows) {
    width.resize(std::max(width.size(), r.size()), 0);
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
  }
  std::string out;
  for (std::size_t ri = 0; ri < rows.size(); ++ri) {
    out += "|";
    for (std::size_t i = 0; i < rows[ri].size(); ++i) {
      out += " " + rows[ri][i] + std::string(width[i] - rows[ri][i].size(), ' ') + " |";
    }
    out += "\n";
    if (ri == 0) {
      out += "|";
      for (std::size_t w : width) out += std::string(w + 2, '-') + "|";
      out += "\n";
    }
  }
  return out;
}

// ---------------------------------------------------------------- phantom

struct PhantomArgs {
  Shared s;
  std::size_t n = 315;
  double sigma = 1.5;
  bool save_volumes = false;
};

int run_phantom(const CLI::App* app, const PhantomArgs& a) {
  phantom::DatasetOptions o;
  if (!a.s.config.empty()) o = train::dataset_options_from_json(load_config(a.s.config), o);
  if (given(app, "--n")) o.n = a.n;
  if (given(app, "--seed")) o.seed = a.s.seed;
  if (given(app, "--sigma")) o.sigma = a.sigma;
  if (given(app, "--input-size")) o.projection.out_size = a.s.input_size;
  if (given(app, "--jobs")) o.jobs = a.s.jobs;
  if (given(app, "--save-volumes")) o.save_volumes = a.save_volumes;
  apply_calib(a.s, o.calib);

  const fs::path out(a.s.out);
  spdlog::info("generating {} phantoms (seed {}, {} px maps)", o.n, o.seed, o.projection.out_size);
  const auto rows = phantom::generate_dataset(o, out);
  std::array<std::size_t, 4> counts{};
  for (const auto& r : rows) ++counts[static_cast<std::size_t>(r.grade)];
  write_json(out / "run.json", {{"version", kVersion},
                                {"command", "phantom"},
                                {"config", train::to_json(o)},
                                {"grade_counts", counts}});
  std::cout << "wrote " << rows.size() << " subjects to " << (out / "manifest.csv").string()
            << "\ngrade counts: " << counts[0] << "/" << counts[1] << "/" << counts[2] << "/"
            << counts[3] << "\n";
  return 0;
}

// ------------------------------------------------------------- preprocess

struct PreprocessArgs {
  Shared s;
  std::string volumes;
  double threshold_hu = -300.0;
  double depth_scale_mm = 500.0;
};

int run_preprocess(const CLI::App* app, const PreprocessArgs& a) {
  shape::ProjectionOptions proj{a.threshold_hu, a.s.input_size, a.depth_scale_mm};
  shape::FatCalib calib;
  if (!a.s.config.empty()) {
    const json cfg = load_config(a.s.config);
    const auto o = train::dataset_options_from_json(cfg);
    proj = o.projection;
    calib = o.calib;
  }
  if (given(app, "--input-size")) proj.out_size = a.s.input_size;
  if (given(app, "--threshold-hu")) proj.threshold_hu = a.threshold_hu;
  if (given(app, "--depth-scale")) proj.depth_scale_mm = a.depth_scale_mm;
  apply_calib(a.s, calib);
  calib.validate();

  std::vector<fs::path> volumes;
  for (const auto& e : fs::directory_iterator(a.volumes)) {
    if (e.is_regular_file() && e.path().extension() == ".sfv") volumes.push_back(e.path());
  }
  std::sort(volumes.begin(), volumes.end());
  if (volumes.empty()) throw Error("no .sfv volumes in " + a.volumes);

  const fs::path out(a.s.out);
  fs::create_directories(out / "maps");
  std::vector<shape::ManifestRow> rows(volumes.size());
  parallel_for(volumes.size(), a.s.jobs, [&](std::size_t i) {
    const std::string id = volumes[i].stem().string();
    const auto volume = shape::load_volume(volumes[i]);
    const auto rois = shape::read_rois(volumes[i].parent_path() / (id + "_rois.csv"));
    const auto label = shape::compute_label(volume, rois, calib);
    auto maps = shape::project_depth_maps(volume, proj);
    maps.id = id;
    shape::save_depth_maps(maps, out / "maps");
    const std::string rel = "maps/" + id + ".bsm";
    rows[i] = {id, rel, rel, label.fat_pct, label.grade, label.mean_hu};
  });
  shape::write_manifest(out / "manifest.csv", rows);
  write_json(out / "run.json",
             {{"version", kVersion},
              {"command", "preprocess"},
              {"config",
               {{"threshold_hu", proj.threshold_hu},
                {"input_size", proj.out_size},
                {"depth_scale_mm", proj.depth_scale_mm},
                {"calib", train::to_json(calib)}}},
              {"volumes", fs::absolute(a.volumes).string()}});
  std::cout << "wrote " << rows.size() << " subjects to " << (out / "manifest.csv").string() << "\n";
  return 0;
}

// ------------------------------------------------------------ train / cv

struct TrainArgs {
  Shared s;
  std::string data;
  std::string variant = "proposed";
  std::string methods;
  int epochs = 200;
  std::size_t batch = 32;
  std::size_t folds = 5;
  int fold = -1;
  double lr = 0.01;
  int decay_every = 20;
  double momentum = 0.9;
  double clip_norm = 20.0;
  double pca_threshold = 0.95;
};

train::CvConfig cv_config(const CLI::App* app, const TrainArgs& a) {
  train::CvConfig c;
  c.model.input_size = 64;
  if (!a.s.config.empty()) c = train::cv_config_from_json(load_config(a.s.config), c);
  if (given(app, "--seed")) c.train.seed = a.s.seed;
  if (given(app, "--epochs")) c.train.epochs = a.epochs;
  if (given(app, "--batch")) c.train.batch = a.batch;
  if (given(app, "--folds")) c.train.folds = a.folds;
  if (given(app, "--lr")) c.train.schedule.base_lr = a.lr;
  if (given(app, "--decay-every")) c.train.schedule.decay_every = a.decay_every;
  if (given(app, "--momentum")) c.train.schedule.momentum = a.momentum;
  if (given(app, "--clip-norm")) c.train.clip_norm = a.clip_norm;
  if (given(app, "--jobs")) c.jobs = a.s.jobs;
  if (given(app, "--input-size")) c.model.input_size = a.s.input_size;
  if (given(app, "--pca-threshold")) c.pca_threshold = a.pca_threshold;
  if (given(app, "--variants")) c.methods = split_names(a.methods);
  apply_loss_weights(a.s, c.model.loss_weights);
  apply_calib(a.s, c.calib);
  return c;
}

int run_train(const CLI::App* app, const TrainArgs& a) {
  train::CvConfig c = cv_config(app, a);
  c.model.variant = model::parse_variant(given(app, "--variant") || a.s.config.empty()
                                             ? a.variant
                                             : std::string(model::to_string(c.model.variant)));
  c.train.validate();
  c.model.validate();
  const fs::path manifest = fs::absolute(a.data);
  const auto data = train::load_dataset(manifest, c.model.input_size);

  std::vector<std::size_t> train_idx(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) train_idx[i] = i;
  std::vector<std::size_t> test_idx;
  std::string stem(model::to_string(c.model.variant));
  std::uint64_t fold_seed_index = 0;
  if (a.fold >= 0) {
    const auto folds = train::stratified_kfold(data.grades(), c.train.folds, c.train.seed,
                                               c.train.stratified);
    if (static_cast<std::size_t>(a.fold) >= folds.size()) throw UsageError("--fold out of range");
    train_idx = train::train_indices(folds, static_cast<std::size_t>(a.fold));
    test_idx = folds[static_cast<std::size_t>(a.fold)];
    stem += "_f" + std::to_string(a.fold);
    fold_seed_index = static_cast<std::uint64_t>(a.fold);
  }

  spdlog::info("training {} on {} samples for {} epochs", model::to_string(c.model.variant),
               train_idx.size(), c.train.epochs);
  auto result = train::train_model(
      c.train, c.model, data, train_idx, train::init_seed(c.train.seed, fold_seed_index),
      train::shuffle_seed(c.train.seed, fold_seed_index), [](const train::EpochRecord& r) {
        spdlog::info("epoch {:3d} lr {:.5f} loss {:.4f} (reg {:.4f}, att {:.4f})", r.epoch, r.lr,
                     r.total, r.reg, r.att);
      });

  const fs::path out(a.s.out);
  fs::create_directories(out);
  std::vector<std::string> test_ids;
  for (std::size_t i : test_idx) test_ids.push_back(data.samples[i].id);
  const json meta = {{"method", std::string(model::to_string(c.model.variant))},
                     {"fold", a.fold},
                     {"seed", c.train.seed},
                     {"data", manifest.string()},
                     {"test_ids", test_ids}};
  model::save_model(result.model, out / (stem + ".sfp"), meta);
  train::write_history_csv(out / ("history_" + stem + ".csv"), result.history);
  write_json(out / "run.json", {{"version", kVersion},
                                {"command", "train"},
                                {"config", train::to_json(c)},
                                {"data", manifest.string()},
                                {"fold", a.fold}});
  const auto& last = result.history.back();
  std::cout << "final training loss " << fmt(last.total) << "; checkpoint "
            << (out / (stem + ".sfp")).string() << "\n";
  return 0;
}

int run_cv(const CLI::App* app, const TrainArgs& a) {
  train::CvConfig c = cv_config(app, a);
  c.validate();
  const fs::path manifest = fs::absolute(a.data);
  const auto data = train::load_dataset(manifest, c.model.input_size);
  const fs::path out(a.s.out);
  spdlog::info("cross-validating {} methods on {} samples ({} folds, {} epochs)", c.methods.size(),
               data.size(), c.train.folds, c.train.epochs);
  const auto result = train::run_cv(
      c, data, out,
      [](const std::string& method, std::size_t fold, const train::MetricsReport& r) {
        spdlog::info("{} fold {}: RMSE {:.3f}, R2 {:.3f}, accuracy {:.1f}%", method, fold, r.rmse,
                     r.r2, r.grade_accuracy);
      },
      {{"data", manifest.string()}});
  train::write_cv_reports(result, c, out, {{"data", manifest.string()}});

  std::vector<std::vector<std::string>> rows{{"method", "RMSE", "R2", "accuracy %"}};
  for (const auto& m : result.methods) {
    rows.push_back({m.method, fmt(m.pooled.rmse, 3), fmt(m.pooled.r2, 3),
                    fmt(m.pooled.grade_accuracy, 1)});
  }
  std::cout << table(rows);
  return 0;
}

// ------------------------------------------------------------------ eval

struct EvalArgs {
  Shared s;
  std::string ckpt;
  std::string data;
  bool all = false;
};

fs::path data_for(const std::string& flag_value, const fs::path& ckpt) {
  if (!flag_value.empty()) return fs::absolute(flag_value);
  const json meta = model::load_model_metadata(ckpt);
  if (!meta.contains("data")) {
    throw UsageError("checkpoint metadata names no dataset; pass --data");
  }
  return meta.at("data").get<std::string>();
}

int run_eval(const CLI::App* /*app*/, const EvalArgs& a) {
  const fs::path ckpt(a.ckpt);
  const auto model = model::load_model(ckpt);
  const json meta = model::load_model_metadata(ckpt);
  shape::FatCalib calib;
  apply_calib(a.s, calib);
  const auto data = train::load_dataset(data_for(a.data, ckpt), model.config.input_size);

  std::vector<std::size_t> idx;
  if (!a.all && meta.contains("test_ids") && !meta.at("test_ids").empty()) {
    for (const auto& id : meta.at("test_ids")) idx.push_back(data.index_of(id.get<std::string>()));
  } else {
    for (std::size_t i = 0; i < data.size(); ++i) idx.push_back(i);
  }
  const auto pred = train::predict_indices(model, data, idx);
  std::vector<std::string> ids;
  std::vector<double> truth;
  std::vector<int> grades;
  for (std::size_t i : idx) {
    ids.push_back(data.samples[i].id);
    truth.push_back(data.samples[i].fat_pct);
    grades.push_back(data.samples[i].grade);
  }
  const auto report = train::evaluate(ids, pred, truth, grades, calib);
  std::cout << "samples " << idx.size() << "\nRMSE " << fmt(report.rmse) << "\nR2 "
            << fmt(report.r2) << "\ngrade accuracy " << fmt(report.grade_accuracy, 2) << "%\n";
  if (!a.s.out.empty()) {
    const fs::path out(a.s.out);
    fs::create_directories(out);
    std::ofstream csv(out / "predictions.csv");
    csv << "id,pred,true,pred_grade,true_grade\n";
    char buf[128];
    for (std::size_t i = 0; i < ids.size(); ++i) {
      std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%d,%d\n", report.pred[i], report.truth[i],
                    report.pred_grades[i], report.true_grades[i]);
      csv << ids[i] << buf;
    }
    write_json(out / "metrics.json", {{"version", kVersion},
                                      {"command", "eval"},
                                      {"checkpoint", fs::absolute(ckpt).string()},
                                      {"samples", idx.size()},
                                      {"rmse", report.rmse},
                                      {"r2", report.r2},
                                      {"grade_accuracy", report.grade_accuracy},
                                      {"calib", train::to_json(calib)}});
  }
  return 0;
}

// --------------------------------------------------------------- gradcam

struct GradcamArgs {
  Shared s;
  std::string ckpt;
  std::string data;
  std::vector<std::string> ids;
  bool dump_attention = false;
};

int run_gradcam(const CLI::App* /*app*/, const GradcamArgs& a) {
  const fs::path ckpt(a.ckpt);
  const auto model = model::load_model(ckpt);
  const auto data = train::load_dataset(data_for(a.data, ckpt), model.config.input_size);
  const fs::path out(a.s.out);
  for (const auto& id : a.ids) {
    const std::size_t idx = data.index_of(id);
    const std::size_t one[] = {idx};
    const auto batch = train::make_batch(data, one);
    const auto maps = gradcam::grad_cam_map(model, batch.frontal, batch.lateral);
    const auto files = gradcam::export_heatmap(maps.front(), data.samples[idx].frontal, out, id);
    for (const auto& f : files) std::cout << f.string() << "\n";
    if (a.dump_attention) {
      const auto att = gradcam::attention_maps(model, batch.frontal, batch.lateral);
      std::cout << gradcam::export_attention(att, 0, out, id).string() << "\n";
    }
  }
  return 0;
}

// ---------------------------------------------------------------- report

struct ReportArgs {
  std::string run;
};

int run_report(const CLI::App* /*app*/, const ReportArgs& a) {
  const fs::path dir(a.run);
  std::ifstream in(dir / "comparison.csv");
  if (!in) throw Error("no comparison.csv in " + dir.string());
  std::vector<std::vector<std::string>> rows{{"method", "RMSE", "R2", "accuracy %", "n"}};
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_names(line);
    if (f.size() != 5) throw FormatError("malformed comparison.csv line '" + line + "'");
    rows.push_back({f[0], fmt(std::stod(f[1]), 3), fmt(std::stod(f[2]), 3),
                    fmt(std::stod(f[3]), 1), f[4]});
  }
  std::string text = "# Cross-validation report\n\n" + table(rows);
  std::ifstream run_in(dir / "run.json");
  if (run_in) {
    const json run = json::parse(run_in);
    if (run.contains("folds")) {
      text += "\nFold hashes:";
      for (const auto& f : run.at("folds")) text += " " + std::to_string(f.at("hash").get<std::uint64_t>());
      text += "\n";
    }
    if (run.contains("config")) {
      const auto& t = run.at("config").at("train");
      text += "Seed " + std::to_string(t.at("seed").get<std::uint64_t>()) + ", " +
              std::to_string(t.at("epochs").get<int>()) + " epochs, batch " +
              std::to_string(t.at("batch").get<std::size_t>()) + "\n";
    }
  }
  std::ofstream out(dir / "report.md");
  out << text;
  std::cout << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("shapefat");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%H:%M:%S] %^%l%$ %v");

  CLI::App app{"Body-shape depth maps to liver-fat regression"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  bool quiet = false, verbose = false;
  app.add_flag("-q,--quiet", quiet, "Only log warnings and errors");
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  PhantomArgs pa;
  auto* phantom_cmd = app.add_subcommand("phantom", "Generate a synthetic phantom cohort");
  phantom_cmd->add_option("--n", pa.n, "Number of subjects")->check(CLI::PositiveNumber);
  phantom_cmd->add_option("--sigma", pa.sigma, "Label noise standard deviation (pp)")
      ->check(CLI::NonNegativeNumber);
  phantom_cmd->add_flag("--save-volumes", pa.save_volumes, "Also write volumes and ROI files");
  add_seed(phantom_cmd, pa.s);
  add_config(phantom_cmd, pa.s);
  add_out(phantom_cmd, pa.s);
  add_jobs(phantom_cmd, pa.s);
  add_input_size(phantom_cmd, pa.s);
  add_calib(phantom_cmd, pa.s);

  PreprocessArgs pp;
  auto* pre_cmd = app.add_subcommand("preprocess", "Volumes + ROIs to depth maps and labels");
  pre_cmd->add_option("--volumes", pp.volumes, "Directory of <id>.sfv and <id>_rois.csv")
      ->required()
      ->check(CLI::ExistingDirectory);
  pre_cmd->add_option("--threshold-hu", pp.threshold_hu, "Body threshold in HU");
  pre_cmd->add_option("--depth-scale", pp.depth_scale_mm, "Depth mapped to 1.0, in mm")
      ->check(CLI::PositiveNumber);
  add_config(pre_cmd, pp.s);
  add_out(pre_cmd, pp.s);
  add_jobs(pre_cmd, pp.s);
  add_input_size(pre_cmd, pp.s);
  add_calib(pre_cmd, pp.s);

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Train one network variant");
  TrainArgs ca;
  auto* cv_cmd = app.add_subcommand("cv", "Five-fold cross-validation over several methods");
  for (auto [cmd, args] : {std::pair{train_cmd, &ta}, std::pair{cv_cmd, &ca}}) {
    cmd->add_option("--data", args->data, "manifest.csv")->required()->check(CLI::ExistingFile);
    cmd->add_option("--epochs", args->epochs, "Training epochs")->check(CLI::PositiveNumber);
    cmd->add_option("--batch", args->batch, "Mini-batch size")->check(CLI::PositiveNumber);
    cmd->add_option("--folds", args->folds, "Number of folds")->check(CLI::PositiveNumber);
    cmd->add_option("--lr", args->lr, "Base learning rate")->check(CLI::PositiveNumber);
    cmd->add_option("--decay-every", args->decay_every, "Epochs between 0.1x decays")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--momentum", args->momentum, "SGD momentum")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--clip-norm", args->clip_norm, "Gradient norm cap (0 disables)")
        ->check(CLI::NonNegativeNumber);
    add_seed(cmd, args->s);
    add_config(cmd, args->s);
    add_out(cmd, args->s);
    add_jobs(cmd, args->s);
    add_input_size(cmd, args->s);
    add_loss_weights(cmd, args->s);
    add_calib(cmd, args->s);
  }
  train_cmd->add_option("--variant", ta.variant, "plain_backbone | baseline | proposed | mlp");
  train_cmd->add_option("--fold", ta.fold, "Hold out this fold (default: train on everything)");
  cv_cmd->add_option("--variants,--methods", ca.methods,
                     "Comma-separated methods (plain, baseline, proposed, pca_linreg, mlp)");
  cv_cmd->add_option("--pca-threshold", ca.pca_threshold, "Explained variance kept by PCA")
      ->check(CLI::Range(0.0, 1.0));

  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval_cmd->add_option("--ckpt", ea.ckpt, "Checkpoint (.sfp)")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--data", ea.data, "manifest.csv (default: the training manifest)");
  eval_cmd->add_flag("--all", ea.all, "Evaluate every sample, not just the held-out fold");
  add_out(eval_cmd, ea.s, false);
  add_calib(eval_cmd, ea.s);

  GradcamArgs ga;
  auto* cam_cmd = app.add_subcommand("gradcam", "Grad-CAM heatmaps over frontal maps");
  cam_cmd->add_option("--ckpt", ga.ckpt, "Checkpoint (.sfp)")->required()->check(CLI::ExistingFile);
  cam_cmd->add_option("--id", ga.ids, "Subject id (repeatable)")->required();
  cam_cmd->add_option("--data", ga.data, "manifest.csv (default: the training manifest)");
  cam_cmd->add_flag("--dump-attention", ga.dump_attention, "Also write raw attention maps");
  add_out(cam_cmd, ga.s);

  ReportArgs ra;
  auto* report_cmd = app.add_subcommand("report", "Summarize a cross-validation run");
  report_cmd->add_option("--run", ra.run, "Run directory")->required()->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }
  spdlog::set_level(quiet ? spdlog::level::warn : verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (*phantom_cmd) return run_phantom(phantom_cmd, pa);
    if (*pre_cmd) return run_preprocess(pre_cmd, pp);
    if (*train_cmd) return run_train(train_cmd, ta);
    if (*cv_cmd) return run_cv(cv_cmd, ca);
    if (*eval_cmd) return run_eval(eval_cmd, ea);
    if (*cam_cmd) return run_gradcam(cam_cmd, ga);
    if (*report_cmd) return run_report(report_cmd, ra);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  return 1;
}
