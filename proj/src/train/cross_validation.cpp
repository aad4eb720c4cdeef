// SPDX-License-Identifier: Apache-2.0
#include "shapefat/train/cross_validation.hpp"

#include <cstdio>
#include <fstream>
#include <mutex>

#include <Eigen/Core>
#include <spdlog/spdlog.h>

#include "shapefat/error.hpp"
#include "shapefat/model/serialize.hpp"
#include "shapefat/parallel.hpp"
#include "shapefat/random.hpp"
#include "shapefat/reference/linreg.hpp"
#include "shapefat/reference/pca.hpp"
#include "shapefat/shape/resample.hpp"
#include "shapefat/train/config_json.hpp"
#include "shapefat/train/folds.hpp"
#include "shapefat/version.hpp"

namespace shapefat::train {
namespace {

using nlohmann::json;

std::vector<std::string> ids_of(const Dataset& data, std::span<const std::size_t> idx) {
  std::vector<std::string> ids;
  for (std::size_t i : idx) ids.push_back(data.samples[i].id);
  return ids;
}

MetricsReport report_for(const Dataset& data, std::span<const std::size_t> test,
                         std::span<const double> pred, const shape::FatCalib& calib, int fold) {
  std::vector<double> truth;
  std::vector<int> grades;
  for (std::size_t i : test) {
    truth.push_back(data.samples[i].fat_pct);
    grades.push_back(data.samples[i].grade);
  }
  return evaluate(ids_of(data, test), pred, truth, grades, calib, fold);
}

Eigen::MatrixXd pca_features(const Dataset& data, std::span<const std::size_t> idx,
                             std::size_t side) {
  const std::size_t px = side * side;
  Eigen::MatrixXd X(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(2 * px));
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const Sample& s = data.samples[idx[r]];
    const auto f = data.side == side ? s.frontal
                                     : shape::resample_bilinear(s.frontal, data.side, data.side, side, side);
    const auto l = data.side == side ? s.lateral
                                     : shape::resample_bilinear(s.lateral, data.side, data.side, side, side);
    for (std::size_t p = 0; p < px; ++p) {
      X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(p)) = f[p];
      X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(px + p)) = l[p];
    }
  }
  return X;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string canonical_method(const std::string& name) {
  if (name == kPcaMethod || name == "pca") return kPcaMethod;
  return std::string(model::to_string(model::parse_variant(name)));
}

void CvConfig::validate() const {
  train.validate();
  if (methods.empty()) throw ConfigError("cv: no methods requested");
  std::vector<std::string> seen;
  for (const auto& m : methods) {
    const std::string c = canonical_method(m);
    if (std::find(seen.begin(), seen.end(), c) != seen.end()) {
      throw ConfigError("cv: method '" + c + "' listed twice");
    }
    seen.push_back(c);
    if (c != kPcaMethod) {
      model::ModelConfig mc = model;
      mc.variant = model::parse_variant(c);
      mc.validate();
    }
  }
  if (!(pca_threshold > 0.0 && pca_threshold <= 1.0)) {
    throw ConfigError("cv: PCA variance threshold must lie in (0, 1]");
  }
  if (pca_side == 0) throw ConfigError("cv: PCA map side must be positive");
  if (jobs == 0) throw ConfigError("cv: jobs must be >= 1");
  calib.validate();
}

const MethodResult& CvResult::method(const std::string& name) const {
  const std::string c = canonical_method(name);
  for (const auto& m : methods) {
    if (m.method == c) return m;
  }
  throw Error("no cross-validation result for method '" + c + "'");
}

std::uint64_t init_seed(std::uint64_t seed, std::size_t fold) {
  return derive_seed(seed, {0x494e4954ull, fold});
}

std::uint64_t shuffle_seed(std::uint64_t seed, std::size_t fold) {
  return derive_seed(seed, {0x53485546ull, fold});
}

std::pair<std::vector<double>, std::size_t> pca_linreg_predict(
    const Dataset& data, std::span<const std::size_t> train_idx,
    std::span<const std::size_t> test_idx, double var_threshold, std::size_t side) {
  const Eigen::MatrixXd Xtr = pca_features(data, train_idx, side);
  const Eigen::MatrixXd Xte = pca_features(data, test_idx, side);
  Eigen::VectorXd y(static_cast<Eigen::Index>(train_idx.size()));
  for (std::size_t i = 0; i < train_idx.size(); ++i) {
    y(static_cast<Eigen::Index>(i)) = data.samples[train_idx[i]].fat_pct;
  }
  const auto pca = reference::pca_fit(Xtr, var_threshold);
  const Eigen::VectorXd w = reference::linreg_fit(reference::pca_project(pca, Xtr), y);
  const Eigen::VectorXd pred = reference::linreg_predict(w, reference::pca_project(pca, Xte));
  return {std::vector<double>(pred.data(), pred.data() + pred.size()), pca.count()};
}

CvResult run_cv(const CvConfig& config, const Dataset& data, const std::filesystem::path& out_dir,
                const FoldCallback& on_fold, const json& checkpoint_meta) {
  config.validate();
  const std::size_t k = config.train.folds;
  if (data.size() < k) {
    throw ConfigError("cv: " + std::to_string(data.size()) + " samples for " + std::to_string(k) +
                      " folds");
  }
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);

  CvResult result;
  const auto grades = data.grades();
  result.folds = stratified_kfold(grades, k, config.train.seed, config.train.stratified);
  for (const auto& f : result.folds) result.fold_hashes.push_back(fold_hash(f));

  const std::size_t m = config.methods.size();
  result.methods.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    auto& r = result.methods[i];
    r.method = canonical_method(config.methods[i]);
    r.folds.resize(k);
    r.histories.resize(k);
    r.pca_components.resize(r.method == kPcaMethod ? k : 0);
  }

  std::mutex callback_mutex;
  parallel_for(m * k, config.jobs, [&](std::size_t task) {
    const std::size_t mi = task / k, f = task % k;
    MethodResult& r = result.methods[mi];
    const auto& test = result.folds[f];
    const auto train = train_indices(result.folds, f);
    std::vector<double> pred;
    if (r.method == kPcaMethod) {
      auto [p, comps] = pca_linreg_predict(data, train, test, config.pca_threshold, config.pca_side);
      pred = std::move(p);
      r.pca_components[f] = comps;
    } else {
      model::ModelConfig mc = config.model;
      mc.variant = model::parse_variant(r.method);
      mc.input_size = data.side;
      auto trained = train_model(config.train, mc, data, train, init_seed(config.train.seed, f),
                                 shuffle_seed(config.train.seed, f));
      pred = predict_indices(trained.model, data, test);
      r.histories[f] = std::move(trained.history);
      if (!out_dir.empty()) {
        json meta = {{"method", r.method},
                           {"fold", f},
                           {"seed", config.train.seed},
                           {"fold_hash", result.fold_hashes[f]},
                           {"test_ids", ids_of(data, test)}};
        for (const auto& [key, value] : checkpoint_meta.items()) meta[key] = value;
        model::save_model(trained.model, out_dir / (r.method + "_f" + std::to_string(f) + ".sfp"),
                          meta);
      }
    }
    r.folds[f] = report_for(data, test, pred, config.calib, static_cast<int>(f));
    if (on_fold) {
      std::lock_guard lock(callback_mutex);
      on_fold(r.method, f, r.folds[f]);
    }
  });

  for (auto& r : result.methods) r.pooled = pool(r.folds, config.calib);
  return result;
}

void write_cv_reports(const CvResult& result, const CvConfig& config,
                      const std::filesystem::path& out_dir, const json& extra) {
  std::filesystem::create_directories(out_dir);

  std::string comparison = "method,rmse,r2,grade_accuracy,n\n";
  for (const auto& r : result.methods) {
    comparison += r.method + "," + fmt_double(r.pooled.rmse) + "," + fmt_double(r.pooled.r2) + "," +
                  fmt_double(r.pooled.grade_accuracy) + "," + std::to_string(r.pooled.pred.size()) +
                  "\n";
  }
  write_text(out_dir / "comparison.csv", comparison);

  for (const auto& r : result.methods) {
    std::string scatter = "pred,true,grade\n";
    for (std::size_t i = 0; i < r.pooled.pred.size(); ++i) {
      scatter += fmt_double(r.pooled.pred[i]) + "," + fmt_double(r.pooled.truth[i]) + "," +
                 std::to_string(r.pooled.true_grades[i]) + "\n";
    }
    write_text(out_dir / ("scatter_" + r.method + ".csv"), scatter);

    std::string confusion = "true\\pred,0,1,2,3\n";
    for (std::size_t t = 0; t < 4; ++t) {
      confusion += std::to_string(t);
      for (std::size_t p = 0; p < 4; ++p) confusion += "," + std::to_string(r.pooled.confusion.counts[t][p]);
      confusion += "\n";
    }
    write_text(out_dir / ("confusion_" + r.method + ".csv"), confusion);

    for (std::size_t f = 0; f < r.histories.size(); ++f) {
      if (!r.histories[f].empty()) {
        write_history_csv(out_dir / ("history_" + r.method + "_" + std::to_string(f) + ".csv"),
                          r.histories[f]);
      }
    }
  }

  json folds = json::array();
  for (std::size_t f = 0; f < result.folds.size(); ++f) {
    folds.push_back({{"fold", f},
                     {"size", result.folds[f].size()},
                     {"hash", result.fold_hashes[f]},
                     {"init_seed", init_seed(config.train.seed, f)},
                     {"shuffle_seed", shuffle_seed(config.train.seed, f)}});
  }
  json metrics = json::object();
  for (const auto& r : result.methods) {
    json entry = {{"rmse", r.pooled.rmse},
                  {"r2", r.pooled.r2},
                  {"grade_accuracy", r.pooled.grade_accuracy},
                  {"aggregation", "pooled"}};
    if (!r.pca_components.empty()) entry["pca_components"] = r.pca_components;
    metrics[r.method] = entry;
  }
  json run = {{"version", kVersion},
              {"command", "cv"},
              {"config", to_json(config)},
              {"folds", folds},
              {"metrics", metrics}};
  for (const auto& [key, value] : extra.items()) run[key] = value;
  write_text(out_dir / "run.json", run.dump(2) + "\n");
}

}  // namespace shapefat::train
