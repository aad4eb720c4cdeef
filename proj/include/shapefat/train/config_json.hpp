// SPDX-License-Identifier: Apache-2.0
#pragma once

// JSON views of the run configuration. Readers start from a base value and
// override only the keys that are present.

#include <json.hpp>

#include "shapefat/phantom/phantom.hpp"
#include "shapefat/shape/label.hpp"
#include "shapefat/train/cross_validation.hpp"
#include "shapefat/train/trainer.hpp"

namespace shapefat::train {

nlohmann::json to_json(const ad::Schedule& s);
nlohmann::json to_json(const TrainConfig& c);
nlohmann::json to_json(const shape::FatCalib& c);
nlohmann::json to_json(const CvConfig& c);
nlohmann::json to_json(const phantom::DatasetOptions& o);

ad::Schedule schedule_from_json(const nlohmann::json& j, ad::Schedule base = {});
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});
shape::FatCalib calib_from_json(const nlohmann::json& j, shape::FatCalib base = {});
CvConfig cv_config_from_json(const nlohmann::json& j, CvConfig base = {});
phantom::DatasetOptions dataset_options_from_json(const nlohmann::json& j,
                                                  phantom::DatasetOptions base = {});

}  // namespace shapefat::train
