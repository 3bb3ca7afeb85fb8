#pragma once

#include <string>
#include <vector>

#include "telemafuse/config.hpp"
#include "telemafuse/dataset.hpp"
#include "telemafuse/evaluation.hpp"
#include "telemafuse/types.hpp"

namespace tmf::app {

void cmd_synth(const PipelineConfig& cfg, const std::string& out_path);

// parse -> validate -> downsample -> window -> statistics, full catalog.
Dataset extract_features(const PipelineConfig& cfg, const std::vector<TripStream>& trips);

// Writes the feature CSV; when selection_out is non-empty (or the config is
// in global-selection mode) also computes and writes the selection report.
void cmd_extract(const PipelineConfig& cfg, const std::string& in_path,
                 const std::string& out_path, const std::string& selection_out = "");

void cmd_train(const PipelineConfig& cfg, const std::string& features_path,
               const std::string& model_path);

void cmd_predict(const std::string& model_path, const std::string& features_path,
                 const std::string& out_path);

// Accepts either a trip CSV or a feature CSV (sniffed from the header);
// writes <report_prefix>.csv and <report_prefix>.txt.
eval::MetricsReport cmd_evaluate(const PipelineConfig& cfg, const std::string& in_path,
                                 const std::string& report_prefix);

} // namespace tmf::app
