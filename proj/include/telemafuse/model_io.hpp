#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "telemafuse/choquet_fusion.hpp"
#include "telemafuse/dataset.hpp"
#include "telemafuse/types.hpp"

namespace tmf::app {

struct ProbeRecord {
    std::vector<double> values; // one feature row, catalog order
    BinaryLabel label = BinaryLabel::class0;
    double score = 0.5;
    double c0 = 0.0;
    double c1 = 0.0;
};

struct ModelArtifact {
    int format_version = 1;
    std::string config_text;          // the training PipelineConfig, serialized
    std::vector<std::string> catalog; // selected features the bagger drew from
    fusion::FusionEnsemble ensemble;
    std::uint64_t seed = 0;
    std::string dataset_digest;
    ProbeRecord probe;
};

// JSON document; every floating-point number is stored as a shortest
// round-trip decimal string so save -> load is exact. load_model re-runs the
// fused prediction on the stored probe row and refuses the artifact if any
// of label/score/C0/C1 differ bit-for-bit.
void save_model(const ModelArtifact& artifact, const std::string& path);
ModelArtifact load_model(const std::string& path);

std::string dataset_digest(const Dataset& dataset);

// Fused prediction on a row given in artifact catalog order.
fusion::FuseResult predict_probe(const ModelArtifact& artifact, const std::vector<double>& row);

} // namespace tmf::app
