// Campaign orchestration: synthesize ensembles over a gain x distance
// grid, compute metrics, fit distributions and gain curves, and write the
// full report tree (CIR JSON-lines, metric CSV, CDF tables, fit reports,
// summary). Outputs are a pure function of (config, seed).
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "subthz/channel_model.hpp"
#include "subthz/fitting.hpp"

namespace subthz {

struct CampaignConfig {
    Scenario base;  // gain and distance are overridden per grid point
    std::vector<double> gains_dbi = {15.0, 21.0, 25.0, 38.0};
    std::vector<double> distances_m = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0};
    int realizations = 100;
    uint64_t seed = 1;
    std::filesystem::path output_dir;
    // Azimuth quantization emulating rotation in beamwidth steps:
    // negative = use the per-gain beamwidth table, 0 = no quantization.
    double rotation_step_deg = -1.0;
    SynthesisConfig synthesis;
    Pl0Mode pl0_mode = Pl0Mode::fixed;
    int threads = 0;  // 0 = hardware concurrency

    void validate() const;  // throws std::invalid_argument
};

struct CampaignReport {
    size_t cir_records = 0;
    size_t log_distance_fits = 0;
    size_t gain_curve_fits = 0;
    std::vector<std::filesystem::path> files;
};

CampaignReport run_campaign(const CampaignConfig& cfg);

// Full campaign configuration from a key=value map (scenario keys plus
// campaign keys: gains, distances, realizations, seed, output_dir,
// rotation_step_deg, pl0_mode and the synthesis spreads). Unknown keys
// throw.
CampaignConfig campaign_config_from_kv(const std::map<std::string, std::string>& kv);

} // namespace subthz
