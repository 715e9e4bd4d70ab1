// Dataset persistence: JSON-lines CIR records, metric CSV, CDF tables,
// fit reports, binary profile dumps and key=value config files.
//
// JSON objects are emitted with alphabetically ordered keys and the
// library's shortest-round-trip double formatting, so write -> ingest ->
// write reproduces files byte for byte.
#pragma once

#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "subthz/channel_model.hpp"
#include "subthz/fitting.hpp"
#include "subthz/metrics.hpp"
#include "subthz/sounding.hpp"

namespace subthz {

struct CirRecord {
    std::string scenario_id;
    double distance_m = 0.0;
    double rx_gain_dbi = 0.0;
    double rotation_deg = 0.0;
    double time_step_ns = 0.025;
    std::vector<MultipathTap> taps;
    // -inf means "never sounded" (pure tap-list record); serialized as null.
    double noise_floor_db = -std::numeric_limits<double>::infinity();
};

std::string cir_record_to_json_line(const CirRecord& record);
void write_cir_jsonl(const std::filesystem::path& path, std::span<const CirRecord> records);

struct IngestIssue {
    size_t line_number;  // 1-based
    std::string message;
};

struct IngestResult {
    std::vector<CirRecord> records;
    std::vector<IngestIssue> issues;
};

// Parses a JSON-lines CIR dataset, revalidating every record. In strict
// mode (partial = false) any malformed line raises std::runtime_error
// listing the offending line numbers; in partial mode bad lines are
// collected in `issues` and the valid records are returned.
IngestResult ingest_cir_dataset(const std::filesystem::path& path, bool partial = false);

// Fixed-header metric CSV:
// scenario_id,distance_m,rx_gain_dbi,los,path_loss_db,k_factor_db,
// rms_ds_ns,mean_delay_ns,rms_as_deg,mean_aoa_deg
// dB/degree columns use 2 decimals, ns columns 3 decimals, LF endings.
void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricRecord> records);
std::vector<MetricRecord> read_metrics_csv(const std::filesystem::path& path);

// Two-column CDF table (value,probability).
void write_cdf_csv(const std::filesystem::path& path,
                   std::span<const std::pair<double, double>> cdf);

// Fit reports as JSON ({form, coefficients, rmse, n_points} for gain
// curves, analogous objects for the other fits).
std::string gain_curve_fit_to_json(const GainCurveFit& fit);
std::string log_distance_fit_to_json(const LogDistanceFit& fit, size_t n_points);
std::string distribution_fit_to_json(const DistributionFit& fit, size_t n_points);

// Raw correlation profile as little-endian complex64 plus a JSON sidecar
// (<base>.bin and <base>.json).
void write_profile_bin(const std::filesystem::path& base_path, const ChannelImpulseResponse& cir,
                       const std::string& scenario_id);
ChannelImpulseResponse read_profile_bin(const std::filesystem::path& base_path);

// key = value configuration files; '#' starts a comment, blank lines are
// ignored, keys are case-sensitive.
std::map<std::string, std::string> parse_kv_file(const std::filesystem::path& path);
std::map<std::string, std::string> parse_kv_text(const std::string& text);

// Scenario from a key=value map; unknown keys throw. Missing keys keep the
// conference-room defaults.
Scenario scenario_from_kv(const std::map<std::string, std::string>& kv);

double kv_get_double(const std::map<std::string, std::string>& kv, const std::string& key,
                     double fallback);
bool kv_get_bool(const std::map<std::string, std::string>& kv, const std::string& key,
                 bool fallback);
std::vector<double> kv_get_list(const std::map<std::string, std::string>& kv,
                                const std::string& key, std::vector<double> fallback);

} // namespace subthz
