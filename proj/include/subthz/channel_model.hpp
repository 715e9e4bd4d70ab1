// Gain-parameterized channel models for the 130-150 GHz indoor band and a
// stochastic tap synthesizer whose ensemble statistics close against them.
//
// The closed forms (path-loss exponent, Rician K-factor and RMS delay
// spread versus receive antenna gain) are calibrated over 15-38 dBi.
// Evaluation outside that range is permitted but physically meaningless
// for small gains, where the fast-decaying term of the PLE curve blows up.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "subthz/fitting.hpp"
#include "subthz/sounding.hpp"

namespace subthz {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

struct Scenario {
    std::string id = "conference-room";
    double carrier_frequency_hz = 140e9;
    double tx_power_dbm = 13.0;
    double tx_gain_dbi = 15.0;
    double rx_gain_dbi = 15.0;
    double rx_beamwidth_deg = 30.0;
    double distance_m = 3.0;
    bool los = true;
    double room_width_m = 10.0;
    double room_depth_m = 10.0;
    double tx_height_m = 2.0;
    double rx_height_m = 1.0;
    // Per-scenario K-factor override in dB; NaN = draw from the model,
    // +inf = force a single-path realization.
    double k_override_db = std::numeric_limits<double>::quiet_NaN();

    void validate() const;  // throws std::invalid_argument
};

// Friis free-space path loss 20*log10(4*pi*d0/lambda) at distance d0.
double friis_pl0_db(double frequency_hz, double d0_m = 1.0);

struct LogDistanceModel {
    double pl0_db;
    double n;
};

// PL0 + 10*n*log10(d/1m) + shadowing.
double log_distance_pl_db(double distance_m, const LogDistanceModel& model,
                          double shadowing_db = 0.0);
double log_distance_pl_db(double distance_m, const LogDistanceFit& fit,
                          double shadowing_db = 0.0);

// Path loss exponent vs receive gain: 1.811*e^(0.001018*G) - 30.15*e^(-0.2437*G).
double ple_of_gain(double gain_dbi);

// Rician K-factor in dB vs gain: 0.03576*G^2 - 1.246*G + 32.1.
double kfactor_of_gain(double gain_dbi);

// RMS delay spread in ns vs gain, LoS and NLoS branches:
//   LoS:  0.00118*G^2 - 0.08012*G + 1.583
//   NLoS: 0.001444*G^2 - 0.1964*G + 6.101
double ds_of_gain(double gain_dbi, bool los);

// True when the gain lies inside the measured calibration range [15, 38].
bool gain_in_calibrated_range(double gain_dbi);

// Half-power beamwidth of the four measured antennas (15/21/25/38 dBi ->
// 30/11/10/2 degrees); 0 for gains outside the table.
double beamwidth_for_gain(double gain_dbi);

struct ChannelRealization {
    std::vector<MultipathTap> taps;  // sorted by delay; the direct path first
    Scenario scenario;
    uint64_t seed = 0;
    bool los_only = false;  // K target infeasible: single direct path
};

struct SynthesisConfig {
    // The gain curves do not pin these spreads; the defaults are
    // placeholders meant to be overridden from fitted measurement data.
    double shadowing_sigma_db = 2.0;
    double k_sigma_db = 3.0;
    double scatter_count_mean = 8.0;     // zero-truncated Poisson
    double k_cap_db = 60.0;              // beyond this the realization is direct-path only
    double as_target_mean_deg = 1.0;     // linear-formula angular-spread target
    double as_target_std_deg = 0.5;
    double max_scatter_excess_ns = 0.0;  // 0 = unbounded exponential excess delays
    int ds_calibration_draws = 20000;
    uint64_t ds_calibration_seed = 0x5eedca1;
};

class ChannelSynthesizer;

// Draws one channel realization: a direct path at the geometric delay with
// log-distance power, exponential-profile scatter delays whose decay is
// tuned so the ensemble-mean squared-power-weighted RMS DS matches
// ds_of_gain, total scatter power set by a normal K-factor draw, and
// angles scaled to a normal angular-spread target. Deterministic per seed.
ChannelRealization synthesize_channel(const Scenario& scenario, uint64_t seed,
                                      const SynthesisConfig& cfg = {});

class ChannelSynthesizer {
public:
    explicit ChannelSynthesizer(SynthesisConfig cfg = {});

    ChannelRealization realize(const Scenario& scenario, uint64_t seed) const;

    // Decay constant of the exponential delay profile for this gain/LoS
    // pair, found by Monte Carlo calibration against ds_of_gain (cached).
    double ds_decay_ns(double gain_dbi, bool los) const;

    const SynthesisConfig& config() const { return cfg_; }

private:
    SynthesisConfig cfg_;
    mutable std::mutex cache_mutex_;
    mutable std::map<std::pair<double, bool>, double> decay_cache_;
};

} // namespace subthz
