// Channel metrics computed from multipath tap lists: path loss, Rician
// K-factor, RMS delay spread and RMS angular spread.
//
// The delay/angle spread formulas use squared-power weights in the spread
// and plain power weights in the mean. That mixed weighting is kept as
// the default (Weighting::squared_power); the conventional all-p variant
// is available behind a flag.
#pragma once

#include <span>
#include <string>
#include <vector>

#include "subthz/sounding.hpp"

namespace subthz {

enum class Weighting {
    squared_power,  // spread weights p_i^2 (default)
    power,          // conventional p_i weights
};

enum class AngleMode {
    linear,    // angles used as-is in [0, 360); wrap-around inflates the spread
    circular,  // deviations wrapped to [-180, 180) around the circular mean
};

enum class LosRule {
    strongest,  // the highest-power tap is the LoS reference
    earliest,   // the earliest tap is the LoS reference
};

struct MetricRecord {
    std::string scenario_id;
    double distance_m = 0.0;
    double rx_gain_dbi = 0.0;
    bool los = true;
    double path_loss_db = 0.0;
    double k_factor_db = 0.0;
    double rms_ds_ns = 0.0;
    double mean_delay_ns = 0.0;
    double rms_as_deg = 0.0;
    double mean_aoa_deg = 0.0;
};

struct DelaySpread {
    double rms_ns;
    double mean_ns;
};

struct AngularSpread {
    double rms_deg;
    double mean_deg;
};

// Ratio of LoS power to total scatter power, in dB. A single tap yields
// +infinity (no scatter), which is a sentinel and not an overflow.
double k_factor(std::span<const MultipathTap> taps, LosRule rule = LosRule::strongest);

DelaySpread rms_delay_spread(std::span<const MultipathTap> taps,
                             Weighting weighting = Weighting::squared_power);

AngularSpread rms_angular_spread(std::span<const MultipathTap> taps,
                                 Weighting weighting = Weighting::squared_power,
                                 AngleMode mode = AngleMode::linear);

// Link-budget path loss with antenna gains removed as scalars. Received
// power is the sum of all tap powers (taps are end-to-end channel gains).
double path_loss_db(std::span<const MultipathTap> taps, double tx_power_dbm,
                    double tx_gain_dbi, double rx_gain_dbi);
double path_loss_from_cir(const ChannelImpulseResponse& cir, double tx_power_dbm,
                          double tx_gain_dbi, double rx_gain_dbi);

} // namespace subthz
