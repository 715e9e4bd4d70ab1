#include "subthz/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace subthz {

namespace {

size_t los_index(std::span<const MultipathTap> taps, LosRule rule) {
    size_t best = 0;
    for (size_t i = 1; i < taps.size(); ++i) {
        if (rule == LosRule::strongest) {
            if (taps[i].power_db > taps[best].power_db) best = i;
        } else {
            if (taps[i].delay_ns < taps[best].delay_ns) best = i;
        }
    }
    return best;
}

struct Spread {
    double rms;
    double mean;
};

Spread weighted_spread(std::span<const MultipathTap> taps, const std::vector<double>& value,
                       Weighting weighting) {
    double sum_p = 0.0, sum_vp = 0.0;
    for (size_t i = 0; i < taps.size(); ++i) {
        const double p = taps[i].power_lin();
        sum_p += p;
        sum_vp += value[i] * p;
    }
    const double mean = sum_vp / sum_p;

    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < taps.size(); ++i) {
        const double p = taps[i].power_lin();
        const double w = weighting == Weighting::squared_power ? p * p : p;
        const double d = value[i] - mean;
        num += d * d * w;
        den += w;
    }
    return {std::sqrt(num / den), mean};
}

} // namespace

double k_factor(std::span<const MultipathTap> taps, LosRule rule) {
    if (taps.empty()) throw std::invalid_argument("k_factor: no taps");
    if (taps.size() == 1) return std::numeric_limits<double>::infinity();

    const size_t los = los_index(taps, rule);
    double scatter = 0.0;
    for (size_t i = 0; i < taps.size(); ++i)
        if (i != los) scatter += taps[i].power_lin();
    return 10.0 * std::log10(taps[los].power_lin() / scatter);
}

DelaySpread rms_delay_spread(std::span<const MultipathTap> taps, Weighting weighting) {
    if (taps.empty()) throw std::invalid_argument("rms_delay_spread: no taps");
    std::vector<double> delays(taps.size());
    for (size_t i = 0; i < taps.size(); ++i) delays[i] = taps[i].delay_ns;
    const auto s = weighted_spread(taps, delays, weighting);
    return {s.rms, s.mean};
}

AngularSpread rms_angular_spread(std::span<const MultipathTap> taps, Weighting weighting,
                                 AngleMode mode) {
    if (taps.empty()) throw std::invalid_argument("rms_angular_spread: no taps");

    if (mode == AngleMode::linear) {
        std::vector<double> angles(taps.size());
        for (size_t i = 0; i < taps.size(); ++i) angles[i] = taps[i].aoa_deg;
        const auto s = weighted_spread(taps, angles, weighting);
        return {s.rms, s.mean};
    }

    // Circular variant: power-weighted vector mean, deviations wrapped to
    // [-180, 180).
    double sx = 0.0, sy = 0.0;
    for (const auto& t : taps) {
        const double a = t.aoa_deg * std::numbers::pi / 180.0;
        const double p = t.power_lin();
        sx += p * std::cos(a);
        sy += p * std::sin(a);
    }
    double mean = std::atan2(sy, sx) * 180.0 / std::numbers::pi;
    if (mean < 0.0) mean += 360.0;

    double num = 0.0, den = 0.0;
    for (const auto& t : taps) {
        double d = std::fmod(t.aoa_deg - mean + 540.0, 360.0) - 180.0;
        const double p = t.power_lin();
        const double w = weighting == Weighting::squared_power ? p * p : p;
        num += d * d * w;
        den += w;
    }
    return {std::sqrt(num / den), mean};
}

double path_loss_db(std::span<const MultipathTap> taps, double tx_power_dbm,
                    double tx_gain_dbi, double rx_gain_dbi) {
    if (taps.empty()) throw std::invalid_argument("path_loss: no taps");
    double rx_gain_total = 0.0;
    for (const auto& t : taps) rx_gain_total += t.power_lin();
    const double rx_power_dbm = tx_power_dbm + 10.0 * std::log10(rx_gain_total);
    return tx_power_dbm + tx_gain_dbi + rx_gain_dbi - rx_power_dbm;
}

double path_loss_from_cir(const ChannelImpulseResponse& cir, double tx_power_dbm,
                          double tx_gain_dbi, double rx_gain_dbi) {
    return path_loss_db(cir.taps, tx_power_dbm, tx_gain_dbi, rx_gain_dbi);
}

} // namespace subthz
