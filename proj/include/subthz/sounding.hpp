// Spread-spectrum sliding-correlator channel sounder: frame generation,
// synthetic multipath channel, impulse-response extraction and peak
// detection.
//
// Frame layout: an m-sequence header for frame sync followed by a shorter
// m-sequence body repeated body_repetitions times. The body repetitions
// are each correlated against a local replica and averaged, which lowers
// the correlation noise floor by ~10*log10(R).
#pragma once

#include <complex>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "subthz/dsp.hpp"

namespace subthz {

enum class AveragingMode {
    coherent,   // complex average of per-repetition correlations
    magnitude,  // average of correlation magnitudes
};

struct SoundingConfig {
    int header_degree = 13;      // 8191-chip header
    int body_degree = 12;        // 4095-chip body
    int body_repetitions = 16;
    double chip_rate_hz = 1.0e10;
    double rrc_rolloff = 1.0;    // occupied bandwidth = (1 + rolloff) * chip rate
    int samples_per_chip = 4;
    int rrc_span_chips = 10;
    uint32_t header_polynomial = 0;  // 0 = table default for the degree
    uint32_t body_polynomial = 0;

    double max_excess_delay_ns = 200.0;  // correlation lag window, forward
    double pre_window_ns = 25.0;         // lag window before the sync reference
    double sync_threshold_db = 20.0;     // header peak over median, minimum
    double noise_margin_db = 6.0;        // taps must clear noise floor + margin
    AveragingMode averaging = AveragingMode::coherent;

    int header_chips() const { return (1 << header_degree) - 1; }
    int body_chips() const { return (1 << body_degree) - 1; }
    int frame_chips() const { return header_chips() + body_repetitions * body_chips(); }
    double sample_rate_hz() const { return chip_rate_hz * samples_per_chip; }
    double chip_ns() const { return 1e9 / chip_rate_hz; }
    double time_step_ns() const { return 1e9 / sample_rate_hz(); }

    void validate() const;  // throws std::invalid_argument
};

struct MultipathTap {
    double delay_ns = 0.0;   // stored in ns (the reporting unit)
    double power_db = 0.0;   // linear power is 10^(power_db/10)
    double aoa_deg = 0.0;    // azimuth angle of arrival, [0, 360)

    double delay_s() const { return delay_ns * 1e-9; }
    double power_lin() const { return std::pow(10.0, power_db / 10.0); }

    static MultipathTap from_linear(double delay_ns, double power_lin, double aoa_deg = 0.0) {
        return {delay_ns, 10.0 * std::log10(power_lin), aoa_deg};
    }
};

struct ChannelImpulseResponse {
    std::vector<cplx> profile;      // averaged correlation over the lag window
    double time_step_ns = 0.0;
    int lag0_index = 0;             // profile index of the sync reference lag
    double noise_floor_db = -std::numeric_limits<double>::infinity();
    int samples_per_chip = 4;
    std::vector<double> pulse_acf;  // unit-peak chip-pulse autocorrelation, centered
    std::vector<MultipathTap> taps; // populated by detect_peaks

    double lag_ns(size_t index) const {
        return (double(index) - double(lag0_index)) * time_step_ns;
    }
    double peak_power_db() const;
};

// Header sync failed: no correlation peak cleared the sync threshold, or
// the located frame is truncated.
struct FrameSyncError : std::runtime_error {
    explicit FrameSyncError(const std::string& what) : std::runtime_error(what) {}
};

// RRC-shaped BPSK baseband frame [header | body x repetitions] with unit
// average chip energy. Length = frame_chips() * samples_per_chip.
std::vector<cplx> build_tx_frame(const SoundingConfig& cfg);

// Sparse multipath channel plus circularly-symmetric white Gaussian noise
// scaled to snr_db relative to the strongest tap. Tap delays are placed on
// the nearest sample. snr_db = +inf disables noise. Deterministic per seed.
std::vector<cplx> apply_multipath(std::span<const cplx> frame,
                                  std::span<const MultipathTap> taps,
                                  const SoundingConfig& cfg, double snr_db,
                                  uint64_t rng_seed);

// Hardware calibration path: a user-supplied frequency response can be
// imposed on a sample stream and later equalized away. The response is a
// list of complex gains sampled uniformly over the FFT bin axis (DC
// first, wrapping at the sample rate) and interpolated linearly.
std::vector<cplx> apply_frequency_response(std::span<const cplx> samples,
                                           std::span<const cplx> response);
std::vector<cplx> equalize_frequency_response(std::span<const cplx> samples,
                                              std::span<const cplx> response);

// Caches the local replica waveforms and their transforms so repeated
// extractions with one config don't rebuild them.
class SlidingCorrelator {
public:
    explicit SlidingCorrelator(const SoundingConfig& cfg);

    ChannelImpulseResponse extract(std::span<const cplx> rx) const;

    const SoundingConfig& config() const { return cfg_; }

private:
    SoundingConfig cfg_;
    std::vector<cplx> header_ref_;
    std::vector<cplx> body_ref_;
    std::vector<double> pulse_acf_;
};

// One-shot convenience wrapper around SlidingCorrelator.
ChannelImpulseResponse extract_cir(std::span<const cplx> rx, const SoundingConfig& cfg);

// Iterative strongest-first peak extraction with one-chip exclusion and
// serial cancellation of each detected path's pulse shape. Keeps every
// local maximum above max(global peak - dynamic_range_db, noise floor +
// margin). Delays are reported relative to the strongest tap, so a weaker
// precursor path gets a negative delay.
std::vector<MultipathTap> detect_peaks(const ChannelImpulseResponse& cir,
                                       double dynamic_range_db,
                                       double noise_margin_db = 6.0,
                                       int max_taps = 64);

// Full loopback: frame -> channel -> correlator -> peaks. Returns the CIR
// with taps filled in.
ChannelImpulseResponse sound_channel(std::span<const MultipathTap> taps,
                                     const SoundingConfig& cfg, double snr_db,
                                     uint64_t rng_seed, double dynamic_range_db = 30.0);

} // namespace subthz
