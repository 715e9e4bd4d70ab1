#include "subthz/sounding.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "subthz/mseq.hpp"
#include "subthz/rng.hpp"

namespace subthz {

namespace {

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    return v[mid];
}

// Median-based noise power estimate; taps are sparse so the median sample
// of |profile|^2 is noise. For exponential noise power the median is
// sigma^2 * ln 2.
double noise_floor_db_from_profile(const std::vector<cplx>& profile) {
    std::vector<double> p(profile.size());
    for (size_t i = 0; i < profile.size(); ++i) p[i] = std::norm(profile[i]);
    const double med = median_of(std::move(p));
    if (med <= 0.0) return -std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(med / std::numbers::ln2);
}

} // namespace

void SoundingConfig::validate() const {
    if (header_degree < 2 || header_degree > 16 || body_degree < 2 || body_degree > 16)
        throw std::invalid_argument("sequence degrees must be in [2, 16]");
    if (body_repetitions < 1)
        throw std::invalid_argument("body_repetitions must be >= 1");
    if (chip_rate_hz <= 0.0)
        throw std::invalid_argument("chip_rate_hz must be positive");
    if (rrc_rolloff <= 0.0 || rrc_rolloff > 1.0)
        throw std::invalid_argument("rrc_rolloff must be in (0, 1]");
    if (samples_per_chip < 2)
        throw std::invalid_argument("samples_per_chip must be >= 2");
    if (rrc_span_chips < 2)
        throw std::invalid_argument("rrc_span_chips must be >= 2");
    if (max_excess_delay_ns <= 0.0 || pre_window_ns < 0.0)
        throw std::invalid_argument("lag window must be positive");
    const double body_period_ns = body_chips() * chip_ns();
    if (max_excess_delay_ns + pre_window_ns >= body_period_ns)
        throw std::invalid_argument("lag window must fit inside one body period");
    if (header_degree == body_degree && header_polynomial == body_polynomial)
        throw std::invalid_argument("header and body sequences must differ (degree or "
                                    "polynomial), otherwise frame sync is ambiguous");
}

double ChannelImpulseResponse::peak_power_db() const {
    double peak = 0.0;
    for (const auto& v : profile) peak = std::max(peak, std::norm(v));
    return 10.0 * std::log10(peak);
}

std::vector<cplx> build_tx_frame(const SoundingConfig& cfg) {
    cfg.validate();
    const auto header = generate_mseq(
        cfg.header_degree,
        cfg.header_polynomial ? cfg.header_polynomial : default_mseq_polynomial(cfg.header_degree));
    const auto body = generate_mseq(
        cfg.body_degree,
        cfg.body_polynomial ? cfg.body_polynomial : default_mseq_polynomial(cfg.body_degree));

    std::vector<int8_t> chips;
    chips.reserve(size_t(cfg.frame_chips()));
    chips.insert(chips.end(), header.begin(), header.end());
    for (int r = 0; r < cfg.body_repetitions; ++r)
        chips.insert(chips.end(), body.begin(), body.end());

    const auto taps = rrc_taps(cfg.rrc_rolloff, cfg.samples_per_chip, cfg.rrc_span_chips);
    return shape_chips(chips, cfg.samples_per_chip, taps);
}

std::vector<cplx> apply_multipath(std::span<const cplx> frame,
                                  std::span<const MultipathTap> taps,
                                  const SoundingConfig& cfg, double snr_db,
                                  uint64_t rng_seed) {
    if (frame.empty()) throw std::invalid_argument("apply_multipath: empty frame");
    if (taps.empty()) throw std::invalid_argument("apply_multipath: no taps");
    if (std::isnan(snr_db)) throw std::invalid_argument("apply_multipath: snr_db is NaN");

    const double dt_ns = cfg.time_step_ns();
    long max_shift = 0;
    double p_max = 0.0;
    for (const auto& tap : taps) {
        if (tap.delay_ns < 0.0)
            throw std::invalid_argument("apply_multipath: negative tap delay");
        if (tap.delay_ns > cfg.max_excess_delay_ns)
            throw std::invalid_argument("apply_multipath: tap delay exceeds max excess delay");
        max_shift = std::max(max_shift, std::lround(tap.delay_ns / dt_ns));
        p_max = std::max(p_max, tap.power_lin());
    }

    // With noise enabled the capture extends past the frame so correlation
    // windows at large lags see noise rather than an empty buffer.
    size_t tail = 0;
    if (std::isfinite(snr_db))
        tail = size_t(std::lround((cfg.max_excess_delay_ns + cfg.pre_window_ns) / dt_ns)) +
               size_t(cfg.rrc_span_chips * cfg.samples_per_chip);

    std::vector<cplx> rx(frame.size() + size_t(max_shift) + tail, cplx{});
    for (const auto& tap : taps) {
        const long shift = std::lround(tap.delay_ns / dt_ns);
        const double amp = std::sqrt(tap.power_lin());
        for (size_t m = 0; m < frame.size(); ++m)
            rx[size_t(shift) + m] += amp * frame[m];
    }

    if (std::isfinite(snr_db)) {
        double sig_power = 0.0;
        for (const auto& v : frame) sig_power += std::norm(v);
        sig_power = p_max * sig_power / double(frame.size());
        const double noise_power = sig_power * std::pow(10.0, -snr_db / 10.0);
        const double s = std::sqrt(noise_power / 2.0);
        Rng rng(rng_seed);
        for (auto& v : rx) v += cplx(s * rng.normal(), s * rng.normal());
    }
    return rx;
}

namespace {

std::vector<cplx> filter_frequency_domain(std::span<const cplx> samples,
                                          std::span<const cplx> response, bool invert) {
    if (response.size() < 2)
        throw std::invalid_argument("frequency response needs at least two points");
    const size_t nfft = next_pow2(samples.size());
    std::vector<cplx> buf(nfft, cplx{});
    std::copy(samples.begin(), samples.end(), buf.begin());
    fft(buf, false);

    const size_t m = response.size();
    for (size_t k = 0; k < nfft; ++k) {
        const double pos = double(k) / double(nfft) * double(m);
        const size_t i0 = size_t(pos) % m;
        const size_t i1 = (i0 + 1) % m;
        const double frac = pos - std::floor(pos);
        const cplx h = response[i0] * (1.0 - frac) + response[i1] * frac;
        if (invert) {
            if (std::abs(h) < 1e-9)
                throw std::invalid_argument("frequency response has a near-null bin; "
                                            "cannot equalize");
            buf[k] /= h;
        } else {
            buf[k] *= h;
        }
    }
    fft(buf, true);
    buf.resize(samples.size());
    return buf;
}

} // namespace

std::vector<cplx> apply_frequency_response(std::span<const cplx> samples,
                                           std::span<const cplx> response) {
    return filter_frequency_domain(samples, response, false);
}

std::vector<cplx> equalize_frequency_response(std::span<const cplx> samples,
                                              std::span<const cplx> response) {
    return filter_frequency_domain(samples, response, true);
}

SlidingCorrelator::SlidingCorrelator(const SoundingConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    const auto header = generate_mseq(
        cfg.header_degree,
        cfg.header_polynomial ? cfg.header_polynomial : default_mseq_polynomial(cfg.header_degree));
    const auto body = generate_mseq(
        cfg.body_degree,
        cfg.body_polynomial ? cfg.body_polynomial : default_mseq_polynomial(cfg.body_degree));
    const auto taps = rrc_taps(cfg.rrc_rolloff, cfg.samples_per_chip, cfg.rrc_span_chips);
    header_ref_ = shape_chips(header, cfg.samples_per_chip, taps);
    body_ref_ = shape_chips(body, cfg.samples_per_chip, taps);
    pulse_acf_ = pulse_autocorrelation(taps);
}

ChannelImpulseResponse SlidingCorrelator::extract(std::span<const cplx> rx) const {
    const int sps = cfg_.samples_per_chip;
    const size_t frame_samples = size_t(cfg_.frame_chips()) * size_t(sps);
    const size_t header_samples = header_ref_.size();
    const size_t body_samples = body_ref_.size();
    if (rx.size() < frame_samples)
        throw FrameSyncError("received stream shorter than one frame");

    // Frame sync on the header sequence.
    const size_t max_shift = rx.size() - header_samples;
    const auto hcorr = cross_correlate(rx, header_ref_, max_shift);
    size_t sync = 0;
    double peak = 0.0;
    std::vector<double> hp(hcorr.size());
    for (size_t i = 0; i < hcorr.size(); ++i) {
        hp[i] = std::norm(hcorr[i]);
        if (hp[i] > peak) {
            peak = hp[i];
            sync = i;
        }
    }
    const double med = median_of(std::move(hp));
    if (med > 0.0 && peak < med * std::pow(10.0, cfg_.sync_threshold_db / 10.0))
        throw FrameSyncError("header correlation peak below sync threshold");
    if (peak <= 0.0)
        throw FrameSyncError("header correlation is identically zero");
    if (sync + frame_samples > rx.size())
        throw FrameSyncError("frame located but truncated at end of stream");

    // Per-repetition correlation against the local body replica over the
    // lag window, then averaging.
    const double dt_ns = cfg_.time_step_ns();
    const long lag_min = -std::lround(cfg_.pre_window_ns / dt_ns);
    const long lag_max = std::lround(cfg_.max_excess_delay_ns / dt_ns);
    const size_t window = size_t(lag_max - lag_min + 1);
    const size_t xlen = window - 1 + body_samples;
    const size_t nfft = next_pow2(xlen + 1);

    std::vector<cplx> body_fft(nfft, cplx{});
    std::copy(body_ref_.begin(), body_ref_.end(), body_fft.begin());
    fft(body_fft, false);
    for (auto& v : body_fft) v = std::conj(v);

    std::vector<cplx> acc(window, cplx{});
    std::vector<double> acc_mag(window, 0.0);
    std::vector<cplx> buf(nfft);
    for (int r = 0; r < cfg_.body_repetitions; ++r) {
        const long base = long(sync) + long(header_samples) +
                          long(r) * long(body_samples) + lag_min;
        std::fill(buf.begin(), buf.end(), cplx{});
        for (size_t t = 0; t < xlen; ++t) {
            const long idx = base + long(t);
            if (idx >= 0 && idx < long(rx.size())) buf[t] = rx[size_t(idx)];
        }
        fft(buf, false);
        for (size_t i = 0; i < nfft; ++i) buf[i] *= body_fft[i];
        fft(buf, true);
        if (cfg_.averaging == AveragingMode::coherent) {
            for (size_t k = 0; k < window; ++k) acc[k] += buf[k];
        } else {
            for (size_t k = 0; k < window; ++k) acc_mag[k] += std::abs(buf[k]);
        }
    }

    const double norm = 1.0 / (double(cfg_.body_repetitions) * double(cfg_.body_chips()));
    ChannelImpulseResponse cir;
    cir.profile.resize(window);
    if (cfg_.averaging == AveragingMode::coherent) {
        for (size_t k = 0; k < window; ++k) cir.profile[k] = acc[k] * norm;
    } else {
        for (size_t k = 0; k < window; ++k) cir.profile[k] = cplx(acc_mag[k] * norm, 0.0);
    }
    cir.time_step_ns = dt_ns;
    cir.lag0_index = int(-lag_min);
    cir.samples_per_chip = sps;
    cir.pulse_acf = pulse_acf_;
    cir.noise_floor_db = noise_floor_db_from_profile(cir.profile);
    return cir;
}

ChannelImpulseResponse extract_cir(std::span<const cplx> rx, const SoundingConfig& cfg) {
    return SlidingCorrelator(cfg).extract(rx);
}

std::vector<MultipathTap> detect_peaks(const ChannelImpulseResponse& cir,
                                       double dynamic_range_db, double noise_margin_db,
                                       int max_taps) {
    if (cir.profile.empty())
        throw std::invalid_argument("detect_peaks: empty profile");
    if (dynamic_range_db <= 0.0)
        throw std::invalid_argument("detect_peaks: dynamic range must be positive");

    const size_t n = cir.profile.size();
    std::vector<cplx> res(cir.profile.begin(), cir.profile.end());

    double global_peak = 0.0;
    for (const auto& v : res) global_peak = std::max(global_peak, std::norm(v));
    if (global_peak <= 0.0) return {};

    const double floor_lin =
        std::isfinite(cir.noise_floor_db)
            ? std::pow(10.0, (cir.noise_floor_db + noise_margin_db) / 10.0)
            : 0.0;
    const double thr = std::max(global_peak * std::pow(10.0, -dynamic_range_db / 10.0), floor_lin);

    const int excl = cir.samples_per_chip;  // one-chip exclusion
    const int acf_half = int(cir.pulse_acf.size() / 2);
    std::vector<char> masked(n, 0);

    struct Found {
        size_t index;
        double power_lin;
    };
    std::vector<Found> found;

    for (size_t iter = 0; iter < n && int(found.size()) < max_taps; ++iter) {
        size_t best = n;
        double best_p = thr;
        for (size_t i = 0; i < n; ++i) {
            if (masked[i]) continue;
            const double p = std::norm(res[i]);
            if (p > best_p) {
                best_p = p;
                best = i;
            }
        }
        if (best == n) break;

        // shoulder samples of an already-cancelled path are not taps;
        // a genuine path is a local maximum of the residual
        const double left = best > 0 ? std::norm(res[best - 1]) : -1.0;
        const double right = best + 1 < n ? std::norm(res[best + 1]) : -1.0;
        if (best_p < left || best_p < right) {
            masked[best] = 1;
            continue;
        }

        const cplx amp = res[best];
        found.push_back({best, std::norm(amp)});

        // strict one-chip exclusion: a path exactly one chip away remains
        // detectable
        for (long j = long(best) - (excl - 1); j <= long(best) + (excl - 1); ++j)
            if (j >= 0 && j < long(n)) masked[size_t(j)] = 1;

        // Serial cancellation of this path's pulse shape so weaker paths
        // nearby are measured without its leakage.
        if (!cir.pulse_acf.empty()) {
            for (int k = -acf_half; k <= acf_half; ++k) {
                const long idx = long(best) + k;
                if (idx < 0 || idx >= long(n)) continue;
                res[size_t(idx)] -= amp * cir.pulse_acf[size_t(k + acf_half)];
            }
        } else {
            res[best] = cplx{};
        }
    }

    if (found.empty()) return {};

    // Delays relative to the strongest tap (the first one found).
    const double ref_lag = double(found.front().index);
    std::vector<MultipathTap> taps;
    taps.reserve(found.size());
    for (const auto& f : found) {
        MultipathTap tap;
        tap.delay_ns = (double(f.index) - ref_lag) * cir.time_step_ns;
        tap.power_db = 10.0 * std::log10(f.power_lin);
        taps.push_back(tap);
    }
    std::sort(taps.begin(), taps.end(),
              [](const MultipathTap& a, const MultipathTap& b) { return a.delay_ns < b.delay_ns; });
    return taps;
}

ChannelImpulseResponse sound_channel(std::span<const MultipathTap> taps,
                                     const SoundingConfig& cfg, double snr_db,
                                     uint64_t rng_seed, double dynamic_range_db) {
    const auto frame = build_tx_frame(cfg);
    const auto rx = apply_multipath(frame, taps, cfg, snr_db, rng_seed);
    auto cir = extract_cir(rx, cfg);
    cir.taps = detect_peaks(cir, dynamic_range_db, cfg.noise_margin_db);
    return cir;
}

} // namespace subthz
