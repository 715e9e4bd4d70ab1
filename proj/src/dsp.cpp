#include "subthz/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace subthz {

void fft(std::vector<cplx>& data, bool inverse) {
    const size_t n = data.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw std::invalid_argument("fft size must be a power of two");

    // bit-reversal permutation
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(data[i], data[j]);
    }

    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * std::numbers::pi / double(len);
        const cplx wlen(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            cplx w(1.0, 0.0);
            for (size_t k = 0; k < len / 2; ++k) {
                const cplx u = data[i + k];
                const cplx v = data[i + k + len / 2] * w;
                data[i + k] = u + v;
                data[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse) {
        const double scale = 1.0 / double(n);
        for (auto& d : data) d *= scale;
    }
}

std::vector<cplx> cross_correlate(std::span<const cplx> x, std::span<const cplx> ref,
                                  size_t max_shift) {
    if (ref.empty()) throw std::invalid_argument("cross_correlate: empty reference");
    const size_t need = max_shift + ref.size();
    const size_t nfft = next_pow2(std::max(need, x.size() + ref.size()));

    std::vector<cplx> fx(nfft, cplx{});
    std::copy(x.begin(), x.end(), fx.begin());
    std::vector<cplx> fr(nfft, cplx{});
    std::copy(ref.begin(), ref.end(), fr.begin());

    fft(fx, false);
    fft(fr, false);
    for (size_t i = 0; i < nfft; ++i) fx[i] *= std::conj(fr[i]);
    fft(fx, true);

    fx.resize(max_shift + 1);
    return fx;
}

double rrc_pulse(double t, double beta) {
    const double pi = std::numbers::pi;
    if (std::abs(t) < 1e-12)
        return 1.0 - beta + 4.0 * beta / pi;
    const double tb = std::abs(t) - 1.0 / (4.0 * beta);
    if (std::abs(tb) < 1e-9) {
        // removable singularity at |t| = 1/(4 beta)
        const double a = pi / (4.0 * beta);
        return (beta / std::numbers::sqrt2) *
               ((1.0 + 2.0 / pi) * std::sin(a) + (1.0 - 2.0 / pi) * std::cos(a));
    }
    const double num = std::sin(pi * t * (1.0 - beta)) + 4.0 * beta * t * std::cos(pi * t * (1.0 + beta));
    const double den = pi * t * (1.0 - (4.0 * beta * t) * (4.0 * beta * t));
    return num / den;
}

std::vector<double> rrc_taps(double rolloff, int sps, int span_chips) {
    if (rolloff <= 0.0 || rolloff > 1.0)
        throw std::invalid_argument("rrc rolloff must be in (0, 1]");
    if (sps < 2) throw std::invalid_argument("samples per chip must be >= 2");
    if (span_chips < 2) throw std::invalid_argument("rrc span must be >= 2 chips");

    const int half = span_chips * sps / 2;
    std::vector<double> taps(2 * half + 1);
    for (int k = -half; k <= half; ++k)
        taps[k + half] = rrc_pulse(double(k) / double(sps), rolloff);

    double energy = 0.0;
    for (double v : taps) energy += v * v;
    const double scale = 1.0 / std::sqrt(energy);
    for (double& v : taps) v *= scale;
    return taps;
}

std::vector<double> pulse_autocorrelation(const std::vector<double>& taps) {
    const int p = int(taps.size());
    std::vector<double> acf(2 * p - 1, 0.0);
    for (int lag = -(p - 1); lag <= p - 1; ++lag) {
        double acc = 0.0;
        for (int m = 0; m < p; ++m) {
            const int j = m + lag;
            if (j >= 0 && j < p) acc += taps[m] * taps[j];
        }
        acf[lag + p - 1] = acc;
    }
    const double peak = acf[p - 1];
    for (double& v : acf) v /= peak;
    return acf;
}

std::vector<cplx> shape_chips(std::span<const int8_t> chips, int sps,
                              const std::vector<double>& taps) {
    const int half = int(taps.size()) / 2;
    const size_t out_len = chips.size() * size_t(sps);
    std::vector<cplx> out(out_len, cplx{});
    for (size_t i = 0; i < chips.size(); ++i) {
        const double c = double(chips[i]);
        const long center = long(i) * sps;
        for (int k = -half; k <= half; ++k) {
            const long idx = center + k;
            if (idx < 0 || idx >= long(out_len)) continue;
            out[size_t(idx)] += c * taps[size_t(k + half)];
        }
    }
    return out;
}

double occupied_bandwidth(std::span<const cplx> signal, double sample_rate, double fraction) {
    if (signal.empty()) throw std::invalid_argument("occupied_bandwidth: empty signal");
    if (fraction <= 0.0 || fraction > 1.0)
        throw std::invalid_argument("occupied_bandwidth: fraction must be in (0, 1]");
    const size_t nfft = next_pow2(signal.size());
    std::vector<cplx> buf(nfft, cplx{});
    std::copy(signal.begin(), signal.end(), buf.begin());
    fft(buf, false);

    std::vector<double> psd(nfft);
    double total = 0.0;
    for (size_t i = 0; i < nfft; ++i) {
        psd[i] = std::norm(buf[i]);
        total += psd[i];
    }

    // Accumulate symmetric bins around DC until the fraction is reached.
    double acc = psd[0];
    size_t k = 0;
    while (acc < fraction * total && k < nfft / 2) {
        ++k;
        acc += psd[k];
        acc += psd[nfft - k];
    }
    return double(2 * k + 1) * sample_rate / double(nfft);
}

} // namespace subthz
