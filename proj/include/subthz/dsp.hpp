// Baseband DSP primitives: radix-2 FFT, FFT-based cross-correlation,
// root-raised-cosine pulse shaping.
#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace subthz {

using cplx = std::complex<double>;

// In-place iterative radix-2 FFT. Size must be a power of two.
// The inverse transform includes the 1/N scaling.
void fft(std::vector<cplx>& data, bool inverse);

inline size_t next_pow2(size_t n) {
    size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// Linear cross-correlation c[k] = sum_m x[k + m] * conj(ref[m]) for
// k in [0, max_shift]. Computed via FFT; x is zero-extended as needed.
std::vector<cplx> cross_correlate(std::span<const cplx> x, std::span<const cplx> ref,
                                  size_t max_shift);

// Root-raised-cosine pulse sampled at sps samples per chip over
// span_chips chips (odd tap count, centered), normalized to unit
// discrete energy. rolloff in (0, 1].
std::vector<double> rrc_taps(double rolloff, int sps, int span_chips);

// Closed-form continuous RRC pulse value at time t (in chip periods),
// unit chip period, unnormalized amplitude. Exposed so tests can check
// sampled taps against the analytic pulse.
double rrc_pulse(double t_chips, double rolloff);

// Autocorrelation of a pulse, normalized to unit peak. Length
// 2*taps.size() - 1, centered. This is the shape a matched-filter
// correlator produces around an isolated path.
std::vector<double> pulse_autocorrelation(const std::vector<double>& taps);

// Shapes a bipolar chip stream with the given pulse: impulses at
// k*sps convolved with taps, output truncated to chips.size()*sps
// samples with the pulse peak of chip k at sample k*sps.
std::vector<cplx> shape_chips(std::span<const int8_t> chips, int sps,
                              const std::vector<double>& taps);

// Two-sided bandwidth (Hz) containing the requested power fraction of
// the signal's periodogram, centered on DC. sample_rate in Hz.
double occupied_bandwidth(std::span<const cplx> signal, double sample_rate, double fraction);

} // namespace subthz
