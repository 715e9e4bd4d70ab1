#include "subthz/beam.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace subthz {

namespace {

using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;

// Adaptive Simpson on a complex-valued integrand with error tracking.
// Subintervals that exhaust the depth or evaluation budget contribute
// their residual error; the total is checked against the requested
// tolerance by the caller.
template <typename F>
struct SimpsonState {
    const F& f;
    double leftover_error = 0.0;
    long evals_left = 1'500'000;

    cplx recurse(double a, double b, cplx fa, cplx fm, cplx fb, cplx whole, double tol,
                 int depth) {
        const double m = 0.5 * (a + b);
        const double lm = 0.5 * (a + m);
        const double rm = 0.5 * (m + b);
        const cplx flm = f(lm);
        const cplx frm = f(rm);
        evals_left -= 2;
        const cplx left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        const cplx right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        const cplx delta = left + right - whole;
        if (std::abs(delta) <= 15.0 * tol)
            return left + right + delta / 15.0;
        if (depth <= 0 || evals_left <= 0) {
            leftover_error += std::abs(delta) / 15.0;
            return left + right + delta / 15.0;
        }
        return recurse(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
               recurse(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
    }
};

template <typename F>
cplx adaptive_simpson(const F& f, double a, double b, double abs_tol, const char* what) {
    const cplx fa = f(a);
    const cplx fb = f(b);
    const cplx fm = f(0.5 * (a + b));
    const cplx whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    SimpsonState<F> state{f};
    const cplx result = state.recurse(a, b, fa, fm, fb, whole, abs_tol, 44);
    if (state.leftover_error > abs_tol)
        throw QuadratureError(std::string(what) + ": quadrature tolerance not met",
                              state.leftover_error);
    return result;
}

} // namespace

double rayleigh_range(double waist_w0, double wavelength) {
    if (waist_w0 <= 0.0 || wavelength <= 0.0)
        throw std::invalid_argument("rayleigh_range: waist and wavelength must be positive");
    return kPi * waist_w0 * waist_w0 / wavelength;
}

void GaussianBeam::validate() const {
    if (waist_w0 <= 0.0 || wavelength <= 0.0)
        throw std::invalid_argument("GaussianBeam: waist and wavelength must be positive");
}

double GaussianBeam::rayleigh_range() const {
    return subthz::rayleigh_range(waist_w0, wavelength);
}

double GaussianBeam::wavenumber() const { return 2.0 * kPi / wavelength; }

GaussianBeam GaussianBeam::from_gain(double gain_dbi, double efficiency, double wavelength) {
    GaussianBeam beam;
    beam.waist_w0 = waist_from_gain(gain_dbi, efficiency, wavelength);
    beam.wavelength = wavelength;
    return beam;
}

BeamGeometry beam_geometry(const GaussianBeam& beam, double z) {
    beam.validate();
    if (z < 0.0) throw std::invalid_argument("beam_geometry: z must be >= 0");
    const double zr = beam.rayleigh_range();
    BeamGeometry g;
    g.waist_w = beam.waist_w0 * std::sqrt(1.0 + (z / zr) * (z / zr));
    g.curvature_radius =
        z == 0.0 ? std::numeric_limits<double>::infinity() : (z * z + zr * zr) / z;
    g.gouy_phase = std::atan2(z, zr);
    return g;
}

cplx field_at(const GaussianBeam& beam, double r, double z) {
    beam.validate();
    if (z < 0.0) throw std::invalid_argument("field_at: z must be >= 0");
    const double zr = beam.rayleigh_range();
    const double w = beam.waist_w0 * std::sqrt(1.0 + (z / zr) * (z / zr));
    const double inv_r = z / (z * z + zr * zr);  // 1/R(z), well defined at z = 0
    const double k = beam.wavenumber();
    const double gouy = std::atan2(z, zr);
    const double amp = beam.peak_field_e0 * (beam.waist_w0 / w) * std::exp(-(r * r) / (w * w));
    const double phase = -(k * z + 0.5 * k * r * r * inv_r + gouy) + beam.phase0;
    return std::polar(amp, phase);
}

double waveguide_gain_dbi(double a, double b, double wavelength) {
    if (a <= 0.0 || b <= 0.0 || wavelength <= 0.0)
        throw std::invalid_argument("waveguide_gain: dimensions must be positive");
    return waveguide_gain_from_area_dbi(a * b, wavelength);
}

double waveguide_gain_from_area_dbi(double area_ab, double wavelength) {
    if (area_ab <= 0.0 || wavelength <= 0.0)
        throw std::invalid_argument("waveguide_gain: area must be positive");
    return 10.0 * std::log10(0.81 * 4.0 * kPi / (wavelength * wavelength) * area_ab);
}

double waist_from_gain(double gain_dbi, double efficiency, double wavelength) {
    if (gain_dbi <= 0.0)
        throw std::invalid_argument("waist_from_gain: gain must be positive dBi");
    if (efficiency <= 0.0 || efficiency > 1.0)
        throw std::invalid_argument("waist_from_gain: efficiency must be in (0, 1]");
    const double g = std::pow(10.0, gain_dbi / 10.0);
    const double area = g * wavelength * wavelength / (4.0 * kPi * efficiency);
    const double radius = std::sqrt(area / kPi);
    return std::numbers::sqrt2 * radius;
}

CoupledPower coupled_power(const GaussianBeam& beam, const ApertureSpec& rx, double z,
                           double rel_tol) {
    beam.validate();
    if (rx.radius_w_rx <= 0.0)
        throw std::invalid_argument("coupled_power: aperture radius must be positive");
    if (z <= 0.0) throw std::invalid_argument("coupled_power: z must be positive");

    const auto geo = beam_geometry(beam, z);
    const double w_eff = std::min(rx.radius_w_rx, 5.0 * geo.waist_w);
    const double on_axis = std::abs(field_at(beam, 0.0, z));

    const auto field = [&](double r) { return field_at(beam, r, z); };
    const auto intensity = [&](double r) -> cplx { return std::norm(field_at(beam, r, z)); };

    const double tol_field = rel_tol * on_axis * 2.0 * w_eff;
    const double tol_power = rel_tol * on_axis * on_axis * 2.0 * w_eff;

    const cplx coherent_sum =
        adaptive_simpson(field, -w_eff, w_eff, tol_field, "coupled_power(coherent)");
    const cplx incoherent_sum =
        adaptive_simpson(intensity, -w_eff, w_eff, tol_power, "coupled_power(incoherent)");

    CoupledPower out;
    out.coherent = std::norm(coherent_sum) / (2.0 * rx.radius_w_rx);
    out.incoherent = incoherent_sum.real();
    return out;
}

double coupled_power_rel_db(const GaussianBeam& beam, const ApertureSpec& rx, double z,
                            double ref_z) {
    const double p = coupled_power(beam, rx, z).coherent;
    const double pref = coupled_power(beam, rx, ref_z).coherent;
    return 10.0 * std::log10(p / pref);
}

double line_power_total(const GaussianBeam& beam, double z) {
    beam.validate();
    if (z < 0.0) throw std::invalid_argument("line_power_total: z must be >= 0");
    const auto geo = beam_geometry(beam, z);
    const double peak = beam.peak_field_e0 * beam.waist_w0 / geo.waist_w;
    // integral of peak^2 * exp(-2 r^2 / w^2) dr over all r
    return peak * peak * geo.waist_w * std::sqrt(kPi / 2.0);
}

double capture_fraction(const GaussianBeam& beam, const ApertureSpec& rx, double z) {
    const double captured = coupled_power(beam, rx, z).incoherent;
    return captured / line_power_total(beam, z);
}

double radial_power_total(const GaussianBeam& beam, double z, double rel_tol) {
    beam.validate();
    if (z < 0.0) throw std::invalid_argument("radial_power_total: z must be >= 0");
    const auto geo = beam_geometry(beam, z);
    const double rmax = 8.0 * geo.waist_w;
    const double on_axis = std::abs(field_at(beam, 0.0, std::max(z, 1e-12)));
    const auto integrand = [&](double r) -> cplx {
        return std::norm(field_at(beam, r, z)) * 2.0 * kPi * r;
    };
    const double tol = rel_tol * on_axis * on_axis * kPi * rmax * rmax;
    return adaptive_simpson(integrand, 0.0, rmax, tol, "radial_power_total").real();
}

CoupledPower coupled_power_radial(const GaussianBeam& beam, const ApertureSpec& rx, double z,
                                  double rel_tol) {
    beam.validate();
    if (rx.radius_w_rx <= 0.0)
        throw std::invalid_argument("coupled_power_radial: aperture radius must be positive");
    if (z <= 0.0) throw std::invalid_argument("coupled_power_radial: z must be positive");

    const auto geo = beam_geometry(beam, z);
    const double w_eff = std::min(rx.radius_w_rx, 5.0 * geo.waist_w);
    const double on_axis = std::abs(field_at(beam, 0.0, z));

    const auto field_ring = [&](double r) -> cplx {
        return field_at(beam, r, z) * 2.0 * kPi * r;
    };
    const auto intensity_ring = [&](double r) -> cplx {
        return std::norm(field_at(beam, r, z)) * 2.0 * kPi * r;
    };
    const double area = kPi * rx.radius_w_rx * rx.radius_w_rx;
    const double tol_field = rel_tol * on_axis * kPi * w_eff * w_eff;
    const double tol_power = rel_tol * on_axis * on_axis * kPi * w_eff * w_eff;

    CoupledPower out;
    out.coherent = std::norm(adaptive_simpson(field_ring, 0.0, w_eff, tol_field,
                                              "coupled_power_radial(coherent)")) /
                   area;
    out.incoherent = adaptive_simpson(intensity_ring, 0.0, w_eff, tol_power,
                                      "coupled_power_radial(incoherent)")
                         .real();
    return out;
}

} // namespace subthz
