// Paraxial Gaussian-beam propagation and coherent aperture coupling.
// Models the near-field gain reduction of large apertures: the quadratic
// phase term k*r^2/(2R(z)) varies across a wide receiver, so the field
// does not add up in phase.
#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace subthz {

struct GaussianBeam {
    double waist_w0 = 1e-3;      // meters
    double wavelength = 2.1414e-3;
    double peak_field_e0 = 1.0;  // V/m at the waist, on axis
    double phase0 = 0.0;         // global carrier phase, no effect on power

    double rayleigh_range() const;
    double wavenumber() const;

    // Equates an antenna of the given gain to a circular aperture of the
    // same efficiency: A = G*lambda^2/(4*pi*eta), r = sqrt(A/pi),
    // w0 = sqrt(2)*r. The sqrt(2) waist convention reproduces the
    // 4 mm open-waveguide waist at 15 dBi / eta 0.45 / 140 GHz.
    static GaussianBeam from_gain(double gain_dbi, double efficiency, double wavelength);

    void validate() const;
};

struct ApertureSpec {
    double radius_w_rx = 10e-3;  // meters
    double efficiency = 0.45;
};

struct BeamGeometry {
    double waist_w;           // w(z) = w0*sqrt(1 + (z/zR)^2)
    double curvature_radius;  // R(z) = (z^2 + zR^2)/z, +inf at z = 0
    double gouy_phase;        // arctan(z/zR)
};

double rayleigh_range(double waist_w0, double wavelength);

// z >= 0; at z = 0 the curvature radius is reported as +infinity.
BeamGeometry beam_geometry(const GaussianBeam& beam, double z);

// Complex field at transverse offset r and axial distance z >= 0:
// |E| = E0*(w0/w)*exp(-r^2/w^2), phase -(k*z + k*r^2/(2R) + gouy) + phase0.
std::complex<double> field_at(const GaussianBeam& beam, double r, double z);

// Open-waveguide gain: 10*log10(0.81 * (4*pi/lambda^2) * a * b).
double waveguide_gain_dbi(double a, double b, double wavelength);
double waveguide_gain_from_area_dbi(double area_ab, double wavelength);

// Inverse of the aperture convention in GaussianBeam::from_gain.
double waist_from_gain(double gain_dbi, double efficiency, double wavelength);

// Adaptive quadrature could not reach the requested tolerance.
struct QuadratureError : std::runtime_error {
    double achieved_tolerance;
    QuadratureError(const std::string& what, double achieved)
        : std::runtime_error(what), achieved_tolerance(achieved) {}
};

struct CoupledPower {
    // |integral of E dr over the aperture|^2 / (2*w_rx): the power a
    // coherent (field-summing) receiver collects. By Cauchy-Schwarz this
    // never exceeds the incoherent value; they approach equality when
    // amplitude and phase are uniform across the aperture.
    double coherent;
    // integral of |E|^2 dr over the aperture.
    double incoherent;
};

// Line-aperture coupling at distance z > 0. Integration runs over
// [-w_eff, w_eff] with w_eff = min(w_rx, 5*w(z)); tolerance is relative
// to the on-axis intensity.
CoupledPower coupled_power(const GaussianBeam& beam, const ApertureSpec& rx, double z,
                           double rel_tol = 1e-9);

// 10*log10(coherent(z) / coherent(ref_z)); ref_z defaults to the 1 m
// reference distance used for path-loss normalization.
double coupled_power_rel_db(const GaussianBeam& beam, const ApertureSpec& rx, double z,
                            double ref_z = 1.0);

// Closed-form total line power: integral of |E(r,z)|^2 dr over all r.
double line_power_total(const GaussianBeam& beam, double z);

// Fraction of the total line power intercepted by the aperture; tends to
// 1 as w_rx grows.
double capture_fraction(const GaussianBeam& beam, const ApertureSpec& rx, double z);

// Numeric full-plane radial power integral of |E|^2 * 2*pi*r dr, used to
// check energy conservation along z.
double radial_power_total(const GaussianBeam& beam, double z, double rel_tol = 1e-9);

// 2-D variants of the aperture coupling (disk aperture instead of the
// line integral): coherent |integral E dA|^2 / (pi*w_rx^2) and incoherent
// integral of |E|^2 dA.
CoupledPower coupled_power_radial(const GaussianBeam& beam, const ApertureSpec& rx, double z,
                                  double rel_tol = 1e-9);

} // namespace subthz
