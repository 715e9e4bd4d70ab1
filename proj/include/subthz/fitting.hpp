// Parameter estimation over metric ensembles: log-distance path-loss
// regression, normal/exponential distribution fits, empirical CDFs and
// gain-curve regressions (quadratic and two-term exponential).
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace subthz {

struct LogDistanceFit {
    double pl0_db = 0.0;
    double n = 0.0;       // path loss exponent
    double sigma_db = 0.0;
};

enum class Pl0Mode {
    fixed,  // intercept pinned (Friis at the reference distance)
    free,   // intercept jointly estimated
};

// Gaussian-shadowing MLE of the log-distance model
// PL = PL0 + 10*n*log10(d/d0) + chi. With fixed PL0 only the slope is
// estimated; sigma is the residual standard deviation (MLE, divisor N).
// d0 is 1 m.
LogDistanceFit fit_log_distance(std::span<const std::pair<double, double>> distance_pl_points,
                                Pl0Mode mode, double fixed_pl0_db = 0.0);

enum class DistributionFamily { normal, exponential };

struct DistributionFit {
    DistributionFamily family;
    double mu = 0.0;     // normal mean
    double sigma = 0.0;  // normal std (MLE)
    double beta = 0.0;   // exponential mean
};

DistributionFit fit_distribution(std::span<const double> samples, DistributionFamily family);

// Right-continuous ECDF: probability i/N at the i-th order statistic.
// Duplicate values are collapsed onto the highest step.
std::vector<std::pair<double, double>> empirical_cdf(std::span<const double> samples);

enum class GainCurveForm {
    quadratic,        // a*G^2 + b*G + c, coefficients {a, b, c}
    two_exponential,  // a*e^(b*G) + c*e^(d*G), coefficients {a, b, c, d}
};

struct GainCurveFit {
    GainCurveForm form;
    std::vector<double> coefficients;
    double rmse = 0.0;
    size_t n_points = 0;

    double evaluate(double gain) const;
};

struct GainCurveOptions {
    int max_iterations = 500;
    double step_tolerance = 1e-14;
    // Multi-start initializations of the two exponential rates: by default
    // 16 pairs of log-spaced magnitudes, slow-positive x fast-negative.
    std::vector<std::pair<double, double>> rate_starts;
};

// Non-convergence of the nonlinear fit; carries the best residual seen.
struct FitError : std::runtime_error {
    double best_rmse;
    FitError(const std::string& what, double rmse) : std::runtime_error(what), best_rmse(rmse) {}
};

// Quadratic: closed-form least squares on a centered/scaled abscissa.
// Two-exponential: per start, linear amplitudes via least squares, then
// damped Gauss-Newton on all four coefficients; the step is halved while
// the residual increases. Starts are merged by lowest residual with a
// lexicographic coefficient tie-break, and the winning pair is reported
// with the faster-decaying term second.
GainCurveFit fit_gain_curve(std::span<const std::pair<double, double>> gain_metric_points,
                            GainCurveForm form, const GainCurveOptions& options = {});

} // namespace subthz
