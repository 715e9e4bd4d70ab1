#include "subthz/fitting.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

namespace subthz {

namespace {

// Gaussian elimination with partial pivoting for the small normal-equation
// systems used here (n <= 4). Returns false if singular.
template <size_t N>
bool solve_linear(std::array<std::array<double, N>, N> a, std::array<double, N>& b) {
    for (size_t col = 0; col < N; ++col) {
        size_t pivot = col;
        for (size_t r = col + 1; r < N; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        if (std::abs(a[pivot][col]) < 1e-300) return false;
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (size_t r = col + 1; r < N; ++r) {
            const double f = a[r][col] / a[col][col];
            for (size_t c = col; c < N; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    for (size_t col = N; col-- > 0;) {
        for (size_t c = col + 1; c < N; ++c) b[col] -= a[col][c] * b[c];
        b[col] /= a[col][col];
    }
    return true;
}

double eval_two_exp(const std::array<double, 4>& p, double g) {
    return p[0] * std::exp(p[1] * g) + p[2] * std::exp(p[3] * g);
}

double ssr_two_exp(const std::array<double, 4>& p,
                   std::span<const std::pair<double, double>> pts) {
    double ssr = 0.0;
    for (const auto& [g, y] : pts) {
        if (std::abs(p[1] * g) > 300.0 || std::abs(p[3] * g) > 300.0)
            return std::numeric_limits<double>::infinity();
        const double r = eval_two_exp(p, g) - y;
        ssr += r * r;
    }
    return ssr;
}

// Linear least squares for the amplitudes given fixed rates.
bool solve_amplitudes(double rate1, double rate2,
                      std::span<const std::pair<double, double>> pts, double& a, double& c) {
    std::array<std::array<double, 2>, 2> ata{{{0.0, 0.0}, {0.0, 0.0}}};
    std::array<double, 2> aty{0.0, 0.0};
    for (const auto& [g, y] : pts) {
        if (std::abs(rate1 * g) > 300.0 || std::abs(rate2 * g) > 300.0) return false;
        const double e1 = std::exp(rate1 * g);
        const double e2 = std::exp(rate2 * g);
        ata[0][0] += e1 * e1;
        ata[0][1] += e1 * e2;
        ata[1][1] += e2 * e2;
        aty[0] += e1 * y;
        aty[1] += e2 * y;
    }
    ata[1][0] = ata[0][1];
    if (!solve_linear(ata, aty)) return false;
    a = aty[0];
    c = aty[1];
    return true;
}

struct TwoExpCandidate {
    std::array<double, 4> params;
    double ssr;
    bool converged;
};

TwoExpCandidate refine_two_exp(std::array<double, 4> p,
                               std::span<const std::pair<double, double>> pts,
                               const GainCurveOptions& opt) {
    double ssr = ssr_two_exp(p, pts);
    bool converged = false;
    for (int iter = 0; iter < opt.max_iterations; ++iter) {
        if (!std::isfinite(ssr)) break;

        std::array<std::array<double, 4>, 4> jtj{};
        std::array<double, 4> jtr{0.0, 0.0, 0.0, 0.0};
        for (const auto& [g, y] : pts) {
            const double e1 = std::exp(p[1] * g);
            const double e2 = std::exp(p[3] * g);
            const double r = p[0] * e1 + p[2] * e2 - y;
            const std::array<double, 4> j{e1, p[0] * g * e1, e2, p[2] * g * e2};
            for (size_t u = 0; u < 4; ++u) {
                jtr[u] += j[u] * r;
                for (size_t v = 0; v < 4; ++v) jtj[u][v] += j[u] * j[v];
            }
        }
        // small Tikhonov term keeps the step defined when a column collapses
        for (size_t u = 0; u < 4; ++u) jtj[u][u] += 1e-14 * (1.0 + jtj[u][u]);

        std::array<double, 4> step = jtr;
        if (!solve_linear(jtj, step)) break;

        double alpha = 1.0;
        std::array<double, 4> trial{};
        double trial_ssr = std::numeric_limits<double>::infinity();
        bool improved = false;
        for (int halving = 0; halving < 45; ++halving) {
            for (size_t u = 0; u < 4; ++u) trial[u] = p[u] - alpha * step[u];
            trial_ssr = ssr_two_exp(trial, pts);
            if (trial_ssr <= ssr) {
                improved = true;
                break;
            }
            alpha *= 0.5;  // damping halved on residual increase
        }
        if (!improved) {
            converged = true;  // stationary within line-search resolution
            break;
        }

        double step_norm = 0.0, p_norm = 0.0;
        for (size_t u = 0; u < 4; ++u) {
            step_norm += (alpha * step[u]) * (alpha * step[u]);
            p_norm += p[u] * p[u];
        }
        const double rel_change = (ssr - trial_ssr) / std::max(ssr, 1e-300);
        p = trial;
        ssr = trial_ssr;
        if (std::sqrt(step_norm) <= opt.step_tolerance * (1.0 + std::sqrt(p_norm)) ||
            rel_change < 1e-15 || ssr < 1e-28) {
            converged = true;
            break;
        }
    }
    return {p, ssr, converged};
}

std::vector<std::pair<double, double>> default_rate_starts() {
    std::vector<std::pair<double, double>> starts;
    for (double b : {1e-3, 1e-2, 1e-1, 1.0})
        for (double d : {-1e-3, -1e-2, -1e-1, -1.0}) starts.emplace_back(b, d);
    return starts;
}

} // namespace

LogDistanceFit fit_log_distance(std::span<const std::pair<double, double>> points,
                                Pl0Mode mode, double fixed_pl0_db) {
    if (points.size() < 2)
        throw std::invalid_argument("fit_log_distance: need at least two points");
    for (const auto& [d, pl] : points) {
        (void)pl;
        if (d <= 0.0) throw std::invalid_argument("fit_log_distance: distances must be positive");
    }

    std::vector<double> x(points.size());
    for (size_t i = 0; i < points.size(); ++i) x[i] = 10.0 * std::log10(points[i].first);
    const double x0 = x[0];
    const bool degenerate =
        std::all_of(x.begin(), x.end(), [&](double xi) { return std::abs(xi - x0) < 1e-12; });
    if (degenerate)
        throw std::invalid_argument("fit_log_distance: all distances identical (degenerate design)");

    LogDistanceFit fit;
    const size_t n = points.size();
    if (mode == Pl0Mode::free) {
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        for (size_t i = 0; i < n; ++i) {
            sx += x[i];
            sy += points[i].second;
            sxx += x[i] * x[i];
            sxy += x[i] * points[i].second;
        }
        const double denom = double(n) * sxx - sx * sx;
        fit.n = (double(n) * sxy - sx * sy) / denom;
        fit.pl0_db = (sy - fit.n * sx) / double(n);
    } else {
        double sxx = 0.0, sxy = 0.0;
        for (size_t i = 0; i < n; ++i) {
            const double y = points[i].second - fixed_pl0_db;
            sxx += x[i] * x[i];
            sxy += x[i] * y;
        }
        if (sxx <= 0.0)
            throw std::invalid_argument("fit_log_distance: no excess-distance leverage at d0");
        fit.n = sxy / sxx;
        fit.pl0_db = fixed_pl0_db;
    }

    double ssr = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double r = points[i].second - (fit.pl0_db + fit.n * x[i]);
        ssr += r * r;
    }
    fit.sigma_db = std::sqrt(ssr / double(n));
    return fit;
}

DistributionFit fit_distribution(std::span<const double> samples, DistributionFamily family) {
    if (samples.size() < 2)
        throw std::invalid_argument("fit_distribution: need at least two samples");

    DistributionFit fit;
    fit.family = family;
    const double mean =
        std::accumulate(samples.begin(), samples.end(), 0.0) / double(samples.size());

    if (family == DistributionFamily::normal) {
        double ss = 0.0;
        for (double v : samples) ss += (v - mean) * (v - mean);
        fit.mu = mean;
        fit.sigma = std::sqrt(ss / double(samples.size()));
    } else {
        for (double v : samples)
            if (v < 0.0)
                throw std::domain_error("fit_distribution: exponential family requires "
                                        "non-negative samples");
        if (mean <= 0.0)
            throw std::domain_error("fit_distribution: exponential mean must be positive");
        fit.beta = mean;
    }
    return fit;
}

std::vector<std::pair<double, double>> empirical_cdf(std::span<const double> samples) {
    if (samples.empty()) throw std::invalid_argument("empirical_cdf: no samples");
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());

    std::vector<std::pair<double, double>> cdf;
    const double n = double(sorted.size());
    for (size_t i = 0; i < sorted.size(); ++i) {
        if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
        cdf.emplace_back(sorted[i], double(i + 1) / n);
    }
    return cdf;
}

double GainCurveFit::evaluate(double gain) const {
    if (form == GainCurveForm::quadratic)
        return coefficients[0] * gain * gain + coefficients[1] * gain + coefficients[2];
    return coefficients[0] * std::exp(coefficients[1] * gain) +
           coefficients[2] * std::exp(coefficients[3] * gain);
}

GainCurveFit fit_gain_curve(std::span<const std::pair<double, double>> points,
                            GainCurveForm form, const GainCurveOptions& options) {
    const size_t need = form == GainCurveForm::quadratic ? 3 : 4;
    if (points.size() < need)
        throw std::invalid_argument("fit_gain_curve: not enough points for the chosen form");

    GainCurveFit fit;
    fit.form = form;
    fit.n_points = points.size();

    if (form == GainCurveForm::quadratic) {
        // Center and scale the abscissa before the closed-form solve, then
        // expand the coefficients back; the expansion is exact algebra.
        double gm = 0.0;
        for (const auto& [g, y] : points) {
            (void)y;
            gm += g;
        }
        gm /= double(points.size());
        double gs = 0.0;
        for (const auto& [g, y] : points) {
            (void)y;
            gs = std::max(gs, std::abs(g - gm));
        }
        if (gs == 0.0) throw std::invalid_argument("fit_gain_curve: all gains identical");

        std::array<std::array<double, 3>, 3> ata{};
        std::array<double, 3> aty{0.0, 0.0, 0.0};
        for (const auto& [g, y] : points) {
            const double u = (g - gm) / gs;
            const std::array<double, 3> row{u * u, u, 1.0};
            for (size_t i = 0; i < 3; ++i) {
                aty[i] += row[i] * y;
                for (size_t j = 0; j < 3; ++j) ata[i][j] += row[i] * row[j];
            }
        }
        if (!solve_linear(ata, aty))
            throw std::invalid_argument("fit_gain_curve: singular quadratic design");
        const double au = aty[0], bu = aty[1], cu = aty[2];
        const double a = au / (gs * gs);
        const double b = bu / gs - 2.0 * au * gm / (gs * gs);
        const double c = au * gm * gm / (gs * gs) - bu * gm / gs + cu;
        fit.coefficients = {a, b, c};
    } else {
        const auto starts =
            options.rate_starts.empty() ? default_rate_starts() : options.rate_starts;

        bool any = false;
        TwoExpCandidate best{};
        best.ssr = std::numeric_limits<double>::infinity();
        double best_seen_rmse = std::numeric_limits<double>::infinity();

        for (const auto& [b0, d0] : starts) {
            double a0 = 0.0, c0 = 0.0;
            if (!solve_amplitudes(b0, d0, points, a0, c0)) continue;
            auto cand = refine_two_exp({a0, b0, c0, d0}, points, options);
            if (std::isfinite(cand.ssr))
                best_seen_rmse =
                    std::min(best_seen_rmse, std::sqrt(cand.ssr / double(points.size())));
            if (!cand.converged || !std::isfinite(cand.ssr)) continue;

            // Canonical ordering: larger rate first.
            if (cand.params[1] < cand.params[3])
                cand.params = {cand.params[2], cand.params[3], cand.params[0], cand.params[1]};

            const bool better =
                cand.ssr < best.ssr * (1.0 - 1e-12) ||
                (std::abs(cand.ssr - best.ssr) <= 1e-12 * std::max(cand.ssr, best.ssr) &&
                 std::lexicographical_compare(cand.params.begin(), cand.params.end(),
                                              best.params.begin(), best.params.end()));
            if (!any || better) {
                best = cand;
                any = true;
            }
        }
        if (!any)
            throw FitError("fit_gain_curve: two-exponential fit did not converge from any start",
                           best_seen_rmse);
        fit.coefficients.assign(best.params.begin(), best.params.end());
    }

    double ssr = 0.0;
    for (const auto& [g, y] : points) {
        const double r = fit.evaluate(g) - y;
        ssr += r * r;
    }
    fit.rmse = std::sqrt(ssr / double(points.size()));
    return fit;
}

} // namespace subthz
