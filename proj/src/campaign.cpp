#include "subthz/campaign.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "subthz/io.hpp"
#include "subthz/metrics.hpp"
#include "subthz/rng.hpp"

namespace subthz {

namespace {

using nlohmann::json;

std::string format_gain(double g) {
    std::ostringstream ss;
    ss << g;
    return ss.str();
}

std::string point_id(const Scenario& base, double gain, double distance, int realization) {
    std::ostringstream ss;
    ss << base.id << "_g" << gain << "_d" << distance << "_r" << realization;
    return ss.str();
}

double quantize_angle(double aoa_deg, double step_deg) {
    if (step_deg <= 0.0) return aoa_deg;
    double q = std::round(aoa_deg / step_deg) * step_deg;
    q = std::fmod(q, 360.0);
    if (q < 0.0) q += 360.0;
    return q;
}

} // namespace

void CampaignConfig::validate() const {
    base.validate();
    if (gains_dbi.empty()) throw std::invalid_argument("campaign: gain list is empty");
    for (double g : gains_dbi)
        if (g <= 0.0) throw std::invalid_argument("campaign: gains must be positive");
    if (distances_m.empty()) throw std::invalid_argument("campaign: distance grid is empty");
    const double diagonal = std::hypot(base.room_width_m, base.room_depth_m);
    for (double d : distances_m)
        if (d <= 0.0 || d > diagonal)
            throw std::invalid_argument("campaign: distances must lie within the room");
    if (realizations < 1) throw std::invalid_argument("campaign: realizations must be >= 1");
    if (output_dir.empty()) throw std::invalid_argument("campaign: output directory not set");
}

CampaignReport run_campaign(const CampaignConfig& cfg) {
    cfg.validate();
    std::filesystem::create_directories(cfg.output_dir);

    ChannelSynthesizer synth(cfg.synthesis);
    // Warm the decay cache before the parallel section.
    for (double g : cfg.gains_dbi) synth.ds_decay_ns(g, cfg.base.los);

    const double grid_ns = SoundingConfig{}.time_step_ns();
    const size_t n_gains = cfg.gains_dbi.size();
    const size_t n_dist = cfg.distances_m.size();
    const size_t n_real = size_t(cfg.realizations);
    const size_t n_points = n_gains * n_dist * n_real;

    std::vector<CirRecord> records(n_points);
    std::vector<MetricRecord> metrics(n_points);

    const auto run_point = [&](size_t index) {
        const size_t gi = index / (n_dist * n_real);
        const size_t di = (index / n_real) % n_dist;
        const size_t ri = index % n_real;

        Scenario sc = cfg.base;
        sc.rx_gain_dbi = cfg.gains_dbi[gi];
        sc.rx_beamwidth_deg = beamwidth_for_gain(sc.rx_gain_dbi);
        sc.distance_m = cfg.distances_m[di];

        const uint64_t seed = mix_seed(cfg.seed, gi, di, ri);
        const auto real = synth.realize(sc, seed);

        const double step = cfg.rotation_step_deg < 0.0 ? beamwidth_for_gain(sc.rx_gain_dbi)
                                                        : cfg.rotation_step_deg;
        CirRecord rec;
        rec.scenario_id = point_id(cfg.base, sc.rx_gain_dbi, sc.distance_m, int(ri));
        rec.distance_m = sc.distance_m;
        rec.rx_gain_dbi = sc.rx_gain_dbi;
        rec.rotation_deg = 0.0;
        rec.time_step_ns = grid_ns;
        rec.taps = real.taps;
        for (auto& tap : rec.taps) tap.aoa_deg = quantize_angle(tap.aoa_deg, step);

        MetricRecord m;
        m.scenario_id = rec.scenario_id;
        m.distance_m = sc.distance_m;
        m.rx_gain_dbi = sc.rx_gain_dbi;
        m.los = sc.los;
        m.path_loss_db = path_loss_db(rec.taps, sc.tx_power_dbm, sc.tx_gain_dbi, sc.rx_gain_dbi);
        m.k_factor_db = k_factor(rec.taps);
        const auto ds = rms_delay_spread(rec.taps);
        m.rms_ds_ns = ds.rms_ns;
        m.mean_delay_ns = ds.mean_ns;
        const auto as = rms_angular_spread(rec.taps);
        m.rms_as_deg = as.rms_deg;
        m.mean_aoa_deg = as.mean_deg;

        records[index] = std::move(rec);
        metrics[index] = std::move(m);
    };

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const size_t n_workers = cfg.threads > 0 ? size_t(cfg.threads) : size_t(hw);
    if (n_workers <= 1 || n_points < 2 * n_workers) {
        for (size_t i = 0; i < n_points; ++i) run_point(i);
    } else {
        std::vector<std::future<void>> futures;
        const size_t chunk = (n_points + n_workers - 1) / n_workers;
        for (size_t w = 0; w < n_workers; ++w) {
            const size_t lo = w * chunk;
            const size_t hi = std::min(n_points, lo + chunk);
            if (lo >= hi) break;
            futures.push_back(std::async(std::launch::async, [&, lo, hi] {
                for (size_t i = lo; i < hi; ++i) run_point(i);
            }));
        }
        for (auto& f : futures) f.get();
    }

    CampaignReport report;
    const auto emit = [&](const std::filesystem::path& p) { report.files.push_back(p); };

    const auto cir_path = cfg.output_dir / "cirs.jsonl";
    write_cir_jsonl(cir_path, records);
    emit(cir_path);
    report.cir_records = records.size();

    const auto metrics_path = cfg.output_dir / "metrics.csv";
    write_metrics_csv(metrics_path, metrics);
    emit(metrics_path);

    // Per-gain analysis: CDF tables, distribution fits, log-distance fit.
    json fits;
    fits["log_distance"] = json::array();
    fits["distributions"] = json::array();
    fits["gain_curves"] = json::array();

    std::vector<std::pair<double, double>> ple_points, k_points, ds_points;
    json per_gain_summary = json::array();

    for (size_t gi = 0; gi < n_gains; ++gi) {
        const double g = cfg.gains_dbi[gi];
        std::vector<double> k_samples, ds_samples, as_samples;
        std::vector<std::pair<double, double>> pl_points;
        for (size_t i = gi * n_dist * n_real; i < (gi + 1) * n_dist * n_real; ++i) {
            const auto& m = metrics[i];
            if (std::isfinite(m.k_factor_db)) k_samples.push_back(m.k_factor_db);
            ds_samples.push_back(m.rms_ds_ns);
            as_samples.push_back(m.rms_as_deg);
            pl_points.emplace_back(m.distance_m, m.path_loss_db);
        }

        const std::string tag = format_gain(g);
        const auto cdf_k = cfg.output_dir / ("cdf_k_g" + tag + ".csv");
        write_cdf_csv(cdf_k, empirical_cdf(k_samples));
        emit(cdf_k);
        const auto cdf_ds = cfg.output_dir / ("cdf_ds_g" + tag + ".csv");
        write_cdf_csv(cdf_ds, empirical_cdf(ds_samples));
        emit(cdf_ds);
        const auto cdf_as = cfg.output_dir / ("cdf_as_g" + tag + ".csv");
        write_cdf_csv(cdf_as, empirical_cdf(as_samples));
        emit(cdf_as);

        std::vector<double> distinct;
        for (double d : cfg.distances_m)
            if (std::find(distinct.begin(), distinct.end(), d) == distinct.end())
                distinct.push_back(d);

        double fitted_n = std::numeric_limits<double>::quiet_NaN();
        if (distinct.size() >= 2) {
            const double pl0 = friis_pl0_db(cfg.base.carrier_frequency_hz);
            const auto ld = fit_log_distance(pl_points, cfg.pl0_mode, pl0);
            fitted_n = ld.n;
            ++report.log_distance_fits;
            json entry = json::parse(log_distance_fit_to_json(ld, pl_points.size()));
            entry["gain_dbi"] = g;
            fits["log_distance"].push_back(std::move(entry));
        }

        const auto k_fit = fit_distribution(k_samples, DistributionFamily::normal);
        const auto ds_fit = fit_distribution(ds_samples, DistributionFamily::exponential);
        const auto as_fit = fit_distribution(as_samples, DistributionFamily::normal);
        for (const auto& [metric, f, n] :
             {std::tuple{"k_factor_db", k_fit, k_samples.size()},
              std::tuple{"rms_ds_ns", ds_fit, ds_samples.size()},
              std::tuple{"rms_as_deg", as_fit, as_samples.size()}}) {
            json entry = json::parse(distribution_fit_to_json(f, n));
            entry["gain_dbi"] = g;
            entry["metric"] = metric;
            fits["distributions"].push_back(std::move(entry));
        }

        if (std::isfinite(fitted_n)) ple_points.emplace_back(g, fitted_n);
        k_points.emplace_back(g, k_fit.mu);
        ds_points.emplace_back(g, ds_fit.beta);

        json s;
        s["gain_dbi"] = g;
        s["ple_fit"] = fitted_n;  // null when the grid has one distance
        s["ple_model"] = ple_of_gain(g);
        s["k_mean_db"] = k_fit.mu;
        s["k_model_db"] = kfactor_of_gain(g);
        s["ds_mean_ns"] = ds_fit.beta;
        s["ds_model_ns"] = ds_of_gain(g, cfg.base.los);
        per_gain_summary.push_back(std::move(s));
    }

    // Gain-curve regressions across the per-gain estimates, compared with
    // the reference closed forms.
    json curve_summary = json::array();
    const auto push_curve = [&](const char* metric, const GainCurveFit& fit,
                                const std::vector<double>& reference) {
        json entry = json::parse(gain_curve_fit_to_json(fit));
        entry["metric"] = metric;
        fits["gain_curves"].push_back(entry);
        ++report.gain_curve_fits;

        json cmp;
        cmp["metric"] = metric;
        cmp["fitted_coefficients"] = fit.coefficients;
        cmp["reference_coefficients"] = reference;
        cmp["rmse"] = fit.rmse;
        curve_summary.push_back(std::move(cmp));
    };

    if (ple_points.size() >= 4)
        push_curve("ple", fit_gain_curve(ple_points, GainCurveForm::two_exponential),
                   {1.811, 0.001018, -30.15, -0.2437});
    if (k_points.size() >= 3)
        push_curve("k_factor_db", fit_gain_curve(k_points, GainCurveForm::quadratic),
                   {0.03576, -1.246, 32.1});
    if (ds_points.size() >= 3)
        push_curve("rms_ds_ns", fit_gain_curve(ds_points, GainCurveForm::quadratic),
                   cfg.base.los ? std::vector<double>{0.00118, -0.08012, 1.583}
                                : std::vector<double>{0.001444, -0.1964, 6.101});

    const auto fits_path = cfg.output_dir / "fits.json";
    {
        std::ofstream out(fits_path, std::ios::binary);
        out << fits.dump(2) << '\n';
    }
    emit(fits_path);

    // Summary is written last.
    json summary;
    summary["cir_records"] = report.cir_records;
    summary["log_distance_fits"] = report.log_distance_fits;
    summary["gain_curve_fits"] = report.gain_curve_fits;
    summary["gains_dbi"] = cfg.gains_dbi;
    summary["distances_m"] = cfg.distances_m;
    summary["realizations"] = cfg.realizations;
    summary["seed"] = cfg.seed;
    summary["los"] = cfg.base.los;
    summary["per_gain"] = std::move(per_gain_summary);
    summary["gain_curves_vs_model"] = std::move(curve_summary);
    const auto summary_path = cfg.output_dir / "summary.json";
    {
        std::ofstream out(summary_path, std::ios::binary);
        out << summary.dump(2) << '\n';
    }
    emit(summary_path);

    return report;
}

CampaignConfig campaign_config_from_kv(const std::map<std::string, std::string>& kv) {
    static const std::set<std::string> known{
        "id", "carrier_frequency_hz", "tx_power_dbm", "tx_gain_dbi", "rx_gain_dbi",
        "rx_beamwidth_deg", "distance_m", "los", "room_width_m", "room_depth_m",
        "tx_height_m", "rx_height_m", "gains", "distances", "realizations", "seed",
        "output_dir", "rotation_step_deg", "pl0_mode", "shadowing_sigma_db", "k_sigma_db",
        "scatter_count_mean", "k_cap_db", "as_target_mean_deg", "as_target_std_deg",
        "max_scatter_excess_ns"};
    for (const auto& [key, value] : kv) {
        (void)value;
        if (!known.count(key))
            throw std::runtime_error("campaign config: unknown key '" + key + "'");
    }

    CampaignConfig cfg;
    cfg.base = scenario_from_kv(kv);
    cfg.gains_dbi = kv_get_list(kv, "gains", cfg.gains_dbi);
    cfg.distances_m = kv_get_list(kv, "distances", cfg.distances_m);
    cfg.realizations = int(kv_get_double(kv, "realizations", cfg.realizations));
    cfg.seed = uint64_t(kv_get_double(kv, "seed", double(cfg.seed)));
    if (auto it = kv.find("output_dir"); it != kv.end()) cfg.output_dir = it->second;
    cfg.rotation_step_deg = kv_get_double(kv, "rotation_step_deg", cfg.rotation_step_deg);
    if (auto it = kv.find("pl0_mode"); it != kv.end()) {
        if (it->second == "fixed_friis")
            cfg.pl0_mode = Pl0Mode::fixed;
        else if (it->second == "free")
            cfg.pl0_mode = Pl0Mode::free;
        else
            throw std::runtime_error("campaign config: pl0_mode must be fixed_friis or free");
    }
    cfg.synthesis.shadowing_sigma_db =
        kv_get_double(kv, "shadowing_sigma_db", cfg.synthesis.shadowing_sigma_db);
    cfg.synthesis.k_sigma_db = kv_get_double(kv, "k_sigma_db", cfg.synthesis.k_sigma_db);
    cfg.synthesis.scatter_count_mean =
        kv_get_double(kv, "scatter_count_mean", cfg.synthesis.scatter_count_mean);
    cfg.synthesis.k_cap_db = kv_get_double(kv, "k_cap_db", cfg.synthesis.k_cap_db);
    cfg.synthesis.as_target_mean_deg =
        kv_get_double(kv, "as_target_mean_deg", cfg.synthesis.as_target_mean_deg);
    cfg.synthesis.as_target_std_deg =
        kv_get_double(kv, "as_target_std_deg", cfg.synthesis.as_target_std_deg);
    cfg.synthesis.max_scatter_excess_ns =
        kv_get_double(kv, "max_scatter_excess_ns", cfg.synthesis.max_scatter_excess_ns);
    return cfg;
}

} // namespace subthz
