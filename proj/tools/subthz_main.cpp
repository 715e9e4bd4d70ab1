// subthz: sub-THz indoor channel sounding and modeling toolkit.
//
// Subcommands: sound (single-link sounder simulation), synth (ensemble
// generation), estimate (metrics from CIR files), fit (distribution and
// gain-curve fits), beam (Gaussian-beam tables), campaign (full pipeline),
// eval (closed-form model evaluation).

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "subthz/beam.hpp"
#include "subthz/campaign.hpp"
#include "subthz/channel_model.hpp"
#include "subthz/io.hpp"
#include "subthz/metrics.hpp"
#include "subthz/rng.hpp"
#include "subthz/sounding.hpp"

namespace {

using namespace subthz;

std::filesystem::path default_output_dir() {
    if (const char* env = std::getenv("SUBTHZ_OUTPUT_DIR")) return env;
    return ".";
}

std::vector<MultipathTap> parse_taps(const std::string& spec) {
    std::vector<MultipathTap> taps;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ';')) {
        if (item.empty()) continue;
        MultipathTap tap;
        std::stringstream fs(item);
        std::string field;
        int idx = 0;
        while (std::getline(fs, field, ':')) {
            const double v = std::stod(field);
            if (idx == 0) tap.delay_ns = v;
            else if (idx == 1) tap.power_db = v;
            else if (idx == 2) tap.aoa_deg = v;
            else throw std::runtime_error("tap spec has too many fields: " + item);
            ++idx;
        }
        if (idx < 2) throw std::runtime_error("tap spec needs delay_ns:power_db[:aoa_deg]");
        taps.push_back(tap);
    }
    if (taps.empty()) throw std::runtime_error("no taps parsed from '" + spec + "'");
    return taps;
}

CirRecord record_from_cir(const ChannelImpulseResponse& cir, const std::string& id,
                          double distance_m, double rx_gain_dbi) {
    CirRecord rec;
    rec.scenario_id = id;
    rec.distance_m = distance_m;
    rec.rx_gain_dbi = rx_gain_dbi;
    rec.time_step_ns = cir.time_step_ns;
    rec.taps = cir.taps;
    rec.noise_floor_db = cir.noise_floor_db;
    return rec;
}

MetricRecord metrics_for(const CirRecord& rec, double tx_power_dbm, double tx_gain_dbi,
                         bool los) {
    MetricRecord m;
    m.scenario_id = rec.scenario_id;
    m.distance_m = rec.distance_m;
    m.rx_gain_dbi = rec.rx_gain_dbi;
    m.los = los;
    m.path_loss_db = path_loss_db(rec.taps, tx_power_dbm, tx_gain_dbi, rec.rx_gain_dbi);
    m.k_factor_db = k_factor(rec.taps);
    const auto ds = rms_delay_spread(rec.taps);
    m.rms_ds_ns = ds.rms_ns;
    m.mean_delay_ns = ds.mean_ns;
    const auto as = rms_angular_spread(rec.taps);
    m.rms_as_deg = as.rms_deg;
    m.mean_aoa_deg = as.mean_deg;
    return m;
}

int cmd_sound(const std::string& taps_spec, double snr_db, uint64_t seed, double dynamic_range,
              const SoundingConfig& cfg, const std::filesystem::path& out,
              const std::string& profile_base, double distance_m, double rx_gain_dbi) {
    const auto taps = parse_taps(taps_spec);
    const auto cir = sound_channel(taps, cfg, snr_db, seed, dynamic_range);

    const auto rec = record_from_cir(cir, "sound", distance_m, rx_gain_dbi);
    std::vector<CirRecord> records{rec};
    write_cir_jsonl(out, records);
    if (!profile_base.empty()) write_profile_bin(profile_base, cir, rec.scenario_id);

    std::printf("frame synchronized; %zu taps detected, noise floor %.2f dB\n", cir.taps.size(),
                cir.noise_floor_db);
    for (const auto& t : cir.taps)
        std::printf("  delay %+8.3f ns   power %8.2f dB\n", t.delay_ns, t.power_db);
    std::printf("wrote %s\n", out.string().c_str());
    return 0;
}

int cmd_synth(const Scenario& scenario, int realizations, uint64_t seed,
              const SynthesisConfig& synth_cfg, const std::filesystem::path& out) {
    ChannelSynthesizer synth(synth_cfg);
    if (!gain_in_calibrated_range(scenario.rx_gain_dbi))
        std::fprintf(stderr,
                     "warning: rx gain %.2f dBi outside the calibrated range [15, 38]; "
                     "model curves are extrapolated\n",
                     scenario.rx_gain_dbi);

    std::vector<CirRecord> records;
    records.reserve(size_t(realizations));
    const double grid_ns = SoundingConfig{}.time_step_ns();
    for (int r = 0; r < realizations; ++r) {
        const auto real = synth.realize(scenario, mix_seed(seed, 0, 0, uint64_t(r)));
        CirRecord rec;
        rec.scenario_id = scenario.id + "_r" + std::to_string(r);
        rec.distance_m = scenario.distance_m;
        rec.rx_gain_dbi = scenario.rx_gain_dbi;
        rec.time_step_ns = grid_ns;
        rec.taps = real.taps;
        records.push_back(std::move(rec));
    }
    write_cir_jsonl(out, records);
    std::printf("wrote %zu realizations to %s\n", records.size(), out.string().c_str());
    return 0;
}

int cmd_estimate(const std::filesystem::path& in, const std::filesystem::path& out,
                 double tx_power_dbm, double tx_gain_dbi, bool los, bool partial) {
    const auto ingest = ingest_cir_dataset(in, partial);
    for (const auto& iss : ingest.issues)
        std::fprintf(stderr, "skipping line %zu: %s\n", iss.line_number, iss.message.c_str());

    std::vector<MetricRecord> metrics;
    metrics.reserve(ingest.records.size());
    for (const auto& rec : ingest.records)
        metrics.push_back(metrics_for(rec, tx_power_dbm, tx_gain_dbi, los));
    write_metrics_csv(out, metrics);
    std::printf("wrote %zu metric records to %s\n", metrics.size(), out.string().c_str());
    return 0;
}

int cmd_fit(const std::filesystem::path& metrics_path, const std::filesystem::path& out,
            const std::string& cdf_dir, Pl0Mode pl0_mode, double frequency_hz) {
    const auto records = read_metrics_csv(metrics_path);
    if (records.empty()) throw std::runtime_error("metrics file has no records");

    std::vector<double> gains;
    for (const auto& r : records)
        if (std::find(gains.begin(), gains.end(), r.rx_gain_dbi) == gains.end())
            gains.push_back(r.rx_gain_dbi);
    std::sort(gains.begin(), gains.end());

    nlohmann::json fits;
    fits["log_distance"] = nlohmann::json::array();
    fits["distributions"] = nlohmann::json::array();
    fits["gain_curves"] = nlohmann::json::array();

    std::vector<std::pair<double, double>> ple_points, k_points, ds_points;
    for (double g : gains) {
        std::vector<double> k, ds, as;
        std::vector<std::pair<double, double>> pl;
        for (const auto& r : records) {
            if (r.rx_gain_dbi != g) continue;
            if (std::isfinite(r.k_factor_db)) k.push_back(r.k_factor_db);
            ds.push_back(r.rms_ds_ns);
            as.push_back(r.rms_as_deg);
            pl.emplace_back(r.distance_m, r.path_loss_db);
        }
        // the log-distance fit needs distance diversity; a single-position
        // ensemble still gets its distribution fits
        std::vector<double> distances;
        for (const auto& [d, y] : pl) {
            (void)y;
            if (std::find(distances.begin(), distances.end(), d) == distances.end())
                distances.push_back(d);
        }
        if (distances.size() >= 2) {
            const auto ld = fit_log_distance(pl, pl0_mode, friis_pl0_db(frequency_hz));
            auto entry = nlohmann::json::parse(log_distance_fit_to_json(ld, pl.size()));
            entry["gain_dbi"] = g;
            fits["log_distance"].push_back(entry);
            ple_points.emplace_back(g, ld.n);
        } else {
            std::fprintf(stderr,
                         "note: gain %g has a single measurement distance; skipping the "
                         "log-distance fit\n",
                         g);
        }

        const auto k_fit = fit_distribution(k, DistributionFamily::normal);
        const auto ds_fit = fit_distribution(ds, DistributionFamily::exponential);
        const auto as_fit = fit_distribution(as, DistributionFamily::normal);
        for (const auto& [metric, f, n] : {std::tuple{"k_factor_db", k_fit, k.size()},
                                           std::tuple{"rms_ds_ns", ds_fit, ds.size()},
                                           std::tuple{"rms_as_deg", as_fit, as.size()}}) {
            auto d = nlohmann::json::parse(distribution_fit_to_json(f, n));
            d["gain_dbi"] = g;
            d["metric"] = metric;
            fits["distributions"].push_back(d);
        }
        k_points.emplace_back(g, k_fit.mu);
        ds_points.emplace_back(g, ds_fit.beta);

        if (!cdf_dir.empty()) {
            std::filesystem::create_directories(cdf_dir);
            std::ostringstream tag;
            tag << g;
            write_cdf_csv(std::filesystem::path(cdf_dir) / ("cdf_k_g" + tag.str() + ".csv"),
                          empirical_cdf(k));
            write_cdf_csv(std::filesystem::path(cdf_dir) / ("cdf_ds_g" + tag.str() + ".csv"),
                          empirical_cdf(ds));
            write_cdf_csv(std::filesystem::path(cdf_dir) / ("cdf_as_g" + tag.str() + ".csv"),
                          empirical_cdf(as));
        }
    }

    if (ple_points.size() >= 4) {
        auto f = fit_gain_curve(ple_points, GainCurveForm::two_exponential);
        auto entry = nlohmann::json::parse(gain_curve_fit_to_json(f));
        entry["metric"] = "ple";
        fits["gain_curves"].push_back(entry);
    }
    if (gains.size() >= 3) {
        for (const auto& [metric, pts] :
             {std::pair{"k_factor_db", &k_points}, std::pair{"rms_ds_ns", &ds_points}}) {
            auto f = fit_gain_curve(*pts, GainCurveForm::quadratic);
            auto entry = nlohmann::json::parse(gain_curve_fit_to_json(f));
            entry["metric"] = metric;
            fits["gain_curves"].push_back(entry);
        }
    }

    std::ofstream os(out, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + out.string());
    os << fits.dump(2) << '\n';
    std::printf("wrote fit report to %s\n", out.string().c_str());
    return 0;
}

int cmd_beam(double gain_dbi, double waist_m, double efficiency, double frequency_hz,
             double z_min, double z_max, int points, double aperture_m,
             const std::filesystem::path& out) {
    const double lambda = kSpeedOfLight / frequency_hz;
    GaussianBeam beam;
    if (waist_m > 0.0) {
        beam.waist_w0 = waist_m;
        beam.wavelength = lambda;
    } else {
        beam = GaussianBeam::from_gain(gain_dbi, efficiency, lambda);
    }
    const ApertureSpec rx{aperture_m, efficiency};

    std::ofstream os(out, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + out.string());
    os << "z_m,w_m,curvature_radius_m,gouy_phase_rad,on_axis_db,coupled_db\n";
    const double on_axis_ref = std::norm(field_at(beam, 0.0, 1.0));
    const double coupled_ref = coupled_power(beam, rx, 1.0).coherent;
    char buf[256];
    for (int i = 0; i < points; ++i) {
        const double z = z_min + (z_max - z_min) * double(i) / double(points - 1);
        const auto geo = beam_geometry(beam, z);
        const double on_axis = std::norm(field_at(beam, 0.0, z));
        const double coupled = coupled_power(beam, rx, z).coherent;
        std::snprintf(buf, sizeof(buf), "%.6g,%.6g,%.6g,%.6g,%.3f,%.3f\n", z, geo.waist_w,
                      geo.curvature_radius, geo.gouy_phase,
                      10.0 * std::log10(on_axis / on_axis_ref),
                      10.0 * std::log10(coupled / coupled_ref));
        os << buf;
    }
    std::printf("beam: w0 = %.4g m, zR = %.4g m; wrote %s\n", beam.waist_w0,
                beam.rayleigh_range(), out.string().c_str());
    return 0;
}

int cmd_eval(double gain_dbi, double distance_m, bool los, double frequency_hz) {
    if (!gain_in_calibrated_range(gain_dbi))
        std::fprintf(stderr,
                     "warning: gain %.2f dBi outside the calibrated range [15, 38]; "
                     "extrapolating\n",
                     gain_dbi);
    std::printf("gain %.2f dBi:\n", gain_dbi);
    std::printf("  ple             %.6f\n", ple_of_gain(gain_dbi));
    std::printf("  k_factor        %.4f dB\n", kfactor_of_gain(gain_dbi));
    std::printf("  rms_ds (LoS)    %.4f ns\n", ds_of_gain(gain_dbi, true));
    std::printf("  rms_ds (NLoS)   %.4f ns\n", ds_of_gain(gain_dbi, false));
    const double bw = beamwidth_for_gain(gain_dbi);
    if (bw > 0.0) std::printf("  beamwidth       %.1f deg\n", bw);
    if (distance_m > 0.0) {
        const LogDistanceModel model{friis_pl0_db(frequency_hz), ple_of_gain(gain_dbi)};
        std::printf("distance %.3f m at %.1f GHz:\n", distance_m, frequency_hz / 1e9);
        std::printf("  friis_pl0       %.4f dB\n", model.pl0_db);
        std::printf("  path loss       %.4f dB (%s model, no shadowing)\n",
                    log_distance_pl_db(distance_m, model), los ? "LoS" : "NLoS");
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"sub-THz indoor channel sounding and modeling toolkit"};
    app.require_subcommand(1);

    try {
        // ---- sound ----
        auto* sound = app.add_subcommand("sound", "simulate one sounder link over a tap channel");
        std::string taps_spec = "0:0";
        double snr_db = 25.0;
        uint64_t seed = 0;
        double dynamic_range = 30.0;
        SoundingConfig scfg;
        std::filesystem::path sound_out = default_output_dir() / "cir.jsonl";
        std::string profile_base;
        sound->add_option("--taps", taps_spec, "channel taps: delay_ns:power_db[:aoa_deg];...");
        sound->add_option("--snr", snr_db, "SNR in dB relative to the strongest tap (inf = none)");
        sound->add_option("--seed", seed, "noise RNG seed")->required();
        sound->add_option("--dynamic-range", dynamic_range, "peak detection dynamic range, dB");
        sound->add_option("--header-degree", scfg.header_degree, "header m-sequence degree");
        sound->add_option("--body-degree", scfg.body_degree, "body m-sequence degree");
        sound->add_option("--repetitions", scfg.body_repetitions, "body repetitions");
        sound->add_option("--chip-rate", scfg.chip_rate_hz, "chip rate in Hz");
        sound->add_option("--rolloff", scfg.rrc_rolloff, "RRC roll-off in (0, 1]");
        sound->add_option("--samples-per-chip", scfg.samples_per_chip, "oversampling factor");
        sound->add_option("--out", sound_out, "output JSON-lines path");
        sound->add_option("--profile", profile_base,
                          "also dump the raw profile to <base>.bin/.json");
        double sound_distance = 1.0, sound_rx_gain = 15.0;
        sound->add_option("--distance", sound_distance, "link distance recorded in the output");
        sound->add_option("--rx-gain", sound_rx_gain, "receive gain recorded in the output");

        // ---- synth ----
        auto* synth = app.add_subcommand("synth", "generate tap-list channel realizations");
        Scenario scenario;
        int realizations = 100;
        uint64_t synth_seed = 0;
        SynthesisConfig synth_cfg;
        std::string scenario_file;
        std::filesystem::path synth_out = default_output_dir() / "taps.jsonl";
        bool nlos = false;
        synth->add_option("--scenario", scenario_file, "key=value scenario preset file");
        synth->add_option("--gain", scenario.rx_gain_dbi, "receive gain in dBi");
        synth->add_option("--distance", scenario.distance_m, "link distance in m");
        synth->add_flag("--nlos", nlos, "non-line-of-sight statistics");
        synth->add_option("--realizations", realizations, "ensemble size");
        synth->add_option("--seed", synth_seed, "ensemble seed")->required();
        synth->add_option("--shadowing-sigma", synth_cfg.shadowing_sigma_db, "shadowing std, dB");
        synth->add_option("--k-sigma", synth_cfg.k_sigma_db, "K-factor std, dB");
        synth->add_option("--scatter-mean", synth_cfg.scatter_count_mean, "mean scatter taps");
        synth->add_option("--out", synth_out, "output JSON-lines path");

        // ---- estimate ----
        auto* estimate = app.add_subcommand("estimate", "compute metrics from a CIR dataset");
        std::filesystem::path est_in, est_out = default_output_dir() / "metrics.csv";
        double tx_power_dbm = 13.0, tx_gain_dbi = 15.0;
        bool est_nlos = false, est_partial = false;
        estimate->add_option("--in", est_in, "CIR JSON-lines input")->required();
        estimate->add_option("--out", est_out, "metric CSV output");
        estimate->add_option("--tx-power", tx_power_dbm, "transmit power, dBm");
        estimate->add_option("--tx-gain", tx_gain_dbi, "transmit gain, dBi");
        estimate->add_flag("--nlos", est_nlos, "label records as NLoS");
        estimate->add_flag("--partial", est_partial, "skip malformed lines instead of failing");

        // ---- fit ----
        auto* fit = app.add_subcommand("fit", "distribution and gain-curve fits from metrics");
        std::filesystem::path fit_in, fit_out = default_output_dir() / "fits.json";
        std::string cdf_dir;
        std::string pl0_mode_str = "fixed_friis";
        double fit_freq = 140e9;
        fit->add_option("--metrics", fit_in, "metric CSV input")->required();
        fit->add_option("--out", fit_out, "fit report JSON output");
        fit->add_option("--cdf-dir", cdf_dir, "also write per-gain CDF tables here");
        fit->add_option("--pl0-mode", pl0_mode_str, "fixed_friis or free");
        fit->add_option("--frequency", fit_freq, "carrier frequency for Friis PL0, Hz");

        // ---- beam ----
        auto* beam = app.add_subcommand("beam", "Gaussian-beam propagation tables");
        double beam_gain = 15.0, beam_waist = 0.0, beam_eff = 0.45, beam_freq = 140e9;
        double z_min = 0.05, z_max = 10.0, aperture = 0.04;
        int beam_points = 200;
        std::filesystem::path beam_out = default_output_dir() / "beam.csv";
        beam->add_option("--gain", beam_gain, "antenna gain in dBi (sets the waist)");
        beam->add_option("--waist", beam_waist, "waist in m (overrides --gain)");
        beam->add_option("--efficiency", beam_eff, "aperture efficiency");
        beam->add_option("--freq", beam_freq, "frequency in Hz");
        beam->add_option("--z-min", z_min, "sweep start, m");
        beam->add_option("--z-max", z_max, "sweep end, m");
        beam->add_option("--points", beam_points, "sweep sample count");
        beam->add_option("--aperture", aperture, "receiver aperture radius, m");
        beam->add_option("--out", beam_out, "output CSV path");

        // ---- campaign ----
        auto* campaign = app.add_subcommand("campaign", "simulate -> estimate -> fit -> report");
        std::string campaign_config;
        std::filesystem::path campaign_out;
        uint64_t campaign_seed = 0;
        std::vector<double> campaign_gains, campaign_distances;
        int campaign_realizations = 0;
        bool campaign_nlos = false;
        campaign->add_option("--config", campaign_config, "key=value campaign config file");
        campaign->add_option("--out", campaign_out, "output directory")->required();
        campaign->add_option("--seed", campaign_seed, "campaign seed")->required();
        campaign->add_option("--gains", campaign_gains, "override gain list, dBi");
        campaign->add_option("--distances", campaign_distances, "override distance grid, m");
        campaign->add_option("--realizations", campaign_realizations,
                             "override realizations per point");
        campaign->add_flag("--nlos", campaign_nlos, "non-line-of-sight statistics");

        // ---- eval ----
        auto* eval = app.add_subcommand("eval", "evaluate the closed-form models");
        double eval_gain = 15.0, eval_distance = 0.0, eval_freq = 140e9;
        bool eval_nlos = false;
        eval->add_option("--gain", eval_gain, "antenna gain in dBi")->required();
        eval->add_option("--distance", eval_distance, "optional link distance, m");
        eval->add_flag("--nlos", eval_nlos, "evaluate the NLoS delay-spread branch");
        eval->add_option("--frequency", eval_freq, "carrier frequency, Hz");

        CLI11_PARSE(app, argc, argv);

        if (sound->parsed())
            return cmd_sound(taps_spec, snr_db, seed, dynamic_range, scfg, sound_out,
                             profile_base, sound_distance, sound_rx_gain);
        if (synth->parsed()) {
            Scenario sc = scenario;
            if (!scenario_file.empty()) {
                sc = scenario_from_kv(parse_kv_file(scenario_file));
                // flags override the preset file
                if (synth->count("--gain")) sc.rx_gain_dbi = scenario.rx_gain_dbi;
                if (synth->count("--distance")) sc.distance_m = scenario.distance_m;
            }
            if (synth->count("--nlos")) sc.los = false;
            sc.rx_beamwidth_deg = beamwidth_for_gain(sc.rx_gain_dbi);
            return cmd_synth(sc, realizations, synth_seed, synth_cfg, synth_out);
        }
        if (estimate->parsed())
            return cmd_estimate(est_in, est_out, tx_power_dbm, tx_gain_dbi, !est_nlos,
                                est_partial);
        if (fit->parsed()) {
            Pl0Mode mode;
            if (pl0_mode_str == "fixed_friis") mode = Pl0Mode::fixed;
            else if (pl0_mode_str == "free") mode = Pl0Mode::free;
            else throw std::runtime_error("--pl0-mode must be fixed_friis or free");
            return cmd_fit(fit_in, fit_out, cdf_dir, mode, fit_freq);
        }
        if (beam->parsed())
            return cmd_beam(beam_gain, beam_waist, beam_eff, beam_freq, z_min, z_max,
                            beam_points, aperture, beam_out);
        if (campaign->parsed()) {
            CampaignConfig cfg;
            if (!campaign_config.empty())
                cfg = campaign_config_from_kv(parse_kv_file(campaign_config));
            cfg.output_dir = campaign_out;
            cfg.seed = campaign_seed;
            if (!campaign_gains.empty()) cfg.gains_dbi = campaign_gains;
            if (!campaign_distances.empty()) cfg.distances_m = campaign_distances;
            if (campaign->count("--realizations")) cfg.realizations = campaign_realizations;
            if (campaign->count("--nlos")) cfg.base.los = false;
            const auto report = run_campaign(cfg);
            std::printf("campaign complete: %zu CIR records, %zu log-distance fits, "
                        "%zu gain-curve fits, %zu files in %s\n",
                        report.cir_records, report.log_distance_fits, report.gain_curve_fits,
                        report.files.size(), cfg.output_dir.string().c_str());
            return 0;
        }
        if (eval->parsed()) return cmd_eval(eval_gain, eval_distance, eval_nlos, eval_freq);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
