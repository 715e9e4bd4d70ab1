#include "subthz/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace subthz {

namespace {

using nlohmann::json;

std::string fmt(const char* format, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), format, v);
    return buf;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = {}) {
    std::ofstream out(path, std::ios::binary | mode);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    return out;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = {}) {
    std::ifstream in(path, std::ios::binary | mode);
    if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
    return in;
}

double require_number(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number())
        throw std::runtime_error(std::string("missing or non-numeric field '") + key + "'");
    const double v = j[key].get<double>();
    if (!std::isfinite(v))
        throw std::runtime_error(std::string("field '") + key + "' is not finite");
    return v;
}

CirRecord record_from_json(const json& j) {
    if (!j.is_object()) throw std::runtime_error("record is not a JSON object");

    CirRecord rec;
    if (!j.contains("scenario_id") || !j["scenario_id"].is_string())
        throw std::runtime_error("missing or non-string field 'scenario_id'");
    rec.scenario_id = j["scenario_id"].get<std::string>();

    rec.distance_m = require_number(j, "distance_m");
    if (rec.distance_m <= 0.0) throw std::runtime_error("distance_m must be positive");
    rec.rx_gain_dbi = require_number(j, "rx_gain_dbi");
    if (rec.rx_gain_dbi <= 0.0) throw std::runtime_error("rx_gain_dbi must be positive");
    rec.rotation_deg = require_number(j, "rotation_deg");
    rec.time_step_ns = require_number(j, "time_step_ns");
    if (rec.time_step_ns <= 0.0) throw std::runtime_error("time_step_ns must be positive");

    if (!j.contains("noise_floor_db"))
        throw std::runtime_error("missing field 'noise_floor_db'");
    if (j["noise_floor_db"].is_null())
        rec.noise_floor_db = -std::numeric_limits<double>::infinity();
    else if (j["noise_floor_db"].is_number())
        rec.noise_floor_db = j["noise_floor_db"].get<double>();
    else
        throw std::runtime_error("field 'noise_floor_db' must be a number or null");

    if (!j.contains("taps") || !j["taps"].is_array() || j["taps"].empty())
        throw std::runtime_error("field 'taps' must be a non-empty array");
    for (const auto& t : j["taps"]) {
        MultipathTap tap;
        tap.delay_ns = require_number(t, "delay_ns");
        tap.power_db = require_number(t, "power_db");  // finite dB implies power > 0
        tap.aoa_deg = require_number(t, "aoa_deg");
        if (tap.aoa_deg < 0.0 || tap.aoa_deg >= 360.0)
            throw std::runtime_error("tap aoa_deg outside [0, 360)");
        rec.taps.push_back(tap);
    }
    return rec;
}

} // namespace

std::string cir_record_to_json_line(const CirRecord& record) {
    json taps = json::array();
    for (const auto& t : record.taps)
        taps.push_back({{"aoa_deg", t.aoa_deg}, {"delay_ns", t.delay_ns}, {"power_db", t.power_db}});
    json j{{"scenario_id", record.scenario_id},
           {"distance_m", record.distance_m},
           {"rx_gain_dbi", record.rx_gain_dbi},
           {"rotation_deg", record.rotation_deg},
           {"time_step_ns", record.time_step_ns},
           {"taps", std::move(taps)}};
    // non-finite doubles serialize as null, which is the "never sounded" marker
    j["noise_floor_db"] = record.noise_floor_db;
    return j.dump();
}

void write_cir_jsonl(const std::filesystem::path& path, std::span<const CirRecord> records) {
    auto out = open_out(path);
    for (const auto& rec : records) out << cir_record_to_json_line(rec) << '\n';
}

IngestResult ingest_cir_dataset(const std::filesystem::path& path, bool partial) {
    auto in = open_in(path);
    IngestResult result;
    std::string line;
    size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        try {
            const json j = json::parse(line);
            result.records.push_back(record_from_json(j));
        } catch (const std::exception& e) {
            result.issues.push_back({line_number, e.what()});
        }
    }
    if (!partial && !result.issues.empty()) {
        std::ostringstream msg;
        msg << "malformed CIR dataset " << path.string() << ":";
        for (const auto& iss : result.issues)
            msg << "\n  line " << iss.line_number << ": " << iss.message;
        throw std::runtime_error(msg.str());
    }
    return result;
}

void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricRecord> records) {
    auto out = open_out(path);
    out << "scenario_id,distance_m,rx_gain_dbi,los,path_loss_db,k_factor_db,"
           "rms_ds_ns,mean_delay_ns,rms_as_deg,mean_aoa_deg\n";
    for (const auto& r : records) {
        std::string id = r.scenario_id;
        std::replace(id.begin(), id.end(), ',', '_');
        out << id << ',' << fmt("%.3f", r.distance_m) << ',' << fmt("%.2f", r.rx_gain_dbi) << ','
            << (r.los ? '1' : '0') << ',' << fmt("%.2f", r.path_loss_db) << ','
            << fmt("%.2f", r.k_factor_db) << ',' << fmt("%.3f", r.rms_ds_ns) << ','
            << fmt("%.3f", r.mean_delay_ns) << ',' << fmt("%.2f", r.rms_as_deg) << ','
            << fmt("%.2f", r.mean_aoa_deg) << '\n';
    }
}

std::vector<MetricRecord> read_metrics_csv(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("empty metrics CSV: " + path.string());

    std::vector<MetricRecord> records;
    size_t line_number = 1;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string col;
        while (std::getline(ss, col, ',')) cols.push_back(col);
        if (cols.size() != 10)
            throw std::runtime_error("metrics CSV line " + std::to_string(line_number) +
                                     ": expected 10 columns");
        MetricRecord r;
        r.scenario_id = cols[0];
        r.distance_m = std::stod(cols[1]);
        r.rx_gain_dbi = std::stod(cols[2]);
        r.los = cols[3] == "1";
        r.path_loss_db = std::stod(cols[4]);
        r.k_factor_db = std::stod(cols[5]);
        r.rms_ds_ns = std::stod(cols[6]);
        r.mean_delay_ns = std::stod(cols[7]);
        r.rms_as_deg = std::stod(cols[8]);
        r.mean_aoa_deg = std::stod(cols[9]);
        records.push_back(std::move(r));
    }
    return records;
}

void write_cdf_csv(const std::filesystem::path& path,
                   std::span<const std::pair<double, double>> cdf) {
    auto out = open_out(path);
    out << "value,probability\n";
    for (const auto& [v, p] : cdf) out << fmt("%.9g", v) << ',' << fmt("%.9g", p) << '\n';
}

std::string gain_curve_fit_to_json(const GainCurveFit& fit) {
    json j{{"form", fit.form == GainCurveForm::quadratic ? "quadratic" : "two_exponential"},
           {"coefficients", fit.coefficients},
           {"rmse", fit.rmse},
           {"n_points", fit.n_points}};
    return j.dump();
}

std::string log_distance_fit_to_json(const LogDistanceFit& fit, size_t n_points) {
    json j{{"form", "log_distance"},
           {"pl0_db", fit.pl0_db},
           {"n", fit.n},
           {"sigma_db", fit.sigma_db},
           {"n_points", n_points}};
    return j.dump();
}

std::string distribution_fit_to_json(const DistributionFit& fit, size_t n_points) {
    json j;
    j["n_points"] = n_points;
    if (fit.family == DistributionFamily::normal) {
        j["form"] = "normal";
        j["mu"] = fit.mu;
        j["sigma"] = fit.sigma;
    } else {
        j["form"] = "exponential";
        j["beta"] = fit.beta;
    }
    return j.dump();
}

void write_profile_bin(const std::filesystem::path& base_path, const ChannelImpulseResponse& cir,
                       const std::string& scenario_id) {
    static_assert(sizeof(float) == 4);
    auto bin_path = base_path;
    bin_path += ".bin";
    auto out = open_out(bin_path);
    for (const auto& v : cir.profile) {
        const float re = float(v.real());
        const float im = float(v.imag());
        out.write(reinterpret_cast<const char*>(&re), 4);
        out.write(reinterpret_cast<const char*>(&im), 4);
    }
    out.close();

    json j{{"dtype", "complex64"},
           {"byte_order", "little"},
           {"n_samples", cir.profile.size()},
           {"time_step_ns", cir.time_step_ns},
           {"lag0_index", cir.lag0_index},
           {"samples_per_chip", cir.samples_per_chip},
           {"noise_floor_db", cir.noise_floor_db},
           {"scenario_id", scenario_id}};
    auto sidecar_path = base_path;
    sidecar_path += ".json";
    open_out(sidecar_path) << j.dump(2) << '\n';
}

ChannelImpulseResponse read_profile_bin(const std::filesystem::path& base_path) {
    auto sidecar_path = base_path;
    sidecar_path += ".json";
    json j;
    open_in(sidecar_path) >> j;
    if (j.value("dtype", "") != "complex64" || j.value("byte_order", "") != "little")
        throw std::runtime_error("unsupported profile encoding in " + sidecar_path.string());

    ChannelImpulseResponse cir;
    cir.time_step_ns = j.at("time_step_ns").get<double>();
    cir.lag0_index = j.at("lag0_index").get<int>();
    cir.samples_per_chip = j.value("samples_per_chip", 4);
    cir.noise_floor_db = j.at("noise_floor_db").is_null()
                             ? -std::numeric_limits<double>::infinity()
                             : j.at("noise_floor_db").get<double>();
    const size_t n = j.at("n_samples").get<size_t>();

    auto bin_path = base_path;
    bin_path += ".bin";
    auto in = open_in(bin_path);
    cir.profile.resize(n);
    for (size_t i = 0; i < n; ++i) {
        float re = 0.0f, im = 0.0f;
        in.read(reinterpret_cast<char*>(&re), 4);
        in.read(reinterpret_cast<char*>(&im), 4);
        if (!in) throw std::runtime_error("profile binary truncated: " + bin_path.string());
        cir.profile[i] = cplx(re, im);
    }
    return cir;
}

std::map<std::string, std::string> parse_kv_text(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    size_t line_number = 0;
    const auto trim = [](std::string s) {
        const auto is_space = [](unsigned char c) { return std::isspace(c); };
        while (!s.empty() && is_space(s.front())) s.erase(s.begin());
        while (!s.empty() && is_space(s.back())) s.pop_back();
        return s;
    };
    while (std::getline(in, line)) {
        ++line_number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line " + std::to_string(line_number) +
                                     ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw std::runtime_error("config line " + std::to_string(line_number) + ": empty key");
        kv[key] = value;
    }
    return kv;
}

std::map<std::string, std::string> parse_kv_file(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_kv_text(buf.str());
}

double kv_get_double(const std::map<std::string, std::string>& kv, const std::string& key,
                     double fallback) {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    try {
        size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("config key '" + key + "': cannot parse number from '" +
                                 it->second + "'");
    }
}

bool kv_get_bool(const std::map<std::string, std::string>& kv, const std::string& key,
                 bool fallback) {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::runtime_error("config key '" + key + "': expected a boolean, got '" + v + "'");
}

std::vector<double> kv_get_list(const std::map<std::string, std::string>& kv,
                                const std::string& key, std::vector<double> fallback) {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    std::vector<double> values;
    std::stringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            values.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw std::runtime_error("config key '" + key + "': cannot parse list item '" + item +
                                     "'");
        }
    }
    if (values.empty())
        throw std::runtime_error("config key '" + key + "': empty list");
    return values;
}

Scenario scenario_from_kv(const std::map<std::string, std::string>& kv) {
    Scenario sc;
    if (auto it = kv.find("id"); it != kv.end()) sc.id = it->second;
    sc.carrier_frequency_hz = kv_get_double(kv, "carrier_frequency_hz", sc.carrier_frequency_hz);
    sc.tx_power_dbm = kv_get_double(kv, "tx_power_dbm", sc.tx_power_dbm);
    sc.tx_gain_dbi = kv_get_double(kv, "tx_gain_dbi", sc.tx_gain_dbi);
    sc.rx_gain_dbi = kv_get_double(kv, "rx_gain_dbi", sc.rx_gain_dbi);
    sc.rx_beamwidth_deg = kv_get_double(kv, "rx_beamwidth_deg", sc.rx_beamwidth_deg);
    sc.distance_m = kv_get_double(kv, "distance_m", sc.distance_m);
    sc.los = kv_get_bool(kv, "los", sc.los);
    sc.room_width_m = kv_get_double(kv, "room_width_m", sc.room_width_m);
    sc.room_depth_m = kv_get_double(kv, "room_depth_m", sc.room_depth_m);
    sc.tx_height_m = kv_get_double(kv, "tx_height_m", sc.tx_height_m);
    sc.rx_height_m = kv_get_double(kv, "rx_height_m", sc.rx_height_m);
    return sc;
}

} // namespace subthz
