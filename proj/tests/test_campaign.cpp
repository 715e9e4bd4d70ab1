#include "doctest.h"

#include <sstream>
#include <filesystem>
#include <fstream>

#include "subthz/campaign.hpp"
#include "subthz/io.hpp"

using namespace subthz;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "subthz_campaign_tests" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("campaign validation") {
    CampaignConfig cfg;
    cfg.output_dir = fresh_dir("validate");
    CHECK_NOTHROW(cfg.validate());

    CampaignConfig bad = cfg;
    bad.realizations = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = cfg;
    bad.gains_dbi.clear();
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = cfg;
    bad.distances_m = {20.0};  // outside the 10x10 room
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = cfg;
    bad.output_dir.clear();
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("campaign emits the documented file set with the expected counts") {
    CampaignConfig cfg;
    cfg.output_dir = fresh_dir("counts");
    cfg.seed = 11;
    cfg.realizations = 100;  // 4 gains x 8 distances x 100 realizations

    const auto report = run_campaign(cfg);
    CHECK(report.cir_records == 3200);
    CHECK(report.log_distance_fits == 4);
    CHECK(report.gain_curve_fits == 3);

    for (const char* name :
         {"cirs.jsonl", "metrics.csv", "fits.json", "summary.json", "cdf_k_g15.csv",
          "cdf_ds_g21.csv", "cdf_as_g25.csv", "cdf_k_g38.csv"})
        CHECK(std::filesystem::exists(cfg.output_dir / name));

    const auto ingested = ingest_cir_dataset(cfg.output_dir / "cirs.jsonl");
    CHECK(ingested.records.size() == 3200);
    CHECK(ingested.issues.empty());

    const auto metrics = read_metrics_csv(cfg.output_dir / "metrics.csv");
    CHECK(metrics.size() == 3200);

    // summary is valid JSON and echoes the counts
    const auto summary = slurp(cfg.output_dir / "summary.json");
    CHECK(summary.find("\"cir_records\": 3200") != std::string::npos);
    CHECK(summary.find("\"gain_curves_vs_model\"") != std::string::npos);
}

TEST_CASE("campaign outputs are a pure function of config and seed") {
    CampaignConfig cfg;
    cfg.gains_dbi = {15.0, 25.0};
    cfg.distances_m = {1.0, 3.0, 6.0};
    cfg.realizations = 40;
    cfg.seed = 77;

    cfg.output_dir = fresh_dir("det1");
    run_campaign(cfg);
    auto cfg2 = cfg;
    cfg2.output_dir = fresh_dir("det2");
    cfg2.threads = 1;  // worker count must not affect the bytes
    run_campaign(cfg2);

    for (const char* name : {"cirs.jsonl", "metrics.csv", "fits.json", "summary.json",
                             "cdf_k_g15.csv", "cdf_ds_g25.csv"}) {
        CHECK(slurp(cfg.output_dir / name) == slurp(cfg2.output_dir / name));
    }

    // a different seed changes the data
    auto cfg3 = cfg;
    cfg3.output_dir = fresh_dir("det3");
    cfg3.seed = 78;
    run_campaign(cfg3);
    CHECK(slurp(cfg.output_dir / "cirs.jsonl") != slurp(cfg3.output_dir / "cirs.jsonl"));
}

TEST_CASE("campaign config from key=value text") {
    const auto kv = parse_kv_text("gains = 15,38\n"
                                  "distances = 1,2,4\n"
                                  "realizations = 7\n"
                                  "seed = 99\n"
                                  "los = false\n"
                                  "output_dir = /tmp/subthz_campaign_tests/kv\n"
                                  "pl0_mode = free\n"
                                  "k_sigma_db = 2.5\n");
    const auto cfg = campaign_config_from_kv(kv);
    CHECK(cfg.gains_dbi == std::vector<double>{15.0, 38.0});
    CHECK(cfg.distances_m == std::vector<double>{1.0, 2.0, 4.0});
    CHECK(cfg.realizations == 7);
    CHECK(cfg.seed == 99);
    CHECK_FALSE(cfg.base.los);
    CHECK(cfg.pl0_mode == Pl0Mode::free);
    CHECK(cfg.synthesis.k_sigma_db == 2.5);

    CHECK_THROWS_WITH_AS(campaign_config_from_kv(parse_kv_text("bogus_key = 1\n")),
                         doctest::Contains("unknown key"), std::runtime_error);
}
