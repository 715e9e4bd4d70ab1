#include "doctest.h"

#include <stdexcept>
#include <cmath>

#include "subthz/metrics.hpp"
#include "subthz/rng.hpp"

using namespace subthz;

namespace {

std::vector<MultipathTap> random_taps(Rng& rng, int count) {
    std::vector<MultipathTap> taps(static_cast<size_t>(count));
    for (auto& t : taps) {
        t.delay_ns = rng.uniform(0.0, 40.0);
        t.power_db = rng.uniform(-30.0, 0.0);
        t.aoa_deg = rng.uniform(0.0, 359.0);
    }
    return taps;
}

} // namespace

TEST_CASE("k-factor hand values") {
    const std::vector<MultipathTap> k10{MultipathTap::from_linear(0.0, 1.0),
                                        MultipathTap::from_linear(1.0, 0.05),
                                        MultipathTap::from_linear(2.0, 0.05)};
    CHECK(k_factor(k10) == doctest::Approx(10.0).epsilon(1e-12));

    const std::vector<MultipathTap> equal{MultipathTap::from_linear(0.0, 0.3),
                                          MultipathTap::from_linear(1.0, 0.3)};
    CHECK(k_factor(equal) == doctest::Approx(0.0).epsilon(1e-12));

    const std::vector<MultipathTap> single{MultipathTap::from_linear(0.0, 1.0)};
    CHECK(std::isinf(k_factor(single)));
    CHECK(k_factor(single) > 0.0);

    CHECK_THROWS_AS(k_factor(std::vector<MultipathTap>{}), std::invalid_argument);
}

TEST_CASE("k-factor LoS rules and invariances") {
    // the strongest tap arrives second
    const std::vector<MultipathTap> taps{MultipathTap::from_linear(0.0, 0.2),
                                         MultipathTap::from_linear(2.0, 1.0),
                                         MultipathTap::from_linear(5.0, 0.05)};
    CHECK(k_factor(taps, LosRule::strongest) ==
          doctest::Approx(10.0 * std::log10(1.0 / 0.25)).epsilon(1e-12));
    CHECK(k_factor(taps, LosRule::earliest) ==
          doctest::Approx(10.0 * std::log10(0.2 / 1.05)).epsilon(1e-12));

    Rng rng(5);
    auto base = random_taps(rng, 6);
    const double k0 = k_factor(base);

    // uniform power scaling
    auto scaled = base;
    for (auto& t : scaled) t.power_db += 7.3;
    CHECK(k_factor(scaled) == doctest::Approx(k0).epsilon(1e-12));

    // permutation of the scatter taps
    auto shuffled = base;
    std::swap(shuffled[1], shuffled[4]);
    std::swap(shuffled[2], shuffled[5]);
    CHECK(k_factor(shuffled) == doctest::Approx(k0).epsilon(1e-12));
}

TEST_CASE("rms delay spread hand values") {
    const std::vector<MultipathTap> single{MultipathTap::from_linear(3.7, 0.4)};
    auto ds = rms_delay_spread(single);
    CHECK(ds.rms_ns == 0.0);
    CHECK(ds.mean_ns == doctest::Approx(3.7));

    const std::vector<MultipathTap> equal{MultipathTap::from_linear(0.0, 1.0),
                                          MultipathTap::from_linear(2.0, 1.0)};
    ds = rms_delay_spread(equal);
    CHECK(ds.mean_ns == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ds.rms_ns == doctest::Approx(1.0).epsilon(1e-12));

    // unequal powers expose the squared-power weighting of the spread
    const std::vector<MultipathTap> uneven{MultipathTap::from_linear(0.0, 1.0),
                                           MultipathTap::from_linear(2.0, 0.25)};
    ds = rms_delay_spread(uneven);
    CHECK(ds.mean_ns == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(ds.rms_ns == doctest::Approx(0.548795).epsilon(1e-6));

    // the conventional all-p variant gives a different value on purpose
    ds = rms_delay_spread(uneven, Weighting::power);
    CHECK(ds.rms_ns == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("delay spread invariances") {
    Rng rng(17);
    auto base = random_taps(rng, 7);
    const auto ds0 = rms_delay_spread(base);

    auto scaled = base;
    for (auto& t : scaled) t.power_db -= 12.0;
    const auto ds_scaled = rms_delay_spread(scaled);
    CHECK(ds_scaled.rms_ns == doctest::Approx(ds0.rms_ns).epsilon(1e-12));
    CHECK(ds_scaled.mean_ns == doctest::Approx(ds0.mean_ns).epsilon(1e-12));

    auto shifted = base;
    for (auto& t : shifted) t.delay_ns += 11.5;
    const auto ds_shifted = rms_delay_spread(shifted);
    CHECK(ds_shifted.rms_ns == doctest::Approx(ds0.rms_ns).epsilon(1e-9));
    CHECK(ds_shifted.mean_ns == doctest::Approx(ds0.mean_ns + 11.5).epsilon(1e-12));
}

TEST_CASE("rms angular spread hand values") {
    const std::vector<MultipathTap> single{{0.0, -3.0, 123.0}};
    auto as = rms_angular_spread(single);
    CHECK(as.rms_deg == 0.0);
    CHECK(as.mean_deg == doctest::Approx(123.0));

    const std::vector<MultipathTap> two{{0.0, 0.0, 0.0}, {1.0, 0.0, 90.0}};
    as = rms_angular_spread(two);
    CHECK(as.mean_deg == doctest::Approx(45.0).epsilon(1e-12));
    CHECK(as.rms_deg == doctest::Approx(45.0).epsilon(1e-12));

    // linear formula as written: 350 and 10 degrees straddle the wrap
    const std::vector<MultipathTap> wrap{{0.0, 0.0, 350.0}, {1.0, 0.0, 10.0}};
    as = rms_angular_spread(wrap);
    CHECK(as.mean_deg == doctest::Approx(180.0).epsilon(1e-12));
    CHECK(as.rms_deg == doctest::Approx(170.0).epsilon(1e-12));

    // the circular option resolves the artifact
    as = rms_angular_spread(wrap, Weighting::squared_power, AngleMode::circular);
    CHECK(std::abs(std::remainder(as.mean_deg, 360.0)) < 1e-9);
    CHECK(as.rms_deg == doctest::Approx(10.0).epsilon(1e-9));
}

TEST_CASE("angular spread power-scaling invariance") {
    Rng rng(29);
    auto base = random_taps(rng, 5);
    const auto as0 = rms_angular_spread(base);
    for (auto& t : base) t.power_db += 4.2;
    const auto as1 = rms_angular_spread(base);
    CHECK(as1.rms_deg == doctest::Approx(as0.rms_deg).epsilon(1e-12));
    CHECK(as1.mean_deg == doctest::Approx(as0.mean_deg).epsilon(1e-12));
}

TEST_CASE("path loss bookkeeping") {
    // 13 dBm transmit, 15+15 dBi gains, -35 dBm received -> 78 dB
    const std::vector<MultipathTap> taps{MultipathTap{0.0, -48.0, 0.0}};
    CHECK(path_loss_db(taps, 13.0, 15.0, 15.0) == doctest::Approx(78.0).epsilon(1e-12));

    // transmit power cancels out of the bookkeeping
    CHECK(path_loss_db(taps, 0.0, 15.0, 15.0) == doctest::Approx(78.0).epsilon(1e-12));

    // splitting the same total power over several taps changes nothing
    const double half = 0.5 * std::pow(10.0, -4.8);
    const std::vector<MultipathTap> split{MultipathTap::from_linear(0.0, half),
                                          MultipathTap::from_linear(1.0, half)};
    CHECK(path_loss_db(split, 13.0, 15.0, 15.0) == doctest::Approx(78.0).epsilon(1e-12));

    CHECK_THROWS_AS(path_loss_db(std::vector<MultipathTap>{}, 13.0, 15.0, 15.0),
                    std::invalid_argument);
}
