#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "inline_snspd/error.hpp"
#include "inline_snspd/sources.hpp"

using namespace inline_snspd;
using namespace inline_snspd::sources;

namespace {

struct Moments {
    double mean;
    double variance;
};

Moments photon_moments(const std::vector<EmissionEvent>& events)
{
    double s = 0.0;
    double s2 = 0.0;
    for (const auto& e : events) {
        s += e.photons;
        s2 += static_cast<double>(e.photons) * e.photons;
    }
    const double n = static_cast<double>(events.size());
    const double mean = s / n;
    return {mean, (s2 - n * mean * mean) / (n - 1.0)};
}

std::uint64_t total_pairs(const SpdcCw& spec, double duration_s, std::uint64_t seed)
{
    const Picoseconds duration = seconds_to_ps(duration_s);
    std::uint64_t n = 0;
    for (std::uint64_t b = 0; static_cast<Picoseconds>(b) * generation_block_ps < duration; ++b) {
        n += spdc_block_pairs(spec, seed, b, duration).size();
    }
    return n;
}

}  // namespace

TEST_CASE("pulsed counts")
{
    SUBCASE("Fock(1) emits exactly one photon per trigger")
    {
        const auto events = sample_pulse_counts(FockPulsed{1, 50e6}, 10000, 3);
        CHECK(std::all_of(events.begin(), events.end(), [](const auto& e) { return e.photons == 1; }));
        CHECK(events[7].time == 7 * 20000);
    }
    SUBCASE("coherent nbar = 0 emits nothing")
    {
        const auto events = sample_pulse_counts(CoherentPulsed{0.0, 50e6}, 10000, 3);
        CHECK(std::all_of(events.begin(), events.end(), [](const auto& e) { return e.photons == 0; }));
    }
    SUBCASE("coherent nbar = 1 over 1e6 triggers")
    {
        const auto m = photon_moments(sample_pulse_counts(CoherentPulsed{1.0, 50e6}, 1'000'000, 17));
        CHECK(m.mean >= 0.997);
        CHECK(m.mean <= 1.003);
        // Fano factor 1; delta-method standard error sqrt(2 / N).
        CHECK(std::abs(m.variance / m.mean - 1.0) < 3.0 * std::sqrt(2e-6) + 1e-4);
    }
    SUBCASE("thermal nbar = 1 has Fano factor 1 + nbar")
    {
        const auto m = photon_moments(sample_pulse_counts(Thermal{1.0, 50e6}, 1'000'000, 19));
        CHECK(std::abs(m.mean - 1.0) < 3.0 * std::sqrt(2e-6));
        CHECK(std::abs(m.variance / m.mean - 2.0) < 0.015);
    }
    SUBCASE("same seed, same counts; different seed, different counts")
    {
        const auto a = sample_pulse_counts(CoherentPulsed{0.7, 50e6}, 5000, 1);
        CHECK(a == sample_pulse_counts(CoherentPulsed{0.7, 50e6}, 5000, 1));
        CHECK_FALSE(a == sample_pulse_counts(CoherentPulsed{0.7, 50e6}, 5000, 2));
    }
    SUBCASE("a CW source has no pulses")
    {
        CHECK_THROWS_AS(sample_pulse_counts(SpdcCw{}, 10, 1), PreconditionError);
    }
}

TEST_CASE("SPDC stream")
{
    SUBCASE("herald efficiency 0 gives no heralds")
    {
        const auto s = sample_spdc_stream(SpdcCw{1e5, 0.0, 0.5, 450.0}, 0.01, 5);
        CHECK(s.heralds.empty());
        CHECK_FALSE(s.signal.empty());
    }
    SUBCASE("pair count is Poissonian")
    {
        const auto n = static_cast<double>(total_pairs(SpdcCw{1e5, 0.5, 0.5, 450.0}, 1.0, 7));
        CHECK(std::abs(n - 1e5) < 3.0 * std::sqrt(1e5));
    }
    SUBCASE("lists are sorted and every herald belongs to one pair")
    {
        const SpdcCw spec{2e5, 1.0, 1.0, 0.0};
        const auto s = sample_spdc_stream(spec, 0.01, 9);
        CHECK(std::is_sorted(s.heralds.begin(), s.heralds.end()));
        CHECK(std::is_sorted(s.signal.begin(), s.signal.end(),
                             [](const auto& a, const auto& b) { return a.time < b.time; }));
        REQUIRE(s.heralds.size() == s.signal.size());
        for (std::size_t i = 0; i < s.signal.size(); ++i) {
            CHECK(s.signal[i].photons == 1);
            CHECK(s.signal[i].herald_time == s.heralds[i]);
            CHECK(s.heralds[i] == s.signal[i].time);
        }
    }
    SUBCASE("herald jitter sets the cross-correlation width")
    {
        const auto s = sample_spdc_stream(SpdcCw{1e6, 1.0, 1.0, 450.0}, 0.05, 13);
        double s2 = 0.0;
        double n = 0.0;
        for (const auto& e : s.signal) {
            const double d = static_cast<double>(*e.herald_time - e.time);
            s2 += d * d;
            n += 1.0;
        }
        CHECK(std::sqrt(s2 / n) * fwhm_per_sigma == doctest::Approx(450.0).epsilon(0.02));
    }
    SUBCASE("deterministic")
    {
        const SpdcCw spec{3e5, 0.4, 0.6, 450.0};
        const auto a = sample_spdc_stream(spec, 0.003, 21);
        const auto b = sample_spdc_stream(spec, 0.003, 21);
        CHECK(a.heralds == b.heralds);
        CHECK(a.signal == b.signal);
    }
    SUBCASE("invalid specs")
    {
        CHECK_THROWS_AS(sample_spdc_stream(SpdcCw{1e5, 1.5, 0.5, 450.0}, 1.0, 1), DomainError);
        CHECK_THROWS_AS(sample_spdc_stream(SpdcCw{}, 0.0, 1), DomainError);
        CHECK_THROWS_AS(sample_spdc_stream(CoherentPulsed{}, 1.0, 1), PreconditionError);
    }
}

TEST_CASE("theoretical g2 at zero delay")
{
    CHECK(theoretical_g2_zero(CoherentPulsed{}) == 1.0);
    CHECK(theoretical_g2_zero(Thermal{}) == 2.0);
    CHECK(theoretical_g2_zero(FockPulsed{1}) == 0.0);
    CHECK(theoretical_g2_zero(FockPulsed{4}) == doctest::Approx(0.75));
    CHECK_THROWS_AS(theoretical_g2_zero(SpdcCw{}), PreconditionError);
}

TEST_CASE("trigger timing")
{
    CHECK(period_ps(CoherentPulsed{1.0, 50e6}) == doctest::Approx(20000.0));
    CHECK(trigger_time(FockPulsed{1, 1e9}, 3) == 3000);
    CHECK(is_pulsed(Thermal{}));
    CHECK_FALSE(is_pulsed(SpdcCw{}));
    CHECK_THROWS_AS(validate(CoherentPulsed{-1.0, 50e6}), DomainError);
    CHECK_THROWS_AS(validate(CoherentPulsed{1.0, 0.0}), DomainError);
}
