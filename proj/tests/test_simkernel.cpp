#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "inline_snspd/error.hpp"
#include "inline_snspd/pnr.hpp"
#include "inline_snspd/simkernel.hpp"

using namespace inline_snspd;
using namespace inline_snspd::simkernel;

namespace {

nanowire::NanowireSpec ideal_wire()
{
    nanowire::NanowireSpec w;
    w.eta_int = 1.0;
    w.dark_rate = 0.0;
    w.dead_time = 0.0;
    w.jitter_fwhm = 0.0;
    return w;
}

cascade::CascadeDesign ideal_cascade(std::vector<double> conditional)
{
    return cascade::design_from_conditional(conditional, ideal_wire());
}

RunConfig pulsed_run(std::uint64_t n, std::uint64_t seed = 1)
{
    RunConfig run;
    run.seed = seed;
    run.n_triggers = n;
    return run;
}

TagStream random_stream(std::mt19937_64& rng, std::size_t n, Channel channels, Picoseconds duration)
{
    TagStream s;
    s.channel_count = channels;
    s.duration = duration;
    std::uniform_int_distribution<Picoseconds> t(0, duration);
    std::uniform_int_distribution<int> ch(0, channels - 1);
    for (std::size_t i = 0; i < n; ++i) {
        s.tags.push_back({static_cast<Channel>(ch(rng)), t(rng)});
    }
    s.sort();
    return s;
}

// Direct per-channel rule, written independently of the library.
std::vector<TimeTag> dead_time_oracle(const std::vector<TimeTag>& tags, Picoseconds dead)
{
    std::map<Channel, Picoseconds> last;
    std::vector<TimeTag> kept;
    for (const auto& tag : tags) {
        const auto it = last.find(tag.channel);
        if (it == last.end() || tag.t - it->second >= dead) {
            last[tag.channel] = tag.t;
            kept.push_back(tag);
        }
    }
    return kept;
}

}  // namespace

TEST_CASE("Fock(1) on an ideal 50/50 cascade clicks exactly once per trigger")
{
    const auto design = ideal_cascade({0.5, 1.0});
    const std::uint64_t n = 1'000'000;
    const auto s = simulate(sources::FockPulsed{1, 50e6}, design, pulsed_run(n, 3));
    const auto counts = s.counts_per_channel();
    CHECK(counts[0] == n);
    CHECK(counts[1] + counts[2] == n);
    CHECK(std::abs(static_cast<double>(counts[1]) - 0.5 * n) < 3.0 * std::sqrt(0.25 * n));

    const Channel wires[] = {1, 2};
    const auto tally = pnr::tally_clicks(s, 0, wires, 1000);
    CHECK(tally.by_click_count[1] == n);
}

TEST_CASE("an empty cascade emits only reference and dark tags")
{
    const cascade::CascadeDesign empty;
    const auto s = simulate(sources::CoherentPulsed{2.0, 50e6}, empty, pulsed_run(1000));
    CHECK(s.channel_count == 1);
    CHECK(s.tags.size() == 1000);
}

TEST_CASE("coherent click patterns match the closed form")
{
    const auto design = ideal_cascade({0.5, 1.0});
    const std::uint64_t n = 1'000'000;
    const auto s = simulate(sources::CoherentPulsed{1.0, 50e6}, design, pulsed_run(n, 5));
    const Channel wires[] = {1, 2};
    const auto measured = pnr::tally_clicks(s, 0, wires, 1000).empirical();
    const auto theory = pnr::click_probs_two(1.0, 0.5, 0.5);
    for (std::size_t k = 0; k < 3; ++k) {
        const double se = std::sqrt(theory.p[k] * (1.0 - theory.p[k]) / n);
        CHECK(std::abs(measured.p[k] - theory.p[k]) < 5.0 * se);
    }
}

TEST_CASE("property: ideal cascades conserve photons")
{
    // Each photon clicks on exactly one wire or leaves through the residual.
    const auto design = ideal_cascade({0.3, 0.5, 0.8});
    const std::uint64_t n = 1'000'000;
    const auto s = simulate(sources::FockPulsed{1, 50e6}, design, pulsed_run(n, 7));
    const Channel wires[] = {1, 2, 3};
    const auto tally = pnr::tally_clicks(s, 0, wires, 1000);
    CHECK(tally.by_click_count[2] == 0);
    CHECK(tally.by_click_count[3] == 0);

    std::vector<double> observed(tally.per_detector.begin(), tally.per_detector.end());
    observed.push_back(static_cast<double>(tally.by_click_count[0]));
    std::vector<double> expected(design.input_fractions);
    expected.push_back(design.residual);
    double chi2 = 0.0;
    for (std::size_t k = 0; k < observed.size(); ++k) {
        const double e = expected[k] * n;
        chi2 += (observed[k] - e) * (observed[k] - e) / e;
    }
    // 3 degrees of freedom, p = 0.001
    CHECK(chi2 < 16.27);

    SUBCASE("multi-photon pulses never give more clicks than photons")
    {
        const auto t = simulate(sources::FockPulsed{2, 50e6}, design, pulsed_run(200000, 9));
        const auto two = pnr::tally_clicks(t, 0, wires, 1000);
        CHECK(two.by_click_count[3] == 0);
    }
}

TEST_CASE("property: output is independent of the worker count")
{
    auto design = cascade::design_equal_split(3, nanowire::NanowireSpec{});
    auto run = pulsed_run(300000, 42);
    run.trigger_jitter_fwhm = 4.5;
    run.readout_jitter_fwhm = 29.5;
    run.background_rate_per_nbar = 1e4;
    const auto single = simulate(sources::Thermal{1.5, 50e6}, design, run);
    CHECK(single.is_sorted());
    for (unsigned workers : {2u, 3u, 8u}) {
        run.workers = workers;
        CHECK(simulate(sources::Thermal{1.5, 50e6}, design, run) == single);
    }

    RunConfig spdc_run;
    spdc_run.seed = 4;
    spdc_run.duration_s = 0.0035;
    const sources::SpdcCw spdc{5e6, 0.5, 0.5, 450.0};
    const auto a = simulate(spdc, design, spdc_run);
    spdc_run.workers = 4;
    CHECK(simulate(spdc, design, spdc_run) == a);
    CHECK(a.is_sorted());
    spdc_run.seed = 5;
    CHECK_FALSE(simulate(spdc, design, spdc_run) == a);
}

TEST_CASE("dead time")
{
    TagStream s;
    s.channel_count = 1;
    s.duration = 10000;
    s.tags = {{0, 0}, {0, 1000}, {0, 6000}};
    CHECK(apply_dead_time(s, 5000.0).tags == std::vector<TimeTag>{{0, 0}, {0, 6000}});
    CHECK(apply_dead_time(s, 0.0) == s);

    SUBCASE("property: matches the direct rule, never grows and is idempotent")
    {
        std::mt19937_64 rng(77);
        std::uniform_int_distribution<Picoseconds> dead(0, 5000);
        for (int trial = 0; trial < 1000; ++trial) {
            const auto r = random_stream(rng, 200, 3, 100000);
            const Picoseconds d = dead(rng);
            const auto once = apply_dead_time(r, static_cast<double>(d));
            CHECK(once.tags == dead_time_oracle(r.tags, d));
            CHECK(once.tags.size() <= r.tags.size());
            CHECK(apply_dead_time(once, static_cast<double>(d)) == once);
            CHECK(once.is_sorted());
        }
    }
    CHECK_THROWS_AS(apply_dead_time(s, std::vector<double>{}), PreconditionError);
}

TEST_CASE("dark counts")
{
    TagStream empty;
    empty.channel_count = 1;
    empty.duration = 10'000'000'000'000;  // 10 s
    CHECK(add_dark_counts(empty, 0.0, 1) == empty);
    const auto darks = add_dark_counts(empty, 3000.0, 1);
    CHECK(std::abs(static_cast<double>(darks.tags.size()) - 30000.0) < 3.0 * std::sqrt(30000.0));
    CHECK(darks.is_sorted());
    CHECK_NOTHROW(darks.check_invariants());

    std::mt19937_64 rng(3);
    const auto base = random_stream(rng, 1000, 2, 1'000'000'000);
    const auto merged = add_dark_counts(base, 5e4, 2);
    CHECK(merged.is_sorted());
    CHECK(merged.tags.size() > base.tags.size());
    CHECK(std::includes(merged.tags.begin(), merged.tags.end(), base.tags.begin(), base.tags.end(), tag_before));
    CHECK(add_dark_counts(base, 5e4, 2) == merged);
    CHECK_THROWS_AS(add_dark_counts(base, -1.0, 2), DomainError);
}

TEST_CASE("trigger window filter")
{
    TagStream s;
    s.channel_count = 2;
    s.duration = 100000;
    s.tags = {{0, 0}, {1, 500}, {1, 5000}, {0, 20000}, {1, 19000}, {1, 21001}};
    s.sort();

    const auto r = window_filter(s, 0, 1000);
    CHECK_FALSE(r.no_triggers);
    CHECK(r.stream.tags == std::vector<TimeTag>{{0, 0}, {1, 500}, {1, 19000}, {0, 20000}});

    const auto all = window_filter(s, 0, 10000);
    CHECK(all.stream.tags.size() == s.tags.size());

    TagStream outside;
    outside.channel_count = 2;
    outside.duration = 100000;
    outside.tags = {{0, 0}, {1, 7000}, {0, 20000}, {1, 50000}};
    CHECK(window_filter(outside, 0, 1000).stream.tags == std::vector<TimeTag>{{0, 0}, {0, 20000}});

    TagStream no_ref;
    no_ref.channel_count = 2;
    no_ref.duration = 10;
    no_ref.tags = {{1, 5}};
    const auto none = window_filter(no_ref, 0, 1000);
    CHECK(none.no_triggers);
    CHECK(none.stream.tags.empty());
    CHECK_THROWS_AS(window_filter(s, 0, -1), DomainError);
}

TEST_CASE("run configuration errors")
{
    const auto design = ideal_cascade({0.5, 1.0});
    RunConfig both = pulsed_run(10);
    both.duration_s = 1.0;
    CHECK_THROWS_AS(simulate(sources::CoherentPulsed{}, design, both), ConfigError);
    RunConfig spdc_needs_duration = pulsed_run(10);
    CHECK_THROWS_AS(simulate(sources::SpdcCw{}, design, spdc_needs_duration), ConfigError);
    RunConfig bad_reference = pulsed_run(10);
    bad_reference.reference_channel = 7;
    CHECK_THROWS_AS(simulate(sources::CoherentPulsed{}, design, bad_reference), ConfigError);

    RunConfig moved = pulsed_run(10);
    moved.reference_channel = 2;
    const auto layout = channel_layout(2, moved);
    CHECK(layout.wires == std::vector<Channel>{0, 1});
    moved.reference_channel.reset();
    CHECK(channel_layout(2, moved).channel_count == 2);
}
