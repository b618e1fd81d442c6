#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "inline_snspd/cascade.hpp"
#include "inline_snspd/error.hpp"

using namespace inline_snspd;
using namespace inline_snspd::cascade;

namespace {

double conservation_gap(const CascadeDesign& d)
{
    return std::abs(std::accumulate(d.input_fractions.begin(), d.input_fractions.end(), 0.0) + d.residual - 1.0);
}

}  // namespace

TEST_CASE("two-wire HBT design")
{
    const std::vector<double> split{0.5, 0.5};
    const auto d = design_from_fractions(split, 0.62, 0.999);
    REQUIRE(d.size() == 2);
    CHECK(d.wires[0].length == doctest::Approx(4.855).epsilon(0.05 / 4.855));
    CHECK(d.wires[1].length == doctest::Approx(48.39).epsilon(0.05 / 48.39));
    CHECK(d.input_fractions[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(d.input_fractions[1] == doctest::Approx(0.4995).epsilon(1e-9));
    CHECK(d.capped == std::vector<bool>{false, true});
    CHECK(d.cap_applied());
    CHECK(d.total_length() == doctest::Approx(53.2).epsilon(0.01));

    const auto equal = design_equal_split(2, 0.62, 0.999);
    CHECK(equal.lengths() == d.lengths());
}

TEST_CASE("degenerate fraction lists")
{
    const std::vector<double> one{1.0};
    const auto single = design_from_fractions(one, 0.62);
    REQUIRE(single.size() == 1);
    CHECK(single.capped[0]);
    CHECK(single.conditional_absorption[0] == doctest::Approx(0.999));

    const auto empty = design_from_fractions(std::span<const double>{}, 0.62);
    CHECK(empty.size() == 0);
    CHECK(empty.residual == 1.0);

    const auto n1 = design_equal_split(1, 0.62);
    REQUIRE(n1.size() == 1);
    CHECK(n1.capped[0]);
}

TEST_CASE("equal split into five wires")
{
    const auto d = design_equal_split(5, 0.62, 0.999);
    const double expected[] = {1.563, 2.015, 2.840, 4.855, 48.39};
    for (std::size_t k = 0; k < 5; ++k) {
        CHECK(std::abs(d.wires[k].length - expected[k]) < 0.01);
    }
    for (std::size_t k = 0; k < 4; ++k) {
        CHECK(d.input_fractions[k] == doctest::Approx(0.2).epsilon(1e-9));
    }
    CHECK(d.input_fractions[4] == doctest::Approx(0.1998).epsilon(1e-9));
    const auto cumulative = d.cumulative_absorption();
    CHECK(cumulative.back() == doctest::Approx(0.9998).epsilon(1e-9));
}

TEST_CASE("forward model")
{
    const std::vector<double> hbt{4.855, 48.39};
    const auto f = input_fractions(hbt, 0.62);
    CHECK(std::abs(f.fractions[0] - 0.5) < 0.001);
    CHECK(std::abs(f.fractions[1] - 0.4995) < 0.001);
    CHECK(std::abs(f.residual - 0.0005) < 0.001);

    const auto none = input_fractions(std::span<const double>{}, 0.62);
    CHECK(none.fractions.empty());
    CHECK(none.residual == 1.0);

    const auto five = design_equal_split(5, 0.62);
    const auto lengths = five.lengths();
    const auto g = input_fractions(lengths, 0.62);
    for (std::size_t k = 0; k < 4; ++k) {
        CHECK(std::abs(g.fractions[k] - 0.2) < 0.001);
    }
    CHECK(std::abs(g.fractions[4] - 0.1998) < 0.001);
}

TEST_CASE("scaling limit")
{
    CHECK(max_equal_detectors(0.055) == 18);
    CHECK(max_equal_detectors(0.5) == 2);
    CHECK(max_equal_detectors(1.0) == 1);
    CHECK(max_equal_detectors(0.2) == 5);
    CHECK_THROWS_AS(max_equal_detectors(0.0), DomainError);
    CHECK_THROWS_AS(max_equal_detectors(1.5), DomainError);
}

TEST_CASE("invalid designs")
{
    const std::vector<double> too_much{0.6, 0.6};
    CHECK_THROWS_AS(design_from_fractions(too_much, 0.62), DomainError);
    const std::vector<double> negative{0.5, -0.1};
    CHECK_THROWS_AS(design_from_fractions(negative, 0.62), DomainError);
    CHECK_THROWS_AS(design_equal_split(0, 0.62), DomainError);
    CHECK_THROWS_AS(design_equal_split(2, 0.62, 1.0), DomainError);
    const std::vector<double> bad_conditional{0.5, 1.2};
    CHECK_THROWS_AS(design_from_conditional(bad_conditional, nanowire::NanowireSpec{}), DomainError);
}

TEST_CASE("ideal absorber from conditional absorptions")
{
    const std::vector<double> conditional{0.5, 1.0};
    const auto d = design_from_conditional(conditional, nanowire::NanowireSpec{});
    CHECK(std::isinf(d.wires[1].length));
    CHECK(d.input_fractions == std::vector<double>{0.5, 0.5});
    CHECK(d.residual == 0.0);
}

TEST_CASE("property: conservation and round trip")
{
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> count(1, 12);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<double> f(static_cast<std::size_t>(count(rng)));
        double total = 0.0;
        for (auto& x : f) {
            x = u(rng);
            total += x;
        }
        // Scale so the sum stays below 1 and no wire hits the cap.
        const double scale = 0.95 * u(rng) / total;
        for (auto& x : f) {
            x *= scale;
        }
        const auto d = design_from_fractions(f, 0.62);
        CHECK(conservation_gap(d) < 1e-12);
        CHECK_FALSE(d.cap_applied());
        const auto lengths = d.lengths();
        const auto back = input_fractions(lengths, 0.62);
        for (std::size_t k = 0; k < f.size(); ++k) {
            CHECK(std::abs(back.fractions[k] - f[k]) < 1e-9);
        }
        CHECK(std::abs(back.residual - d.residual) < 1e-9);
    }
}

TEST_CASE("property: equal-split lengths increase along the cascade")
{
    for (std::size_t n = 2; n <= 18; ++n) {
        const auto d = design_equal_split(n, 0.62);
        CHECK(conservation_gap(d) < 1e-12);
        for (std::size_t k = 1; k < n; ++k) {
            CHECK(d.wires[k].length > d.wires[k - 1].length);
        }
    }
}
