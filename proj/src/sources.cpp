#include "inline_snspd/sources.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "inline_snspd/error.hpp"

namespace inline_snspd::sources {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_rate(double rate, const char* what)
{
    if (!(rate > 0.0) || !std::isfinite(rate)) {
        throw DomainError(std::string(what) + ": rate must be > 0");
    }
}

void check_unit(double v, const char* what)
{
    if (!(v >= 0.0 && v <= 1.0)) {
        throw DomainError(std::string(what) + " must lie in [0, 1]");
    }
}

}  // namespace

void validate(const SourceSpec& spec)
{
    std::visit(overloaded{
                   [](const CoherentPulsed& s) {
                       if (!(s.nbar >= 0.0)) {
                           throw DomainError("CoherentPulsed: nbar must be >= 0");
                       }
                       check_rate(s.rep_rate, "CoherentPulsed");
                   },
                   [](const Thermal& s) {
                       if (!(s.nbar >= 0.0)) {
                           throw DomainError("Thermal: nbar must be >= 0");
                       }
                       check_rate(s.rep_rate, "Thermal");
                   },
                   [](const FockPulsed& s) { check_rate(s.rep_rate, "FockPulsed"); },
                   [](const SpdcCw& s) {
                       check_rate(s.pair_rate, "SpdcCw");
                       check_unit(s.herald_efficiency, "SpdcCw: herald_efficiency");
                       check_unit(s.signal_transmission, "SpdcCw: signal_transmission");
                       if (!(s.herald_jitter_fwhm >= 0.0)) {
                           throw DomainError("SpdcCw: herald_jitter_fwhm must be >= 0");
                       }
                   },
               },
               spec);
}

bool is_pulsed(const SourceSpec& spec) { return !std::holds_alternative<SpdcCw>(spec); }

double period_ps(const SourceSpec& spec)
{
    return std::visit(overloaded{
                          [](const SpdcCw&) -> double { throw PreconditionError("SPDC source has no trigger period"); },
                          [](const auto& s) -> double { return ps_per_s / s.rep_rate; },
                      },
                      spec);
}

Picoseconds trigger_time(const SourceSpec& spec, std::uint64_t k)
{
    return static_cast<Picoseconds>(std::llround(static_cast<double>(k) * period_ps(spec)));
}

unsigned draw_pulse_photons(const SourceSpec& spec, CounterRng& rng)
{
    return std::visit(overloaded{
                          [&](const CoherentPulsed& s) -> unsigned {
                              if (s.nbar <= 0.0) {
                                  return 0;
                              }
                              return std::poisson_distribution<unsigned>(s.nbar)(rng);
                          },
                          [&](const Thermal& s) -> unsigned {
                              if (s.nbar <= 0.0) {
                                  return 0;
                              }
                              // P(k) = nbar^k / (1 + nbar)^(k + 1)
                              return std::geometric_distribution<unsigned>(1.0 / (1.0 + s.nbar))(rng);
                          },
                          [](const FockPulsed& s) -> unsigned { return s.n; },
                          [](const SpdcCw&) -> unsigned {
                              throw PreconditionError("draw_pulse_photons: SPDC is a CW source");
                          },
                      },
                      spec);
}

std::vector<EmissionEvent> sample_pulse_counts(const SourceSpec& spec, std::uint64_t n_triggers, std::uint64_t seed)
{
    if (!is_pulsed(spec)) {
        throw PreconditionError("sample_pulse_counts: source is not pulsed");
    }
    validate(spec);
    std::vector<EmissionEvent> events;
    events.reserve(n_triggers);
    for (std::uint64_t k = 0; k < n_triggers; ++k) {
        CounterRng rng(seed, rng_domain::pulse, k);
        events.push_back({trigger_time(spec, k), draw_pulse_photons(spec, rng), std::nullopt});
    }
    return events;
}

std::vector<SpdcPair> spdc_block_pairs(const SpdcCw& spec, std::uint64_t seed, std::uint64_t block,
                                       Picoseconds block_end)
{
    const Picoseconds start = static_cast<Picoseconds>(block) * generation_block_ps;
    const Picoseconds end = std::min(block_end, start + generation_block_ps);
    std::vector<SpdcPair> pairs;
    if (end <= start) {
        return pairs;
    }
    CounterRng block_rng(seed, rng_domain::spdc_block, block);
    const double mean = spec.pair_rate * static_cast<double>(end - start) / ps_per_s;
    const auto count = std::poisson_distribution<std::uint64_t>(mean)(block_rng);

    std::vector<Picoseconds> created(count);
    std::uniform_int_distribution<Picoseconds> when(start, end - 1);
    for (auto& t : created) {
        t = when(block_rng);
    }
    std::sort(created.begin(), created.end());

    const double sigma = sigma_from_fwhm(spec.herald_jitter_fwhm);
    pairs.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        CounterRng rng(seed, rng_domain::spdc_pair, block, i);
        SpdcPair pair{created[i], std::nullopt, false};
        if (rng.uniform() < spec.herald_efficiency) {
            double jitter = 0.0;
            if (sigma > 0.0) {
                jitter = std::normal_distribution<double>(0.0, sigma)(rng);
            }
            pair.herald = created[i] + static_cast<Picoseconds>(std::llround(jitter));
        }
        pair.signal_kept = rng.uniform() < spec.signal_transmission;
        pairs.push_back(pair);
    }
    return pairs;
}

SpdcStreams sample_spdc_stream(const SourceSpec& spec, double duration_s, std::uint64_t seed)
{
    const auto* spdc = std::get_if<SpdcCw>(&spec);
    if (spdc == nullptr) {
        throw PreconditionError("sample_spdc_stream: source is not SPDC");
    }
    validate(spec);
    if (!(duration_s > 0.0)) {
        throw DomainError("sample_spdc_stream: duration must be > 0");
    }
    const Picoseconds duration = seconds_to_ps(duration_s);
    const auto blocks = static_cast<std::uint64_t>((duration + generation_block_ps - 1) / generation_block_ps);

    SpdcStreams out;
    for (std::uint64_t b = 0; b < blocks; ++b) {
        for (const auto& pair : spdc_block_pairs(*spdc, seed, b, duration)) {
            if (pair.herald && *pair.herald >= 0 && *pair.herald <= duration) {
                out.heralds.push_back(*pair.herald);
            }
            if (pair.signal_kept) {
                out.signal.push_back({pair.created, 1, pair.herald});
            }
        }
    }
    // Herald jitter can reorder neighbours.
    std::sort(out.heralds.begin(), out.heralds.end());
    return out;
}

double theoretical_g2_zero(const SourceSpec& spec)
{
    return std::visit(overloaded{
                          [](const CoherentPulsed&) { return 1.0; },
                          [](const Thermal&) { return 2.0; },
                          [](const FockPulsed& s) {
                              if (s.n == 0) {
                                  throw DomainError("theoretical_g2_zero: vacuum has no g2");
                              }
                              return 1.0 - 1.0 / static_cast<double>(s.n);
                          },
                          [](const SpdcCw&) -> double {
                              throw PreconditionError(
                                  "theoretical_g2_zero: heralded g2 has no closed form here, simulate it");
                          },
                      },
                      spec);
}

}  // namespace inline_snspd::sources
