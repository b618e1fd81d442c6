#include "inline_snspd/simkernel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <thread>

#include "inline_snspd/error.hpp"

namespace inline_snspd::simkernel {

namespace {

constexpr std::uint64_t triggers_per_shard = 1u << 16;

struct WireModel {
    double conditional;
    double eta_int;
    double sigma;  // ps, wire jitter
    Channel channel;
};

struct Propagator {
    std::vector<WireModel> wires;
    double readout_sigma = 0.0;
    Picoseconds duration = 0;

    // One photon created at t; appends at most one click.
    void photon(Picoseconds t, CounterRng& rng, std::normal_distribution<double>& unit_normal,
                std::vector<TimeTag>& out) const
    {
        for (const auto& wire : wires) {
            if (rng.uniform() >= wire.conditional) {
                continue;
            }
            if (rng.uniform() >= wire.eta_int) {
                return;
            }
            double jitter = 0.0;
            if (wire.sigma > 0.0) {
                jitter += wire.sigma * unit_normal(rng);
            }
            if (readout_sigma > 0.0) {
                jitter += readout_sigma * unit_normal(rng);
            }
            const Picoseconds click = t + static_cast<Picoseconds>(std::llround(jitter));
            if (click >= 0 && click <= duration) {
                out.push_back({wire.channel, click});
            }
            return;
        }
    }
};

unsigned resolve_workers(unsigned requested)
{
    if (requested == 0) {
        requested = std::max(1u, std::thread::hardware_concurrency());
    }
    return requested;
}

// Runs job(i) for i in [0, n) on `workers` threads; results land in slot i.
template <class Job>
std::vector<std::vector<TimeTag>> run_shards(std::uint64_t n, unsigned workers, Job job)
{
    std::vector<std::vector<TimeTag>> shards(n);
    std::atomic<std::uint64_t> next{0};
    auto worker = [&] {
        for (std::uint64_t i = next++; i < n; i = next++) {
            shards[i] = job(i);
        }
    };
    const unsigned threads = static_cast<unsigned>(std::min<std::uint64_t>(workers, n));
    if (threads <= 1) {
        worker();
        return shards;
    }
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back(worker);
    }
    pool.clear();
    return shards;
}

std::vector<TimeTag> concat(std::vector<std::vector<TimeTag>>&& shards)
{
    std::size_t total = 0;
    for (const auto& s : shards) {
        total += s.size();
    }
    std::vector<TimeTag> out;
    out.reserve(total);
    for (auto& s : shards) {
        out.insert(out.end(), s.begin(), s.end());
        std::vector<TimeTag>().swap(s);
    }
    return out;
}

double source_nbar(const sources::SourceSpec& source)
{
    if (const auto* c = std::get_if<sources::CoherentPulsed>(&source)) {
        return c->nbar;
    }
    if (const auto* t = std::get_if<sources::Thermal>(&source)) {
        return t->nbar;
    }
    if (const auto* f = std::get_if<sources::FockPulsed>(&source)) {
        return f->n;
    }
    return 0.0;
}

void require_sorted(const TagStream& stream, const char* op)
{
    if (!stream.is_sorted()) {
        throw PreconditionError(std::string(op) + ": input stream is not sorted");
    }
}

}  // namespace

void RunConfig::validate() const
{
    if (n_triggers.has_value() == duration_s.has_value()) {
        throw ConfigError("run: set exactly one of n_triggers or duration");
    }
    if (duration_s && !(*duration_s >= 0.0)) {
        throw ConfigError("run: duration must be >= 0");
    }
    if (!(trigger_jitter_fwhm >= 0.0) || !(readout_jitter_fwhm >= 0.0) || !(reference_dead_time >= 0.0) ||
        !(background_rate_per_nbar >= 0.0)) {
        throw ConfigError("run: jitter, dead time and background must be >= 0");
    }
}

ChannelLayout channel_layout(std::size_t wire_count, const RunConfig& run)
{
    const std::size_t total = wire_count + (run.reference_channel ? 1 : 0);
    if (total > 0xFFFF) {
        throw ConfigError("channel layout: too many channels");
    }
    ChannelLayout layout;
    layout.channel_count = static_cast<Channel>(total);
    layout.reference = run.reference_channel;
    if (run.reference_channel && *run.reference_channel >= total) {
        throw ConfigError("channel layout: reference channel " + std::to_string(*run.reference_channel) +
                          " outside 0.." + std::to_string(total - 1));
    }
    Channel next = 0;
    for (std::size_t k = 0; k < wire_count; ++k, ++next) {
        if (run.reference_channel && next == *run.reference_channel) {
            ++next;
        }
        layout.wires.push_back(next);
    }
    return layout;
}

TagStream simulate(const sources::SourceSpec& source, const cascade::CascadeDesign& design, const RunConfig& run)
{
    run.validate();
    sources::validate(source);
    if (design.conditional_absorption.size() != design.wires.size()) {
        throw ConfigError("simulate: cascade design is inconsistent");
    }
    for (const auto& wire : design.wires) {
        wire.validate();
    }
    const bool pulsed = sources::is_pulsed(source);
    if (pulsed && !run.n_triggers) {
        throw ConfigError("simulate: pulsed source needs run.n_triggers");
    }
    if (!pulsed && !run.duration_s) {
        throw ConfigError("simulate: SPDC source needs run.duration");
    }
    const ChannelLayout layout = channel_layout(design.size(), run);
    const unsigned workers = resolve_workers(run.workers);

    Propagator prop;
    prop.readout_sigma = sigma_from_fwhm(run.readout_jitter_fwhm);
    for (std::size_t k = 0; k < design.size(); ++k) {
        const auto& w = design.wires[k];
        prop.wires.push_back({design.conditional_absorption[k], w.eta_int, sigma_from_fwhm(w.jitter_fwhm), layout.wires[k]});
    }

    TagStream stream;
    stream.channel_count = layout.channel_count;
    stream.seed = run.seed;
    const double trigger_sigma = sigma_from_fwhm(run.trigger_jitter_fwhm);

    if (pulsed) {
        const std::uint64_t n = *run.n_triggers;
        stream.duration = sources::trigger_time(source, n);
        prop.duration = stream.duration;
        const std::uint64_t shard_count = (n + triggers_per_shard - 1) / triggers_per_shard;
        stream.tags = concat(run_shards(shard_count, workers, [&](std::uint64_t shard) {
            std::vector<TimeTag> out;
            const std::uint64_t end = std::min(n, (shard + 1) * triggers_per_shard);
            for (std::uint64_t k = shard * triggers_per_shard; k < end; ++k) {
                CounterRng rng(run.seed, rng_domain::pulse, k);
                std::normal_distribution<double> unit_normal;
                const unsigned photons = sources::draw_pulse_photons(source, rng);
                const Picoseconds t = sources::trigger_time(source, k);
                if (layout.reference) {
                    Picoseconds tt = t;
                    if (trigger_sigma > 0.0) {
                        tt += static_cast<Picoseconds>(std::llround(trigger_sigma * unit_normal(rng)));
                    }
                    if (tt >= 0 && tt <= stream.duration) {
                        out.push_back({*layout.reference, tt});
                    }
                }
                for (unsigned p = 0; p < photons; ++p) {
                    prop.photon(t, rng, unit_normal, out);
                }
            }
            return out;
        }));
    } else {
        const auto& spdc = std::get<sources::SpdcCw>(source);
        stream.duration = seconds_to_ps(*run.duration_s);
        prop.duration = stream.duration;
        const auto blocks = static_cast<std::uint64_t>((stream.duration + sources::generation_block_ps - 1) /
                                                       sources::generation_block_ps);
        stream.tags = concat(run_shards(blocks, workers, [&](std::uint64_t block) {
            std::vector<TimeTag> out;
            const auto pairs = sources::spdc_block_pairs(spdc, run.seed, block, stream.duration);
            for (std::size_t i = 0; i < pairs.size(); ++i) {
                const auto& pair = pairs[i];
                if (layout.reference && pair.herald && *pair.herald >= 0 && *pair.herald <= stream.duration) {
                    out.push_back({*layout.reference, *pair.herald});
                }
                if (pair.signal_kept) {
                    CounterRng rng(run.seed, rng_domain::propagate, block, i);
                    std::normal_distribution<double> unit_normal;
                    prop.photon(pair.created, rng, unit_normal, out);
                }
            }
            return out;
        }));
    }
    stream.sort();

    std::vector<double> dark(layout.channel_count, 0.0);
    std::vector<double> background(layout.channel_count, 0.0);
    std::vector<double> dead(layout.channel_count, 0.0);
    const double nbar = source_nbar(source);
    for (std::size_t k = 0; k < design.size(); ++k) {
        dark[layout.wires[k]] = design.wires[k].dark_rate;
        background[layout.wires[k]] = run.background_rate_per_nbar * nbar;
        dead[layout.wires[k]] = design.wires[k].dead_time;
    }
    if (layout.reference) {
        dead[*layout.reference] = run.reference_dead_time;
    }
    stream = add_dark_counts(stream, dark, run.seed, rng_domain::dark);
    if (pulsed && run.background_rate_per_nbar > 0.0) {
        stream = add_dark_counts(stream, background, run.seed, rng_domain::background);
    }
    stream = apply_dead_time(stream, dead);
    stream.seed = run.seed;
    return stream;
}

TagStream apply_dead_time(const TagStream& stream, double dead_time_ps)
{
    const std::vector<double> per_channel(stream.channel_count, dead_time_ps);
    return apply_dead_time(stream, per_channel);
}

TagStream apply_dead_time(const TagStream& stream, std::span<const double> dead_time_per_channel)
{
    require_sorted(stream, "apply_dead_time");
    if (dead_time_per_channel.size() < stream.channel_count) {
        throw PreconditionError("apply_dead_time: need one dead time per channel");
    }
    TagStream out = stream;
    out.tags.clear();
    out.tags.reserve(stream.tags.size());
    std::vector<std::optional<Picoseconds>> last(stream.channel_count);
    for (const auto& tag : stream.tags) {
        auto& prev = last.at(tag.channel);
        if (prev && static_cast<double>(tag.t - *prev) < dead_time_per_channel[tag.channel]) {
            continue;
        }
        prev = tag.t;
        out.tags.push_back(tag);
    }
    return out;
}

TagStream add_dark_counts(const TagStream& stream, double rate_hz, std::uint64_t seed)
{
    const std::vector<double> per_channel(stream.channel_count, rate_hz);
    return add_dark_counts(stream, per_channel, seed);
}

TagStream add_dark_counts(const TagStream& stream, std::span<const double> rate_per_channel, std::uint64_t seed,
                          std::uint64_t domain)
{
    require_sorted(stream, "add_dark_counts");
    if (rate_per_channel.size() < stream.channel_count) {
        throw PreconditionError("add_dark_counts: need one rate per channel");
    }
    std::vector<TimeTag> darks;
    const Picoseconds end = stream.duration + 1;  // tags live in [0, duration]
    const auto blocks = static_cast<std::uint64_t>((end + sources::generation_block_ps - 1) / sources::generation_block_ps);
    for (Channel ch = 0; ch < stream.channel_count; ++ch) {
        const double rate = rate_per_channel[ch];
        if (!(rate >= 0.0)) {
            throw DomainError("add_dark_counts: rate must be >= 0");
        }
        if (rate == 0.0) {
            continue;
        }
        for (std::uint64_t b = 0; b < blocks; ++b) {
            const Picoseconds lo = static_cast<Picoseconds>(b) * sources::generation_block_ps;
            const Picoseconds hi = std::min(end, lo + sources::generation_block_ps);
            CounterRng rng(seed, domain, b, ch);
            const double mean = rate * static_cast<double>(hi - lo) / ps_per_s;
            const auto count = std::poisson_distribution<std::uint64_t>(mean)(rng);
            std::uniform_int_distribution<Picoseconds> when(lo, hi - 1);
            for (std::uint64_t i = 0; i < count; ++i) {
                darks.push_back({ch, when(rng)});
            }
        }
    }
    if (darks.empty()) {
        return stream;
    }
    std::sort(darks.begin(), darks.end(), tag_before);
    TagStream out = stream;
    out.tags.clear();
    out.tags.reserve(stream.tags.size() + darks.size());
    std::merge(stream.tags.begin(), stream.tags.end(), darks.begin(), darks.end(), std::back_inserter(out.tags),
               tag_before);
    return out;
}

WindowFilterResult window_filter(const TagStream& stream, Channel trigger_channel, Picoseconds half_window)
{
    require_sorted(stream, "window_filter");
    if (half_window < 0) {
        throw DomainError("window_filter: half window must be >= 0");
    }
    const auto triggers = stream.times(trigger_channel);
    WindowFilterResult result;
    result.stream = stream;
    result.stream.tags.clear();
    result.no_triggers = triggers.empty();

    std::size_t j = 0;  // first trigger not yet left behind
    for (const auto& tag : stream.tags) {
        if (tag.channel == trigger_channel) {
            result.stream.tags.push_back(tag);
            continue;
        }
        while (j < triggers.size() && triggers[j] < tag.t - half_window) {
            ++j;
        }
        if (j < triggers.size() && triggers[j] <= tag.t + half_window) {
            result.stream.tags.push_back(tag);
        }
    }
    return result;
}

}  // namespace inline_snspd::simkernel
