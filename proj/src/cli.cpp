#include "inline_snspd/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

#include "inline_snspd/config.hpp"
#include "inline_snspd/correlator.hpp"
#include "inline_snspd/error.hpp"
#include "inline_snspd/fitkit.hpp"
#include "inline_snspd/pnr.hpp"
#include "inline_snspd/simkernel.hpp"
#include "inline_snspd/tags.hpp"

namespace inline_snspd::cli {

namespace {

struct Globals {
    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
    std::string out;
    std::string format;
};

config::ToolkitConfig load_config(const Globals& g)
{
    auto cfg = config::load(g.config_path, g.overrides);
    if (g.seed) {
        cfg.run.seed = *g.seed;
    }
    if (g.workers) {
        cfg.run.workers = *g.workers;
    }
    cfg.validate();
    return cfg;
}

// Writes to --out when given, otherwise to the result stream.
void emit(const Globals& g, std::ostream& out, const std::function<void(std::ostream&)>& body)
{
    if (g.out.empty()) {
        body(out);
        out.flush();
        return;
    }
    std::ofstream file(g.out, std::ios::binary | std::ios::trunc);
    if (!file) {
        throw std::runtime_error("cannot open " + g.out + " for writing");
    }
    body(file);
    file.close();
    if (!file) {
        throw std::runtime_error("write to " + g.out + " failed");
    }
}

void write_side_file(const std::string& path, const std::function<void(std::ostream&)>& body)
{
    std::ofstream file(path, std::ios::trunc);
    if (!file) {
        throw std::runtime_error("cannot open " + path + " for writing");
    }
    body(file);
    file.close();
    if (!file) {
        throw std::runtime_error("write to " + path + " failed");
    }
}

std::string fmt(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    std::ostringstream s;
    s << std::setprecision(10) << v;
    return s.str();
}

TagStream read_tags(const std::string& path)
{
    auto stream = tag_io::read(path, tag_format_for_path(path));
    stream.check_invariants();
    return stream;
}

std::vector<Picoseconds> channel_times(const TagStream& stream, Channel ch, const std::string& role)
{
    if (ch >= stream.channel_count) {
        throw PreconditionError(role + " channel " + std::to_string(ch) + " is missing; the file has " +
                                std::to_string(stream.channel_count) + " channels");
    }
    return stream.times(ch);
}

std::vector<double> wire_efficiencies(const cascade::CascadeDesign& design)
{
    std::vector<double> etas;
    for (std::size_t k = 0; k < design.size(); ++k) {
        etas.push_back(design.input_fractions[k] * design.wires[k].eta_int);
    }
    return etas;
}

std::vector<double> log_grid(double lo, double hi, std::size_t n)
{
    std::vector<double> grid;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
        grid.push_back(lo * std::pow(hi / lo, f));
    }
    return grid;
}

void write_click_header(std::ostream& o, std::size_t wires)
{
    o << "nbar";
    for (std::size_t k = 0; k <= wires; ++k) {
        o << ",P" << k;
    }
    for (std::size_t k = 0; k <= wires; ++k) {
        o << ",P" << k << "_theory";
    }
    o << '\n';
}

void write_click_row(std::ostream& o, double nbar, const pnr::ClickStatistics& measured,
                     const pnr::ClickStatistics& theory)
{
    o << fmt(nbar);
    for (std::size_t k = 0; k < theory.p.size(); ++k) {
        o << ',' << fmt(measured.at(k));
    }
    for (double p : theory.p) {
        o << ',' << fmt(p);
    }
    o << '\n';
}

std::vector<Channel> wire_channels(const config::ToolkitConfig& cfg, std::size_t wires)
{
    return simkernel::channel_layout(wires, cfg.run_config()).wires;
}

Channel reference_channel(const config::ToolkitConfig& cfg)
{
    if (!cfg.run.reference_channel) {
        throw ConfigError("[run] reference_channel is required for this analysis");
    }
    return *cfg.run.reference_channel;
}

// ---- design ----

void cmd_design(const Globals& g, const std::string& curve_path, std::ostream& out, std::ostream& err)
{
    const auto cfg = load_config(g);
    const auto design = cfg.build_cascade();
    const auto lengths = design.lengths();
    const auto cumulative = design.cumulative_absorption();
    emit(g, out, [&](std::ostream& o) {
        o << "wire,length_um,conditional_absorption,input_fraction,cumulative_absorption\n";
        for (std::size_t k = 0; k < design.size(); ++k) {
            o << k + 1 << ',' << fmt(lengths[k]) << ',' << fmt(design.conditional_absorption[k]) << ','
              << fmt(design.input_fractions[k]) << ',' << fmt(cumulative[k]) << '\n';
        }
    });
    if (!curve_path.empty()) {
        // Cumulative absorption along the waveguide, 20 samples per wire.
        write_side_file(curve_path, [&](std::ostream& o) {
            o << "position_um,cumulative_absorption\n";
            double start = 0.0;
            double transmitted = 1.0;
            o << "0,0\n";
            for (std::size_t k = 0; k < design.size(); ++k) {
                if (!std::isfinite(lengths[k])) {
                    break;
                }
                for (int i = 1; i <= 20; ++i) {
                    const double x = lengths[k] * i / 20.0;
                    const double a = nanowire::absorption_fraction(x, design.wires[k].alpha);
                    o << fmt(start + x) << ',' << fmt(1.0 - transmitted * (1.0 - a)) << '\n';
                }
                start += lengths[k];
                transmitted *= 1.0 - design.conditional_absorption[k];
            }
        });
    }
    err << "wires=" << design.size() << " total_length_um=" << fmt(design.total_length())
        << " residual=" << fmt(design.residual) << " cap_applied=" << (design.cap_applied() ? "yes" : "no") << '\n';
}

// ---- simulate ----

void cmd_simulate(const Globals& g, std::ostream& out)
{
    if (g.out.empty()) {
        throw ConfigError("simulate needs --out");
    }
    const auto cfg = load_config(g);
    const auto design = cfg.build_cascade();
    const auto stream = simkernel::simulate(cfg.source, design, cfg.run_config());
    stream.check_invariants();
    const auto format = g.format.empty() ? tag_format_for_path(g.out) : tag_format_from_string(g.format);
    tag_io::write(stream, g.out, format);
    const auto counts = stream.counts_per_channel();
    out << "tags=" << stream.tags.size() << " duration_ps=" << stream.duration;
    for (std::size_t ch = 0; ch < counts.size(); ++ch) {
        out << " ch" << ch << '=' << counts[ch];
    }
    out << '\n';
}

// ---- correlate ----

struct CorrelateArgs {
    std::string tag_file;
    Channel a = 1;
    Channel b = 2;
    std::optional<Picoseconds> bin;
    std::optional<Picoseconds> range;
    std::string hist_path;
};

void cmd_correlate(const Globals& g, const CorrelateArgs& args, std::ostream& out)
{
    const auto cfg = load_config(g);
    const auto stream = read_tags(args.tag_file);
    const auto a = channel_times(stream, args.a, "first");
    const auto b = channel_times(stream, args.b, "second");
    const Picoseconds bin = args.bin.value_or(cfg.analysis.g2_bin);
    const Picoseconds range = args.range.value_or(cfg.analysis.g2_tau_range);
    const auto r = correlator::g2_normalized(a, b, bin, range, stream.duration);
    emit(g, out, [&](std::ostream& o) {
        o << "tau_ps,value,rel_uncertainty\n";
        for (std::size_t i = 0; i < r.taus.size(); ++i) {
            o << r.taus[i] << ',' << fmt(r.values[i]) << ',' << fmt(r.uncertainties[i]) << '\n';
        }
    });
    if (!args.hist_path.empty()) {
        const auto h = correlator::g2_raw_histogram(a, b, bin, range);
        write_side_file(args.hist_path, [&](std::ostream& o) {
            o << "bin_start_ps,count\n";
            for (std::size_t i = 0; i < h.counts.size(); ++i) {
                o << h.bin_start(i) << ',' << h.counts[i] << '\n';
            }
        });
    }
}

// ---- pnr ----

void cmd_pnr(const Globals& g, std::ostream& out)
{
    const auto cfg = load_config(g);
    const auto design = cfg.build_cascade();
    const auto etas = wire_efficiencies(design);
    const Channel trigger = reference_channel(cfg);
    const auto wires = wire_channels(cfg, design.size());
    const double rep_rate = sources::is_pulsed(cfg.source) ? 1e12 / sources::period_ps(cfg.source) : 50e6;
    const auto grid = log_grid(cfg.analysis.nbar_min, cfg.analysis.nbar_max, cfg.analysis.nbar_points);
    emit(g, out, [&](std::ostream& o) {
        write_click_header(o, design.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            auto run = cfg.run_config();
            run.n_triggers = cfg.run.n_triggers.value_or(1'000'000);
            run.duration_s.reset();
            run.seed = CounterRng(cfg.run.seed, rng_domain::pulse, i, 0xC11)();
            const auto stream = simkernel::simulate(sources::CoherentPulsed{grid[i], rep_rate}, design, run);
            const auto tally = pnr::tally_clicks(stream, trigger, wires, cfg.analysis.click_half_window);
            write_click_row(o, grid[i], tally.empirical(), pnr::click_pattern_probs(grid[i], etas));
        }
    });
}

// ---- fit ----

struct XY {
    std::vector<double> x;
    std::vector<double> y;
};

XY read_xy(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    XY d;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream fields(line);
        double x = 0.0;
        double y = 0.0;
        if (!(fields >> x >> y)) {
            if (d.x.empty() && line_no == 1) {
                continue;  // header
            }
            throw FormatError(path + ":" + std::to_string(line_no) + ": expected two numeric columns");
        }
        d.x.push_back(x);
        d.y.push_back(y);
    }
    if (d.x.empty()) {
        throw FormatError(path + ": no data rows");
    }
    return d;
}

// Moment-based starting point for peak models.
struct Moments {
    double peak;
    double mean;
    double sd;
    double floor;
};

Moments moments(const XY& d)
{
    const double floor = *std::min_element(d.y.begin(), d.y.end());
    double w = 0.0;
    double m = 0.0;
    for (std::size_t i = 0; i < d.x.size(); ++i) {
        w += d.y[i] - floor;
        m += (d.y[i] - floor) * d.x[i];
    }
    m = w > 0.0 ? m / w : d.x[d.x.size() / 2];
    double v = 0.0;
    for (std::size_t i = 0; i < d.x.size(); ++i) {
        v += (d.y[i] - floor) * (d.x[i] - m) * (d.x[i] - m);
    }
    const double span = d.x.back() - d.x.front();
    const double sd = w > 0.0 && v > 0.0 ? std::sqrt(v / w) : std::abs(span) / 4.0 + 1e-12;
    return {*std::max_element(d.y.begin(), d.y.end()) - floor, m, sd, floor};
}

std::vector<double> default_init(const fitkit::FitModel& model, const XY& d)
{
    switch (model.kind()) {
    case fitkit::ModelKind::sinc2_transmission: {
        const auto p = bicwave::default_params();
        return {p.kx, p.L0, *std::max_element(d.y.begin(), d.y.end()) / 2.0};
    }
    case fitkit::ModelKind::line: {
        const auto l = fitkit::ols_line(d.x, d.y);
        return {l.intercept, l.slope};
    }
    case fitkit::ModelKind::exp_decay: {
        const double span = std::abs(d.x.back() - d.x.front());
        return {d.y.front() - d.y.back(), span / 3.0 + 1e-12, d.y.back()};
    }
    case fitkit::ModelKind::gaussian: {
        const auto m = moments(d);
        return {m.peak, m.mean, m.sd, m.floor};
    }
    case fitkit::ModelKind::exgaussian: {
        const auto m = moments(d);
        const double area = m.peak * m.sd * std::sqrt(2.0 * std::numbers::pi);
        return {area, m.mean - 0.3 * m.sd, 0.8 * m.sd, 0.5 * m.sd, m.floor};
    }
    }
    return {};
}

void write_fit(std::ostream& o, const fitkit::FitModel& model, const fitkit::FitResult& r)
{
    o << "model=" << fitkit::to_string(model.kind()) << '\n';
    o << "converged=" << (r.converged ? "true" : "false") << '\n';
    o << "iterations=" << r.iterations << '\n';
    o << "residual_rms=" << fmt(r.residual_rms) << '\n';
    const auto& specs = model.parameters();
    for (std::size_t i = 0; i < specs.size(); ++i) {
        o << specs[i].name << '=' << fmt(r.parameters[i]) << '\n';
        o << specs[i].name << "_stddev=" << fmt(r.stddev(i)) << '\n';
    }
    for (std::size_t i = 0; i < specs.size(); ++i) {
        for (std::size_t j = 0; j < specs.size(); ++j) {
            o << "cov_" << specs[i].name << '_' << specs[j].name << '=' << fmt(r.covariance[i * specs.size() + j])
              << '\n';
        }
    }
    if (model.kind() == fitkit::ModelKind::gaussian || model.kind() == fitkit::ModelKind::exgaussian) {
        o << "fwhm=" << fmt(fitkit::fwhm_of(model, r.parameters)) << '\n';
    }
    if (model.kind() == fitkit::ModelKind::sinc2_transmission) {
        const int order = bicwave::default_params().mode_order;
        o << "w_bic_um=" << fmt(2.0 * std::numbers::pi * order / r.parameters[0]) << '\n';
    }
}

struct FitArgs {
    std::string model;
    std::string data;
    double length_um = 1000.0;
    std::vector<double> init;
};

void cmd_fit(const Globals& g, const FitArgs& args, std::ostream& out)
{
    const auto model = fitkit::FitModel::of_kind(fitkit::model_kind_from_string(args.model), args.length_um);
    const auto d = read_xy(args.data);
    const auto init = args.init.empty() ? default_init(model, d) : args.init;
    if (init.size() != model.arity()) {
        throw ConfigError("fit: --init needs " + std::to_string(model.arity()) + " values");
    }
    const auto r = fitkit::nls_fit(model, d.x, d.y, init);
    emit(g, out, [&](std::ostream& o) { write_fit(o, model, r); });
    if (!r.converged) {
        throw std::runtime_error("fit did not converge: " + r.message);
    }
}

// ---- analyze ----

struct AnalyzeCorrelateArgs {
    std::string tag_file;
    bool conditional = false;
    std::optional<Channel> idler;
    Channel s1 = 1;
    Channel s2 = 2;
};

void cmd_analyze_correlate(const Globals& g, const AnalyzeCorrelateArgs& args, std::ostream& out)
{
    if (!args.conditional) {
        CorrelateArgs plain;
        plain.tag_file = args.tag_file;
        plain.a = args.s1;
        plain.b = args.s2;
        cmd_correlate(g, plain, out);
        return;
    }
    const auto cfg = load_config(g);
    const auto stream = read_tags(args.tag_file);
    const Channel idler = args.idler ? *args.idler : reference_channel(cfg);
    const auto r = correlator::conditional_g2(channel_times(stream, idler, "idler"),
                                              channel_times(stream, args.s1, "s1"),
                                              channel_times(stream, args.s2, "s2"), cfg.analysis.conditional);
    emit(g, out, [&](std::ostream& o) {
        o << "tau_ps,g2c,uncert\n";
        for (std::size_t i = 0; i < r.taus.size(); ++i) {
            // Absolute uncertainty; undefined bins stay NaN.
            o << r.taus[i] << ',' << fmt(r.values[i]) << ',' << fmt(r.values[i] * r.uncertainties[i]) << '\n';
        }
    });
}

struct AnalyzePnrArgs {
    std::vector<std::string> tag_files;
    std::vector<double> nbar;
};

void cmd_analyze_pnr(const Globals& g, const AnalyzePnrArgs& args, std::ostream& out)
{
    if (!args.nbar.empty() && args.nbar.size() != args.tag_files.size()) {
        throw ConfigError("analyze pnr: give one --nbar per tag file");
    }
    const auto cfg = load_config(g);
    const auto design = cfg.build_cascade();
    const auto etas = wire_efficiencies(design);
    const Channel trigger = reference_channel(cfg);
    const auto wires = wire_channels(cfg, design.size());
    emit(g, out, [&](std::ostream& o) {
        write_click_header(o, design.size());
        for (std::size_t i = 0; i < args.tag_files.size(); ++i) {
            const auto stream = read_tags(args.tag_files[i]);
            channel_times(stream, trigger, "trigger");
            for (Channel w : wires) {
                channel_times(stream, w, "wire");
            }
            const auto measured = pnr::tally_clicks(stream, trigger, wires, cfg.analysis.click_half_window).empirical();
            const double nbar = args.nbar.empty() ? pnr::estimate_nbar(measured.at(0), etas) : args.nbar[i];
            write_click_row(o, nbar, measured, pnr::click_pattern_probs(nbar, etas));
        }
    });
}

struct AnalyzeJitterArgs {
    std::string tag_file;
    std::optional<Channel> start;
    Channel stop = 1;
    std::string model = "gaussian";
    std::string hist_path;
};

void cmd_analyze_jitter(const Globals& g, const AnalyzeJitterArgs& args, std::ostream& out)
{
    const auto cfg = load_config(g);
    const auto stream = read_tags(args.tag_file);
    const Channel start = args.start ? *args.start : reference_channel(cfg);
    const auto& a = cfg.analysis;
    const auto h = correlator::start_stop_histogram(channel_times(stream, start, "start"),
                                                    channel_times(stream, args.stop, "stop"), a.jitter_bin,
                                                    a.jitter_t_min, a.jitter_t_max);
    XY d;
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        d.x.push_back(h.bin_center(i));
        d.y.push_back(static_cast<double>(h.counts[i]));
    }
    if (std::accumulate(d.y.begin(), d.y.end(), 0.0) == 0.0) {
        throw UndefinedError("analyze jitter: no start-stop pairs inside the histogram range");
    }
    const auto model = fitkit::FitModel::of_kind(fitkit::model_kind_from_string(args.model));
    if (model.kind() != fitkit::ModelKind::gaussian && model.kind() != fitkit::ModelKind::exgaussian) {
        throw ConfigError("analyze jitter: model must be gaussian or exgaussian");
    }
    const auto r = fitkit::nls_fit(model, d.x, d.y, default_init(model, d));
    emit(g, out, [&](std::ostream& o) { write_fit(o, model, r); });
    if (!args.hist_path.empty()) {
        write_side_file(args.hist_path, [&](std::ostream& o) {
            o << "bin_start_ps,count\n";
            for (std::size_t i = 0; i < h.counts.size(); ++i) {
                o << h.bin_start(i) << ',' << h.counts[i] << '\n';
            }
        });
    }
    if (!r.converged) {
        throw std::runtime_error("jitter fit did not converge: " + r.message);
    }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Inline waveguide SNSPD design, simulation and analysis toolkit", "inline-snspd"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--config", g.config_path, "INI config file (defaults profile when absent)");
    app.add_option("--set", g.overrides, "Override a config value, section.key=value");
    app.add_option("--seed", g.seed, "Override run.seed");
    app.add_option("--workers", g.workers, "Simulation worker threads (0 = all cores)");
    app.add_option("--out", g.out, "Output path (stdout when absent)");
    app.add_option("--format", g.format, "Tag file format for simulate")->check(CLI::IsMember({"csv", "binary"}));

    std::function<void()> action;

    auto* design = app.add_subcommand("design", "Nanowire length table of the configured cascade");
    std::string curve_path;
    design->add_option("--curve", curve_path, "Also write cumulative absorption along the waveguide");
    design->callback([&] { action = [&] { cmd_design(g, curve_path, out, err); }; });

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo tag stream of the configured source and cascade");
    simulate->callback([&] { action = [&] { cmd_simulate(g, out); }; });

    CorrelateArgs corr;
    auto* correlate = app.add_subcommand("correlate", "Normalized cross-correlation g2(tau) of two channels");
    correlate->add_option("tags", corr.tag_file, "Tag file")->required();
    correlate->add_option("--a", corr.a, "First channel");
    correlate->add_option("--b", corr.b, "Second channel");
    correlate->add_option("--bin", corr.bin, "Bin width in ps");
    correlate->add_option("--range", corr.range, "Largest |tau| in ps");
    correlate->add_option("--hist", corr.hist_path, "Also write the raw histogram");
    correlate->callback([&] { action = [&] { cmd_correlate(g, corr, out); }; });

    auto* pnr_cmd = app.add_subcommand("pnr", "Click probabilities over a log nbar sweep, simulated and theory");
    pnr_cmd->callback([&] { action = [&] { cmd_pnr(g, out); }; });

    FitArgs fit_args;
    auto* fit = app.add_subcommand("fit", "Least-squares fit of a model to x,y CSV data");
    fit->add_option("model", fit_args.model, "sinc2_transmission, line, exp_decay, gaussian or exgaussian")
        ->required();
    fit->add_option("data", fit_args.data, "CSV with x,y columns")->required();
    fit->add_option("--length", fit_args.length_um, "Waveguide length in um for sinc2_transmission");
    fit->add_option("--init", fit_args.init, "Initial parameters")->delimiter(',');
    fit->callback([&] { action = [&] { cmd_fit(g, fit_args, out); }; });

    auto* analyze = app.add_subcommand("analyze", "Analysis recipes on tag files");
    analyze->require_subcommand(1);

    AnalyzeCorrelateArgs ac;
    auto* a_corr = analyze->add_subcommand("correlate", "g2 or heralded conditional g2");
    a_corr->add_option("tags", ac.tag_file, "Tag file")->required();
    a_corr->add_flag("--conditional", ac.conditional, "Heralded g2 with the idler as herald");
    a_corr->add_option("--idler", ac.idler, "Herald channel (run.reference_channel by default)");
    a_corr->add_option("--s1", ac.s1, "First signal channel");
    a_corr->add_option("--s2", ac.s2, "Second signal channel");
    a_corr->callback([&] { action = [&] { cmd_analyze_correlate(g, ac, out); }; });

    AnalyzePnrArgs ap;
    auto* a_pnr = analyze->add_subcommand("pnr", "Click probabilities of recorded pulsed runs");
    a_pnr->add_option("tags", ap.tag_files, "Tag files, one per nbar")->required();
    a_pnr->add_option("--nbar", ap.nbar, "Known nbar per file (estimated from P0 otherwise)")->delimiter(',');
    a_pnr->callback([&] { action = [&] { cmd_analyze_pnr(g, ap, out); }; });

    AnalyzeJitterArgs aj;
    auto* a_jit = analyze->add_subcommand("jitter", "Start-stop histogram and FWHM fit");
    a_jit->add_option("tags", aj.tag_file, "Tag file")->required();
    a_jit->add_option("--start", aj.start, "Start channel (run.reference_channel by default)");
    a_jit->add_option("--stop", aj.stop, "Stop channel");
    a_jit->add_option("--model", aj.model, "gaussian or exgaussian");
    a_jit->add_option("--hist", aj.hist_path, "Also write the histogram");
    a_jit->callback([&] { action = [&] { cmd_analyze_jitter(g, aj, out); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_config_error;
    }

    try {
        if (action) {
            action();
        }
        return exit_ok;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return exit_config_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_runtime_error;
    }
}

}  // namespace inline_snspd::cli
