#include "inline_snspd/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>
#include <type_traits>
#include <variant>

#include "inline_snspd/error.hpp"

namespace inline_snspd::config {

namespace pt = boost::property_tree;

namespace {

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(const std::string& text, const std::string& where)
{
    const std::string s = trim(text);
    T value{};
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (!s.empty() && *first == '+') {
        ++first;
    }
    std::from_chars_result r;
    if constexpr (std::is_floating_point_v<T>) {
        r = std::from_chars(first, last, value);
    } else {
        // Accept integral values written as 1e6.
        double d = 0.0;
        r = std::from_chars(first, last, d);
        if (r.ec == std::errc{} && r.ptr == last) {
            if (d < static_cast<double>(std::numeric_limits<T>::lowest()) ||
                d > static_cast<double>(std::numeric_limits<T>::max()) || d != std::floor(d)) {
                throw ConfigError(where + ": '" + s + "' is not a representable integer");
            }
            value = static_cast<T>(d);
        }
    }
    if (s.empty() || r.ec != std::errc{} || r.ptr != last) {
        throw ConfigError(where + ": cannot parse '" + s + "' as a number");
    }
    return value;
}

std::vector<double> parse_list(const std::string& text, const std::string& where)
{
    std::vector<double> out;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!trim(item).empty()) {
            out.push_back(parse_number<double>(item, where));
        }
    }
    return out;
}

std::string format_double(double v)
{
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string format_list(const std::vector<double>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        s += (i ? ", " : "") + format_double(v[i]);
    }
    return s;
}

// Reads keys of one section and remembers which were consumed.
class Section {
public:
    Section(const pt::ptree* node, std::string name) : node_(node), name_(std::move(name)) {}

    std::optional<std::string> raw(const std::string& key)
    {
        known_.insert(key);
        if (node_ == nullptr) {
            return std::nullopt;
        }
        const auto child = node_->get_child_optional(pt::ptree::path_type(key, '\0'));
        if (!child) {
            return std::nullopt;
        }
        return child->data();
    }

    template <class T>
    void read(const std::string& key, T& out)
    {
        if (const auto v = raw(key)) {
            out = parse_number<T>(*v, where(key));
        }
    }

    template <class T>
    void read(const std::string& key, std::optional<T>& out)
    {
        if (const auto v = raw(key)) {
            if (trim(*v).empty() || trim(*v) == "none") {
                out.reset();
            } else {
                out = parse_number<T>(*v, where(key));
            }
        }
    }

    void read_list(const std::string& key, std::vector<double>& out)
    {
        if (const auto v = raw(key)) {
            out = parse_list(*v, where(key));
        }
    }

    bool has(const std::string& key) const
    {
        return node_ != nullptr && node_->get_child_optional(pt::ptree::path_type(key, '\0')).has_value();
    }

    void reject_unknown() const
    {
        if (node_ == nullptr) {
            return;
        }
        for (const auto& [key, value] : *node_) {
            if (!known_.contains(key)) {
                throw ConfigError("[" + name_ + "] unknown key '" + key + "'");
            }
        }
    }

    std::string where(const std::string& key) const { return "[" + name_ + "] " + key; }

private:
    const pt::ptree* node_;
    std::string name_;
    std::set<std::string> known_;
};

const char* source_kind(const sources::SourceSpec& spec)
{
    switch (spec.index()) {
    case 0:
        return "coherent";
    case 1:
        return "thermal";
    case 2:
        return "fock";
    default:
        return "spdc";
    }
}

sources::SourceSpec read_source(Section& s, const sources::SourceSpec& fallback)
{
    std::string kind = source_kind(fallback);
    if (const auto v = s.raw("kind")) {
        kind = trim(*v);
    }
    if (kind == "coherent" || kind == "thermal") {
        double nbar = 1.0;
        double rep = 50e6;
        if (const auto* c = std::get_if<sources::CoherentPulsed>(&fallback)) {
            nbar = c->nbar;
            rep = c->rep_rate;
        } else if (const auto* t = std::get_if<sources::Thermal>(&fallback)) {
            nbar = t->nbar;
            rep = t->rep_rate;
        }
        s.read("nbar", nbar);
        s.read("rep_rate_hz", rep);
        if (kind == "coherent") {
            return sources::CoherentPulsed{nbar, rep};
        }
        return sources::Thermal{nbar, rep};
    }
    if (kind == "fock") {
        sources::FockPulsed f;
        if (const auto* old = std::get_if<sources::FockPulsed>(&fallback)) {
            f = *old;
        }
        s.read("n", f.n);
        s.read("rep_rate_hz", f.rep_rate);
        return f;
    }
    if (kind == "spdc") {
        sources::SpdcCw p;
        if (const auto* old = std::get_if<sources::SpdcCw>(&fallback)) {
            p = *old;
        }
        s.read("pair_rate_hz", p.pair_rate);
        s.read("herald_efficiency", p.herald_efficiency);
        s.read("signal_transmission", p.signal_transmission);
        s.read("herald_jitter_fwhm_ps", p.herald_jitter_fwhm);
        return p;
    }
    throw ConfigError("[source] kind must be coherent, thermal, fock or spdc, got '" + kind + "'");
}

template <class F>
void in_section(const char* name, F&& check)
{
    try {
        check();
    } catch (const ConfigError& e) {
        const std::string what = e.what();
        if (what.rfind(std::string("[") + name + "]", 0) == 0) {
            throw;
        }
        throw ConfigError(std::string("[") + name + "] " + what);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("[") + name + "] " + e.what());
    }
}

}  // namespace

ToolkitConfig defaults()
{
    ToolkitConfig cfg;
    cfg.detector.dead_time = 3.0 * cfg.recovery_time_ns * ps_per_ns;
    cfg.cascade.n = 2;
    cfg.run.n_triggers = 1'000'000;
    cfg.run.duration_s = 1.0;
    cfg.run.trigger_jitter_fwhm = 4.5;
    cfg.run.readout_jitter_fwhm = 29.5;
    return cfg;
}

nanowire::NanowireSpec ToolkitConfig::wire_template() const
{
    nanowire::NanowireSpec w = detector;
    if (bias) {
        w.eta_int = nanowire::internal_efficiency(*bias, bias_curve);
        w.dark_rate = nanowire::dark_rate(*bias, bias_curve);
    }
    return w;
}

cascade::CascadeDesign ToolkitConfig::build_cascade() const
{
    const auto wire = wire_template();
    if (cascade.n) {
        return cascade::design_equal_split(*cascade.n, wire, cascade.last_cap);
    }
    if (!cascade.fractions.empty()) {
        return cascade::design_from_fractions(cascade.fractions, wire, cascade.last_cap);
    }
    return cascade::design_from_conditional(cascade.conditional, wire);
}

simkernel::RunConfig ToolkitConfig::run_config() const
{
    simkernel::RunConfig r = run;
    if (sources::is_pulsed(source)) {
        r.duration_s.reset();
    } else {
        r.n_triggers.reset();
    }
    return r;
}

void ToolkitConfig::validate() const
{
    in_section("waveguide", [&] {
        waveguide.validate();
        if (!(residual_db_per_cm >= 0.0)) {
            throw ConfigError("residual_db_per_cm must be >= 0");
        }
    });
    in_section("detector", [&] {
        if (!(recovery_time_ns > 0.0)) {
            throw ConfigError("recovery_time_ns must be > 0");
        }
        bias_curve.validate();
        wire_template().validate();
    });
    std::size_t wires = 0;
    in_section("cascade", [&] {
        const int given = int(cascade.n.has_value()) + int(!cascade.fractions.empty()) +
                          int(!cascade.conditional.empty());
        if (given != 1) {
            throw ConfigError("set exactly one of n, fractions or conditional");
        }
        if (!cascade.fractions.empty()) {
            const double sum = std::accumulate(cascade.fractions.begin(), cascade.fractions.end(), 0.0);
            if (sum > 1.0 + 1e-12) {
                throw ConfigError("fractions sum to " + format_double(sum) + " > 1");
            }
        }
        wires = build_cascade().size();
    });
    in_section("source", [&] { sources::validate(source); });
    in_section("run", [&] {
        const auto r = run_config();
        if (sources::is_pulsed(source) && !r.n_triggers) {
            throw ConfigError("pulsed source needs n_triggers");
        }
        if (!sources::is_pulsed(source) && !r.duration_s) {
            throw ConfigError("spdc source needs duration_s");
        }
        r.validate();
        simkernel::channel_layout(wires, r);
    });
    in_section("analysis", [&] {
        analysis.conditional.validate();
        if (analysis.click_half_window < 0 || analysis.g2_bin <= 0 || analysis.g2_tau_range < 0 ||
            analysis.jitter_bin <= 0 || analysis.jitter_t_min >= analysis.jitter_t_max) {
            throw ConfigError("windows and bins must be positive with jitter_t_min < jitter_t_max");
        }
        if (!(analysis.nbar_min > 0.0) || !(analysis.nbar_max >= analysis.nbar_min) || analysis.nbar_points == 0) {
            throw ConfigError("need 0 < nbar_min <= nbar_max and nbar_points >= 1");
        }
    });
}

ToolkitConfig parse(std::istream& in, std::span<const std::string> overrides)
{
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config syntax: ") + e.what());
    }
    for (const auto& item : overrides) {
        const auto eq = item.find('=');
        const auto dot = item.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot > eq || dot == 0 || dot + 1 == eq) {
            throw ConfigError("override '" + item + "' is not section.key=value");
        }
        const std::string section = trim(std::string_view(item).substr(0, dot));
        const std::string key = trim(std::string_view(item).substr(dot + 1, eq - dot - 1));
        const pt::ptree::path_type section_path(section, '\0');
        if (!tree.get_child_optional(section_path)) {
            tree.push_back({section, pt::ptree{}});
        }
        auto& node = tree.get_child(section_path);
        if (section == "cascade" && (key == "n" || key == "fractions" || key == "conditional")) {
            // An override of the cascade shape replaces the one in the file.
            for (const char* shape : {"n", "fractions", "conditional"}) {
                node.erase(shape);
            }
        }
        node.put(pt::ptree::path_type(key, '\0'), trim(std::string_view(item).substr(eq + 1)));
    }
    static const std::set<std::string> sections{"waveguide", "detector", "cascade", "source", "run", "analysis"};
    for (const auto& [name, node] : tree) {
        if (!sections.contains(name)) {
            throw ConfigError("unknown section [" + name + "]");
        }
        if (node.empty() && !node.data().empty()) {
            throw ConfigError("key '" + name + "' outside any section");
        }
    }
    auto section = [&](const std::string& name) {
        const auto child = tree.get_child_optional(pt::ptree::path_type(name, '\0'));
        return Section(child ? &*child : nullptr, name);
    };

    ToolkitConfig cfg = defaults();

    auto wg = section("waveguide");
    wg.read("kx", cfg.waveguide.kx);
    wg.read("L0_um", cfg.waveguide.L0);
    wg.read("c_gc_db", cfg.waveguide.c_gc);
    wg.read("mode_order", cfg.waveguide.mode_order);
    wg.read("residual_db_per_cm", cfg.residual_db_per_cm);
    if (const auto w = wg.raw("bic_width_um")) {
        // Convenience: place the BIC of the configured mode order here.
        if (wg.has("kx")) {
            throw ConfigError("[waveguide] set kx or bic_width_um, not both");
        }
        const double width = parse_number<double>(*w, wg.where("bic_width_um"));
        if (!(width > 0.0)) {
            throw ConfigError("[waveguide] bic_width_um must be > 0");
        }
        cfg.waveguide.kx = 2.0 * std::numbers::pi * cfg.waveguide.mode_order / width;
    }
    wg.reject_unknown();

    auto det = section("detector");
    det.read("length_um", cfg.detector.length);
    det.read("alpha_db_per_um", cfg.detector.alpha);
    det.read("eta_int", cfg.detector.eta_int);
    det.read("jitter_fwhm_ps", cfg.detector.jitter_fwhm);
    det.read("dark_rate_hz", cfg.detector.dark_rate);
    det.read("recovery_time_ns", cfg.recovery_time_ns);
    cfg.detector.dead_time = 3.0 * cfg.recovery_time_ns * ps_per_ns;
    det.read("dead_time_ps", cfg.detector.dead_time);
    det.read("bias", cfg.bias);
    det.read("bias_eta_max", cfg.bias_curve.eta_max);
    det.read("bias_mid", cfg.bias_curve.bias_mid);
    det.read("bias_width", cfg.bias_curve.bias_width);
    det.read("bias_dcr0_hz", cfg.bias_curve.dcr0);
    det.read("bias_dcr_gamma", cfg.bias_curve.dcr_gamma);
    det.reject_unknown();

    auto cas = section("cascade");
    if (cas.has("fractions") || cas.has("conditional")) {
        cfg.cascade.n.reset();
    }
    cas.read("n", cfg.cascade.n);
    cas.read_list("fractions", cfg.cascade.fractions);
    cas.read_list("conditional", cfg.cascade.conditional);
    cas.read("last_cap", cfg.cascade.last_cap);
    cas.reject_unknown();

    auto src = section("source");
    cfg.source = read_source(src, cfg.source);
    src.reject_unknown();

    auto run = section("run");
    run.read("seed", cfg.run.seed);
    run.read("n_triggers", cfg.run.n_triggers);
    run.read("duration_s", cfg.run.duration_s);
    run.read("reference_channel", cfg.run.reference_channel);
    run.read("trigger_jitter_fwhm_ps", cfg.run.trigger_jitter_fwhm);
    run.read("readout_jitter_fwhm_ps", cfg.run.readout_jitter_fwhm);
    run.read("reference_dead_time_ps", cfg.run.reference_dead_time);
    run.read("background_rate_per_nbar", cfg.run.background_rate_per_nbar);
    run.read("workers", cfg.run.workers);
    run.reject_unknown();

    auto an = section("analysis");
    an.read("w_coinc_ps", cfg.analysis.conditional.w_coinc);
    an.read("w_bin_ps", cfg.analysis.conditional.w_bin);
    an.read("tau_range_ps", cfg.analysis.conditional.tau_range);
    an.read("click_half_window_ps", cfg.analysis.click_half_window);
    an.read("g2_bin_ps", cfg.analysis.g2_bin);
    an.read("g2_tau_range_ps", cfg.analysis.g2_tau_range);
    an.read("jitter_bin_ps", cfg.analysis.jitter_bin);
    an.read("jitter_t_min_ps", cfg.analysis.jitter_t_min);
    an.read("jitter_t_max_ps", cfg.analysis.jitter_t_max);
    an.read("nbar_min", cfg.analysis.nbar_min);
    an.read("nbar_max", cfg.analysis.nbar_max);
    an.read("nbar_points", cfg.analysis.nbar_points);
    an.reject_unknown();

    cfg.validate();
    return cfg;
}

ToolkitConfig load(const std::filesystem::path& path, std::span<const std::string> overrides)
{
    if (path.empty()) {
        std::istringstream none;
        return parse(none, overrides);
    }
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path.string());
    }
    return parse(in, overrides);
}

std::string to_ini(const ToolkitConfig& cfg)
{
    std::ostringstream o;
    auto kv = [&](const char* key, const std::string& value) { o << key << " = " << value << '\n'; };
    auto num = [&](const char* key, double v) { kv(key, format_double(v)); };
    auto integer = [&](const char* key, std::int64_t v) { kv(key, std::to_string(v)); };

    o << "[waveguide]\n";
    num("kx", cfg.waveguide.kx);
    num("L0_um", cfg.waveguide.L0);
    num("c_gc_db", cfg.waveguide.c_gc);
    integer("mode_order", cfg.waveguide.mode_order);
    num("residual_db_per_cm", cfg.residual_db_per_cm);

    o << "\n[detector]\n";
    num("length_um", cfg.detector.length);
    num("alpha_db_per_um", cfg.detector.alpha);
    num("eta_int", cfg.detector.eta_int);
    num("jitter_fwhm_ps", cfg.detector.jitter_fwhm);
    num("dark_rate_hz", cfg.detector.dark_rate);
    num("recovery_time_ns", cfg.recovery_time_ns);
    num("dead_time_ps", cfg.detector.dead_time);
    kv("bias", cfg.bias ? format_double(*cfg.bias) : "none");
    num("bias_eta_max", cfg.bias_curve.eta_max);
    num("bias_mid", cfg.bias_curve.bias_mid);
    num("bias_width", cfg.bias_curve.bias_width);
    num("bias_dcr0_hz", cfg.bias_curve.dcr0);
    num("bias_dcr_gamma", cfg.bias_curve.dcr_gamma);

    o << "\n[cascade]\n";
    if (cfg.cascade.n) {
        integer("n", static_cast<std::int64_t>(*cfg.cascade.n));
    }
    if (!cfg.cascade.fractions.empty()) {
        kv("fractions", format_list(cfg.cascade.fractions));
    }
    if (!cfg.cascade.conditional.empty()) {
        kv("conditional", format_list(cfg.cascade.conditional));
    }
    num("last_cap", cfg.cascade.last_cap);

    o << "\n[source]\n";
    kv("kind", source_kind(cfg.source));
    std::visit(
        [&](const auto& s) {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, sources::CoherentPulsed> || std::is_same_v<S, sources::Thermal>) {
                num("nbar", s.nbar);
                num("rep_rate_hz", s.rep_rate);
            } else if constexpr (std::is_same_v<S, sources::FockPulsed>) {
                integer("n", s.n);
                num("rep_rate_hz", s.rep_rate);
            } else {
                num("pair_rate_hz", s.pair_rate);
                num("herald_efficiency", s.herald_efficiency);
                num("signal_transmission", s.signal_transmission);
                num("herald_jitter_fwhm_ps", s.herald_jitter_fwhm);
            }
        },
        cfg.source);

    o << "\n[run]\n";
    kv("seed", std::to_string(cfg.run.seed));
    kv("n_triggers", cfg.run.n_triggers ? std::to_string(*cfg.run.n_triggers) : "none");
    kv("duration_s", cfg.run.duration_s ? format_double(*cfg.run.duration_s) : "none");
    kv("reference_channel", cfg.run.reference_channel ? std::to_string(*cfg.run.reference_channel) : "none");
    num("trigger_jitter_fwhm_ps", cfg.run.trigger_jitter_fwhm);
    num("readout_jitter_fwhm_ps", cfg.run.readout_jitter_fwhm);
    num("reference_dead_time_ps", cfg.run.reference_dead_time);
    num("background_rate_per_nbar", cfg.run.background_rate_per_nbar);
    integer("workers", cfg.run.workers);

    o << "\n[analysis]\n";
    integer("w_coinc_ps", cfg.analysis.conditional.w_coinc);
    integer("w_bin_ps", cfg.analysis.conditional.w_bin);
    integer("tau_range_ps", cfg.analysis.conditional.tau_range);
    integer("click_half_window_ps", cfg.analysis.click_half_window);
    integer("g2_bin_ps", cfg.analysis.g2_bin);
    integer("g2_tau_range_ps", cfg.analysis.g2_tau_range);
    integer("jitter_bin_ps", cfg.analysis.jitter_bin);
    integer("jitter_t_min_ps", cfg.analysis.jitter_t_min);
    integer("jitter_t_max_ps", cfg.analysis.jitter_t_max);
    num("nbar_min", cfg.analysis.nbar_min);
    num("nbar_max", cfg.analysis.nbar_max);
    integer("nbar_points", static_cast<std::int64_t>(cfg.analysis.nbar_points));
    return o.str();
}

}  // namespace inline_snspd::config
