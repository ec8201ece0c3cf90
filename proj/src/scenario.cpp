#include "ewi/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "ewi/analysis.hpp"
#include "ewi/output.hpp"
#include "ewi/semiclassical.hpp"
#include "ewi/stationary.hpp"
#include "ewi/wavepacket.hpp"

namespace ewi {

namespace {

std::string join(const std::vector<std::string>& parts)
{
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? "; " : "") + parts[i];
    return out;
}

// Reads typed keys from one JSON object and records every problem.
class Section {
public:
    Section(const nlohmann::json& doc, std::string path, std::vector<std::string>& errs)
        : path_(std::move(path)), errs_(errs)
    {
        if (doc.is_null()) return;
        if (!doc.is_object()) {
            errs_.push_back(path_ + ": expected an object");
            return;
        }
        obj_ = &doc;
    }

    void number(const char* key, double& out) { read(key, [&](const nlohmann::json& v) { return as_number(v, out); }); }

    void optional_number(const char* key, std::optional<double>& out)
    {
        read(key, [&](const nlohmann::json& v) {
            if (v.is_null()) {
                out.reset();
                return true;
            }
            double x = 0;
            if (!as_number(v, x)) return false;
            out = x;
            return true;
        });
    }

    template<class Int>
    void integer(const char* key, Int& out)
    {
        read(key, [&](const nlohmann::json& v) {
            if (!v.is_number_integer()) return false;
            if constexpr (std::is_unsigned_v<Int>) {
                if (v.is_number_unsigned()) {
                    out = v.get<Int>();
                    return true;
                }
                return false;
            }
            out = v.get<Int>();
            return true;
        });
    }

    void optional_integer(const char* key, std::optional<int>& out)
    {
        read(key, [&](const nlohmann::json& v) {
            if (v.is_null()) {
                out.reset();
                return true;
            }
            if (!v.is_number_integer()) return false;
            out = v.get<int>();
            return true;
        });
    }

    void boolean(const char* key, bool& out)
    {
        read(key, [&](const nlohmann::json& v) {
            if (!v.is_boolean()) return false;
            out = v.get<bool>();
            return true;
        });
    }

    void string(const char* key, std::string& out)
    {
        read(key, [&](const nlohmann::json& v) {
            if (!v.is_string()) return false;
            out = v.get<std::string>();
            return true;
        });
    }

    void number_list(const char* key, std::vector<double>& out)
    {
        read(key, [&](const nlohmann::json& v) {
            if (!v.is_array()) return false;
            std::vector<double> xs;
            for (const auto& e : v) {
                double x = 0;
                if (!as_number(e, x)) return false;
                xs.push_back(x);
            }
            out = std::move(xs);
            return true;
        });
    }

    const nlohmann::json& child(const char* key)
    {
        static const nlohmann::json null;
        known_.insert(key);
        if (!obj_ || !obj_->contains(key)) return null;
        return obj_->at(key);
    }

    bool has(const char* key) const { return obj_ && obj_->contains(key); }

    /// Records unknown keys; call after all reads.
    void finish()
    {
        if (!obj_) return;
        for (const auto& [key, value] : obj_->items())
            if (!known_.count(key)) errs_.push_back(qualified(key) + ": unknown key");
    }

private:
    static bool as_number(const nlohmann::json& v, double& out)
    {
        if (!v.is_number()) return false;
        out = v.get<double>();
        return true;
    }

    template<class F>
    void read(const char* key, F&& parse)
    {
        known_.insert(key);
        if (!obj_ || !obj_->contains(key)) return;
        if (!parse(obj_->at(key))) errs_.push_back(qualified(key) + ": wrong type (" + obj_->at(key).dump() + ")");
    }

    std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const nlohmann::json* obj_ = nullptr;
    std::string path_;
    std::vector<std::string>& errs_;
    std::set<std::string> known_;
};

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

bool valid_side(const std::string& s) { return s == "stationary" || s == "stationary-k0" || s == "wavepacket"; }

} // namespace

ScenarioError::ScenarioError(std::vector<std::string> violations)
    : DomainError("invalid scenario: " + join(violations)), violations_(std::move(violations))
{
}

std::string to_string(Route route)
{
    switch (route) {
    case Route::Semiclassical: return "semiclassical";
    case Route::Stationary: return "stationary";
    case Route::Wavepacket: return "wavepacket";
    case Route::Compare: return "compare";
    }
    return "unknown";
}

std::vector<std::string> Scenario::violations() const
{
    std::vector<std::string> out;
    auto finite = [](double x) { return std::isfinite(x); };
    if (!(finite(p0) && p0 > 0)) out.push_back("physics.p0 must be finite and > 0");
    for (const auto& v : PotentialConfig::violations(v1, kappa, beta)) out.push_back("physics." + v);
    if (k_nodes && (*k_nodes < 1 || *k_nodes % 2 == 0)) out.push_back("recoil.k_nodes must be odd and >= 1");
    if (n_p < 2) out.push_back("grid.n_p must be >= 2");
    if (p_lo && !(finite(*p_lo) && *p_lo > 0)) out.push_back("grid.p_lo must be finite and > 0");
    if (p_hi && !finite(*p_hi)) out.push_back("grid.p_hi must be finite");
    if (out.empty()) {
        const auto grid = scenario_momentum_grid(*this);
        if (!(grid.back() > grid.front())) out.push_back("grid: p_lo must be below p_hi");
    }
    for (double k : k_values) {
        if (!(finite(k) && std::fabs(k) <= recoil.k0))
            out.push_back("stationary.k_values entries must satisfy |k| <= k0 = 1");
        else if (beta > 0 && beta < 1 && p0 > 0 && (k / p0) * (k / p0) / (1 - beta) > 1)
            out.push_back("stationary.k_values: (k/p0)^2/(1 - beta) must be <= 1");
    }
    if (z_min && !finite(*z_min)) out.push_back("stationary.z_min must be finite");
    if (z_max && !finite(*z_max)) out.push_back("stationary.z_max must be finite");
    if (z_min && z_max && !(*z_min < *z_max)) out.push_back("stationary: z_min must be below z_max");
    if (dz && !(finite(*dz) && *dz > 0)) out.push_back("stationary.dz must be finite and > 0");
    if (!(finite(sigma_z) && sigma_z > 0)) out.push_back("wavepacket.sigma_z must be finite and > 0");
    if (!(finite(t_end) && t_end > 0)) out.push_back("wavepacket.t_end must be finite and > 0");
    if (!(bounce_fraction > 0 && bounce_fraction < 1)) out.push_back("wavepacket.bounce_fraction must be in (0, 1)");
    if (tau_nodes < 1) out.push_back("wavepacket.tau_nodes must be >= 1");
    if (dt && !(finite(*dt) && *dt > 0)) out.push_back("wavepacket.dt must be finite and > 0");
    if (estimator != "quadrature" && estimator != "sampled")
        out.push_back("wavepacket.estimator must be quadrature or sampled");
    if (samples < 1) out.push_back("wavepacket.samples must be >= 1");
    for (double k : phase_k_values)
        if (!(finite(k) && std::fabs(k) <= recoil.k0))
            out.push_back("semiclassical.k_values entries must satisfy |k| <= k0 = 1");
    if (!valid_side(compare_a)) out.push_back("compare.a must be stationary, stationary-k0 or wavepacket");
    if (!valid_side(compare_b)) out.push_back("compare.b must be stationary, stationary-k0 or wavepacket");
    if (valid_side(compare_a) && compare_a == compare_b) out.push_back("compare: a and b must differ");
    if (region_lo && !finite(*region_lo)) out.push_back("analysis.p_lo must be finite");
    if (region_hi && !finite(*region_hi)) out.push_back("analysis.p_hi must be finite");
    if (region_lo && region_hi && !(*region_lo < *region_hi)) out.push_back("analysis: p_lo must be below p_hi");
    if (!(prominence > 0 && prominence < 1)) out.push_back("analysis.prominence must be in (0, 1)");
    if (out_dir.empty()) out.push_back("output.dir must not be empty");
    if (name.empty() || name.find('/') != std::string::npos)
        out.push_back("output.name must be a non-empty file stem without '/'");
    return out;
}

nlohmann::json Scenario::to_json() const
{
    return {
        {"route", to_string(route)},
        {"physics", {{"p0", p0}, {"v1", v1}, {"kappa", kappa}, {"beta", beta}}},
        {"recoil", {{"model", to_string(recoil.kind)}, {"k_nodes", k_nodes ? nlohmann::json(*k_nodes) : nlohmann::json(nullptr)}}},
        {"grid", {{"n_p", n_p}, {"p_lo", opt(p_lo)}, {"p_hi", opt(p_hi)}}},
        {"stationary", {{"k_values", k_values}, {"z_min", opt(z_min)}, {"z_max", opt(z_max)}, {"dz", opt(dz)}}},
        {"wavepacket",
         {{"sigma_z", sigma_z},
          {"t_end", t_end},
          {"bounce_fraction", bounce_fraction},
          {"tau_nodes", tau_nodes},
          {"dt", opt(dt)},
          {"estimator", estimator},
          {"samples", samples},
          {"seed", seed}}},
        {"semiclassical", {{"k_values", phase_k_values}}},
        {"compare", {{"a", compare_a}, {"b", compare_b}}},
        {"analysis",
         {{"p_lo", opt(region_lo)}, {"p_hi", opt(region_hi)}, {"prominence", prominence}, {"smooth", smooth}}},
        {"output", {{"dir", out_dir}, {"name", name}, {"plot", plot}, {"deterministic", deterministic}}},
    };
}

Scenario parse_scenario(const nlohmann::json& doc)
{
    std::vector<std::string> errs;
    Scenario s;
    if (!doc.is_object()) throw ScenarioError({"scenario must be a JSON object"});
    Section top(doc, "", errs);

    std::string route;
    if (!doc.contains("route")) errs.push_back("route: required (semiclassical|stationary|wavepacket|compare)");
    top.string("route", route);
    if (route == "semiclassical") s.route = Route::Semiclassical;
    else if (route == "stationary") s.route = Route::Stationary;
    else if (route == "wavepacket") s.route = Route::Wavepacket;
    else if (route == "compare") s.route = Route::Compare;
    else if (!route.empty()) errs.push_back("route: unknown value '" + route + "'");

    Section physics(top.child("physics"), "physics", errs);
    if (!physics.has("p0")) errs.push_back("physics.p0: required");
    physics.number("p0", s.p0);
    physics.number("v1", s.v1);
    physics.number("kappa", s.kappa);
    physics.number("beta", s.beta);
    physics.finish();

    Section recoil(top.child("recoil"), "recoil", errs);
    std::string model = to_string(s.recoil.kind);
    recoil.string("model", model);
    try {
        s.recoil.kind = recoil_kind_from_string(model);
    } catch (const DomainError& e) {
        errs.push_back(std::string("recoil.model: ") + e.what());
    }
    recoil.optional_integer("k_nodes", s.k_nodes);
    recoil.finish();

    Section grid(top.child("grid"), "grid", errs);
    grid.integer("n_p", s.n_p);
    grid.optional_number("p_lo", s.p_lo);
    grid.optional_number("p_hi", s.p_hi);
    grid.finish();

    Section st(top.child("stationary"), "stationary", errs);
    st.number_list("k_values", s.k_values);
    st.optional_number("z_min", s.z_min);
    st.optional_number("z_max", s.z_max);
    st.optional_number("dz", s.dz);
    st.finish();

    Section wp(top.child("wavepacket"), "wavepacket", errs);
    wp.number("sigma_z", s.sigma_z);
    wp.number("t_end", s.t_end);
    wp.number("bounce_fraction", s.bounce_fraction);
    wp.integer("tau_nodes", s.tau_nodes);
    wp.optional_number("dt", s.dt);
    wp.string("estimator", s.estimator);
    wp.integer("samples", s.samples);
    wp.integer("seed", s.seed);
    wp.finish();

    Section sc(top.child("semiclassical"), "semiclassical", errs);
    sc.number_list("k_values", s.phase_k_values);
    sc.finish();

    Section cmp(top.child("compare"), "compare", errs);
    cmp.string("a", s.compare_a);
    cmp.string("b", s.compare_b);
    cmp.finish();

    Section an(top.child("analysis"), "analysis", errs);
    an.optional_number("p_lo", s.region_lo);
    an.optional_number("p_hi", s.region_hi);
    an.number("prominence", s.prominence);
    an.boolean("smooth", s.smooth);
    an.finish();

    Section out(top.child("output"), "output", errs);
    out.string("dir", s.out_dir);
    out.string("name", s.name);
    out.boolean("plot", s.plot);
    out.boolean("deterministic", s.deterministic);
    out.finish();

    top.finish();

    // Semantic checks only make sense once every field parsed.
    if (errs.empty())
        for (auto& v : s.violations()) errs.push_back(std::move(v));
    if (!errs.empty()) throw ScenarioError(std::move(errs));
    return s;
}

nlohmann::json read_scenario_document(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ScenarioError({"cannot read scenario file '" + path + "'"});
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return nlohmann::json::parse(buf.str(), nullptr, true, true);
    } catch (const nlohmann::json::parse_error& e) {
        throw ScenarioError({"'" + path + "' is not valid JSON: " + e.what()});
    }
}

std::vector<double> scenario_momentum_grid(const Scenario& s)
{
    const double k0 = s.recoil.k0;
    const double lo = s.p_lo.value_or(0.9 * std::sqrt(s.beta) * s.p0);
    const double hi = s.p_hi.value_or(1.1 * (s.p0 + k0));
    std::vector<double> grid(static_cast<std::size_t>(s.n_p));
    for (int i = 0; i < s.n_p; ++i) grid[i] = lo + (hi - lo) * i / (s.n_p - 1);
    return grid;
}

namespace {

struct Runner {
    const Scenario& s;
    PotentialConfig config;
    std::filesystem::path dir;
    nlohmann::json artifacts = nlohmann::json::object();
    std::vector<std::string> written;

    explicit Runner(const Scenario& sc) : s(sc), config(sc.v1, sc.kappa, sc.beta), dir(sc.out_dir) {}

    std::string path(const std::string& suffix) const { return (dir / (s.name + suffix)).string(); }

    void stamp(nlohmann::json& meta) const
    {
        meta["version"] = EWI_VERSION;
        meta["scenario"] = s.to_json();
        // Where a table is written does not change what it contains.
        meta["scenario"]["output"].erase("dir");
    }

    void table(const std::string& suffix, MomentumDistribution& dist)
    {
        stamp(dist.meta());
        const auto p = path(suffix);
        write_spectrum_table(p, dist);
        artifacts[s.name + suffix] = {{"meta_hash", metadata_hash(dist.meta())}, {"meta", dist.meta()}};
        written.push_back(p);
    }

    void plot(const std::vector<PlotSeries>& series, const std::string& title, std::vector<double> markers = {})
    {
        if (!s.plot) return;
        PlotOptions o;
        o.title = title;
        o.markers = std::move(markers);
        const auto p = path(".svg");
        write_svg_plot(p, series, o);
        written.push_back(p);
    }

    Region region() const
    {
        const Region def = default_region(s.p0, config);
        return {s.region_lo.value_or(def.lo), s.region_hi.value_or(def.hi)};
    }

    FringeOptions fringe_options() const { return {s.prominence, s.smooth}; }

    OverlapConfig overlap_config(RecoilModel recoil) const
    {
        OverlapConfig oc = OverlapConfig::defaults(s.p0, config, recoil, s.stationary_k_nodes());
        oc.p_grid = scenario_momentum_grid(s);
        if (s.z_min) oc.z_min = *s.z_min;
        if (s.z_max) oc.z_max = *s.z_max;
        if (s.dz) oc.dz = *s.dz;
        const auto bad = oc.violations(s.p0, config);
        if (!bad.empty()) throw ScenarioError(bad);
        return oc;
    }

    MomentumDistribution stationary(RecoilModel recoil) const
    {
        return averaged_spectrum(s.p0, config, overlap_config(recoil));
    }

    MomentumDistribution wavepacket() const
    {
        const auto spec = WavePacketSpec::make(s.p0, s.sigma_z, config, s.t_end, s.bounce_fraction, s.recoil.k0);
        WavePacketOptions o;
        o.tau_nodes = s.tau_nodes;
        o.k_nodes = s.wavepacket_k_nodes();
        o.p_grid = scenario_momentum_grid(s);
        o.dt = s.dt.value_or(0.0);
        o.k0 = s.recoil.k0;
        if (s.estimator == "sampled") return sampled_spectrum(spec, config, s.recoil, s.t_end, s.samples, s.seed, o);
        return final_spectrum(spec, config, s.recoil, s.t_end, o);
    }

    MomentumDistribution side(const std::string& which) const
    {
        if (which == "wavepacket") return wavepacket();
        if (which == "stationary-k0") return stationary({RecoilKind::None, s.recoil.k0});
        return stationary(s.recoil);
    }

    void run_stationary()
    {
        if (s.k_values.empty()) {
            auto d = stationary(s.recoil);
            table(".txt", d);
            plot({{"averaged", d.p(), d.density()}}, "stationary spectrum, recoil " + to_string(s.recoil.kind),
                 {region().lo, region().hi});
            return;
        }
        auto sweep = overlap_sweep(s.p0, config, s.k_values, overlap_config(s.recoil));
        std::vector<std::string> names{"p"};
        std::vector<std::vector<double>> cols{sweep.front().p()};
        std::vector<PlotSeries> series;
        for (std::size_t i = 0; i < sweep.size(); ++i) {
            table("_k" + std::to_string(i) + ".txt", sweep[i]);
            names.push_back("k=" + format_number(s.k_values[i]));
            cols.push_back(sweep[i].density());
            // Each curve scaled to its own peak so the k-dependence of the shape is visible.
            std::vector<double> y = sweep[i].density();
            const double peak = sweep[i].peak();
            for (double& v : y) v = peak > 0 ? v / peak : 0.0;
            series.push_back({"k = " + std::to_string(s.k_values[i]).substr(0, 6), sweep[i].p(), std::move(y)});
        }
        nlohmann::json meta = {{"route", "stationary"}, {"k", s.k_values}};
        stamp(meta);
        const auto p = path("_sweep.txt");
        write_table(p, names, cols, meta);
        artifacts[s.name + "_sweep.txt"] = {{"meta_hash", metadata_hash(meta)}, {"meta", meta}};
        written.push_back(p);
        plot(series, "k-resolved stationary spectra (peak-normalized)");
    }

    void run_wavepacket()
    {
        auto d = wavepacket();
        table(".txt", d);
        plot({{"wave packet", d.p(), d.density()}}, "wave-packet spectrum, sigma_z = " + std::to_string(s.sigma_z),
             {region().lo, region().hi});
    }

    void run_semiclassical()
    {
        const auto grid = scenario_momentum_grid(s);
        std::vector<std::string> names{"p"};
        std::vector<std::vector<double>> cols{grid};
        nlohmann::json fringes = nlohmann::json::array();
        std::vector<PlotSeries> series;
        for (double k : s.phase_k_values) {
            const auto band = interference_band(s.p0, s.beta, k);
            std::vector<double> phase(grid.size(), std::nan(""));
            for (std::size_t i = 0; i < grid.size(); ++i)
                if (band && grid[i] > band->lo && grid[i] < band->hi)
                    phase[i] = phase_difference(s.p0, grid[i], config, k);
            names.push_back("phase_k=" + format_number(k));
            series.push_back({"k = " + std::to_string(k).substr(0, 6), grid, phase});
            cols.push_back(std::move(phase));
            fringes.push_back({{"k", k},
                               {"band", band ? nlohmann::json{band->lo, band->hi} : nlohmann::json(nullptr)},
                               {"fringe_momenta", predicted_fringe_momenta(s.p0, config, k)}});
        }
        nlohmann::json meta = {{"route", "semiclassical"}, {"p0", s.p0}, {"potential", config.to_json()},
                               {"k", s.phase_k_values}, {"predicted", fringes}};
        stamp(meta);
        const auto p = path(".txt");
        write_table(p, names, cols, meta);
        artifacts[s.name + ".txt"] = {{"meta_hash", metadata_hash(meta)}, {"meta", meta}};
        written.push_back(p);
        if (s.plot) {
            PlotOptions o;
            o.title = "enclosed-area phase (rad); nan outside the two-path band";
            o.y_label = "phase";
            const auto svg = path(".svg");
            write_svg_plot(svg, series, o);
            written.push_back(svg);
        }
    }

    void fringe_table(const std::string& suffix, const FringeReport& r)
    {
        std::vector<double> kind, pos, val;
        for (std::size_t i = 0; i < r.minima.size(); ++i) {
            kind.push_back(-1);
            pos.push_back(r.minima[i]);
            val.push_back(r.minima_values[i]);
        }
        for (std::size_t i = 0; i < r.maxima.size(); ++i) {
            kind.push_back(1);
            pos.push_back(r.maxima[i]);
            val.push_back(r.maxima_values[i]);
        }
        nlohmann::json meta = {{"route", "compare"}, {"fringes", r.to_json()}};
        stamp(meta);
        const auto p = path(suffix);
        if (kind.empty()) {
            // Empty report: header only.
            std::ofstream out(p);
            out << "# ewi " << EWI_VERSION << "\n# meta_hash: " << metadata_hash(meta)
                << "\n# columns: extremum p density\n";
        } else {
            write_table(p, {"extremum(-1=min,+1=max)", "p", "density"}, {kind, pos, val}, meta);
        }
        artifacts[s.name + suffix] = {{"meta_hash", metadata_hash(meta)}, {"meta", meta}};
        written.push_back(p);
    }

    void run_compare()
    {
        auto a = side(s.compare_a);
        auto b = side(s.compare_b);
        const Region reg = region();
        const auto fa = extract_fringes(a, reg.lo, reg.hi, fringe_options());
        const auto fb = extract_fringes(b, reg.lo, reg.hi, fringe_options());
        const auto cmp = compare_routes(a, b, &reg, fringe_options());
        table("_a.txt", a);
        table("_b.txt", b);
        fringe_table("_fringes_a.txt", fa);
        fringe_table("_fringes_b.txt", fb);
        nlohmann::json summary = {{"a", s.compare_a},
                                  {"b", s.compare_b},
                                  {"region", {reg.lo, reg.hi}},
                                  {"l1", cmp.l1},
                                  {"minima_shift", cmp.minima_shift},
                                  {"matched_minima", cmp.matched},
                                  {"overlap", cmp.overlap},
                                  {"half_spacing_a", 0.5 * fa.mean_spacing},
                                  {"fringes_a", fa.to_json()},
                                  {"fringes_b", fb.to_json()}};
        stamp(summary);
        const auto p = path("_compare.json");
        write_json(p, summary);
        written.push_back(p);
        plot({{s.compare_a, a.p(), a.density()}, {s.compare_b, b.p(), b.density()}},
             s.compare_a + " vs " + s.compare_b, {reg.lo, reg.hi});
    }

    void run()
    {
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec || !std::filesystem::is_directory(dir))
            throw ScenarioError({"output.dir '" + dir.string() + "' cannot be created"});
        switch (s.route) {
        case Route::Stationary: run_stationary(); break;
        case Route::Wavepacket: run_wavepacket(); break;
        case Route::Semiclassical: run_semiclassical(); break;
        case Route::Compare: run_compare(); break;
        }
        nlohmann::json sidecar = {{"version", EWI_VERSION}, {"scenario", s.to_json()}, {"artifacts", artifacts}};
        const auto p = path(".meta.json");
        write_json(p, sidecar);
        written.push_back(p);
    }
};

} // namespace

std::vector<std::string> run_scenario(const Scenario& s)
{
    const auto bad = s.violations();
    if (!bad.empty()) throw ScenarioError(bad);
    Runner r(s);
    r.run();
    return r.written;
}

} // namespace ewi
