// Batch front-end: ewi <route> [--scenario file] [overrides].

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "ewi/output.hpp"
#include "ewi/scenario.hpp"

namespace {

struct Overrides {
    std::string scenario;
    std::optional<double> p0, kappa, beta;
    std::optional<std::string> recoil;
    std::optional<int> k_nodes;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    bool deterministic = false;
};

void add_options(CLI::App* cmd, Overrides& o)
{
    cmd->add_option("--scenario", o.scenario, "scenario file (JSON, comments allowed)");
    cmd->add_option("--p0", o.p0, "incident momentum");
    cmd->add_option("--kappa", o.kappa, "evanescent decay constant");
    cmd->add_option("--beta", o.beta, "potential reduction factor of state 2");
    cmd->add_option("--recoil", o.recoil, "recoil model")->check(CLI::IsMember({"none", "isotropic", "dipole"}));
    cmd->add_option("--k-nodes", o.k_nodes, "recoil quadrature nodes (odd)");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--seed", o.seed, "seed of the sampled wave-packet estimator");
    cmd->add_flag("--deterministic", o.deterministic, "fixed reduction order (always on; recorded in metadata)");
}

nlohmann::json build_document(const std::string& route, const Overrides& o)
{
    nlohmann::json doc = o.scenario.empty() ? nlohmann::json::object() : ewi::read_scenario_document(o.scenario);
    if (!doc.is_object()) throw ewi::ScenarioError({"scenario must be a JSON object"});
    if (doc.contains("route") && doc["route"] != route)
        throw ewi::ScenarioError({"scenario route '" + doc["route"].dump() + "' does not match subcommand '" + route +
                                  "'"});
    doc["route"] = route;
    auto section = [&](const char* name) -> nlohmann::json& {
        if (!doc.contains(name) || doc[name].is_null()) doc[name] = nlohmann::json::object();
        return doc[name];
    };
    if (o.p0) section("physics")["p0"] = *o.p0;
    if (o.kappa) section("physics")["kappa"] = *o.kappa;
    if (o.beta) section("physics")["beta"] = *o.beta;
    if (o.recoil) section("recoil")["model"] = *o.recoil;
    if (o.k_nodes) section("recoil")["k_nodes"] = *o.k_nodes;
    if (o.out) section("output")["dir"] = *o.out;
    if (o.seed) section("wavepacket")["seed"] = *o.seed;
    if (o.deterministic) section("output")["deterministic"] = true;
    return doc;
}

// Best-effort copy of the error record next to the artifacts.
void save_error(const nlohmann::json& doc, const nlohmann::json& record)
{
    try {
        std::string dir = "out", name = "run";
        if (doc.contains("output") && doc["output"].is_object()) {
            const auto& out = doc["output"];
            if (out.contains("dir") && out["dir"].is_string()) dir = out["dir"];
            if (out.contains("name") && out["name"].is_string()) name = out["name"];
        }
        std::filesystem::create_directories(dir);
        ewi::write_json((std::filesystem::path(dir) / (name + ".error.json")).string(), record);
    } catch (...) {
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Inelastic evanescent-wave mirror interferometer: momentum spectra by three routes"};
    app.set_version_flag("--version", EWI_VERSION);
    app.require_subcommand(1);
    Overrides o;
    for (const char* route : {"semiclassical", "stationary", "wavepacket", "compare"}) {
        auto* cmd = app.add_subcommand(route, std::string("run the ") + route + " route");
        add_options(cmd, o);
    }
    CLI11_PARSE(app, argc, argv);
    const std::string route = app.get_subcommands().front()->get_name();

    nlohmann::json doc;
    try {
        doc = build_document(route, o);
        const ewi::Scenario s = ewi::parse_scenario(doc);
        for (const auto& path : ewi::run_scenario(s)) std::cout << path << '\n';
        return 0;
    } catch (const ewi::ScenarioError& e) {
        const auto rec = ewi::error_record("invalid_scenario", e.what(), e.violations());
        std::cerr << rec.dump(2) << '\n';
        save_error(doc, rec);
        return 2;
    } catch (const ewi::NumericalError& e) {
        const auto rec = ewi::error_record("numerical", e.what());
        std::cerr << rec.dump(2) << '\n';
        save_error(doc, rec);
        return 3;
    } catch (const ewi::DomainError& e) {
        const auto rec = ewi::error_record("domain", e.what());
        std::cerr << rec.dump(2) << '\n';
        save_error(doc, rec);
        return 2;
    } catch (const std::exception& e) {
        const auto rec = ewi::error_record("runtime", e.what());
        std::cerr << rec.dump(2) << '\n';
        save_error(doc, rec);
        return 1;
    }
}
