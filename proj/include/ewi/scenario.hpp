#pragma once

// Scenario files: one JSON document (comments allowed) per run. Every key is
// optional except route and physics.p0; unknown keys are errors. The resolved
// scenario, with every default filled in, is echoed into the metadata sidecar.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ewi/core.hpp"

namespace ewi {

/// Invalid scenario; carries every violated rule, not just the first.
class ScenarioError : public DomainError {
public:
    explicit ScenarioError(std::vector<std::string> violations);
    const std::vector<std::string>& violations() const { return violations_; }

private:
    std::vector<std::string> violations_;
};

enum class Route { Semiclassical, Stationary, Wavepacket, Compare };

std::string to_string(Route route);

struct Scenario {
    Route route = Route::Stationary;

    // physics
    double p0 = 2.0;
    double v1 = 1000.0;
    double kappa = 0.125;
    double beta = 0.2;

    // recoil
    RecoilModel recoil;
    std::optional<int> k_nodes; ///< unset: the route's default (41 stationary, 21 wave packet)
    int stationary_k_nodes() const { return k_nodes.value_or(41); }
    int wavepacket_k_nodes() const { return k_nodes.value_or(21); }

    // output momentum grid; unset bounds take the default [0.9 sqrt(beta) p0, 1.1 (p0 + k0)]
    int n_p = 600;
    std::optional<double> p_lo;
    std::optional<double> p_hi;

    // stationary; unset window values take OverlapConfig::defaults
    std::vector<double> k_values; ///< non-empty: k-resolved sweep instead of the recoil average
    std::optional<double> z_min;
    std::optional<double> z_max;
    std::optional<double> dz;

    // wavepacket
    double sigma_z = 10.0;
    double t_end = 70.0;
    double bounce_fraction = 0.5;
    int tau_nodes = 64;
    std::optional<double> dt;
    std::string estimator = "quadrature"; ///< quadrature | sampled
    std::size_t samples = 512;
    std::uint64_t seed = 1;

    // semiclassical
    std::vector<double> phase_k_values{0.0};

    // compare: each side is stationary | stationary-k0 | wavepacket
    std::string compare_a = "stationary";
    std::string compare_b = "wavepacket";

    // analysis; unset bounds take [p_min(k = 0), p0]
    std::optional<double> region_lo;
    std::optional<double> region_hi;
    double prominence = 1e-3;
    bool smooth = false;

    // output
    std::string out_dir = "out";
    std::string name = "run";
    bool plot = true;
    bool deterministic = false;

    /// Every violated invariant, empty when the scenario can run.
    std::vector<std::string> violations() const;

    /// Resolved scenario in the file schema, defaults included.
    nlohmann::json to_json() const;
};

/// Parses a scenario document. Throws ScenarioError listing all problems.
Scenario parse_scenario(const nlohmann::json& doc);

/// Reads and parses a scenario file (JSON, comments allowed).
nlohmann::json read_scenario_document(const std::string& path);

/// Output grid of a scenario.
std::vector<double> scenario_momentum_grid(const Scenario& s);

/// Runs the scenario and writes its artifacts into s.out_dir. Returns the written paths.
std::vector<std::string> run_scenario(const Scenario& s);

} // namespace ewi
