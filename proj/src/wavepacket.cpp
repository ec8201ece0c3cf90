#include "ewi/wavepacket.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "ewi/fft.hpp"
#include "ewi/parallel.hpp"
#include "ewi/quadrature.hpp"

namespace ewi {

namespace {

using cd = std::complex<double>;

// Ceiling of the sampled potential: the energy of half the Nyquist momentum. Amplitude
// pushed out of a steeper wall would exceed the Nyquist limit and alias around the
// periodic grid. The grid rule (Nyquist >= 4 v_fast) keeps the ceiling >= 4 times
// the band energy, deep inside the classically forbidden region.
double potential_cap(const SpatialGrid& grid)
{
    const double k = 0.5 * grid.nyquist();
    return 0.5 * k * k;
}

double log_cosh(double x)
{
    const double a = std::fabs(x);
    return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

std::string num(double v)
{
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

void require_grid(const SpatialGrid& grid)
{
    const auto bad = grid.violations();
    if (!bad.empty()) {
        std::string msg = "SpatialGrid: ";
        for (std::size_t i = 0; i < bad.size(); ++i) msg += (i ? "; " : "") + bad[i];
        throw DomainError(msg);
    }
}

void require_size(const Wave& psi, const SpatialGrid& grid)
{
    if (psi.size() != grid.n) throw DomainError("wave function length does not match the grid");
}

// Kinetic energy <T> and d<p^2>/dt = 2 kappa <pV + Vp> for a state on coefficient*e^{-2 kappa z}.
struct BranchDiagnostics {
    double kinetic = 0;
    double potential = 0;
    double dp2dt = 0;
};

BranchDiagnostics branch_diagnostics(const Wave& psi, const SpatialGrid& grid, double coefficient, double kappa,
                                     const Fft& fft)
{
    const std::size_t n = grid.n;
    Wave phi = psi;
    fft.forward(phi.data());
    double w = 0, t = 0;
    for (std::size_t m = 0; m < n; ++m) {
        const double a = std::norm(phi[m]);
        const double k = grid.k(m);
        w += a;
        t += 0.5 * k * k * a;
        phi[m] *= k / static_cast<double>(n);
    }
    fft.backward(phi.data()); // p psi
    BranchDiagnostics d;
    d.kinetic = w > 0 ? t / w : 0.0;
    double v = 0, cross = 0, nrm = 0;
    const double cap = potential_cap(grid);
    for (std::size_t j = 0; j < n; ++j) {
        const double pot = std::min(coefficient * std::exp(-2.0 * kappa * grid.z(j)), cap);
        const double a = std::norm(psi[j]);
        nrm += a;
        v += pot * a;
        cross += pot * (std::conj(phi[j]) * psi[j]).real();
    }
    d.potential = nrm > 0 ? v / nrm : 0.0;
    d.dp2dt = nrm > 0 ? 4.0 * kappa * cross / nrm : 0.0;
    return d;
}

} // namespace

double SpatialGrid::k(std::size_t m) const
{
    const double dk = 2.0 * std::numbers::pi / (z_hi - z_lo);
    const auto mm = static_cast<double>(m);
    return (m < n / 2 ? mm : mm - static_cast<double>(n)) * dk;
}

double SpatialGrid::nyquist() const { return std::numbers::pi / dz(); }

std::vector<std::string> SpatialGrid::violations() const
{
    std::vector<std::string> out;
    if (!(std::isfinite(z_lo) && std::isfinite(z_hi) && z_hi > z_lo)) out.push_back("grid needs z_lo < z_hi");
    if (n < 2 || (n & (n - 1)) != 0) out.push_back("grid size n must be a power of two >= 2");
    return out;
}

nlohmann::json SpatialGrid::to_json() const { return {{"z_lo", z_lo}, {"z_hi", z_hi}, {"n", n}}; }

Wave WavePacketSpec::initial_state() const
{
    require_grid(grid);
    if (!(sigma_z > 0)) throw DomainError("WavePacketSpec: sigma_z must be > 0");
    Wave psi(grid.n);
    const double amp = 1.0 / std::sqrt(std::sqrt(2.0 * std::numbers::pi) * sigma_z);
    for (std::size_t j = 0; j < grid.n; ++j) {
        const double z = grid.z(j);
        const double u = (z - z0) / sigma_z;
        const double cut = std::isfinite(floor_z) ? 0.5 * std::erfc((floor_z - z) / floor_width) : 1.0;
        psi[j] = amp * cut * std::exp(-0.25 * u * u) * cd(std::cos(k_z * z), std::sin(k_z * z));
    }
    const double nrm = norm(psi, grid);
    for (auto& v : psi) v /= std::sqrt(nrm);
    return psi;
}

WavePacketSpec WavePacketSpec::make(double p0, double sigma_z, const PotentialConfig& config, double t_end,
                                    double bounce_fraction, double k0)
{
    if (!(p0 > 0 && sigma_z > 0 && t_end > 0 && bounce_fraction > 0 && bounce_fraction < 1 && k0 > 0))
        throw DomainError("WavePacketSpec::make: need p0, sigma_z, t_end, k0 > 0 and 0 < bounce_fraction < 1");
    const double kappa = config.kappa();
    const double z_t = config.turning_point(0.5 * p0 * p0);
    const double t_b = bounce_fraction * t_end;
    WavePacketSpec spec;
    spec.sigma_z = sigma_z;
    spec.k_z = -p0;
    // Classical path z - z_t = ln cosh(kappa p0 (t - t_b)) / kappa.
    spec.z0 = z_t + log_cosh(kappa * p0 * t_b) / kappa;
    const double sigma_p = spec.sigma_p();
    const double v_fast = p0 + k0 + 5.0 * sigma_p;
    const double sigma_end = std::sqrt(sigma_z * sigma_z + std::pow(t_end / (2.0 * sigma_z), 2));
    const double edge = 5.0 * sigma_z;
    // Nothing in the packet has the energy to be classically below the state-1 wall at v_fast.
    // The Gaussian tail there is expelled at high energy and, after a late jump's e^{-kappa z}
    // reweighting, would dominate the branch.
    spec.floor_z = config.turning_point(0.5 * v_fast * v_fast);
    // Lowest wall: state |2> at the fastest band energy, plus a margin where V2 exceeds it tenfold.
    const double z_wall = config.turning_point(0.5 * v_fast * v_fast, true) - std::log(10.0) / (2.0 * kappa);
    // A jump reweights the packet by e^{-2 kappa z}, moving its centre down by 2 kappa sigma_z^2;
    // keep that Gaussian e^{-25} below its peak at the edge band.
    const double z_tail = spec.z0 - 2.0 * kappa * sigma_z * sigma_z - std::sqrt(50.0) * sigma_z;
    spec.grid.z_lo = std::min({z_t - 10.0, z_wall - 10.0, z_tail}) - edge;
    // Fastest branch: jump at t = 0 with the full kick toward the wall, so it bounces
    // after (z0 - z_t) / v_fast and recedes at v_fast until t_end.
    const double t_leave = std::min(t_b, (spec.z0 - z_t) / v_fast);
    spec.grid.z_hi = std::max(spec.z0 + 5.0 * sigma_z + edge + 10.0,
                              z_t + v_fast * (t_end - t_leave) + 6.0 * sigma_end + edge + 10.0);
    const double k_req = 4.0 * v_fast;
    std::size_t n = 2048;
    while (std::numbers::pi * static_cast<double>(n) / (spec.grid.z_hi - spec.grid.z_lo) < k_req) n *= 2;
    spec.grid.n = n;
    return spec;
}

std::vector<std::string> WavePacketSpec::violations(const PotentialConfig& config) const
{
    auto out = grid.violations();
    if (!(std::isfinite(sigma_z) && sigma_z > 0)) out.push_back("sigma_z must be finite and > 0");
    if (!(std::isfinite(k_z) && k_z < 0)) out.push_back("k_z must be < 0 (toward the mirror at small z)");
    if (!std::isfinite(z0)) out.push_back("z0 must be finite");
    if (!out.empty()) return out;
    const double need = 4.0 * (std::fabs(k_z) + 1.0 + 5.0 * sigma_p());
    if (grid.nyquist() < need)
        out.push_back("grid Nyquist wave number " + num(grid.nyquist()) + " below 4 (|k_z| + k0 + 5 sigma_p) = " +
                      num(need));
    if (z0 - 10.0 * sigma_z < grid.z_lo || z0 + 10.0 * sigma_z > grid.z_hi)
        out.push_back("initial packet closer than 5 sigma_z to a grid edge (needs z0 +- 10 sigma_z inside)");
    if (z0 <= config.turning_point(0.5 * k_z * k_z)) out.push_back("z0 must lie above the classical turning point");
    return out;
}

nlohmann::json WavePacketSpec::to_json() const
{
    nlohmann::json j = {{"z0", z0}, {"sigma_z", sigma_z}, {"sigma_p", sigma_p()}, {"k_z", k_z}, {"grid", grid.to_json()}};
    if (std::isfinite(floor_z)) j["floor"] = {{"z", floor_z}, {"width", floor_width}};
    return j;
}

SplitOperator::SplitOperator(const SpatialGrid& grid, double coefficient, double kappa)
    : grid_(grid), coefficient_(coefficient), kappa_(kappa)
{
    require_grid(grid);
    if (!(coefficient >= 0 && kappa > 0)) throw DomainError("SplitOperator: need coefficient >= 0 and kappa > 0");
    potential_.resize(grid.n);
    const double cap = potential_cap(grid);
    for (std::size_t j = 0; j < grid.n; ++j)
        potential_[j] = coefficient == 0.0 ? 0.0 : std::min(coefficient * std::exp(-2.0 * kappa * grid.z(j)), cap);
    fft_ = std::make_unique<Fft>(grid.n);
}

SplitOperator::~SplitOperator() = default;

PropagationStats SplitOperator::advance(Wave& psi, double t, double dt_max, const EdgeMonitor& edge) const
{
    require_size(psi, grid_);
    if (!(t >= 0 && dt_max > 0)) throw DomainError("propagate: need t >= 0 and dt > 0");
    PropagationStats stats;
    if (t == 0) return stats;
    const std::size_t n = grid_.n;
    const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(t / dt_max - 1e-12)));
    const double dt = t / static_cast<double>(steps);
    stats.steps = steps;
    stats.dt = dt;

    std::vector<cd> half_v(n), kin(n);
    const bool has_v = coefficient_ != 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double a = -0.5 * dt * potential_[j];
        half_v[j] = cd(std::cos(a), std::sin(a));
        const double k = grid_.k(j);
        const double b = -0.5 * k * k * dt;
        kin[j] = cd(std::cos(b), std::sin(b)) / static_cast<double>(n);
    }
    auto check_edges = [&] {
        if (edge.width <= 0) return;
        const double pe = edge_probability(psi, grid_, edge.width);
        stats.max_edge_probability = std::max(stats.max_edge_probability, pe);
        if (pe > edge.tolerance)
            throw NumericalError("propagate: probability " + num(pe) + " within " +
                                 num(edge.width) + " of a grid edge (limit " +
                                 num(edge.tolerance) + "); enlarge the grid");
    };
    for (std::size_t s = 0; s < steps; ++s) {
        if (has_v)
            for (std::size_t j = 0; j < n; ++j) psi[j] *= half_v[j];
        fft_->forward(psi.data());
        for (std::size_t j = 0; j < n; ++j) psi[j] *= kin[j];
        fft_->backward(psi.data());
        if (has_v)
            for (std::size_t j = 0; j < n; ++j) psi[j] *= half_v[j];
        if ((s + 1) % 256 == 0) check_edges();
    }
    check_edges();
    return stats;
}

Wave propagate(const Wave& psi, const SpatialGrid& grid, double coefficient, const PotentialConfig& config, double t,
               double dt_max, const EdgeMonitor& edge)
{
    const SplitOperator op(grid, coefficient, config.kappa());
    Wave out = psi;
    op.advance(out, t, dt_max, edge);
    return out;
}

double norm(const Wave& psi, const SpatialGrid& grid)
{
    require_size(psi, grid);
    double s = 0;
    for (const auto& v : psi) s += std::norm(v);
    return s * grid.dz();
}

double mean_position(const Wave& psi, const SpatialGrid& grid)
{
    double s = 0, w = 0;
    for (std::size_t j = 0; j < psi.size(); ++j) {
        const double a = std::norm(psi[j]);
        s += a * grid.z(j);
        w += a;
    }
    return s / w;
}

double position_variance(const Wave& psi, const SpatialGrid& grid)
{
    const double mu = mean_position(psi, grid);
    double s = 0, w = 0;
    for (std::size_t j = 0; j < psi.size(); ++j) {
        const double a = std::norm(psi[j]);
        const double d = grid.z(j) - mu;
        s += a * d * d;
        w += a;
    }
    return s / w;
}

double mean_momentum(const Wave& psi, const SpatialGrid& grid, const Fft& fft)
{
    require_size(psi, grid);
    Wave phi = psi;
    fft.forward(phi.data());
    double s = 0, w = 0;
    for (std::size_t m = 0; m < phi.size(); ++m) {
        const double a = std::norm(phi[m]);
        s += a * grid.k(m);
        w += a;
    }
    return s / w;
}

double edge_probability(const Wave& psi, const SpatialGrid& grid, double width)
{
    double s = 0;
    for (std::size_t j = 0; j < psi.size(); ++j) {
        const double z = grid.z(j);
        if (z < grid.z_lo + width || z > grid.z_hi - width) s += std::norm(psi[j]);
    }
    return s * grid.dz();
}

double transfer_rate(const Wave& psi, const SpatialGrid& grid, const PotentialConfig& config)
{
    require_size(psi, grid);
    double s = 0;
    for (std::size_t j = 0; j < psi.size(); ++j) {
        const double z = grid.z(j);
        if (z < 0) continue;
        s += std::norm(psi[j]) * config.potential(z);
    }
    return s * grid.dz();
}

Wave apply_jump(const Wave& psi, const SpatialGrid& grid, const PotentialConfig& config, double k)
{
    require_size(psi, grid);
    const double kappa = config.kappa();
    Wave out(psi.size());
    for (std::size_t j = 0; j < psi.size(); ++j) {
        const double z = grid.z(j);
        out[j] = psi[j] * std::exp(-kappa * z) * cd(std::cos(k * z), -std::sin(k * z));
    }
    const double nrm = norm(out, grid);
    if (!(nrm >= 1e-300)) throw NumericalError("apply_jump: state has no weight where e^{-kappa z} is representable");
    const double scale = 1.0 / std::sqrt(nrm);
    for (auto& v : out) v *= scale;
    return out;
}

std::vector<double> momentum_density(const Wave& psi, const SpatialGrid& grid, const std::vector<double>& p_grid)
{
    require_size(psi, grid);
    const double dz = grid.dz();
    const double pref = dz / std::sqrt(2.0 * std::numbers::pi);
    std::vector<double> out(p_grid.size());
    for (std::size_t ip = 0; ip < p_grid.size(); ++ip) {
        const double p = p_grid[ip];
        const cd step(std::cos(p * dz), -std::sin(p * dz));
        cd acc = 0, ph = 0;
        for (std::size_t j = 0; j < psi.size(); ++j) {
            // Resynchronize the rotating phase to keep it exact.
            if (j % 64 == 0) {
                const double a = -p * grid.z(j);
                ph = cd(std::cos(a), std::sin(a));
            }
            acc += psi[j] * ph;
            ph *= step;
        }
        out[ip] = std::norm(pref * acc);
    }
    return out;
}

nlohmann::json WavePacketOptions::to_json() const
{
    return {{"tau_nodes", tau_nodes},
            {"support_threshold", support_threshold},
            {"k_nodes", k_nodes},
            {"n_p", p_grid.size()},
            {"dt", dt},
            {"dt_factor", dt_factor},
            {"k0", k0},
            {"gamma_end_tol", gamma_end_tol},
            {"residual_energy_tol", residual_energy_tol},
            {"dp2dt_tol", dp2dt_tol},
            {"enforce_free_flight", enforce_free_flight}};
}

double default_time_step(const WavePacketSpec& spec, const WavePacketOptions& opts)
{
    if (opts.dt > 0) return opts.dt;
    const double v = std::fabs(spec.k_z) + opts.k0 + 5.0 * spec.sigma_p();
    const double e_band = 0.5 * v * v;
    return opts.dt_factor * 2.0 * std::numbers::pi / e_band;
}

namespace {

void require_spec(const WavePacketSpec& spec, const PotentialConfig& config, double t_end)
{
    auto bad = spec.violations(config);
    if (!(t_end > 0)) bad.push_back("t_end must be > 0");
    if (!bad.empty()) {
        std::string msg = "WavePacketSpec: ";
        for (std::size_t i = 0; i < bad.size(); ++i) msg += (i ? "; " : "") + bad[i];
        throw DomainError(msg);
    }
}

constexpr double kEdgeTolerance = 1e-8;

EdgeMonitor monitor_for(const WavePacketSpec& spec) { return {5.0 * spec.sigma_z, kEdgeTolerance}; }

// A branch carrying a fraction `share` of the total weight may put kEdgeTolerance / share
// of its own probability near an edge, so its contribution to the published spectrum stays
// below kEdgeTolerance. Jumps long after the bounce reweight the packet by e^{-kappa z} with
// the packet far from the field, which lifts round-off near the wall by many orders; those
// branches carry < 1e-5 of the weight. A branch with a tenth of its norm at an edge is
// rejected regardless.
EdgeMonitor branch_monitor(const WavePacketSpec& spec, double share)
{
    const double tol = share > 0 ? std::min(kEdgeTolerance / share, 0.1) : 0.1;
    return {5.0 * spec.sigma_z, std::max(tol, kEdgeTolerance)};
}

// Snapshots of the state-1 packet at the ascending times `times`.
std::vector<Wave> snapshots(const WavePacketSpec& spec, const PotentialConfig& config, const std::vector<double>& times,
                            double dt)
{
    const SplitOperator op(spec.grid, config.v1(), config.kappa());
    Wave psi = spec.initial_state();
    std::vector<Wave> out;
    out.reserve(times.size());
    double t = 0;
    for (double tau : times) {
        op.advance(psi, tau - t, dt, monitor_for(spec));
        t = tau;
        out.push_back(psi);
    }
    return out;
}

struct BranchResult {
    std::vector<double> density;
    BranchDiagnostics diag;
    double edge = 0;
};

BranchResult run_branch(const Wave& snapshot, double tau, double k, const WavePacketSpec& spec,
                        const PotentialConfig& config, const SplitOperator& op2, double t_end, double dt,
                        const std::vector<double>& p_grid, const EdgeMonitor& edge)
{
    Wave psi = apply_jump(snapshot, spec.grid, config, k);
    const auto stats = op2.advance(psi, t_end - tau, dt, edge);
    BranchResult r;
    r.edge = stats.max_edge_probability;
    r.diag = branch_diagnostics(psi, spec.grid, config.v2(), config.kappa(), op2.fft());
    r.density = momentum_density(psi, spec.grid, p_grid);
    return r;
}

struct Accumulated {
    std::vector<double> density;
    double residual = 0; ///< <V2>/<T> of the weighted mixture
    double dp2dt = 0;    ///< |d<p^2>/dt| of the weighted mixture
    double edge = 0;     ///< weighted edge probability of the mixture
};

Accumulated accumulate(const std::vector<BranchResult>& branches, const std::vector<double>& weights)
{
    Accumulated acc;
    acc.density.assign(branches.front().density.size(), 0.0);
    // Fixed order: the result is independent of how the branches were scheduled.
    double pot = 0, kin = 0, dp2 = 0, edge = 0, wsum = 0;
    for (std::size_t b = 0; b < branches.size(); ++b) {
        const auto& br = branches[b];
        for (std::size_t ip = 0; ip < acc.density.size(); ++ip) acc.density[ip] += weights[b] * br.density[ip];
        pot += weights[b] * br.diag.potential;
        kin += weights[b] * br.diag.kinetic;
        dp2 += weights[b] * br.diag.dp2dt;
        edge += weights[b] * br.edge;
        wsum += weights[b];
    }
    // Mixture averages: branches carrying negligible weight cannot make the spectrum stale.
    acc.residual = kin > 0 ? pot / kin : 0.0;
    acc.dp2dt = wsum > 0 ? std::fabs(dp2 / wsum) : 0.0;
    acc.edge = wsum > 0 ? edge / wsum : 0.0;
    return acc;
}

std::vector<double> output_grid(const WavePacketSpec& spec, const PotentialConfig& config,
                                const WavePacketOptions& opts)
{
    return opts.p_grid.empty() ? default_momentum_grid(std::fabs(spec.k_z), config.beta(), opts.k0) : opts.p_grid;
}

void check_free_flight(const Accumulated& acc, double gamma_end_ratio, const WavePacketOptions& opts, double t_end)
{
    if (!opts.enforce_free_flight) return;
    std::vector<std::string> bad;
    if (!(gamma_end_ratio < opts.gamma_end_tol))
        bad.push_back("Gamma(t_end)/max Gamma = " + num(gamma_end_ratio));
    if (!(acc.residual < opts.residual_energy_tol))
        bad.push_back("residual potential/kinetic energy = " + num(acc.residual));
    if (opts.dp2dt_tol > 0 && !(acc.dp2dt < opts.dp2dt_tol))
        bad.push_back("d<p^2>/dt = " + num(acc.dp2dt));
    if (!bad.empty()) {
        std::string msg = "stale spectrum: packet not in free flight at t_end = " + num(t_end) + " (";
        for (std::size_t i = 0; i < bad.size(); ++i) msg += (i ? "; " : "") + bad[i];
        throw NumericalError(msg + ")");
    }
}

nlohmann::json wavepacket_meta(const WavePacketSpec& spec, const PotentialConfig& config, const RecoilModel& recoil,
                               double t_end, const WavePacketOptions& opts, double dt)
{
    return {{"route", "wavepacket"},    {"p0", std::fabs(spec.k_z)},
            {"potential", config.to_json()}, {"packet", spec.to_json()},
            {"recoil", to_string(recoil.kind)}, {"k0", recoil.k0},
            {"t_end", t_end},              {"options", opts.to_json()},
            {"dt_used", dt}};
}

} // namespace

JumpSchedule jump_schedule(const WavePacketSpec& spec, const PotentialConfig& config, double t_end,
                           const WavePacketOptions& opts)
{
    require_spec(spec, config, t_end);
    if (opts.tau_nodes < 1) throw DomainError("jump_schedule: tau_nodes must be >= 1");
    const double dt_max = default_time_step(spec, opts);
    const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt_max - 1e-12));
    const double dt = t_end / static_cast<double>(steps);

    JumpSchedule js;
    const SplitOperator op(spec.grid, config.v1(), config.kappa());
    Wave psi = spec.initial_state();
    js.trace_t.push_back(0.0);
    js.trace_gamma.push_back(transfer_rate(psi, spec.grid, config));
    js.trace_mean_z.push_back(mean_position(psi, spec.grid));
    for (std::size_t s = 1; s <= steps; ++s) {
        op.advance(psi, dt, dt, monitor_for(spec));
        js.trace_t.push_back(static_cast<double>(s) * dt);
        js.trace_gamma.push_back(transfer_rate(psi, spec.grid, config));
        js.trace_mean_z.push_back(mean_position(psi, spec.grid));
    }
    const double g_max = *std::max_element(js.trace_gamma.begin(), js.trace_gamma.end());
    if (!(g_max > 0)) throw NumericalError("jump_schedule: the packet never reaches the evanescent field");
    js.gamma_end_ratio = js.trace_gamma.back() / g_max;

    // Support where Gamma exceeds the threshold, widened by one sample on each side.
    const double cut = opts.support_threshold * g_max;
    std::size_t first = 0, last = steps;
    while (first < steps && js.trace_gamma[first] <= cut) ++first;
    while (last > 0 && js.trace_gamma[last] <= cut) --last;
    const double t_a = js.trace_t[first > 0 ? first - 1 : 0];
    const double t_b = js.trace_t[std::min(last + 1, steps)];
    const QuadratureRule rule = gauss_legendre(opts.tau_nodes, t_a, t_b);
    js.tau_nodes = rule.nodes;
    js.weights = rule.weights;

    const auto snaps = snapshots(spec, config, js.tau_nodes, dt_max);
    for (const auto& w : snaps) js.gamma.push_back(transfer_rate(w, spec.grid, config));
    return js;
}

MomentumDistribution final_spectrum(const WavePacketSpec& spec, const PotentialConfig& config,
                                    const JumpSchedule& schedule, const RecoilModel& recoil, double t_end,
                                    const WavePacketOptions& opts)
{
    require_spec(spec, config, t_end);
    const std::size_t n_tau = schedule.tau_nodes.size();
    if (n_tau == 0 || schedule.weights.size() != n_tau || schedule.gamma.size() != n_tau)
        throw DomainError("final_spectrum: inconsistent jump schedule");
    for (std::size_t i = 0; i < n_tau; ++i) {
        if (!(schedule.gamma[i] >= 0)) throw DomainError("final_spectrum: Gamma must be >= 0");
        if (!(schedule.tau_nodes[i] >= 0 && schedule.tau_nodes[i] <= t_end) ||
            (i > 0 && !(schedule.tau_nodes[i] >= schedule.tau_nodes[i - 1])))
            throw DomainError("final_spectrum: tau nodes must be ascending within [0, t_end]");
    }
    const double dt = default_time_step(spec, opts);
    const auto p_grid = output_grid(spec, config, opts);
    const auto nodes = recoil_nodes(recoil, opts.k_nodes);
    const std::size_t n_k = nodes.size();

    const auto snaps = snapshots(spec, config, schedule.tau_nodes, dt);
    const SplitOperator op2(spec.grid, config.v2(), config.kappa());
    std::vector<BranchResult> branches(n_tau * n_k);
    std::vector<double> weights(n_tau * n_k);
    for (std::size_t i = 0; i < n_tau; ++i)
        for (std::size_t q = 0; q < n_k; ++q)
            weights[i * n_k + q] = schedule.weights[i] * schedule.gamma[i] * nodes[q].weight;
    double total = 0;
    for (double w : weights) total += w;
    parallel_for(branches.size(), [&](std::size_t b) {
        const std::size_t i = b / n_k, q = b % n_k;
        branches[b] = run_branch(snaps[i], schedule.tau_nodes[i], nodes[q].k, spec, config, op2, t_end, dt, p_grid,
                                 branch_monitor(spec, weights[b] / total));
    });
    const auto acc = accumulate(branches, weights);
    check_free_flight(acc, schedule.gamma_end_ratio, opts, t_end);

    auto meta = wavepacket_meta(spec, config, recoil, t_end, opts, dt);
    meta["estimator"] = "quadrature";
    meta["tau_support"] = {schedule.tau_nodes.front(), schedule.tau_nodes.back()};
    meta["diagnostics"] = {{"gamma_end_ratio", schedule.gamma_end_ratio},
                           {"residual_energy_ratio", acc.residual},
                           {"dp2dt", acc.dp2dt},
                           {"edge_probability", acc.edge}};
    return MomentumDistribution::unit_integral(p_grid, acc.density, std::move(meta));
}

MomentumDistribution final_spectrum(const WavePacketSpec& spec, const PotentialConfig& config,
                                    const RecoilModel& recoil, double t_end, const WavePacketOptions& opts)
{
    return final_spectrum(spec, config, jump_schedule(spec, config, t_end, opts), recoil, t_end, opts);
}

MomentumDistribution sampled_spectrum(const WavePacketSpec& spec, const PotentialConfig& config,
                                      const RecoilModel& recoil, double t_end, std::size_t samples,
                                      std::uint64_t seed, const WavePacketOptions& opts)
{
    if (samples == 0) throw DomainError("sampled_spectrum: need at least one sample");
    WavePacketOptions o1 = opts;
    o1.tau_nodes = 1;
    const JumpSchedule js = jump_schedule(spec, config, t_end, o1);

    // Inverse-CDF sampling of tau from the pass-1 Gamma trace.
    std::vector<double> cdf(js.trace_t.size(), 0.0);
    for (std::size_t i = 1; i < cdf.size(); ++i)
        cdf[i] = cdf[i - 1] + 0.5 * (js.trace_gamma[i] + js.trace_gamma[i - 1]) * (js.trace_t[i] - js.trace_t[i - 1]);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<double> taus(samples), ks(samples);
    const double k_peak = recoil.kind == RecoilKind::Dipole ? recoil_weight(recoil, 0.0) : 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
        const double target = uni(rng) * cdf.back();
        const auto it = std::lower_bound(cdf.begin(), cdf.end(), target);
        const std::size_t i = std::clamp<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), 1, cdf.size() - 1);
        const double span = cdf[i] - cdf[i - 1];
        const double f = span > 0 ? (target - cdf[i - 1]) / span : 0.0;
        taus[s] = js.trace_t[i - 1] + f * (js.trace_t[i] - js.trace_t[i - 1]);
        switch (recoil.kind) {
        case RecoilKind::None: ks[s] = 0.0; break;
        case RecoilKind::Isotropic: ks[s] = recoil.k0 * (2.0 * uni(rng) - 1.0); break;
        case RecoilKind::Dipole:
            for (;;) {
                const double k = recoil.k0 * (2.0 * uni(rng) - 1.0);
                if (uni(rng) * k_peak <= recoil_weight(recoil, k)) {
                    ks[s] = k;
                    break;
                }
            }
            break;
        }
    }
    std::vector<std::size_t> order(samples);
    for (std::size_t s = 0; s < samples; ++s) order[s] = s;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return taus[a] < taus[b]; });
    std::vector<double> sorted_tau(samples);
    for (std::size_t s = 0; s < samples; ++s) sorted_tau[s] = taus[order[s]];

    const double dt = default_time_step(spec, opts);
    const auto p_grid = output_grid(spec, config, opts);
    const auto snaps = snapshots(spec, config, sorted_tau, dt);
    const SplitOperator op2(spec.grid, config.v2(), config.kappa());
    std::vector<BranchResult> branches(samples);
    parallel_for(samples, [&](std::size_t s) {
        branches[s] = run_branch(snaps[s], sorted_tau[s], ks[order[s]], spec, config, op2, t_end, dt, p_grid,
                                 branch_monitor(spec, 1.0 / static_cast<double>(samples)));
    });
    const auto acc = accumulate(branches, std::vector<double>(samples, 1.0));
    check_free_flight(acc, js.gamma_end_ratio, opts, t_end);

    auto meta = wavepacket_meta(spec, config, recoil, t_end, opts, dt);
    meta["estimator"] = "sampled";
    meta["samples"] = samples;
    meta["seed"] = seed;
    meta["diagnostics"] = {{"gamma_end_ratio", js.gamma_end_ratio},
                           {"residual_energy_ratio", acc.residual},
                           {"dp2dt", acc.dp2dt},
                           {"edge_probability", acc.edge}};
    return MomentumDistribution::unit_integral(p_grid, acc.density, std::move(meta));
}

} // namespace ewi
