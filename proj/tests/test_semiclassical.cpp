#include "doctest.h"

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "ewi/semiclassical.hpp"

using namespace ewi;

namespace {

// Romberg extrapolation of the trapezoid rule; the enclosed-area integrand is
// smooth on the closed interval, so this converges geometrically.
double romberg(const std::function<double(double)>& f, double a, double b)
{
    constexpr int levels = 14;
    double r[levels][levels];
    double h = b - a;
    r[0][0] = 0.5 * h * (f(a) + f(b));
    for (int i = 1; i < levels; ++i) {
        h *= 0.5;
        double s = 0;
        for (long j = 1; j < (1L << i); j += 2) s += f(a + j * h);
        r[i][0] = 0.5 * r[i - 1][0] + h * s;
        double factor = 1;
        for (int m = 1; m <= i; ++m) {
            factor *= 4;
            r[i][m] = r[i][m - 1] + (r[i][m - 1] - r[i - 1][m - 1]) / (factor - 1);
        }
        if (i > 4 && std::fabs(r[i][i] - r[i - 1][i - 1]) < 1e-13 * std::fabs(r[i][i])) return r[i][i];
    }
    return r[levels - 1][levels - 1];
}

// Area between the state-1 curve and the recoil-shifted state-2 curve, written out
// from the trajectory formulas with the transfer points from the quadratic formula.
double oracle_phase(double v_i, double p_f, double v1, double kappa, double beta, double k)
{
    const double a = 1 - beta, b = -2 * k, c = k * k + beta * v_i * v_i - p_f * p_f;
    const double d = std::sqrt(b * b - 4 * a * c);
    const double u_a = (-b - d) / (2 * a), u_b = (-b + d) / (2 * a);
    auto z1 = [&](double v) { return -std::log((v_i * v_i - v * v) / (2 * v1)) / (2 * kappa); };
    auto z2 = [&](double v) { return -std::log((p_f * p_f - v * v) / (2 * beta * v1)) / (2 * kappa); };
    return romberg([&](double v) { return z1(v) - z2(v - k); }, u_a, u_b);
}

double mean_spacing(const std::vector<double>& roots)
{
    REQUIRE(roots.size() >= 2);
    return (roots.back() - roots.front()) / static_cast<double>(roots.size() - 1);
}

} // namespace

TEST_CASE("transfer speed examples")
{
    CHECK(transfer_speed(2.0, 2.0, 0.2) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(transfer_speed(2.0, std::sqrt(0.2) * 2.0, 0.2) == doctest::Approx(0.0).epsilon(1e-7));
    CHECK(transfer_speed(2.0, 1.2649110640673518, 0.2) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(transfer_speed(2.0, 0.5, 0.2), DomainError);
    CHECK_THROWS_AS(transfer_speed(2.0, 2.1, 0.2), DomainError);
}

TEST_CASE("transfer geometry round trip")
{
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> vd(0.1, 10.0), bd(0.01, 0.99), ud(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const double v_i = vd(rng), beta = bd(rng);
        const double v_f = std::sqrt(beta) * v_i + ud(rng) * (1 - std::sqrt(beta)) * v_i;
        const auto g = TransferGeometry::from_final(v_i, v_f, beta);
        const double back = std::sqrt(g.v_t * g.v_t + beta * (v_i * v_i - g.v_t * g.v_t));
        CHECK(std::fabs(back - v_f) <= 1e-12 * v_f);
        CHECK(g.v_t >= 0.0);
        CHECK(g.v_t <= v_i * (1 + 1e-15));
        const auto h = TransferGeometry::from_transfer(v_i, -g.v_t, beta);
        CHECK(std::fabs(h.v_f - v_f) <= 1e-12 * v_f);
    }
}

TEST_CASE("trajectories")
{
    const PotentialConfig c(1000.0, 0.125, 0.2);
    const Trajectory t1(TrajectoryState::One, 2.0, c);
    // Turning point at v = 0 coincides with the potential's.
    CHECK(t1.z(0.0) == doctest::Approx(c.turning_point(2.0)).epsilon(1e-14));
    CHECK(t1.z(1.0) > t1.z(0.0));
    CHECK(t1.z(-1.0) == t1.z(1.0));
    CHECK_THROWS_AS(t1.z(2.0), DomainError);

    // Inside the transfer window the state-2 curve lies below the state-1 curve.
    for (double v_f : {1.0, 1.3, 1.7, 1.95}) {
        const Trajectory t2(TrajectoryState::Two, v_f, c);
        const double v_t = transfer_speed(2.0, v_f, 0.2);
        for (int i = 1; i < 200; ++i) {
            const double v = -v_t + 2 * v_t * i / 200.0;
            CHECK(t1.z(v) - t2.z(v) > 0.0);
        }
        // They cross at the transfer speed.
        CHECK(t1.z(v_t) == doctest::Approx(t2.z(v_t)).epsilon(1e-10));
    }
}

TEST_CASE("phase difference against the Romberg oracle")
{
    const PotentialConfig c(1000.0, 0.125, 0.2);
    CHECK(std::fabs(phase_difference(2.0, 1.5, c) - oracle_phase(2.0, 1.5, 1000.0, 0.125, 0.2, 0.0)) < 1e-6);
    // Frozen from an independent 30-digit evaluation.
    CHECK(phase_difference(2.0, 1.5, c) == doctest::Approx(8.89741172952733312).epsilon(1e-12));
    CHECK(phase_difference(2.0, 1.3, c, 0.5) == doctest::Approx(5.82582587663482264805).epsilon(1e-12));
    CHECK(phase_difference(2.0, 1.3, c, -0.5) == doctest::Approx(5.82582587663482264805).epsilon(1e-12));

    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> vd(0.5, 5.0), bd(0.05, 0.8), kd(0.05, 0.5), ud(0.02, 0.98),
        rd(-1.0, 1.0);
    for (int i = 0; i < 60; ++i) {
        const double v_i = vd(rng), beta = bd(rng), kappa = kd(rng);
        const double k = 0.4 * v_i * std::sqrt(1 - beta) * rd(rng);
        const auto band = interference_band(v_i, beta, k);
        if (!band) continue;
        const double p_f = band->lo + ud(rng) * (band->hi - band->lo);
        const PotentialConfig ci(1000.0, kappa, beta);
        const double ref = oracle_phase(v_i, p_f, 1000.0, kappa, beta, k);
        CAPTURE(v_i);
        CAPTURE(p_f);
        CAPTURE(k);
        CHECK(std::fabs(phase_difference(v_i, p_f, ci, k) - ref) < 1e-6 * std::max(1.0, std::fabs(ref)));
    }
}

TEST_CASE("phase is positive, monotone and vanishes at the lower band edge")
{
    const PotentialConfig c(1000.0, 0.125, 0.2);
    const double lo = std::sqrt(0.2) * 2.0;
    double prev = 0;
    for (int i = 1; i < 100; ++i) {
        const double v_f = lo + (2.0 - lo) * i / 100.0;
        const double ph = phase_difference(2.0, v_f, c);
        CHECK(ph > prev);
        prev = ph;
    }
    CHECK(phase_difference(2.0, lo * (1 + 1e-8), c) < 1e-3);
    CHECK_THROWS_AS(phase_difference(2.0, lo, c), DomainError);
    CHECK_THROWS_AS(phase_difference(2.0, 2.0, c), DomainError);
}

TEST_CASE("band geometry")
{
    const auto b0 = interference_band(2.0, 0.2, 0.0);
    REQUIRE(b0);
    CHECK(b0->lo == doctest::Approx(0.8944271909999159).epsilon(1e-14));
    CHECK(b0->hi == 2.0);
    const auto b1 = interference_band(2.0, 0.2, 1.0);
    REQUIRE(b1);
    CHECK(b1->lo == doctest::Approx(0.8944271909999159 * std::sqrt(1 - 0.25 / 0.8)).epsilon(1e-14));
    CHECK(b1->hi == 1.0);
    CHECK(lowest_final_momentum(2.0, 0.2, 0.7) == lowest_final_momentum(2.0, 0.2, -0.7));
    CHECK_FALSE(interference_band(1.0, 0.2, 0.95));
    CHECK(interference_band(2.0, 0.2, 1.5));
    CHECK_FALSE(interference_band(2.0, 0.2, 1.61));
    CHECK_THROWS_AS(lowest_final_momentum(1.0, 0.2, 0.95), DomainError);
}

TEST_CASE("predicted fringes")
{
    const PotentialConfig c(1000.0, 0.125, 0.2);
    const auto r = predicted_fringe_momenta(2.0, c);
    REQUIRE(r.size() >= 3);
    for (std::size_t i = 0; i < r.size(); ++i) {
        CHECK(r[i] > std::sqrt(0.2) * 2.0);
        CHECK(r[i] < 2.0);
        CHECK(phase_difference(2.0, r[i], c) == doctest::Approx(2 * std::numbers::pi * (i + 1)).epsilon(1e-9));
    }
    // Spacing shrinks toward larger p_f.
    for (std::size_t i = 2; i < r.size(); ++i) CHECK(r[i] - r[i - 1] < r[i - 1] - r[i - 2]);

    // Recoil barely moves the first root near the turning point. At v_i = 2 a full photon
    // kick leaves no room for a 2 pi root, so the one-recoil case uses faster atoms.
    const auto rk = predicted_fringe_momenta(2.0, c, 0.5);
    REQUIRE(!rk.empty());
    CHECK(std::fabs(rk.front() - r.front()) < 0.5 * (r[1] - r[0]));
    CHECK(predicted_fringe_momenta(2.0, c, -0.5) == rk);
    CHECK(predicted_fringe_momenta(2.0, c, 1.0).empty());
    for (double v_i : {3.0, 4.0}) {
        const auto r0 = predicted_fringe_momenta(v_i, c);
        const auto r1 = predicted_fringe_momenta(v_i, c, 1.0);
        CAPTURE(v_i);
        REQUIRE(!r1.empty());
        CHECK(std::fabs(r1.front() - r0.front()) < 0.5 * (r0[1] - r0[0]));
        const auto rm = predicted_fringe_momenta(v_i, c, -1.0);
        REQUIRE(rm.size() == r1.size());
        for (std::size_t j = 0; j < rm.size(); ++j) CHECK(rm[j] == doctest::Approx(r1[j]).epsilon(1e-10));
    }

    // Degenerate bands give an empty list, never an exception.
    CHECK(predicted_fringe_momenta(1.0, c, 0.95).empty());
    CHECK_NOTHROW(predicted_fringe_momenta(2.0, c, 2.0 * std::sqrt(0.8) * (1 - 1e-12)));
}

TEST_CASE("phase scales linearly with a common velocity scale")
{
    // z1 - z2 depends on velocities only through ratios, so the enclosed area is homogeneous of degree one.
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> vd(0.8, 4.0), ud(0.05, 0.95), ld(0.5, 2.0);
    const PotentialConfig c(1000.0, 0.125, 0.2);
    for (int i = 0; i < 30; ++i) {
        const double v_i = vd(rng), lam = ld(rng);
        const double lo = std::sqrt(0.2) * v_i, v_f = lo + ud(rng) * (v_i - lo);
        CHECK(phase_difference(lam * v_i, lam * v_f, c) == doctest::Approx(lam * phase_difference(v_i, v_f, c)).epsilon(1e-9));
    }
    // Faster atoms: more fringes in the band.
    CHECK(predicted_fringe_momenta(3.0, c).size() > predicted_fringe_momenta(2.0, c).size());
}

TEST_CASE("fringe spacing trends")
{
    const PotentialConfig base(1000.0, 0.125, 0.2);
    const double s = mean_spacing(predicted_fringe_momenta(2.0, base));
    // Faster atoms. Known to fail: by the scaling above the band-mean spacing is nearly independent of v_i.
    CHECK(mean_spacing(predicted_fringe_momenta(3.0, base)) < s);
    // Smaller beta.
    CHECK(s < mean_spacing(predicted_fringe_momenta(2.0, PotentialConfig(1000.0, 0.125, 0.4))));
    // Longer decay length.
    CHECK(s < mean_spacing(predicted_fringe_momenta(2.0, PotentialConfig(1000.0, 0.25, 0.2))));
}

TEST_CASE("emitted photon frequency")
{
    CHECK(emitted_photon_frequency(2.0, 1.0, 0.0, 0.0) == 1.5);
    CHECK(emitted_photon_frequency(2.0, 1.0, 3.0, 0.5) == 4.0);
    CHECK_THROWS_AS(emitted_photon_frequency(1.0, 2.0, 0.0, 0.0), DomainError);
}
