#include "ewi/specfun.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "ewi/core.hpp"

namespace ewi {

namespace {

using cld = std::complex<long double>;

constexpr long double kPiL = std::numbers::pi_v<long double>;

long double log_sinh_ld(long double y)
{
    if (y > 20.0L) return y - std::numbers::ln2_v<long double> + std::log1p(-std::exp(-2.0L * y));
    return std::log(std::sinh(y));
}

double sinh_minus_arg(double s)
{
    if (s >= 0.5) return std::sinh(s) - s;
    // s^3/3! + s^5/5! + ...
    const double s2 = s * s;
    double term = s * s2 / 6.0;
    double sum = term;
    for (int k = 2; k < 12; ++k) {
        term *= s2 / ((2.0 * k) * (2.0 * k + 1.0));
        sum += term;
        if (term < 1e-18 * sum) break;
    }
    return sum;
}

// Exp-sinh abscissas s = exp((pi/2) sinh u) on a nested family of step sizes
// h = 2^-level, stored once at the finest level.
struct DeTable {
    static constexpr int kFinestLevel = 7;
    static constexpr double kHmin = 1.0 / 128.0;
    int j_lo = 0;
    std::vector<double> s;    // indexed by j - j_lo
    std::vector<double> dsdu; // ds/du at the same abscissa

    DeTable()
    {
        const double u_lo = -4.2, u_hi = 3.6;
        j_lo = static_cast<int>(std::floor(u_lo / kHmin));
        const int j_hi = static_cast<int>(std::ceil(u_hi / kHmin));
        // Align j_lo to the coarsest stride so every level shares the same lattice.
        j_lo -= ((j_lo % 128) + 128) % 128;
        for (int j = j_lo; j <= j_hi; ++j) {
            const double u = j * kHmin;
            const double e = 0.5 * std::numbers::pi * std::sinh(u);
            const double sv = std::exp(e);
            s.push_back(sv);
            dsdu.push_back(0.5 * std::numbers::pi * std::cosh(u) * sv);
        }
    }
};

const DeTable& de_table()
{
    static const DeTable table;
    return table;
}


// Im ln Gamma(1 + i nu) in T: upward shift, then Stirling with 15 Bernoulli terms.
template <class T>
T imag_log_gamma_1p(double nu_d, int digits)
{
    using std::atan2;
    static constexpr std::array<std::pair<double, double>, 15> bernoulli = {{
        {1, 6}, {-1, 30}, {1, 42}, {-1, 30}, {5, 66}, {-691, 2730}, {7, 6}, {-3617, 510},
        {43867, 798}, {-174611, 330}, {854513, 138}, {-236364091, 2730}, {8553103, 6},
        {-23749461029.0, 870}, {8615841276005.0, 14322}}};
    const T nu = T(nu_d);
    // Truncation error ~ 1e6 |z|^-29 below 10^-digits.
    const double r_min = std::pow(10.0, (digits + 6.0) / 29.0);
    T re = 1;
    T shift_im = 0;
    while (static_cast<double>(re) * static_cast<double>(re) + nu_d * nu_d < r_min * r_min) {
        shift_im += atan2(nu, re);
        re += 1;
    }
    // z = re + i nu
    const T mod2 = re * re + nu * nu;
    const T arg = atan2(nu, re);
    const T log_mod = log(mod2) / 2;
    // Im[(z - 1/2) ln z - z]
    T im = (re - T(0.5)) * arg + nu * log_mod - nu;
    // Im sum c_n z^{1-2n}; z^{-1} = (re - i nu)/mod2
    const T inv_re = re / mod2, inv_im = -nu / mod2;
    const T inv2_re = inv_re * inv_re - inv_im * inv_im, inv2_im = 2 * inv_re * inv_im;
    T p_re = inv_re, p_im = inv_im;
    for (std::size_t n = 1; n <= bernoulli.size(); ++n) {
        const T c = T(bernoulli[n - 1].first) / T(bernoulli[n - 1].second) / T(double((2 * n) * (2 * n - 1)));
        im += c * p_im;
        const T nr = p_re * inv2_re - p_im * inv2_im;
        p_im = p_re * inv2_im + p_im * inv2_re;
        p_re = nr;
    }
    return im - shift_im;
}

// -Im[e^{i theta} S] with S = sum_m (x^2/4)^m / (m! (1 + i nu)_m) and
// theta = nu ln(x/2) - Im ln Gamma(1 + i nu), all carried in T. Also reports the
// largest magnitude seen (terms and |S|) so the caller can judge cancellation.
struct SeriesResult {
    long double mantissa;
    long double largest;
};

template <class T>
SeriesResult series_mantissa(double x, double nu_d, int digits, long double theta_ld)
{
    using std::abs;
    using std::cos;
    using std::log;
    using std::sin;
    const T q = T(x) * T(x) / 4;
    const long double q_ld = 0.25L * x * x;
    const T nu = T(nu_d);
    T sum_re = 1, sum_im = 0;
    T t_re = 1, t_im = 0;
    long double largest = 1.0L;
    // Terms beyond the working precision of the sum no longer matter.
    const long double stop = digits > 0 ? std::pow(10.0L, -static_cast<long double>(digits + 2)) : 1e-22L;
    for (int m = 1; m < 1000000; ++m) {
        const T mm = T(m);
        const T c = q / (mm * (mm * mm + nu * nu));
        const T re = (t_re * mm + t_im * nu) * c;
        const T im = (t_im * mm - t_re * nu) * c;
        t_re = re;
        t_im = im;
        sum_re += t_re;
        sum_im += t_im;
        const long double mag = static_cast<long double>(abs(t_re) + abs(t_im));
        if (mag > largest) largest = mag;
        const long double sum_mag = static_cast<long double>(abs(sum_re) + abs(sum_im));
        if (static_cast<long double>(m) * m > q_ld && mag < stop * sum_mag) break;
    }
    largest = std::max(largest, static_cast<long double>(abs(sum_re) + abs(sum_im)));
    T theta;
    if (digits > 0)
        theta = nu * log(T(x) / 2) - imag_log_gamma_1p<T>(nu_d, digits);
    else
        theta = T(theta_ld);
    const T mant = -(sin(theta) * sum_re + cos(theta) * sum_im);
    return {static_cast<long double>(mant), largest};
}

} // namespace

double ScaledValue::value() const { return mantissa * std::exp(log_scale); }

std::complex<long double> log_gamma(std::complex<long double> z)
{
    if (!(z.real() > 0)) throw DomainError("log_gamma: requires Re z > 0");
    // Shift into the Stirling regime.
    cld shift = 0;
    while (std::abs(z) < 20.0L) {
        shift += std::log(z);
        z += 1.0L;
    }
    static constexpr std::array<long double, 10> bernoulli = {
        1.0L / 6.0L,     -1.0L / 30.0L,       1.0L / 42.0L,      -1.0L / 30.0L,  5.0L / 66.0L,
        -691.0L / 2730.0L, 7.0L / 6.0L, -3617.0L / 510.0L, 43867.0L / 798.0L, -174611.0L / 330.0L};
    const cld inv = 1.0L / z;
    const cld inv2 = inv * inv;
    cld series = 0;
    cld power = inv;
    for (std::size_t n = 1; n <= bernoulli.size(); ++n) {
        series += bernoulli[n - 1] / static_cast<long double>((2 * n) * (2 * n - 1)) * power;
        power *= inv2;
    }
    const cld lg = (z - 0.5L) * std::log(z) - z + 0.5L * std::log(2.0L * kPiL) + series;
    return lg - shift;
}

double log_sinh(double y)
{
    if (!(y > 0)) throw DomainError("log_sinh: requires y > 0");
    return static_cast<double>(log_sinh_ld(y));
}

ImagOrderBesselK::ImagOrderBesselK(double nu) : nu_(std::fabs(nu))
{
    if (!std::isfinite(nu)) throw DomainError("besselk_imag: order must be finite");
    lg_ = log_gamma(cld(1.0L, nu_));
    if (nu_ > 0) series_log_pref_ = std::log(kPiL) - lg_.real() - log_sinh_ld(kPiL * nu_);
}

ScaledValue ImagOrderBesselK::scaled(double x) const
{
    if (!(std::isfinite(x) && x > 0)) throw DomainError("besselk_imag: argument must be finite and > 0");
    return x < nu_ ? series(x) : steepest_descent(x);
}

ScaledValue ImagOrderBesselK::series(double x) const
{
    const long double theta = nu_ * std::log(0.5L * static_cast<long double>(x)) - lg_.imag();
    SeriesResult res = series_mantissa<long double>(x, nu_, 0, theta);
    // Mantissa scale of the envelope sqrt(2 pi) e^{-pi nu/2} (nu^2 - x^2 + nu^{4/3})^{-1/4};
    // the value itself may sit on a zero.
    const long double nu = nu_;
    const long double env = std::exp(0.5L * std::log(2.0L * kPiL) - 0.5L * kPiL * nu -
                                     0.25L * std::log(nu * nu - static_cast<long double>(x) * x +
                                                      std::pow(nu, 4.0L / 3.0L)) -
                                     series_log_pref_);
    // Escalate while the cancellation would leave fewer than ~16 digits.
    const long double ratio = res.largest / env;
    if (ratio > 1e3L) {
        using boost::multiprecision::cpp_bin_float_50;
        using boost::multiprecision::cpp_bin_float_100;
        if (ratio < 1e30L)
            res = series_mantissa<cpp_bin_float_50>(x, nu_, 50, 0);
        else if (ratio < 1e80L)
            res = series_mantissa<cpp_bin_float_100>(x, nu_, 100, 0);
        else
            throw NumericalError("besselk_imag: series cancellation beyond 100 digits (nu = " +
                                 std::to_string(nu_) + ", x = " + std::to_string(x) + ")");
    }
    return {static_cast<double>(res.mantissa), static_cast<double>(series_log_pref_)};
}

ScaledValue ImagOrderBesselK::steepest_descent(double x) const
{
    const double nu = nu_;
    const double r0 = nu / x;
    const double c0 = std::sqrt(((x - nu) / x) * (1.0 + r0));
    const double th0 = std::atan2(r0, c0);

    // Integrand along the path, scaled by its value at the saddle (s = 0).
    auto integrand = [&](double s) {
        const double sh = std::sinh(s);
        const double ch = std::cosh(s);
        const double r = nu * s / (x * sh);
        const double one_minus_r = ((x - nu) * s + x * sinh_minus_arg(s)) / (x * sh);
        const double c = std::sqrt(one_minus_r * (1.0 + r));
        const double th = std::atan2(r, c);
        return std::exp(-x * (ch * c - c0) - nu * (th - th0));
    };

    const DeTable& tab = de_table();
    const int n = static_cast<int>(tab.s.size());
    double s_cut = 700.0;

    auto level_sum = [&](int stride, int offset) {
        double sum = 0.0;
        for (int idx = offset; idx < n; idx += stride) {
            const double s = tab.s[idx];
            if (s > s_cut) break;
            const double f = integrand(s);
            if (f < 1e-22 && s > 1e-3) {
                s_cut = s;
                break;
            }
            sum += f * tab.dsdu[idx];
        }
        return sum;
    };

    int level = 2;
    int stride = 1 << (DeTable::kFinestLevel - level);
    double h = 1.0 / (1 << level);
    double total = h * level_sum(stride, 0);
    for (++level; level <= DeTable::kFinestLevel; ++level) {
        const int new_stride = stride / 2;
        const double h_new = h / 2;
        const double refined = 0.5 * total + h_new * level_sum(stride, new_stride);
        const bool converged = std::fabs(refined - total) <= 1e-10 * std::fabs(refined) && level >= 4;
        total = refined;
        stride = new_stride;
        h = h_new;
        if (converged) break;
    }
    return {total, -x * c0 - nu * th0};
}

double besselk_imag(double nu, double x) { return besselk_imag_scaled(nu, x).value(); }

ScaledValue besselk_imag_scaled(double nu, double x)
{
    return ImagOrderBesselK(nu).scaled(x);
}

double log_stationary_norm(double nu, double p0, double kappa)
{
    if (!(p0 > 0 && kappa > 0 && nu > 0))
        throw DomainError("stationary_norm: nu, p0 and kappa must be > 0");
    if (std::fabs(nu - p0 / kappa) > 1e-12 * nu)
        throw DomainError("stationary_norm: nu must equal p0/kappa");
    return 0.5 * (std::log(4.0 * p0 / (std::numbers::pi * kappa)) + log_sinh(std::numbers::pi * nu));
}

double stationary_norm(double nu, double p0, double kappa)
{
    const double ln = log_stationary_norm(nu, p0, kappa);
    if (ln > 709.0) throw NumericalError("stationary_norm: value overflows a double; use log_stationary_norm");
    return std::exp(ln);
}

} // namespace ewi
