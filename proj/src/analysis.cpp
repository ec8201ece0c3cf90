#include "ewi/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ewi/semiclassical.hpp"

namespace ewi {

namespace {

struct Extremum {
    std::size_t index;
    bool is_max;
};

// Least-squares parabola through samples i-2..i+2 (clipped to [lo, hi]); returns
// the vertex when it stays within the fitted span, otherwise the sample itself.
void refine(const std::vector<double>& p, const std::vector<double>& y, std::size_t i, std::size_t lo,
            std::size_t hi, double& pos, double& val)
{
    pos = p[i];
    val = y[i];
    const std::size_t a = i >= lo + 2 ? i - 2 : lo;
    const std::size_t b = std::min(i + 2, hi);
    if (b - a < 2) return;
    // Fit y = c0 + c1 t + c2 t^2 with t = p - p[i].
    double s[5] = {0, 0, 0, 0, 0}, r[3] = {0, 0, 0};
    for (std::size_t j = a; j <= b; ++j) {
        const double t = p[j] - p[i];
        double tk = 1.0;
        for (int k = 0; k < 5; ++k) {
            s[k] += tk;
            if (k < 3) r[k] += tk * y[j];
            tk *= t;
        }
    }
    // Normal equations [[s0 s1 s2][s1 s2 s3][s2 s3 s4]] c = r, solved by Cramer's rule.
    auto det3 = [](double a11, double a12, double a13, double a21, double a22, double a23, double a31, double a32,
                   double a33) {
        return a11 * (a22 * a33 - a23 * a32) - a12 * (a21 * a33 - a23 * a31) + a13 * (a21 * a32 - a22 * a31);
    };
    const double d = det3(s[0], s[1], s[2], s[1], s[2], s[3], s[2], s[3], s[4]);
    if (d == 0.0) return;
    const double c0 = det3(r[0], s[1], s[2], r[1], s[2], s[3], r[2], s[3], s[4]) / d;
    const double c1 = det3(s[0], r[0], s[2], s[1], r[1], s[3], s[2], r[2], s[4]) / d;
    const double c2 = det3(s[0], s[1], r[0], s[1], s[2], r[1], s[2], s[3], r[2]) / d;
    if (c2 == 0.0) return;
    const double tv = -c1 / (2.0 * c2);
    if (tv < p[a] - p[i] || tv > p[b] - p[i]) return;
    pos = p[i] + tv;
    val = c0 + c1 * tv + c2 * tv * tv;
}

} // namespace

std::vector<double> FringeReport::minima_spacings() const
{
    std::vector<double> out;
    for (std::size_t i = 1; i < minima.size(); ++i) out.push_back(minima[i] - minima[i - 1]);
    return out;
}

std::vector<double> FringeReport::pair_visibilities() const
{
    // Merge into one ascending sequence; extrema alternate.
    struct E {
        double p, v;
        bool is_max;
    };
    std::vector<E> seq;
    for (std::size_t i = 0; i < minima.size(); ++i) seq.push_back({minima[i], minima_values[i], false});
    for (std::size_t i = 0; i < maxima.size(); ++i) seq.push_back({maxima[i], maxima_values[i], true});
    std::sort(seq.begin(), seq.end(), [](const E& a, const E& b) { return a.p < b.p; });
    std::vector<double> out;
    for (std::size_t i = 1; i < seq.size(); ++i) {
        if (seq[i].is_max == seq[i - 1].is_max) continue;
        const double imax = seq[i].is_max ? seq[i].v : seq[i - 1].v;
        const double imin = std::max(0.0, seq[i].is_max ? seq[i - 1].v : seq[i].v);
        if (imax + imin > 0) out.push_back(std::clamp((imax - imin) / (imax + imin), 0.0, 1.0));
    }
    return out;
}

nlohmann::json FringeReport::to_json() const
{
    return {{"minima", minima},           {"maxima", maxima},         {"minima_values", minima_values},
            {"maxima_values", maxima_values}, {"mean_spacing", mean_spacing}, {"visibility", visibility},
            {"region", {p_lo, p_hi}}};
}

FringeReport extract_fringes(const MomentumDistribution& dist, double p_lo, double p_hi, FringeOptions opts)
{
    if (!(p_hi > p_lo)) throw DomainError("extract_fringes: empty region");
    const auto& p = dist.p();
    if (p_lo < p.front() - 1e-12 || p_hi > p.back() + 1e-12)
        throw DomainError("extract_fringes: region must lie within the momentum grid");
    std::vector<double> y = dist.density();
    if (opts.smooth) {
        const double step = (p.back() - p.front()) / static_cast<double>(p.size() - 1);
        y = gaussian_smooth(p, y, step);
    }
    FringeReport rep;
    rep.p_lo = p_lo;
    rep.p_hi = p_hi;

    const auto first = static_cast<std::size_t>(std::lower_bound(p.begin(), p.end(), p_lo) - p.begin());
    std::size_t last = static_cast<std::size_t>(std::upper_bound(p.begin(), p.end(), p_hi) - p.begin());
    if (last == 0 || last <= first + 2) return rep;
    --last;
    const double peak = *std::max_element(y.begin(), y.end());
    const double delta = opts.prominence * peak;

    // Hysteresis scan: a candidate extremum is accepted once the signal has turned by delta.
    std::vector<Extremum> found;
    std::size_t i_max = first, i_min = first;
    int looking = 0; // 0: undecided, +1: tracking a max, -1: tracking a min
    for (std::size_t i = first; i <= last; ++i) {
        if (y[i] > y[i_max]) i_max = i;
        if (y[i] < y[i_min]) i_min = i;
        if (looking >= 0 && y[i] < y[i_max] - delta) {
            if (looking == 1 || i_max != first) found.push_back({i_max, true});
            looking = -1;
            i_min = i;
        } else if (looking <= 0 && y[i] > y[i_min] + delta) {
            if (looking == -1 || i_min != first) found.push_back({i_min, false});
            looking = 1;
            i_max = i;
        }
    }
    // A turn recorded on the region boundary is a monotone stretch, not a fringe.
    std::vector<Extremum> interior;
    for (const auto& e : found)
        if (e.index > first && e.index < last) interior.push_back(e);
    if (interior.size() < 2) return rep;

    for (const auto& e : interior) {
        double pos, val;
        refine(p, y, e.index, first, last, pos, val);
        if (e.is_max) {
            rep.maxima.push_back(pos);
            rep.maxima_values.push_back(val);
        } else {
            rep.minima.push_back(pos);
            rep.minima_values.push_back(val);
        }
    }
    const auto sp = rep.minima.size() >= 2 ? rep.minima_spacings() : std::vector<double>{};
    if (!sp.empty()) {
        double s = 0;
        for (double d : sp) s += d;
        rep.mean_spacing = s / static_cast<double>(sp.size());
    } else if (rep.maxima.size() >= 2) {
        rep.mean_spacing = (rep.maxima.back() - rep.maxima.front()) / static_cast<double>(rep.maxima.size() - 1);
    }
    const auto vis = rep.pair_visibilities();
    if (!vis.empty()) {
        double s = 0;
        for (double v : vis) s += v;
        rep.visibility = s / static_cast<double>(vis.size());
    }
    return rep;
}

Region default_region(double p0, const PotentialConfig& config)
{
    return {lowest_final_momentum(p0, config.beta(), 0.0), p0};
}

std::vector<double> gaussian_smooth(const std::vector<double>& p, const std::vector<double>& y, double width)
{
    if (p.size() != y.size()) throw DomainError("gaussian_smooth: length mismatch");
    if (!(width > 0)) return y;
    std::vector<double> out(y.size());
    const double cut = 4.0 * width;
    for (std::size_t i = 0; i < p.size(); ++i) {
        double s = 0, w = 0;
        for (std::size_t j = i;; --j) {
            const double d = p[i] - p[j];
            if (d > cut) break;
            const double g = std::exp(-0.5 * d * d / (width * width));
            s += g * y[j];
            w += g;
            if (j == 0) break;
        }
        for (std::size_t j = i + 1; j < p.size(); ++j) {
            const double d = p[j] - p[i];
            if (d > cut) break;
            const double g = std::exp(-0.5 * d * d / (width * width));
            s += g * y[j];
            w += g;
        }
        out[i] = s / w;
    }
    return out;
}

std::vector<double> resample_cubic(const std::vector<double>& x, const std::vector<double>& y,
                                   const std::vector<double>& x_new)
{
    if (x.size() != y.size() || x.size() < 4) throw DomainError("resample_cubic: need >= 4 samples of equal length");
    std::vector<double> out(x_new.size());
    for (std::size_t m = 0; m < x_new.size(); ++m) {
        const double t = x_new[m];
        if (t < x.front() || t > x.back()) throw DomainError("resample_cubic: point outside the sample range");
        const auto it = std::lower_bound(x.begin(), x.end(), t);
        const std::size_t hi = static_cast<std::size_t>(it - x.begin());
        if (it != x.end() && *it == t) {
            out[m] = y[hi];
            continue;
        }
        // Stencil x[s..s+3] around the bracketing interval [hi-1, hi].
        std::size_t s = hi >= 2 ? hi - 2 : 0;
        s = std::min(s, x.size() - 4);
        double v = 0;
        for (std::size_t a = s; a < s + 4; ++a) {
            double l = 1;
            for (std::size_t b = s; b < s + 4; ++b)
                if (b != a) l *= (t - x[b]) / (x[a] - x[b]);
            v += l * y[a];
        }
        out[m] = v;
    }
    return out;
}

RouteComparison compare_routes(const MomentumDistribution& a, const MomentumDistribution& b, const Region* region,
                               FringeOptions opts)
{
    if (a.convention() != NormConvention::UnitIntegral || b.convention() != NormConvention::UnitIntegral)
        throw DomainError("compare_routes: both distributions must be UnitIntegral");
    const auto& pa = a.p();
    const auto& ya = a.density();
    const double lo = std::max(pa.front(), b.p().front());
    const double hi = std::min(pa.back(), b.p().back());

    // Support of a: span of samples above 1e-6 of its peak.
    const double cut = 1e-6 * a.peak();
    double s_lo = std::numeric_limits<double>::infinity(), s_hi = -s_lo;
    for (std::size_t i = 0; i < pa.size(); ++i)
        if (ya[i] > cut) {
            s_lo = std::min(s_lo, pa[i]);
            s_hi = std::max(s_hi, pa[i]);
        }
    RouteComparison out;
    const double support = s_hi - s_lo;
    const double covered = std::max(0.0, std::min(hi, s_hi) - std::max(lo, s_lo));
    out.overlap = support > 0 ? covered / support : (hi >= s_lo && lo <= s_hi ? 1.0 : 0.0);
    if (out.overlap < 0.9)
        throw DomainError("compare_routes: grids overlap only " + std::to_string(100.0 * out.overlap) +
                          "% of the first distribution's support (need 90%)");

    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < pa.size(); ++i)
        if (pa[i] >= lo && pa[i] <= hi) {
            xs.push_back(pa[i]);
            ys.push_back(ya[i]);
        }
    const auto yb = resample_cubic(b.p(), b.density(), xs);
    std::vector<double> diff(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) diff[i] = std::fabs(ys[i] - yb[i]);
    out.l1 = trapezoid(xs, diff);

    const double r_lo = region ? std::max(region->lo, lo) : lo;
    const double r_hi = region ? std::min(region->hi, hi) : hi;
    if (!(r_hi > r_lo)) return out;
    std::vector<double> yb_clamped(yb.size());
    for (std::size_t i = 0; i < yb.size(); ++i) yb_clamped[i] = std::max(0.0, yb[i]);
    const MomentumDistribution a_view(xs, ys, NormConvention::Raw);
    const MomentumDistribution b_view(xs, yb_clamped, NormConvention::Raw);
    const auto fa = extract_fringes(a_view, r_lo, r_hi, opts);
    const auto fb = extract_fringes(b_view, r_lo, r_hi, opts);
    const double window = fa.mean_spacing > 0 ? 0.5 * fa.mean_spacing : (r_hi - r_lo);
    double total = 0;
    for (double m : fa.minima) {
        double best = std::numeric_limits<double>::infinity();
        for (double n : fb.minima) best = std::min(best, std::fabs(m - n));
        if (best <= window) {
            total += best;
            ++out.matched;
        }
    }
    out.minima_shift = out.matched ? total / static_cast<double>(out.matched) : 0.0;
    return out;
}

} // namespace ewi
