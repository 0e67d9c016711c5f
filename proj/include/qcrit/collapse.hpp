#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "qcrit/common.hpp"
#include "qcrit/types.hpp"

namespace qcrit {

struct CurvePoint {
    double x = 0.0;
    double y = 0.0;
    double dx = 0.0;
    double dy = 0.0;
};

// Ordered data curve. Uncertainties are all-or-nothing per curve: a curve is
// either fully weighted or fully exact, never mixed.
struct Curve {
    std::vector<CurvePoint> points;

    bool weighted() const {
        for (const auto& p : points)
            if (p.dx != 0.0 || p.dy != 0.0) return true;
        return false;
    }

    void validate() const {
        require(points.size() >= 2, "curve needs >= 2 points");
        bool any = false, all = true;
        for (std::size_t i = 0; i < points.size(); ++i) {
            const auto& p = points[i];
            require(std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.dx) &&
                        std::isfinite(p.dy),
                    "curve entries must be finite");
            require(p.dx >= 0.0 && p.dy >= 0.0, "curve uncertainties must be >= 0");
            if (i > 0) require(p.x > points[i - 1].x, "curve x must be strictly increasing");
            const bool has = (p.dx != 0.0 || p.dy != 0.0);
            any = any || has;
            all = all && has;
        }
        require(!any || all, "curve mixes zero and nonzero uncertainties");
    }

    double min_x() const { return points.front().x; }
    double max_x() const { return points.back().x; }
};

// Rescale both curves by their joint x and y ranges so each lands inside
// the unit square; uncertainties rescale by the same factors. Accepts
// single-point curves (only cost evaluation needs two points per curve).
inline std::pair<Curve, Curve> normalize_pair(const Curve& c1, const Curve& c2) {
    for (const Curve* c : {&c1, &c2}) {
        require(!c->points.empty(), "normalize_pair: empty curve");
        for (std::size_t i = 0; i < c->points.size(); ++i) {
            const auto& p = c->points[i];
            require(std::isfinite(p.x) && std::isfinite(p.y), "normalize_pair: nonfinite point");
            require(i == 0 || c->points[i - 1].x < p.x,
                    "normalize_pair: x must be strictly increasing");
        }
    }
    double xmin = c1.points[0].x, xmax = xmin, ymin = c1.points[0].y, ymax = ymin;
    for (const Curve* c : {&c1, &c2})
        for (const auto& p : c->points) {
            xmin = std::min(xmin, p.x);
            xmax = std::max(xmax, p.x);
            ymin = std::min(ymin, p.y);
            ymax = std::max(ymax, p.y);
        }
    require(xmax > xmin && ymax > ymin, "normalize_pair: joint extent is zero in x or y");
    const double sx = 1.0 / (xmax - xmin), sy = 1.0 / (ymax - ymin);
    auto map = [&](const Curve& c) {
        Curve out = c;
        for (auto& p : out.points) {
            p.x = (p.x - xmin) * sx;
            p.y = (p.y - ymin) * sy;
            p.dx *= sx;
            p.dy *= sy;
        }
        return out;
    };
    return {map(c1), map(c2)};
}

namespace detail {

struct DistanceResult {
    double d_sq = 0.0;      // squared distance
    double delta_sq = 0.0;  // first-order propagated variance of the distance
};

// Distance from p to the line through the bracketing points q, r, as the
// ratio |num| / sqrt(den) with
//   num = (q_x - r_x)(r_y - p_y) - (r_x - p_x)(q_y - r_y),
//   den = (q_x - r_x)^2 + (q_y - r_y)^2,
// plus the variance of that distance propagated to first order through all
// six coordinates. A degenerate bracket (q = r) reduces to the point
// distance.
inline DistanceResult line_distance(const CurvePoint& p, const CurvePoint& q,
                                    const CurvePoint& r) {
    DistanceResult out;
    const double qrx = q.x - r.x, qry = q.y - r.y;
    const double den = qrx * qrx + qry * qry;
    if (den == 0.0) {
        const double ex = p.x - q.x, ey = p.y - q.y;
        out.d_sq = ex * ex + ey * ey;
        if (out.d_sq > 0.0) {
            const double d = std::sqrt(out.d_sq);
            const double gx = ex / d, gy = ey / d;
            out.delta_sq = gx * gx * (p.dx * p.dx + q.dx * q.dx) +
                           gy * gy * (p.dy * p.dy + q.dy * q.dy);
        }
        return out;
    }
    const double num = qrx * (r.y - p.y) - (r.x - p.x) * qry;
    out.d_sq = num * num / den;
    const double len = std::sqrt(den);
    const double d = std::abs(num) / len;
    const double sgn = (num >= 0.0) ? 1.0 : -1.0;
    // dD/dxi = sgn * dnum/dxi / len - D * dlen/dxi / len
    const double n_px = qry, n_py = -qrx;
    const double n_qx = r.y - p.y, n_qy = -(r.x - p.x);
    const double n_rx = p.y - q.y, n_ry = q.x - p.x;
    const double l_qx = qrx / len, l_qy = qry / len;
    const double g_px = sgn * n_px / len;
    const double g_py = sgn * n_py / len;
    const double g_qx = sgn * n_qx / len - d * l_qx / len;
    const double g_qy = sgn * n_qy / len - d * l_qy / len;
    const double g_rx = sgn * n_rx / len + d * l_qx / len;
    const double g_ry = sgn * n_ry / len + d * l_qy / len;
    out.delta_sq = g_px * g_px * p.dx * p.dx + g_py * g_py * p.dy * p.dy +
                   g_qx * g_qx * q.dx * q.dx + g_qy * g_qy * q.dy * q.dy +
                   g_rx * g_rx * r.dx * r.dx + g_ry * g_ry * r.dy * r.dy;
    return out;
}

// Bracketing points of p_x within curve c (x sorted ascending):
// q is the nearest point with x >= p_x, r the nearest with x <= p_x.
// Requires p_x inside [min_x, max_x].
inline std::pair<std::size_t, std::size_t> bracket(const Curve& c, double px) {
    const auto& pts = c.points;
    auto it = std::lower_bound(pts.begin(), pts.end(), px,
                               [](const CurvePoint& a, double v) { return a.x < v; });
    const std::size_t iq = static_cast<std::size_t>(it - pts.begin());
    if (pts[iq].x == px) return {iq, iq};
    return {iq, iq - 1};
}

}  // namespace detail

// Squared perpendicular distance from point p to the bracket segment (q, r).
inline double segment_distance_sq(const CurvePoint& p, const CurvePoint& q,
                                  const CurvePoint& r) {
    return detail::line_distance(p, q, r).d_sq;
}

// Loss of one point of a normalized curve against another normalized curve:
// zero outside the x-domain of c, else D^2/Delta^2 (weighted) or D^2 alone
// (unweighted, exact-simulation mode).
inline double point_loss(const CurvePoint& p, const Curve& c, bool weighted = true) {
    if (p.x < c.min_x() || p.x > c.max_x()) return 0.0;
    const auto [iq, ir] = detail::bracket(c, p.x);
    const detail::DistanceResult res =
        detail::line_distance(p, c.points[iq], c.points[ir]);
    if (res.d_sq == 0.0) return 0.0;
    if (!weighted) return res.d_sq;
    require_numeric(res.delta_sq > 0.0,
                    "point_loss: zero propagated uncertainty with nonzero distance");
    return res.d_sq / res.delta_sq;
}

// Symmetric pair cost: each directed loss sum is normalized by its own count
// of in-domain points. Curves with disjoint x-ranges contribute zero and are
// flagged through zero_overlap.
inline double pair_cost(const Curve& c1, const Curve& c2, bool weighted = true,
                        bool* zero_overlap = nullptr) {
    const auto [a, b] = normalize_pair(c1, c2);
    double total = 0.0;
    bool any_overlap = false;
    const Curve* curves[2] = {&a, &b};
    for (int dir = 0; dir < 2; ++dir) {
        const Curve& from = *curves[dir];
        const Curve& to = *curves[1 - dir];
        double sum = 0.0;
        long count = 0;
        for (const auto& p : from.points) {
            if (p.x < to.min_x() || p.x > to.max_x()) continue;
            sum += point_loss(p, to, weighted);
            ++count;
        }
        if (count > 0) {
            total += 0.5 * sum / static_cast<double>(count);
            any_overlap = true;
        }
    }
    if (zero_overlap) *zero_overlap = !any_overlap;
    return total;
}

// Family objective S = (1 / (N^2 - N)) * sum_{i<j} s(C_i, C_j). The
// normalization counts ordered pairs while the sum runs over unordered ones;
// that matches the reference construction and only scales the landscape.
// Weighting is decided from the curves: any nonzero uncertainty anywhere
// makes the evaluation weighted.
inline double objective(const std::vector<Curve>& curves) {
    require(curves.size() >= 2, "objective needs >= 2 curves");
    bool weighted = false;
    for (const auto& c : curves) {
        c.validate();
        weighted = weighted || c.weighted();
    }
    const double nc = static_cast<double>(curves.size());
    double s = 0.0;
    for (std::size_t i = 0; i < curves.size(); ++i)
        for (std::size_t j = i + 1; j < curves.size(); ++j)
            s += pair_cost(curves[i], curves[j], weighted);
    return s / (nc * nc - nc);
}

namespace detail {

// Golden-section bracketing followed by Brent minimization along one line.
// f1d takes the signed step t and returns the objective; f0 = f1d(0) is
// already known. Returns the best step and value found within the budget.
template <class F>
std::pair<double, double> line_minimize(F&& f1d, double f0, int& evals, int budget,
                                        double tol) {
    constexpr double gold = 1.618033988749895;
    double a = 0.0, fa = f0;
    double b = 0.25, fb;
    fb = f1d(b);
    ++evals;
    if (fb > fa) {
        std::swap(a, b);
        std::swap(fa, fb);
    }
    double c = b + gold * (b - a);
    double fc = f1d(c);
    ++evals;
    int guard = 0;
    while (fc < fb && guard++ < 40 && evals < budget) {
        a = b;
        fa = fb;
        b = c;
        fb = fc;
        c = b + gold * (b - a);
        fc = f1d(c);
        ++evals;
    }
    double lo = std::min(a, c), hi = std::max(a, c);

    // Brent with parabolic steps on [lo, hi], seeded at b.
    double x = b, w = b, v = b;
    double fx = fb, fw = fb, fv = fb;
    double d = 0.0, e = 0.0;
    for (int it = 0; it < 60 && evals < budget; ++it) {
        const double xm = 0.5 * (lo + hi);
        const double tol1 = tol * std::abs(x) + 1e-12;
        const double tol2 = 2.0 * tol1;
        if (std::abs(x - xm) <= tol2 - 0.5 * (hi - lo)) break;
        bool parabolic = false;
        if (std::abs(e) > tol1) {
            const double r = (x - w) * (fx - fv);
            double q = (x - v) * (fx - fw);
            double p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if (q > 0.0) p = -p;
            q = std::abs(q);
            const double e_old = e;
            e = d;
            if (std::abs(p) < std::abs(0.5 * q * e_old) && p > q * (lo - x) &&
                p < q * (hi - x)) {
                d = p / q;
                const double u = x + d;
                if (u - lo < tol2 || hi - u < tol2) d = (xm > x) ? tol1 : -tol1;
                parabolic = true;
            }
        }
        if (!parabolic) {
            e = (x >= xm) ? lo - x : hi - x;
            d = 0.381966011250105 * e;
        }
        const double u = (std::abs(d) >= tol1) ? x + d : x + ((d > 0) ? tol1 : -tol1);
        const double fu = f1d(u);
        ++evals;
        if (fu <= fx) {
            if (u >= x) lo = x; else hi = x;
            v = w; fv = fw;
            w = x; fw = fx;
            x = u; fx = fu;
        } else {
            if (u < x) lo = u; else hi = u;
            if (fu <= fw || w == x) {
                v = w; fv = fw;
                w = u; fw = fu;
            } else if (fu <= fv || v == x || v == w) {
                v = u; fv = fu;
            }
        }
    }
    return {x, fx};
}

}  // namespace detail

struct CollapseResult {
    double alpha = 0.0;
    double zeta = 0.0;
    double s_min = 0.0;
    double d_alpha = 0.0;
    double d_zeta = 0.0;
    int evaluations = 0;
    bool converged = false;
    bool weighted = false;
};

enum class CollapseWindow { full, first_min_after_first_max };

// Exponent uncertainties from the Hessian at the minimum, using the
// exact-collapse convention that the global minimum of the objective is
// zero: d_alpha = sqrt(S * (H^-1)_aa), d_zeta = sqrt(S * (H^-1)_zz).
inline std::pair<double, double> hessian_uncertainty(double s_min,
                                                     const std::array<double, 4>& h) {
    require(s_min >= 0.0, "hessian_uncertainty: objective must be >= 0");
    if (s_min == 0.0) return {0.0, 0.0};
    const double det = h[0] * h[3] - h[1] * h[2];
    require_numeric(h[0] > 0.0 && det > 0.0,
                    "hessian not positive definite; enlarge the window or the "
                    "finite-difference step");
    return {std::sqrt(s_min * h[3] / det), std::sqrt(s_min * h[0] / det)};
}

// Minimize S(alpha, zeta) by Powell's conjugate-direction method with Brent
// line searches, then attach Hessian uncertainties. The scaler maps a trial
// exponent pair to the curve family. One full restart with fresh axis
// directions guards against a degenerate direction set.
template <class Scaler>
CollapseResult optimize_collapse_fn(Scaler&& scaler, std::array<double, 2> init,
                                    double tol = 1e-6, int budget = 2000) {
    int evals = 0;
    bool weighted_seen = false;
    auto eval = [&](double alpha, double zeta) {
        const std::vector<Curve> curves = scaler(alpha, zeta);
        for (const auto& c : curves) weighted_seen = weighted_seen || c.weighted();
        return objective(curves);
    };

    std::array<double, 2> x = init;
    double fx = eval(x[0], x[1]);
    ++evals;
    bool converged = false;
    for (int restart = 0; restart < 2 && !converged; ++restart) {
        std::array<std::array<double, 2>, 2> dirs = {{{1.0, 0.0}, {0.0, 1.0}}};
        for (int iter = 0; iter < 50; ++iter) {
            const std::array<double, 2> x_start = x;
            const double f_start = fx;
            double biggest_drop = 0.0;
            int biggest_idx = 0;
            for (int i = 0; i < 2; ++i) {
                const double f_before = fx;
                auto f1d = [&](double t) {
                    return eval(x[0] + t * dirs[i][0], x[1] + t * dirs[i][1]);
                };
                const auto [t, ft] = detail::line_minimize(f1d, fx, evals, budget, tol);
                if (ft < fx) {
                    x[0] += t * dirs[i][0];
                    x[1] += t * dirs[i][1];
                    fx = ft;
                }
                if (f_before - fx > biggest_drop) {
                    biggest_drop = f_before - fx;
                    biggest_idx = i;
                }
                if (evals >= budget) break;
            }
            if (2.0 * (f_start - fx) <= tol * (std::abs(f_start) + std::abs(fx)) + 1e-25) {
                converged = true;
                break;
            }
            if (evals >= budget) break;
            // Powell update: try the extrapolated point along the net move.
            const std::array<double, 2> net = {x[0] - x_start[0], x[1] - x_start[1]};
            const double fe = eval(x_start[0] + 2.0 * net[0], x_start[1] + 2.0 * net[1]);
            ++evals;
            if (fe < f_start) {
                const double t1 = f_start - fx - biggest_drop;
                const double t2 = f_start - fe;
                if (2.0 * (f_start - 2.0 * fx + fe) * t1 * t1 < biggest_drop * t2 * t2) {
                    auto f1d = [&](double t) {
                        return eval(x[0] + t * net[0], x[1] + t * net[1]);
                    };
                    const auto [t, ft] = detail::line_minimize(f1d, fx, evals, budget, tol);
                    if (ft < fx) {
                        x[0] += t * net[0];
                        x[1] += t * net[1];
                        fx = ft;
                    }
                    dirs[biggest_idx] = dirs[1];
                    const double norm = std::hypot(net[0], net[1]);
                    if (norm > 0.0) dirs[1] = {net[0] / norm, net[1] / norm};
                }
            }
            if (evals >= budget) break;
        }
    }

    CollapseResult out;
    out.alpha = x[0];
    out.zeta = x[1];
    out.s_min = fx;
    out.evaluations = evals;
    out.converged = converged;
    out.weighted = weighted_seen;

    // Central-difference Hessian at the reported minimum, step 1e-3.
    const double h = 1e-3;
    const double fpp = eval(x[0] + h, x[1]);
    const double fmm = eval(x[0] - h, x[1]);
    const double fqp = eval(x[0], x[1] + h);
    const double fqm = eval(x[0], x[1] - h);
    const double fa = (fpp - 2.0 * fx + fmm) / (h * h);
    const double fz = (fqp - 2.0 * fx + fqm) / (h * h);
    const double fc = (eval(x[0] + h, x[1] + h) - eval(x[0] + h, x[1] - h) -
                       eval(x[0] - h, x[1] + h) + eval(x[0] - h, x[1] - h)) /
                      (4.0 * h * h);
    evals += 8;
    out.evaluations = evals;
    if (fx == 0.0) {
        out.d_alpha = 0.0;
        out.d_zeta = 0.0;
    } else {
        const auto [da, dz] = hessian_uncertainty(fx, {fa, fc, fc, fz});
        out.d_alpha = da;
        out.d_zeta = dz;
    }
    return out;
}

// Scale one series into collapse coordinates x = kac * t / n^zeta,
// y = value / n^{1+alpha}; y uncertainties scale with y.
inline Curve scaled_curve(const ObservableSeries& s, double alpha, double zeta,
                          std::size_t limit = static_cast<std::size_t>(-1)) {
    s.validate();
    const double n = static_cast<double>(s.n);
    const double xs = s.kac / std::pow(n, zeta);
    const double ys = 1.0 / std::pow(n, 1.0 + alpha);
    Curve c;
    const std::size_t count = std::min(limit, s.times.size());
    c.points.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        CurvePoint p;
        p.x = s.times[i] * xs;
        p.y = s.values[i] * ys;
        p.dy = s.stderrs.empty() ? 0.0 : s.stderrs[i] * ys;
        c.points.push_back(p);
    }
    return c;
}

// Collapse a family of per-size series under the standard two-exponent
// scaling form. The window optionally truncates each series at the first
// local minimum after its first local maximum before scaling.
inline CollapseResult optimize_collapse(const std::vector<ObservableSeries>& family,
                                        std::array<double, 2> init,
                                        CollapseWindow window = CollapseWindow::full,
                                        double tol = 1e-6, int budget = 2000) {
    require(family.size() >= 2, "optimize_collapse needs >= 2 system sizes");
    std::vector<std::size_t> limits(family.size());
    for (std::size_t i = 0; i < family.size(); ++i) {
        family[i].validate();
        limits[i] = (window == CollapseWindow::first_min_after_first_max)
                        ? first_min_after_first_max(family[i].values)
                        : family[i].values.size();
        require(limits[i] >= 2, "window leaves fewer than 2 points");
    }
    auto scaler = [&](double alpha, double zeta) {
        std::vector<Curve> curves;
        curves.reserve(family.size());
        for (std::size_t i = 0; i < family.size(); ++i)
            curves.push_back(scaled_curve(family[i], alpha, zeta, limits[i]));
        return curves;
    };
    return optimize_collapse_fn(scaler, init, tol, budget);
}

enum class PeakMode { raw, per_site };

struct PeakScalingFit {
    double alpha = 0.0;
    double d_alpha = 0.0;
};

// Power-law fit of peak amplitudes against system size in log-log space.
// raw peaks scale as n^{1+alpha}; per-site peaks (value / n) as n^alpha.
inline PeakScalingFit fit_peak_scaling(const std::vector<std::pair<double, double>>& maxima,
                                       PeakMode mode) {
    require(maxima.size() >= 3, "fit_peak_scaling needs >= 3 sizes");
    std::vector<double> lx, ly;
    for (const auto& [n, peak] : maxima) {
        require(n > 0.0, "fit_peak_scaling: sizes must be positive");
        require(peak > 0.0, "fit_peak_scaling: peaks must be positive");
        lx.push_back(std::log(n));
        ly.push_back(std::log(peak));
    }
    const LineFit lf = fit_line(lx, ly);
    double ssr = 0.0, sxx = 0.0, mx = 0.0;
    for (double v : lx) mx += v;
    mx /= static_cast<double>(lx.size());
    for (std::size_t i = 0; i < lx.size(); ++i) {
        const double r = ly[i] - lf.slope * lx[i] - lf.intercept;
        ssr += r * r;
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    PeakScalingFit out;
    out.alpha = (mode == PeakMode::raw) ? lf.slope - 1.0 : lf.slope;
    const double dof = static_cast<double>(lx.size()) - 2.0;
    out.d_alpha = (dof > 0.0 && sxx > 0.0) ? std::sqrt(ssr / dof / sxx) : 0.0;
    return out;
}

}  // namespace qcrit
