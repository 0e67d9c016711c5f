#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "qcrit/collapse.hpp"

using namespace qcrit;

namespace {

// Elementary-geometry oracle: dense scan of the parametrized line through
// q and r centred on the analytic projection foot, so the true minimum is
// always inside the scanned range.
double line_min_dist_sq(const CurvePoint& p, const CurvePoint& q, const CurvePoint& r) {
    const double dx = r.x - q.x, dy = r.y - q.y;
    const double den = dx * dx + dy * dy;
    const double tstar = ((p.x - q.x) * dx + (p.y - q.y) * dy) / den;
    double best = 1e300;
    const int samples = 20000;
    for (int k = -samples; k <= samples; ++k) {
        const double t = tstar + 0.5 * k / samples;
        const double lx = q.x + t * dx, ly = q.y + t * dy;
        const double d2 = (p.x - lx) * (p.x - lx) + (p.y - ly) * (p.y - ly);
        best = std::min(best, d2);
    }
    return best;
}

ObservableSeries planted_series(int n, double alpha, double zeta, int points,
                                double stderr_scale = 0.0) {
    ObservableSeries s;
    s.n = n;
    s.kac = 1.0;
    s.label = "Cx2";
    const double tmax = 5.0 * std::pow(n, zeta);
    for (int i = 1; i <= points; ++i) {
        const double t = tmax * i / points;
        const double x = t / std::pow(n, zeta);
        s.times.push_back(t);
        s.values.push_back(std::pow(n, 1.0 + alpha) * x * std::exp(-x));
        if (stderr_scale > 0.0)
            s.stderrs.push_back(stderr_scale * std::pow(n, 1.0 + alpha));
    }
    return s;
}

}  // namespace

TEST_CASE("point-to-line distance matches a dense-scan oracle", "[collapse]") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 300; ++trial) {
        const CurvePoint p{u(rng), u(rng), 0, 0};
        const CurvePoint q{u(rng), u(rng), 0, 0};
        const CurvePoint r{u(rng), u(rng), 0, 0};
        if (std::hypot(q.x - r.x, q.y - r.y) < 1e-3) continue;
        INFO("trial " << trial);
        CHECK(segment_distance_sq(p, q, r) ==
              Catch::Approx(line_min_dist_sq(p, q, r)).margin(1e-8));
    }
}

TEST_CASE("line distance equals dense segment scan when the foot is interior",
          "[collapse]") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int kept = 0;
    for (int trial = 0; trial < 2000 && kept < 100; ++trial) {
        const CurvePoint p{u(rng), u(rng), 0, 0};
        const CurvePoint q{u(rng), u(rng), 0, 0};
        const CurvePoint r{u(rng), u(rng), 0, 0};
        const double dx = r.x - q.x, dy = r.y - q.y;
        const double den = dx * dx + dy * dy;
        if (den < 1e-4) continue;
        const double tstar = ((p.x - q.x) * dx + (p.y - q.y) * dy) / den;
        if (tstar < 0.05 || tstar > 0.95) continue;  // projection inside the bracket
        ++kept;
        double best = 1e300;
        for (int k = 0; k <= 10000; ++k) {
            const double t = k / 10000.0;
            const double lx = q.x + t * dx, ly = q.y + t * dy;
            best = std::min(best, (p.x - lx) * (p.x - lx) + (p.y - ly) * (p.y - ly));
        }
        INFO("trial " << trial);
        CHECK(segment_distance_sq(p, q, r) == Catch::Approx(best).margin(1e-7));
    }
    REQUIRE(kept == 100);
}

TEST_CASE("distance variance matches numerical propagation", "[collapse]") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.1, 0.9);
    std::uniform_real_distribution<double> su(0.01, 0.05);
    for (int trial = 0; trial < 50; ++trial) {
        CurvePoint p{u(rng), u(rng), su(rng), su(rng)};
        CurvePoint q{u(rng), u(rng), su(rng), su(rng)};
        CurvePoint r{u(rng), u(rng), su(rng), su(rng)};
        if (std::hypot(q.x - r.x, q.y - r.y) < 0.1) continue;
        const auto res = qcrit::detail::line_distance(p, q, r);
        if (res.d_sq < 1e-4) continue;  // gradient of |.| ill-conditioned near zero

        // central differences through the distance (not its square)
        const double h = 1e-6;
        double grads[6];
        double* coords[6] = {&p.x, &p.y, &q.x, &q.y, &r.x, &r.y};
        for (int c = 0; c < 6; ++c) {
            const double keep = *coords[c];
            *coords[c] = keep + h;
            const double dp = std::sqrt(qcrit::detail::line_distance(p, q, r).d_sq);
            *coords[c] = keep - h;
            const double dm = std::sqrt(qcrit::detail::line_distance(p, q, r).d_sq);
            *coords[c] = keep;
            grads[c] = (dp - dm) / (2.0 * h);
        }
        const double sig[6] = {p.dx, p.dy, q.dx, q.dy, r.dx, r.dy};
        double var = 0.0;
        for (int c = 0; c < 6; ++c) var += grads[c] * grads[c] * sig[c] * sig[c];
        INFO("trial " << trial << " d_sq " << res.d_sq);
        CHECK(res.delta_sq == Catch::Approx(var).epsilon(1e-4));
    }
}

TEST_CASE("pair cost hand value: unit-offset lines with 0.1 errors give 50",
          "[collapse]") {
    Curve c1, c2;
    for (int i = 0; i <= 4; ++i) {
        c1.points.push_back({i / 4.0, 0.0, 0.0, 0.1});
        c2.points.push_back({i / 4.0, 1.0, 0.0, 0.1});
    }
    // matched grids: every bracket degenerates to a point, D = 1,
    // Delta^2 = 0.1^2 + 0.1^2, loss = 1 / 0.02 = 50 for every point
    CHECK(pair_cost(c1, c2) == Catch::Approx(50.0).epsilon(1e-12));

    // shifted grid forces interpolation; still strictly positive
    Curve c3;
    for (int i = 0; i <= 3; ++i) c3.points.push_back({0.05 + 0.3 * i, 1.0, 0.0, 0.1});
    CHECK(pair_cost(c1, c3) == Catch::Approx(63.868003).epsilon(1e-6));
}

TEST_CASE("disjoint x-ranges produce zero cost and raise the overlap flag",
          "[collapse]") {
    Curve far;
    far.points = {{10.0, 0.0, 0, 0}, {11.0, 1.0, 0, 0}};
    Curve near;
    near.points = {{0.0, 0.0, 0, 0}, {1.0, 1.0, 0, 0}};
    bool flag = false;
    CHECK(pair_cost(far, near, false, &flag) == 0.0);
    CHECK(flag);
    flag = true;
    pair_cost(near, near, false, &flag);
    CHECK(!flag);
}

TEST_CASE("normalization maps the joint bounding box to the unit square",
          "[collapse]") {
    Curve c1;
    c1.points = {{0.0, 0.0, 0.2, 0.4}, {2.0, 4.0, 0.2, 0.4}};
    Curve c2;
    c2.points = {{1.0, 2.0, 0.0, 0.0}};  // single point is allowed here
    const auto [a, b] = normalize_pair(c1, c2);
    CHECK(a.points[0].x == 0.0);
    CHECK(a.points[1].x == 1.0);
    CHECK(a.points[1].y == 1.0);
    CHECK(b.points[0].x == Catch::Approx(0.5));
    CHECK(b.points[0].y == Catch::Approx(0.5));
    CHECK(a.points[0].dx == Catch::Approx(0.1));   // rescaled by 1/range
    CHECK(a.points[0].dy == Catch::Approx(0.1));
    Curve flat;
    flat.points = {{0.0, 1.0, 0, 0}, {1.0, 1.0, 0, 0}};
    CHECK_THROWS_AS(normalize_pair(flat, flat), contract_error);  // zero y extent
}

TEST_CASE("points outside the other curve's domain cost nothing", "[collapse]") {
    Curve c;
    c.points = {{0.0, 0.0, 0, 0}, {1.0, 1.0, 0, 0}};
    CHECK(point_loss({-0.5, 0.3, 0, 0}, c, false) == 0.0);
    CHECK(point_loss({1.5, 0.3, 0, 0}, c, false) == 0.0);
    CHECK(point_loss({0.5, 0.5, 0, 0}, c, false) == 0.0);  // exactly on the curve
    CHECK(point_loss({0.5, 0.6, 0, 0}, c, false) > 0.0);
}

TEST_CASE("optimizer recovers planted exponents from an exact family", "[collapse]") {
    std::vector<ObservableSeries> fam;
    for (int n : {100, 200, 400, 800}) fam.push_back(planted_series(n, 0.5, 0.25, 200));
    const CollapseResult res = optimize_collapse(fam, {0.3, 0.3});
    CHECK(res.converged);
    CHECK(!res.weighted);
    CHECK(std::abs(res.alpha - 0.5) <= 0.02);
    CHECK(std::abs(res.zeta - 0.25) <= 0.02);
    CHECK(res.s_min < 1e-12);
}

TEST_CASE("identical curves collapse to zero objective and zero uncertainty",
          "[collapse]") {
    std::vector<ObservableSeries> twin = {planted_series(100, 0.5, 0.25, 150),
                                          planted_series(100, 0.5, 0.25, 150)};
    const CollapseResult res = optimize_collapse(twin, {0.5, 0.25});
    CHECK(res.s_min == 0.0);
    CHECK(res.d_alpha == 0.0);
    CHECK(res.d_zeta == 0.0);
}

TEST_CASE("weighted optimization engages when curves carry uncertainties",
          "[collapse]") {
    std::vector<ObservableSeries> fam;
    for (int n : {100, 200, 400}) fam.push_back(planted_series(n, 0.5, 0.25, 150, 1e-3));
    const CollapseResult res = optimize_collapse(fam, {0.4, 0.2});
    CHECK(res.weighted);
    CHECK(std::abs(res.alpha - 0.5) <= 0.02);
    CHECK(std::abs(res.zeta - 0.25) <= 0.02);
}

TEST_CASE("optimizer rejects fewer than two curves", "[collapse]") {
    std::vector<ObservableSeries> one = {planted_series(100, 0.5, 0.25, 50)};
    CHECK_THROWS_AS(optimize_collapse(one, {0.3, 0.3}), contract_error);
}

TEST_CASE("scaled curves divide time by n^zeta and value by n^(1+alpha)",
          "[collapse]") {
    ObservableSeries s;
    s.n = 16;
    s.kac = 2.0;  // bare couplings: multiply raw time by the mean coupling
    s.times = {1.0, 2.0};
    s.values = {32.0, 64.0};
    s.stderrs = {8.0, 8.0};
    const Curve c = scaled_curve(s, 1.0, 0.5);
    CHECK(c.points[0].x == Catch::Approx(2.0 / 4.0));
    CHECK(c.points[0].y == Catch::Approx(32.0 / 256.0));
    CHECK(c.points[0].dy == Catch::Approx(8.0 / 256.0));
    const Curve trunc = scaled_curve(s, 1.0, 0.5, 1);
    CHECK(trunc.points.size() == 1);
}

TEST_CASE("peak-amplitude fit recovers a planted growth exponent", "[collapse]") {
    std::vector<std::pair<double, double>> peaks;
    for (double n : {64.0, 128.0, 256.0, 512.0}) peaks.emplace_back(n, 0.31 * std::pow(n, 1.5));
    const PeakScalingFit raw = fit_peak_scaling(peaks, PeakMode::raw);
    CHECK(raw.alpha == Catch::Approx(0.5).margin(1e-10));
    CHECK(raw.d_alpha < 1e-10);

    std::vector<std::pair<double, double>> per_site;
    for (const auto& [n, v] : peaks) per_site.emplace_back(n, v / n);
    const PeakScalingFit ps = fit_peak_scaling(per_site, PeakMode::per_site);
    CHECK(ps.alpha == Catch::Approx(0.5).margin(1e-10));

    std::vector<std::pair<double, double>> two = {{64.0, 1.0}, {128.0, 2.0}};
    CHECK_THROWS_AS(fit_peak_scaling(two, PeakMode::raw), contract_error);
}

TEST_CASE("window cut stops at the first dip after the first rise", "[collapse]") {
    // rise to 3, dip to 1, rise again: the window keeps indices 0..4
    const std::vector<double> vals = {0.0, 2.0, 3.0, 2.0, 1.0, 2.0, 5.0};
    CHECK(first_min_after_first_max(vals) == 5);  // count, not index
    const std::vector<double> mono = {0.0, 1.0, 2.0, 3.0};
    CHECK(first_min_after_first_max(mono) == mono.size());
}

TEST_CASE("family objective averages pair costs over ordered pairs", "[collapse]") {
    // three identical exact curves: every pair cost is zero
    std::vector<Curve> same(3);
    for (auto& c : same)
        c.points = {{0.0, 0.0, 0, 0}, {0.5, 1.0, 0, 0}, {1.0, 0.3, 0, 0}};
    CHECK(objective(same) == 0.0);

    // two unit-offset flat curves, matched grids, unweighted:
    // pair cost 1.0 (D^2 = 1 per point), objective = 1.0 / (2^2 - 2)
    std::vector<Curve> off(2);
    for (int i = 0; i <= 4; ++i) {
        off[0].points.push_back({i / 4.0, 0.0, 0, 0});
        off[1].points.push_back({i / 4.0, 1.0, 0, 0});
    }
    CHECK(objective(off) == Catch::Approx(1.0 / 2.0).epsilon(1e-12));
}
