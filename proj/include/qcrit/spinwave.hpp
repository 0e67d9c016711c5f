#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "qcrit/common.hpp"
#include "qcrit/interaction.hpp"
#include "qcrit/linalg.hpp"

namespace qcrit {

// Fourier transform of the periodic power-law coupling at momentum k,
//   Jt_k = 2 sum_{r=1}^{(n-1)/2} cos(r k) / r^p
// (unit base coupling). Odd n keeps every separation unambiguous on the ring.
inline double fourier_coupling(double p, int n, double k) {
    require(n >= 3, "fourier_coupling: n >= 3");
    require(n % 2 == 1, "fourier_coupling: n must be odd; use the real-space path for even n");
    require(std::isfinite(p) && p >= 0.0, "fourier_coupling: p >= 0");
    double sum = 0.0;
    for (int r = 1; r <= (n - 1) / 2; ++r)
        sum += std::cos(r * k) / std::pow(static_cast<double>(r), p);
    return 2.0 * sum;
}

// Collective coupling of the ring: Jbar = Jt_0 * n / (n-1), so that
// Jt_0 / Jbar = (n-1)/n exactly.
inline double kac_coupling_periodic(double p, int n) {
    return fourier_coupling(p, n, 0.0) * n / (n - 1.0);
}

// Quasiparticle dispersion above the polarized state for the periodic chain.
// Momenta are k_q = 2 pi q / n for q = 0 .. n-1; b is measured in units of
// the collective coupling.
struct Dispersion {
    std::vector<double> k;
    std::vector<double> omega;  // sqrt(b (b - Jt_k/Jbar)); NaN-free only when valid
    std::vector<double> theta;  // Bogoliubov angles, tanh(2 theta) = (Jt_k/2Jbar)/(b - Jt_k/2Jbar)
    bool valid = true;          // false when any omega^2 < 0 (description breaks down)
};

inline Dispersion dispersion_periodic(double b, double p, int n) {
    require(std::isfinite(b) && b > 0.0, "dispersion_periodic: b > 0");
    const double jbar = kac_coupling_periodic(p, n);
    Dispersion d;
    d.k.resize(static_cast<std::size_t>(n));
    d.omega.resize(static_cast<std::size_t>(n));
    d.theta.resize(static_cast<std::size_t>(n));
    for (int q = 0; q < n; ++q) {
        const double k = 2.0 * M_PI * q / n;
        const double jk = fourier_coupling(p, n, k) / jbar;
        const double w2 = b * (b - jk);
        d.k[static_cast<std::size_t>(q)] = k;
        if (w2 < 0.0) d.valid = false;
        d.omega[static_cast<std::size_t>(q)] = w2 >= 0.0 ? std::sqrt(w2) : 0.0;
        const double denom = b - 0.5 * jk;
        const double t2 = 0.5 * jk / denom;
        d.theta[static_cast<std::size_t>(q)] =
            std::abs(t2) < 1.0 ? 0.5 * std::atanh(t2) : std::numeric_limits<double>::quiet_NaN();
    }
    return d;
}

struct BogoliubovSpectrum {
    std::vector<double> energies;  // ascending, units of the Kac coupling
    std::pair<double, double> lowest_two{0.0, 0.0};
    bool valid = true;   // all squared energies >= -1e-10
    double min_sq = 0.0;  // most negative squared eigenvalue encountered
};

// Real-space quadratic spectrum for an arbitrary symmetric coupling matrix:
//   A = -J/(2 Jbar) + b I,  C = -J/(2 Jbar),  Lambda = sqrt(eig(A^2 - C^2)).
// A and C commute (both are polynomials in J), so M = A^2 - C^2 is symmetric
// and the square root is well defined whenever its eigenvalues are
// nonnegative. b is in units of the Kac coupling.
inline BogoliubovSpectrum spectrum_realspace(const InteractionMatrix& j, double b) {
    j.validate();
    require(std::isfinite(b), "spectrum_realspace: b must be finite");
    const int n = j.n();
    const double jbar = j.kac();
    require_numeric(jbar > 0.0, "spectrum_realspace: nonpositive collective coupling");
    const Eigen::MatrixXd x = -j.j / (2.0 * jbar);
    Eigen::MatrixXd a = x;
    a.diagonal().array() += b;
    const Eigen::MatrixXd m = a * a - x * x;
    const DenseEigen eig = dense_eigh(m);

    BogoliubovSpectrum out;
    out.energies.resize(static_cast<std::size_t>(n));
    out.min_sq = eig.w.minCoeff();
    out.valid = out.min_sq >= -1e-10;
    for (int i = 0; i < n; ++i)
        out.energies[static_cast<std::size_t>(i)] = std::sqrt(std::max(0.0, eig.w[i]));
    std::sort(out.energies.begin(), out.energies.end());
    out.lowest_two = {out.energies[0], n > 1 ? out.energies[1] : out.energies[0]};
    return out;
}

// Field at which the softest mode touches zero, in units of the Kac
// coupling. Bisection on the sign of the smallest squared eigenvalue, which
// is monotone in b on the disordered side.
inline double critical_field(const InteractionMatrix& j, double b_hi = 3.0, double tol = 1e-8) {
    j.validate();
    require(b_hi > 0.0 && tol > 0.0, "critical_field: positive bracket and tolerance");
    const auto min_sq = [&](double b) { return spectrum_realspace(j, b).min_sq; };
    double lo = 1e-6, hi = b_hi;
    double f_lo = min_sq(lo), f_hi = min_sq(hi);
    require_numeric(f_lo < 0.0 && f_hi > 0.0,
                    "critical_field: no soft-mode sign change in the bracket");
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (min_sq(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

// Bosonic population deposited in a gapped mode by the sudden quench from
// the polarized state: n + 1/2 = (1/4)(Omega/Omega0 + Omega0/Omega) with
// Omega0 = 2 b0 and Omega = lambda1.
inline double gapped_mode_population(double b0_effective, double lambda1) {
    require(b0_effective > 0.0, "gapped_mode_population: b0 > 0");
    require(lambda1 > 0.0, "gapped_mode_population: lambda1 > 0");
    const double ratio = lambda1 / (2.0 * b0_effective);
    return 0.25 * (ratio + 1.0 / ratio) - 0.5;
}

}  // namespace qcrit
