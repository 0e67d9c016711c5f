#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "qcrit/common.hpp"

namespace qcrit {

// Symmetric coupling matrix with zero diagonal, ferromagnetic convention:
// positive entries favour alignment.
struct InteractionMatrix {
    Eigen::MatrixXd j;

    int n() const { return static_cast<int>(j.rows()); }

    // Mean coupling per ordered pair: sum_{i != j} J_ij / (n - 1).
    // Dividing the Hamiltonian by this makes the quench energy scale
    // size-independent.
    double kac() const {
        const int m = n();
        require(m >= 2, "kac normalisation needs n >= 2");
        return j.sum() / (m - 1);
    }

    bool is_uniform(double tol = 1e-12) const {
        const int m = n();
        if (m < 2) return true;
        const double ref = j(0, 1);
        const double scale = std::max(1.0, std::abs(ref));
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b)
                if (a != b && std::abs(j(a, b) - ref) > tol * scale) return false;
        return true;
    }

    void validate() const {
        require(j.rows() == j.cols() && j.rows() >= 2, "coupling matrix must be square, n >= 2");
        for (int a = 0; a < n(); ++a) {
            require(j(a, a) == 0.0, "coupling matrix must have zero diagonal");
            for (int b = a + 1; b < n(); ++b)
                require(std::abs(j(a, b) - j(b, a)) <= 1e-12 * std::max(1.0, std::abs(j(a, b))),
                        "coupling matrix must be symmetric");
        }
    }
};

// J_ij = j0 / |i-j|^p on an open chain. p = 0 gives the uniform
// all-to-all limit.
inline InteractionMatrix power_law_matrix(int n, double p, double j0 = 1.0) {
    require(n >= 2, "power_law_matrix needs n >= 2");
    require(std::isfinite(p) && p >= 0.0, "power_law_matrix needs p >= 0");
    InteractionMatrix out;
    out.j = Eigen::MatrixXd::Zero(n, n);
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) {
            const double v = j0 / std::pow(static_cast<double>(b - a), p);
            out.j(a, b) = v;
            out.j(b, a) = v;
        }
    return out;
}

// All-to-all couplings of equal strength (the p -> 0 limit).
inline InteractionMatrix uniform_matrix(int n, double j0 = 1.0) {
    return power_law_matrix(n, 0.0, j0);
}

// Equilibrium positions of n ions in a harmonic axial trap with Coulomb
// repulsion, in units of the characteristic length: minimises
//   E(u) = sum_i u_i^2 / 2 + sum_{i<j} 1 / |u_i - u_j|.
// Damped Newton iteration; a step is accepted if it reduces the gradient
// sup-norm. Returns positions sorted ascending; final |grad|_inf goes to
// residual_out when given (well below 1e-10 in practice).
inline Eigen::VectorXd equilibrium_positions(int n, double* residual_out = nullptr) {
    require(n >= 2, "equilibrium_positions needs n >= 2");
    Eigen::VectorXd u(n);
    const double span = 0.6 * std::pow(static_cast<double>(n), 0.62);
    for (int i = 0; i < n; ++i)
        u[i] = span * (-1.0 + 2.0 * i / (n - 1.0));

    auto gradient = [n](const Eigen::VectorXd& x) {
        Eigen::VectorXd g = x;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                if (a == b) continue;
                const double d = x[a] - x[b];
                g[a] -= (d > 0 ? 1.0 : -1.0) / (d * d);
            }
        return g;
    };

    Eigen::VectorXd g = gradient(u);
    double gnorm = g.lpNorm<Eigen::Infinity>();
    for (int iter = 0; iter < 200 && gnorm > 1e-13; ++iter) {
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
        for (int a = 0; a < n; ++a) {
            double diag = 1.0;
            for (int b = 0; b < n; ++b) {
                if (a == b) continue;
                const double d3 = std::pow(std::abs(u[a] - u[b]), 3.0);
                diag += 2.0 / d3;
                h(a, b) = -2.0 / d3;
            }
            h(a, a) = diag;
        }
        const Eigen::VectorXd step = h.ldlt().solve(g);
        double lambda = 1.0;
        bool accepted = false;
        for (int halvings = 0; halvings < 40; ++halvings) {
            const Eigen::VectorXd trial = u - lambda * step;
            const Eigen::VectorXd gt = gradient(trial);
            const double gtn = gt.lpNorm<Eigen::Infinity>();
            if (gtn < gnorm) {
                u = trial;
                g = gt;
                gnorm = gtn;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!accepted) break;
    }
    require_numeric(gnorm < 1e-10, "equilibrium_positions did not converge");
    std::sort(u.data(), u.data() + n);
    if (residual_out) *residual_out = gnorm;
    return u;
}

struct TransverseModes {
    Eigen::VectorXd lambda;   // stiffness eigenvalues, ascending; top one is anisotropy^2
    Eigen::MatrixXd vectors;  // orthonormal columns matching lambda
};

// Transverse normal modes about the equilibrium configuration u.
// anisotropy = nu_com / nu_axial; mode frequencies are nu_axial*sqrt(lambda).
// The centre-of-mass vector (1,..,1)/sqrt(n) is exact with lambda =
// anisotropy^2 and sits at the top of the transverse branch.
inline TransverseModes transverse_modes(const Eigen::VectorXd& u, double anisotropy) {
    const int n = static_cast<int>(u.size());
    require(n >= 2, "transverse_modes needs n >= 2");
    require(anisotropy > 1.0, "transverse confinement must exceed axial (anisotropy > 1)");
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
    for (int a = 0; a < n; ++a) {
        double diag = anisotropy * anisotropy;
        for (int b = 0; b < n; ++b) {
            if (a == b) continue;
            const double inv_d3 = 1.0 / std::pow(std::abs(u[a] - u[b]), 3.0);
            diag -= inv_d3;
            k(a, b) = inv_d3;
        }
        k(a, a) = diag;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
    require_numeric(es.info() == Eigen::Success, "transverse mode diagonalisation failed");
    require_numeric(es.eigenvalues()[0] > 0.0,
                    "transverse branch unstable: axial confinement too weak for this n");
    return {es.eigenvalues(), es.eigenvectors()};
}

// Trap and drive parameters, plain frequencies in Hz. Internally everything
// is converted to angular frequencies.
struct TrapParams {
    int n = 10;
    double nu_com_hz = 4.64e6;    // highest transverse mode
    double nu_axial_hz = 0.53e6;  // axial confinement
    double detuning_hz = 56e3;    // beatnote offset above the com mode
    double recoil_hz = 18.5e3;    // photon recoil
    double rabi_hz = 0.5e6;       // carrier Rabi frequency

    void validate() const {
        require(n >= 2, "trap: n >= 2");
        require(nu_com_hz > 0 && nu_axial_hz > 0 && recoil_hz > 0 && rabi_hz > 0,
                "trap: frequencies must be positive");
        require(nu_com_hz > nu_axial_hz, "trap: transverse confinement must exceed axial");
        require(detuning_hz > 0, "trap: beatnote must sit above the com mode");
    }
};

// Effective Ising couplings of a slightly detuned spin-dependent drive:
//   J_ij = Omega^2 * omega_R * sum_m b_im b_jm / (mu^2 - omega_m^2)
// in angular units, with mu placed detuning_hz above the com mode. All
// denominators stay positive because the com mode tops the branch.
inline InteractionMatrix ion_chain_couplings(const TrapParams& tp) {
    tp.validate();
    const Eigen::VectorXd u = equilibrium_positions(tp.n);
    const TransverseModes modes = transverse_modes(u, tp.nu_com_hz / tp.nu_axial_hz);
    constexpr double two_pi = 2.0 * M_PI;
    const double mu = two_pi * (tp.nu_com_hz + tp.detuning_hz);
    const double omega_r = two_pi * tp.recoil_hz;
    const double rabi = two_pi * tp.rabi_hz;
    Eigen::VectorXd omega_m = two_pi * tp.nu_axial_hz * modes.lambda.array().sqrt();
    InteractionMatrix out;
    out.j = Eigen::MatrixXd::Zero(tp.n, tp.n);
    for (int a = 0; a < tp.n; ++a)
        for (int b = a + 1; b < tp.n; ++b) {
            double s = 0.0;
            for (int m = 0; m < tp.n; ++m)
                s += modes.vectors(a, m) * modes.vectors(b, m) / (mu * mu - omega_m[m] * omega_m[m]);
            const double v = rabi * rabi * omega_r * s;
            out.j(a, b) = v;
            out.j(b, a) = v;
        }
    return out;
}

// Mean coupling at each separation r = 1 .. n-1, averaged over the
// (n - r) pairs at that separation.
inline std::vector<double> coupling_profile(const InteractionMatrix& jm) {
    jm.validate();
    const int n = jm.n();
    std::vector<double> profile(static_cast<std::size_t>(n - 1), 0.0);
    for (int r = 1; r < n; ++r) {
        double s = 0.0;
        for (int a = 0; a + r < n; ++a) s += jm.j(a, a + r);
        profile[static_cast<std::size_t>(r - 1)] = s / (n - r);
    }
    return profile;
}

struct PowerLawFit {
    double exponent = 0.0;
    double residual = 0.0;  // sum of squared log-residuals
};

// Fit J(r)/J(1) = r^{-p} in log space. The model is exact at r = 1, so the
// fit is a through-origin regression of ln(J(r)/J(1)) on -ln r.
inline PowerLawFit fit_power_law(const std::vector<double>& profile) {
    require(profile.size() >= 2, "power-law fit needs separations r = 1, 2 at least");
    for (double v : profile)
        require(v > 0.0, "power-law fit requires strictly positive couplings");
    double sxx = 0.0, sxy = 0.0;
    std::vector<double> xs, ys;
    for (std::size_t r = 2; r <= profile.size(); ++r) {
        const double x = -std::log(static_cast<double>(r));
        const double y = std::log(profile[r - 1] / profile[0]);
        xs.push_back(x);
        ys.push_back(y);
        sxx += x * x;
        sxy += x * y;
    }
    PowerLawFit fit;
    fit.exponent = sxy / sxx;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double d = ys[i] - fit.exponent * xs[i];
        fit.residual += d * d;
    }
    return fit;
}

struct HybridFit {
    double exponent = 0.0;
    double decay = 0.0;     // exponential rate per site
    double residual = 0.0;  // sum of squared log-residuals
};

// Fit J(r)/J(1) = r^{-p} exp(-k (r-1)), linear least squares in log space.
// Nests the pure power law (k = 0), so its residual never exceeds the
// power-law residual.
inline HybridFit fit_hybrid(const std::vector<double>& profile) {
    require(profile.size() >= 3, "hybrid fit needs separations r = 1..3 at least");
    for (double v : profile)
        require(v > 0.0, "hybrid fit requires strictly positive couplings");
    double a11 = 0, a12 = 0, a22 = 0, b1 = 0, b2 = 0;
    std::vector<double> c1s, c2s, ys;
    for (std::size_t r = 2; r <= profile.size(); ++r) {
        const double c1 = -std::log(static_cast<double>(r));
        const double c2 = -(static_cast<double>(r) - 1.0);
        const double y = std::log(profile[r - 1] / profile[0]);
        c1s.push_back(c1);
        c2s.push_back(c2);
        ys.push_back(y);
        a11 += c1 * c1;
        a12 += c1 * c2;
        a22 += c2 * c2;
        b1 += c1 * y;
        b2 += c2 * y;
    }
    const double det = a11 * a22 - a12 * a12;
    require_numeric(std::abs(det) > 1e-14 * a11 * a22, "hybrid fit design matrix is singular");
    HybridFit fit;
    fit.exponent = (a22 * b1 - a12 * b2) / det;
    fit.decay = (a11 * b2 - a12 * b1) / det;
    for (std::size_t i = 0; i < ys.size(); ++i) {
        const double d = ys[i] - fit.exponent * c1s[i] - fit.decay * c2s[i];
        fit.residual += d * d;
    }
    return fit;
}

}  // namespace qcrit
