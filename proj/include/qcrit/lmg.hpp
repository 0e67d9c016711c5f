#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include "qcrit/common.hpp"
#include "qcrit/linalg.hpp"
#include "qcrit/specfun.hpp"
#include "qcrit/types.hpp"

namespace qcrit {

// Infinite-range model in collective-spin form:
//   H = -(2/N)(gamma_x Sx^2 + gamma_y Sy^2) + 2 B Sz
// acting on the maximal-spin ladder S = N/2. The field B is measured in
// units of the Kac-normalized coupling, so B = 1 is the mean-field critical
// point.
struct LMGParams {
    int n = 2;
    double gamma_x = 1.0;
    double gamma_y = 0.0;
    double b = 1.0;

    void validate() const {
        require(n >= 1, "lmg: n >= 1");
        require(gamma_x >= 0.0 && gamma_x <= 1.0 && gamma_y >= 0.0 && gamma_y <= 1.0,
                "lmg: anisotropies must lie in [0,1]");
        require(std::isfinite(b), "lmg: field must be finite");
    }
};

namespace dicke {

// Ladder factors for S = n/2, M = a - S with a the number of raised spins:
// sp(M) = sqrt(S(S+1) - M(M+1)) raises, sm(M) lowers.
inline double sp_factor(int n, int a) {
    const double s = 0.5 * n;
    const double m = a - s;
    return std::sqrt(std::max(0.0, s * (s + 1.0) - m * (m + 1.0)));
}

inline double sm_factor(int n, int a) {
    const double s = 0.5 * n;
    const double m = a - s;
    return std::sqrt(std::max(0.0, s * (s + 1.0) - m * (m - 1.0)));
}

// Operators even in spin flips couple only |M| -> |M +- 2|, so the ladder
// splits into two parity chains, each tridiagonal in the chain index.
// parity 0 holds a = 0, 2, 4, ...; parity 1 holds a = 1, 3, 5, ...
inline int block_size(int n, int parity) { return (n - parity) / 2 + 1; }

// Tridiagonal representation of cx*Sx^2 + cy*Sy^2 + cz*Sz within one parity
// chain. Sx^2 and Sy^2 share the diagonal (S+S- + S-S+)/4 and differ by the
// sign of the (S+)^2 off-diagonal.
struct TriOp {
    Eigen::VectorXd diag;
    Eigen::VectorXd off;
};

inline TriOp block_operator(int n, int parity, double cx, double cy, double cz) {
    const int m = block_size(n, parity);
    TriOp op;
    op.diag.resize(m);
    op.off.resize(std::max(0, m - 1));
    const double s = 0.5 * n;
    for (int i = 0; i < m; ++i) {
        const int a = parity + 2 * i;
        const double sp = sp_factor(n, a);
        const double sm = sm_factor(n, a);
        op.diag[i] = 0.25 * (cx + cy) * (sm * sm + sp * sp) + cz * (a - s);
        if (i + 1 < m) op.off[i] = 0.25 * (cx - cy) * sp * sp_factor(n, a + 1);
    }
    return op;
}

inline TriOp hamiltonian_block(const LMGParams& p, int parity) {
    return block_operator(p.n, parity, -2.0 * p.gamma_x / p.n, -2.0 * p.gamma_y / p.n,
                          2.0 * p.b);
}

inline Eigen::VectorXcd apply(const TriOp& op, const Eigen::VectorXcd& v) {
    const int m = static_cast<int>(v.size());
    Eigen::VectorXcd out(m);
    for (int i = 0; i < m; ++i) {
        std::complex<double> acc = op.diag[i] * v[i];
        if (i > 0) acc += op.off[i - 1] * v[i - 1];
        if (i + 1 < m) acc += op.off[i] * v[i + 1];
        out[i] = acc;
    }
    return out;
}

inline double expectation(const TriOp& op, const Eigen::VectorXcd& v) {
    return apply(op, v).dot(v).real();
}

// Spectral propagator for one parity chain: diagonalize once, then evaluate
// the series at all requested times with two real matrix products per time
// chunk. Exactly unitary up to roundoff.
class BlockEvolver {
public:
    BlockEvolver(const LMGParams& p, int parity)
        : params_(p), parity_(parity), h_(hamiltonian_block(p, parity)) {
        eig_ = tridiag_eigh(h_.diag, h_.off);
    }

    const TriOp& hamiltonian() const { return h_; }
    const TridiagEigen& eigen() const { return eig_; }

    Eigen::VectorXcd evolve(const Eigen::VectorXcd& psi, double t) const {
        const Eigen::VectorXcd c = eig_.v.transpose() * psi;
        const int m = static_cast<int>(c.size());
        Eigen::VectorXcd phased(m);
        for (int i = 0; i < m; ++i)
            phased[i] = std::polar(1.0, -eig_.w[i] * t) * c[i];
        return eig_.v * phased;
    }

    // Expectation of each op at each time, from a fixed initial vector.
    // Chunked over times to bound the workspace.
    std::vector<std::vector<double>> series(const Eigen::VectorXcd& psi0,
                                            const std::vector<double>& times,
                                            const std::vector<const TriOp*>& ops) const {
        const int m = static_cast<int>(psi0.size());
        require(m == eig_.w.size(), "block evolver: state size mismatch");
        const Eigen::VectorXd c_re = eig_.v.transpose() * psi0.real();
        const Eigen::VectorXd c_im = eig_.v.transpose() * psi0.imag();
        const int total = static_cast<int>(times.size());
        std::vector<std::vector<double>> out(ops.size(),
                                             std::vector<double>(static_cast<std::size_t>(total)));
        const int chunk = std::max(1, std::min(total, 512));
        Eigen::MatrixXd pr(m, chunk), pi(m, chunk);
        for (int start = 0; start < total; start += chunk) {
            const int cols = std::min(chunk, total - start);
            for (int j = 0; j < cols; ++j) {
                const double t = times[static_cast<std::size_t>(start + j)];
                for (int i = 0; i < m; ++i) {
                    const double ph = -eig_.w[i] * t;
                    const double cp = std::cos(ph), sp = std::sin(ph);
                    pr(i, j) = cp * c_re[i] - sp * c_im[i];
                    pi(i, j) = sp * c_re[i] + cp * c_im[i];
                }
            }
            const Eigen::MatrixXd re = eig_.v * pr.leftCols(cols);
            const Eigen::MatrixXd im = eig_.v * pi.leftCols(cols);
            for (int j = 0; j < cols; ++j) {
                Eigen::VectorXcd col(m);
                col.real() = re.col(j);
                col.imag() = im.col(j);
                for (std::size_t k = 0; k < ops.size(); ++k)
                    out[k][static_cast<std::size_t>(start + j)] = expectation(*ops[k], col);
            }
        }
        return out;
    }

private:
    LMGParams params_;
    int parity_;
    TriOp h_;
    TridiagEigen eig_;
};

}  // namespace dicke

// Dense (N+1)x(N+1) ladder-basis matrix, mainly for small-N checks.
inline Eigen::MatrixXd lmg_hamiltonian(const LMGParams& p) {
    p.validate();
    const int dim = p.n + 1;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
    for (int parity = 0; parity < 2 && parity <= p.n; ++parity) {
        const dicke::TriOp op = dicke::hamiltonian_block(p, parity);
        const int m = dicke::block_size(p.n, parity);
        for (int i = 0; i < m; ++i) {
            const int a = parity + 2 * i;
            h(a, a) = op.diag[i];
            if (i + 1 < m) {
                h(a, a + 2) = op.off[i];
                h(a + 2, a) = op.off[i];
            }
        }
    }
    return h;
}

namespace detail {

struct DickeGround {
    int parity = 0;
    double energy = 0.0;
    Eigen::VectorXd vec;  // within its parity chain
};

inline DickeGround dicke_ground_state(const LMGParams& p) {
    DickeGround best;
    bool first = true;
    for (int parity = 0; parity < 2 && parity <= p.n; ++parity) {
        const dicke::TriOp h = dicke::hamiltonian_block(p, parity);
        auto [e, v] = tridiag_ground(h.diag, h.off);
        if (first || e < best.energy) {
            best = {parity, e, v};
            first = false;
        }
    }
    return best;
}

inline dicke::TriOp observable_block(const LMGParams& p, int parity, ObservableKind kind) {
    switch (kind) {
        case ObservableKind::Cx2:
            return dicke::block_operator(p.n, parity, 1.0, 0.0, 0.0);
        case ObservableKind::Cy2:
            return dicke::block_operator(p.n, parity, 0.0, 1.0, 0.0);
        case ObservableKind::energy:
            return dicke::hamiltonian_block(p, parity);
        case ObservableKind::Sx:
            throw contract_error("Sx vanishes identically within a parity chain; request Cx2");
    }
    throw contract_error("unsupported observable");
}

}  // namespace detail

// Ground-state transverse fluctuation <Sx^2>/N (the ground state carries
// <Sx> = 0 by parity).
inline double ground_state_fluct(const LMGParams& p) {
    p.validate();
    const detail::DickeGround g = detail::dicke_ground_state(p);
    const dicke::TriOp sx2 = detail::observable_block(p, g.parity, ObservableKind::Cx2);
    Eigen::VectorXcd v = g.vec.cast<std::complex<double>>();
    return dicke::expectation(sx2, v) / p.n;
}

// Evolve the ground state of params0 under params1 and report the chosen
// collective observable on the given time grid.
inline ObservableSeries quench_series(const LMGParams& params0, const LMGParams& params1,
                                      const std::vector<double>& times,
                                      ObservableKind kind = ObservableKind::Cx2) {
    params0.validate();
    params1.validate();
    require(params0.n == params1.n, "quench: sizes must match");
    require(params1.n <= (1 << 14), "quench: n exceeds the Dicke-basis budget (2^14)");
    require(!times.empty(), "quench: empty time grid");
    const detail::DickeGround g = detail::dicke_ground_state(params0);
    const dicke::BlockEvolver evo(params1, g.parity);
    const dicke::TriOp obs = detail::observable_block(params1, g.parity, kind);
    const Eigen::VectorXcd psi0 = g.vec.cast<std::complex<double>>();
    const auto series = evo.series(psi0, times, {&obs});
    ObservableSeries out;
    out.times = times;
    out.values = series[0];
    out.n = params1.n;
    out.kac = 1.0;  // couplings are already Kac-normalized in this form
    out.label = observable_label(kind);
    return out;
}

struct SwitchRule {
    enum class Mode { at_peak, scaled } mode = Mode::at_peak;
    double scaled_constant = 0.787;  // t_switch = c * n^{1/4} in scaled mode
    double dt = 0.05;                // segment-1 scan grid for peak detection
    double tmax_factor = 6.0;        // segment-1 scan extends to factor * n^{1/4}
};

struct DoubleQuenchResult {
    ObservableSeries segment1;  // <Sx^2> up to the switch
    ObservableSeries segment2;  // <Sy^2> against t2 since the switch
    double t_switch = 0.0;
};

// Two sequential quenches: ground state of params0, evolve under params1
// until the switch time, then continue under params2 measuring the rotated
// correlator. The state carries through the switch without re-preparation.
inline DoubleQuenchResult double_quench_series(const LMGParams& params0,
                                               const LMGParams& params1,
                                               const LMGParams& params2,
                                               const SwitchRule& rule,
                                               const std::vector<double>& times2) {
    params0.validate();
    params1.validate();
    params2.validate();
    require(params0.n == params1.n && params1.n == params2.n, "quench: sizes must match");
    require(!times2.empty(), "quench: empty segment-2 time grid");

    const detail::DickeGround g = detail::dicke_ground_state(params0);
    const dicke::BlockEvolver evo1(params1, g.parity);
    const dicke::TriOp sx2 = detail::observable_block(params1, g.parity, ObservableKind::Cx2);
    const Eigen::VectorXcd psi0 = g.vec.cast<std::complex<double>>();

    DoubleQuenchResult out;
    const double nq = std::pow(static_cast<double>(params1.n), 0.25);
    if (rule.mode == SwitchRule::Mode::scaled) {
        out.t_switch = rule.scaled_constant * nq;
        const int steps = std::max(2, static_cast<int>(std::floor(out.t_switch / rule.dt)) + 1);
        std::vector<double> grid(static_cast<std::size_t>(steps));
        for (int i = 0; i < steps; ++i)
            grid[static_cast<std::size_t>(i)] = out.t_switch * i / (steps - 1.0);
        out.segment1.times = grid;
        out.segment1.values = evo1.series(psi0, grid, {&sx2})[0];
    } else {
        const double tmax = rule.tmax_factor * nq;
        const int steps = std::max(3, static_cast<int>(std::round(tmax / rule.dt)) + 1);
        std::vector<double> grid(static_cast<std::size_t>(steps));
        for (int i = 0; i < steps; ++i)
            grid[static_cast<std::size_t>(i)] = rule.dt * i;
        out.segment1.times = grid;
        out.segment1.values = evo1.series(psi0, grid, {&sx2})[0];
        out.segment1.n = params1.n;
        out.segment1.label = observable_label(ObservableKind::Cx2);
        const PeakInfo peak = find_peak(out.segment1);
        require_numeric(peak.is_local_max, "double quench: no interior segment-1 peak found");
        out.t_switch = peak.time;
    }
    out.segment1.n = params1.n;
    out.segment1.kac = 1.0;
    out.segment1.label = observable_label(ObservableKind::Cx2);

    const Eigen::VectorXcd psi_switch = evo1.evolve(psi0, out.t_switch);
    const dicke::BlockEvolver evo2(params2, g.parity);
    const dicke::TriOp sy2 = detail::observable_block(params2, g.parity, ObservableKind::Cy2);
    out.segment2.times = times2;
    out.segment2.values = evo2.series(psi_switch, times2, {&sy2})[0];
    out.segment2.n = params2.n;
    out.segment2.kac = 1.0;
    out.segment2.label = observable_label(ObservableKind::Cy2);
    return out;
}

// Quadratic-expansion parameters about the polarized state:
// 1/m = 2(B - gamma_y), Omega^2 = 4(B - gamma_x)(B - gamma_y), quartic 2*gamma_x.
struct OscillatorParams {
    double mass_inv = 0.0;
    double omega_sq = 0.0;
    double u = 0.0;

    double mass() const {
        require_numeric(mass_inv > 0.0, "oscillator: nonpositive mass");
        return 1.0 / mass_inv;
    }
    double omega() const {
        require_numeric(omega_sq >= 0.0, "oscillator: complex frequency");
        return std::sqrt(omega_sq);
    }
};

inline OscillatorParams oscillator_from(const LMGParams& p) {
    p.validate();
    OscillatorParams o;
    o.mass_inv = 2.0 * (p.b - p.gamma_y);
    o.omega_sq = 4.0 * (p.b - p.gamma_x) * (p.b - p.gamma_y);
    o.u = 2.0 * p.gamma_x;
    return o;
}

// Long-time average of the quadratic-theory fluctuation after a quench,
// in the <x^2> = 2 <Sx^2>/N normalization:
//   <x^2>_avg = 1/(4 m0 Omega0) + m0 Omega0 / (4 m^2 Omega^2).
inline double gaussian_quench_fluct(const OscillatorParams& pre, const OscillatorParams& post) {
    require(pre.omega_sq > 0.0 && post.omega_sq > 0.0,
            "gaussian_quench_fluct: both frequencies must be positive (vanishing "
            "frequency means divergent fluctuations)");
    const double m0w0 = pre.mass() * pre.omega();
    const double mw = post.mass() * post.omega();
    return 0.25 / m0w0 + 0.25 * m0w0 / (mw * mw);
}

// Effective temperature of the post-quench steady state, T = m0 Omega0 / (4 m).
inline double effective_temperature(const OscillatorParams& pre, const OscillatorParams& post) {
    require(pre.omega_sq > 0.0, "effective_temperature: pre-quench frequency must be positive");
    return pre.mass() * pre.omega() / (4.0 * post.mass());
}

// Second-quench analogue T2 = m0 Omega0 / (8 m2 m1^2 Omega1^2); diverges as
// the intermediate frequency softens.
inline double effective_temperature_double(const OscillatorParams& p0,
                                           const OscillatorParams& p1,
                                           const OscillatorParams& p2) {
    require(p0.omega_sq > 0.0, "effective_temperature_double: initial frequency must be positive");
    require_numeric(p1.omega_sq > 0.0, "effective_temperature_double: intermediate frequency vanished");
    const double m1 = p1.mass(), m2 = p2.mass();
    return p0.mass() * p0.omega() / (8.0 * m2 * m1 * m1 * p1.omega_sq);
}

// Exponents after the k-th quench in the iterated-quench hierarchy:
// alpha_k = 1 - 2^{-k}, zeta_k = 2^{-(k+1)}, from the recursion
// alpha_{k+1} = (1 + alpha_k)/2, zeta_{k+1} = (1 - alpha_k)/4, alpha_0 = 0.
inline std::pair<double, double> exponent_hierarchy(int k) {
    require(k >= 0, "exponent_hierarchy: k >= 0");
    const double alpha = 1.0 - std::ldexp(1.0, -k);
    const double zeta = std::ldexp(1.0, -(k + 1));
    return {alpha, zeta};
}

// Semiclassical single-trajectory parameters for xddot + r x + u x^3 = 0,
// x(0) = 0, xdot(0) = v, with v drawn from exp(-d v^2).
struct SemiclassicalParams {
    double r = 1.0;
    double u = 1.0;
    double d = 1.0;
    double amplitude = 1.0;

    void validate() const {
        require(std::isfinite(r), "semiclassical: r must be finite");
        require(u > 0.0, "semiclassical: u > 0");
        require(d > 0.0, "semiclassical: d > 0");
    }
};

// Exact quartic-oscillator trajectory through Jacobi sn:
//   s = sqrt(r^2 + 2 u v^2), omega = sqrt((r+s)/2), m = (r-s)/(r+s) <= 0,
//   x_v(t) = (v/omega) sn(omega t, m).
// The v/omega amplitude makes xdot(0) = v hold exactly (sn'(0) = 1); the
// ODE residual check in the tests pins this normalization.
inline double twa_trajectory(const SemiclassicalParams& sc, double v, double t) {
    sc.validate();
    if (v == 0.0) return 0.0;
    const double s = std::sqrt(sc.r * sc.r + 2.0 * sc.u * v * v);
    const double omega = std::sqrt(0.5 * (sc.r + s));
    require_numeric(omega > 0.0, "twa_trajectory: degenerate frequency");
    const double m = (sc.r - s) / (sc.r + s);
    return v / omega * jacobi_sn(omega * t, m);
}

// Closed-form time average of x^2 along one trajectory,
// (s - r)/(2u) = v^2/(r + s): half the squared amplitude. Exact in the
// harmonic limit; at strong anharmonicity it sits a few percent below the
// true sn^2 average (the exact mean of sn^2 exceeds 1/2 for m < 0).
inline double twa_time_avg(const SemiclassicalParams& sc, double v) {
    sc.validate();
    const double s = std::sqrt(sc.r * sc.r + 2.0 * sc.u * v * v);
    return (s - sc.r) / (2.0 * sc.u);
}

// Gaussian-ensemble average of twa_time_avg with v ~ exp(-d v^2):
//   <x^2> = -r/(2u) + U(-1/2, 0, d r^2/(2u)) / sqrt(2 d u).
inline double twa_ensemble_closed_form(const SemiclassicalParams& sc) {
    sc.validate();
    const double z = sc.d * sc.r * sc.r / (2.0 * sc.u);
    return -sc.r / (2.0 * sc.u) + tricomi_u(-0.5, 0.0, z) / std::sqrt(2.0 * sc.d * sc.u);
}

struct MonteCarloResult {
    double mean = 0.0;
    double stderr_ = 0.0;
    long samples = 0;
};

// Monte-Carlo version of the ensemble average; v is drawn by inverse-CDF
// Gaussian sampling with variance 1/(2d). Deterministic under seed.
inline MonteCarloResult twa_ensemble_mc(const SemiclassicalParams& sc, long samples,
                                        std::uint64_t seed) {
    sc.validate();
    require(samples >= 2, "twa_ensemble_mc: need >= 2 samples");
    SplitRng rng(seed);
    const double sigma = 1.0 / std::sqrt(2.0 * sc.d);
    double m1 = 0.0, m2 = 0.0;
    for (long i = 0; i < samples; ++i) {
        const double v = sigma * normal_draw(rng);
        const double val = twa_time_avg(sc, v);
        m1 += val;
        m2 += val * val;
    }
    const double n = static_cast<double>(samples);
    m1 /= n;
    m2 /= n;
    MonteCarloResult out;
    out.mean = m1;
    out.stderr_ = std::sqrt(std::max(0.0, m2 - m1 * m1) / (n - 1.0));
    out.samples = samples;
    return out;
}

// Finite-size order-parameter model across the dynamical transition:
//   m2(B) = A (B/Bc) [ (1 - B/Bc) + U(-1/2, 0, d n (1-B/Bc)^2) / sqrt(d n) ].
// At B = Bc the value is A / sqrt(pi d n); far below Bc it approaches the
// mean-field parabola A (B/Bc)(1 - B/Bc).
inline double order_parameter(double b, double b_c, double d, double n, double amplitude) {
    require(n >= 1.0, "order_parameter: n >= 1");
    require(d > 0.0 && b_c > 0.0, "order_parameter: d > 0 and b_c > 0");
    const double x = b / b_c;
    const double eps = 1.0 - x;
    const double z = d * n * eps * eps;
    return amplitude * x * (eps + tricomi_u(-0.5, 0.0, z) / std::sqrt(d * n));
}

struct OrderParameterFit {
    double b_c = 0.0;
    double d = 0.0;
    double amplitude = 0.0;
    Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
    double ssr = 0.0;
    int iterations = 0;
};

// Levenberg-Marquardt fit of (b_c, d, amplitude) to (B, m2) samples at fixed
// n, with parameter covariance from the Jacobian at the optimum.
inline OrderParameterFit fit_order_parameter(const std::vector<double>& bs,
                                             const std::vector<double>& m2s, double n) {
    require(bs.size() == m2s.size(), "fit_order_parameter: size mismatch");
    require(bs.size() >= 5, "fit_order_parameter: need >= 5 samples");
    require(n >= 1.0, "fit_order_parameter: n >= 1");
    double b_peak = bs[0], y_peak = m2s[0];
    for (std::size_t i = 0; i < bs.size(); ++i) {
        require(bs[i] > 0.0, "fit_order_parameter: fields must be positive");
        if (m2s[i] > y_peak) {
            y_peak = m2s[i];
            b_peak = bs[i];
        }
    }
    require(y_peak > 0.0, "fit_order_parameter: data must have a positive peak");
    require(bs.back() > b_peak && bs.front() < b_peak,
            "fit_order_parameter: samples must span both sides of the peak");

    Eigen::Vector3d theta(1.9 * b_peak, 0.3, 4.0 * y_peak);  // peak of x(1-x) is at Bc/2
    const auto residuals = [&](const Eigen::Vector3d& th, Eigen::VectorXd& r) {
        for (std::size_t i = 0; i < bs.size(); ++i)
            r[static_cast<Eigen::Index>(i)] =
                order_parameter(bs[i], th[0], th[1], n, th[2]) - m2s[i];
    };
    const Eigen::Index m = static_cast<Eigen::Index>(bs.size());
    const auto jacobian = [&](const Eigen::Vector3d& th, Eigen::MatrixXd& jac) {
        Eigen::VectorXd rp(m), rm(m);
        for (int k = 0; k < 3; ++k) {
            const double h = 1e-6 * std::max(1.0, std::abs(th[k]));
            Eigen::Vector3d tp = th, tm = th;
            tp[k] += h;
            tm[k] = std::max(tm[k] - h, 1e-9);  // keep b_c, d positive
            residuals(tp, rp);
            residuals(tm, rm);
            jac.col(k) = (rp - rm) / (tp[k] - tm[k]);
        }
    };

    Eigen::VectorXd r(m), r_trial(m);
    residuals(theta, r);
    double ssr = r.squaredNorm();
    double lambda = 1e-3;
    Eigen::MatrixXd jac(m, 3);
    int iter = 0;
    bool converged = false;
    for (; iter < 200 && !converged; ++iter) {
        jacobian(theta, jac);
        const Eigen::Matrix3d jtj = jac.transpose() * jac;
        const Eigen::Vector3d jtr = jac.transpose() * r;
        bool stepped = false;
        for (int tries = 0; tries < 25; ++tries) {
            Eigen::Matrix3d a = jtj;
            a.diagonal() += lambda * jtj.diagonal();
            const Eigen::Vector3d step = a.ldlt().solve(-jtr);
            Eigen::Vector3d trial = theta + step;
            if (trial[0] <= 0.0 || trial[1] <= 1e-9) {
                lambda *= 10.0;
                continue;
            }
            residuals(trial, r_trial);
            const double ssr_trial = r_trial.squaredNorm();
            if (ssr_trial < ssr) {
                const double drop = ssr - ssr_trial;
                theta = trial;
                r = r_trial;
                ssr = ssr_trial;
                lambda = std::max(lambda * 0.3, 1e-12);
                stepped = true;
                if (drop < 1e-12 * (1.0 + ssr) && step.norm() < 1e-8 * (1.0 + theta.norm()))
                    converged = true;
                break;
            }
            lambda *= 10.0;
        }
        // No improving step even at huge damping: the gradient has vanished
        // to machine precision, which is convergence.
        if (!stepped) converged = true;
    }
    require_numeric(converged, "fit_order_parameter: iteration budget exhausted; last ssr = " +
                                   std::to_string(ssr));

    OrderParameterFit out;
    out.b_c = theta[0];
    out.d = theta[1];
    out.amplitude = theta[2];
    out.ssr = ssr;
    out.iterations = iter;
    jacobian(theta, jac);
    const double dof = static_cast<double>(m) - 3.0;
    const Eigen::Matrix3d jtj = jac.transpose() * jac;
    out.covariance = (dof > 0.0 ? ssr / dof : 0.0) * jtj.inverse();
    return out;
}

// Mean-field steady-state magnetization of the critical quench protocol:
// sqrt(B(1-B)) below the transition, zero above.
inline double mean_field_magnetization(double b) {
    require(b >= 0.0, "mean_field_magnetization: b >= 0");
    if (b >= 1.0) return 0.0;
    return std::sqrt(b * (1.0 - b));
}

}  // namespace qcrit
