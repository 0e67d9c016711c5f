#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "qcrit/common.hpp"
#include "qcrit/interaction.hpp"
#include "qcrit/linalg.hpp"
#include "qcrit/lmg.hpp"
#include "qcrit/stats.hpp"
#include "qcrit/types.hpp"

namespace qcrit {

// Quench Hamiltonian
//   H = -sum_{i<j} Jeff_ij (gamma_x sx_i sx_j + gamma_y sy_i sy_j) + bz sum_i sz_i
// with Jeff = J (bare) or J / Jbar (Kac-normalized, Jbar = sum_{i!=j} J_ij / (n-1)).
// Ferromagnetic sign convention throughout.
struct HamiltonianSpec {
    InteractionMatrix j;
    double gamma_x = 1.0;
    double gamma_y = 0.0;
    double bz = 0.0;
    bool kac_normalized = false;
    int full_basis_cap = 16;

    int n() const { return j.n(); }

    void validate() const {
        j.validate();
        require(gamma_x >= 0.0 && gamma_x <= 1.0 && gamma_y >= 0.0 && gamma_y <= 1.0,
                "hamiltonian: anisotropies must lie in [0,1]");
        require(std::isfinite(bz), "hamiltonian: field must be finite");
        require(full_basis_cap >= 1, "hamiltonian: full_basis_cap >= 1");
    }

    bool permutation_symmetric() const { return j.is_uniform(); }
};

enum class Basis { full, dicke };

// Pure state, either over all 2^n spin configurations (bit i set means spin i
// points up along z) or over the maximal-spin ladder (index a counts raised
// spins; valid only for permutation-symmetric Hamiltonians).
struct SpinState {
    Basis basis = Basis::full;
    int n = 1;
    Eigen::VectorXcd amp;

    void validate() const {
        require(n >= 1, "state: n >= 1");
        const Eigen::Index dim =
            basis == Basis::full ? (Eigen::Index{1} << n) : Eigen::Index{n + 1};
        require(amp.size() == dim, "state: amplitude dimension mismatch");
        require(std::abs(amp.norm() - 1.0) < 1e-10, "state: norm deviates from 1");
    }
};

inline SpinState all_down_state(int n, Basis basis = Basis::full) {
    require(n >= 1, "all_down_state: n >= 1");
    require(basis == Basis::dicke || n <= 24, "all_down_state: full basis too large");
    SpinState s;
    s.basis = basis;
    s.n = n;
    s.amp = Eigen::VectorXcd::Zero(basis == Basis::full ? (Eigen::Index{1} << n)
                                                        : Eigen::Index{n + 1});
    s.amp[0] = 1.0;  // all bits clear / ladder bottom, both mean all spins down
    return s;
}

// Matrix-free full-basis operator. Off-diagonal action per coupled pair:
// sx sx always flips both bits with +1; sy sy flips with -1 when the two bits
// agree and +1 when they differ, so the combined hop coefficient is
// -Jeff (gamma_x - gamma_y) on aligned pairs and -Jeff (gamma_x + gamma_y)
// on anti-aligned ones.
class FullBasisOp {
public:
    explicit FullBasisOp(const HamiltonianSpec& spec) : spec_(spec) {
        spec.validate();
        const int n = spec.n();
        require(n <= spec.full_basis_cap,
                "full basis: n exceeds cap; use the Dicke basis for uniform couplings");
        const double jbar = spec.kac_normalized ? spec.j.kac() : 1.0;
        for (int i = 0; i < n; ++i)
            for (int k = i + 1; k < n; ++k) {
                const double jeff = spec.j.j(i, k) / jbar;
                if (jeff != 0.0)
                    pairs_.push_back({(std::uint32_t{1} << i) | (std::uint32_t{1} << k),
                                      -jeff * (spec.gamma_x - spec.gamma_y),
                                      -jeff * (spec.gamma_x + spec.gamma_y)});
            }
        const std::size_t dim = std::size_t{1} << n;
        diag_.resize(dim);
        for (std::size_t s = 0; s < dim; ++s)
            diag_[s] = spec.bz * (2.0 * std::popcount(static_cast<std::uint64_t>(s)) - n);
    }

    Eigen::Index dim() const { return static_cast<Eigen::Index>(diag_.size()); }
    const HamiltonianSpec& spec() const { return spec_; }

    void apply(const Eigen::VectorXcd& psi, Eigen::VectorXcd& out) const {
        const std::size_t dim = diag_.size();
        out.resize(static_cast<Eigen::Index>(dim));
        for (std::size_t s = 0; s < dim; ++s) out[static_cast<Eigen::Index>(s)] = diag_[s] * psi[static_cast<Eigen::Index>(s)];
        for (const PairTerm& p : pairs_) {
            for (std::size_t s = 0; s < dim; ++s) {
                const std::uint32_t bits = static_cast<std::uint32_t>(s) & p.mask;
                const bool aligned = (bits == 0) || (bits == p.mask);
                const double c = aligned ? p.hop_aligned : p.hop_anti;
                out[static_cast<Eigen::Index>(s ^ p.mask)] += c * psi[static_cast<Eigen::Index>(s)];
            }
        }
    }

    Eigen::VectorXcd apply(const Eigen::VectorXcd& psi) const {
        Eigen::VectorXcd out;
        apply(psi, out);
        return out;
    }

    Eigen::MatrixXcd to_dense() const {
        const Eigen::Index d = dim();
        require(d <= 4096, "to_dense: dimension too large");
        Eigen::MatrixXcd h(d, d);
        Eigen::VectorXcd e = Eigen::VectorXcd::Zero(d), col;
        for (Eigen::Index c = 0; c < d; ++c) {
            e[c] = 1.0;
            apply(e, col);
            h.col(c) = col;
            e[c] = 0.0;
        }
        require_numeric((h - h.adjoint()).cwiseAbs().maxCoeff() < 1e-12,
                        "to_dense: operator failed the Hermiticity check");
        return h;
    }

private:
    struct PairTerm {
        std::uint32_t mask;
        double hop_aligned;  // both bits equal
        double hop_anti;
    };
    HamiltonianSpec spec_;
    std::vector<PairTerm> pairs_;
    std::vector<double> diag_;
};

inline FullBasisOp build_hamiltonian(const HamiltonianSpec& spec) { return FullBasisOp(spec); }

namespace detail {

// Ladder-basis reduction of a permutation-symmetric spec:
//   H = cx Sx^2 + cy Sy^2 + cz Sz + shift.
// The shift keeps ladder energies equal to full-basis energies.
struct LadderCoeffs {
    double cx = 0.0, cy = 0.0, cz = 0.0, shift = 0.0;
};

inline LadderCoeffs ladder_coeffs(const HamiltonianSpec& spec) {
    spec.validate();
    require(spec.permutation_symmetric(),
            "dicke basis requires uniform couplings (permutation symmetry)");
    const int n = spec.n();
    const double j_unif = n >= 2 ? spec.j.j(0, 1) : 0.0;
    const double jeff = spec.kac_normalized ? j_unif / spec.j.kac() : j_unif;
    LadderCoeffs c;
    c.cx = -2.0 * jeff * spec.gamma_x;
    c.cy = -2.0 * jeff * spec.gamma_y;
    c.cz = 2.0 * spec.bz;
    c.shift = 0.5 * jeff * n * (spec.gamma_x + spec.gamma_y);
    return c;
}

// Sx and Sy on the full ladder: Sx = (S+ + S-)/2, Sy = (S+ - S-)/(2i).
inline Eigen::VectorXcd apply_sx_ladder(int n, const Eigen::VectorXcd& psi) {
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(n + 1);
    for (int a = 0; a <= n; ++a) {
        if (a + 1 <= n) out[a + 1] += 0.5 * dicke::sp_factor(n, a) * psi[a];
        if (a - 1 >= 0) out[a - 1] += 0.5 * dicke::sm_factor(n, a) * psi[a];
    }
    return out;
}

inline Eigen::VectorXcd apply_sy_ladder(int n, const Eigen::VectorXcd& psi) {
    const std::complex<double> half_i(0.0, 0.5);
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(n + 1);
    for (int a = 0; a <= n; ++a) {
        if (a + 1 <= n) out[a + 1] += -half_i * dicke::sp_factor(n, a) * psi[a];
        if (a - 1 >= 0) out[a - 1] += half_i * dicke::sm_factor(n, a) * psi[a];
    }
    return out;
}

// Spectral propagator over the full ladder, built from the two parity-chain
// eigendecompositions of the reduced Hamiltonian.
class DickeSpecEvolver {
public:
    explicit DickeSpecEvolver(const HamiltonianSpec& spec)
        : n_(spec.n()), coeffs_(ladder_coeffs(spec)) {
        for (int parity = 0; parity < 2 && parity <= n_; ++parity) {
            dicke::TriOp h = dicke::block_operator(n_, parity, coeffs_.cx, coeffs_.cy, coeffs_.cz);
            h.diag.array() += coeffs_.shift;
            eig_[parity] = tridiag_eigh(h.diag, h.off);
        }
    }

    Eigen::VectorXcd evolve(const Eigen::VectorXcd& psi, double t) const {
        Eigen::VectorXcd out = Eigen::VectorXcd::Zero(n_ + 1);
        for (int parity = 0; parity < 2 && parity <= n_; ++parity) {
            const int m = dicke::block_size(n_, parity);
            Eigen::VectorXcd comp(m);
            for (int i = 0; i < m; ++i) comp[i] = psi[parity + 2 * i];
            Eigen::VectorXcd c = eig_[parity].v.transpose() * comp;
            for (int i = 0; i < m; ++i) c[i] *= std::polar(1.0, -eig_[parity].w[i] * t);
            comp = eig_[parity].v * c;
            for (int i = 0; i < m; ++i) out[parity + 2 * i] = comp[i];
        }
        return out;
    }

private:
    int n_;
    LadderCoeffs coeffs_;
    TridiagEigen eig_[2];
};

// Krylov propagation of e^{-iH dt} psi with full reorthogonalization.
// The a-posteriori residual estimate is the last Krylov weight; when it
// exceeds tol the interval is split in half recursively.
inline Eigen::VectorXcd krylov_exp(const FullBasisOp& op, const Eigen::VectorXcd& psi, double dt,
                                   double tol, int depth = 0) {
    if (dt == 0.0) return psi;
    const Eigen::Index dim = op.dim();
    const int m_max = static_cast<int>(std::min<Eigen::Index>(48, dim));
    require_numeric(depth <= 40,
                    "evolve: step budget exhausted before reaching the requested accuracy");

    std::vector<Eigen::VectorXcd> v;
    v.reserve(static_cast<std::size_t>(m_max) + 1);
    v.push_back(psi / psi.norm());
    std::vector<double> alpha, beta;
    Eigen::VectorXcd w(dim);
    double err = 0.0;
    int m = 0;
    bool invariant = false;
    for (int j = 0; j < m_max; ++j) {
        op.apply(v[static_cast<std::size_t>(j)], w);
        const double a = v[static_cast<std::size_t>(j)].dot(w).real();
        alpha.push_back(a);
        w -= a * v[static_cast<std::size_t>(j)];
        if (j > 0) w -= beta[static_cast<std::size_t>(j - 1)] * v[static_cast<std::size_t>(j - 1)];
        for (const auto& vk : v) w -= vk.dot(w) * vk;
        const double b = w.norm();
        m = j + 1;
        if (b < 1e-13 * (1.0 + std::abs(a))) {
            invariant = true;  // Krylov space closed; propagation below is exact
            break;
        }
        // Residual estimate: weight carried by the last Lanczos vector after
        // propagating within the current subspace.
        {
            Eigen::VectorXd d(m), e(std::max(0, m - 1));
            for (int i = 0; i < m; ++i) d[i] = alpha[static_cast<std::size_t>(i)];
            for (int i = 0; i + 1 < m; ++i) e[i] = beta[static_cast<std::size_t>(i)];
            const TridiagEigen te = tridiag_eigh(d, e);
            std::complex<double> last(0.0, 0.0);
            for (int i = 0; i < m; ++i)
                last += te.v(m - 1, i) * std::polar(1.0, -te.w[i] * dt) * te.v(0, i);
            err = b * std::abs(last);
            if (err < tol && m >= 2) break;
        }
        beta.push_back(b);
        v.push_back(w / b);
    }
    if (!invariant && err >= tol) {
        const Eigen::VectorXcd half = krylov_exp(op, psi, 0.5 * dt, 0.5 * tol, depth + 1);
        return krylov_exp(op, half, 0.5 * dt, 0.5 * tol, depth + 1);
    }
    Eigen::VectorXd d(m), e(std::max(0, m - 1));
    for (int i = 0; i < m; ++i) d[i] = alpha[static_cast<std::size_t>(i)];
    for (int i = 0; i + 1 < m; ++i) e[i] = beta[static_cast<std::size_t>(i)];
    const TridiagEigen te = tridiag_eigh(d, e);
    Eigen::VectorXcd coeff(m);
    for (int i = 0; i < m; ++i) {
        std::complex<double> acc(0.0, 0.0);
        for (int k = 0; k < m; ++k)
            acc += te.v(i, k) * std::polar(1.0, -te.w[k] * dt) * te.v(0, k);
        coeff[i] = acc;
    }
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(dim);
    for (int i = 0; i < m; ++i) out += coeff[i] * v[static_cast<std::size_t>(i)];
    return out * psi.norm();
}

inline Eigen::VectorXcd apply_total_spin(const SpinState& state, char axis) {
    if (state.basis == Basis::dicke) {
        if (axis == 'x') return apply_sx_ladder(state.n, state.amp);
        if (axis == 'y') return apply_sy_ladder(state.n, state.amp);
        if (axis == 'z') {
            // ladder index a counts raised spins: Sz |a> = (a - n/2) |a>
            Eigen::VectorXcd out(state.n + 1);
            for (int a = 0; a <= state.n; ++a) out[a] = (a - 0.5 * state.n) * state.amp[a];
            return out;
        }
        throw contract_error("total spin: axis must be x, y, or z");
    }
    const Eigen::Index dim = state.amp.size();
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(dim);
    const std::complex<double> half_i(0.0, 0.5);
    for (int i = 0; i < state.n; ++i) {
        const std::uint32_t bit = std::uint32_t{1} << i;
        if (axis == 'x') {
            for (Eigen::Index s = 0; s < dim; ++s)
                out[static_cast<Eigen::Index>(static_cast<std::uint32_t>(s) ^ bit)] +=
                    0.5 * state.amp[s];
        } else if (axis == 'y') {
            // sy |up> = i |down>, sy |down> = -i |up> (factor 1/2 for spin-1/2)
            for (Eigen::Index s = 0; s < dim; ++s) {
                const bool up = (static_cast<std::uint32_t>(s) & bit) != 0;
                out[static_cast<Eigen::Index>(static_cast<std::uint32_t>(s) ^ bit)] +=
                    (up ? half_i : -half_i) * state.amp[s];
            }
        } else if (axis == 'z') {
            for (Eigen::Index s = 0; s < dim; ++s) {
                const bool up = (static_cast<std::uint32_t>(s) & bit) != 0;
                out[s] += (up ? 0.5 : -0.5) * state.amp[s];
            }
        } else {
            throw contract_error("total spin: axis must be x, y, or z");
        }
    }
    return out;
}

}  // namespace detail

inline SpinState evolve(const SpinState& state, const HamiltonianSpec& spec, double dt,
                        double tol = 1e-9) {
    state.validate();
    spec.validate();
    require(dt >= 0.0, "evolve: dt >= 0");
    require(state.n == spec.n(), "evolve: state and spec sizes differ");
    require(tol > 0.0, "evolve: tol > 0");
    SpinState out = state;
    if (dt == 0.0) return out;
    if (state.basis == Basis::dicke) {
        out.amp = detail::DickeSpecEvolver(spec).evolve(state.amp, dt);
    } else {
        const FullBasisOp op(spec);
        out.amp = detail::krylov_exp(op, state.amp, dt, tol);
    }
    return out;
}

// Net correlator <S_a^2> - <S_a>^2 with S_a = sum_i s^a_i (spin-1/2 halves).
inline double net_correlator(const SpinState& state, char axis) {
    state.validate();
    require(axis == 'x' || axis == 'y', "net_correlator: axis must be x or y");
    const Eigen::VectorXcd phi = detail::apply_total_spin(state, axis);
    const double second = phi.squaredNorm();
    const double first = state.amp.dot(phi).real();
    return second - first * first;
}

inline double total_spin_expectation(const SpinState& state, char axis) {
    state.validate();
    return state.amp.dot(detail::apply_total_spin(state, axis)).real();
}

inline double energy_expectation(const SpinState& state, const HamiltonianSpec& spec) {
    state.validate();
    spec.validate();
    require(state.n == spec.n(), "energy: state and spec sizes differ");
    if (state.basis == Basis::full)
        return state.amp.dot(FullBasisOp(spec).apply(state.amp)).real();
    const detail::LadderCoeffs c = detail::ladder_coeffs(spec);
    double total = c.shift;
    for (int parity = 0; parity < 2 && parity <= state.n; ++parity) {
        const dicke::TriOp h =
            dicke::block_operator(state.n, parity, c.cx, c.cy, c.cz);
        const int m = dicke::block_size(state.n, parity);
        Eigen::VectorXcd comp(m);
        for (int i = 0; i < m; ++i) comp[i] = state.amp[parity + 2 * i];
        total += dicke::expectation(h, comp);
    }
    return total;
}

// Global spin-flip parity <prod_i sz_i> = sum over configurations weighted by
// (-1)^{number of down spins}; conserved by any gamma_x/gamma_y Hamiltonian.
inline double parity_expectation(const SpinState& state) {
    state.validate();
    double total = 0.0;
    if (state.basis == Basis::full) {
        for (Eigen::Index s = 0; s < state.amp.size(); ++s) {
            const int downs =
                state.n - std::popcount(static_cast<std::uint64_t>(static_cast<std::uint32_t>(s)));
            total += (downs % 2 == 0 ? 1.0 : -1.0) * std::norm(state.amp[s]);
        }
    } else {
        for (int a = 0; a <= state.n; ++a)
            total += ((state.n - a) % 2 == 0 ? 1.0 : -1.0) * std::norm(state.amp[a]);
    }
    return total;
}

// <sx_i sx_j>: flips bits i and j, so it pairs each configuration with its
// double-flip partner.
inline double pair_correlator_x(const SpinState& state, int i, int j) {
    state.validate();
    require(state.basis == Basis::full, "pair_correlator_x: full basis only");
    require(i >= 0 && j >= 0 && i < state.n && j < state.n && i != j,
            "pair_correlator_x: invalid site pair");
    const std::uint32_t mask = (std::uint32_t{1} << i) | (std::uint32_t{1} << j);
    double total = 0.0;
    for (Eigen::Index s = 0; s < state.amp.size(); ++s)
        total += (std::conj(state.amp[s]) *
                  state.amp[static_cast<Eigen::Index>(static_cast<std::uint32_t>(s) ^ mask)])
                     .real();
    return total;
}

// Distance-resolved average C(r) = (1/(n-r)) sum_i <sx_i sx_{i+r}>.
inline std::vector<double> correlation_profile_x(const SpinState& state) {
    state.validate();
    require(state.basis == Basis::full, "correlation_profile_x: full basis only");
    std::vector<double> c(static_cast<std::size_t>(state.n));
    c[0] = 1.0;  // <sx_i sx_i> = 1
    for (int r = 1; r < state.n; ++r) {
        double sum = 0.0;
        for (int i = 0; i + r < state.n; ++i) sum += pair_correlator_x(state, i, i + r);
        c[static_cast<std::size_t>(r)] = sum / (state.n - r);
    }
    return c;
}

struct ProtocolSegment {
    HamiltonianSpec spec;
    double duration = 0.0;
    std::vector<double> sample_times;  // relative to segment start, within [0, duration]
};

struct QuenchProtocol {
    enum class Init { all_down_z } initial_state = Init::all_down_z;
    Basis basis = Basis::full;
    std::vector<ProtocolSegment> segments;

    void validate() const {
        require(!segments.empty(), "protocol: needs >= 1 segment");
        const int n = segments.front().spec.n();
        for (const auto& seg : segments) {
            seg.spec.validate();
            require(seg.spec.n() == n, "protocol: all segments must share the system size");
            require((seg.spec.gamma_x > 0.0) != (seg.spec.gamma_y > 0.0),
                    "protocol: exactly one anisotropy must be nonzero per quench segment");
            require(seg.duration > 0.0, "protocol: durations must be positive");
            double prev = -1.0;
            for (double t : seg.sample_times) {
                require(t >= 0.0 && t <= seg.duration + 1e-12,
                        "protocol: sample times must lie within the segment");
                require(t > prev, "protocol: sample times must be strictly increasing");
                prev = t;
            }
        }
    }
};

// Run the quench sequence from the all-down state, recording one observable
// per segment on that segment's grid. The state is carried continuously
// across switches; nothing is re-prepared.
inline std::vector<ObservableSeries> run_protocol(const QuenchProtocol& protocol,
                                                  const std::vector<ObservableKind>& observables,
                                                  double tol = 1e-9) {
    protocol.validate();
    require(observables.size() == protocol.segments.size(),
            "run_protocol: one observable per segment");
    const int n = protocol.segments.front().spec.n();
    SpinState state = all_down_state(n, protocol.basis);

    const auto measure = [&](const SpinState& s, ObservableKind kind,
                             const HamiltonianSpec& spec) -> double {
        switch (kind) {
            case ObservableKind::Cx2: return net_correlator(s, 'x');
            case ObservableKind::Cy2: return net_correlator(s, 'y');
            case ObservableKind::Sx: return total_spin_expectation(s, 'x');
            case ObservableKind::energy: return energy_expectation(s, spec);
        }
        throw contract_error("run_protocol: unsupported observable");
    };

    std::vector<ObservableSeries> out;
    out.reserve(protocol.segments.size());
    for (std::size_t k = 0; k < protocol.segments.size(); ++k) {
        const ProtocolSegment& seg = protocol.segments[k];
        ObservableSeries series;
        series.times = seg.sample_times;
        series.n = n;
        series.kac = seg.spec.kac_normalized ? 1.0 : seg.spec.j.kac();
        series.label = observable_label(observables[k]);
        if (protocol.basis == Basis::dicke) {
            // One spectral factorization per segment; each sample is an exact
            // rotation of the segment's initial state.
            const detail::DickeSpecEvolver evo(seg.spec);
            SpinState probe = state;
            for (double t : seg.sample_times) {
                probe.amp = evo.evolve(state.amp, t);
                series.values.push_back(measure(probe, observables[k], seg.spec));
            }
            state.amp = evo.evolve(state.amp, seg.duration);
        } else {
            const FullBasisOp op(seg.spec);
            double t_now = 0.0;
            for (double t : seg.sample_times) {
                state.amp = detail::krylov_exp(op, state.amp, t - t_now, tol);
                t_now = t;
                series.values.push_back(measure(state, observables[k], seg.spec));
            }
            state.amp = detail::krylov_exp(op, state.amp, seg.duration - t_now, tol);
        }
        out.push_back(std::move(series));
    }
    return out;
}

// Projective measurement of every spin along the given axis, then classical
// bit-flip noise. Returned bits use 1 for the +axis outcome. Deterministic
// under (state, axis, shots, eps, seed).
inline ShotSet sample_measurements(const SpinState& state, char axis, int shots,
                                   double bitflip_eps, std::uint64_t seed) {
    state.validate();
    require(state.basis == Basis::full,
            "sample_measurements: full basis only (site-resolved outcomes)");
    require(axis == 'x' || axis == 'y' || axis == 'z', "sample_measurements: axis must be x|y|z");
    require(shots >= 1, "sample_measurements: shots >= 1");
    require(bitflip_eps >= 0.0 && bitflip_eps <= 1.0, "sample_measurements: eps in [0,1]");

    // Rotate each site into the measurement eigenbasis. After the transform,
    // bit = 1 indexes the +axis eigenvector.
    Eigen::VectorXcd psi = state.amp;
    const Eigen::Index dim = psi.size();
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    const std::complex<double> im(0.0, 1.0);
    if (axis != 'z') {
        for (int i = 0; i < state.n; ++i) {
            const std::uint32_t bit = std::uint32_t{1} << i;
            for (Eigen::Index s = 0; s < dim; ++s) {
                if (static_cast<std::uint32_t>(s) & bit) continue;
                const Eigen::Index s1 = static_cast<Eigen::Index>(static_cast<std::uint32_t>(s) | bit);
                const std::complex<double> u = psi[s1];  // up amplitude
                const std::complex<double> v = psi[s];   // down amplitude
                if (axis == 'x') {
                    psi[s1] = (u + v) * inv_sqrt2;   // <+x| = (<up| + <down|)/sqrt2
                    psi[s] = (u - v) * inv_sqrt2;
                } else {
                    psi[s1] = (u - im * v) * inv_sqrt2;  // <+y| = (<up| - i<down|)/sqrt2
                    psi[s] = (u + im * v) * inv_sqrt2;
                }
            }
        }
    }

    std::vector<double> cdf(static_cast<std::size_t>(dim));
    double acc = 0.0;
    for (Eigen::Index s = 0; s < dim; ++s) {
        acc += std::norm(psi[s]);
        cdf[static_cast<std::size_t>(s)] = acc;
    }
    require_numeric(std::abs(acc - 1.0) < 1e-9, "sample_measurements: probabilities do not sum to 1");

    SplitRng rng(seed);
    ShotSet set;
    set.axis = std::string(1, axis);
    set.shots.reserve(static_cast<std::size_t>(shots));
    for (int r = 0; r < shots; ++r) {
        const double u = rng.uniform() * acc;
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        std::uint32_t outcome = static_cast<std::uint32_t>(it - cdf.begin());
        if (outcome >= static_cast<std::uint32_t>(dim))
            outcome = static_cast<std::uint32_t>(dim) - 1;
        std::vector<std::uint8_t> row(static_cast<std::size_t>(state.n));
        for (int i = 0; i < state.n; ++i) {
            std::uint8_t b = (outcome >> i) & 1u;
            if (bitflip_eps > 0.0 && rng.uniform() < bitflip_eps) b ^= 1u;
            row[static_cast<std::size_t>(i)] = b;
        }
        set.shots.push_back(std::move(row));
    }
    set.validate();
    return set;
}

}  // namespace qcrit
