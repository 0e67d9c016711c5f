#pragma once

#include <Eigen/Dense>
#include <vector>

#include "qcrit/common.hpp"

#if defined(QCRIT_HAVE_LAPACKE)
#include <lapacke.h>
#endif

namespace qcrit {

struct TridiagEigen {
    Eigen::VectorXd w;  // ascending
    Eigen::MatrixXd v;  // columns matching w
};

// Full eigendecomposition of a symmetric tridiagonal matrix. LAPACK's MRRR
// driver when available (O(n^2) with eigenvectors), Eigen's QL otherwise.
inline TridiagEigen tridiag_eigh(const Eigen::VectorXd& diag, const Eigen::VectorXd& off) {
    const int n = static_cast<int>(diag.size());
    require(n >= 1, "tridiag_eigh: empty matrix");
    require(off.size() == std::max(0, n - 1), "tridiag_eigh: off length must be n-1");
    TridiagEigen out;
#if defined(QCRIT_HAVE_LAPACKE)
    std::vector<double> d(diag.data(), diag.data() + n);
    std::vector<double> e(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i + 1 < n; ++i) e[static_cast<std::size_t>(i)] = off[i];
    out.w.resize(n);
    out.v.resize(n, n);
    std::vector<lapack_int> isuppz(static_cast<std::size_t>(2 * std::max(1, n)));
    lapack_int m = 0;
    lapack_logical tryrac = 1;
    const lapack_int info = LAPACKE_dstemr(
        LAPACK_COL_MAJOR, 'V', 'A', n, d.data(), e.data(), 0.0, 0.0, 0, 0, &m,
        out.w.data(), out.v.data(), n, n, isuppz.data(), &tryrac);
    require_numeric(info == 0 && m == n, "tridiagonal eigensolver failed");
#else
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, off.size() ? off : Eigen::VectorXd::Zero(std::max(0, n - 1)));
    require_numeric(es.info() == Eigen::Success, "tridiagonal eigensolver failed");
    out.w = es.eigenvalues();
    out.v = es.eigenvectors();
#endif
    return out;
}

// Lowest eigenpair only; cheaper than the full decomposition at large n.
inline std::pair<double, Eigen::VectorXd> tridiag_ground(const Eigen::VectorXd& diag,
                                                         const Eigen::VectorXd& off) {
    const int n = static_cast<int>(diag.size());
    require(n >= 1, "tridiag_ground: empty matrix");
#if defined(QCRIT_HAVE_LAPACKE)
    std::vector<double> d(diag.data(), diag.data() + n);
    std::vector<double> e(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i + 1 < n; ++i) e[static_cast<std::size_t>(i)] = off[i];
    Eigen::VectorXd w(std::max(1, n));
    Eigen::VectorXd z(n);
    std::vector<lapack_int> isuppz(2);
    lapack_int m = 0;
    lapack_logical tryrac = 1;
    const lapack_int info = LAPACKE_dstemr(
        LAPACK_COL_MAJOR, 'V', 'I', n, d.data(), e.data(), 0.0, 0.0, 1, 1, &m,
        w.data(), z.data(), n, 1, isuppz.data(), &tryrac);
    require_numeric(info == 0 && m == 1, "tridiagonal ground-state solve failed");
    return {w[0], z};
#else
    const TridiagEigen full = tridiag_eigh(diag, off);
    return {full.w[0], full.v.col(0)};
#endif
}

struct DenseEigen {
    Eigen::VectorXd w;
    Eigen::MatrixXd v;
};

// Eigendecomposition of a dense symmetric matrix.
inline DenseEigen dense_eigh(const Eigen::MatrixXd& m) {
    require(m.rows() == m.cols() && m.rows() >= 1, "dense_eigh: matrix must be square");
    DenseEigen out;
#if defined(QCRIT_HAVE_LAPACKE)
    const lapack_int n = static_cast<lapack_int>(m.rows());
    out.v = m;
    out.w.resize(n);
    const lapack_int info =
        LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, out.v.data(), n, out.w.data());
    require_numeric(info == 0, "dense symmetric eigensolver failed");
#else
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    require_numeric(es.info() == Eigen::Success, "dense symmetric eigensolver failed");
    out.w = es.eigenvalues();
    out.v = es.eigenvectors();
#endif
    return out;
}

}  // namespace qcrit
