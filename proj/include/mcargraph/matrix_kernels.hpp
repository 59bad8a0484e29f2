#pragma once

// Dense real-matrix primitives shared by every other header:
//   expm             matrix exponential, fixed-order Pade with scaling/squaring
//   stability_margin max real part of the spectrum
//   solve_lyapunov   Gamma with A Gamma + Gamma A^T = -W, via Kronecker vectorization
//   gramian          Q(h) = int_0^h e^{Au} W e^{A^T u} du, via the block-exponential trick
//   power_stack      [I, M, M^2, ..., M^n] by repeated multiplication
//
// Matrices are Eigen dynamic-size doubles; Hermitian data uses complex doubles.

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "mcargraph/errors.hpp"

namespace mcargraph {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline void require_finite(const Matrix& m, const char* what) {
    if (!m.allFinite()) fail(Errc::NonFinite, std::string(what) + " contains NaN or Inf");
}

inline void require_square(const Matrix& m, const char* what) {
    if (m.rows() != m.cols() || m.rows() < 1)
        fail(Errc::BadShape, std::string(what) + " must be square and non-empty");
}

inline void require_symmetric(const Matrix& m, const char* what, double tol = 1e-12) {
    require_square(m, what);
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol)
        fail(Errc::NotSymmetric, std::string(what) + " is not symmetric");
}

// e^M by a [6/6] Pade approximant after scaling M so that the scaled
// infinity norm is at most 0.5, then repeated squaring.
inline Matrix expm(const Matrix& m) {
    require_square(m, "expm input");
    require_finite(m, "expm input");

    const Eigen::Index n = m.rows();
    const double norm = m.cwiseAbs().rowwise().sum().maxCoeff();
    int squarings = 0;
    if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    const Matrix a = m / std::ldexp(1.0, squarings);

    constexpr int q = 6;
    Matrix num = Matrix::Identity(n, n);
    Matrix den = Matrix::Identity(n, n);
    Matrix term = Matrix::Identity(n, n);
    double c = 1.0;
    for (int k = 1; k <= q; ++k) {
        c *= static_cast<double>(q - k + 1) / static_cast<double>(k * (2 * q - k + 1));
        term = term * a;
        num += c * term;
        den += ((k % 2 == 0) ? c : -c) * term;
    }

    Matrix result = den.partialPivLu().solve(num);
    for (int s = 0; s < squarings; ++s) result = result * result;
    return result;
}

// Largest real part over the spectrum; negative means the matrix generates
// a stable (causal) semigroup.
inline double stability_margin(const Matrix& m) {
    require_square(m, "stability_margin input");
    require_finite(m, "stability_margin input");
    Eigen::EigenSolver<Matrix> solver(m, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success)
        fail(Errc::EigenFailure, "eigen solver did not converge");
    return solver.eigenvalues().real().maxCoeff();
}

// Unique solution Gamma of A Gamma + Gamma A^T = -W for stable A, obtained by
// vectorizing to (I kron A + A kron I) vec(Gamma) = vec(-W). The result is
// symmetrized as (X + X^T)/2 before returning.
inline Matrix solve_lyapunov(const Matrix& a, const Matrix& w) {
    require_square(a, "solve_lyapunov A");
    require_finite(a, "solve_lyapunov A");
    require_symmetric(w, "solve_lyapunov W");
    if (a.rows() != w.rows()) fail(Errc::BadShape, "A and W orders differ");
    if (stability_margin(a) >= 0.0)
        fail(Errc::Unstable, "solve_lyapunov requires a stable coefficient matrix");

    const Eigen::Index n = a.rows();
    Matrix k = Matrix::Zero(n * n, n * n);
    // I kron A: block-diagonal copies of A. A kron I: scalar-scaled identity blocks.
    for (Eigen::Index i = 0; i < n; ++i) {
        k.block(i * n, i * n, n, n) += a;
        for (Eigen::Index j = 0; j < n; ++j)
            k.block(i * n, j * n, n, n).diagonal().array() += a(i, j);
    }
    Vector rhs(n * n);
    for (Eigen::Index col = 0; col < n; ++col) rhs.segment(col * n, n) = -w.col(col);

    const Vector x = k.partialPivLu().solve(rhs);
    Matrix gamma(n, n);
    for (Eigen::Index col = 0; col < n; ++col) gamma.col(col) = x.segment(col * n, n);
    gamma = 0.5 * (gamma + gamma.transpose()).eval();
    return gamma;
}

// Finite-horizon Gramian Q(h) = int_0^h e^{Au} W e^{A^T u} du. The base step
// comes from expm on the block matrix [[-A, W], [0, A^T]] t: with the
// exponential split as [[E11, E12], [0, E22]], Q(t) = E22^T E12. The block
// route degrades once ||A|| t is large (E11 grows like e^{||A|| t} while the
// product cancels back down to Q), so the horizon is halved until
// ||A|| t <= 0.5 and the result is rebuilt with the exact doubling identity
// Q(2t) = Q(t) + e^{At} Q(t) e^{A^T t}. Symmetrized before returning.
inline Matrix gramian(const Matrix& a, const Matrix& w, double h) {
    require_square(a, "gramian A");
    require_finite(a, "gramian A");
    require_symmetric(w, "gramian W");
    if (a.rows() != w.rows()) fail(Errc::BadShape, "A and W orders differ");
    if (h < 0.0) fail(Errc::NegativeHorizon, "gramian horizon must be non-negative");

    const Eigen::Index n = a.rows();
    if (h == 0.0) return Matrix::Zero(n, n);

    int doublings = 0;
    double scaled_norm = a.cwiseAbs().rowwise().sum().maxCoeff() * h;
    while (scaled_norm > 0.5 && doublings < 64) {
        scaled_norm *= 0.5;
        ++doublings;
    }
    const double t = std::ldexp(h, -doublings);

    Matrix block = Matrix::Zero(2 * n, 2 * n);
    block.topLeftCorner(n, n) = -a;
    block.topRightCorner(n, n) = w;
    block.bottomRightCorner(n, n) = a.transpose();
    const Matrix e = expm(block * t);

    Matrix q = e.bottomRightCorner(n, n).transpose() * e.topRightCorner(n, n);
    Matrix step = expm(a * t);
    for (int i = 0; i < doublings; ++i) {
        q = (q + step * q * step.transpose()).eval();
        step = (step * step).eval();
    }
    q = 0.5 * (q + q.transpose()).eval();
    return q;
}

// [M^0, M^1, ..., M^n]; result[0] is the identity and each later entry is
// M times its predecessor.
inline std::vector<Matrix> power_stack(const Matrix& m, int n) {
    require_square(m, "power_stack input");
    require_finite(m, "power_stack input");
    if (n < 0) fail(Errc::OutOfRange, "power_stack exponent must be non-negative");

    std::vector<Matrix> powers;
    powers.reserve(static_cast<std::size_t>(n) + 1);
    powers.push_back(Matrix::Identity(m.rows(), m.cols()));
    for (int i = 1; i <= n; ++i) powers.push_back(m * powers.back());
    return powers;
}

} // namespace mcargraph
