#pragma once

// Numerical checks tying sample paths and spectra back to the algebra:
//
//   innovation_correlation   correlation matrix of one-step prediction
//                            residuals Y(t+h) - C e^{Ah} X(t).
//   estimate_var1            least-squares fit of the sampled state
//                            recursion X(t+h) ~ T X(t) plus residual cov.
//   assumption_density_check largest eigenvalue of the coherence-type matrix
//                            d_AB(l) = f_AA^{-1/2} f_AB f_BB^{-1} f_BA f_AA^{-1/2}
//                            over a frequency grid, plus its l -> inf limit
//                            read off the noise covariance blocks.
//   spectral_mass_check      trapezoid integral of the spectral density
//                            against the stationary covariance.

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <string>

#include "mcargraph/errors.hpp"
#include "mcargraph/matrix_kernels.hpp"
#include "mcargraph/mcar_model.hpp"
#include "mcargraph/simulator.hpp"

namespace mcargraph {

inline Matrix innovation_correlation(const SamplePath& path, const StateSpace& ss) {
    const int k = ss.k;
    const int dim = static_cast<int>(ss.A.rows());
    if (path.states.cols() != dim || path.observations.cols() != k || path.n_steps < 2)
        fail(Errc::ShapeMismatch, "path does not match the state space");

    const Matrix predictor = expm(ss.A * path.h).topRows(k);
    const int n = path.n_steps;
    Matrix resid(n, k);
    for (int t = 0; t < n; ++t)
        resid.row(t) = path.observations.row(t + 1)
                     - (predictor * path.states.row(t).transpose()).transpose();

    const Eigen::RowVectorXd mean = resid.colwise().mean();
    resid.rowwise() -= mean;
    const Matrix cov = resid.transpose() * resid / n;

    Vector sd(k);
    for (int i = 0; i < k; ++i) {
        if (cov(i, i) < 1e-14)
            fail(Errc::DegenerateVariance, "residual variance of component " + std::to_string(i + 1)
                                               + " is numerically zero");
        sd(i) = std::sqrt(cov(i, i));
    }
    Matrix corr(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) corr(i, j) = i == j ? 1.0 : cov(i, j) / (sd(i) * sd(j));
    return corr;
}

// Least-squares estimate of the one-step state recursion. Needs a long path
// relative to the state dimension; the residual covariance is normalized by
// the number of regression rows.
inline SampledVar1 estimate_var1(const SamplePath& path) {
    const int dim = static_cast<int>(path.states.cols());
    const int n = path.n_steps;
    if (n < 10 * dim * dim)
        fail(Errc::BadShape, "path too short: need n_steps >= 10 (kp)^2");

    const auto x0 = path.states.topRows(n);
    const auto x1 = path.states.bottomRows(n);
    const Matrix gram = x0.transpose() * x0;
    const Matrix cross = x1.transpose() * x0;

    Eigen::FullPivLU<Matrix> lu(gram);
    if (!lu.isInvertible()) fail(Errc::RankDeficient, "regressor Gram matrix is singular");
    const Matrix transition = lu.solve(cross.transpose()).transpose();

    const Matrix resid = x1 - x0 * transition.transpose();
    SampledVar1 est;
    est.transition = transition;
    est.noise_cov = resid.transpose() * resid / n;
    return est;
}

struct AssumptionReport {
    std::set<int> A;
    std::set<int> B;
    double lambda_max = 0.0;
    double step = 0.0;
    double sup_eig = 0.0;   // largest eigenvalue of d_AB over the grid
    double limit_eig = 0.0; // largest eigenvalue of the high-frequency limit
    bool satisfied = false;
};

namespace detail {

inline ComplexMatrix submatrix(const ComplexMatrix& m, const std::vector<int>& rows,
                               const std::vector<int>& cols) {
    ComplexMatrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                m(rows[i] - 1, cols[j] - 1);
    return out;
}

// Hermitian inverse square root with an eigenvalue floor: the density decays
// like l^-2, so raw inversion would overflow at large |l|.
inline ComplexMatrix inv_sqrt_floor(const ComplexMatrix& m, double floor_at) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (m + m.adjoint()));
    if (es.info() != Eigen::Success) fail(Errc::EigenFailure, "Hermitian eigendecomposition failed");
    Vector d = es.eigenvalues();
    for (int i = 0; i < d.size(); ++i) d(i) = 1.0 / std::sqrt(std::max(d(i), floor_at));
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint();
}

inline double largest_hermitian_eigenvalue(const ComplexMatrix& m) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (m + m.adjoint()));
    if (es.info() != Eigen::Success) fail(Errc::EigenFailure, "Hermitian eigendecomposition failed");
    return std::max(0.0, es.eigenvalues().maxCoeff());
}

inline double coherence_eigenvalue(const ComplexMatrix& f, const std::vector<int>& a,
                                   const std::vector<int>& b) {
    const ComplexMatrix f_aa = submatrix(f, a, a);
    const ComplexMatrix f_ab = submatrix(f, a, b);
    const ComplexMatrix f_bb = submatrix(f, b, b);

    Eigen::FullPivLU<ComplexMatrix> lu(f_bb);
    if (!lu.isInvertible()) fail(Errc::SingularBlock, "f_BB block is numerically singular");
    const ComplexMatrix half = inv_sqrt_floor(f_aa, 1e-13);
    const ComplexMatrix d = half * f_ab * lu.solve(f_ab.adjoint()) * half;
    return largest_hermitian_eigenvalue(d);
}

} // namespace detail

// Scans the largest eigenvalue of d_AB over l in [-lambda_max, lambda_max]
// and evaluates the high-frequency limit exactly from sigma_L blocks (the
// density is asymptotically a known multiple of sigma_L in every order).
inline AssumptionReport assumption_density_check(const StateSpace& ss, const std::set<int>& A,
                                                 const std::set<int>& B, double lambda_max = 100.0,
                                                 double step = 0.05) {
    if (min_symmetric_eigenvalue(ss.sigma_L) <= kStrictMinEigenvalue)
        fail(Errc::NotStrict, "density check requires strictly positive definite sigma_L");
    if (A.empty() || B.empty()) fail(Errc::QueryInvalid, "A and B must be non-empty");
    for (int v : A)
        if (v < 1 || v > ss.k || B.count(v)) fail(Errc::QueryInvalid, "A and B must be disjoint subsets of 1..k");
    for (int v : B)
        if (v < 1 || v > ss.k) fail(Errc::QueryInvalid, "B must be a subset of 1..k");
    if (!(lambda_max > 0.0) || !(step > 0.0)) fail(Errc::OutOfRange, "grid parameters must be positive");

    const std::vector<int> a(A.begin(), A.end());
    const std::vector<int> b(B.begin(), B.end());

    AssumptionReport report;
    report.A = A;
    report.B = B;
    report.lambda_max = lambda_max;
    report.step = step;

    const long long n_points = static_cast<long long>(std::floor(2.0 * lambda_max / step)) + 1;
    for (long long i = 0; i < n_points; ++i) {
        const double lambda = -lambda_max + static_cast<double>(i) * step;
        const ComplexMatrix f = spectral_density(ss, lambda);
        report.sup_eig = std::max(report.sup_eig, detail::coherence_eigenvalue(f, a, b));
    }

    const ComplexMatrix sigma_c = ss.sigma_L.cast<std::complex<double>>();
    report.limit_eig = detail::coherence_eigenvalue(sigma_c, a, b);
    report.satisfied = report.sup_eig < 1.0 && report.limit_eig < 1.0;
    return report;
}

// Max-norm defect between the trapezoid integral of the spectral density and
// the observation block of the stationary covariance.
inline double spectral_mass_check(const StateSpace& ss, double lambda_max = 200.0,
                                  double step = 0.01) {
    if (!(lambda_max > 0.0) || !(step > 0.0)) fail(Errc::OutOfRange, "grid parameters must be positive");
    const int k = ss.k;
    const long long n_points = static_cast<long long>(std::floor(2.0 * lambda_max / step)) + 1;

    ComplexMatrix acc = ComplexMatrix::Zero(k, k);
    for (long long i = 0; i < n_points; ++i) {
        const double lambda = -lambda_max + static_cast<double>(i) * step;
        const double weight = (i == 0 || i == n_points - 1) ? 0.5 : 1.0;
        acc += weight * spectral_density(ss, lambda);
    }
    const Matrix integral = (step * acc).real();
    const Matrix target = ss.gamma0.topLeftCorner(k, k);
    return (integral - target).cwiseAbs().maxCoeff();
}

inline std::string format_assumption_report(const AssumptionReport& r) {
    std::ostringstream out;
    out << "A=";
    bool first = true;
    for (int v : r.A) {
        out << (first ? "" : ",") << v;
        first = false;
    }
    out << " B=";
    first = true;
    for (int v : r.B) {
        out << (first ? "" : ",") << v;
        first = false;
    }
    out.precision(6);
    out << " grid=[-" << r.lambda_max << "," << r.lambda_max << "] step=" << r.step
        << " sup_eig=" << r.sup_eig << " limit_eig=" << r.limit_eig
        << " satisfied=" << (r.satisfied ? "yes" : "no");
    return out.str();
}

} // namespace mcargraph
