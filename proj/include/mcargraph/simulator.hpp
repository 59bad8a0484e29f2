#pragma once

// Sample-path generation. Two routes:
//
//   simulate_exact_gaussian  draws the stationary Gaussian state process on
//                            an exact grid: X(0) ~ N(0, Gamma(0)) and
//                            X(t+h) = e^{Ah} X(t) + eta, eta ~ N(0, Q(h)).
//   simulate_euler_levy      Euler-Maruyama on dX = A X dt + B dL with an
//                            optional compound-Poisson jump part, using a
//                            sub-stepped grid and a stationarity burn-in.
//
// All randomness flows through the Rng in a fixed draw order, so a seed
// pins the path bytes.

#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "mcargraph/errors.hpp"
#include "mcargraph/matrix_kernels.hpp"
#include "mcargraph/mcar_model.hpp"
#include "mcargraph/rng.hpp"

namespace mcargraph {

struct BrownianComponent {
    Matrix cov; // covariance of L(1) for this component, k x k
};

struct CompoundPoissonComponent {
    double rate = 0.0; // expected jumps per unit time
    Matrix jump_cov;   // covariance of a single zero-mean jump, k x k
};

struct LevyDriver {
    std::vector<std::variant<BrownianComponent, CompoundPoissonComponent>> components;

    static LevyDriver brownian(const Matrix& cov) {
        LevyDriver d;
        d.components.push_back(BrownianComponent{cov});
        return d;
    }

    static LevyDriver compound_poisson(double rate, const Matrix& jump_cov) {
        LevyDriver d;
        d.components.push_back(CompoundPoissonComponent{rate, jump_cov});
        return d;
    }

    LevyDriver& add_brownian(const Matrix& cov) {
        components.push_back(BrownianComponent{cov});
        return *this;
    }

    LevyDriver& add_compound_poisson(double rate, const Matrix& jump_cov) {
        components.push_back(CompoundPoissonComponent{rate, jump_cov});
        return *this;
    }

    bool purely_brownian() const {
        for (const auto& c : components)
            if (!std::holds_alternative<BrownianComponent>(c)) return false;
        return true;
    }

    // Covariance of L(1): sum of Brownian covariances plus rate * jump_cov
    // per jump component. Validates every component against dimension k.
    Matrix total_levy_cov(int k) const {
        Matrix total = Matrix::Zero(k, k);
        for (const auto& c : components) {
            const Matrix* m = nullptr;
            double factor = 1.0;
            if (const auto* b = std::get_if<BrownianComponent>(&c)) {
                m = &b->cov;
            } else {
                const auto& cp = std::get<CompoundPoissonComponent>(c);
                if (!(cp.rate >= 0.0)) fail(Errc::BadDriver, "jump rate must be non-negative");
                m = &cp.jump_cov;
                factor = cp.rate;
            }
            if (m->rows() != k || m->cols() != k)
                fail(Errc::BadDriver, "driver covariance must be " + std::to_string(k) + "x"
                                          + std::to_string(k));
            if (!all_finite(*m) || !m->isApprox(m->transpose(), 1e-12))
                fail(Errc::BadDriver, "driver covariance must be finite and symmetric");
            if (min_symmetric_eigenvalue(0.5 * (*m + m->transpose())) < -1e-10)
                fail(Errc::BadDriver, "driver covariance must be positive semi-definite");
            total += factor * *m;
        }
        return 0.5 * (total + total.transpose());
    }
};

struct SamplePath {
    double h = 0.0;
    int n_steps = 0;
    Matrix states;       // (n_steps + 1) x kp, row t is X(t h)
    Matrix observations; // (n_steps + 1) x k, row t is C X(t h)
    std::uint64_t seed = 0;
};

// Symmetric square-root-like factor F with F F' = S for PSD S. Tiny negative
// eigenvalues are clipped to zero, so a numerically indefinite S still yields
// a usable factor.
inline Matrix psd_factor(const Matrix& s) {
    require_square(s, "psd_factor input");
    require_symmetric(s, "psd_factor input", 1e-9);
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (s + s.transpose()));
    if (es.info() != Eigen::Success)
        fail(Errc::CholeskyFailure, "eigendecomposition of a covariance failed");
    Vector d = es.eigenvalues();
    for (int i = 0; i < d.size(); ++i) d(i) = d(i) > 0.0 ? std::sqrt(d(i)) : 0.0;
    return es.eigenvectors() * d.asDiagonal();
}

namespace detail {

inline Vector gaussian_vector(Rng& rng, int n) {
    Vector z(n);
    for (int i = 0; i < n; ++i) z(i) = rng.next_gaussian();
    return z;
}

struct PreparedComponent {
    bool is_jump = false;
    double rate = 0.0;   // jumps per unit time
    Matrix factor;       // Brownian: factor of cov * delta; jump: factor of jump_cov
};

inline std::vector<PreparedComponent> prepare_components(const LevyDriver& driver, int k,
                                                         double delta) {
    std::vector<PreparedComponent> out;
    for (const auto& c : driver.components) {
        PreparedComponent pc;
        if (const auto* b = std::get_if<BrownianComponent>(&c)) {
            pc.factor = psd_factor(b->cov) * std::sqrt(delta);
        } else {
            const auto& cp = std::get<CompoundPoissonComponent>(c);
            pc.is_jump = true;
            pc.rate = cp.rate;
            pc.factor = psd_factor(cp.jump_cov);
        }
        if (pc.factor.rows() != k) fail(Errc::BadDriver, "driver dimension mismatch");
        out.push_back(std::move(pc));
    }
    return out;
}

// Euler-Maruyama core with an explicit start state: burn_in sub-steps are
// taken before row 0 is recorded, then every substeps-th point lands in the
// path. Draw order per sub-step follows the component list.
inline SamplePath euler_path(const StateSpace& ss, const LevyDriver& driver, double h, int n_steps,
                             int substeps, std::uint64_t seed, const Vector& x0,
                             long long burn_in) {
    const int k = ss.k;
    const int dim = static_cast<int>(ss.A.rows());
    const double delta = h / substeps;
    const auto comps = prepare_components(driver, k, delta);
    Rng rng(seed);

    Vector x = x0;
    const auto substep = [&] {
        Vector dl = Vector::Zero(k);
        for (const auto& pc : comps) {
            if (!pc.is_jump) {
                dl += pc.factor * gaussian_vector(rng, k);
            } else {
                const int jumps = rng.next_poisson(pc.rate * delta);
                for (int j = 0; j < jumps; ++j) dl += pc.factor * gaussian_vector(rng, k);
            }
        }
        x = x + delta * (ss.A * x) + ss.B * dl;
    };

    for (long long i = 0; i < burn_in; ++i) substep();

    SamplePath path;
    path.h = h;
    path.n_steps = n_steps;
    path.seed = seed;
    path.states.resize(n_steps + 1, dim);
    path.states.row(0) = x.transpose();
    for (int t = 1; t <= n_steps; ++t) {
        for (int s = 0; s < substeps; ++s) substep();
        path.states.row(t) = x.transpose();
    }
    path.observations = path.states.leftCols(k);
    return path;
}

} // namespace detail

// Stationary Gaussian path on the exact transition law.
inline SamplePath simulate_exact_gaussian(const StateSpace& ss, double h, int n_steps,
                                          std::uint64_t seed) {
    if (!(h > 0.0)) fail(Errc::NegativeHorizon, "step size must be positive");
    if (n_steps < 1) fail(Errc::OutOfRange, "n_steps must be at least 1");
    const int dim = static_cast<int>(ss.A.rows());

    const Matrix trans = expm(ss.A * h);
    const Matrix q = gramian(ss.A, ss.B * ss.sigma_L * ss.B.transpose(), h);
    const Matrix f0 = psd_factor(ss.gamma0);
    const Matrix fq = psd_factor(q);

    Rng rng(seed);
    SamplePath path;
    path.h = h;
    path.n_steps = n_steps;
    path.seed = seed;
    path.states.resize(n_steps + 1, dim);

    Vector x = f0 * detail::gaussian_vector(rng, dim);
    path.states.row(0) = x.transpose();
    for (int t = 1; t <= n_steps; ++t) {
        x = trans * x + fq * detail::gaussian_vector(rng, dim);
        path.states.row(t) = x.transpose();
    }
    path.observations = path.states.leftCols(ss.k);
    return path;
}

// Euler-Maruyama path started from zero and burned in until the transient
// has decayed (20 time constants of the slowest mode). If the driver's L(1)
// covariance disagrees with the model's sigma_L beyond 1e-9, a warning is
// written to *warning when provided.
inline SamplePath simulate_euler_levy(const StateSpace& ss, const LevyDriver& driver, double h,
                                      int n_steps, int substeps, std::uint64_t seed,
                                      std::string* warning = nullptr) {
    if (!(h > 0.0)) fail(Errc::NegativeHorizon, "step size must be positive");
    if (n_steps < 1) fail(Errc::OutOfRange, "n_steps must be at least 1");
    if (substeps < 1) fail(Errc::OutOfRange, "substeps must be at least 1");
    if (driver.components.empty()) fail(Errc::BadDriver, "driver has no components");

    const Matrix total = driver.total_levy_cov(ss.k);
    const double mismatch = (total - ss.sigma_L).cwiseAbs().maxCoeff();
    if (mismatch > 1e-9 && warning != nullptr)
        *warning = "driver L(1) covariance deviates from the model sigma_L by "
                 + std::to_string(mismatch);

    const double margin = stability_margin(ss.A);
    if (!(margin < 0.0)) fail(Errc::Unstable, "state matrix is not stable");
    const double delta = h / substeps;
    const long long burn_in = static_cast<long long>(std::ceil(20.0 / (-margin) / delta));

    const Vector x0 = Vector::Zero(ss.A.rows());
    return detail::euler_path(ss, driver, h, n_steps, substeps, seed, x0, burn_in);
}

// CSV layout: header t,X1..Xkp,Y1..Yk then one row per grid point with 17
// significant digits.
inline void write_csv(const SamplePath& path, std::ostream& out) {
    const int dim = static_cast<int>(path.states.cols());
    const int k = static_cast<int>(path.observations.cols());
    out << "t";
    for (int i = 1; i <= dim; ++i) out << ",X" << i;
    for (int i = 1; i <= k; ++i) out << ",Y" << i;
    out << "\n";
    char buf[64];
    const auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf;
    };
    for (int t = 0; t <= path.n_steps; ++t) {
        put(t * path.h);
        for (int i = 0; i < dim; ++i) {
            out << ",";
            put(path.states(t, i));
        }
        for (int i = 0; i < k; ++i) {
            out << ",";
            put(path.observations(t, i));
        }
        out << "\n";
    }
}

} // namespace mcargraph
