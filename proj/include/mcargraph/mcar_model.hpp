#pragma once

// Continuous-time vector autoregression of order p, driven by a zero-mean
// square-integrable Levy process with covariance sigma_L. The model is held
// in companion (state-space) form
//
//   dX(t) = A X(t) dt + B dL(t),   Y(t) = C X(t),
//
// where A is the kp x kp block-companion matrix of A_1..A_p (super-diagonal
// identity blocks, last block row -A_p ... -A_1), B^T = (0, ..., 0, I_k) and
// C = (I_k, 0, ..., 0). Stationarity of the model is equivalent to every
// eigenvalue of A having negative real part, and then the stationary state
// covariance Gamma(0) solves A Gamma + Gamma A^T = -B sigma_L B^T.

#include <cctype>
#include <charconv>
#include <complex>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "mcargraph/matrix_kernels.hpp"

namespace mcargraph {

inline constexpr double kStrictMinEigenvalue = 1e-10;

struct MCARSpec {
    int k = 0;
    int p = 0;
    std::vector<Matrix> ar_coeffs; // A_1 .. A_p, each k x k
    Matrix sigma_L;                // k x k Levy covariance
    bool strict = true;            // require sigma_L strictly positive definite
};

struct StateSpace {
    Matrix A;       // kp x kp companion matrix
    Matrix B;       // kp x k
    Matrix C;       // k x kp
    Matrix gamma0;  // kp x kp stationary covariance
    Matrix sigma_L; // copy of the driving covariance
    int k = 0;
    int p = 0;
};

// Block selector E_j with E_j^T = (0_{k x k(j-1)}, I_k, 0_{k x k(p-j)}).
inline Matrix selector_E(int j, int k, int p) {
    if (j < 1 || j > p) fail(Errc::OutOfRange, "selector index out of 1..p");
    Matrix e = Matrix::Zero(static_cast<Eigen::Index>(k) * p, k);
    e.block(static_cast<Eigen::Index>(k) * (j - 1), 0, k, k) = Matrix::Identity(k, k);
    return e;
}

inline double min_symmetric_eigenvalue(const Matrix& s) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(s);
    if (solver.info() != Eigen::Success) fail(Errc::EigenFailure, "symmetric eigen solve failed");
    return solver.eigenvalues().minCoeff();
}

inline Matrix companion_matrix(const MCARSpec& spec) {
    const int k = spec.k;
    const int p = spec.p;
    Matrix a = Matrix::Zero(static_cast<Eigen::Index>(k) * p, static_cast<Eigen::Index>(k) * p);
    for (int i = 0; i + 1 < p; ++i)
        a.block(static_cast<Eigen::Index>(k) * i, static_cast<Eigen::Index>(k) * (i + 1), k, k) =
            Matrix::Identity(k, k);
    for (int j = 0; j < p; ++j)
        a.block(static_cast<Eigen::Index>(k) * (p - 1), static_cast<Eigen::Index>(k) * j, k, k) =
            -spec.ar_coeffs[static_cast<std::size_t>(p - 1 - j)];
    return a;
}

// Structural and numerical validation: shapes, finiteness, symmetric PSD
// sigma_L (strictly positive definite in strict mode), stable companion.
inline void validate_spec(const MCARSpec& spec) {
    if (spec.k < 1) fail(Errc::BadShape, "process dimension k must be at least 1");
    if (spec.p < 1) fail(Errc::BadShape, "autoregressive order p must be at least 1");
    if (static_cast<int>(spec.ar_coeffs.size()) != spec.p)
        fail(Errc::BadShape, "expected exactly p coefficient matrices");
    for (const Matrix& a : spec.ar_coeffs) {
        if (a.rows() != spec.k || a.cols() != spec.k)
            fail(Errc::BadShape, "coefficient matrices must be k x k");
        require_finite(a, "ar coefficient");
    }
    if (spec.sigma_L.rows() != spec.k || spec.sigma_L.cols() != spec.k)
        fail(Errc::BadShape, "sigma_L must be k x k");
    require_finite(spec.sigma_L, "sigma_L");
    require_symmetric(spec.sigma_L, "sigma_L");

    const double min_eig = min_symmetric_eigenvalue(spec.sigma_L);
    if (min_eig < -1e-10) fail(Errc::BadShape, "sigma_L is not positive semi-definite");
    if (spec.strict && min_eig <= kStrictMinEigenvalue)
        fail(Errc::NotStrict, "strict mode requires sigma_L to be strictly positive definite");

    if (stability_margin(companion_matrix(spec)) >= 0.0)
        fail(Errc::Unstable, "companion matrix has an eigenvalue with non-negative real part");
}

// Companion triple plus the cached stationary covariance. For p = 1 this
// degenerates to A = -A_1 with B = C = I_k.
inline StateSpace build_state_space(const MCARSpec& spec) {
    validate_spec(spec);
    const int k = spec.k;
    const int p = spec.p;

    StateSpace ss;
    ss.k = k;
    ss.p = p;
    ss.A = companion_matrix(spec);
    ss.B = selector_E(p, k, p);
    ss.C = selector_E(1, k, p).transpose();
    ss.sigma_L = spec.sigma_L;
    ss.gamma0 = solve_lyapunov(ss.A, ss.B * spec.sigma_L * ss.B.transpose());
    return ss;
}

// c_XX(t) = e^{At} Gamma(0) for t >= 0 and c_XX(t) = c_XX(-t)^T for t < 0.
inline Matrix autocovariance(const StateSpace& ss, double t) {
    if (t >= 0.0) return expm(ss.A * t) * ss.gamma0;
    return (expm(ss.A * (-t)) * ss.gamma0).transpose();
}

// Spectral density of Y, resolvent form:
//   f(lambda) = (1/2pi) C (i lambda I - A)^{-1} B sigma_L B^T (-i lambda I - A^T)^{-1} C^T.
// The returned matrix is Hermitian positive semi-definite.
inline ComplexMatrix spectral_density(const StateSpace& ss, double lambda) {
    using Complex = std::complex<double>;
    const Eigen::Index n = ss.A.rows();
    ComplexMatrix shifted = (-ss.A).cast<Complex>();
    shifted.diagonal().array() += Complex(0.0, lambda);

    Eigen::PartialPivLU<ComplexMatrix> lu(shifted);
    const ComplexMatrix resolvent_b = lu.solve(ss.B.cast<Complex>());
    if (!resolvent_b.allFinite()) fail(Errc::SingularResolvent, "resolvent solve failed");

    const ComplexMatrix g = ss.C.cast<Complex>() * resolvent_b;
    ComplexMatrix f = g * ss.sigma_L.cast<Complex>() * g.adjoint();
    f /= 2.0 * std::numbers::pi;
    f = (0.5 * (f + f.adjoint())).eval();
    return f;
}

// Same density from the autoregressive polynomial,
//   f(lambda) = (1/2pi) P(i lambda)^{-1} sigma_L (P(-i lambda)^{-1})^T,
// with P(z) = I z^p + A_1 z^{p-1} + ... + A_p. Used as the cross-check route.
inline ComplexMatrix spectral_density_polynomial(const MCARSpec& spec, double lambda) {
    using Complex = std::complex<double>;
    const Complex z(0.0, lambda);

    ComplexMatrix poly_pos = ComplexMatrix::Zero(spec.k, spec.k);
    ComplexMatrix poly_neg = ComplexMatrix::Zero(spec.k, spec.k);
    Complex zp_pos(1.0, 0.0);
    Complex zp_neg(1.0, 0.0);
    for (int j = spec.p; j >= 1; --j) {
        poly_pos += zp_pos * spec.ar_coeffs[static_cast<std::size_t>(j - 1)].cast<Complex>();
        poly_neg += zp_neg * spec.ar_coeffs[static_cast<std::size_t>(j - 1)].cast<Complex>();
        zp_pos *= z;
        zp_neg *= -z;
    }
    poly_pos += zp_pos * ComplexMatrix::Identity(spec.k, spec.k);
    poly_neg += zp_neg * ComplexMatrix::Identity(spec.k, spec.k);

    const ComplexMatrix inv_pos = poly_pos.partialPivLu().solve(ComplexMatrix::Identity(spec.k, spec.k));
    const ComplexMatrix inv_neg = poly_neg.partialPivLu().solve(ComplexMatrix::Identity(spec.k, spec.k));
    ComplexMatrix f = inv_pos * spec.sigma_L.cast<Complex>() * inv_neg.transpose();
    f /= 2.0 * std::numbers::pi;
    return f;
}

// Coefficients Theta_j(h) = C e^{Ah} E_j of the best linear h-step predictor
// of Y given the full state: at h = 0 they reduce to [I, 0, ..., 0].
inline std::vector<Matrix> predictor_coefficients(const StateSpace& ss, double h) {
    if (h < 0.0) fail(Errc::NegativeHorizon, "predictor horizon must be non-negative");
    const Matrix full = ss.C * expm(ss.A * h); // k x kp
    std::vector<Matrix> theta;
    theta.reserve(static_cast<std::size_t>(ss.p));
    for (int j = 0; j < ss.p; ++j)
        theta.push_back(full.block(0, static_cast<Eigen::Index>(ss.k) * j, ss.k, ss.k));
    return theta;
}

struct SampledVar1 {
    Matrix transition; // e^{Ah}
    Matrix noise_cov;  // Q(h) = int_0^h e^{Au} B sigma_L B^T e^{A^T u} du
};

// Exact VAR(1) dynamics of the h-sampled state process.
inline SampledVar1 sampled_var1(const StateSpace& ss, double h) {
    if (h <= 0.0) fail(Errc::NegativeHorizon, "sampling step must be positive");
    SampledVar1 out;
    out.transition = expm(ss.A * h);
    out.noise_cov = gramian(ss.A, ss.B * ss.sigma_L * ss.B.transpose(), h);
    return out;
}

// ---------------------------------------------------------------------------
// Model-spec text format. Whitespace-separated tokens; '#' starts a comment
// that runs to end of line. Keys: k, p, ar_coeffs (p row-major k x k blocks),
// sigma_L (row-major k x k), strict (true/false/1/0, default true). k and p
// must appear before the matrix fields. Numbers accept decimal or scientific
// notation and parse locale-independently.
// ---------------------------------------------------------------------------

namespace detail {

class TokenStream {
  public:
    explicit TokenStream(std::istream& in) : in_(in) {}

    bool next(std::string& token) {
        token.clear();
        int c = in_.get();
        while (c != EOF) {
            if (c == '#') {
                while (c != EOF && c != '\n') c = in_.get();
                continue;
            }
            if (std::isspace(c)) {
                c = in_.get();
                continue;
            }
            break;
        }
        if (c == EOF) return false;
        while (c != EOF && !std::isspace(c) && c != '#') {
            token.push_back(static_cast<char>(c));
            c = in_.get();
        }
        if (c == '#') in_.unget();
        return true;
    }

  private:
    std::istream& in_;
};

inline double parse_double_token(const std::string& token) {
    double value = 0.0;
    const char* begin = token.data();
    const char* end = begin + token.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end)
        fail(Errc::ParseFailure, "bad numeric token '" + token + "'");
    return value;
}

inline int parse_int_token(const std::string& token) {
    int value = 0;
    const char* begin = token.data();
    const char* end = begin + token.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end)
        fail(Errc::ParseFailure, "bad integer token '" + token + "'");
    return value;
}

inline Matrix read_matrix(TokenStream& tokens, int rows, int cols, const std::string& key) {
    Matrix m(rows, cols);
    std::string token;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            if (!tokens.next(token))
                fail(Errc::ParseFailure, "unexpected end of input inside " + key);
            m(r, c) = parse_double_token(token);
        }
    return m;
}

} // namespace detail

inline MCARSpec parse_model_spec(std::istream& in) {
    detail::TokenStream tokens(in);
    MCARSpec spec;
    bool have_k = false, have_p = false, have_ar = false, have_sigma = false;

    std::string key;
    while (tokens.next(key)) {
        std::string token;
        if (key == "k") {
            if (!tokens.next(token)) fail(Errc::ParseFailure, "missing value for k");
            spec.k = detail::parse_int_token(token);
            have_k = true;
        } else if (key == "p") {
            if (!tokens.next(token)) fail(Errc::ParseFailure, "missing value for p");
            spec.p = detail::parse_int_token(token);
            have_p = true;
        } else if (key == "ar_coeffs") {
            if (!have_k || !have_p)
                fail(Errc::ParseFailure, "k and p must be declared before ar_coeffs");
            if (spec.k < 1 || spec.p < 1) fail(Errc::ParseFailure, "k and p must be positive");
            spec.ar_coeffs.clear();
            for (int j = 0; j < spec.p; ++j)
                spec.ar_coeffs.push_back(detail::read_matrix(tokens, spec.k, spec.k, "ar_coeffs"));
            have_ar = true;
        } else if (key == "sigma_L") {
            if (!have_k) fail(Errc::ParseFailure, "k must be declared before sigma_L");
            if (spec.k < 1) fail(Errc::ParseFailure, "k must be positive");
            spec.sigma_L = detail::read_matrix(tokens, spec.k, spec.k, "sigma_L");
            have_sigma = true;
        } else if (key == "strict") {
            if (!tokens.next(token)) fail(Errc::ParseFailure, "missing value for strict");
            if (token == "true" || token == "1")
                spec.strict = true;
            else if (token == "false" || token == "0")
                spec.strict = false;
            else
                fail(Errc::ParseFailure, "strict must be true/false/1/0");
        } else {
            fail(Errc::ParseFailure, "unknown key '" + key + "'");
        }
    }
    if (!have_k || !have_p || !have_ar || !have_sigma)
        fail(Errc::ParseFailure, "model spec needs k, p, ar_coeffs and sigma_L");
    return spec;
}

inline MCARSpec load_model_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::ParseFailure, "cannot open model file '" + path + "'");
    return parse_model_spec(in);
}

inline std::string format_model_spec(const MCARSpec& spec) {
    std::ostringstream out;
    out.precision(17);
    out << "k " << spec.k << "\n";
    out << "p " << spec.p << "\n";
    out << "ar_coeffs\n";
    for (const Matrix& a : spec.ar_coeffs) {
        for (int r = 0; r < spec.k; ++r) {
            for (int c = 0; c < spec.k; ++c) out << (c ? " " : "") << a(r, c);
            out << "\n";
        }
    }
    out << "sigma_L\n";
    for (int r = 0; r < spec.k; ++r) {
        for (int c = 0; c < spec.k; ++c) out << (c ? " " : "") << spec.sigma_L(r, c);
        out << "\n";
    }
    out << "strict " << (spec.strict ? "true" : "false") << "\n";
    return out.str();
}

} // namespace mcargraph
