#pragma once

// Edge criteria mapping model parameters to mixed graphs. Four builders:
//
//   local_orthogonality_graph  a -> b iff some coefficient entry [A_j]_{ba}
//                              is nonzero; a -- b iff [Sigma_L]_{ab} nonzero.
//   orthogonality_graph        a -> b iff some companion power has a nonzero
//                              entry [A^alpha]_{b,k(j-1)+a}; a -- b iff some
//                              scaled entry of C A^alpha B Sigma_L B' (A')^beta C'
//                              is nonzero. Powers run to kp-1.
//   ou_orthogonality_graph     order-one shortcut with powers up to k-1.
//   sampled_graph              discrete-time rule on e^{Ah} and the step-h
//                              noise covariance Q(h).
//
// All zero tests are |entry| > tol times a per-power scale so that large
// powers cannot manufacture spurious edges. Every present edge records the
// first certifying index pair in lexicographic order and the entry value.

#include <cmath>
#include <map>
#include <string>

#include "mcargraph/errors.hpp"
#include "mcargraph/matrix_kernels.hpp"
#include "mcargraph/mcar_model.hpp"
#include "mcargraph/mixed_graph.hpp"

namespace mcargraph {

inline constexpr double kDefaultEdgeTol = 1e-9;

struct EdgeKey {
    char kind = 'D'; // 'D' directed (a, b) = a -> b, 'U' undirected with a < b
    int a = 0;
    int b = 0;
    auto operator<=>(const EdgeKey&) const = default;
};

struct Witness {
    int first = 0;
    int second = 0;
    double entry = 0.0;
};

struct EdgeCriterionReport {
    MixedGraph graph;
    std::map<EdgeKey, Witness> witness;
    double tolerance_used = 0.0;
};

namespace detail {

inline void check_tolerance(double tol) {
    if (!(tol >= 0.0)) fail(Errc::OutOfRange, "tolerance must be non-negative");
}

// Scales max(1, |A|_F^alpha) for alpha = 0..max_alpha.
inline std::vector<double> power_scales(const Matrix& m, int max_alpha) {
    const double norm = m.norm();
    std::vector<double> s(static_cast<std::size_t>(max_alpha) + 1);
    double acc = 1.0;
    for (int a = 0; a <= max_alpha; ++a) {
        s[static_cast<std::size_t>(a)] = std::max(1.0, acc);
        acc *= norm;
    }
    return s;
}

inline void require_strict_noise(const MCARSpec& spec) {
    if (min_symmetric_eigenvalue(spec.sigma_L) <= kStrictMinEigenvalue)
        fail(Errc::NotStrict, "criterion requires a strictly positive definite sigma_L");
}

// Shared core of the companion-power criteria. Directed edges scan powers
// 1..max_power with block columns j = 1..p; undirected edges scan ordered
// power pairs (alpha, beta) in 0..max_power of the top-left noise blocks.
inline EdgeCriterionReport companion_power_graph(const MCARSpec& spec, double tol, int max_power) {
    const int k = spec.k;
    const int p = spec.p;
    const Matrix comp = companion_matrix(spec);
    const auto powers = power_stack(comp, max_power);
    const auto s = power_scales(comp, max_power);
    const double sigma_scale = std::max(1.0, spec.sigma_L.norm());

    EdgeCriterionReport report;
    report.tolerance_used = tol;
    report.graph.n = k;

    for (int a = 1; a <= k; ++a)
        for (int b = 1; b <= k; ++b) {
            if (a == b) continue;
            bool found = false;
            for (int alpha = 1; alpha <= max_power && !found; ++alpha)
                for (int j = 1; j <= p && !found; ++j) {
                    const double entry =
                        powers[static_cast<std::size_t>(alpha)](b - 1, k * (j - 1) + a - 1);
                    if (std::abs(entry) > tol * s[static_cast<std::size_t>(alpha)]) {
                        report.graph.add_directed(a, b);
                        report.witness[{'D', a, b}] = {alpha, j, entry};
                        found = true;
                    }
                }
        }

    // Top k rows of A^alpha restricted to the last block column equal the
    // noise-loading blocks C A^alpha B.
    std::vector<Matrix> loading(static_cast<std::size_t>(max_power) + 1);
    for (int alpha = 0; alpha <= max_power; ++alpha)
        loading[static_cast<std::size_t>(alpha)] =
            powers[static_cast<std::size_t>(alpha)].block(0, k * (p - 1), k, k);

    std::vector<std::vector<bool>> done(static_cast<std::size_t>(k) + 1,
                                        std::vector<bool>(static_cast<std::size_t>(k) + 1, false));
    for (int alpha = 0; alpha <= max_power; ++alpha)
        for (int beta = 0; beta <= max_power; ++beta) {
            const Matrix t = loading[static_cast<std::size_t>(alpha)] * spec.sigma_L
                           * loading[static_cast<std::size_t>(beta)].transpose();
            const double threshold = tol * s[static_cast<std::size_t>(alpha)]
                                   * s[static_cast<std::size_t>(beta)] * sigma_scale;
            for (int a = 1; a <= k; ++a)
                for (int b = a + 1; b <= k; ++b) {
                    if (done[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)]) continue;
                    const double entry = t(a - 1, b - 1);
                    if (std::abs(entry) > threshold) {
                        report.graph.add_undirected(a, b);
                        report.witness[{'U', a, b}] = {alpha, beta, entry};
                        done[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = true;
                    }
                }
        }
    return report;
}

} // namespace detail

// Zero-pattern criterion on the coefficients themselves. Directed witness is
// (j, 0) for the certifying coefficient block, undirected witness (0, 0).
inline EdgeCriterionReport local_orthogonality_graph(const MCARSpec& spec,
                                                     double tol = kDefaultEdgeTol) {
    validate_spec(spec);
    detail::check_tolerance(tol);
    const int k = spec.k;

    EdgeCriterionReport report;
    report.tolerance_used = tol;
    report.graph.n = k;

    for (int a = 1; a <= k; ++a)
        for (int b = 1; b <= k; ++b) {
            if (a == b) continue;
            for (int j = 1; j <= spec.p; ++j) {
                const double entry = spec.ar_coeffs[static_cast<std::size_t>(j - 1)](b - 1, a - 1);
                if (std::abs(entry) > tol) {
                    report.graph.add_directed(a, b);
                    report.witness[{'D', a, b}] = {j, 0, entry};
                    break;
                }
            }
        }

    for (int a = 1; a <= k; ++a)
        for (int b = a + 1; b <= k; ++b) {
            const double entry = spec.sigma_L(a - 1, b - 1);
            if (std::abs(entry) > tol) {
                report.graph.add_undirected(a, b);
                report.witness[{'U', a, b}] = {0, 0, entry};
            }
        }
    return report;
}

inline EdgeCriterionReport orthogonality_graph(const MCARSpec& spec, double tol = kDefaultEdgeTol) {
    validate_spec(spec);
    detail::check_tolerance(tol);
    detail::require_strict_noise(spec);
    return detail::companion_power_graph(spec, tol, spec.k * spec.p - 1);
}

// Order-one fast path: the companion matrix is k x k, so powers beyond k-1
// add nothing and the scan stops at k-1.
inline EdgeCriterionReport ou_orthogonality_graph(const MCARSpec& spec,
                                                  double tol = kDefaultEdgeTol) {
    if (spec.p != 1) fail(Errc::WrongOrder, "fast path requires order p = 1");
    validate_spec(spec);
    detail::check_tolerance(tol);
    detail::require_strict_noise(spec);
    return detail::companion_power_graph(spec, tol, spec.k - 1);
}

// Discrete-time rule at sampling step h: directed a -> b iff the transition
// matrix e^{Ah} has a nonzero (b, a)-block entry, undirected a -- b iff the
// step noise covariance Q(h) does at (a, b). Proved for order one; the
// general-order variant is experimental and carries no subset guarantee.
inline EdgeCriterionReport sampled_graph(const MCARSpec& spec, double h,
                                         double tol = kDefaultEdgeTol,
                                         bool allow_general_order = false) {
    if (spec.p != 1 && !allow_general_order)
        fail(Errc::WrongOrder, "sampled criterion is proved only for order p = 1");
    if (!(h > 0.0)) fail(Errc::NegativeHorizon, "sampling step must be positive");
    validate_spec(spec);
    detail::check_tolerance(tol);

    const int k = spec.k;
    const StateSpace ss = build_state_space(spec);
    const Matrix trans = expm(ss.A * h);
    const Matrix q = gramian(ss.A, ss.B * ss.sigma_L * ss.B.transpose(), h);

    EdgeCriterionReport report;
    report.tolerance_used = tol;
    report.graph.n = k;

    for (int a = 1; a <= k; ++a)
        for (int b = 1; b <= k; ++b) {
            if (a == b) continue;
            for (int j = 1; j <= spec.p; ++j) {
                const double entry = trans(b - 1, k * (j - 1) + a - 1);
                if (std::abs(entry) > tol) {
                    report.graph.add_directed(a, b);
                    report.witness[{'D', a, b}] = {j, 0, entry};
                    break;
                }
            }
        }

    for (int a = 1; a <= k; ++a)
        for (int b = a + 1; b <= k; ++b) {
            const double entry = q(a - 1, b - 1);
            if (std::abs(entry) > tol) {
                report.graph.add_undirected(a, b);
                report.witness[{'U', a, b}] = {0, 0, entry};
            }
        }
    return report;
}

inline bool check_nesting(const MixedGraph& inner, const MixedGraph& outer) {
    if (inner.n != outer.n) fail(Errc::VertexMismatch, "graphs have different vertex counts");
    for (const auto& e : inner.directed)
        if (!outer.directed.count(e)) return false;
    for (const auto& e : inner.undirected)
        if (!outer.undirected.count(e)) return false;
    return true;
}

inline std::string to_dot(const MixedGraph& g, const std::string& name = "G") {
    std::string out = "digraph " + name + " {\n";
    for (int v = 1; v <= g.n; ++v) out += "  " + std::to_string(v) + ";\n";
    for (const auto& [a, b] : g.directed)
        out += "  " + std::to_string(a) + " -> " + std::to_string(b) + ";\n";
    for (const auto& [a, b] : g.undirected)
        out += "  " + std::to_string(a) + " -- " + std::to_string(b) + " [style=dashed];\n";
    return out + "}\n";
}

inline std::string to_edge_lines(const MixedGraph& g) {
    std::string out;
    for (const auto& [a, b] : g.directed)
        out += "D " + std::to_string(a) + " " + std::to_string(b) + "\n";
    for (const auto& [a, b] : g.undirected)
        out += "U " + std::to_string(a) + " " + std::to_string(b) + "\n";
    return out;
}

} // namespace mcargraph
