#include <catch2/catch_amalgamated.hpp>

#include "mcargraph/graph_builder.hpp"
#include "mcargraph/rng.hpp"
#include "matchers.hpp"
#include "oracles.hpp"

#include <sstream>

using namespace mcargraph;

namespace {

MCARSpec reference_ou3() {
    MCARSpec spec;
    spec.k = 3;
    spec.p = 1;
    Matrix a1(3, 3);
    a1 << 2, 0, 0,
          0, 2, -1,
          -1, -1, 2;
    spec.ar_coeffs = {a1};
    spec.sigma_L = Matrix(3, 3);
    spec.sigma_L << 1, 0, 0.5,
                    0, 1, 0,
                    0.5, 0, 1;
    return spec;
}

MixedGraph graph_of(std::initializer_list<std::pair<int, int>> directed,
                    std::initializer_list<std::pair<int, int>> undirected, int n) {
    MixedGraph g;
    g.n = n;
    for (const auto& [a, b] : directed) g.add_directed(a, b);
    for (const auto& [a, b] : undirected) g.add_undirected(a, b);
    return g;
}

MCARSpec diagonal_spec(int k, int p) {
    MCARSpec spec;
    spec.k = k;
    spec.p = p;
    for (int j = 0; j < p; ++j) spec.ar_coeffs.push_back(Matrix::Identity(k, k) * (j + 2));
    spec.sigma_L = Matrix::Identity(k, k);
    return spec;
}

} // namespace

TEST_CASE("the reference model reproduces both published edge sets", "[graph]") {
    const MCARSpec spec = reference_ou3();

    const EdgeCriterionReport og = orthogonality_graph(spec);
    CHECK(og.graph == graph_of({{1, 2}, {1, 3}, {2, 3}, {3, 2}}, {{1, 2}, {1, 3}, {2, 3}}, 3));

    const EdgeCriterionReport local = local_orthogonality_graph(spec);
    CHECK(local.graph == graph_of({{1, 3}, {2, 3}, {3, 2}}, {{1, 3}}, 3));
}

TEST_CASE("witnesses record the first certifying index and entry", "[graph]") {
    const MCARSpec spec = reference_ou3();
    const EdgeCriterionReport og = orthogonality_graph(spec);

    const Witness w12 = og.witness.at({'D', 1, 2});
    CHECK(w12.first == 2);
    CHECK(w12.second == 1);
    CHECK(w12.entry == Catch::Approx(1.0).margin(1e-12));

    const Witness u12 = og.witness.at({'U', 1, 2});
    CHECK(u12.first == 0);
    CHECK(u12.second == 1);
    CHECK(u12.entry == Catch::Approx(0.5).margin(1e-12));

    const EdgeCriterionReport local = local_orthogonality_graph(spec);
    const Witness l13 = local.witness.at({'D', 1, 3});
    CHECK(l13.first == 1);
    CHECK(l13.entry == Catch::Approx(-1.0).margin(1e-15));
    CHECK(local.witness.at({'U', 1, 3}).entry == Catch::Approx(0.5).margin(1e-15));

    for (const auto& [key, witness] : og.witness)
        CHECK(std::abs(witness.entry) > og.tolerance_used);
}

TEST_CASE("diagonal models produce empty graphs", "[graph]") {
    const MCARSpec spec = diagonal_spec(3, 2);
    CHECK(local_orthogonality_graph(spec).graph == graph_of({}, {}, 3));
    CHECK(orthogonality_graph(spec).graph == graph_of({}, {}, 3));
    const MCARSpec ou = diagonal_spec(4, 1);
    CHECK(ou_orthogonality_graph(ou).graph == graph_of({}, {}, 4));
}

TEST_CASE("a lagged coefficient entry creates exactly one local edge", "[graph]") {
    MCARSpec spec;
    spec.k = 2;
    spec.p = 2;
    Matrix a2 = Matrix::Zero(2, 2);
    a2(1, 0) = 1.0;
    spec.ar_coeffs = {Matrix::Identity(2, 2) * 2.0, a2 + Matrix::Identity(2, 2)};
    spec.sigma_L = Matrix::Identity(2, 2);
    const EdgeCriterionReport local = local_orthogonality_graph(spec);
    CHECK(local.graph == graph_of({{1, 2}}, {}, 2));
    CHECK(local.witness.at({'D', 1, 2}).first == 2);
}

TEST_CASE("the order-one fast path equals the general criterion", "[graph]") {
    const MCARSpec spec = reference_ou3();
    CHECK(ou_orthogonality_graph(spec).graph == orthogonality_graph(spec).graph);

    Rng rng(401);
    for (int trial = 0; trial < 10; ++trial) {
        const MCARSpec random = testutil::random_stable_spec(rng, 4, 1);
        CHECK(ou_orthogonality_graph(random).graph == orthogonality_graph(random).graph);
    }

    CHECK_THROWS_MATCHES(ou_orthogonality_graph(diagonal_spec(2, 2)), Error,
                         ErrorCodeIs(Errc::WrongOrder));
}

TEST_CASE("extending the power range never changes the graph", "[graph]") {
    Rng rng(402);
    for (int trial = 0; trial < 10; ++trial) {
        const int k = 1 + rng.next_below(3);
        const int p = 1 + rng.next_below(2);
        const MCARSpec spec = testutil::random_stable_spec(rng, k, p);
        const auto base = detail::companion_power_graph(spec, kDefaultEdgeTol, k * p - 1);
        const auto extended = detail::companion_power_graph(spec, kDefaultEdgeTol, 2 * k * p);
        CHECK(base.graph == extended.graph);
    }
}

TEST_CASE("the full criterion requires strictly positive definite noise", "[graph]") {
    MCARSpec spec = reference_ou3();
    spec.sigma_L = Matrix::Zero(3, 3);
    spec.sigma_L(0, 0) = 1.0;
    spec.sigma_L(1, 1) = 1.0;
    spec.strict = false;
    CHECK_THROWS_MATCHES(orthogonality_graph(spec), Error, ErrorCodeIs(Errc::NotStrict));
    CHECK_THROWS_MATCHES(ou_orthogonality_graph(spec), Error, ErrorCodeIs(Errc::NotStrict));
    CHECK_NOTHROW(local_orthogonality_graph(spec));
}

TEST_CASE("sampled_graph keeps diagonal transitions edge-free", "[graph]") {
    const MCARSpec spec = diagonal_spec(3, 1);
    const EdgeCriterionReport sampled = sampled_graph(spec, 0.5);
    CHECK(sampled.graph.directed.empty());
}

TEST_CASE("sampled edges at the reference model nest inside the full graph", "[graph]") {
    const MCARSpec spec = reference_ou3();
    const MixedGraph og = orthogonality_graph(spec).graph;
    for (double h : {0.1, 0.5, 1.0}) CHECK(check_nesting(sampled_graph(spec, h).graph, og));
}

TEST_CASE("step-noise coupling appears at second order in the step", "[graph]") {
    MCARSpec spec;
    spec.k = 2;
    spec.p = 1;
    Matrix a1(2, 2);
    a1 << 1, 0,
         -1, 1; // state matrix [[-1,0],[1,-1]]
    spec.ar_coeffs = {a1};
    spec.sigma_L = Matrix::Identity(2, 2);
    const double h = 0.01;
    const EdgeCriterionReport sampled = sampled_graph(spec, h);
    REQUIRE(sampled.graph.has_undirected(1, 2));
    // Q(h) ~ h Sigma + h^2 (A Sigma + Sigma A')/2, off-diagonal = h^2/2 here.
    CHECK(sampled.witness.at({'U', 1, 2}).entry
          == Catch::Approx(0.5 * h * h).epsilon(0.02));
}

TEST_CASE("sampled_graph rejects wrong orders and bad horizons", "[graph]") {
    CHECK_THROWS_MATCHES(sampled_graph(diagonal_spec(2, 2), 0.5), Error,
                         ErrorCodeIs(Errc::WrongOrder));
    CHECK_NOTHROW(sampled_graph(diagonal_spec(2, 2), 0.5, kDefaultEdgeTol, true));
    CHECK_THROWS_MATCHES(sampled_graph(diagonal_spec(2, 1), 0.0), Error,
                         ErrorCodeIs(Errc::NegativeHorizon));
    CHECK_THROWS_MATCHES(sampled_graph(diagonal_spec(2, 1), -1.0), Error,
                         ErrorCodeIs(Errc::NegativeHorizon));
}

TEST_CASE("check_nesting compares edge sets and vertex counts", "[graph]") {
    const MixedGraph fig_a =
        graph_of({{1, 2}, {1, 3}, {2, 3}, {3, 2}}, {{1, 2}, {1, 3}, {2, 3}}, 3);
    const MixedGraph fig_b = graph_of({{1, 3}, {2, 3}, {3, 2}}, {{1, 3}}, 3);
    CHECK(check_nesting(fig_b, fig_a));
    CHECK_FALSE(check_nesting(fig_a, fig_b));
    CHECK(check_nesting(fig_a, fig_a));
    MixedGraph small;
    small.n = 2;
    CHECK_THROWS_MATCHES(check_nesting(small, fig_a), Error, ErrorCodeIs(Errc::VertexMismatch));
}

TEST_CASE("local edges nest inside the full criterion on random models", "[graph]") {
    Rng rng(403);
    for (int trial = 0; trial < 20; ++trial) {
        const int k = 1 + rng.next_below(4);
        const int p = 1 + rng.next_below(3);
        const MCARSpec spec = testutil::random_stable_spec(rng, k, p);
        CHECK(check_nesting(local_orthogonality_graph(spec).graph,
                            orthogonality_graph(spec).graph));
    }
}

TEST_CASE("sampled edges nest inside the full criterion on random models", "[graph]") {
    Rng rng(404);
    for (int trial = 0; trial < 10; ++trial) {
        const int k = 2 + rng.next_below(4);
        const MCARSpec spec = testutil::random_stable_spec(rng, k, 1);
        const MixedGraph og = orthogonality_graph(spec).graph;
        for (double h : {0.1, 0.5, 1.0}) CHECK(check_nesting(sampled_graph(spec, h).graph, og));
    }
}

TEST_CASE("serializers emit the documented DOT and edge-line formats", "[graph]") {
    const MixedGraph g = graph_of({{1, 2}}, {{2, 3}}, 3);
    CHECK(to_dot(g) == "digraph G {\n  1;\n  2;\n  3;\n  1 -> 2;\n  2 -- 3 [style=dashed];\n}\n");
    CHECK(to_edge_lines(g) == "D 1 2\nU 2 3\n");

    std::istringstream in(to_edge_lines(g));
    CHECK(parse_graph_text(in, 3) == g);
}

TEST_CASE("undirected edges are stored canonically", "[graph]") {
    MixedGraph g;
    g.n = 3;
    g.add_undirected(3, 1);
    CHECK(g.has_undirected(1, 3));
    CHECK(g.has_undirected(3, 1));
    CHECK(g.undirected.count({1, 3}) == 1);
}
