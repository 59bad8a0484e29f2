#pragma once

// Mixed graphs on vertices 1..n with two edge species: directed a -> b and
// undirected dashed a -- b. A pair of vertices can carry up to three edges
// (a -> b, b -> a, a -- b). Edge endpoints carry marks: a directed edge has a
// solid tail at its source and an arrowhead at its target; a dashed edge has
// a dashed tail at both ends.
//
// Separation calculus: an intermediate vertex c on a walk is a collider iff
// the two adjacent edge ends at c both carry an arrowhead or a dashed tail
// (so a vertex between two dashed edges IS a collider). A walk is
// m-connecting given S iff every non-collider on it avoids S and every
// collider is in S; walks may self-intersect. m_separated answers existence
// by reachability over (vertex, incoming-mark) states; m_separated_oracle
// re-answers it by capped walk enumeration and is the cross-check route.

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "mcargraph/errors.hpp"

namespace mcargraph {

enum class EndpointMark { ArrowHead, SolidTail, DashedTail };

struct MixedGraph {
    int n = 0;
    std::set<std::pair<int, int>> directed;   // ordered (a, b) meaning a -> b
    std::set<std::pair<int, int>> undirected; // canonical (min, max)

    void check_vertex(int v) const {
        if (v < 1 || v > n) fail(Errc::OutOfRange, "vertex " + std::to_string(v) + " out of range");
    }

    void add_directed(int a, int b) {
        check_vertex(a);
        check_vertex(b);
        if (a == b) fail(Errc::OutOfRange, "self-loops are not allowed");
        directed.insert({a, b});
    }

    void add_undirected(int a, int b) {
        check_vertex(a);
        check_vertex(b);
        if (a == b) fail(Errc::OutOfRange, "self-loops are not allowed");
        undirected.insert({std::min(a, b), std::max(a, b)});
    }

    bool has_directed(int a, int b) const { return directed.count({a, b}) > 0; }
    bool has_undirected(int a, int b) const {
        return undirected.count({std::min(a, b), std::max(a, b)}) > 0;
    }

    bool operator==(const MixedGraph& other) const = default;
};

struct SeparationQuery {
    std::set<int> A;
    std::set<int> B;
    std::set<int> C;
};

enum class VertexRelation { Parents, Neighbours, Children, Ancestors, District };

namespace detail {

struct HalfEdge {
    int other;
    EndpointMark mark_here;  // mark at the vertex this list belongs to
    EndpointMark mark_other; // mark at the far endpoint
};

inline std::vector<std::vector<HalfEdge>> incidence(const MixedGraph& g) {
    std::vector<std::vector<HalfEdge>> inc(static_cast<std::size_t>(g.n) + 1);
    for (const auto& [a, b] : g.directed) {
        inc[static_cast<std::size_t>(a)].push_back({b, EndpointMark::SolidTail, EndpointMark::ArrowHead});
        inc[static_cast<std::size_t>(b)].push_back({a, EndpointMark::ArrowHead, EndpointMark::SolidTail});
    }
    for (const auto& [a, b] : g.undirected) {
        inc[static_cast<std::size_t>(a)].push_back({b, EndpointMark::DashedTail, EndpointMark::DashedTail});
        inc[static_cast<std::size_t>(b)].push_back({a, EndpointMark::DashedTail, EndpointMark::DashedTail});
    }
    return inc;
}

inline int mark_index(EndpointMark m) { return static_cast<int>(m); }

inline void check_sets(const MixedGraph& g, const std::set<int>& A, const std::set<int>& B,
                       const std::set<int>& C) {
    if (A.empty() || B.empty()) fail(Errc::QueryInvalid, "A and B must be non-empty");
    for (int v : A) g.check_vertex(v);
    for (int v : B) g.check_vertex(v);
    for (int v : C) g.check_vertex(v);
    for (int v : A)
        if (B.count(v) || C.count(v)) fail(Errc::QueryInvalid, "query sets must be disjoint");
    for (int v : B)
        if (C.count(v)) fail(Errc::QueryInvalid, "query sets must be disjoint");
}

enum class WalkMode { Any, BPointing, BiPointing };

// Reachability over (vertex, incoming-mark) states. A transition through v
// with incoming mark m_in along an edge whose near end carries m_out is legal
// iff v satisfies the walk condition: collider (both marks arrowhead or
// dashed tail) and v in S, or non-collider and v not in S.
inline bool connecting_walk_exists(const MixedGraph& g, const std::set<int>& starts,
                                   const std::set<int>& targets, const std::set<int>& cond,
                                   WalkMode mode) {
    const auto inc = incidence(g);
    const auto accepts = [&](int v, EndpointMark m) {
        if (!targets.count(v)) return false;
        return mode == WalkMode::Any || m == EndpointMark::ArrowHead;
    };

    std::vector<bool> seen(static_cast<std::size_t>(g.n) * 3 + 3, false);
    std::vector<std::pair<int, EndpointMark>> stack;

    for (int a : starts)
        for (const HalfEdge& e : inc[static_cast<std::size_t>(a)]) {
            if (mode == WalkMode::BiPointing && e.mark_here != EndpointMark::ArrowHead) continue;
            if (accepts(e.other, e.mark_other)) return true;
            const std::size_t id = static_cast<std::size_t>(e.other) * 3
                                 + static_cast<std::size_t>(mark_index(e.mark_other));
            if (!seen[id]) {
                seen[id] = true;
                stack.push_back({e.other, e.mark_other});
            }
        }

    while (!stack.empty()) {
        const auto [v, m_in] = stack.back();
        stack.pop_back();
        const bool conditioned = cond.count(v) > 0;
        for (const HalfEdge& e : inc[static_cast<std::size_t>(v)]) {
            const bool collider = m_in != EndpointMark::SolidTail && e.mark_here != EndpointMark::SolidTail;
            const bool passable = collider ? conditioned : !conditioned;
            if (!passable) continue;
            if (accepts(e.other, e.mark_other)) return true;
            const std::size_t id = static_cast<std::size_t>(e.other) * 3
                                 + static_cast<std::size_t>(mark_index(e.mark_other));
            if (!seen[id]) {
                seen[id] = true;
                stack.push_back({e.other, e.mark_other});
            }
        }
    }
    return false;
}

// Exhaustive walk search used as the independent oracle. Walks are extended
// edge by edge; the intermediate-vertex condition is evaluated directly from
// the collider definition at each extension. A walk that re-enters a
// (vertex, incoming-mark) state already on it is pruned (the loop between the
// repeats can be spliced out without changing any traversal condition), and
// a hard walk-length ceiling of 4 n (n + 1) is enforced as well.
inline bool oracle_walk_exists(const MixedGraph& g, const std::set<int>& starts,
                               const std::set<int>& targets, const std::set<int>& cond,
                               WalkMode mode) {
    const auto inc = incidence(g);
    const int max_len = 4 * g.n * (g.n + 1);
    const std::size_t budget = std::size_t(1) << 26;

    std::unordered_set<std::uint64_t> memo;
    struct Frame {
        int vertex;
        EndpointMark mark;
        std::uint32_t visited; // bitmask over (vertex, mark) pairs on the walk
        int length;
    };
    std::vector<Frame> stack;

    const auto state_bit = [](int v, EndpointMark m) {
        return std::uint32_t(1) << ((v - 1) * 3 + mark_index(m));
    };
    const auto arrow_or_dashed = [](EndpointMark m) {
        return m == EndpointMark::ArrowHead || m == EndpointMark::DashedTail;
    };

    for (int a : starts)
        for (const detail::HalfEdge& e : inc[static_cast<std::size_t>(a)]) {
            if (mode == WalkMode::BiPointing && e.mark_here != EndpointMark::ArrowHead) continue;
            if (targets.count(e.other)
                && (mode == WalkMode::Any || e.mark_other == EndpointMark::ArrowHead))
                return true;
            stack.push_back({e.other, e.mark_other, state_bit(e.other, e.mark_other), 1});
        }

    while (!stack.empty()) {
        const Frame f = stack.back();
        stack.pop_back();
        const std::uint64_t key =
            (std::uint64_t(f.visited) * 3 + static_cast<std::uint64_t>(mark_index(f.mark)))
                * static_cast<std::uint64_t>(g.n + 1)
            + static_cast<std::uint64_t>(f.vertex);
        if (!memo.insert(key).second) continue;
        if (memo.size() > budget) fail(Errc::TooLarge, "oracle walk search exceeded its state budget");
        if (f.length + 1 > max_len) continue;

        for (const detail::HalfEdge& e : inc[static_cast<std::size_t>(f.vertex)]) {
            // f.vertex becomes an intermediate vertex of the extended walk.
            const bool collider = arrow_or_dashed(f.mark) && arrow_or_dashed(e.mark_here);
            const bool legal = collider ? cond.count(f.vertex) > 0 : cond.count(f.vertex) == 0;
            if (!legal) continue;
            if (targets.count(e.other)
                && (mode == WalkMode::Any || e.mark_other == EndpointMark::ArrowHead))
                return true;
            const std::uint32_t bit = state_bit(e.other, e.mark_other);
            if (f.visited & bit) continue;
            stack.push_back({e.other, e.mark_other, f.visited | bit, f.length + 1});
        }
    }
    return false;
}

} // namespace detail

// Union of the requested relation over all vertices of A. Ancestors and
// district are reflexive (they contain A itself).
inline std::set<int> vertex_sets(const MixedGraph& g, const std::set<int>& A, VertexRelation rel) {
    for (int v : A) g.check_vertex(v);
    std::set<int> out;
    switch (rel) {
        case VertexRelation::Parents:
            for (const auto& [a, b] : g.directed)
                if (A.count(b)) out.insert(a);
            break;
        case VertexRelation::Children:
            for (const auto& [a, b] : g.directed)
                if (A.count(a)) out.insert(b);
            break;
        case VertexRelation::Neighbours:
            for (const auto& [a, b] : g.undirected) {
                if (A.count(a)) out.insert(b);
                if (A.count(b)) out.insert(a);
            }
            break;
        case VertexRelation::Ancestors: {
            out = A;
            std::vector<int> frontier(A.begin(), A.end());
            while (!frontier.empty()) {
                const int v = frontier.back();
                frontier.pop_back();
                for (const auto& [a, b] : g.directed)
                    if (b == v && out.insert(a).second) frontier.push_back(a);
            }
            break;
        }
        case VertexRelation::District: {
            out = A;
            std::vector<int> frontier(A.begin(), A.end());
            while (!frontier.empty()) {
                const int v = frontier.back();
                frontier.pop_back();
                for (const auto& [a, b] : g.undirected) {
                    if (a == v && out.insert(b).second) frontier.push_back(b);
                    if (b == v && out.insert(a).second) frontier.push_back(a);
                }
            }
            break;
        }
    }
    return out;
}

// True iff no m-connecting walk joins A and B given C.
inline bool m_separated(const MixedGraph& g, const SeparationQuery& q) {
    detail::check_sets(g, q.A, q.B, q.C);
    return !detail::connecting_walk_exists(g, q.A, q.B, q.C, detail::WalkMode::Any);
}

// Same answer by capped walk enumeration; restricted to small graphs.
inline bool m_separated_oracle(const MixedGraph& g, const SeparationQuery& q) {
    if (g.n > 8) fail(Errc::TooLarge, "oracle is limited to graphs with at most 8 vertices");
    detail::check_sets(g, q.A, q.B, q.C);
    return !detail::oracle_walk_exists(g, q.A, q.B, q.C, detail::WalkMode::Any);
}

enum class PointingMode { BPointing, BiPointing };

// BPointing: every walk from A to B whose last edge has an arrowhead at its
// B-endpoint is m-blocked given B and C. BiPointing: additionally the first
// edge has an arrowhead at its A-endpoint and the blocking set is A, B and C.
inline bool pointing_paths_blocked(const MixedGraph& g, const std::set<int>& A,
                                   const std::set<int>& B, const std::set<int>& C,
                                   PointingMode mode) {
    detail::check_sets(g, A, B, C);
    std::set<int> cond = C;
    cond.insert(B.begin(), B.end());
    if (mode == PointingMode::BiPointing) cond.insert(A.begin(), A.end());
    const auto walk_mode =
        mode == PointingMode::BPointing ? detail::WalkMode::BPointing : detail::WalkMode::BiPointing;
    return !detail::connecting_walk_exists(g, A, B, cond, walk_mode);
}

// ---------------------------------------------------------------------------
// Markov inference
// ---------------------------------------------------------------------------

struct ImpliedStatement {
    enum class Kind { GrangerNonCausal, ContempUncorrelated, CondOrthogonal };
    Kind kind;
    std::set<int> lhs;
    std::set<int> rhs;
    std::set<int> given;
    bool local = false; // local (zero-horizon) variant of the relation
    std::string rule;
};

struct ImpliedStatementSet {
    std::vector<ImpliedStatement> statements;
    bool no_rule_applies = false;
    std::string note;
};

enum class GraphKind { OG, LocalOG };

namespace detail {

inline bool dashed_edge_between(const MixedGraph& g, const std::set<int>& A, const std::set<int>& B) {
    for (int a : A)
        for (int b : B)
            if (g.has_undirected(a, b)) return true;
    return false;
}

inline std::set<int> set_union(const std::set<int>& x, const std::set<int>& y) {
    std::set<int> out = x;
    out.insert(y.begin(), y.end());
    return out;
}

inline std::set<int> full_vertex_set(const MixedGraph& g) {
    std::set<int> out;
    for (int v = 1; v <= g.n; ++v) out.insert(v);
    return out;
}

inline void emit_triple(ImpliedStatementSet& out, const SeparationQuery& q,
                        const std::set<int>& given, bool local, const std::string& rule) {
    out.statements.push_back({ImpliedStatement::Kind::GrangerNonCausal, q.A, q.B, given, local, rule});
    out.statements.push_back({ImpliedStatement::Kind::GrangerNonCausal, q.B, q.A, given, local, rule});
    out.statements.push_back({ImpliedStatement::Kind::ContempUncorrelated, q.A, q.B, given, local, rule});
}

} // namespace detail

// Statements licensed by the separation machinery for a query on a graph of
// the given kind. For the full graph: m-separation given C yields conditional
// orthogonality given C and the separation corollary's triple given A+B+C;
// blocked B-pointing walks yield one-directional non-causality; absence of
// dashed A-B edges plus blocked bi-pointing walks yields contemporaneous
// uncorrelation. For the local graph only the two proved special cases fire
// (C equal to the full complement, or parent closure inside A+B+C); any other
// local query is refused with the no-rule flag rather than guessed.
inline ImpliedStatementSet implied_statements(const MixedGraph& g, const SeparationQuery& q,
                                              GraphKind kind) {
    detail::check_sets(g, q.A, q.B, q.C);
    ImpliedStatementSet out;
    const std::set<int> abc = detail::set_union(detail::set_union(q.A, q.B), q.C);
    const bool separated = m_separated(g, q);

    if (kind == GraphKind::OG) {
        if (separated)
            out.statements.push_back({ImpliedStatement::Kind::CondOrthogonal, q.A, q.B, q.C, false,
                                      "m-separation in the full graph (global AMP Markov property)"});
        if (pointing_paths_blocked(g, q.A, q.B, q.C, PointingMode::BPointing))
            out.statements.push_back({ImpliedStatement::Kind::GrangerNonCausal, q.A, q.B, abc, false,
                                      "every B-pointing walk m-blocked given B and C (global Markov "
                                      "property, directed part)"});
        if (!detail::dashed_edge_between(g, q.A, q.B)
            && pointing_paths_blocked(g, q.A, q.B, q.C, PointingMode::BiPointing))
            out.statements.push_back({ImpliedStatement::Kind::ContempUncorrelated, q.A, q.B, abc, false,
                                      "no dashed edge between A and B and every bi-pointing walk "
                                      "m-blocked given A, B and C (global Markov property, undirected "
                                      "part)"});
        if (separated)
            detail::emit_triple(out, q, abc, false,
                                "m-separation corollary of the global Markov property");
        return out;
    }

    const std::set<int> complement = [&] {
        std::set<int> v = detail::full_vertex_set(g);
        for (int a : q.A) v.erase(a);
        for (int b : q.B) v.erase(b);
        return v;
    }();

    if (q.C == complement) {
        if (separated)
            detail::emit_triple(out, q, detail::full_vertex_set(g), true,
                                "local graph: m-separation given the full complement of A and B");
        else
            out.note = "m-separation does not hold; nothing is implied";
        return out;
    }

    const std::set<int> parents =
        detail::set_union(vertex_sets(g, q.A, VertexRelation::Parents),
                          vertex_sets(g, q.B, VertexRelation::Parents));
    const bool parents_covered =
        std::all_of(parents.begin(), parents.end(), [&](int v) { return abc.count(v) > 0; });

    if (parents_covered) {
        if (separated)
            detail::emit_triple(out, q, abc, true,
                                "local graph: parent closure of A and B contained in the query sets");
        else
            out.note = "m-separation does not hold; nothing is implied";
        return out;
    }

    out.no_rule_applies = true;
    out.note = "no proved rule covers this local-graph query";
    return out;
}

struct MarkovReadout {
    ImpliedStatement noncausal;     // complement of pa(A) and A is non-causal for A given V
    ImpliedStatement uncorrelated;  // complement of ne(A) and A is uncorrelated with A given V
};

// Block-recursive readout for a single set A: the two complement statements
// hold with the relation flavor tied to the graph kind.
inline MarkovReadout markov_readout(const MixedGraph& g, const std::set<int>& A,
                                    GraphKind kind = GraphKind::OG) {
    if (A.empty()) fail(Errc::QueryInvalid, "A must be non-empty");
    for (int v : A) g.check_vertex(v);
    const bool local = kind == GraphKind::LocalOG;
    const std::set<int> v_all = detail::full_vertex_set(g);

    std::set<int> pa_closure = detail::set_union(vertex_sets(g, A, VertexRelation::Parents), A);
    std::set<int> ne_closure = detail::set_union(vertex_sets(g, A, VertexRelation::Neighbours), A);
    std::set<int> pa_complement, ne_complement;
    for (int v : v_all) {
        if (!pa_closure.count(v)) pa_complement.insert(v);
        if (!ne_closure.count(v)) ne_complement.insert(v);
    }

    MarkovReadout out;
    out.noncausal = {ImpliedStatement::Kind::GrangerNonCausal, pa_complement, A, v_all, local,
                     "block-recursive Markov property (parent complement)"};
    out.uncorrelated = {ImpliedStatement::Kind::ContempUncorrelated, ne_complement, A, v_all, local,
                        "block-recursive Markov property (neighbour complement)"};
    return out;
}

// ---------------------------------------------------------------------------
// Text formats: graph files (one edge per line, `D a b` or `U a b`,
// '#' comments), vertex-set literals (`1,2,3`), statement rendering.
// ---------------------------------------------------------------------------

inline MixedGraph parse_graph_text(std::istream& in, int min_vertices = 0) {
    std::vector<std::pair<int, int>> directed;
    std::vector<std::pair<int, int>> undirected;
    int max_vertex = min_vertices;

    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string kind;
        if (!(ls >> kind)) continue;
        int a = 0, b = 0;
        if ((kind != "D" && kind != "U") || !(ls >> a >> b))
            fail(Errc::ParseFailure, "graph line " + std::to_string(line_no) + " is not 'D a b' or 'U a b'");
        std::string extra;
        if (ls >> extra)
            fail(Errc::ParseFailure, "trailing tokens on graph line " + std::to_string(line_no));
        if (a < 1 || b < 1 || a == b)
            fail(Errc::ParseFailure, "bad vertex pair on graph line " + std::to_string(line_no));
        max_vertex = std::max({max_vertex, a, b});
        if (kind == "D")
            directed.push_back({a, b});
        else
            undirected.push_back({a, b});
    }

    MixedGraph g;
    g.n = max_vertex;
    for (const auto& [a, b] : directed) g.add_directed(a, b);
    for (const auto& [a, b] : undirected) g.add_undirected(a, b);
    return g;
}

inline std::set<int> parse_vertex_set(const std::string& text) {
    std::set<int> out;
    std::string token;
    std::istringstream in(text);
    while (std::getline(in, token, ',')) {
        if (token.empty()) fail(Errc::ParseFailure, "empty entry in vertex set '" + text + "'");
        std::size_t pos = 0;
        int v = 0;
        try {
            v = std::stoi(token, &pos);
        } catch (const std::exception&) {
            fail(Errc::ParseFailure, "bad vertex '" + token + "'");
        }
        if (pos != token.size()) fail(Errc::ParseFailure, "bad vertex '" + token + "'");
        out.insert(v);
    }
    return out;
}

inline std::string format_vertex_set(const std::set<int>& s) {
    std::string out = "{";
    bool first = true;
    for (int v : s) {
        if (!first) out += ",";
        out += std::to_string(v);
        first = false;
    }
    return out + "}";
}

inline std::string format_statement(const ImpliedStatement& st) {
    std::string rel;
    std::string prefix = "Y";
    switch (st.kind) {
        case ImpliedStatement::Kind::GrangerNonCausal:
            rel = st.local ? "-/->0" : "-/->";
            break;
        case ImpliedStatement::Kind::ContempUncorrelated:
            rel = st.local ? "!~0" : "!~";
            break;
        case ImpliedStatement::Kind::CondOrthogonal:
            rel = "_|_";
            prefix = "L";
            break;
    }
    return prefix + format_vertex_set(st.lhs) + " " + rel + " " + prefix + format_vertex_set(st.rhs)
         + " | " + prefix + format_vertex_set(st.given) + "  [rule: " + st.rule + "]";
}

} // namespace mcargraph
