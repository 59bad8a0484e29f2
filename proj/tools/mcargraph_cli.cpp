// Command-line front end: model validation, graph construction, separation
// queries, Markov readouts, path simulation, and density checks.
//
// Exit codes: 0 success, 1 domain error (unstable model, bad query, ...),
// 2 usage error. Diagnostics go to standard error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "mcargraph/empirical.hpp"
#include "mcargraph/errors.hpp"
#include "mcargraph/graph_builder.hpp"
#include "mcargraph/mcar_model.hpp"
#include "mcargraph/mixed_graph.hpp"
#include "mcargraph/simulator.hpp"

namespace {

using namespace mcargraph;

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

MixedGraph load_graph_file(const std::string& path, int min_vertices) {
    std::ifstream in(path);
    if (!in) fail(Errc::ParseFailure, "cannot open graph file " + path);
    return parse_graph_text(in, min_vertices);
}

int max_vertex_of(const std::set<int>& s) { return s.empty() ? 0 : *s.rbegin(); }

std::string edges_inline(const MixedGraph& g) {
    std::string out;
    for (const auto& [a, b] : g.directed) {
        if (!out.empty()) out += ", ";
        out += "D " + std::to_string(a) + " " + std::to_string(b);
    }
    for (const auto& [a, b] : g.undirected) {
        if (!out.empty()) out += ", ";
        out += "U " + std::to_string(a) + " " + std::to_string(b);
    }
    return out.empty() ? "(empty)" : out;
}

int cmd_validate(const std::string& model_path) {
    const MCARSpec spec = load_model_spec(model_path);
    MCARSpec relaxed = spec;
    relaxed.strict = false;
    bool causal = true;
    try {
        validate_spec(relaxed);
    } catch (const Error& e) {
        if (e.code() != Errc::Unstable) throw;
        causal = false;
    }
    const double margin = stability_margin(companion_matrix(spec));
    const double min_eig = min_symmetric_eigenvalue(spec.sigma_L);
    const bool strict = min_eig > kStrictMinEigenvalue;

    std::cout << "k: " << spec.k << "\n";
    std::cout << "p: " << spec.p << "\n";
    std::cout << "stability_margin: " << fmt17(margin) << "\n";
    std::cout << "sigma_L_min_eigenvalue: " << fmt17(min_eig) << "\n";
    std::cout << "causal: " << (causal ? "yes" : "no") << "\n";
    std::cout << "strict: " << (strict ? "yes" : "no") << "\n";
    return causal && strict ? 0 : 1;
}

int cmd_graph(const std::string& model_path, const std::string& kind, double h, double tol,
              const std::string& out_format, bool h_given) {
    const MCARSpec spec = load_model_spec(model_path);
    EdgeCriterionReport report;
    if (kind == "og") {
        report = orthogonality_graph(spec, tol);
    } else if (kind == "local") {
        report = local_orthogonality_graph(spec, tol);
    } else {
        if (!h_given) {
            std::cerr << "error: --kind sampled requires --h\n";
            return 2;
        }
        report = sampled_graph(spec, h, tol);
    }
    if (out_format == "dot")
        std::cout << to_dot(report.graph);
    else
        std::cout << to_edge_lines(report.graph);
    return 0;
}

int cmd_msep(const std::string& graph_path, const std::string& a_text, const std::string& b_text,
             const std::string& c_text) {
    SeparationQuery q;
    q.A = parse_vertex_set(a_text);
    q.B = parse_vertex_set(b_text);
    q.C = parse_vertex_set(c_text);
    const int need = std::max({max_vertex_of(q.A), max_vertex_of(q.B), max_vertex_of(q.C)});
    const MixedGraph g = load_graph_file(graph_path, need);
    std::cout << (m_separated(g, q) ? "SEPARATED" : "CONNECTED") << "\n";
    return 0;
}

int cmd_implied(const std::string& graph_path, const std::string& kind, const std::string& a_text,
                const std::string& b_text, const std::string& c_text) {
    SeparationQuery q;
    q.A = parse_vertex_set(a_text);
    q.B = parse_vertex_set(b_text);
    q.C = parse_vertex_set(c_text);
    const int need = std::max({max_vertex_of(q.A), max_vertex_of(q.B), max_vertex_of(q.C)});
    const MixedGraph g = load_graph_file(graph_path, need);
    const GraphKind gk = kind == "local" ? GraphKind::LocalOG : GraphKind::OG;

    const ImpliedStatementSet result = implied_statements(g, q, gk);
    for (const auto& st : result.statements) std::cout << format_statement(st) << "\n";
    if (result.statements.empty()) {
        if (result.no_rule_applies)
            std::cout << "no rule applies: " << result.note << "\n";
        else
            std::cout << "nothing implied"
                      << (result.note.empty() ? "" : ": " + result.note) << "\n";
    }
    return 0;
}

int cmd_simulate(const std::string& model_path, double h, int steps, std::uint64_t seed,
                 const std::string& driver_text, int substeps, const std::string& out_path) {
    const MCARSpec spec = load_model_spec(model_path);
    const StateSpace ss = build_state_space(spec);

    SamplePath path;
    if (driver_text == "brownian") {
        path = simulate_exact_gaussian(ss, h, steps, seed);
    } else if (driver_text.rfind("cpoisson:", 0) == 0) {
        const std::string rate_text = driver_text.substr(9);
        double rate = 0.0;
        try {
            std::size_t pos = 0;
            rate = std::stod(rate_text, &pos);
            if (pos != rate_text.size()) throw std::invalid_argument(rate_text);
        } catch (const std::exception&) {
            std::cerr << "error: bad rate in --driver " << driver_text << "\n";
            return 2;
        }
        if (!(rate > 0.0)) {
            std::cerr << "error: cpoisson rate must be positive\n";
            return 2;
        }
        const LevyDriver driver = LevyDriver::compound_poisson(rate, ss.sigma_L / rate);
        std::string warning;
        path = simulate_euler_levy(ss, driver, h, steps, substeps, seed, &warning);
        if (!warning.empty()) std::cerr << "warning: " << warning << "\n";
    } else {
        std::cerr << "error: --driver must be brownian or cpoisson:RATE\n";
        return 2;
    }

    std::ofstream out(out_path);
    if (!out) fail(Errc::ParseFailure, "cannot open output file " + out_path);
    write_csv(path, out);
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

int cmd_check_assumption(const std::string& model_path, double lmax, double step) {
    const MCARSpec spec = load_model_spec(model_path);
    const StateSpace ss = build_state_space(spec);
    if (ss.k < 2) fail(Errc::QueryInvalid, "singleton-vs-rest pairs need k >= 2");

    bool all_ok = true;
    for (int v = 1; v <= ss.k; ++v) {
        std::set<int> a = {v};
        std::set<int> b;
        for (int w = 1; w <= ss.k; ++w)
            if (w != v) b.insert(w);
        const AssumptionReport report = assumption_density_check(ss, a, b, lmax, step);
        std::cout << format_assumption_report(report) << "\n";
        all_ok = all_ok && report.satisfied;
    }
    return all_ok ? 0 : 1;
}

int cmd_reproduce_figure1() {
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

    MixedGraph expected_og;
    expected_og.n = 3;
    expected_og.add_directed(1, 2);
    expected_og.add_directed(1, 3);
    expected_og.add_directed(2, 3);
    expected_og.add_directed(3, 2);
    expected_og.add_undirected(1, 2);
    expected_og.add_undirected(1, 3);
    expected_og.add_undirected(2, 3);

    MixedGraph expected_local;
    expected_local.n = 3;
    expected_local.add_directed(1, 3);
    expected_local.add_directed(2, 3);
    expected_local.add_directed(3, 2);
    expected_local.add_undirected(1, 3);

    const MixedGraph og = orthogonality_graph(spec).graph;
    const MixedGraph local = local_orthogonality_graph(spec).graph;

    const bool og_ok = og == expected_og;
    const bool local_ok = local == expected_local;
    std::cout << "OG: " << edges_inline(og) << (og_ok ? " [MATCH]" : " [MISMATCH]") << "\n";
    std::cout << "Local: " << edges_inline(local) << (local_ok ? " [MATCH]" : " [MISMATCH]")
              << "\n";
    return og_ok && local_ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Granger-causality graphs for continuous-time autoregressions"};
    app.require_subcommand(1);
    app.set_help_flag("--help", "print help");

    std::string model_path, graph_path, out_path;
    std::string kind = "og", out_format = "edges", driver_text = "brownian";
    std::string a_text, b_text, c_text;
    double h = 0.0, tol = kDefaultEdgeTol, lmax = 100.0, grid_step = 0.05;
    int steps = 0, substeps = 16;
    std::uint64_t seed = 1;
    bool h_given = false;

    auto* validate = app.add_subcommand("validate", "Check a model file, print its summary");
    validate->add_option("model", model_path, "model file")->required();

    auto* graph = app.add_subcommand("graph", "Emit an edge-criterion graph for a model");
    graph->add_option("model", model_path, "model file")->required();
    graph->add_option("--kind", kind, "og, local, or sampled")
        ->check(CLI::IsMember({"og", "local", "sampled"}));
    graph->add_option("--h", h, "sampling step for --kind sampled")
        ->check(CLI::PositiveNumber)
        ->each([&](const std::string&) { h_given = true; });
    graph->add_option("--tol", tol, "zero tolerance");
    graph->add_option("--out", out_format, "dot or edges")
        ->check(CLI::IsMember({"dot", "edges"}));

    auto* msep = app.add_subcommand("msep", "Answer an m-separation query on a graph file");
    msep->add_option("graph", graph_path, "graph file, lines D a b / U a b")->required();
    msep->add_option("--a", a_text, "comma list, e.g. 1,2")->required();
    msep->add_option("--b", b_text, "comma list")->required();
    msep->add_option("--c", c_text, "comma list, may be empty");

    auto* implied = app.add_subcommand("implied", "Print statements implied by a separation query");
    implied->add_option("graph", graph_path, "graph file")->required();
    implied->add_option("--kind", kind, "og or local")
        ->check(CLI::IsMember({"og", "local"}));
    implied->add_option("--a", a_text, "comma list")->required();
    implied->add_option("--b", b_text, "comma list")->required();
    implied->add_option("--c", c_text, "comma list, may be empty");

    auto* simulate = app.add_subcommand("simulate", "Write a sample path as CSV");
    simulate->add_option("model", model_path, "model file")->required();
    simulate->add_option("--h", h, "observation step")->required()->check(CLI::PositiveNumber);
    simulate->add_option("--steps", steps, "number of steps")->required()->check(CLI::PositiveNumber);
    simulate->add_option("--seed", seed, "random seed");
    simulate->add_option("--driver", driver_text, "brownian or cpoisson:RATE");
    simulate->add_option("--substeps", substeps, "Euler substeps per step")->check(CLI::PositiveNumber);
    simulate->add_option("--out", out_path, "output CSV file")->required();

    auto* check = app.add_subcommand("check-assumption", "Density regularity check per component");
    check->add_option("model", model_path, "model file")->required();
    check->add_option("--lmax", lmax, "frequency grid half-width")->check(CLI::PositiveNumber);
    check->add_option("--step", grid_step, "frequency grid step")->check(CLI::PositiveNumber);

    auto* figure = app.add_subcommand("reproduce-figure1",
                                      "Rebuild the reference three-component example and compare "
                                      "its two graphs against the expected edge lists");
    for (CLI::App* sub : {validate, graph, msep, implied, simulate, check, figure})
        sub->set_help_flag("--help", "print help");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (app.got_subcommand(validate)) return cmd_validate(model_path);
        if (app.got_subcommand(graph)) return cmd_graph(model_path, kind, h, tol, out_format, h_given);
        if (app.got_subcommand(msep)) return cmd_msep(graph_path, a_text, b_text, c_text);
        if (app.got_subcommand(implied)) return cmd_implied(graph_path, kind, a_text, b_text, c_text);
        if (app.got_subcommand(simulate))
            return cmd_simulate(model_path, h, steps, seed, driver_text, substeps, out_path);
        if (app.got_subcommand(check)) return cmd_check_assumption(model_path, lmax, grid_step);
        if (app.got_subcommand(figure)) return cmd_reproduce_figure1();
    } catch (const mcargraph::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
