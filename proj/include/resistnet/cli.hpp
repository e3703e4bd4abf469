#ifndef RESISTNET_CLI_HPP
#define RESISTNET_CLI_HPP

#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "distribution.hpp"
#include "experiments.hpp"
#include "flowsolve.hpp"
#include "graph_io.hpp"
#include "json_writer.hpp"
#include "netgraph.hpp"
#include "sensitivity.hpp"
#include "walsh.hpp"

namespace resistnet::cli
{

enum ExitCode : int { exit_ok = 0, exit_invalid = 1, exit_nonconvergence = 2, exit_assertion = 3 };

inline const std::vector<std::string>& command_names()
{
    static const std::vector<std::string> names{"build", "resist", "walsh", "deriv-check", "alpha",
                                                "mc-var", "mc-clt", "mc-noise", "influence", "wehr"};
    return names;
}

struct ConfigEntry
{
    std::string key;
    std::string value;
    std::size_t line = 0;
};

/// `key = value` lines grouped by `[section]`; entries before any section
/// go to section "". `#` and `;` start comments.
using ConfigFile = std::map<std::string, std::vector<ConfigEntry>>;

namespace detail
{

inline std::string trim(const std::string& s)
{
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos)
        return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

} // namespace detail

inline ConfigFile parse_config(std::istream& in)
{
    ConfigFile cfg;
    std::string section;
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        auto line = raw;
        if (const auto c = line.find_first_of("#;"); c != std::string::npos)
            line = line.substr(0, c);
        line = detail::trim(line);
        if (line.empty())
            continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ParseError("unterminated section header", lineno);
            section = detail::trim(line.substr(1, line.size() - 2));
            const auto& names = command_names();
            if (std::find(names.begin(), names.end(), section) == names.end())
                throw ParseError("unknown section '" + section + "'", lineno);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("expected 'key = value'", lineno);
        ConfigEntry e{detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)), lineno};
        if (e.key.empty() || e.value.empty())
            throw ParseError("expected 'key = value'", lineno);
        if (e.key == "config")
            throw ParseError("config files cannot include other config files", lineno);
        cfg[section].push_back(std::move(e));
    }
    return cfg;
}

inline std::vector<std::size_t> parse_size_list(const std::string& s, const std::string& flag)
{
    std::vector<std::size_t> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = detail::trim(item);
        char* end = nullptr;
        const auto v = std::strtoull(item.c_str(), &end, 10);
        if (item.empty() || item.front() == '-' || end != item.c_str() + item.size())
            throw InvalidInput("flag " + flag + ": expected a comma-separated list of nonnegative integers");
        out.push_back(static_cast<std::size_t>(v));
    }
    if (out.empty())
        throw InvalidInput("flag " + flag + ": empty list");
    return out;
}

inline std::vector<double> parse_real_list(const std::string& s, const std::string& flag)
{
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = detail::trim(item);
        char* end = nullptr;
        const double v = std::strtod(item.c_str(), &end);
        if (item.empty() || end != item.c_str() + item.size() || !std::isfinite(v))
            throw InvalidInput("flag " + flag + ": expected a comma-separated list of numbers");
        out.push_back(v);
    }
    if (out.empty())
        throw InvalidInput("flag " + flag + ": empty list");
    return out;
}

struct Options
{
    std::string family;
    std::string n;
    int d = 2;
    std::string dist;
    std::string graph;
    std::string graph_out;
    std::size_t u = 0;
    std::size_t v = 0;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    unsigned workers = 0;
    std::string out;
    std::string config;
    double tol = 1e-10;
    double alpha = 1.0 / 3.0;
    std::string functional;
    std::string eps;
    double p = 2;
    std::string L;
    std::size_t trials = 50;
    std::size_t edges = 5;
    double h = 1e-4;
    double deriv_tol = 1e-6;
    std::size_t configs = 1;
    std::size_t pairs = 20;
    std::string slope_window;
    double ks_max = 0;
    double max_spread = 0;
};

struct Assertion
{
    std::string name;
    bool passed = false;
    json detail;
};

struct CommandResult
{
    json config;
    json results;
    std::vector<Assertion> assertions;
    std::function<void(std::ostream&)> csv;
};

/// Parsed invocation: options plus the set of flags actually given.
struct Invocation
{
    std::string command;
    Options opt;
    std::set<std::string> given;

    bool has(const std::string& flag) const { return given.count(flag) > 0; }

    void require(const std::string& flag) const
    {
        if (!has(flag))
            throw InvalidInput("missing required flag: " + flag);
    }
};

namespace detail
{

inline void add_flag(CLI::App& app, Options& o, const std::string& name)
{
    const std::string f = "--" + name;
    if (name == "family")
        app.add_option(f, o.family, "graph family: torus, box, path, glued_trees, wedge, zd_wired, zd_free, "
                                    "zd_periodic, parallel");
    else if (name == "n")
        app.add_option(f, o.n, "size (side, K, xmax or edge count); comma-separated list for scans");
    else if (name == "d")
        app.add_option(f, o.d, "lattice dimension")->check(CLI::Range(1, 8));
    else if (name == "dist")
        app.add_option(f, o.dist, "edge law: const:v, bernoulli:a,b,p or uniform:a,b");
    else if (name == "graph")
        app.add_option(f, o.graph, "read the network from a graph file");
    else if (name == "graph-out")
        app.add_option(f, o.graph_out, "write the network to a graph file");
    else if (name == "u")
        app.add_option(f, o.u, "source vertex (defaults to the network's terminals)");
    else if (name == "v")
        app.add_option(f, o.v, "sink vertex (defaults to the network's terminals)");
    else if (name == "samples")
        app.add_option(f, o.samples, "Monte Carlo replicas per size");
    else if (name == "seed")
        app.add_option(f, o.seed, "64-bit seed");
    else if (name == "workers")
        app.add_option(f, o.workers, "worker threads (0 = hardware concurrency); never changes results");
    else if (name == "out")
        app.add_option(f, o.out, "write the report to a .json or .csv file instead of stdout");
    else if (name == "config")
        app.add_option(f, o.config, "config file (key = value, [command] sections); flags override it");
    else if (name == "tol")
        app.add_option(f, o.tol, "relative residual tolerance of the linear solver");
    else if (name == "alpha")
        app.add_option(f, o.alpha, "wedge exponent in (0, 1/3]");
    else if (name == "functional")
        app.add_option(f, o.functional, "point or torus (default depends on the family)");
    else if (name == "eps")
        app.add_option(f, o.eps, "comma-separated noise parameters");
    else if (name == "p")
        app.add_option(f, o.p, "moment order for singleton bounds (1, 2 or 3)");
    else if (name == "L")
        app.add_option(f, o.L, "comma-separated edge distances");
    else if (name == "trials")
        app.add_option(f, o.trials, "sampled resistance configurations");
    else if (name == "edges")
        app.add_option(f, o.edges, "number of sampled base edges");
    else if (name == "step")
        app.add_option(f, o.h, "finite-difference step");
    else if (name == "deriv-tol")
        app.add_option(f, o.deriv_tol, "largest accepted relative error of derivatives");
    else if (name == "configs")
        app.add_option(f, o.configs, "random configurations to check");
    else if (name == "pairs")
        app.add_option(f, o.pairs, "edge pairs for the reciprocity check");
    else if (name == "slope-window")
        app.add_option(f, o.slope_window, "assert the fitted exponent lies in lo,hi");
    else if (name == "ks-max")
        app.add_option(f, o.ks_max, "assert the KS distance is at most this value");
    else if (name == "max-spread")
        app.add_option(f, o.max_spread, "assert max/min of beta_proxy * |V| across sizes is at most this value");
}

inline const std::map<std::string, std::vector<std::string>>& command_flags()
{
    static const std::map<std::string, std::vector<std::string>> flags{
        {"build", {"family", "n", "d", "alpha", "graph-out", "out", "config"}},
        {"resist", {"family", "n", "d", "alpha", "graph", "dist", "seed", "u", "v", "tol", "out", "config"}},
        {"walsh",
         {"family", "n", "d", "alpha", "graph", "dist", "functional", "eps", "p", "u", "v", "tol", "workers", "out",
          "config"}},
        {"deriv-check",
         {"family", "n", "d", "alpha", "graph", "dist", "seed", "configs", "step", "deriv-tol", "pairs", "u", "v", "out",
          "config"}},
        {"alpha",
         {"family", "n", "d", "alpha", "graph", "dist", "seed", "trials", "edges", "L", "workers", "tol", "out",
          "config"}},
        {"mc-var", {"family", "n", "d", "dist", "samples", "seed", "workers", "tol", "slope-window", "out", "config"}},
        {"mc-clt", {"family", "n", "d", "dist", "samples", "seed", "workers", "tol", "ks-max", "out", "config"}},
        {"mc-noise", {"family", "n", "d", "dist", "samples", "seed", "workers", "eps", "tol", "out", "config"}},
        {"influence",
         {"family", "n", "d", "dist", "samples", "seed", "workers", "tol", "max-spread", "out", "config"}},
        {"wehr", {"family", "n", "d", "dist", "samples", "seed", "workers", "tol", "out", "config"}},
    };
    return flags;
}

inline std::size_t single_size(const Invocation& inv)
{
    inv.require("n");
    const auto sizes = parse_size_list(inv.opt.n, "n");
    if (sizes.size() != 1)
        throw InvalidInput("flag n: this command takes a single size");
    return sizes.front();
}

inline Network network_from(const Invocation& inv)
{
    if (inv.has("graph")) {
        std::ifstream in(inv.opt.graph);
        if (!in)
            throw InvalidInput("cannot open graph file '" + inv.opt.graph + "'");
        return read_graph(in);
    }
    inv.require("family");
    const auto& fam = inv.opt.family;
    const auto n = single_size(inv);
    const int d = inv.opt.d;
    if (fam == "torus")
        return build_torus(n, d);
    if (fam == "box")
        return build_box(n, d);
    if (fam == "path")
        return build_path(n);
    if (fam == "glued_trees")
        return build_glued_trees(n);
    if (fam == "wedge")
        return build_wedge(inv.opt.alpha, static_cast<std::int64_t>(n));
    if (fam == "zd_wired")
        return build_zd_patch(n, d, PatchMode::wired);
    if (fam == "zd_free")
        return build_zd_patch(n, d, PatchMode::free);
    if (fam == "zd_periodic")
        return build_zd_patch(n, d, PatchMode::periodic);
    if (fam == "parallel")
        return build_parallel(n);
    throw InvalidInput("unknown family '" + fam + "'");
}

inline bool torus_mode(const Network& net) { return net.has_cuts(); }

inline ResistanceTarget target_from(const Invocation& inv, const Network& net)
{
    if (inv.has("u") || inv.has("v")) {
        inv.require("u");
        inv.require("v");
        return ResistanceTarget::point(inv.opt.u, inv.opt.v);
    }
    if (torus_mode(net))
        return ResistanceTarget::torus();
    return ResistanceTarget::terminals(net);
}

inline EdgeDistribution dist_from(const Invocation& inv)
{
    inv.require("dist");
    return parse_distribution(inv.opt.dist);
}

inline SolverOptions solver_from(const Invocation& inv)
{
    if (!(inv.opt.tol > 0 && inv.opt.tol < 1))
        throw InvalidInput("flag tol: must lie in (0, 1)");
    SolverOptions s;
    s.tolerance = inv.opt.tol;
    return s;
}

/// Random laws need an explicit seed; degenerate ones do not.
inline ResistanceVector resistances_from(const Invocation& inv, const EdgeDistribution& dist, const Network& net,
                                         std::uint64_t replica = 0)
{
    if (!dist.degenerate())
        inv.require("seed");
    return sample_resistances(dist, net, inv.opt.seed, replica);
}

inline McConfig mc_from(const Invocation& inv)
{
    McConfig c;
    inv.require("family");
    inv.require("n");
    c.family = inv.opt.family;
    c.d = inv.opt.d;
    c.sizes = parse_size_list(inv.opt.n, "n");
    c.dist = dist_from(inv);
    inv.require("samples");
    c.samples = inv.opt.samples;
    inv.require("seed");
    c.seed = inv.opt.seed;
    c.workers = inv.opt.workers;
    c.solver = solver_from(inv);
    c.validate();
    return c;
}

inline json network_summary(const Network& net)
{
    json j;
    j["kind"] = std::string(to_string(net.kind()));
    j["vertices"] = net.vertex_count();
    j["edges"] = net.edge_count();
    std::size_t loops = 0;
    for (const auto& e : net.edges())
        loops += e.is_loop() ? 1 : 0;
    j["self_loops"] = loops;
    if (net.terminals())
        j["terminals"] = {net.terminals()->first, net.terminals()->second};
    j["cuts"] = net.cuts().size();
    return j;
}

inline json mc_echo(const McConfig& c)
{
    json j;
    j["family"] = c.family;
    j["d"] = c.d;
    j["n"] = c.sizes;
    j["dist"] = c.dist.to_string();
    j["samples"] = c.samples;
    j["seed"] = c.seed;
    j["tol"] = c.solver.tolerance;
    return j;
}

inline json estimate_json(const Estimate& e) { return {{"value", e.value}, {"se", e.se}}; }

inline CommandResult cmd_build(const Invocation& inv)
{
    const auto net = network_from(inv);
    CommandResult r;
    r.config = {{"family", inv.opt.family}, {"n", inv.opt.n}, {"d", inv.opt.d}};
    r.results = network_summary(net);
    if (inv.has("graph-out")) {
        std::ofstream out(inv.opt.graph_out);
        if (!out)
            throw InvalidInput("cannot write graph file '" + inv.opt.graph_out + "'");
        write_graph(out, net);
    }
    r.csv = [net](std::ostream& os) {
        os << "edge_id,tail,head\n";
        for (const auto& e : net.edges())
            os << e.id << ',' << e.tail << ',' << e.head << '\n';
    };
    return r;
}

inline CommandResult cmd_resist(const Invocation& inv)
{
    const auto net = network_from(inv);
    const auto dist = dist_from(inv);
    const auto r = resistances_from(inv, dist, net);
    const auto target = target_from(inv, net);
    const auto rep = target_current(FlowSolver(net, r, solver_from(inv)), target);
    CommandResult res;
    res.config = {{"network", network_summary(net)}, {"dist", dist.to_string()}, {"seed", inv.opt.seed}};
    res.results = to_json(rep);
    res.results["mode"] = target.mode == ResistanceTarget::Mode::torus ? "torus" : "point";
    if (target.mode == ResistanceTarget::Mode::point)
        res.results["terminals"] = {target.u, target.v};
    const auto flow = rep.flow;
    res.csv = [flow](std::ostream& os) { write_flow_csv(os, flow); };
    return res;
}

inline json check_json(double value, double limit) { return {{"value", value}, {"limit", limit}}; }

inline CommandResult cmd_walsh(const Invocation& inv)
{
    const auto net = network_from(inv);
    const auto dist = dist_from(inv);
    if (dist.mc_only())
        throw InvalidInput("flag dist: exact decomposition needs a discrete law");
    const auto law = iid(dist, net.edge_count());
    Functional f;
    if (inv.has("functional")) {
        if (inv.opt.functional == "torus")
            f = Functional::torus();
        else if (inv.opt.functional == "point")
            f = (inv.has("u") || inv.has("v")) ? (inv.require("u"), inv.require("v"), Functional::point(inv.opt.u, inv.opt.v))
                                               : Functional::terminals(net);
        else
            throw InvalidInput("flag functional: expected point or torus");
    } else {
        f = torus_mode(net) ? Functional::torus() : Functional::terminals(net);
    }

    EnumerateOptions eo;
    eo.workers = inv.opt.workers;
    eo.solver = solver_from(inv);
    double configs = 1;
    for (const auto& d : law)
        configs *= static_cast<double>(d.atom_count());
    eo.record_currents = configs * static_cast<double>(net.edge_count()) <= static_cast<double>(std::size_t{1} << 24);
    const auto table = enumerate_table(net, law, f, eo);
    const auto dec = decompose(table, law, inv.opt.workers);
    const auto es = efron_stein_report(dec, table, law);
    const auto diam = subset_diameters(net);

    CommandResult r;
    r.config = {{"network", network_summary(net)}, {"dist", dist.to_string()}, {"functional", table.functional}};
    r.results = walsh_summary(dec, es, diam);

    const auto w = configuration_weights(table, law);
    CompensatedSum ef2_sum, total_sum;
    for (std::size_t x = 0; x < table.size(); ++x)
        ef2_sum += w[x] * table.values[x] * table.values[x];
    for (auto v : dec.norms())
        total_sum += v;
    const double ef2 = ef2_sum.value(), total = total_sum.value();
    const double tol = 1e-12;
    const double scale = std::max(1.0, ef2);
    r.assertions.push_back({"parseval", std::abs(total - ef2) <= tol * scale, check_json(std::abs(total - ef2), tol * scale)});

    double worst_delta = 0;
    for (std::size_t e = 0; e < net.edge_count(); ++e)
        worst_delta = std::max(worst_delta, std::abs(es.delta_sq[e] - dec.delta_sq(e)));
    r.assertions.push_back({"delta_identity", worst_delta <= tol * scale, check_json(worst_delta, tol * scale)});

    const auto rec = reconstruct(dec, law, inv.opt.workers);
    double worst_rec = 0;
    for (std::size_t x = 0; x < rec.size(); ++x)
        worst_rec = std::max(worst_rec, std::abs(rec[x] - table.values[x]));
    r.assertions.push_back({"reconstruction", worst_rec <= tol * scale, check_json(worst_rec, tol * scale)});

    bool cheb = true;
    json cheb_rows = json::array();
    for (const auto& row : chebyshev_tails(dec)) {
        cheb = cheb && row.tail <= row.bound * (1 + 1e-12) + 1e-300;
        cheb_rows.push_back({{"k", row.k}, {"tail", row.tail}, {"bound", row.bound}});
    }
    r.results["chebyshev"] = cheb_rows;
    r.assertions.push_back({"chebyshev_tail", cheb, nullptr});

    if (inv.has("eps")) {
        json noise = json::array();
        double worst = 0;
        for (auto eps : parse_real_list(inv.opt.eps, "eps")) {
            const double a = dec.noise_covariance(eps);
            const double b = noise_covariance_direct(table, law, eps);
            worst = std::max(worst, std::abs(a - b));
            noise.push_back({{"eps", eps}, {"spectral", a}, {"direct", b}});
        }
        r.results["noise_covariance"] = noise;
        r.assertions.push_back({"noise_spectral_vs_direct", worst <= tol * scale, check_json(worst, tol * scale)});
    }

    if (table.has_currents() && !dist.degenerate()) {
        const auto sb = singleton_norm_bounds(table, law, inv.opt.p);
        json rows = json::array();
        for (const auto& row : sb.rows) {
            json jr{{"edge", row.edge}, {"norm_p", row.norm_p}, {"m_p", row.m_p}, {"mean_i_sq", row.mean_i_sq}};
            if (row.ratio)
                jr["ratio"] = *row.ratio;
            else
                jr["ratio"] = "degenerate";
            rows.push_back(jr);
        }
        r.results["singleton_bounds"] = {
            {"p", sb.p}, {"window", {sb.window_low, sb.window_high}}, {"rows", rows}};
        r.assertions.push_back({"singleton_window", sb.holds(), nullptr});

        bool bracket = true;
        for (const auto& row : delta_bracket(table, law))
            bracket = bracket && row.holds();
        r.assertions.push_back({"delta_bracket", bracket, nullptr});
    }
    if (es.tightness_ratio)
        r.assertions.push_back({"efron_stein_ratio_at_least_one", *es.tightness_ratio >= 1 - 1e-12,
                                {{"value", *es.tightness_ratio}}});

    r.csv = [dec, diam](std::ostream& os) { write_spectrum_csv(os, dec, diam); };
    return r;
}

inline CommandResult cmd_deriv_check(const Invocation& inv)
{
    const auto net = network_from(inv);
    const auto dist = dist_from(inv);
    const auto target = target_from(inv, net);
    if (!(inv.opt.h > 0))
        throw InvalidInput("flag step: must be positive");
    if (inv.opt.configs < 1)
        throw InvalidInput("flag configs: must be at least 1");

    CommandResult res;
    res.config = {{"network", network_summary(net)}, {"dist", dist.to_string()}, {"seed", inv.opt.seed},
                  {"configs", inv.opt.configs}, {"step", inv.opt.h}, {"pairs", inv.opt.pairs}};

    struct Row
    {
        std::size_t config;
        std::string kind;
        std::size_t edge;
        DerivReport d;
    };
    auto rows = std::make_shared<std::vector<Row>>();
    double grad_err = 0, cur_err = 0, recip = 0, sum_rule_excess = -1;
    for (std::size_t c = 0; c < inv.opt.configs; ++c) {
        const auto r = resistances_from(inv, dist, net, c);
        const auto g = check_gradient_fd(net, r, target, inv.opt.h);
        for (std::size_t e = 0; e < g.size(); ++e)
            rows->push_back({c, "gradient", e, g[e]});
        grad_err = std::max(grad_err, max_rel_err(g));

        const auto probe = resistnet::detail::pick_edges(net, 3, inv.opt.seed + c);
        for (auto ep : probe) {
            const auto cd = check_current_derivative_fd(net, r, target, ep, inv.opt.h);
            for (std::size_t e = 0; e < cd.size(); ++e)
                rows->push_back({c, "current_derivative:" + std::to_string(ep), e, cd[e]});
            cur_err = std::max(cur_err, max_rel_err(cd));
        }

        const auto pool = resistnet::detail::pick_edges(net, 2 * inv.opt.pairs, inv.opt.seed + 1000003 + c);
        std::vector<std::pair<std::size_t, std::size_t>> pairs;
        for (std::size_t k = 0; k + 1 < pool.size(); k += 2)
            pairs.emplace_back(pool[k], pool[k + 1]);
        recip = std::max(recip, check_reciprocity(net, r, pairs, target.mode));

        const FlowSolver solver(net, r);
        for (auto ep : probe) {
            const auto [sum, bound] = unit_current_sum_rule(solver, target.mode, ep);
            sum_rule_excess = std::max(sum_rule_excess, sum - bound);
        }
    }
    res.results = {{"gradient_max_rel_err", grad_err},
                   {"current_derivative_max_rel_err", cur_err},
                   {"reciprocity_max_deviation", recip},
                   {"sum_rule_max_excess", sum_rule_excess}};
    res.assertions.push_back({"gradient_fd", grad_err <= inv.opt.deriv_tol, check_json(grad_err, inv.opt.deriv_tol)});
    res.assertions.push_back({"current_derivative_fd", cur_err <= inv.opt.deriv_tol, check_json(cur_err, inv.opt.deriv_tol)});
    res.assertions.push_back({"reciprocity", recip <= 1e-8, check_json(recip, 1e-8)});
    res.assertions.push_back({"sum_rule", sum_rule_excess <= 1e-9, check_json(sum_rule_excess, 1e-9)});
    res.csv = [rows](std::ostream& os) {
        os << "config,kind,edge,analytic,numeric,abs_err,rel_err\n";
        for (const auto& r : *rows)
            os << r.config << ',' << r.kind << ',' << r.edge << ',' << format_real(r.d.analytic) << ','
               << format_real(r.d.numeric) << ',' << format_real(r.d.abs_err) << ',' << format_real(r.d.rel_err)
               << '\n';
    };
    return res;
}

inline CommandResult cmd_alpha(const Invocation& inv)
{
    const auto net = network_from(inv);
    AlphaConfig cfg;
    cfg.dist = dist_from(inv);
    if (!cfg.dist.degenerate())
        inv.require("seed");
    cfg.seed = inv.opt.seed;
    cfg.trials = inv.opt.trials;
    cfg.edge_sample = inv.opt.edges;
    inv.require("L");
    cfg.L_list = parse_size_list(inv.opt.L, "L");
    cfg.workers = inv.opt.workers;
    cfg.solver = solver_from(inv);
    const auto rep = alpha_scan(net, cfg);

    CommandResult r;
    r.config = {{"network", network_summary(net)}, {"dist", cfg.dist.to_string()}, {"seed", cfg.seed},
                {"trials", cfg.trials}, {"edges", cfg.edge_sample}, {"L", cfg.L_list}};
    r.results = {{"L", rep.L},
                 {"alpha", rep.alpha},
                 {"alpha_sampled", rep.alpha_sampled},
                 {"alpha_adversarial", rep.alpha_adversarial},
                 {"estimate", AlphaReport::estimate_kind},
                 {"configurations", rep.configurations},
                 {"base_edges", rep.base_edges},
                 {"failed", rep.failed}};
    std::size_t smallest = 0;
    for (std::size_t k = 1; k < rep.L.size(); ++k)
        if (rep.L[k] < rep.L[smallest])
            smallest = k;
    r.assertions.push_back({"alpha_at_most_lambda", rep.alpha[smallest] <= rep.lambda * (1 + 1e-12),
                            check_json(rep.alpha[smallest], rep.lambda)});
    r.assertions.push_back({"nonincreasing_in_L", rep.nonincreasing(), nullptr});
    r.csv = [rep](std::ostream& os) {
        os << "L,alpha,alpha_sampled,alpha_adversarial\n";
        for (std::size_t k = 0; k < rep.L.size(); ++k)
            os << rep.L[k] << ',' << format_real(rep.alpha[k]) << ',' << format_real(rep.alpha_sampled[k]) << ','
               << format_real(rep.alpha_adversarial[k]) << '\n';
    };
    return r;
}

inline CommandResult cmd_mc_var(const Invocation& inv)
{
    const auto cfg = mc_from(inv);
    const auto rep = variance_scan(cfg);
    CommandResult r;
    r.config = mc_echo(cfg);
    json rows = json::array();
    for (const auto& row : rep.rows)
        rows.push_back({{"n", row.n},
                        {"edges", row.edges},
                        {"mean", estimate_json(row.mean)},
                        {"variance", estimate_json(row.variance)},
                        {"variance_of_variance", row.variance.se * row.variance.se},
                        {"samples", row.samples},
                        {"failed", row.failed}});
    r.results["exploratory"] = rep.exploratory;
    r.results["sizes"] = rows;
    r.results["fit_status"] = rep.fit_status;
    if (rep.fit)
        r.results["fit"] = {{"slope", rep.fit->slope},
                            {"intercept", rep.fit->intercept},
                            {"slope_se", rep.fit->slope_se},
                            {"slope_se_propagated", rep.fit->slope_se_propagated}};
    if (inv.has("slope-window")) {
        const auto w = parse_real_list(inv.opt.slope_window, "slope-window");
        if (w.size() != 2 || w[0] > w[1])
            throw InvalidInput("flag slope-window: expected lo,hi");
        const bool ok = rep.fit && rep.fit->slope >= w[0] && rep.fit->slope <= w[1];
        r.assertions.push_back({"slope_window", ok, {{"window", w}}});
    }
    r.csv = [rep](std::ostream& os) {
        os << "n,index,value\n";
        for (std::size_t s = 0; s < rep.rows.size(); ++s)
            for (std::size_t i = 0; i < rep.raw[s].size(); ++i)
                os << rep.rows[s].n << ',' << i << ',' << format_real(rep.raw[s][i]) << '\n';
    };
    return r;
}

inline CommandResult cmd_mc_clt(const Invocation& inv)
{
    const auto cfg = mc_from(inv);
    const auto rep = clt_test(cfg);
    CommandResult r;
    r.config = mc_echo(cfg);
    r.results = {{"n", rep.n},           {"ks_distance", rep.ks_distance}, {"mean", rep.mean},
                 {"variance", rep.variance}, {"samples", rep.samples},     {"failed", rep.failed}};
    if (inv.has("ks-max"))
        r.assertions.push_back({"ks_distance", rep.ks_distance <= inv.opt.ks_max,
                                check_json(rep.ks_distance, inv.opt.ks_max)});
    r.csv = [rep](std::ostream& os) {
        os << "index,standardized\n";
        for (std::size_t i = 0; i < rep.standardized.size(); ++i)
            os << i << ',' << format_real(rep.standardized[i]) << '\n';
    };
    return r;
}

inline CommandResult cmd_mc_noise(const Invocation& inv)
{
    const auto cfg = mc_from(inv);
    inv.require("eps");
    const auto eps = parse_real_list(inv.opt.eps, "eps");
    const auto rep = noise_correlation_scan(cfg, eps);
    CommandResult r;
    r.config = mc_echo(cfg);
    r.config["eps"] = eps;
    json rows = json::array();
    for (const auto& row : rep.rows)
        rows.push_back({{"eps", row.eps}, {"correlation", estimate_json(row.correlation)}});
    json steps = json::array();
    for (const auto& s : rep.steps)
        steps.push_back({{"from", s.eps_from}, {"to", s.eps_to}, {"drop", estimate_json(s.drop)},
                         {"consistent", s.consistent}});
    r.results = {{"n", rep.n}, {"curve", rows}, {"steps", steps}, {"samples", rep.samples}, {"failed", rep.failed}};
    r.assertions.push_back({"nonincreasing_within_2se", rep.monotone, nullptr});
    r.csv = [rep](std::ostream& os) {
        os << "eps,correlation,se\n";
        for (const auto& row : rep.rows)
            os << format_real(row.eps) << ',' << format_real(row.correlation.value) << ','
               << format_real(row.correlation.se) << '\n';
    };
    return r;
}

inline CommandResult cmd_influence(const Invocation& inv)
{
    const auto cfg = mc_from(inv);
    const auto rep = influence_ratio(cfg);
    CommandResult r;
    r.config = mc_echo(cfg);
    json rows = json::array();
    for (const auto& row : rep.rows) {
        json deltas = json::array();
        for (const auto& d : row.deltas)
            deltas.push_back({{"edge", d.edge}, {"delta_sq", estimate_json(d.delta_sq)}});
        rows.push_back({{"n", row.n},
                        {"variance", estimate_json(row.variance)},
                        {"max_delta_sq", row.max_delta_sq},
                        {"beta_proxy", row.beta_proxy},
                        {"beta_proxy_times_vertices", row.beta_proxy_scaled},
                        {"deltas", deltas},
                        {"samples", row.samples},
                        {"failed", row.failed}});
    }
    r.results = {{"sizes", rows}, {"spread", rep.spread}};
    if (inv.has("max-spread"))
        r.assertions.push_back({"spread", rep.spread <= inv.opt.max_spread, check_json(rep.spread, inv.opt.max_spread)});
    r.csv = [rep](std::ostream& os) {
        os << "n,edge,delta_sq,se\n";
        for (const auto& row : rep.rows)
            for (const auto& d : row.deltas)
                os << row.n << ',' << d.edge << ',' << format_real(d.delta_sq.value) << ','
                   << format_real(d.delta_sq.se) << '\n';
    };
    return r;
}

inline CommandResult cmd_wehr(const Invocation& inv)
{
    const auto cfg = mc_from(inv);
    const auto rep = wehr_chain_check(cfg);
    CommandResult r;
    r.config = mc_echo(cfg);
    json links = json::array();
    for (const auto& l : rep.links) {
        links.push_back({{"name", l.name}, {"lhs", l.lhs}, {"rhs", l.rhs}, {"ratio", l.rhs != 0 ? l.lhs / l.rhs : 0.0},
                         {"se", l.se}, {"exact", l.exact}, {"asserted", l.asserted}, {"holds", l.holds}});
        if (l.asserted)
            r.assertions.push_back({l.name, l.holds, nullptr});
    }
    r.results = {{"n", rep.n},
                 {"edges", rep.edges},
                 {"variance", estimate_json(rep.variance)},
                 {"sum_delta_sq", estimate_json(rep.sum_delta_sq)},
                 {"links", links},
                 {"samples", rep.samples},
                 {"failed", rep.failed}};
    r.csv = [rep](std::ostream& os) {
        os << "link,lhs,rhs,se,exact,asserted,holds\n";
        for (const auto& l : rep.links)
            os << '"' << l.name << "\"," << format_real(l.lhs) << ',' << format_real(l.rhs) << ','
               << format_real(l.se) << ',' << l.exact << ',' << l.asserted << ',' << l.holds << '\n';
    };
    return r;
}

inline CommandResult dispatch(const Invocation& inv)
{
    const auto& c = inv.command;
    if (c == "build")
        return cmd_build(inv);
    if (c == "resist")
        return cmd_resist(inv);
    if (c == "walsh")
        return cmd_walsh(inv);
    if (c == "deriv-check")
        return cmd_deriv_check(inv);
    if (c == "alpha")
        return cmd_alpha(inv);
    if (c == "mc-var")
        return cmd_mc_var(inv);
    if (c == "mc-clt")
        return cmd_mc_clt(inv);
    if (c == "mc-noise")
        return cmd_mc_noise(inv);
    if (c == "influence")
        return cmd_influence(inv);
    return cmd_wehr(inv);
}

inline std::string error_line(const std::string& kind, const std::string& reason)
{
    json j;
    j["error"] = kind;
    j["reason"] = reason;
    return dump_json(j, -1);
}

inline bool ends_with(const std::string& s, const std::string& suffix)
{
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

} // namespace detail

/// Entry point; args excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    Invocation inv;
    CLI::App app{"Effective resistances on random networks", "resistnet"};
    try {
        app.require_subcommand(1);
        std::map<std::string, CLI::App*> subs;
        const std::map<std::string, std::string> help{
            {"build", "build a network and report its shape"},
            {"resist", "solve for a minimal current and its resistance"},
            {"walsh", "exact Efron-Stein decomposition of a resistance"},
            {"deriv-check", "check derivative formulas against finite differences"},
            {"alpha", "tail energy of single-edge unit currents"},
            {"mc-var", "Monte Carlo variance scaling"},
            {"mc-clt", "Kolmogorov-Smirnov distance to the normal law"},
            {"mc-noise", "correlation under resampling noise"},
            {"influence", "largest resampling influence over the variance"},
            {"wehr", "variance lower-bound chain"},
        };
        for (const auto& name : command_names()) {
            auto* sub = app.add_subcommand(name, help.at(name));
            sub->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
            for (const auto& flag : detail::command_flags().at(name))
                detail::add_flag(*sub, inv.opt, flag);
            subs[name] = sub;
        }

        // Config file entries go right after the command; later flags win.
        std::vector<std::string> argv = args;
        std::string command;
        for (const auto& a : args)
            if (subs.count(a)) {
                command = a;
                break;
            }
        std::string config_path;
        for (std::size_t i = 0; i < args.size(); ++i) {
            if (args[i] == "--config" && i + 1 < args.size())
                config_path = args[i + 1];
            else if (args[i].rfind("--config=", 0) == 0)
                config_path = args[i].substr(9);
        }
        if (!config_path.empty() && !command.empty()) {
            std::ifstream in(config_path);
            if (!in)
                throw InvalidInput("cannot open config file '" + config_path + "'");
            const auto file = parse_config(in);
            std::vector<std::string> injected;
            for (const auto& section : {std::string(), command}) {
                auto it = file.find(section);
                if (it == file.end())
                    continue;
                for (const auto& e : it->second) {
                    if (!subs[command]->get_option_no_throw("--" + e.key))
                        throw ParseError("unknown key '" + e.key + "' for command " + command, e.line);
                    injected.push_back("--" + e.key);
                    injected.push_back(e.value);
                }
            }
            const auto pos = std::find(argv.begin(), argv.end(), command);
            argv.insert(pos + 1, injected.begin(), injected.end());
        }

        std::vector<std::string> reversed(argv.rbegin(), argv.rend());
        app.parse(reversed);
        inv.command = command;
        for (const auto* opt : subs[command]->get_options())
            if (opt->count() > 0 && opt->get_name() != "--help")
                inv.given.insert(opt->get_name().substr(2));

        if (inv.has("out") && !detail::ends_with(inv.opt.out, ".csv") && !detail::ends_with(inv.opt.out, ".json"))
            throw InvalidInput("flag out: expected a .json or .csv path");

        const auto result = detail::dispatch(inv);
        json doc;
        doc["command"] = inv.command;
        doc["config"] = result.config;
        doc["results"] = result.results;
        json asserts = json::array();
        bool passed = true;
        for (const auto& a : result.assertions) {
            json ja{{"name", a.name}, {"passed", a.passed}};
            if (!a.detail.is_null())
                ja["detail"] = a.detail;
            asserts.push_back(ja);
            passed = passed && a.passed;
        }
        doc["assertions"] = asserts;
        doc["passed"] = passed;

        if (inv.has("out")) {
            const auto& path = inv.opt.out;
            const bool csv = detail::ends_with(path, ".csv");
            std::ofstream file(path);
            if (!file)
                throw InvalidInput("cannot write '" + path + "'");
            if (csv)
                result.csv(file);
            else
                file << dump_json(doc) << '\n';
        } else {
            out << dump_json(doc) << '\n';
        }
        if (!passed) {
            for (const auto& a : result.assertions)
                if (!a.passed) {
                    err << detail::error_line("assertion_failed", a.name) << '\n';
                    break;
                }
            return exit_assertion;
        }
        return exit_ok;
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0)
            return exit_ok;
        err << detail::error_line("invalid_arguments", e.what()) << '\n';
        return exit_invalid;
    } catch (const NonConvergence& e) {
        err << detail::error_line("non_convergence", e.what()) << '\n';
        return exit_nonconvergence;
    } catch (const std::exception& e) {
        err << detail::error_line("invalid_arguments", e.what()) << '\n';
        return exit_invalid;
    }
}

} // namespace resistnet::cli

#endif // RESISTNET_CLI_HPP
