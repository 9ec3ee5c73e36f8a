#include "bratteli/constructions.hpp"
#include "bratteli/diagram_io.hpp"
#include "bratteli/geodesics.hpp"
#include "bratteli/kms.hpp"
#include "bratteli/level_algebra.hpp"
#include "bratteli/path_statistics.hpp"
#include "bratteli/report.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>

using namespace bratteli;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 2;
constexpr int kUncertified = 3;
constexpr int kConstruction = 4;

NumericMode env_mode() {
    const char* e = std::getenv("BRATTELI_EXACT");
    return e && std::string(e) == "1" ? NumericMode::Exact : NumericMode::Float;
}

json num(double x) {
    if (std::isfinite(x)) return x;
    return format_fixed17(x);
}

std::string fmt(double x) { return format_double(x); }

std::string fmt_vector(const Eigen::VectorXd& v) {
    std::string s = "(";
    for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v(i));
    return s + ")";
}

Diagram load(const std::string& path, CommandReport& rep) {
    std::string text = read_file(path);
    rep.add_input(path, text);
    return load_spec(text);
}

Supernatural parse_uhf(const std::vector<std::string>& factors, bool finite) {
    Supernatural s;
    for (const auto& f : factors) s.factors.push_back(Integer(f));
    s.cyclic = !finite;
    s.validate();
    return s;
}

std::vector<std::size_t> every(std::size_t k, std::size_t count) {
    std::vector<std::size_t> cuts;
    for (std::size_t i = 1; i <= count; ++i) cuts.push_back(i * k);
    return cuts;
}

struct Output {
    std::ostringstream text;
    CommandReport report;
    std::string json_path;

    void flush() {
        std::cout << text.str();
        if (!json_path.empty()) write_file(json_path, report.dump());
    }
};

// --- geodesics -----------------------------------------------------------

struct GeodesicArgs {
    std::string file;
    std::size_t depth = 6;
    std::size_t lookahead = 8;
    bool neg = false;
    std::string dot;
};

int cmd_geodesics(const GeodesicArgs& a, Output& out) {
    out.report.command = "geodesics";
    Diagram d = load(a.file, out.report);
    if (a.neg) d = negate_potential(d);
    GeodesicOptions opt;
    opt.lookahead = a.lookahead;
    opt.mode = env_mode();
    TightSubdiagram sub = extract_geodesic_subdiagram(d, a.depth, opt);
    AlgebraProfile prof = ground_state_algebra_profile(sub, a.depth);

    std::string what = a.neg ? "ceiling-state" : "ground-state";
    json levels = json::array();
    bool constant = true, columns = true;
    for (std::size_t n = 0; n <= a.depth; ++n) {
        GeodesicPrefixData g = geodesic_prefix_data(sub, n);
        std::string p = describe_blocks(prof.blocks[n]);
        out.text << "level " << n << ": " << p << " (#G_" << n << " = " << g.total.get_str() << ")\n";
        json blocks = json::array();
        for (const auto& b : prof.blocks[n]) {
            blocks.push_back({{"vertex", b.vertex}, {"size", b.size.get_str()}});
            columns = columns && b.size == 1;
        }
        levels.push_back({{"level", n}, {"profile", p}, {"geodesic_paths", g.total.get_str()}, {"blocks", blocks}});
        if (n >= 2) constant = constant && p == describe_blocks(prof.blocks[1]);
        if (n >= 2) columns = columns && prof.blocks[n].size() == prof.blocks[1].size();
    }
    std::string cert = to_string(sub.certification);
    if (constant && a.depth >= 1)
        out.text << what << " profile: " << describe_blocks(prof.blocks[1]) << " at every level; certification: " << cert
                 << "\n";
    else
        out.text << what << " profile varies with the level; certification: " << cert << "\n";
    if (sub.certification == Certification::Exact && columns && a.depth >= 1) {
        std::size_t k = prof.blocks[1].size();
        out.text << k << " extreme " << (a.neg ? "ceiling" : "ground") << (k == 1 ? " state" : " states") << "\n";
    }
    if (sub.certification == Certification::Exact)
        out.text << "period: levels from " << sub.period_start << ", length " << sub.period_length << "\n";
    else
        out.text << "horizon " << sub.horizon << " (lookahead " << sub.lookahead << "), stable with smaller lookahead: "
                 << (sub.stable ? "yes" : "no") << "\n";

    out.report.results = {{"levels", levels},
                          {"certification", cert},
                          {"negated", a.neg},
                          {"horizon", sub.horizon},
                          {"lookahead", sub.lookahead},
                          {"stable", sub.stable},
                          {"period_start", sub.period_start},
                          {"period_length", sub.period_length}};
    if (!a.dot.empty()) write_file(a.dot, to_dot(d, a.depth, sub.arrow_alive));
    if (sub.certification == Certification::TruncatedAtDepth && !sub.stable) {
        out.report.warnings.push_back("truncated result changes with the lookahead; raise --lookahead");
        return kUncertified;
    }
    return kOk;
}

// --- kms -----------------------------------------------------------------

struct KmsArgs {
    std::string file;
    std::vector<double> betas{1.0};
    std::size_t base = 1;
    std::size_t depth = 10000;
    std::size_t seeds = 5;
    double tol = 1e-9;
    std::string csv;
};

int cmd_kms(const KmsArgs& a, Output& out) {
    out.report.command = "kms";
    Diagram d = load(a.file, out.report);
    d.require_level(a.base);
    std::vector<Seed> seeds = seed_set(d.level_size(a.base), a.seeds);
    KmsOptions opt;
    opt.tol = a.tol;
    opt.budget = a.depth;
    std::string csv = csv_line({"beta", "level", "vertex", "value", "residual"});
    json rows = json::array();
    int rc = kOk;
    for (double beta : a.betas) {
        MultiSeedResult r = kms_multi_seed(d, beta, a.base, seeds, opt);
        auto dists = push_up(d, beta, a.base, r.per_seed.back().values);
        out.text << "beta " << fmt(beta) << ":\n";
        json levels = json::array();
        for (std::size_t j = 0; j < dists.size(); ++j) {
            out.text << "  level " << j << ": " << fmt_vector(dists[j]) << "\n";
            levels.push_back(vector_json(dists[j]));
            for (Eigen::Index v = 0; v < dists[j].size(); ++v)
                csv += csv_line({format_fixed17(beta), std::to_string(j), d.level(j)[v], format_fixed17(dists[j](v)),
                                  format_fixed17(r.max_residual())});
        }
        out.text << "  residual " << fmt(r.max_residual()) << " (tol " << fmt(a.tol) << "), seed agreement "
                 << fmt(r.agreement) << " over " << seeds.size() << " seeds, image diameter " << fmt(r.diameter)
                 << ", product depth " << r.iterations << "\n";
        out.text << "  converged: " << (r.converged ? "yes" : "no") << "; seeds agree: "
                 << (r.agreement < a.tol ? "yes" : "no") << "\n";
        json seeds_json = json::array();
        for (std::size_t i = 0; i < r.seeds.size(); ++i)
            seeds_json.push_back({{"seed", r.seeds[i].label()},
                                  {"values", vector_json(r.per_seed[i].values)},
                                  {"residual", num(r.per_seed[i].residual)}});
        rows.push_back({{"beta", beta},
                        {"levels", levels},
                        {"per_seed", seeds_json},
                        {"max_residual", num(r.max_residual())},
                        {"agreement", num(r.agreement)},
                        {"diameter", num(r.diameter)},
                        {"iterations", r.iterations},
                        {"tolerance", a.tol},
                        {"seeds", seeds.size()},
                        {"converged", r.converged},
                        {"budget_exhausted", r.budget_exhausted}});
        if (!r.converged) {
            out.report.warnings.push_back("beta " + fmt(beta) + ": residual " + fmt(r.max_residual()) +
                                          " above tolerance after " + std::to_string(r.iterations) + " levels");
            rc = kUncertified;
        }
    }
    out.report.results = {{"base_level", a.base}, {"betas", rows}};
    if (!a.csv.empty()) write_file(a.csv, csv);
    return rc;
}

// --- kms-infinity --------------------------------------------------------

struct KmsInfArgs {
    std::string file;
    std::vector<double> grid{1, 2, 4, 8, 16};
    std::size_t depth = 20;
    std::size_t window = 5;
    std::size_t probe_depth = 8;
};

int cmd_kms_infinity(const KmsInfArgs& a, Output& out) {
    out.report.command = "kms-infinity";
    Diagram d = load(a.file, out.report);
    if (a.grid.empty()) throw std::invalid_argument("empty beta grid");
    NumericMode mode = env_mode();
    json rows = json::array();
    bool holds = true;
    std::string first_fail;
    for (double beta : a.grid) {
        ConvergenceReport r = l1_convergence_report(d, beta, a.depth, a.window, mode);
        out.text << "beta " << fmt(beta) << ": partial sum " << fmt(r.partial_sum()) << " over gaps 1.." << a.depth
                 << ", tail " << to_string(r.tail);
        if (r.tail == TailStatus::Certified) out.text << " (tail bound " << fmt(r.tail_bound) << ")";
        out.text << ", decay ratio " << fmt(r.ratio) << "\n";
        json dist = json::array();
        for (double x : r.distances) dist.push_back(num(x));
        rows.push_back({{"beta", beta},
                        {"distances", dist},
                        {"partial_sum", num(r.partial_sum())},
                        {"tail", to_string(r.tail)},
                        {"ratio", num(r.ratio)},
                        {"tail_bound", num(r.tail_bound)},
                        {"total_bound", num(r.total_bound())},
                        {"window", r.window}});
        if (r.tail != TailStatus::Certified && holds) {
            holds = false;
            first_fail = "beta " + fmt(beta) + ": tail " + to_string(r.tail);
        }
    }
    if (holds) {
        double lo = rows.front()["total_bound"].get<double>(), hi = rows.back()["total_bound"].get<double>();
        if (hi > lo) {
            holds = false;
            first_fail = "total bound grows with beta";
        }
    }

    std::size_t pd = a.probe_depth;
    if (auto dd = d.depth()) pd = std::min(pd, *dd);
    GeodesicOptions opt;
    opt.mode = mode;
    TightSubdiagram sub = extract_geodesic_subdiagram(d, pd, opt);
    AlgebraProfile prof = ground_state_algebra_profile(sub, pd);
    out.text << "traces on level " << pd << " of Br+: simplex with " << prof.block_count(pd)
             << " extreme points (profile " << describe_blocks(prof.blocks[pd]) << ", certification "
             << to_string(sub.certification) << ")\n";

    json result{{"betas", rows}, {"criterion_holds", holds}, {"probe_depth", pd},
                {"local_simplex_extreme_points", prof.block_count(pd)},
                {"profile", describe_blocks(prof.blocks[pd])}};
    if (holds) {
        out.text << "criterion holds: all local KMS_inf states are KMS_inf states\n";
    } else {
        out.text << "criterion fails (" << first_fail << ")\n";
        // how close beta-KMS states get to the extreme local KMS_inf states
        json probes = json::array();
        Eigen::VectorXd bary = Eigen::VectorXd::Zero(d.level_size(1));
        std::size_t count = 0;
        for (std::size_t v = 0; v < d.level_size(pd); ++v) {
            if (!sub.vertex_alive[pd][v]) continue;
            Eigen::VectorXd target = Eigen::VectorXd::Zero(d.level_size(pd));
            target(v) = 1.0;
            auto fam = limit_family(d, pd, target);
            bary += fam[1];
            ++count;
            auto tr = beta_infinity_transport(d, target, a.grid, pd, pd);
            double floor = std::numeric_limits<double>::infinity();
            for (const auto& row : tr) floor = std::min(floor, row.max_distance);
            out.text << "extreme target " << d.level(pd)[v] << ": l1 floor " << fmt(floor) << " over the beta grid ("
                     << tr.front().route << " route)\n";
            probes.push_back({{"vertex", d.level(pd)[v]}, {"l1_floor", num(floor)}, {"route", tr.front().route}});
        }
        if (count) bary /= static_cast<double>(count);
        Eigen::VectorXd cand = perron_block(d, a.grid.back()).applicable
                                   ? perron_kms_distribution(d, a.grid.back(), 1)
                                   : kms_vertex_distribution(d, a.grid.back(), 1, pd - 1, Seed::uniform()).values;
        double gap = l1_distance(cand, bary);
        out.text << "beta-KMS distribution at level 1, beta " << fmt(a.grid.back()) << ": " << fmt_vector(cand)
                 << "; l1 distance to the barycenter of the extreme ground states " << fmt(gap) << "\n";
        if (gap < 1e-6) out.text << "unique KMS_inf candidate: barycenter of the extreme ground states\n";
        result["probes"] = probes;
        result["candidate"] = vector_json(cand);
        result["barycenter"] = vector_json(bary);
        result["candidate_distance_to_barycenter"] = num(gap);
    }
    out.report.results = result;
    return kOk;
}

// --- construct -----------------------------------------------------------

struct ConstructArgs {
    std::string base, plus, minus, f;
    std::vector<std::string> uhf{"2"}, u1{"2"}, u2{"2"};
    bool finite = false;
    std::size_t depth = 6;
    std::string margin = "1";
    std::size_t cuts_every = 0;
    std::string out, diagram;
};

int finish_construction(const ConstructionCertificate& cert, const ConstructArgs& a, Output& out) {
    json doc = cert.to_json();
    doc["inputs"] = out.report.inputs;
    if (!a.out.empty()) write_file(a.out, doc.dump(2) + "\n");
    if (!a.diagram.empty()) write_file(a.diagram, serialize(cert.output));
    for (const auto& e : cert.verification) out.text << (e.pass ? "PASS " : "FAIL ") << e.check << "\n";
    out.text << "certificate: " << (cert.all_pass() ? "verified" : "NOT verified") << "\n";
    json ver = json::array();
    for (const auto& e : cert.verification) ver.push_back({{"check", e.check}, {"pass", e.pass}});
    out.report.results = {{"construction", cert.construction},
                          {"verification", ver},
                          {"all_pass", cert.all_pass()},
                          {"output_sha256", sha256_hex(serialize(cert.output))}};
    return cert.all_pass() ? kOk : kConstruction;
}

Diagram maybe_telescope(const Diagram& d, std::size_t k, std::size_t depth) {
    return k ? telescope(d, every(k, depth + 1)) : d;
}

int cmd_construct(const std::string& which, const ConstructArgs& a, Output& out) {
    out.report.command = "construct " + which;
    if (which == "uhf-embed") {
        Diagram base = load(a.base, out.report);
        UhfEmbedding e = construct_uhf_embedding(base, {Integer(a.margin)}, parse_uhf(a.uhf, a.finite), a.depth);
        return finish_construction(e.certificate, a, out);
    }
    if (which == "ground-ceiling") {
        Diagram plus = load(a.plus, out.report), minus = load(a.minus, out.report);
        return finish_construction(construct_ground_ceiling(plus, minus, parse_uhf(a.uhf, a.finite), a.depth), a, out);
    }
    if (which == "rigid-kms") {
        Diagram base = maybe_telescope(load(a.base, out.report), a.cuts_every, a.depth);
        return finish_construction(construct_rigid_kms(base, parse_uhf(a.uhf, a.finite), a.depth), a, out);
    }
    Diagram f = maybe_telescope(load(a.f, out.report), a.cuts_every, a.depth);
    Diagram plus = load(a.plus, out.report), minus = load(a.minus, out.report);
    auto cert = main_theorem_pipeline(f, plus, minus, parse_uhf(a.u1, a.finite), parse_uhf(a.u2, a.finite), a.depth);
    return finish_construction(cert, a, out);
}

// --- check / state -------------------------------------------------------

struct CheckArgs {
    std::string file, state;
    std::size_t level = 2;
    std::optional<double> beta;
    bool ground = false;
    std::size_t trials = 200;
};

int cmd_check(const CheckArgs& a, Output& out) {
    out.report.command = "check";
    Diagram d = load(a.file, out.report);
    LevelAlgebra alg(d, a.level);
    std::string text = read_file(a.state);
    out.report.add_input(a.state, text);
    BlockState s = state_from_json(alg, json::parse(text));
    StateValidity v = validate_state(alg, s);
    out.text << "state: min eigenvalue " << fmt(v.min_eigenvalue) << ", trace defect " << fmt(v.trace_defect) << "\n";
    json res{{"level", a.level}, {"min_eigenvalue", v.min_eigenvalue}, {"trace_defect", v.trace_defect}};
    if (a.beta) {
        KmsReport k = check_kms(alg, s, *a.beta);
        out.text << "KMS at beta " << fmt(*a.beta) << ": max violation " << fmt(k.max_violation) << " over "
                 << k.quadruples << " quadruples";
        if (k.max_violation > 0)
            out.text << ", witness (" << k.witness[0] << ", " << k.witness[1] << ", " << k.witness[2] << ", "
                     << k.witness[3] << ")";
        out.text << "\n";
        res["kms"] = {{"beta", *a.beta},
                      {"max_violation", k.max_violation},
                      {"quadruples", k.quadruples},
                      {"witness", {k.witness[0], k.witness[1], k.witness[2], k.witness[3]}}};
    }
    if (a.ground) {
        GeodesicOptions opt;
        opt.mode = NumericMode::Exact;
        TightSubdiagram sub = extract_geodesic_subdiagram(d, a.level, opt);
        GroundReport g = check_ground(alg, s, a.trials);
        double mass = geodesic_mass(alg, sub, s);
        out.text << "ground: min of -i w(a* d(a)) " << fmt(g.min_value) << " over " << g.units_checked
                 << " matrix units and " << g.trials << " random elements (seed " << g.seed << "); mass on G_"
                 << a.level << " " << fmt(mass) << "\n";
        json gr{{"min_value", g.min_value}, {"trials", g.trials}, {"seed", g.seed}, {"units_checked", g.units_checked},
                {"geodesic_mass", mass}, {"minimiser", g.witness}};
        GroundWitness w = find_ground_witness(d, alg, sub, s);
        if (w.found) {
            out.text << "not a ground state: E = E(" << w.mu << ", " << w.nu << ") at level " << w.level
                     << " gives " << fmt(w.value) << "\n";
            gr["witness"] = {{"level", w.level}, {"mu", w.mu}, {"nu", w.nu}, {"value", w.value}};
        }
        res["ground"] = gr;
    }
    out.report.results = res;
    return kOk;
}

struct StateArgs {
    std::string kind, file, out;
    std::size_t level = 2;
    double beta = 1.0;
    std::vector<double> weights;
    std::uint64_t seed = kDefaultSeed;
};

std::vector<double> default_weights(const TightSubdiagram* sub, std::size_t level, std::size_t n) {
    std::vector<double> w(n, 0.0);
    std::size_t alive = 0;
    for (std::size_t v = 0; v < n; ++v)
        if (!sub || sub->vertex_alive[level][v]) ++alive;
    for (std::size_t v = 0; v < n; ++v)
        if (!sub || sub->vertex_alive[level][v]) w[v] = 1.0 / static_cast<double>(alive);
    return w;
}

int cmd_state(const StateArgs& a, Output& out) {
    out.report.command = "state " + a.kind;
    Diagram d = load(a.file, out.report);
    LevelAlgebra alg(d, a.level);
    BlockState s;
    std::optional<TightSubdiagram> sub;
    if (a.kind == "ground" || a.kind == "local-kms-inf") {
        GeodesicOptions opt;
        opt.mode = NumericMode::Exact;
        sub = extract_geodesic_subdiagram(d, a.level, opt);
    }
    std::vector<double> w = a.weights.empty() ? default_weights(sub ? &*sub : nullptr, a.level, alg.num_blocks())
                                              : a.weights;
    if (w.size() != alg.num_blocks())
        throw std::invalid_argument("expected " + std::to_string(alg.num_blocks()) + " weights, got " +
                                    std::to_string(w.size()));
    if (a.kind == "gibbs") {
        s = gibbs_state(alg, a.beta, w);
    } else if (a.kind == "ground") {
        s = trace_to_ground_blocks(alg, *sub, w);
    } else if (a.kind == "local-kms-inf") {
        StateWithWarnings sw = local_kms_infinity_state(alg, *sub, w);
        s = sw.state;
        out.report.warnings = sw.warnings;
    } else {
        s = random_state(alg, a.seed);
    }
    json doc = state_to_json(alg, s);
    std::string text = doc.dump(2) + "\n";
    if (a.out.empty()) out.text << text;
    else write_file(a.out, text);
    out.report.results = {{"level", a.level}, {"kind", a.kind}, {"state_sha256", sha256_hex(text)}};
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bratteli diagrams with potentials: geodesics, KMS states, constructions"};
    app.require_subcommand(1);
    std::string json_path;
    app.add_option("--json", json_path, "write the command report as JSON");

    GeodesicArgs ga;
    auto* geo = app.add_subcommand("geodesics", "geodesic subdiagram and ground-state profile");
    geo->add_option("file", ga.file)->required();
    geo->add_option("--depth", ga.depth);
    geo->add_option("--lookahead", ga.lookahead);
    geo->add_flag("--neg", ga.neg, "use -F (ceiling states)");
    geo->add_option("--dot", ga.dot, "write a DOT rendering with geodesic arrows highlighted");

    KmsArgs ka;
    auto* kms = app.add_subcommand("kms", "beta-KMS vertex distributions");
    kms->add_option("file", ka.file)->required();
    kms->add_option("--beta", ka.betas)->delimiter(',');
    kms->add_option("--base", ka.base, "level whose distribution is computed");
    kms->add_option("--depth", ka.depth, "maximal product depth");
    kms->add_option("--seeds", ka.seeds, "number of seeds (vertex seeds plus the barycentre)");
    kms->add_option("--tol", ka.tol);
    kms->add_option("--csv", ka.csv);

    KmsInfArgs ia;
    auto* kinf = app.add_subcommand("kms-infinity", "local KMS_inf criterion and beta -> inf probe");
    kinf->add_option("file", ia.file)->required();
    kinf->add_option("--beta-grid", ia.grid)->delimiter(',');
    kinf->add_option("--depth", ia.depth);
    kinf->add_option("--window", ia.window);
    kinf->add_option("--probe-depth", ia.probe_depth);

    ConstructArgs ca;
    auto* con = app.add_subcommand("construct", "certified constructions");
    con->require_subcommand(1);
    auto common = [&](CLI::App* c) {
        c->add_option("--depth", ca.depth);
        c->add_flag("--finite", ca.finite, "treat supernatural lists as finite");
        c->add_option("--out", ca.out, "certificate file");
        c->add_option("--diagram", ca.diagram, "output diagram file");
    };
    auto* c_uhf = con->add_subcommand("uhf-embed");
    c_uhf->add_option("--base", ca.base)->required();
    c_uhf->add_option("--uhf", ca.uhf)->delimiter(',');
    c_uhf->add_option("--margin", ca.margin);
    common(c_uhf);
    auto* c_gc = con->add_subcommand("ground-ceiling");
    c_gc->add_option("--plus", ca.plus)->required();
    c_gc->add_option("--minus", ca.minus)->required();
    c_gc->add_option("--uhf", ca.uhf)->delimiter(',');
    common(c_gc);
    auto* c_rk = con->add_subcommand("rigid-kms");
    c_rk->add_option("--base", ca.base)->required();
    c_rk->add_option("--uhf", ca.uhf)->delimiter(',');
    c_rk->add_option("--cuts-every", ca.cuts_every, "telescope the base to levels k, 2k, ...");
    common(c_rk);
    auto* c_main = con->add_subcommand("main");
    c_main->add_option("--f", ca.f)->required();
    c_main->add_option("--plus", ca.plus)->required();
    c_main->add_option("--minus", ca.minus)->required();
    c_main->add_option("--u1", ca.u1)->delimiter(',');
    c_main->add_option("--u2", ca.u2)->delimiter(',');
    c_main->add_option("--cuts-every", ca.cuts_every);
    common(c_main);

    CheckArgs cha;
    double check_beta = 0.0;
    auto* chk = app.add_subcommand("check", "KMS and ground-state checks of a level state");
    chk->add_option("file", cha.file)->required();
    chk->add_option("--level", cha.level);
    chk->add_option("--state", cha.state)->required();
    auto* beta_opt = chk->add_option("--beta", check_beta);
    chk->add_flag("--ground", cha.ground);
    chk->add_option("--trials", cha.trials);

    StateArgs sa;
    auto* st = app.add_subcommand("state", "write a level state file");
    st->add_option("kind", sa.kind)->required()->check(CLI::IsMember({"gibbs", "ground", "local-kms-inf", "random"}));
    st->add_option("file", sa.file)->required();
    st->add_option("--level", sa.level);
    st->add_option("--beta", sa.beta);
    st->add_option("--weights", sa.weights)->delimiter(',');
    st->add_option("--seed", sa.seed);
    st->add_option("--out", sa.out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kValidation;
    }

    Output out;
    out.json_path = json_path;
    auto start = std::chrono::steady_clock::now();
    int rc = kOk;
    try {
        if (*geo) rc = cmd_geodesics(ga, out);
        else if (*kms) rc = cmd_kms(ka, out);
        else if (*kinf) rc = cmd_kms_infinity(ia, out);
        else if (*con) rc = cmd_construct(con->get_subcommands().front()->get_name(), ca, out);
        else if (*chk) {
            if (*beta_opt) cha.beta = check_beta;
            rc = cmd_check(cha, out);
        } else if (*st) rc = cmd_state(sa, out);
        for (const auto& w : out.report.warnings) out.text << "warning: " << w << "\n";
        out.flush();
    } catch (const ConstructionError& e) {
        std::cerr << "construction failed at gap " << e.gap << ": " << e.what() << "\n";
        rc = kConstruction;
    } catch (const GeodesicDepthError& e) {
        std::cerr << "uncertified: " << e.what() << "\n";
        rc = kUncertified;
    } catch (const TieAmbiguityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        rc = kValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        rc = kValidation;
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", secs);
    std::cerr << "elapsed " << buf << " s\n";
    return rc;
}
