// Acceptance suite: one PASS/FAIL line per criterion.

#include "oracles.hpp"

#include "bratteli/constructions.hpp"
#include "bratteli/geodesics.hpp"
#include "bratteli/kms.hpp"
#include "bratteli/level_algebra.hpp"
#include "bratteli/path_statistics.hpp"
#include "bratteli/perturbation.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

using namespace bratteli;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) {
            pass = false;
            detail = what;
        }
    }
};

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

GeodesicOptions exact_opts(std::size_t lookahead) {
    GeodesicOptions o;
    o.lookahead = lookahead;
    o.mode = NumericMode::Exact;
    return o;
}

// 1: geodesic profiles of the two worked examples
Outcome geodesic_examples() {
    Outcome o;
    auto t0 = Clock::now();
    Diagram br1 = oracle::load("car_asymmetric.json");
    TightSubdiagram s1 = extract_geodesic_subdiagram(br1, 10);
    AlgebraProfile p1 = ground_state_algebra_profile(s1, 10);
    o.require(s1.certification == Certification::Exact, "asymmetric: not Exact");
    for (std::size_t n = 1; n <= 10; ++n) o.require(describe_blocks(p1.blocks[n]) == "C", "asymmetric: profile not C");

    Diagram br2 = oracle::load("car_two_columns.json");
    TightSubdiagram s2 = extract_geodesic_subdiagram(br2, 10);
    AlgebraProfile p2 = ground_state_algebra_profile(s2, 10);
    o.require(s2.certification == Certification::Exact, "two columns: not Exact");
    for (std::size_t n = 1; n <= 10; ++n) {
        o.require(describe_blocks(p2.blocks[n]) == "C^2", "two columns: profile not C^2");
        o.require(p2.block_count(n) == 2, "two columns: not 2 extreme ground states");
    }
    double secs = seconds_since(t0);
    o.require(secs < 1.0, "runtime " + num(secs) + " s");
    if (o.pass) o.detail = "C / C^2 at levels 1..10, Exact, " + num(secs) + " s";
    return o;
}

// 2: unique KMS state of the two-column example and the KMS_inf probe
Outcome two_column_kms() {
    Outcome o;
    Diagram d = oracle::load("car_two_columns.json");
    Eigen::Vector2d half(0.5, 0.5);
    double worst_res = 0.0, worst_dist = 0.0;
    std::size_t worst_iter = 0;
    for (double beta : {-2.0, -1.0, 0.5, 1.0, 2.0}) {
        for (std::size_t base = 1; base <= 4; ++base) {
            KmsOptions opt;
            opt.tol = 1e-11;
            opt.budget = 200;
            MultiSeedResult r = kms_multi_seed(d, beta, base, seed_set(2, 5), opt);
            o.require(r.seeds.size() >= 5, "fewer than 5 seeds");
            o.require(r.converged && r.max_residual() < 1e-9, "beta " + num(beta) + ": residual " + num(r.max_residual()));
            worst_res = std::max(worst_res, r.max_residual());
            worst_iter = std::max(worst_iter, r.iterations);
            for (const auto& s : r.per_seed) {
                for (const auto& lv : push_up(d, beta, base, s.values)) {
                    if (lv.size() != 2) continue;
                    worst_dist = std::max(worst_dist, l1_distance(lv, half));
                }
            }
            Eigen::VectorXd g = distribution_from_gauge(d, beta, base, gauge_limit_vector(d, beta, base, 200).values);
            o.require(l1_distance(g, perron_kms_distribution(d, beta, base)) < 1e-9, "gauge vs Perron");
        }
    }
    o.require(worst_iter <= 200, "iterations " + std::to_string(worst_iter));
    o.require(worst_dist < 1e-9, "distance to (1/2,1/2) " + num(worst_dist));

    std::size_t pd = 8;
    TightSubdiagram sub = extract_geodesic_subdiagram(d, pd);
    std::vector<double> grid;
    for (int b = 1; b <= 16; ++b) grid.push_back(b);
    double floor = std::numeric_limits<double>::infinity();
    Eigen::VectorXd bary = Eigen::VectorXd::Zero(2);
    for (std::size_t v = 0; v < 2; ++v) {
        o.require(sub.vertex_alive[pd][v], "column " + std::to_string(v) + " not in Br+");
        Eigen::VectorXd target = Eigen::VectorXd::Zero(2);
        target(v) = 1.0;
        bary += limit_family(d, pd, target)[1] / 2.0;
        for (const auto& row : beta_infinity_transport(d, target, grid, pd, pd)) floor = std::min(floor, row.max_distance);
    }
    o.require(floor >= 0.45, "l1 floor " + num(floor));
    double gap = 0.0;
    for (double beta : grid) gap = std::max(gap, l1_distance(perron_kms_distribution(d, beta, 1), bary));
    o.require(gap < 1e-9, "KMS distribution away from the barycenter");
    if (o.pass)
        o.detail = "residual " + num(worst_res) + " in <= " + std::to_string(worst_iter) + " steps, distance " +
                   num(worst_dist) + ", l1 floor " + num(floor);
    return o;
}

// 3: growing cross closed forms and summability
Outcome growing_cross() {
    Outcome o;
    Diagram d = oracle::load("car_growing_cross.json");
    double worst = 0.0;
    for (double beta : {0.5, 1.0, 2.0, 4.0}) {
        for (std::size_t j = 2; j <= 20; ++j) {
            Eigen::MatrixXd s = stochastic_matrix(d, j, beta).values;
            double e = std::exp(-beta * static_cast<double>(j));
            Eigen::Matrix2d c;
            c << 1.0 / (1.0 + e), e / (1.0 + e), e / (1.0 + e), 1.0 / (1.0 + e);
            worst = std::max(worst, (s - c).cwiseAbs().maxCoeff());
        }
    }
    o.require(worst <= 1e-12, "closed form off by " + num(worst));
    ConvergenceReport r = l1_convergence_report(d, 1.0, 20);
    double bound = 2.0 * std::exp(-1.0) / (1.0 - std::exp(-1.0));
    o.require(r.tail == TailStatus::Certified, std::string("tail ") + to_string(r.tail));
    for (double s : r.partial_sums) o.require(s < bound, "partial sum above bound");
    o.require(r.total_bound() < bound, "total bound " + num(r.total_bound()));

    // verdict as printed by the CLI
    bool holds = true;
    double prev = std::numeric_limits<double>::infinity();
    for (double beta : {1.0, 2.0, 4.0, 8.0, 16.0}) {
        ConvergenceReport c = l1_convergence_report(d, beta, 20);
        holds = holds && c.tail == TailStatus::Certified && c.total_bound() <= prev;
        prev = c.total_bound();
    }
    o.require(holds, "criterion does not hold");
    if (o.pass)
        o.detail = "max entry error " + num(worst) + ", sum " + num(r.partial_sum()) + " < " + num(bound) +
                   ", criterion holds";
    return o;
}

// 25 random diagrams shared by criteria 4 and 5
std::vector<Diagram> corpus() {
    std::mt19937_64 rng(20200906);
    std::vector<Diagram> out;
    for (int t = 0; t < 25; ++t) out.push_back(oracle::random_diagram(rng, 3, 3, 0));
    return out;
}

// 4: Gibbs states satisfy KMS; beta = 0 is tracial
Outcome kms_oracle() {
    Outcome o;
    double worst = 0.0, trace_worst = 0.0;
    std::size_t quads = 0;
    for (const Diagram& d : corpus()) {
        for (std::size_t n = 1; n <= 3; ++n) {
            LevelAlgebra a(d, n);
            std::vector<double> w(a.num_blocks(), 1.0 / static_cast<double>(a.num_blocks()));
            for (double beta : {-1.0, 0.0, 1.0, 2.0}) {
                KmsReport k = check_kms(a, gibbs_state(a, beta, w), beta);
                worst = std::max(worst, k.max_violation);
                quads += k.quadruples;
            }
            BlockState s = gibbs_state(a, 0.0, w);
            for (std::uint64_t k = 0; k < 5; ++k) {
                Element x = random_element(a, k), y = random_element(a, k + 1000);
                trace_worst = std::max(trace_worst, std::abs(evaluate(s, multiply(x, y)) - evaluate(s, multiply(y, x))));
            }
        }
    }
    o.require(worst <= 1e-12, "KMS violation " + num(worst));
    o.require(trace_worst <= 1e-12, "commutator " + num(trace_worst));
    if (o.pass)
        o.detail = "max violation " + num(worst) + " over " + std::to_string(quads) + " quadruples, commutator " +
                   num(trace_worst);
    return o;
}

// 5: ground states are exactly those carried by the geodesic paths
Outcome ground_equivalence() {
    Outcome o;
    double defect = 0.0, min_ground = 0.0;
    std::size_t bad = 0, found = 0;
    for (const Diagram& d : corpus()) {
        TightSubdiagram sub = extract_geodesic_subdiagram(d, 3, exact_opts(0));
        for (std::size_t n = 1; n <= 3; ++n) {
            LevelAlgebra a(d, n);
            auto flags = geodesic_flags(a, sub);
            std::vector<std::vector<double>> pw(flags.size());
            std::size_t total = 0;
            for (const auto& f : flags)
                for (bool b : f) total += b;
            for (std::size_t v = 0; v < flags.size(); ++v)
                for (bool b : flags[v])
                    if (b) pw[v].push_back(1.0 / static_cast<double>(total));
            BlockState g = trace_to_ground(a, sub, pw);
            defect = std::max(defect, std::abs(geodesic_mass(a, sub, g) - 1.0));
            min_ground = std::min(min_ground, check_ground(a, g, 50).min_value);

            for (std::size_t v = 0; v < a.num_blocks(); ++v)
                for (std::size_t i = 0; i < a.block_size(v); ++i) {
                    if (flags[v][i]) continue;
                    BlockState s = g;
                    for (auto& r : s.rho) r *= 0.9;
                    s.rho[v](i, i) += 0.1;
                    if (geodesic_mass(a, sub, s) > 0.9 + 1e-12) continue;
                    ++bad;
                    GroundWitness w = find_ground_witness(d, a, sub, s);
                    if (w.found && w.value < -1e-10) ++found;
                }
        }
    }
    o.require(defect <= 1e-12, "w(Q_n) defect " + num(defect));
    o.require(min_ground >= -1e-10, "ground check min " + num(min_ground));
    o.require(bad > 0, "no non-ground states constructed");
    o.require(found == bad, "witnesses " + std::to_string(found) + "/" + std::to_string(bad));
    if (o.pass)
        o.detail = "defect " + num(defect) + ", min " + num(min_ground) + ", witnesses " + std::to_string(found) + "/" +
                   std::to_string(bad);
    return o;
}

// exact limit matrix by enumeration
std::vector<std::vector<Rational>> exact_limit(const Diagram& d, std::size_t j) {
    auto st = oracle::stats(d, j, 0.0);
    std::vector<std::vector<Rational>> m(d.level_size(j - 1), std::vector<Rational>(d.level_size(j), 0));
    for (const auto& p : oracle::paths(d, j))
        if (p.pot == st.min[p.verts[j]]) m[p.verts[j - 1]][p.verts[j]] += Rational(p.mult) / st.min_count[p.verts[j]];
    return m;
}

// 6: dynamic programme against enumeration
Outcome dp_vs_enumeration() {
    Outcome o;
    std::mt19937_64 rng(6);
    std::size_t diagrams = 0;
    double worst = 0.0;
    for (int t = 0; diagrams < 30 && t < 200; ++t) {
        Diagram d = oracle::random_diagram(rng, 5, 3, t % 2 ? 4 : 0, 3);
        bool small = true;
        for (std::size_t j = 1; j <= 5; ++j) {
            Integer n = 0;
            for (const auto& c : oracle::stats(d, j, 0.0).count) n += c;
            small = small && n <= 200;
        }
        if (!small) continue;
        ++diagrams;
        std::vector<double> betas{-1.0, 0.5, 2.0};
        for (NumericMode mode : {NumericMode::Float, NumericMode::Exact}) {
            PathStatistics st = compute_level_stats(d, 5, betas, mode);
            for (std::size_t j = 1; j <= 5; ++j) {
                for (std::size_t bi = 0; bi < betas.size(); ++bi) {
                    auto ref = oracle::stats(d, j, betas[bi]);
                    for (std::size_t v = 0; v < d.level_size(j); ++v) {
                        const VertexStats& s = st.levels[j].vertices[v];
                        worst = std::max(worst, std::fabs(s.log_z[bi] - ref.log_z[v]));
                        worst = std::max(worst, std::fabs(s.min_potential - ref.min[v].get_d()));
                        o.require(s.path_count == ref.count[v], "path count");
                        o.require(s.min_count == ref.min_count[v], "minimiser count, diagram " + std::to_string(t) + " level " + std::to_string(j));
                        if (mode == NumericMode::Exact) o.require(s.min_potential_exact == ref.min[v], "exact minimum");
                    }
                    worst = std::max(worst, (stochastic_matrix(st, j, bi).values - oracle::stochastic(d, j, betas[bi]))
                                                .cwiseAbs()
                                                .maxCoeff());
                }
                worst = std::max(worst, (stochastic_limit_matrix(st, j).values - oracle::limit(d, j)).cwiseAbs().maxCoeff());
                if (mode == NumericMode::Exact) {
                    ExactMatrix e = stochastic_limit_matrix_exact(st, j);
                    auto ref = exact_limit(d, j);
                    for (std::size_t v = 0; v < e.rows; ++v)
                        for (std::size_t w = 0; w < e.cols; ++w) o.require(e(v, w) == ref[v][w], "exact limit matrix");
                }
            }
        }
    }
    o.require(diagrams >= 20, "only " + std::to_string(diagrams) + " small diagrams");
    o.require(worst <= 1e-10, "max deviation " + num(worst));
    if (o.pass) o.detail = std::to_string(diagrams) + " diagrams, max deviation " + num(worst) + ", exact mode identical";
    return o;
}

// 7: perturbation round trip
Outcome perturbation_round_trip() {
    Outcome o;
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> width(1, 3);
    std::uniform_real_distribution<double> entry(0.5, 2.0), u(-1.0, 1.0);
    double worst_ratio = 0.0;
    std::size_t checks = 0;
    for (int t = 0; t < 10; ++t) {
        MatrixSystem a, b;
        std::vector<double> eps;
        Eigen::Index rows = 1;
        for (std::size_t g = 1; g <= 8; ++g) {
            Eigen::Index cols = width(rng);
            Eigen::MatrixXd m(rows, cols);
            for (Eigen::Index i = 0; i < rows; ++i)
                for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = entry(rng);
            a.push_back(m);
            rows = cols;
            eps.push_back(std::ldexp(1.0, static_cast<int>(std::floor(std::log2(growth_epsilon_limit(a, g))))));
            Eigen::MatrixXd p = m;
            for (Eigen::Index i = 0; i < p.rows(); ++i)
                for (Eigen::Index k = 0; k < p.cols(); ++k) p(i, k) *= 1.0 + eps.back() * u(rng);
            b.push_back(p);
        }
        o.require(verify_perturbation_hypothesis(a, eps, b, 1, 8).accepted, "hypothesis rejected");
        auto psi = consistent_family(a, Eigen::VectorXd::Ones(a.back().cols()));
        for (std::size_t j = 1; j <= 4; ++j)
            for (std::size_t k = 0; j + k <= 7; ++k) {
                RoundTrip r = round_trip_defect(a, b, psi, j, k);
                ++checks;
                o.require(r.defect <= r.bound, "defect above 4^{-j-k+1} psi^0");
                worst_ratio = std::max(worst_ratio, r.defect / r.bound);
            }
    }
    if (o.pass)
        o.detail = "10 instances, " + std::to_string(checks) + " (j,k) pairs, max defect/bound " + num(worst_ratio);
    return o;
}

// 8: ground/ceiling construction with C^2 and C^3 targets
Outcome ground_ceiling() {
    Outcome o;
    auto t0 = Clock::now();
    ConstructionCertificate c = construct_ground_ceiling(oracle::load("two_columns.json"),
                                                         oracle::load("three_columns.json"), Supernatural::dyadic(), 12);
    GeodesicCounts g = geodesic_block_counts(c.output);
    double secs = seconds_since(t0);
    for (std::size_t n = 2; n < g.ground.size(); ++n) {
        o.require(g.ground[n] == 2, "level " + std::to_string(n) + ": " + std::to_string(g.ground[n]) + " ground blocks");
        o.require(g.ceiling[n] == 3,
                  "level " + std::to_string(n) + ": " + std::to_string(g.ceiling[n]) + " ceiling blocks");
    }
    o.require(g.ground.size() == 12, "certified levels");
    double agreement = 0.0;
    for (double beta : {-2.0, -1.0, 1.0, 2.0}) {
        KmsOptions opt;
        opt.tol = 1e-12;
        MultiSeedResult r = kms_multi_seed(c.output, beta, 1, seed_set(c.output.level_size(1), 5), opt);
        agreement = std::max(agreement, r.agreement);
    }
    o.require(agreement < 1e-8, "seed agreement " + num(agreement));
    for (const auto& e : c.verification) o.require(e.pass, "certificate check failed: " + e.check);
    secs = seconds_since(t0);
    o.require(secs < 60.0, "runtime " + num(secs) + " s");
    if (o.pass)
        o.detail = "levels 2..11: 2 ground / 3 ceiling blocks, agreement " + num(agreement) + ", " + num(secs) + " s";
    return o;
}

// 9: CLI determinism
struct Run {
    int code = -1;
    std::string out;
};

Run run_cli(const std::string& args) {
    std::string cmd = std::string(BRATTELI_CLI) + " " + args + " 2>/dev/null";
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
    int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism() {
    Outcome o;
    fs::path dir = fs::temp_directory_path() / ("bratteli_accept_" + std::to_string(getpid()));
    fs::create_directories(dir);
    auto data = [](const std::string& f) { return oracle::data(f); };
    std::string br2 = data("car_two_columns.json");
    std::string c2 = data("two_columns.json"), c3 = data("three_columns.json");
    fs::path state = dir / "fixed_state.json";
    run_cli("state gibbs " + br2 + " --level 2 --beta 1 --out " + state.string());

    // {label, args with @ for the per-run output directory}
    std::vector<std::pair<std::string, std::string>> cmds{
        {"geodesics", "geodesics " + br2 + " --dot @/g.dot"},
        {"kms", "kms " + br2 + " --beta -2,1,0.5 --csv @/k.csv"},
        {"kms-infinity", "kms-infinity " + br2},
        {"construct uhf-embed", "construct uhf-embed --base " + br2 + " --depth 6 --out @/c.json --diagram @/d.json"},
        {"construct ground-ceiling",
         "construct ground-ceiling --plus " + c2 + " --minus " + c3 + " --depth 8 --out @/c.json --diagram @/d.json"},
        {"construct rigid-kms",
         "construct rigid-kms --base " + br2 + " --depth 3 --cuts-every 2 --out @/c.json --diagram @/d.json"},
        {"construct main", "construct main --f " + br2 + " --plus " + c2 + " --minus " + c3 +
                               " --depth 5 --cuts-every 2 --out @/c.json --diagram @/d.json"},
        {"check", "check " + br2 + " --level 2 --state " + state.string() + " --beta 5 --ground"},
        {"state", "state random " + br2 + " --level 2 --seed 11 --out @/s.json"},
    };
    for (const auto& [label, args] : cmds) {
        std::vector<std::map<std::string, std::string>> snaps;
        std::vector<Run> runs;
        for (int rep = 0; rep < 2; ++rep) {
            fs::path out = dir / ("run" + std::to_string(rep));
            fs::remove_all(out);
            fs::create_directories(out);
            std::string a = args;
            for (std::size_t pos; (pos = a.find('@')) != std::string::npos;) a.replace(pos, 1, out.string());
            runs.push_back(run_cli("--json " + (out / "report.json").string() + " " + a));
            std::map<std::string, std::string> files;
            for (const auto& e : fs::directory_iterator(out)) {
                std::string text = slurp(e.path());
                // the report records the paths it was given
                for (std::size_t pos; (pos = text.find(out.string())) != std::string::npos;)
                    text.replace(pos, out.string().size(), "@");
                files[e.path().filename().string()] = text;
            }
            snaps.push_back(files);
        }
        o.require(runs[0].code == runs[1].code, label + ": exit codes differ");
        o.require(runs[0].code == 0, label + ": exit " + std::to_string(runs[0].code));
        o.require(runs[0].out == runs[1].out, label + ": stdout differs");
        o.require(snaps[0] == snaps[1], label + ": output files differ");
        o.require(snaps[0].count("report.json") == 1, label + ": no report");
    }
    fs::remove_all(dir);
    if (o.pass) o.detail = std::to_string(cmds.size()) + " commands, stdout and files byte-identical";
    return o;
}

}  // namespace

int main() {
    std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"geodesic examples", geodesic_examples},
        {"two-column KMS and KMS_inf probe", two_column_kms},
        {"growing-cross closed form and summability", growing_cross},
        {"Gibbs KMS oracle", kms_oracle},
        {"ground-state equivalence", ground_equivalence},
        {"DP against enumeration", dp_vs_enumeration},
        {"perturbation round trip", perturbation_round_trip},
        {"ground/ceiling construction", ground_ceiling},
        {"CLI determinism", determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": " << o.detail
                  << std::endl;
    }
    return failed ? 1 : 0;
}
