#include "bratteli/constructions.hpp"

#include "bratteli/diagram_io.hpp"
#include "bratteli/kms.hpp"
#include "bratteli/path_statistics.hpp"
#include "bratteli/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bratteli {

std::optional<Integer> Supernatural::at(std::size_t i) const {
    if (i == 0 || factors.empty()) return std::nullopt;
    if (cyclic) return factors[(i - 1) % factors.size()];
    if (i <= factors.size()) return factors[i - 1];
    return std::nullopt;
}

void Supernatural::validate() const {
    if (factors.empty()) throw std::invalid_argument("supernatural sequence is empty");
    for (const auto& d : factors)
        if (d < 2) throw std::invalid_argument("supernatural factors must be at least 2");
}

Supernatural supernatural_from_json(const nlohmann::json& j) {
    Supernatural s;
    auto read = [](const nlohmann::json& x) {
        if (x.is_string()) return Integer(x.get<std::string>());
        return Integer(std::to_string(x.get<long long>()));
    };
    if (j.is_array()) {
        for (const auto& x : j) s.factors.push_back(read(x));
    } else {
        for (const auto& x : j.at("factors")) s.factors.push_back(read(x));
        s.cyclic = j.value("cyclic", true);
    }
    s.validate();
    return s;
}

nlohmann::json to_json(const Supernatural& s) {
    nlohmann::json f = nlohmann::json::array();
    for (const auto& d : s.factors) {
        if (d.fits_slong_p()) f.push_back(d.get_si());
        else f.push_back(to_string(d));
    }
    return {{"factors", f}, {"cyclic", s.cyclic}};
}

bool ConstructionCertificate::all_pass() const {
    return std::all_of(verification.begin(), verification.end(), [](const auto& e) { return e.pass; });
}

nlohmann::json ConstructionCertificate::to_json() const {
    nlohmann::json ver = nlohmann::json::array();
    for (const auto& e : verification) ver.push_back({{"check", e.check}, {"pass", e.pass}, {"detail", e.detail}});
    return {{"construction", construction},
            {"schedules", schedules},
            {"verification", ver},
            {"warnings", warnings},
            {"all_pass", all_pass()},
            {"output", bratteli::to_json(output)}};
}

Diagram point_diagram(std::size_t depth) {
    std::vector<std::vector<std::string>> levels{{"v0"}};
    std::vector<std::vector<Arrow>> gaps;
    for (std::size_t j = 1; j <= depth; ++j) {
        levels.push_back({"p"});
        gaps.push_back({Arrow{0, 0, Potential{}, 1}});
    }
    return Diagram(std::move(levels), std::move(gaps));
}

namespace {

nlohmann::json int_json(const Integer& n) {
    if (n.fits_slong_p()) return n.get_si();
    return to_string(n);
}

nlohmann::json potential_json(const Potential& p) { return potential_to_json(p); }

Integer margin_at(const std::vector<Integer>& margins, std::size_t j) {
    if (margins.empty()) return 0;
    return margins[std::min(j, margins.size()) - 1];
}

Integer max_entry(const MultiplicityMatrix& m) {
    Integer hi = 0;
    for (const auto& e : m.entries) hi = std::max(hi, e);
    return hi;
}

// number of paths from v0 to each vertex of level j, j = 0..depth
std::vector<std::vector<Integer>> path_counts(const Diagram& d, std::size_t depth) {
    std::vector<std::vector<Integer>> out{{Integer(1)}};
    for (std::size_t g = 1; g <= depth; ++g) {
        std::vector<Integer> next(d.level_size(g), 0);
        for (const Arrow& a : d.arrows(g)) next[a.range] += out.back()[a.source] * a.count;
        out.push_back(std::move(next));
    }
    return out;
}

Eigen::MatrixXd multiplicity_as_double(const Diagram& d, std::size_t gap) {
    MultiplicityMatrix m = multiplicity_matrix(d, gap);
    Eigen::MatrixXd out(m.rows, m.cols);
    for (std::size_t v = 0; v < m.rows; ++v)
        for (std::size_t w = 0; w < m.cols; ++w) out(v, w) = m(v, w).get_d();
    return out;
}

MatrixSystem gauge_system(const Diagram& d, std::size_t depth, double beta) {
    MatrixSystem s;
    for (std::size_t g = 1; g <= depth; ++g) s.push_back(gauge_matrix(d, g, beta).values);
    return s;
}

// largest 2^e with e <= -2 and 2^e <= exp(log_bound)
int power_of_two_below(double log_bound) {
    if (!std::isfinite(log_bound)) return log_bound > 0 ? -2 : std::numeric_limits<int>::min();
    int e = static_cast<int>(std::floor(log_bound / std::log(2.0)));
    while (e * std::log(2.0) > log_bound) --e;
    return std::min(e, -2);
}

std::string pow2_string(int e) { return "2^" + std::to_string(e); }

}  // namespace

UhfEmbedding construct_uhf_embedding(const Diagram& base, const std::vector<Integer>& margins, const Supernatural& uhf,
                                     std::size_t depth) {
    uhf.validate();
    base.require_level(depth);
    UhfEmbedding out{{"uhf_embedding", point_diagram(0), {}, {}, {}}, {}, {}};
    UhfSchedule& sch = out.schedule;
    std::vector<std::vector<std::string>> levels;
    for (std::size_t j = 0; j <= depth; ++j) levels.push_back(base.level(j));
    std::vector<std::vector<Arrow>> gaps;
    std::size_t idx = 0;
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t j = 1; j <= depth; ++j) {
        MultiplicityMatrix m = multiplicity_matrix(base, j);
        Integer need = max_entry(m) + margin_at(margins, j);
        Integer n = base.level_size(j);
        Integer p = 1, s = 0;
        do {
            auto d = uhf.at(++idx);
            if (!d) {
                throw ConstructionError("uhf sequence exhausted at gap " + std::to_string(j) +
                                            ": the block products cannot reach S_j >= " + to_string(need),
                                        j);
            }
            p *= *d;
            s = p / n;
        } while (s < need);
        Integer r = p % n;
        sch.cuts.push_back(idx);
        sch.block.push_back(p);
        sch.s.push_back(s);
        sch.r.push_back(r);
        sch.u.push_back(0);

        std::vector<Arrow> arrows = base.arrows(j);
        out.first_extra.push_back(arrows.size());
        for (std::size_t w = 0; w < m.cols; ++w)
            for (std::size_t v = 0; v < m.rows; ++v) {
                Integer target = s + (v == 0 ? r : Integer(0));
                Integer extra = target - m(v, w);
                if (extra > 0) arrows.push_back(Arrow{w, v, Potential{}, extra});
            }
        gaps.push_back(std::move(arrows));
        rows.push_back({{"gap", j},
                        {"k", idx},
                        {"block_product", int_json(p)},
                        {"S", int_json(s)},
                        {"r", int_json(r)},
                        {"u", base.level(j)[0]},
                        {"margin", int_json(margin_at(margins, j))}});
    }
    out.certificate.output = Diagram(std::move(levels), std::move(gaps));
    out.certificate.schedules = {{"uhf", to_json(uhf)}, {"gaps", rows}};
    out.certificate.verification = verify_uhf_embedding(base, margins, uhf, out.certificate.output, sch);
    return out;
}

std::vector<VerificationEntry> verify_uhf_embedding(const Diagram& base, const std::vector<Integer>& margins,
                                                    const Supernatural& uhf, const Diagram& output,
                                                    const UhfSchedule& sch) {
    std::vector<VerificationEntry> v;
    std::size_t depth = sch.cuts.size();
    bool same_vertices = true;
    for (std::size_t j = 0; j <= depth; ++j) same_vertices = same_vertices && output.level(j) == base.level(j);
    v.push_back({"same vertex sets", same_vertices, {{"levels", depth + 1}}});

    bool dominate = true, sums = true, minimal = true;
    nlohmann::json bad = nlohmann::json::array();
    std::size_t prev = 0;
    for (std::size_t j = 1; j <= depth; ++j) {
        MultiplicityMatrix mb = multiplicity_matrix(base, j);
        MultiplicityMatrix mo = multiplicity_matrix(output, j);
        Integer m = margin_at(margins, j);
        for (std::size_t a = 0; a < mb.rows; ++a)
            for (std::size_t b = 0; b < mb.cols; ++b)
                if (mo(a, b) < mb(a, b) + m) {
                    dominate = false;
                    bad.push_back({{"gap", j}, {"check", "dominate"}});
                }
        Integer block = 1, without_last = 1;
        for (std::size_t i = prev + 1; i <= sch.cuts[j - 1]; ++i) {
            Integer d = *uhf.at(i);
            block *= d;
            if (i < sch.cuts[j - 1]) without_last *= d;
        }
        for (std::size_t b = 0; b < mo.cols; ++b) {
            Integer col = 0;
            for (std::size_t a = 0; a < mo.rows; ++a) col += mo(a, b);
            if (col != block) {
                sums = false;
                bad.push_back({{"gap", j}, {"check", "column sum"}});
            }
        }
        Integer need = max_entry(mb) + m;
        if (without_last / Integer(base.level_size(j)) >= need && sch.cuts[j - 1] > prev + 1) {
            minimal = false;
            bad.push_back({{"gap", j}, {"check", "minimal cut"}});
        }
        prev = sch.cuts[j - 1];
    }
    v.push_back({"multiplicities dominate base plus margin", dominate, {}});
    v.push_back({"column sums equal supernatural block products", sums, {}});
    v.push_back({"cut points minimal", minimal, {}});
    if (!bad.empty()) v.back().detail = {{"failures", bad}};
    return v;
}

Diagram disjoint_union(const Diagram& plus, const Diagram& minus, std::size_t depth) {
    if (depth < 1) throw std::invalid_argument("depth must be at least 1");
    plus.require_level(depth - 1);
    minus.require_level(depth - 1);
    std::vector<std::vector<std::string>> levels{{"v0"}};
    std::vector<std::vector<Arrow>> gaps;
    for (std::size_t j = 1; j <= depth; ++j) {
        std::vector<std::string> names;
        for (const auto& x : plus.level(j - 1)) names.push_back("+:" + x);
        for (const auto& y : minus.level(j - 1)) names.push_back("-:" + y);
        levels.push_back(std::move(names));
        if (j == 1) {
            gaps.push_back({Arrow{0, 0, Potential{}, 1}, Arrow{0, 1, Potential{}, 1}});
            continue;
        }
        std::size_t op = plus.level_size(j - 2), np = plus.level_size(j - 1);
        std::vector<Arrow> arrows;
        for (Arrow a : plus.arrows(j - 1)) arrows.push_back(a);
        for (Arrow a : minus.arrows(j - 1)) {
            a.source += op;
            a.range += np;
            arrows.push_back(a);
        }
        gaps.push_back(std::move(arrows));
    }
    return Diagram(std::move(levels), std::move(gaps));
}

GeodesicCounts geodesic_block_counts(const Diagram& d) {
    auto dd = d.depth();
    if (!dd || *dd < 1) throw std::invalid_argument("geodesic block counts need a finite diagram of depth >= 1");
    GeodesicOptions opt;
    opt.lookahead = 1;
    opt.mode = NumericMode::Exact;
    GeodesicCounts c;
    auto count = [&](const Diagram& x, std::vector<std::size_t>& out) {
        TightSubdiagram sub = extract_geodesic_subdiagram(x, *dd - 1, opt);
        AlgebraProfile prof = ground_state_algebra_profile(sub, *dd - 1);
        for (const auto& b : prof.blocks) out.push_back(b.size());
    };
    count(d, c.ground);
    count(negate_potential(d), c.ceiling);
    return c;
}

namespace {

// block sizes (path counts) of every vertex of `d` at `level`, keyed by prefixed name
std::vector<std::pair<std::string, Integer>> expected_blocks(const Diagram& d, std::size_t level, const std::string& prefix) {
    auto counts = path_counts(d, level);
    std::vector<std::pair<std::string, Integer>> out;
    for (std::size_t v = 0; v < d.level_size(level); ++v) out.emplace_back(prefix + d.level(level)[v], counts[level][v]);
    return out;
}

VerificationEntry profile_check(const std::string& name, const Diagram& out, const Diagram& target,
                                const std::string& prefix, bool negate) {
    std::size_t depth = *out.depth();
    GeodesicOptions opt;
    opt.lookahead = 1;
    opt.mode = NumericMode::Exact;
    TightSubdiagram sub = extract_geodesic_subdiagram(negate ? negate_potential(out) : out, depth - 1, opt);
    AlgebraProfile prof = ground_state_algebra_profile(sub, depth - 1);
    // same vertices, block sizes a fixed multiple of the target's path counts
    bool ok = depth >= 2 && prof.blocks[1].size() == 1;
    Integer factor = ok ? prof.blocks[1][0].size : Integer(0);
    nlohmann::json per_level = nlohmann::json::array();
    for (std::size_t n = 1; n + 1 <= depth; ++n) {
        auto want = expected_blocks(target, n - 1, prefix);
        bool same = want.size() == prof.blocks[n].size();
        for (std::size_t i = 0; same && i < want.size(); ++i)
            same = prof.blocks[n][i].vertex == want[i].first && prof.blocks[n][i].size == factor * want[i].second;
        ok = ok && same;
        per_level.push_back({{"level", n}, {"blocks", prof.blocks[n].size()}, {"profile", describe_blocks(prof.blocks[n])}});
    }
    return {name, ok,
            {{"levels", per_level}, {"multiplicity", int_json(factor)}, {"lookahead", 1},
             {"certification", to_string(sub.certification)}}};
}

VerificationEntry kms_agreement_check(const Diagram& d, const std::vector<double>& betas, double tol) {
    bool ok = true;
    nlohmann::json rows = nlohmann::json::array();
    std::size_t base = 1;
    for (double beta : betas) {
        KmsOptions opt;
        opt.tol = 1e-12;
        auto seeds = seed_set(d.level_size(*d.depth()), 5);
        MultiSeedResult r = kms_multi_seed(d, beta, base, seeds, opt);
        bool pass = r.agreement < tol;
        ok = ok && pass;
        rows.push_back({{"beta", beta}, {"agreement", r.agreement}, {"seeds", seeds.size()}, {"depth", r.iterations},
                        {"pass", pass}});
    }
    return {"multi-seed KMS agreement", ok, {{"tolerance", tol}, {"base_level", base}, {"betas", rows}}};
}

}  // namespace

ConstructionCertificate construct_ground_ceiling(const Diagram& plus, const Diagram& minus, const Supernatural& uhf,
                                                 std::size_t depth) {
    Diagram u = disjoint_union(plus, minus, depth);
    UhfEmbedding emb = construct_uhf_embedding(u, {Integer(1)}, uhf, depth);
    const Diagram& fat = emb.certificate.output;

    auto counts = path_counts(fat, depth);
    std::vector<int> delta_exp;
    std::vector<double> eps;
    double log_norms = 0.0;
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t j = 1; j <= depth; ++j) {
        log_norms += std::log(2.0 * operator_norm_2(multiplicity_as_double(fat, j)) + 1.0);
        double min_log_paths = std::numeric_limits<double>::infinity();
        for (const auto& c : counts[j]) min_log_paths = std::min(min_log_paths, log_of(c));
        double log_bound = -static_cast<double>(j) * std::log(4.0) - std::log(static_cast<double>(fat.level_size(j))) -
                           log_norms + min_log_paths;
        int e = power_of_two_below(log_bound);
        double delta = std::ldexp(1.0, e);
        double epsilon = std::log1p(delta) / static_cast<double>(j);
        delta_exp.push_back(e);
        eps.push_back(epsilon);
        rows.push_back({{"gap", j}, {"delta", pow2_string(e)}, {"log_delta_bound", log_bound}, {"epsilon", epsilon}});
    }

    // potentials: -eps on embedded plus arrows, +eps on embedded minus arrows, 0 elsewhere
    std::vector<std::vector<std::string>> levels;
    for (std::size_t j = 0; j <= depth; ++j) levels.push_back(fat.level(j));
    std::vector<std::vector<Arrow>> gaps;
    for (std::size_t j = 1; j <= depth; ++j) {
        std::vector<Arrow> arrows = fat.arrows(j);
        if (j >= 2) {
            std::size_t np = plus.level_size(j - 2);
            Potential e = Potential::from_double(eps[j - 1]);
            for (std::size_t c = 0; c < emb.first_extra[j - 1]; ++c)
                arrows[c].potential = arrows[c].source < np ? -e : e;
        }
        for (std::size_t c = emb.first_extra[j - 1]; c < arrows.size(); ++c) arrows[c].potential = Potential{};
        gaps.push_back(std::move(arrows));
    }

    ConstructionCertificate cert{"ground_ceiling", Diagram(std::move(levels), std::move(gaps)), {}, {}, {}};
    cert.schedules = {{"uhf_embedding", emb.certificate.schedules}, {"gaps", rows}};
    for (auto e : emb.certificate.verification) {
        e.check = "uhf: " + e.check;
        cert.verification.push_back(e);
    }

    // re-derive the delta bound from the output multiplicities alone
    {
        auto oc = path_counts(cert.output, depth);
        double ln = 0.0;
        bool ok = true;
        for (std::size_t j = 1; j <= depth; ++j) {
            ln += std::log(2.0 * operator_norm_2(multiplicity_as_double(cert.output, j)) + 1.0);
            for (const auto& c : oc[j]) {
                double lhs = delta_exp[j - 1] * std::log(2.0) + std::log(static_cast<double>(cert.output.level_size(j))) +
                             ln - log_of(c);
                ok = ok && lhs <= -static_cast<double>(j) * std::log(4.0) + 1e-12;
            }
            ok = ok && delta_exp[j - 1] <= -2;
        }
        cert.verification.push_back({"delta growth bound", ok, {}});
    }
    {
        bool ok = true;
        for (std::size_t j = 1; j <= depth; ++j) {
            double d = std::ldexp(1.0, delta_exp[j - 1]);
            double jj = static_cast<double>(j);
            ok = ok && std::expm1(jj * eps[j - 1]) <= d * (1.0 + 1e-12) && -std::expm1(-jj * eps[j - 1]) <= d;
        }
        cert.verification.push_back({"|exp(beta eps_j) - 1| <= delta_j on [-j, j]", ok, {}});
    }
    {
        // entrywise closeness of the gauge matrices to the transposed multiplicities
        bool ok = true;
        for (std::size_t j = 1; j <= depth; ++j) {
            Eigen::MatrixXd mt = multiplicity_as_double(cert.output, j).transpose();
            double d = std::ldexp(1.0, delta_exp[j - 1]);
            for (double beta : {-static_cast<double>(j), static_cast<double>(j)}) {
                Eigen::MatrixXd g = gauge_matrix(cert.output, j, beta).values;
                ok = ok && ((g - mt).cwiseAbs().array() <= d * mt.array() * (1.0 + 1e-12) + 1e-300).all();
            }
        }
        cert.verification.push_back({"gauge matrices within delta_j of multiplicities", ok, {}});
    }
    cert.verification.push_back(profile_check("ground profile matches the plus diagram", cert.output, plus, "+:", false));
    cert.verification.push_back(profile_check("ceiling profile matches the minus diagram", cert.output, minus, "-:", true));
    cert.verification.push_back(kms_agreement_check(cert.output, {-2.0, -1.0, 1.0, 2.0}, 1e-8));
    return cert;
}

std::vector<double> beta_window_grid(std::size_t j) {
    double b = static_cast<double>(j);
    std::vector<double> g;
    for (long k = -static_cast<long>(j); k <= static_cast<long>(j); ++k) g.push_back(static_cast<double>(k));
    for (int i = 1; i <= 50; ++i) g.push_back(-b + 2.0 * b * i / 51.0);
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    return g;
}

ConstructionCertificate construct_rigid_kms(const Diagram& base, const Supernatural& uhf, std::size_t depth) {
    uhf.validate();
    if (depth < 1) throw std::invalid_argument("depth must be at least 1");
    if (!base.has_level(depth + 1))
        throw DiagramError("depth: rigid construction to depth " + std::to_string(depth) + " needs base level " +
                           std::to_string(depth + 1));
    for (std::size_t j = 1; j <= depth; ++j) {
        MultiplicityMatrix m = multiplicity_matrix(base, j);
        for (const auto& e : m.entries)
            if (e < 2)
                throw ConstructionError("base multiplicity below 2 at gap " + std::to_string(j) +
                                            "; telescope the base diagram first",
                                        j);
    }

    // reference path: first arrow class out of each vertex along the way
    std::vector<std::size_t> q;
    std::size_t at = 0;
    for (std::size_t j = 1; j <= depth; ++j) {
        auto arrows = base.arrows(j);
        std::size_t c = 0;
        while (arrows[c].source != at) ++c;
        q.push_back(c);
        at = arrows[c].range;
    }

    std::vector<Potential> m_plus, m_minus;
    std::vector<double> eps;
    std::vector<Integer> dj;
    std::vector<std::size_t> cuts;
    nlohmann::json rows = nlohmann::json::array();
    std::size_t idx = 0;
    for (std::size_t j = 1; j <= depth; ++j) {
        auto a = base.arrows(j), b = base.arrows(j + 1);
        auto lo_hi = [](const std::vector<Arrow>& x) {
            Rational lo = x.front().potential.exact, hi = lo;
            for (const auto& y : x) {
                lo = std::min(lo, y.potential.exact);
                hi = std::max(hi, y.potential.exact);
            }
            return std::make_pair(lo, hi);
        };
        auto [alo, ahi] = lo_hi(a);
        auto [blo, bhi] = lo_hi(b);
        Rational lo = alo + blo - bhi, hi = ahi + bhi - blo;
        Rational span = hi - lo;
        Rational margin = sgn(span) > 0 ? Rational(span / 10) : Rational(std::max(Rational(1), Rational(abs(lo))) / 10);
        m_plus.push_back(Potential::from_rational(lo - margin));
        m_minus.push_back(Potential::from_rational(hi + margin));

        // eps_j from the growth condition over [-j, j]
        double log_eps = std::numeric_limits<double>::infinity();
        for (double beta : beta_window_grid(j)) {
            MatrixSystem sys = gauge_system(base, j, beta);
            log_eps = std::min(log_eps, std::log(growth_epsilon_limit(sys, j)));
        }
        int e = power_of_two_below(log_eps);
        double epsilon = std::ldexp(1.0, e);
        eps.push_back(epsilon);

        // D_j: smallest block product meeting the closeness condition on the grid
        double fq = a[q[j - 1]].potential.value;
        double need = -std::numeric_limits<double>::infinity();
        for (double beta : beta_window_grid(j)) {
            double x = std::exp(-beta * (m_minus.back().value - fq)) + std::exp(-beta * (m_plus.back().value - fq)) - 2.0;
            if (x != 0.0) need = std::max(need, std::log(std::fabs(x)) - std::log(epsilon));
        }
        Integer d = 1;
        do {
            auto f = uhf.at(++idx);
            if (!f)
                throw ConstructionError("uhf sequence exhausted at gap " + std::to_string(j) + " while choosing D_j", j);
            d *= *f;
        } while (d < 2 || log_of(d) < need);
        dj.push_back(d);
        cuts.push_back(idx);
        rows.push_back({{"gap", j},
                        {"m_plus", potential_json(m_plus.back())},
                        {"m_minus", potential_json(m_minus.back())},
                        {"epsilon", pow2_string(e)},
                        {"i", idx},
                        {"D", int_json(d)},
                        {"q_class", q[j - 1]},
                        {"q_potential", potential_json(a[q[j - 1]].potential)}});
    }

    std::vector<std::vector<std::string>> levels;
    for (std::size_t j = 0; j <= depth; ++j) levels.push_back(base.level(j));
    std::vector<std::vector<Arrow>> gaps;
    std::vector<std::size_t> plus_class;
    for (std::size_t j = 1; j <= depth; ++j) {
        std::vector<Arrow> out;
        auto arrows = base.arrows(j);
        for (std::size_t c = 0; c < arrows.size(); ++c) {
            Arrow a = arrows[c];
            Integer total = dj[j - 1] * a.count;
            if (c != q[j - 1]) {
                a.count = total;
                out.push_back(a);
                continue;
            }
            plus_class.push_back(out.size());
            out.push_back(Arrow{a.source, a.range, m_plus[j - 1], 1});
            out.push_back(Arrow{a.source, a.range, m_minus[j - 1], 1});
            if (total > 2) out.push_back(Arrow{a.source, a.range, a.potential, total - 2});
        }
        gaps.push_back(std::move(out));
    }

    ConstructionCertificate cert{"rigid_kms", Diagram(std::move(levels), std::move(gaps)), {}, {}, {}};
    cert.schedules = {{"uhf_minus", to_json(uhf)}, {"gaps", rows}, {"beta_grid", "integers in [-j, j] plus 50 interior points"}};

    {
        bool ok = true;
        for (std::size_t j = 1; j <= depth; ++j) {
            for (const Arrow& a : base.arrows(j))
                for (const Arrow& b : base.arrows(j + 1))
                    for (const Arrow& c : base.arrows(j + 1)) {
                        Rational x = a.potential.exact + b.potential.exact - c.potential.exact;
                        ok = ok && m_plus[j - 1].exact < x && x < m_minus[j - 1].exact;
                    }
        }
        cert.verification.push_back({"m+ < F(a) + F(b) - F(c) < m-", ok, {}});
    }
    {
        bool ok = true;
        for (std::size_t j = 1; j <= depth; ++j) {
            MultiplicityMatrix mb = multiplicity_matrix(base, j), mo = multiplicity_matrix(cert.output, j);
            for (std::size_t i = 0; i < mb.entries.size(); ++i) ok = ok && mo.entries[i] == dj[j - 1] * mb.entries[i];
        }
        cert.verification.push_back({"output multiplicities are D_j times the base", ok, {}});
    }
    {
        bool ok = true;
        for (std::size_t j = 1; j <= depth; ++j) {
            double fq = base.arrows(j)[q[j - 1]].potential.value;
            for (double beta : beta_window_grid(j)) {
                double x = std::exp(-beta * (m_minus[j - 1].value - fq)) + std::exp(-beta * (m_plus[j - 1].value - fq)) - 2.0;
                ok = ok && std::fabs(x) / dj[j - 1].get_d() <= eps[j - 1] * (1.0 + 1e-12);
            }
        }
        cert.verification.push_back({"D_j closeness on the beta grid", ok, {}});
    }
    {
        GeodesicCounts gc = geodesic_block_counts(cert.output);
        bool ok = true;
        for (std::size_t n = 0; n < gc.ground.size(); ++n) ok = ok && gc.ground[n] == 1 && gc.ceiling[n] == 1;
        // the ground path runs through the m+ arrows
        GeodesicOptions opt;
        opt.lookahead = 1;
        opt.mode = NumericMode::Exact;
        TightSubdiagram sub = extract_geodesic_subdiagram(cert.output, depth - 1, opt);
        TightSubdiagram neg = extract_geodesic_subdiagram(negate_potential(cert.output), depth - 1, opt);
        for (std::size_t j = 1; j + 1 <= depth; ++j) {
            ok = ok && sub.arrow_alive[j - 1][plus_class[j - 1]];
            ok = ok && neg.arrow_alive[j - 1][plus_class[j - 1] + 1];
        }
        cert.verification.push_back({"single ground and ceiling geodesic", ok,
                                     {{"ground_blocks", gc.ground}, {"ceiling_blocks", gc.ceiling}, {"lookahead", 1}}});
    }
    {
        bool ok = true;
        nlohmann::json per_beta = nlohmann::json::array();
        for (double beta : {-2.0, -1.0, 1.0, 2.0}) {
            std::size_t n = static_cast<std::size_t>(std::ceil(std::fabs(beta)));
            MatrixSystem a = gauge_system(base, depth, beta);
            MatrixSystem b = gauge_system(cert.output, depth, beta);
            for (std::size_t j = 0; j < depth; ++j) b[j] /= dj[j].get_d();
            HypothesisReport h = verify_perturbation_hypothesis(a, eps, b, std::max<std::size_t>(n, 1), depth);
            ok = ok && h.accepted;
            nlohmann::json row{{"beta", beta}, {"from_gap", std::max<std::size_t>(n, 1)}, {"accepted", h.accepted}};
            if (!h.accepted) row["first_failing_gap"] = *h.first_failing_gap;
            per_beta.push_back(row);
        }
        cert.verification.push_back({"perturbation hypothesis for D_j^-1 Br'(beta) against Br(beta)", ok, per_beta});
    }
    return cert;
}

ConstructionCertificate main_theorem_pipeline(const Diagram& spec_f, const Diagram& plus, const Diagram& minus,
                                              const Supernatural& u1, const Supernatural& u2, std::size_t depth) {
    ConstructionCertificate c1 = construct_ground_ceiling(plus, minus, u1, depth);
    ConstructionCertificate c2 = construct_rigid_kms(spec_f, u2, depth);
    ConstructionCertificate cert{"main", product(c1.output, c2.output), {}, {}, {}};
    cert.schedules = {{"ground_ceiling", c1.schedules}, {"rigid_kms", c2.schedules}};
    for (const auto* c : {&c1, &c2})
        for (auto e : c->verification) {
            e.check = c->construction + ": " + e.check;
            cert.verification.push_back(e);
        }

    GeodesicCounts gp = geodesic_block_counts(cert.output);
    GeodesicCounts g1 = geodesic_block_counts(c1.output);
    GeodesicCounts g2 = geodesic_block_counts(c2.output);
    bool ground = true, ceiling = true;
    for (std::size_t n = 0; n < gp.ground.size(); ++n) {
        ground = ground && gp.ground[n] == g1.ground[n] * g2.ground[n];
        ceiling = ceiling && gp.ceiling[n] == g1.ceiling[n] * g2.ceiling[n];
    }
    cert.verification.push_back({"product ground profile", ground, {{"blocks", gp.ground}}});
    cert.verification.push_back({"product ceiling profile", ceiling, {{"blocks", gp.ceiling}}});

    bool fact = true;
    nlohmann::json rows = nlohmann::json::array();
    for (double beta : {-1.0, 1.0}) {
        std::size_t k = depth - 1;
        auto dp = kms_vertex_distribution(cert.output, beta, 1, k, Seed::uniform()).values;
        auto d1 = kms_vertex_distribution(c1.output, beta, 1, k, Seed::uniform()).values;
        auto d2 = kms_vertex_distribution(c2.output, beta, 1, k, Seed::uniform()).values;
        Eigen::VectorXd kron(d1.size() * d2.size());
        for (Eigen::Index i = 0; i < d1.size(); ++i)
            for (Eigen::Index j = 0; j < d2.size(); ++j) kron(i * d2.size() + j) = d1(i) * d2(j);
        double err = (dp - kron).cwiseAbs().maxCoeff();
        fact = fact && err <= 1e-10;
        rows.push_back({{"beta", beta}, {"max_abs_difference", err}});
    }
    cert.verification.push_back({"KMS distribution factorises over the product", fact, {{"tolerance", 1e-10}, {"betas", rows}}});
    return cert;
}

}  // namespace bratteli
