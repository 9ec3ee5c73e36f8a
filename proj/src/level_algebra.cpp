#include "bratteli/level_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace bratteli {

namespace {

bool same_last_arrow(const LevelPath& a, const LevelPath& b) {
    return a.cls.back() == b.cls.back() && a.replica.back() == b.replica.back();
}

void require_shape(const LevelAlgebra& alg, const Element& a) {
    if (a.size() != alg.num_blocks()) throw std::invalid_argument("element block count does not match the algebra");
    for (std::size_t v = 0; v < a.size(); ++v)
        if (static_cast<std::size_t>(a[v].rows()) != alg.block_size(v) ||
            static_cast<std::size_t>(a[v].cols()) != alg.block_size(v))
            throw std::invalid_argument("element block " + std::to_string(v) + " has the wrong size");
}

void require_next(const LevelAlgebra& alg, const LevelAlgebra& next) {
    if (next.level() != alg.level() + 1) throw std::invalid_argument("algebras are not at consecutive levels");
}

}  // namespace

LevelAlgebra::LevelAlgebra(const Diagram& d, std::size_t n, std::size_t cap) : diagram_(d.prefix(n)), n_(n) {
    names_ = diagram_.level(n);
    std::vector<std::vector<LevelPath>> cur(1);
    cur[0].push_back(LevelPath{});
    for (std::size_t g = 1; g <= n; ++g) {
        arrows_.push_back(diagram_.arrows(g));
        const auto& arrows = arrows_.back();
        std::vector<std::vector<LevelPath>> next(diagram_.level_size(g));
        std::size_t total = 0;
        for (std::size_t c = 0; c < arrows.size(); ++c) {
            const Arrow& a = arrows[c];
            if (a.count > cap) throw DiagramError("cap: arrow multiplicity at gap " + std::to_string(g) + " exceeds the path cap");
            std::size_t reps = a.count.get_ui();
            for (std::size_t r = 0; r < reps; ++r) {
                for (std::size_t i = 0; i < cur[a.source].size(); ++i) {
                    LevelPath p = cur[a.source][i];
                    p.cls.push_back(c);
                    p.replica.push_back(r);
                    p.parent = i;
                    p.range = a.range;
                    p.potential += a.potential;
                    next[a.range].push_back(std::move(p));
                    if (++total > cap)
                        throw DiagramError("cap: more than " + std::to_string(cap) + " paths of length " +
                                           std::to_string(g));
                }
            }
        }
        cur = std::move(next);
    }
    blocks_ = std::move(cur);
    for (const auto& b : blocks_) {
        Rational lo = b.front().potential.exact;
        for (const auto& p : b) lo = std::min(lo, p.potential.exact);
        minima_.push_back(lo);
    }
}

std::size_t LevelAlgebra::total_paths() const {
    std::size_t t = 0;
    for (const auto& b : blocks_) t += b.size();
    return t;
}

FinitePath LevelAlgebra::finite_path(std::size_t v, std::size_t i) const {
    const LevelPath& p = blocks_[v][i];
    FinitePath f;
    f.start_level = 0;
    for (std::size_t k = 0; k < p.cls.size(); ++k) f.arrows.push_back({k + 1, p.cls[k], Integer(p.replica[k])});
    return f;
}

std::string LevelAlgebra::path_label(std::size_t v, std::size_t i) const {
    const LevelPath& p = blocks_[v][i];
    std::string out = diagram_.level(0)[0];
    for (std::size_t k = 0; k < p.cls.size(); ++k) {
        const auto& arrows = arrows_[k];
        const Arrow& a = arrows[p.cls[k]];
        Integer between = 0;
        for (const Arrow& b : arrows)
            if (b.source == a.source && b.range == a.range) between += b.count;
        out += ">";
        out += diagram_.level(k + 1)[a.range];
        if (between > 1) out += "[" + std::to_string(p.cls[k]) + ":" + std::to_string(p.replica[k]) + "]";
    }
    return out;
}

std::optional<std::pair<std::size_t, std::size_t>> LevelAlgebra::find(const FinitePath& f) const {
    if (f.start_level != 0 || f.length() != n_) return std::nullopt;
    std::size_t at = 0;
    std::vector<std::size_t> cls, rep;
    for (std::size_t k = 0; k < f.arrows.size(); ++k) {
        const ArrowRef& r = f.arrows[k];
        if (r.gap != k + 1 || r.cls >= arrows_[k].size()) return std::nullopt;
        const Arrow& a = arrows_[k][r.cls];
        if (a.source != at || r.replica < 0 || r.replica >= a.count) return std::nullopt;
        at = a.range;
        cls.push_back(r.cls);
        rep.push_back(r.replica.get_ui());
    }
    for (std::size_t i = 0; i < blocks_[at].size(); ++i)
        if (blocks_[at][i].cls == cls && blocks_[at][i].replica == rep) return std::make_pair(at, i);
    return std::nullopt;
}

Element zero_element(const LevelAlgebra& alg) {
    Element e;
    for (std::size_t v = 0; v < alg.num_blocks(); ++v)
        e.push_back(Eigen::MatrixXcd::Zero(alg.block_size(v), alg.block_size(v)));
    return e;
}

Element identity_element(const LevelAlgebra& alg) {
    Element e;
    for (std::size_t v = 0; v < alg.num_blocks(); ++v)
        e.push_back(Eigen::MatrixXcd::Identity(alg.block_size(v), alg.block_size(v)));
    return e;
}

Element matrix_unit(const LevelAlgebra& alg, std::size_t v, std::size_t i, std::size_t j) {
    Element e = zero_element(alg);
    e.at(v)(i, j) = 1.0;
    return e;
}

Element random_element(const LevelAlgebra& alg, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Element e = zero_element(alg);
    for (auto& b : e)
        for (Eigen::Index i = 0; i < b.rows(); ++i)
            for (Eigen::Index j = 0; j < b.cols(); ++j) {
                double re = u(rng);
                double im = u(rng);
                b(i, j) = Complex(re, im);
            }
    return e;
}

Element multiply(const Element& a, const Element& b) {
    Element out(a.size());
    for (std::size_t v = 0; v < a.size(); ++v) out[v] = a[v] * b.at(v);
    return out;
}

Element adjoint(const Element& a) {
    Element out(a.size());
    for (std::size_t v = 0; v < a.size(); ++v) out[v] = a[v].adjoint();
    return out;
}

Element add(const Element& a, const Element& b) {
    Element out(a.size());
    for (std::size_t v = 0; v < a.size(); ++v) out[v] = a[v] + b.at(v);
    return out;
}

Element scale(const Element& a, Complex c) {
    Element out(a.size());
    for (std::size_t v = 0; v < a.size(); ++v) out[v] = a[v] * c;
    return out;
}

double max_abs(const Element& a) {
    double m = 0.0;
    for (const auto& b : a)
        if (b.size() > 0) m = std::max(m, b.cwiseAbs().maxCoeff());
    return m;
}

double norm(const Element& a) {
    double m = 0.0;
    for (const auto& b : a) {
        if (b.size() == 0) continue;
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(b);
        m = std::max(m, svd.singularValues()(0));
    }
    return m;
}

Element generator_apply(const LevelAlgebra& alg, const Element& a) {
    require_shape(alg, a);
    Element out(a.size());
    const Complex I(0.0, 1.0);
    for (std::size_t v = 0; v < a.size(); ++v) {
        out[v] = a[v];
        for (Eigen::Index i = 0; i < a[v].rows(); ++i)
            for (Eigen::Index j = 0; j < a[v].cols(); ++j)
                out[v](i, j) = I * (alg.potential(v, i) - alg.potential(v, j)) * a[v](i, j);
    }
    return out;
}

Element embed(const LevelAlgebra& alg, const LevelAlgebra& next, const Element& a) {
    require_next(alg, next);
    require_shape(alg, a);
    Element out = zero_element(next);
    for (std::size_t w = 0; w < next.num_blocks(); ++w) {
        std::size_t n = next.block_size(w);
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = 0; q < n; ++q) {
                const LevelPath& lp = next.path(w, p);
                const LevelPath& lq = next.path(w, q);
                if (!same_last_arrow(lp, lq)) continue;
                std::size_t v = next.arrows(next.level())[lp.cls.back()].source;
                out[w](p, q) = a[v](lp.parent, lq.parent);
            }
    }
    return out;
}

Complex evaluate(const BlockState& s, const Element& a) {
    Complex t = 0.0;
    for (std::size_t v = 0; v < s.rho.size(); ++v) t += (s.rho[v] * a.at(v)).trace();
    return t;
}

StateValidity validate_state(const LevelAlgebra& alg, const BlockState& s) {
    StateValidity r;
    if (s.rho.size() != alg.num_blocks()) throw std::invalid_argument("state block count does not match the algebra");
    Complex tr = 0.0;
    double lo = 0.0;
    for (std::size_t v = 0; v < s.rho.size(); ++v) {
        if (static_cast<std::size_t>(s.rho[v].rows()) != alg.block_size(v))
            throw std::invalid_argument("state block " + std::to_string(v) + " has the wrong size");
        tr += s.rho[v].trace();
        Eigen::MatrixXcd h = 0.5 * (s.rho[v] + s.rho[v].adjoint());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
        lo = std::min(lo, es.eigenvalues().minCoeff());
        double asym = (s.rho[v] - s.rho[v].adjoint()).cwiseAbs().maxCoeff();
        lo = std::min(lo, -asym);
    }
    r.min_eigenvalue = lo;
    r.trace_defect = std::abs(tr - Complex(1.0, 0.0));
    return r;
}

BlockState restrict_state(const LevelAlgebra& alg, const LevelAlgebra& next, const BlockState& s) {
    require_next(alg, next);
    BlockState out;
    out.level = alg.level();
    for (std::size_t v = 0; v < alg.num_blocks(); ++v)
        out.rho.push_back(Eigen::MatrixXcd::Zero(alg.block_size(v), alg.block_size(v)));
    for (std::size_t w = 0; w < next.num_blocks(); ++w) {
        std::size_t n = next.block_size(w);
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = 0; q < n; ++q) {
                const LevelPath& lp = next.path(w, p);
                const LevelPath& lq = next.path(w, q);
                if (!same_last_arrow(lp, lq)) continue;
                std::size_t v = next.arrows(next.level())[lp.cls.back()].source;
                out.rho[v](lp.parent, lq.parent) += s.rho.at(w)(p, q);
            }
    }
    return out;
}

std::vector<double> vertex_masses(const BlockState& s) {
    std::vector<double> m;
    for (const auto& r : s.rho) m.push_back(r.trace().real());
    return m;
}

namespace {

void check_weights(const std::vector<double>& w, std::size_t n) {
    if (w.size() != n) throw std::invalid_argument("expected " + std::to_string(n) + " vertex weights");
    double sum = 0.0;
    for (double x : w) {
        if (!(x >= 0.0)) throw std::invalid_argument("vertex weights must be nonnegative");
        sum += x;
    }
    if (std::fabs(sum - 1.0) > 1e-12) throw std::invalid_argument("vertex weights must sum to 1");
}

}  // namespace

BlockState gibbs_state(const LevelAlgebra& alg, double beta, const std::vector<double>& w) {
    check_weights(w, alg.num_blocks());
    BlockState s;
    s.level = alg.level();
    for (std::size_t v = 0; v < alg.num_blocks(); ++v) {
        std::size_t n = alg.block_size(v);
        std::vector<double> e(n);
        double hi = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            e[i] = -beta * alg.potential(v, i);
            hi = std::max(hi, e[i]);
        }
        double z = 0.0;
        for (double x : e) z += std::exp(x - hi);
        double log_z = hi + std::log(z);
        Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(n, n);
        for (std::size_t i = 0; i < n; ++i) rho(i, i) = w[v] * std::exp(e[i] - log_z);
        s.rho.push_back(std::move(rho));
    }
    return s;
}

BlockState random_state(const LevelAlgebra& alg, std::uint64_t seed) {
    Element x = random_element(alg, seed);
    BlockState s;
    s.level = alg.level();
    double tr = 0.0;
    for (auto& b : x) {
        Eigen::MatrixXcd g = b * b.adjoint();
        tr += g.trace().real();
        s.rho.push_back(std::move(g));
    }
    for (auto& r : s.rho) r /= tr;
    return s;
}

KmsReport check_kms(const LevelAlgebra& alg, const BlockState& s, double beta) {
    KmsReport r;
    r.beta = beta;
    auto note = [&](double viol, std::size_t v, std::size_t mu, std::size_t mu2, std::size_t nu, std::size_t nu2) {
        ++r.quadruples;
        if (viol > r.max_violation || r.quadruples == 1) {
            r.max_violation = viol;
            r.witness[0] = alg.path_label(v, mu);
            r.witness[1] = alg.path_label(v, mu2);
            r.witness[2] = alg.path_label(v, nu);
            r.witness[3] = alg.path_label(v, nu2);
        }
    };
    for (std::size_t v = 0; v < alg.num_blocks(); ++v) {
        const auto& rho = s.rho.at(v);
        std::size_t b = alg.block_size(v);
        for (std::size_t i = 0; i < b; ++i)
            for (std::size_t k = 0; k < b; ++k) {
                double f = std::exp(-beta * (alg.potential(v, i) - alg.potential(v, k)));
                // nu = mu': omega(E_{mu,nu'}) against the twisted reverse product
                for (std::size_t l = 0; l < b; ++l) {
                    Complex lhs = rho(l, i);
                    Complex rhs = l == i ? f * rho(k, k) : Complex(0.0);
                    note(std::abs(lhs - rhs), v, i, k, k, l);
                }
                // nu' = mu, nu != mu': only the reverse product survives
                for (std::size_t j = 0; j < b; ++j) {
                    if (j == k) continue;
                    note(std::abs(f * rho(k, j)), v, i, k, j, i);
                }
            }
    }
    return r;
}

double ground_functional(const LevelAlgebra& alg, const BlockState& s, const Element& a) {
    Element h_comm(a.size());
    for (std::size_t v = 0; v < a.size(); ++v) {
        h_comm[v] = a[v];
        for (Eigen::Index i = 0; i < a[v].rows(); ++i)
            for (Eigen::Index j = 0; j < a[v].cols(); ++j)
                h_comm[v](i, j) = (alg.potential(v, i) - alg.potential(v, j)) * a[v](i, j);
    }
    return evaluate(s, multiply(adjoint(a), h_comm)).real();
}

GroundReport check_ground(const LevelAlgebra& alg, const BlockState& s, std::size_t trials, std::uint64_t seed) {
    GroundReport r;
    r.seed = seed;
    r.trials = trials;
    bool first = true;
    for (std::size_t v = 0; v < alg.num_blocks(); ++v) {
        std::size_t b = alg.block_size(v);
        for (std::size_t i = 0; i < b; ++i)
            for (std::size_t j = 0; j < b; ++j) {
                double val = (alg.potential(v, i) - alg.potential(v, j)) * s.rho.at(v)(j, j).real();
                ++r.units_checked;
                if (first || val < r.min_value) {
                    r.min_value = val;
                    r.witness = "E[" + alg.path_label(v, i) + "," + alg.path_label(v, j) + "]";
                    first = false;
                }
            }
    }
    for (std::size_t t = 0; t < trials; ++t) {
        double val = ground_functional(alg, s, random_element(alg, seed + t));
        if (val < r.min_value) {
            r.min_value = val;
            r.witness = "random element " + std::to_string(t);
        }
    }
    return r;
}

std::vector<std::vector<bool>> geodesic_flags(const LevelAlgebra& alg, const TightSubdiagram& sub) {
    std::size_t n = alg.level();
    if (n > sub.depth()) {
        throw GeodesicDepthError("level " + std::to_string(n) + " is beyond the analysed depth " +
                                     std::to_string(sub.depth()),
                                 sub.certification);
    }
    std::vector<std::vector<bool>> flags(alg.num_blocks());
    for (std::size_t v = 0; v < alg.num_blocks(); ++v)
        for (std::size_t i = 0; i < alg.block_size(v); ++i) {
            const LevelPath& p = alg.path(v, i);
            bool ok = true;
            for (std::size_t k = 0; k < p.cls.size() && ok; ++k) ok = sub.arrow_alive[k][p.cls[k]];
            flags[v].push_back(ok);
        }
    return flags;
}

double geodesic_mass(const LevelAlgebra& alg, const TightSubdiagram& sub, const BlockState& s) {
    auto flags = geodesic_flags(alg, sub);
    double m = 0.0;
    for (std::size_t v = 0; v < flags.size(); ++v)
        for (std::size_t i = 0; i < flags[v].size(); ++i)
            if (flags[v][i]) m += s.rho.at(v)(i, i).real();
    return m;
}

namespace {

// N(v, K): number of paths from vertex v at `level` down to level K.
std::vector<std::vector<Integer>> tail_counts(const Diagram& d, std::size_t level, std::size_t k) {
    std::vector<std::vector<Integer>> n(k + 1);
    n[k].assign(d.level_size(k), 1);
    for (std::size_t j = k; j > level; --j) {
        n[j - 1].assign(d.level_size(j - 1), 0);
        for (const Arrow& a : d.arrows(j)) n[j - 1][a.source] += n[j][a.range] * a.count;
    }
    return n;
}

}  // namespace

BlockState uniform_extension(const Diagram& d, const LevelAlgebra& alg, const BlockState& s, std::size_t k) {
    if (k < alg.level()) throw std::invalid_argument("extension level below the state's level");
    d.require_level(k);
    auto counts = tail_counts(d, alg.level(), k);
    BlockState cur = s;
    for (std::size_t j = alg.level() + 1; j <= k; ++j) {
        LevelAlgebra next(d, j);
        BlockState out;
        out.level = j;
        for (std::size_t w = 0; w < next.num_blocks(); ++w) {
            std::size_t n = next.block_size(w);
            Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(n, n);
            for (std::size_t p = 0; p < n; ++p)
                for (std::size_t q = 0; q < n; ++q) {
                    const LevelPath& lp = next.path(w, p);
                    const LevelPath& lq = next.path(w, q);
                    if (!same_last_arrow(lp, lq)) continue;
                    std::size_t v = next.arrows(j)[lp.cls.back()].source;
                    Rational f(counts[j][w], counts[j - 1][v]);
                    f.canonicalize();
                    rho(p, q) = cur.rho[v](lp.parent, lq.parent) * f.get_d();
                }
            out.rho.push_back(std::move(rho));
        }
        cur = std::move(out);
    }
    return cur;
}

GroundWitness find_ground_witness(const Diagram& d, const LevelAlgebra& alg, const TightSubdiagram& sub,
                                  const BlockState& s, double mass_tol) {
    GroundWitness best;
    auto flags = geodesic_flags(alg, sub);
    std::vector<std::pair<std::size_t, std::size_t>> minimal_off_plus;
    for (std::size_t v = 0; v < alg.num_blocks(); ++v) {
        std::size_t mu = 0;
        while (!alg.is_minimal(v, mu)) ++mu;
        for (std::size_t i = 0; i < alg.block_size(v); ++i) {
            double mass = s.rho.at(v)(i, i).real();
            if (flags[v][i] || mass <= mass_tol) continue;
            if (!alg.is_minimal(v, i)) {
                double val = (alg.potential(v, mu) - alg.potential(v, i)) * mass;
                if (!best.found || val < best.value) {
                    best = {true, alg.level(), alg.path_label(v, mu), alg.path_label(v, i), val};
                }
            } else {
                minimal_off_plus.emplace_back(v, i);
            }
        }
    }
    if (best.found || minimal_off_plus.empty()) return best;

    // every charged path outside G_n is minimal: push to the level where the
    // tight continuations of its range die out
    auto [v, i] = minimal_off_plus.front();
    double mass = s.rho.at(v)(i, i).real();
    std::size_t n = alg.level();
    LevelStepper step(d, {}, NumericMode::Exact);
    for (std::size_t j = 0; j < n; ++j) step.advance();
    std::vector<bool> reach(d.level_size(n), false);
    reach[v] = true;
    std::size_t k = n;
    while (true) {
        if (!d.has_level(k + 1)) return best;
        step.advance();
        ++k;
        std::vector<bool> next(d.level_size(k), false);
        bool any = false;
        for (std::size_t c = 0; c < step.last_arrows().size(); ++c) {
            const Arrow& a = step.last_arrows()[c];
            if (step.last_tight()[c] && reach[a.source]) {
                next[a.range] = true;
                any = true;
            }
        }
        if (!any) break;
        reach = std::move(next);
    }
    LevelAlgebra big(d, k);
    // first extension of (v, i) to level k
    FinitePath base = alg.finite_path(v, i);
    std::size_t at = v;
    for (std::size_t g = n + 1; g <= k; ++g) {
        const auto& arrows = big.arrows(g);
        std::size_t c = 0;
        while (arrows[c].source != at) ++c;
        base.arrows.push_back({g, c, Integer(0)});
        at = arrows[c].range;
    }
    auto loc = big.find(base);
    if (!loc) return best;
    auto [w, p] = *loc;
    auto counts = tail_counts(d, n, k);
    Rational share(1, 1);
    share /= Rational(counts[n][v]);
    double ext_mass = mass * share.get_d();
    std::size_t mu = 0;
    while (!big.is_minimal(w, mu)) ++mu;
    double val = (big.potential(w, mu) - big.potential(w, p)) * ext_mass;
    return {true, k, big.path_label(w, mu), big.path_label(w, p), val};
}

Element conditional_expectation(const LevelAlgebra& alg, const Element& a, NumericMode mode, TieTolerance tol) {
    require_shape(alg, a);
    Element out = a;
    for (std::size_t v = 0; v < a.size(); ++v)
        for (std::size_t i = 0; i < alg.block_size(v); ++i)
            for (std::size_t j = 0; j < alg.block_size(v); ++j) {
                bool keep;
                if (mode == NumericMode::Exact) {
                    keep = alg.path(v, i).potential.exact == alg.path(v, j).potential.exact;
                } else {
                    keep = compare_with_tolerance(alg.potential(v, i), alg.potential(v, j), tol) == 0;
                }
                if (!keep) out[v](i, j) = 0.0;
            }
    return out;
}

namespace {

std::vector<std::vector<std::size_t>> geodesic_indices(const LevelAlgebra& alg, const TightSubdiagram& sub) {
    auto flags = geodesic_flags(alg, sub);
    std::vector<std::vector<std::size_t>> idx(flags.size());
    for (std::size_t v = 0; v < flags.size(); ++v)
        for (std::size_t i = 0; i < flags[v].size(); ++i)
            if (flags[v][i]) idx[v].push_back(i);
    return idx;
}

}  // namespace

Element q_f_compress(const LevelAlgebra& alg, const TightSubdiagram& sub, const Element& a) {
    Element r = conditional_expectation(alg, a);
    auto idx = geodesic_indices(alg, sub);
    Element out(idx.size());
    for (std::size_t v = 0; v < idx.size(); ++v) {
        std::size_t n = idx[v].size();
        out[v] = Eigen::MatrixXcd::Zero(n, n);
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = 0; q < n; ++q) out[v](p, q) = r[v](idx[v][p], idx[v][q]);
    }
    return out;
}

Element corner_embed(const LevelAlgebra& alg, const LevelAlgebra& next, const TightSubdiagram& sub,
                     const Element& x) {
    require_next(alg, next);
    auto idx = geodesic_indices(alg, sub);
    auto idx_next = geodesic_indices(next, sub);
    std::vector<std::vector<std::size_t>> pos(idx.size());
    for (std::size_t v = 0; v < idx.size(); ++v) {
        pos[v].assign(alg.block_size(v), 0);
        for (std::size_t p = 0; p < idx[v].size(); ++p) pos[v][idx[v][p]] = p;
    }
    Element out(idx_next.size());
    for (std::size_t w = 0; w < idx_next.size(); ++w) {
        std::size_t n = idx_next[w].size();
        out[w] = Eigen::MatrixXcd::Zero(n, n);
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = 0; q < n; ++q) {
                const LevelPath& lp = next.path(w, idx_next[w][p]);
                const LevelPath& lq = next.path(w, idx_next[w][q]);
                if (!same_last_arrow(lp, lq)) continue;
                std::size_t v = next.arrows(next.level())[lp.cls.back()].source;
                out[w](p, q) = x.at(v)(pos[v][lp.parent], pos[v][lq.parent]);
            }
    }
    return out;
}

Element positivity_decomposition(const LevelAlgebra& alg, const TightSubdiagram& sub, const Element& a) {
    require_shape(alg, a);
    auto idx = geodesic_indices(alg, sub);
    Element out(idx.size());
    for (std::size_t v = 0; v < idx.size(); ++v) {
        std::size_t n = idx[v].size();
        out[v] = Eigen::MatrixXcd::Zero(n, n);
        if (n == 0) continue;
        for (std::size_t mu = 0; mu < alg.block_size(v); ++mu) {
            Rational gap = alg.path(v, mu).potential.exact - alg.min_potential(v);
            double c = std::sqrt(gap.get_d());
            // b_mu = c E_{mu,mu} a Q_n: a single row
            Eigen::RowVectorXcd row(n);
            for (std::size_t q = 0; q < n; ++q) row(q) = c * a[v](mu, idx[v][q]);
            out[v] += row.adjoint() * row;
        }
    }
    return out;
}

StateWithWarnings local_kms_infinity_state(const LevelAlgebra& alg, const TightSubdiagram& sub,
                                           const std::vector<double>& w) {
    check_weights(w, alg.num_blocks());
    StateWithWarnings out;
    out.state.level = alg.level();
    bool known = alg.level() <= sub.depth();
    for (std::size_t v = 0; v < alg.num_blocks(); ++v) {
        std::size_t n = alg.block_size(v);
        std::size_t minimal = 0;
        for (std::size_t i = 0; i < n; ++i) minimal += alg.is_minimal(v, i);
        Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(n, n);
        for (std::size_t i = 0; i < n; ++i)
            if (alg.is_minimal(v, i)) rho(i, i) = w[v] / static_cast<double>(minimal);
        out.state.rho.push_back(std::move(rho));
        if (w[v] > 0.0 && known && !sub.vertex_alive[alg.level()][v]) {
            out.warnings.push_back("weight on vertex " + alg.vertex_names()[v] +
                                   " which is not in Br+; the limit flow never reaches it");
        }
    }
    if (!known) out.warnings.push_back("level beyond the analysed depth; support not checked");
    return out;
}

BlockState trace_to_ground(const LevelAlgebra& alg, const TightSubdiagram& sub,
                           const std::vector<std::vector<double>>& pw, double tol) {
    auto idx = geodesic_indices(alg, sub);
    if (pw.size() != idx.size()) throw std::invalid_argument("trace weights: wrong block count");
    double total = 0.0;
    BlockState s;
    s.level = alg.level();
    for (std::size_t v = 0; v < idx.size(); ++v) {
        if (pw[v].size() != idx[v].size())
            throw std::invalid_argument("trace weights: block " + alg.vertex_names()[v] + " has " +
                                        std::to_string(idx[v].size()) + " geodesic paths");
        std::size_t n = alg.block_size(v);
        Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(n, n);
        for (std::size_t p = 0; p < idx[v].size(); ++p) {
            if (pw[v][p] < 0.0) throw std::invalid_argument("trace weights must be nonnegative");
            if (std::fabs(pw[v][p] - pw[v][0]) > tol)
                throw std::invalid_argument("trace weights are not tracial on block " + alg.vertex_names()[v]);
            rho(idx[v][p], idx[v][p]) = pw[v][p];
            total += pw[v][p];
        }
        s.rho.push_back(std::move(rho));
    }
    if (std::fabs(total - 1.0) > 1e-12) throw std::invalid_argument("trace weights must sum to 1");
    return s;
}

BlockState trace_to_ground_blocks(const LevelAlgebra& alg, const TightSubdiagram& sub,
                                  const std::vector<double>& block_weights) {
    auto idx = geodesic_indices(alg, sub);
    check_weights(block_weights, idx.size());
    std::vector<std::vector<double>> pw(idx.size());
    for (std::size_t v = 0; v < idx.size(); ++v) {
        if (block_weights[v] > 0.0 && idx[v].empty())
            throw std::invalid_argument("trace weight on vertex " + alg.vertex_names()[v] + " outside Br+");
        pw[v].assign(idx[v].size(), idx[v].empty() ? 0.0 : block_weights[v] / static_cast<double>(idx[v].size()));
    }
    return trace_to_ground(alg, sub, pw);
}

nlohmann::json state_to_json(const LevelAlgebra& alg, const BlockState& s) {
    nlohmann::json blocks = nlohmann::json::array();
    for (std::size_t v = 0; v < s.rho.size(); ++v) {
        nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
        bool complex = false;
        for (Eigen::Index i = 0; i < s.rho[v].rows(); ++i) {
            nlohmann::json rr = nlohmann::json::array(), ri = nlohmann::json::array();
            for (Eigen::Index j = 0; j < s.rho[v].cols(); ++j) {
                rr.push_back(s.rho[v](i, j).real());
                ri.push_back(s.rho[v](i, j).imag());
                complex = complex || s.rho[v](i, j).imag() != 0.0;
            }
            re.push_back(rr);
            im.push_back(ri);
        }
        nlohmann::json b{{"vertex", alg.vertex_names()[v]}, {"real", re}};
        if (complex) b["imag"] = im;
        blocks.push_back(b);
    }
    return {{"level", s.level}, {"blocks", blocks}};
}

BlockState state_from_json(const LevelAlgebra& alg, const nlohmann::json& j) {
    try {
        BlockState s;
        s.level = j.at("level").get<std::size_t>();
        if (s.level != alg.level())
            throw std::invalid_argument("state is for level " + std::to_string(s.level) + ", algebra is level " +
                                        std::to_string(alg.level()));
        const auto& blocks = j.at("blocks");
        if (blocks.size() != alg.num_blocks()) throw std::invalid_argument("state block count does not match");
        for (std::size_t v = 0; v < blocks.size(); ++v) {
            const auto& b = blocks[v];
            if (b.contains("vertex") && b["vertex"].get<std::string>() != alg.vertex_names()[v])
                throw std::invalid_argument("state block " + std::to_string(v) + " names vertex " +
                                            b["vertex"].get<std::string>());
            std::size_t n = alg.block_size(v);
            const auto& re = b.at("real");
            if (re.size() != n) throw std::invalid_argument("state block " + alg.vertex_names()[v] + " has the wrong size");
            Eigen::MatrixXcd rho(n, n);
            for (std::size_t r = 0; r < n; ++r) {
                if (re[r].size() != n) throw std::invalid_argument("state block rows must be square");
                for (std::size_t c = 0; c < n; ++c) {
                    double im = b.contains("imag") ? b["imag"][r][c].get<double>() : 0.0;
                    rho(r, c) = Complex(re[r][c].get<double>(), im);
                }
            }
            s.rho.push_back(std::move(rho));
        }
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("state file: ") + e.what());
    }
}

}  // namespace bratteli
