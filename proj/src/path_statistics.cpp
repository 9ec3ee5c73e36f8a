#include "bratteli/path_statistics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace bratteli {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    double hi = std::max(a, b);
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

LevelStats top_level(std::size_t nbetas) {
    LevelStats s;
    s.level = 0;
    VertexStats v;
    v.path_count = 1;
    v.min_potential = 0.0;
    v.min_potential_exact = 0;
    v.min_count = 1;
    v.log_z.assign(nbetas, 0.0);
    s.vertices.push_back(std::move(v));
    return s;
}

}  // namespace

int compare_with_tolerance(double candidate, double reference, const TieTolerance& tol) {
    double d = candidate - reference;
    double thr = tol.relative * (1.0 + std::fabs(reference));
    if (std::fabs(d) <= thr) return 0;
    if (std::fabs(d) <= tol.ambiguity_factor * thr) {
        throw TieAmbiguityError("tie ambiguity: potential sums " + format_double(candidate) + " and " +
                                format_double(reference) +
                                " are too close to classify in float mode; rerun in exact mode");
    }
    return d < 0 ? -1 : 1;
}

LevelStepper::LevelStepper(const Diagram& diagram, std::vector<double> betas, NumericMode mode, TieTolerance tol,
                           bool track_minima)
    : diagram_(diagram), betas_(std::move(betas)), mode_(mode), tol_(tol), minima_(track_minima) {
    current_ = top_level(betas_.size());
}

void LevelStepper::advance() {
    std::size_t gap = current_.level + 1;
    diagram_.require_level(gap);
    arrows_ = diagram_.arrows(gap);
    std::size_t n = diagram_.level_size(gap);
    const auto& from = current_.vertices;

    LevelStats next;
    next.level = gap;
    next.vertices.resize(n);
    std::vector<bool> seen(n, false);

    for (const Arrow& a : arrows_) {
        const VertexStats& s = from[a.source];
        VertexStats& t = next.vertices[a.range];
        if (mode_ == NumericMode::Exact) {
            Rational cand = s.min_potential_exact + a.potential.exact;
            if (!seen[a.range] || cand < t.min_potential_exact) t.min_potential_exact = cand;
        } else {
            double cand = s.min_potential + a.potential.value;
            if (!seen[a.range] || cand < t.min_potential) t.min_potential = cand;
        }
        seen[a.range] = true;
    }
    for (auto& t : next.vertices) {
        if (mode_ == NumericMode::Exact) t.min_potential = t.min_potential_exact.get_d();
        t.path_count = 0;
        t.min_count = 0;
        t.log_z.assign(betas_.size(), kNegInf);
    }

    tight_.assign(arrows_.size(), false);
    for (std::size_t i = 0; i < arrows_.size(); ++i) {
        const Arrow& a = arrows_[i];
        const VertexStats& s = from[a.source];
        VertexStats& t = next.vertices[a.range];
        bool tight = false;
        if (!minima_) {
        } else if (mode_ == NumericMode::Exact) {
            tight = (s.min_potential_exact + a.potential.exact) == t.min_potential_exact;
        } else {
            tight = compare_with_tolerance(s.min_potential + a.potential.value, t.min_potential, tol_) == 0;
        }
        tight_[i] = tight;
        t.path_count += s.path_count * a.count;
        if (tight) t.min_count += s.min_count * a.count;
        double lc = log_of(a.count);
        for (std::size_t b = 0; b < betas_.size(); ++b) {
            t.log_z[b] = log_add(t.log_z[b], s.log_z[b] + lc - betas_[b] * a.potential.value);
        }
    }
    if (mode_ == NumericMode::Float && minima_) {
        for (auto& t : next.vertices) t.min_potential_exact = rational_from_double(t.min_potential);
    }
    previous_ = std::move(current_);
    current_ = std::move(next);
}

std::size_t PathStatistics::beta_index(double beta) const {
    for (std::size_t i = 0; i < betas.size(); ++i)
        if (betas[i] == beta) return i;
    throw std::invalid_argument("beta " + format_double(beta) + " was not computed");
}

PathStatistics compute_level_stats(const Diagram& d, std::size_t depth, std::vector<double> betas, NumericMode mode,
                                   TieTolerance tol, bool track_minima) {
    d.require_level(depth);
    PathStatistics out{d.prefix(depth), betas, mode, {}, {}};
    LevelStepper step(out.prefix, std::move(betas), mode, tol, track_minima);
    out.levels.push_back(step.current());
    for (std::size_t j = 1; j <= depth; ++j) {
        step.advance();
        out.levels.push_back(step.current());
        out.tight.push_back(step.last_tight());
    }
    return out;
}

Eigen::MatrixXd log_gauge_matrix(const std::vector<Arrow>& arrows, std::size_t rows, std::size_t cols, double beta) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(rows, cols, kNegInf);
    for (const Arrow& a : arrows) {
        m(a.source, a.range) = log_add(m(a.source, a.range), log_of(a.count) - beta * a.potential.value);
    }
    return m;
}

ProjectiveMatrix gauge_matrix(const Diagram& d, std::size_t gap, double beta) {
    d.require_level(gap);
    Eigen::MatrixXd lg = log_gauge_matrix(d.arrows(gap), d.level_size(gap - 1), d.level_size(gap), beta);
    return {gap, MatrixFlavor::RawGauge, lg.array().exp().matrix()};
}

ProjectiveMatrix stochastic_matrix_from_levels(const LevelStats& from, const LevelStats& to,
                                               const std::vector<Arrow>& arrows, std::size_t beta_index,
                                               double beta) {
    std::size_t rows = from.vertices.size(), cols = to.vertices.size();
    Eigen::MatrixXd lg = log_gauge_matrix(arrows, rows, cols, beta);
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(rows, cols);
    for (std::size_t v = 0; v < rows; ++v)
        for (std::size_t w = 0; w < cols; ++w)
            if (lg(v, w) != kNegInf)
                s(v, w) = std::exp(from.vertices[v].log_z[beta_index] + lg(v, w) - to.vertices[w].log_z[beta_index]);
    return {to.level, MatrixFlavor::LeftStochastic, s};
}

ProjectiveMatrix stochastic_matrix(const PathStatistics& stats, std::size_t gap, std::size_t beta_index) {
    if (gap == 0 || gap > stats.depth()) throw std::out_of_range("gap outside computed statistics");
    return stochastic_matrix_from_levels(stats.levels[gap - 1], stats.levels[gap], stats.prefix.arrows(gap),
                                         beta_index, stats.betas[beta_index]);
}

ProjectiveMatrix stochastic_matrix(const Diagram& d, std::size_t gap, double beta) {
    return stochastic_matrix(compute_level_stats(d, gap, {beta}, NumericMode::Float, {}, false), gap, 0);
}

ExactMatrix stochastic_limit_exact(const LevelStats& from, const LevelStats& to, const std::vector<Arrow>& arrows,
                                   const std::vector<bool>& tight) {
    ExactMatrix m;
    m.rows = from.vertices.size();
    m.cols = to.vertices.size();
    std::vector<Integer> tight_count(m.rows * m.cols, 0);
    for (std::size_t i = 0; i < arrows.size(); ++i)
        if (tight[i]) tight_count[arrows[i].source * m.cols + arrows[i].range] += arrows[i].count;
    m.entries.resize(m.rows * m.cols);
    for (std::size_t v = 0; v < m.rows; ++v)
        for (std::size_t w = 0; w < m.cols; ++w) {
            Rational q(from.vertices[v].min_count * tight_count[v * m.cols + w], to.vertices[w].min_count);
            q.canonicalize();
            m.entries[v * m.cols + w] = q;
        }
    return m;
}

ExactMatrix stochastic_limit_matrix_exact(const PathStatistics& stats, std::size_t gap) {
    if (gap == 0 || gap > stats.depth()) throw std::out_of_range("gap outside computed statistics");
    return stochastic_limit_exact(stats.levels[gap - 1], stats.levels[gap], stats.prefix.arrows(gap),
                                  stats.tight[gap - 1]);
}

ProjectiveMatrix to_projective(const ExactMatrix& m, std::size_t gap, MatrixFlavor flavor) {
    Eigen::MatrixXd out(m.rows, m.cols);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) out(i, j) = m(i, j).get_d();
    return {gap, flavor, out};
}

ProjectiveMatrix stochastic_limit_matrix(const PathStatistics& stats, std::size_t gap) {
    return to_projective(stochastic_limit_matrix_exact(stats, gap), gap, MatrixFlavor::StochasticLimit);
}

ProjectiveMatrix stochastic_limit_matrix(const Diagram& d, std::size_t gap, NumericMode mode) {
    return stochastic_limit_matrix(compute_level_stats(d, gap, {}, mode), gap);
}

double l1_norm(const Eigen::MatrixXd& m) {
    if (m.size() == 0) return 0.0;
    return m.cwiseAbs().colwise().sum().maxCoeff();
}

double operator_norm_2(const Eigen::MatrixXd& m, int max_iterations, double tol) {
    if (m.size() == 0) return 0.0;
    Eigen::MatrixXd g = m.transpose() * m;
    Eigen::VectorXd x(g.cols());
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = 1.0 + 0.01 * static_cast<double>(i % 7);
    x.normalize();
    double lambda = 0.0;
    for (int it = 0; it < max_iterations; ++it) {
        Eigen::VectorXd y = g * x;
        double n = y.norm();
        if (n == 0.0) return 0.0;
        y /= n;
        double next = y.dot(g * y);
        x = y;
        if (std::fabs(next - lambda) <= tol * std::max(1.0, next)) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    return std::sqrt(std::max(lambda, 0.0));
}

const char* to_string(TailStatus s) {
    switch (s) {
        case TailStatus::NotPeriodic: return "not_periodic";
        case TailStatus::Certified: return "certified";
        case TailStatus::NonSummable: return "non_summable";
        case TailStatus::Inconclusive: return "inconclusive";
    }
    return "?";
}

namespace {

bool all_potentials_zero(const Diagram& d) {
    for (const auto& g : d.explicit_gaps())
        for (const Arrow& a : g)
            if (!a.potential.is_zero()) return false;
    if (d.tail()) {
        for (const Arrow& a : d.tail()->arrows)
            if (!a.potential.is_zero()) return false;
        if (d.tail()->has_drift()) return false;
    }
    return true;
}

}  // namespace

ConvergenceReport l1_convergence_report(const Diagram& d, double beta, std::size_t depth, std::size_t window,
                                        NumericMode mode) {
    d.require_level(depth);
    ConvergenceReport r;
    r.beta = beta;
    r.window = window;
    if (all_potentials_zero(d)) {
        // S(beta) does not depend on beta and equals its limit
        r.distances.assign(depth, 0.0);
        r.partial_sums.assign(depth, 0.0);
        r.tail = d.is_periodic() ? TailStatus::Certified : TailStatus::NotPeriodic;
        return r;
    }
    LevelStepper step(d, {beta}, mode);
    double sum = 0.0;
    for (std::size_t j = 1; j <= depth; ++j) {
        step.advance();
        ProjectiveMatrix s = stochastic_matrix_from_levels(step.previous(), step.current(), step.last_arrows(), 0, beta);
        ExactMatrix l = stochastic_limit_exact(step.previous(), step.current(), step.last_arrows(), step.last_tight());
        double dist = l1_norm(s.values - to_projective(l, j, MatrixFlavor::StochasticLimit).values);
        sum += dist;
        r.distances.push_back(dist);
        r.partial_sums.push_back(sum);
    }
    if (!d.is_periodic()) return r;

    const PeriodicTail& t = *d.tail();
    if (t.vertices.size() == 1) {
        // 1x1 stochastic matrices past the top
        bool zero = true;
        for (std::size_t j = t.from_level + 1; j <= depth; ++j) zero = zero && r.distances[j - 1] == 0.0;
        if (zero) {
            r.tail = TailStatus::Certified;
            return r;
        }
    }
    r.tail = TailStatus::Inconclusive;
    if (window < 2 || depth < t.from_level + window) return r;
    std::vector<double> w(r.distances.end() - static_cast<std::ptrdiff_t>(window), r.distances.end());
    if (std::all_of(w.begin(), w.end(), [](double x) { return x == 0.0; })) return r;
    if (std::any_of(w.begin(), w.end(), [](double x) { return x == 0.0; })) return r;
    double hi = 0.0, lo = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < w.size(); ++k) {
        double q = w[k] / w[k - 1];
        hi = std::max(hi, q);
        lo = std::min(lo, q);
    }
    r.ratio = hi;
    if (hi < 1.0 - 1e-9) {
        r.tail = TailStatus::Certified;
        r.tail_bound = w.back() * hi / (1.0 - hi);
    } else if (lo >= 1.0 - 1e-9) {
        r.tail = TailStatus::NonSummable;
    }
    return r;
}

}  // namespace bratteli
