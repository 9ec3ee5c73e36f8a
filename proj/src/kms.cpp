#include "bratteli/kms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace bratteli {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    double hi = std::max(a, b);
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// log(A y) given log A and log y
Eigen::VectorXd log_apply(const Eigen::MatrixXd& log_a, const Eigen::VectorXd& log_y) {
    Eigen::VectorXd out = Eigen::VectorXd::Constant(log_a.rows(), kNegInf);
    for (Eigen::Index v = 0; v < log_a.rows(); ++v)
        for (Eigen::Index w = 0; w < log_a.cols(); ++w)
            if (log_a(v, w) != kNegInf && log_y(w) != kNegInf) out(v) = log_add(out(v), log_a(v, w) + log_y(w));
    return out;
}

Eigen::MatrixXd log_gauge(const Diagram& d, std::size_t gap, double beta) {
    return log_gauge_matrix(d.arrows(gap), d.level_size(gap - 1), d.level_size(gap), beta);
}

// log psi^j for j = 0..top from log psi^top, via psi^{i-1} = A^(i) psi^i
std::vector<Eigen::VectorXd> log_psi_chain(const Diagram& d, double beta, std::size_t top, Eigen::VectorXd log_top) {
    std::vector<Eigen::VectorXd> out(top + 1);
    out[top] = std::move(log_top);
    for (std::size_t i = top; i > 0; --i) out[i - 1] = log_apply(log_gauge(d, i, beta), out[i]);
    return out;
}

}  // namespace

const char* to_string(SystemFlavor f) {
    switch (f) {
        case SystemFlavor::GaugeSystem: return "gauge";
        case SystemFlavor::StochasticSystem: return "stochastic";
        case SystemFlavor::StochasticLimitSystem: return "stochastic_limit";
    }
    return "?";
}

double l1_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) throw std::invalid_argument("vectors of different length");
    return (a - b).cwiseAbs().sum();
}

Eigen::VectorXd Seed::realise(std::size_t size) const {
    switch (kind) {
        case Kind::Uniform: return Eigen::VectorXd::Constant(size, 1.0 / static_cast<double>(size));
        case Kind::Vertex: {
            Eigen::VectorXd x = Eigen::VectorXd::Zero(size);
            x(vertex % size) = 1.0;
            return x;
        }
        case Kind::Vector:
            if (static_cast<std::size_t>(vector.size()) != size)
                throw std::invalid_argument("seed vector has " + std::to_string(vector.size()) + " entries, level has " +
                                            std::to_string(size));
            return vector;
        case Kind::Random: {
            // exponential spacings give a uniform point of the simplex
            std::mt19937_64 rng(vertex);
            std::exponential_distribution<double> e(1.0);
            Eigen::VectorXd x(size);
            for (std::size_t i = 0; i < size; ++i) x(i) = e(rng);
            return x / x.sum();
        }
    }
    return {};
}

std::string Seed::label() const {
    switch (kind) {
        case Kind::Uniform: return "uniform";
        case Kind::Vertex: return "vertex:" + std::to_string(vertex);
        case Kind::Vector: return "vector";
        case Kind::Random: return "random:" + std::to_string(vertex);
    }
    return "?";
}

std::vector<Seed> default_seeds(std::size_t n) {
    std::vector<Seed> s;
    for (std::size_t v = 0; v < n; ++v) s.push_back(Seed::at_vertex(v));
    s.push_back(Seed::uniform());
    return s;
}

std::vector<Seed> seed_set(std::size_t n, std::size_t count) {
    std::vector<Seed> s = default_seeds(n);
    for (std::size_t k = 1; s.size() < count; ++k) s.push_back(Seed::random(k));
    return s;
}

StochasticFlow::StochasticFlow(const Diagram& d, double beta, std::size_t base_level)
    : d_(d), beta_(beta), base_(base_level), stepper_(d, {beta}, NumericMode::Float, {}, false) {
    d.require_level(base_level);
    for (std::size_t j = 0; j < base_level; ++j) stepper_.advance();
    product_ = Eigen::MatrixXd::Identity(d.level_size(base_level), d.level_size(base_level));
}

bool StochasticFlow::can_step() const { return d_.has_level(top_level() + 1); }

void StochasticFlow::step() {
    stepper_.advance();
    ProjectiveMatrix s = stochastic_matrix_from_levels(stepper_.previous(), stepper_.current(), stepper_.last_arrows(),
                                                       0, beta_);
    product_ = product_ * s.values;
    ++depth_;
}

double StochasticFlow::image_diameter() const {
    double diam = 0.0;
    for (Eigen::Index a = 0; a < product_.cols(); ++a)
        for (Eigen::Index b = a + 1; b < product_.cols(); ++b)
            diam = std::max(diam, (product_.col(a) - product_.col(b)).cwiseAbs().sum());
    return diam;
}

InverseLimitApproximant kms_vertex_distribution(const Diagram& d, double beta, std::size_t base_level,
                                                std::size_t depth, const Seed& seed) {
    if (depth < 1) throw std::invalid_argument("depth must be at least 1");
    d.require_level(base_level + depth);
    StochasticFlow flow(d, beta, base_level);
    Eigen::VectorXd prev;
    for (std::size_t k = 1; k <= depth; ++k) {
        if (k == depth && k >= 2) prev = flow.product() * seed.realise(flow.product().cols());
        flow.step();
    }
    InverseLimitApproximant out;
    out.base_level = base_level;
    out.depth = depth;
    out.values = flow.product() * seed.realise(flow.product().cols());
    out.residual = depth >= 2 ? l1_distance(out.values, prev) : std::numeric_limits<double>::infinity();
    out.flavor = SystemFlavor::StochasticSystem;
    return out;
}

double MultiSeedResult::max_residual() const {
    double r = 0.0;
    for (const auto& a : per_seed) r = std::max(r, a.residual);
    return r;
}

MultiSeedResult kms_multi_seed(const Diagram& d, double beta, std::size_t base_level, const std::vector<Seed>& seeds,
                               const KmsOptions& opt) {
    if (seeds.empty()) throw std::invalid_argument("at least one seed is required");
    MultiSeedResult res;
    res.beta = beta;
    res.base_level = base_level;
    res.seeds = seeds;
    StochasticFlow flow(d, beta, base_level);
    std::vector<Eigen::VectorXd> prev;
    res.per_seed.resize(seeds.size());
    while (true) {
        if (res.iterations >= opt.budget) {
            res.budget_exhausted = true;
            break;
        }
        if (!flow.can_step()) break;
        flow.step();
        ++res.iterations;
        bool all = flow.depth() >= opt.min_depth;
        std::vector<Eigen::VectorXd> cur;
        for (std::size_t s = 0; s < seeds.size(); ++s) {
            Eigen::VectorXd x = flow.product() * seeds[s].realise(flow.product().cols());
            auto& a = res.per_seed[s];
            a.base_level = base_level;
            a.depth = flow.depth();
            a.flavor = SystemFlavor::StochasticSystem;
            a.residual = prev.empty() ? std::numeric_limits<double>::infinity() : l1_distance(x, prev[s]);
            a.values = x;
            all = all && a.residual < opt.tol;
            cur.push_back(std::move(x));
        }
        prev = std::move(cur);
        if (all) {
            res.converged = true;
            break;
        }
    }
    res.diameter = flow.image_diameter();
    for (std::size_t a = 0; a < prev.size(); ++a)
        for (std::size_t b = a + 1; b < prev.size(); ++b) res.agreement = std::max(res.agreement, l1_distance(prev[a], prev[b]));
    return res;
}

std::vector<Eigen::VectorXd> push_up(const Diagram& d, double beta, std::size_t base_level,
                                     const Eigen::VectorXd& at_base) {
    PathStatistics stats = compute_level_stats(d, base_level, {beta}, NumericMode::Float, {}, false);
    std::vector<Eigen::VectorXd> out(base_level + 1);
    out[base_level] = at_base;
    for (std::size_t j = base_level; j > 0; --j) out[j - 1] = stochastic_matrix(stats, j, 0).values * out[j];
    return out;
}

InverseLimitApproximant gauge_limit_vector(const Diagram& d, double beta, std::size_t base_level, std::size_t depth) {
    if (depth < 1) throw std::invalid_argument("depth must be at least 1");
    d.require_level(base_level + depth);
    auto psi_at = [&](std::size_t k) {
        std::size_t top = base_level + k;
        auto chain = log_psi_chain(d, beta, top, Eigen::VectorXd::Zero(d.level_size(top)));
        Eigen::VectorXd psi = (chain[base_level].array() - chain[0](0)).exp().matrix();
        return psi;
    };
    InverseLimitApproximant out;
    out.base_level = base_level;
    out.depth = depth;
    out.flavor = SystemFlavor::GaugeSystem;
    out.values = psi_at(depth);
    out.residual = depth >= 2 ? l1_distance(out.values, psi_at(depth - 1)) : std::numeric_limits<double>::infinity();
    return out;
}

Eigen::VectorXd distribution_from_gauge(const Diagram& d, double beta, std::size_t level, const Eigen::VectorXd& psi) {
    PathStatistics stats = compute_level_stats(d, level, {beta}, NumericMode::Float, {}, false);
    Eigen::VectorXd t(psi.size());
    for (Eigen::Index v = 0; v < psi.size(); ++v) t(v) = std::exp(stats.levels[level].vertices[v].log_z[0]) * psi(v);
    return t;
}

bool is_primitive(const Eigen::MatrixXd& m) {
    Eigen::Index n = m.rows();
    if (n == 0 || m.cols() != n) return false;
    using B = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;
    B pat = (m.array() > 0.0).cast<int>();
    B pw = pat;
    Eigen::Index bound = (n - 1) * (n - 1) + 1;
    for (Eigen::Index k = 1; k <= bound; ++k) {
        if ((pw.array() > 0).all()) return true;
        pw = ((pw * pat).array() > 0).cast<int>();
    }
    return false;
}

PerronData perron_vector(const Eigen::MatrixXd& a, double tol, std::size_t max_iterations) {
    PerronData p;
    Eigen::Index n = a.rows();
    Eigen::VectorXd u = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    double prev_diff = 0.0;
    for (std::size_t it = 1; it <= max_iterations; ++it) {
        Eigen::VectorXd y = a * u;
        double lambda = y.sum();
        if (!(lambda > 0.0)) {
            p.reason = "matrix annihilates the positive cone";
            return p;
        }
        y /= lambda;
        double diff = l1_distance(y, u);
        if (prev_diff > 0.0 && diff > 0.0) p.measured_ratio = diff / prev_diff;
        prev_diff = diff;
        u = y;
        p.lambda = lambda;
        p.iterations = it;
        if (diff <= tol) {
            p.applicable = true;
            p.vector = u;
            return p;
        }
    }
    p.reason = "power iteration did not settle";
    p.vector = u;
    return p;
}

Eigen::MatrixXd tail_gauge_matrix(const Diagram& d, double beta) {
    if (!d.is_periodic()) throw std::invalid_argument("diagram has no repeating block");
    const PeriodicTail& t = *d.tail();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(t.vertices.size(), t.vertices.size());
    for (const Arrow& a : t.arrows) m(a.source, a.range) += a.count.get_d() * std::exp(-beta * a.potential.value);
    return m;
}

PerronData perron_block(const Diagram& d, double beta) {
    PerronData p;
    if (!d.is_periodic()) {
        p.reason = "diagram is not periodic";
        return p;
    }
    if (d.tail()->has_drift()) {
        p.reason = "repeating block drifts";
        return p;
    }
    Eigen::MatrixXd a = tail_gauge_matrix(d, beta);
    if (!is_primitive(a)) {
        p.reason = "repeating block is not primitive";
        return p;
    }
    return perron_vector(a);
}

namespace {

// log psi^j (psi^0 = 1) for j = 0..top from the Perron data.
std::vector<Eigen::VectorXd> perron_log_psi(const Diagram& d, double beta, std::size_t top, const PerronData& p) {
    if (!p.applicable) throw std::invalid_argument("Perron route not applicable: " + p.reason);
    std::size_t p0 = d.tail()->from_level;
    Eigen::VectorXd log_u = p.vector.array().log().matrix();
    auto chain = log_psi_chain(d, beta, p0, log_u);
    double ln_lambda = std::log(p.lambda);
    std::vector<Eigen::VectorXd> out(std::max(top, p0) + 1);
    for (std::size_t j = 0; j <= p0; ++j) out[j] = chain[j];
    for (std::size_t j = p0 + 1; j < out.size(); ++j) out[j] = (log_u.array() - static_cast<double>(j - p0) * ln_lambda).matrix();
    double norm = chain[0](0);
    for (auto& v : out) v.array() -= norm;
    out.resize(top + 1);
    return out;
}

}  // namespace

Eigen::VectorXd perron_gauge_vector(const Diagram& d, double beta, std::size_t level) {
    auto lp = perron_log_psi(d, beta, level, perron_block(d, beta));
    return lp[level].array().exp().matrix();
}

Eigen::VectorXd perron_kms_distribution(const Diagram& d, double beta, std::size_t level) {
    auto lp = perron_log_psi(d, beta, level, perron_block(d, beta));
    LevelStepper step(d, {beta}, NumericMode::Float, {}, false);
    for (std::size_t j = 0; j < level; ++j) step.advance();
    Eigen::VectorXd t(lp[level].size());
    for (Eigen::Index v = 0; v < t.size(); ++v) t(v) = std::exp(step.current().vertices[v].log_z[0] + lp[level](v));
    return t;
}

std::vector<Eigen::VectorXd> limit_family(const Diagram& d, std::size_t depth, const Eigen::VectorXd& at_depth) {
    PathStatistics stats = compute_level_stats(d, depth, {}, NumericMode::Exact);
    if (static_cast<std::size_t>(at_depth.size()) != d.level_size(depth))
        throw std::invalid_argument("target vector does not match level " + std::to_string(depth));
    std::vector<Eigen::VectorXd> out(depth + 1);
    out[depth] = at_depth;
    for (std::size_t j = depth; j > 0; --j) out[j - 1] = stochastic_limit_matrix(stats, j).values * out[j];
    return out;
}

std::vector<TransportRow> beta_infinity_transport(const Diagram& d, const Eigen::VectorXd& target_at_depth,
                                                  const std::vector<double>& betas, std::size_t depth,
                                                  std::size_t max_level) {
    max_level = std::min(max_level, depth);
    auto target = limit_family(d, depth, target_at_depth);
    PathStatistics exact = compute_level_stats(d, depth, {}, NumericMode::Exact);
    std::vector<Eigen::MatrixXd> limits;
    for (std::size_t g = 1; g <= depth; ++g) limits.push_back(stochastic_limit_matrix(exact, g).values);

    std::vector<TransportRow> rows;
    for (double beta : betas) {
        TransportRow row;
        row.beta = beta;
        PerronData p = perron_block(d, beta);
        if (p.applicable) {
            row.route = "perron";
            auto lp = perron_log_psi(d, beta, max_level, p);
            LevelStepper step(d, {beta}, NumericMode::Float, {}, false);
            for (std::size_t j = 1; j <= max_level; ++j) {
                step.advance();
                Eigen::VectorXd t(lp[j].size());
                for (Eigen::Index v = 0; v < t.size(); ++v)
                    t(v) = std::exp(step.current().vertices[v].log_z[0] + lp[j](v));
                row.phi.push_back(t);
            }
        } else {
            row.route = "finite";
            PathStatistics stats = compute_level_stats(d, depth, {beta}, NumericMode::Float, {}, false);
            std::vector<Eigen::VectorXd> phi(depth + 1);
            std::vector<double> tail(depth + 2, 0.0);
            phi[depth] = target[depth];
            for (std::size_t j = depth; j > 0; --j) {
                Eigen::MatrixXd s = stochastic_matrix(stats, j, 0).values;
                phi[j - 1] = s * phi[j];
                tail[j] = tail[j + 1] + l1_norm(s - limits[j - 1]);
            }
            for (std::size_t j = 1; j <= max_level; ++j) {
                row.phi.push_back(phi[j]);
                row.bounds.push_back(tail[j + 1]);
            }
        }
        for (std::size_t j = 1; j <= max_level; ++j) {
            double dist = l1_distance(row.phi[j - 1], target[j]);
            row.distances.push_back(dist);
            row.max_distance = std::max(row.max_distance, dist);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace bratteli
