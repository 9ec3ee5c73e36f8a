#include "bratteli/perturbation.hpp"

#include "bratteli/path_statistics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace bratteli {

void check_system(const MatrixSystem& s) {
    for (std::size_t g = 0; g < s.size(); ++g) {
        if (g == 0 && s[g].rows() != 1) throw std::invalid_argument("first matrix must have a single row");
        if (g > 0 && s[g].rows() != s[g - 1].cols())
            throw std::invalid_argument("matrix system dimension mismatch at gap " + std::to_string(g + 1));
        if ((s[g].array() < 0.0).any()) throw std::invalid_argument("negative entry at gap " + std::to_string(g + 1));
    }
}

namespace {

void check_pair(const MatrixSystem& a, const MatrixSystem& b) {
    check_system(a);
    check_system(b);
    if (a.size() != b.size()) throw std::invalid_argument("systems have different lengths");
    for (std::size_t g = 0; g < a.size(); ++g)
        if (a[g].rows() != b[g].rows() || a[g].cols() != b[g].cols())
            throw std::invalid_argument("systems differ in shape at gap " + std::to_string(g + 1));
}

// log of the top row of A^(1) ... A^(j), rescaled at each step
Eigen::RowVectorXd log_prefix_row(const MatrixSystem& a, std::size_t j) {
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Ones(1);
    double log_scale = 0.0;
    for (std::size_t g = 1; g <= j; ++g) {
        row = row * a[g - 1];
        double m = row.maxCoeff();
        if (!(m > 0.0)) throw std::invalid_argument("system condition fails at gap " + std::to_string(g));
        row /= m;
        log_scale += std::log(m);
    }
    return (row.array().log() + log_scale).matrix();
}

double log_growth(const MatrixSystem& a, std::size_t j) {
    double s = 0.0;
    for (std::size_t g = 1; g <= j; ++g) s += std::log(2.0 * operator_norm_2(a[g - 1]) + 1.0);
    Eigen::RowVectorXd lp = log_prefix_row(a, j);
    return 0.5 * std::log(static_cast<double>(a[j - 1].cols())) - lp.minCoeff() + s;
}

Eigen::VectorXd apply_range(const MatrixSystem& m, std::size_t from, std::size_t to, Eigen::VectorXd x) {
    for (std::size_t g = to; g >= from && g > 0; --g) x = m[g - 1] * x;
    return x;
}

}  // namespace

double growth_epsilon_limit(const MatrixSystem& a, std::size_t gap) {
    check_system(a);
    return std::exp(-static_cast<double>(gap) * std::log(4.0) - log_growth(a, gap));
}

HypothesisReport verify_perturbation_hypothesis(const MatrixSystem& a, const std::vector<double>& eps,
                                                const MatrixSystem& b, std::size_t from_gap, std::size_t to_gap) {
    check_pair(a, b);
    if (from_gap < 1 || to_gap > a.size() || eps.size() < to_gap)
        throw std::invalid_argument("hypothesis window outside the systems");
    HypothesisReport r;
    r.accepted = true;
    for (std::size_t j = from_gap; j <= to_gap; ++j) {
        HypothesisGap g;
        g.gap = j;
        double e = eps[j - 1];
        g.log_rhs = -static_cast<double>(j) * std::log(4.0);
        g.log_lhs = std::log(e) + log_growth(a, j);
        g.growth_ok = g.log_lhs <= g.log_rhs + 1e-12;
        const Eigen::MatrixXd& ma = a[j - 1];
        const Eigen::MatrixXd& mb = b[j - 1];
        g.closeness_ok = true;
        for (Eigen::Index v = 0; v < ma.rows(); ++v)
            for (Eigen::Index w = 0; w < ma.cols(); ++w) {
                double diff = std::fabs(ma(v, w) - mb(v, w));
                double allow = e * ma(v, w);
                if (diff == 0.0) continue;
                double ratio = allow > 0.0 ? diff / allow : std::numeric_limits<double>::infinity();
                g.worst_ratio = std::max(g.worst_ratio, ratio);
                if (diff > allow * (1.0 + 1e-12)) g.closeness_ok = false;
            }
        bool range_ok = e > 0.0 && e < 0.5;
        if (r.accepted && (!range_ok || !g.growth_ok || !g.closeness_ok)) {
            r.accepted = false;
            r.first_failing_gap = j;
            r.failing_condition = !range_ok ? "epsilon range" : (!g.growth_ok ? "growth" : "closeness");
        }
        r.gaps.push_back(g);
    }
    return r;
}

double k_constant(const MatrixSystem& a, const MatrixSystem& b, std::size_t n) {
    check_pair(a, b);
    if (n < 1 || n > a.size() + 1) throw std::invalid_argument("N outside the systems");
    if (n == 1) return 1.0;
    Eigen::RowVectorXd la = log_prefix_row(a, n - 1);
    Eigen::RowVectorXd lb = log_prefix_row(b, n - 1);
    double log_c = (lb - la).minCoeff();
    return std::exp((1.0 - static_cast<double>(n)) * std::log(2.0) - log_c);
}

TransportResult perturbation_transport(const MatrixSystem& a, const MatrixSystem& b,
                                       const std::vector<Eigen::VectorXd>& phi, std::size_t j, std::size_t k,
                                       std::size_t n, const std::vector<double>& eps) {
    check_pair(a, b);
    if (j < 1 || j + k > a.size() || phi.size() <= j + k) throw std::invalid_argument("transport range outside the systems");
    TransportResult t;
    t.base = j;
    t.depth = k;
    t.value = apply_range(a, j, j + k, phi[j + k]);
    t.k_n = k_constant(a, b, n);
    t.bound = t.k_n * phi[0](0) * std::ldexp(1.0, -static_cast<int>(j + k));
    if (j < n) t.warnings.push_back("base level below N; the bound is not covered");
    HypothesisReport h = verify_perturbation_hypothesis(a, eps, b, n, a.size());
    if (!h.accepted)
        t.warnings.push_back("hypothesis fails at gap " + std::to_string(*h.first_failing_gap) + " (" +
                             h.failing_condition + ")");
    return t;
}

TransportResult reverse_transport(const MatrixSystem& a, const MatrixSystem& b,
                                  const std::vector<Eigen::VectorXd>& psi, std::size_t j, std::size_t k,
                                  std::size_t n, const std::vector<double>& eps) {
    check_pair(a, b);
    if (j < 1 || j + k > b.size() || psi.size() <= j + k) throw std::invalid_argument("transport range outside the systems");
    TransportResult t;
    t.base = j;
    t.depth = k;
    t.value = apply_range(b, j, j + k, psi[j + k]);
    t.k_n = 1.0;
    t.bound = psi[0](0) * std::pow(4.0, -static_cast<double>(j + k)) / 3.0;
    if (j < n) t.warnings.push_back("base level below N; the bound is not covered");
    HypothesisReport h = verify_perturbation_hypothesis(a, eps, b, n, a.size());
    if (!h.accepted)
        t.warnings.push_back("hypothesis fails at gap " + std::to_string(*h.first_failing_gap) + " (" +
                             h.failing_condition + ")");
    return t;
}

RoundTrip round_trip_defect(const MatrixSystem& a, const MatrixSystem& b, const std::vector<Eigen::VectorXd>& psi,
                            std::size_t j, std::size_t k) {
    check_pair(a, b);
    std::size_t top = a.size();
    if (j < 1 || j + k > top || psi.size() <= top) throw std::invalid_argument("round trip range outside the systems");
    Eigen::VectorXd t_psi = apply_range(b, j + k + 1, top, psi[top]);
    Eigen::VectorXd back = apply_range(a, j, j + k, t_psi);
    RoundTrip r;
    r.defect = (back - psi[j - 1]).norm();
    r.bound = std::pow(4.0, -static_cast<double>(j + k) + 1.0) * psi[0](0);
    return r;
}

std::vector<Eigen::VectorXd> consistent_family(const MatrixSystem& a, const Eigen::VectorXd& top) {
    check_system(a);
    std::vector<Eigen::VectorXd> out(a.size() + 1);
    out[a.size()] = top;
    for (std::size_t i = a.size(); i > 0; --i) out[i - 1] = a[i - 1] * out[i];
    return out;
}

}  // namespace bratteli
