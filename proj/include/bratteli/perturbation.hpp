#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace bratteli {

// Projective matrix system A^(1), A^(2), ...; gap g at index g-1, A^(g) is
// #Br_{g-1} x #Br_g. Norms here are Euclidean operator norms.
using MatrixSystem = std::vector<Eigen::MatrixXd>;

void check_system(const MatrixSystem& s);

struct HypothesisGap {
    std::size_t gap = 0;
    double log_lhs = 0.0;        // log of the left side of the growth condition
    double log_rhs = 0.0;        // -gap log 4
    bool growth_ok = false;
    double worst_ratio = 0.0;    // max |A - B| / (eps A) over entries
    bool closeness_ok = false;
};

struct HypothesisReport {
    bool accepted = false;
    std::optional<std::size_t> first_failing_gap;
    std::string failing_condition;  // "growth", "closeness" or "epsilon range"
    std::vector<HypothesisGap> gaps;
};

// Gaps from_gap..to_gap inclusive; eps indexed like the systems.
HypothesisReport verify_perturbation_hypothesis(const MatrixSystem& a, const std::vector<double>& eps,
                                                const MatrixSystem& b, std::size_t from_gap, std::size_t to_gap);

// Largest eps_j allowed by the growth condition for A at gap j.
double growth_epsilon_limit(const MatrixSystem& a, std::size_t gap);

// Constant with (B^(1)..B^(j))_{v0,w}^{-1} <= K_N 2^j (A^(1)..A^(j))_{v0,w}^{-1} for j >= N,
// valid when B >= A/2 entrywise from gap N on.
double k_constant(const MatrixSystem& a, const MatrixSystem& b, std::size_t n);

struct TransportResult {
    Eigen::VectorXd value;  // level base-1
    std::size_t base = 0;
    std::size_t depth = 0;
    double bound = 0.0;
    double k_n = 0.0;
    std::vector<std::string> warnings;
};

// A^(j) ... A^(j+k) phi^{j+k} for a family phi in the B system; phi indexed by level.
TransportResult perturbation_transport(const MatrixSystem& a, const MatrixSystem& b,
                                       const std::vector<Eigen::VectorXd>& phi, std::size_t j, std::size_t k,
                                       std::size_t n, const std::vector<double>& eps);
// B^(j) ... B^(j+k) psi^{j+k} for a family psi in the A system.
TransportResult reverse_transport(const MatrixSystem& a, const MatrixSystem& b,
                                  const std::vector<Eigen::VectorXd>& psi, std::size_t j, std::size_t k,
                                  std::size_t n, const std::vector<double>& eps);

struct RoundTrip {
    double defect = 0.0;  // || A^(j)..A^(j+k) (T psi)^{j+k} - psi^{j-1} ||
    double bound = 0.0;   // 4^{-j-k+1} psi^0
};
// T psi at level j+k is approximated with every matrix available in B.
RoundTrip round_trip_defect(const MatrixSystem& a, const MatrixSystem& b, const std::vector<Eigen::VectorXd>& psi,
                            std::size_t j, std::size_t k);

// psi^{i-1} = A^(i) psi^i from a vector at the deepest level.
std::vector<Eigen::VectorXd> consistent_family(const MatrixSystem& a, const Eigen::VectorXd& top);

}  // namespace bratteli
