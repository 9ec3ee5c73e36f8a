#pragma once

#include "bratteli/diagram.hpp"

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <vector>

namespace bratteli {

enum class NumericMode { Float, Exact };

// Two potential sums a, b count as equal when |a - b| <= relative*(1 + |b|).
// Differences above that but below ambiguity_factor times it are rejected:
// the float data cannot tell a tie from a strict inequality.
struct TieTolerance {
    double relative = 1e-9;
    double ambiguity_factor = 1e3;
};

class TieAmbiguityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// -1, 0, +1 comparison of candidate against reference under the tolerance.
int compare_with_tolerance(double candidate, double reference, const TieTolerance& tol);

struct VertexStats {
    Integer path_count;
    double min_potential = 0.0;
    Rational min_potential_exact;  // meaningful in exact mode
    Integer min_count;
    std::vector<double> log_z;  // one entry per requested beta
};

struct LevelStats {
    std::size_t level = 0;
    std::vector<VertexStats> vertices;
};

// Streams level statistics one level at a time; works on periodic diagrams
// to any depth. With track_minima off only path counts and log Z are kept
// (no tightness, no tie checks).
class LevelStepper {
public:
    LevelStepper(const Diagram& diagram, std::vector<double> betas, NumericMode mode = NumericMode::Float,
                 TieTolerance tol = {}, bool track_minima = true);

    void advance();
    std::size_t level() const { return current_.level; }
    const LevelStats& current() const { return current_; }
    const LevelStats& previous() const { return previous_; }
    // Arrows of the gap just crossed and their tightness flags.
    const std::vector<Arrow>& last_arrows() const { return arrows_; }
    const std::vector<bool>& last_tight() const { return tight_; }
    const std::vector<double>& betas() const { return betas_; }
    NumericMode mode() const { return mode_; }

private:
    const Diagram& diagram_;
    std::vector<double> betas_;
    NumericMode mode_;
    TieTolerance tol_;
    bool minima_;
    LevelStats previous_;
    LevelStats current_;
    std::vector<Arrow> arrows_;
    std::vector<bool> tight_;
};

struct PathStatistics {
    Diagram prefix;  // levels 0..depth
    std::vector<double> betas;
    NumericMode mode = NumericMode::Float;
    std::vector<LevelStats> levels;          // index = level
    std::vector<std::vector<bool>> tight;    // index gap-1, per arrow class

    std::size_t depth() const { return levels.size() - 1; }
    std::size_t beta_index(double beta) const;
};

PathStatistics compute_level_stats(const Diagram& d, std::size_t depth, std::vector<double> betas,
                                   NumericMode mode = NumericMode::Float, TieTolerance tol = {},
                                   bool track_minima = true);

enum class MatrixFlavor { RawGauge, LeftStochastic, StochasticLimit, UserSupplied };

// Nonnegative matrix over Br_{j-1} x Br_j.
struct ProjectiveMatrix {
    std::size_t gap = 0;
    MatrixFlavor flavor = MatrixFlavor::UserSupplied;
    Eigen::MatrixXd values;
};

struct ExactMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<Rational> entries;
    const Rational& operator()(std::size_t i, std::size_t j) const { return entries[i * cols + j]; }
};

// sum over arrows v -> w of e^{-beta F(a)}
ProjectiveMatrix gauge_matrix(const Diagram& d, std::size_t gap, double beta);
// Logarithms of the gauge entries; -inf where no arrow exists.
Eigen::MatrixXd log_gauge_matrix(const std::vector<Arrow>& arrows, std::size_t rows, std::size_t cols, double beta);

// Column-normalised path weights, Z_{j-1}(v) Br(beta)_{v,w} / Z_j(w).
ProjectiveMatrix stochastic_matrix(const PathStatistics& stats, std::size_t gap, std::size_t beta_index);
ProjectiveMatrix stochastic_matrix(const Diagram& d, std::size_t gap, double beta);
ProjectiveMatrix stochastic_matrix_from_levels(const LevelStats& from, const LevelStats& to,
                                               const std::vector<Arrow>& arrows, std::size_t beta_index,
                                               double beta);

// Minimiser-count ratios: the beta -> infinity limit of stochastic_matrix.
ExactMatrix stochastic_limit_exact(const LevelStats& from, const LevelStats& to, const std::vector<Arrow>& arrows,
                                   const std::vector<bool>& tight);
ProjectiveMatrix stochastic_limit_matrix(const PathStatistics& stats, std::size_t gap);
ProjectiveMatrix stochastic_limit_matrix(const Diagram& d, std::size_t gap, NumericMode mode = NumericMode::Float);
ExactMatrix stochastic_limit_matrix_exact(const PathStatistics& stats, std::size_t gap);
ProjectiveMatrix to_projective(const ExactMatrix& m, std::size_t gap, MatrixFlavor flavor);

// Operator norm induced by the vector l1 norm: maximum absolute column sum.
double l1_norm(const Eigen::MatrixXd& m);
// Euclidean operator norm by power iteration on A^T A.
double operator_norm_2(const Eigen::MatrixXd& m, int max_iterations = 500, double tol = 1e-13);

enum class TailStatus { NotPeriodic, Certified, NonSummable, Inconclusive };
const char* to_string(TailStatus s);

struct ConvergenceReport {
    double beta = 0.0;
    std::vector<double> distances;     // gap j at index j-1
    std::vector<double> partial_sums;  // running sums
    TailStatus tail = TailStatus::NotPeriodic;
    double ratio = 0.0;       // measured decay ratio over the window
    double tail_bound = 0.0;  // bound on the sum beyond depth when certified
    std::size_t window = 0;

    double partial_sum() const { return partial_sums.empty() ? 0.0 : partial_sums.back(); }
    double total_bound() const { return partial_sum() + tail_bound; }
};

ConvergenceReport l1_convergence_report(const Diagram& d, double beta, std::size_t depth, std::size_t window = 5,
                                        NumericMode mode = NumericMode::Float);

}  // namespace bratteli
