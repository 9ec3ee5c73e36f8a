#pragma once

#include "bratteli/diagram.hpp"
#include "bratteli/path_statistics.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace bratteli {

enum class SystemFlavor { GaugeSystem, StochasticSystem, StochasticLimitSystem };
const char* to_string(SystemFlavor f);

struct InverseLimitApproximant {
    std::size_t base_level = 0;
    Eigen::VectorXd values;
    std::size_t depth = 0;  // number of matrices applied
    // l1 distance between the depth k and depth k-1 values; infinity when k < 2
    double residual = 0.0;
    SystemFlavor flavor = SystemFlavor::StochasticSystem;
};

// Seed distribution placed at the deepest level of a product.
struct Seed {
    enum class Kind { Uniform, Vertex, Vector, Random };  // Random: `vertex` holds the RNG seed
    Kind kind = Kind::Uniform;
    std::size_t vertex = 0;
    Eigen::VectorXd vector;

    static Seed uniform() { return {}; }
    static Seed at_vertex(std::size_t v) { return {Kind::Vertex, v, {}}; }
    static Seed from_vector(Eigen::VectorXd x) { return {Kind::Vector, 0, std::move(x)}; }
    static Seed random(std::size_t seed) { return {Kind::Random, seed, {}}; }
    Eigen::VectorXd realise(std::size_t size) const;
    std::string label() const;
};

// Extreme points of the simplex plus its barycentre.
std::vector<Seed> default_seeds(std::size_t level_size);
// default_seeds padded with seeded random points up to `count`.
std::vector<Seed> seed_set(std::size_t level_size, std::size_t count);

// Running left-to-right product S^(j+1) ... S^(j+k) of stochastic matrices.
class StochasticFlow {
public:
    StochasticFlow(const Diagram& d, double beta, std::size_t base_level);
    bool can_step() const;
    void step();
    std::size_t depth() const { return depth_; }
    std::size_t top_level() const { return base_ + depth_; }
    const Eigen::MatrixXd& product() const { return product_; }
    // Diameter in l1 of the image of the top simplex.
    double image_diameter() const;

private:
    const Diagram& d_;
    double beta_;
    std::size_t base_;
    std::size_t depth_ = 0;
    LevelStepper stepper_;
    Eigen::MatrixXd product_;
};

InverseLimitApproximant kms_vertex_distribution(const Diagram& d, double beta, std::size_t base_level,
                                                std::size_t depth, const Seed& seed);

struct KmsOptions {
    double tol = 1e-9;
    std::size_t budget = 10000;  // matrix applications
    std::size_t min_depth = 2;
};

struct MultiSeedResult {
    double beta = 0.0;
    std::size_t base_level = 0;
    std::vector<Seed> seeds;
    std::vector<InverseLimitApproximant> per_seed;
    double agreement = 0.0;  // largest pairwise l1 distance between seed results
    double diameter = 0.0;   // l1 diameter of the image of the top simplex
    std::size_t iterations = 0;
    bool converged = false;  // every residual below tol
    bool budget_exhausted = false;

    double max_residual() const;
};

// Deepens the product one level at a time until every seed's residual drops
// below tol, the budget runs out or the diagram ends.
MultiSeedResult kms_multi_seed(const Diagram& d, double beta, std::size_t base_level, const std::vector<Seed>& seeds,
                               const KmsOptions& opt = {});

// Distributions on levels 0..base_level derived from a converged result by
// applying the stochastic matrices upwards.
std::vector<Eigen::VectorXd> push_up(const Diagram& d, double beta, std::size_t base_level,
                                     const Eigen::VectorXd& at_base);

// Gauge products with per-step rescaling; normalised so psi^0 = 1.
InverseLimitApproximant gauge_limit_vector(const Diagram& d, double beta, std::size_t base_level, std::size_t depth);
// t_j(v) = Z_j(v) psi^j(v)
Eigen::VectorXd distribution_from_gauge(const Diagram& d, double beta, std::size_t level, const Eigen::VectorXd& psi);

struct PerronData {
    bool applicable = false;
    std::string reason;
    double lambda = 0.0;
    Eigen::VectorXd vector;  // right eigenvector, entries sum to 1
    double measured_ratio = 0.0;
    std::size_t iterations = 0;
};

bool is_primitive(const Eigen::MatrixXd& m);
// Power iteration on A u = lambda u for a nonnegative square matrix.
PerronData perron_vector(const Eigen::MatrixXd& a, double tol = 1e-15, std::size_t max_iterations = 100000);
// Gauge matrix of the repeating block; requires a periodic diagram.
Eigen::MatrixXd tail_gauge_matrix(const Diagram& d, double beta);
// Applicable for periodic diagrams without drift whose block is primitive.
PerronData perron_block(const Diagram& d, double beta);
Eigen::VectorXd perron_gauge_vector(const Diagram& d, double beta, std::size_t level);
Eigen::VectorXd perron_kms_distribution(const Diagram& d, double beta, std::size_t level);

struct TransportRow {
    double beta = 0.0;
    std::string route;                // "perron" or "finite"
    std::vector<double> distances;    // level j at index j-1
    std::vector<double> bounds;       // finite route: sum of limit distances below j
    std::vector<Eigen::VectorXd> phi; // level j at index j-1
    double max_distance = 0.0;
};

// Target family in the stochastic-limit system, given at level `depth` and
// pulled up through the limit matrices.
std::vector<Eigen::VectorXd> limit_family(const Diagram& d, std::size_t depth, const Eigen::VectorXd& at_depth);

std::vector<TransportRow> beta_infinity_transport(const Diagram& d, const Eigen::VectorXd& target_at_depth,
                                                  const std::vector<double>& betas, std::size_t depth,
                                                  std::size_t max_level);

double l1_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

}  // namespace bratteli
