#pragma once

#include "bratteli/diagram.hpp"
#include "bratteli/geodesics.hpp"
#include "bratteli/path_statistics.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace bratteli {

using Complex = std::complex<double>;
// Block-diagonal element of AF_n, one square block per vertex of level n.
using Element = std::vector<Eigen::MatrixXcd>;

struct LevelPath {
    std::vector<std::size_t> cls;      // arrow class per gap
    std::vector<std::size_t> replica;  // replica within the class
    std::size_t parent = 0;            // index in the block of r(prefix) at level n-1
    std::size_t range = 0;
    Potential potential;
};

class LevelAlgebra {
public:
    static constexpr std::size_t kDefaultCap = 4096;

    LevelAlgebra(const Diagram& d, std::size_t n, std::size_t cap = kDefaultCap);

    std::size_t level() const { return n_; }
    std::size_t num_blocks() const { return blocks_.size(); }
    std::size_t block_size(std::size_t v) const { return blocks_[v].size(); }
    std::size_t total_paths() const;
    const LevelPath& path(std::size_t v, std::size_t i) const { return blocks_[v][i]; }
    double potential(std::size_t v, std::size_t i) const { return blocks_[v][i].potential.value; }
    const std::vector<std::string>& vertex_names() const { return names_; }
    FinitePath finite_path(std::size_t v, std::size_t i) const;
    std::string path_label(std::size_t v, std::size_t i) const;
    std::optional<std::pair<std::size_t, std::size_t>> find(const FinitePath& p) const;

    const Diagram& diagram() const { return diagram_; }
    const std::vector<Arrow>& arrows(std::size_t gap) const { return arrows_.at(gap - 1); }
    // Lowest path potential into each vertex, exactly.
    const Rational& min_potential(std::size_t v) const { return minima_[v]; }
    bool is_minimal(std::size_t v, std::size_t i) const { return blocks_[v][i].potential.exact == minima_[v]; }

private:
    Diagram diagram_;  // prefix to level n
    std::size_t n_;
    std::vector<std::vector<Arrow>> arrows_;
    std::vector<Rational> minima_;
    std::vector<std::string> names_;
    std::vector<std::vector<LevelPath>> blocks_;
};

Element zero_element(const LevelAlgebra& alg);
Element identity_element(const LevelAlgebra& alg);
Element matrix_unit(const LevelAlgebra& alg, std::size_t v, std::size_t i, std::size_t j);
Element random_element(const LevelAlgebra& alg, std::uint64_t seed);
Element multiply(const Element& a, const Element& b);
Element adjoint(const Element& a);
Element add(const Element& a, const Element& b);
Element scale(const Element& a, Complex c);
double max_abs(const Element& a);
// C*-norm: largest singular value over blocks.
double norm(const Element& a);

// i(H a - a H)
Element generator_apply(const LevelAlgebra& alg, const Element& a);
// Image of a under AF_n -> AF_{n+1}; `next` must be the level n+1 algebra of the same diagram.
Element embed(const LevelAlgebra& alg, const LevelAlgebra& next, const Element& a);

// omega(x) = sum_v tr(rho_v x_v); omega(E_{mu,nu}) = rho_v(nu, mu).
struct BlockState {
    std::size_t level = 0;
    std::vector<Eigen::MatrixXcd> rho;
};

Complex evaluate(const BlockState& s, const Element& a);
// Largest deviation from positivity and unit trace.
struct StateValidity {
    double min_eigenvalue = 0.0;
    double trace_defect = 0.0;
    bool ok(double psd_tol = 1e-10, double trace_tol = 1e-12) const {
        return min_eigenvalue >= -psd_tol && trace_defect <= trace_tol;
    }
};
StateValidity validate_state(const LevelAlgebra& alg, const BlockState& s);
BlockState restrict_state(const LevelAlgebra& alg, const LevelAlgebra& next, const BlockState& s);
// Block masses omega(p^v).
std::vector<double> vertex_masses(const BlockState& s);

BlockState gibbs_state(const LevelAlgebra& alg, double beta, const std::vector<double>& vertex_weights);
BlockState random_state(const LevelAlgebra& alg, std::uint64_t seed);

struct KmsReport {
    double beta = 0.0;
    double max_violation = 0.0;
    std::string witness[4];  // mu, mu', nu, nu'
    std::size_t quadruples = 0;
};
KmsReport check_kms(const LevelAlgebra& alg, const BlockState& s, double beta);

struct GroundReport {
    double min_value = 0.0;
    std::string witness;  // element achieving the minimum
    std::uint64_t seed = 0;
    std::size_t trials = 0;
    std::size_t units_checked = 0;
};
constexpr std::uint64_t kDefaultSeed = 20200906;
GroundReport check_ground(const LevelAlgebra& alg, const BlockState& s, std::size_t trials,
                          std::uint64_t seed = kDefaultSeed);

// -i omega(a* delta(a))
double ground_functional(const LevelAlgebra& alg, const BlockState& s, const Element& a);

// Flags of the G_n paths in the algebra's ordering.
std::vector<std::vector<bool>> geodesic_flags(const LevelAlgebra& alg, const TightSubdiagram& sub);
double geodesic_mass(const LevelAlgebra& alg, const TightSubdiagram& sub, const BlockState& s);

struct GroundWitness {
    bool found = false;
    std::size_t level = 0;
    std::string mu;
    std::string nu;
    double value = 0.0;  // -i omega_K(E* delta(E)) for E = E_{mu,nu}
};
// Follows the argument that a state charging a path outside G_n cannot be a
// ground state: a non-minimal path pairs with a minimal one at the same
// vertex; a minimal path whose range leaves Br+ is continued to the level
// where its tight continuations die, using the uniform extension of s.
GroundWitness find_ground_witness(const Diagram& d, const LevelAlgebra& alg, const TightSubdiagram& sub,
                                  const BlockState& s, double mass_tol = 1e-12);
// Extension omega_K(E_{mu g, mu' g'}) = [g = g'] omega(E_{mu,mu'}) / N(r(mu), K).
BlockState uniform_extension(const Diagram& d, const LevelAlgebra& alg, const BlockState& s, std::size_t k);

Element conditional_expectation(const LevelAlgebra& alg, const Element& a, NumericMode mode = NumericMode::Exact,
                                TieTolerance tol = {});
// Q_F: R followed by compression to the G_n paths; the result is indexed by
// the G_n paths of each vertex (empty blocks off Br+).
Element q_f_compress(const LevelAlgebra& alg, const TightSubdiagram& sub, const Element& a);
// Embedding of AF_n(Br+) into AF_{n+1}(Br+).
Element corner_embed(const LevelAlgebra& alg, const LevelAlgebra& next, const TightSubdiagram& sub,
                     const Element& x);
// sum_mu b_mu* b_mu with b_mu = sqrt(F(mu) - m) E_{mu,mu} a Q_n, compressed like q_f_compress.
Element positivity_decomposition(const LevelAlgebra& alg, const TightSubdiagram& sub, const Element& a);

struct StateWithWarnings {
    BlockState state;
    std::vector<std::string> warnings;
};
StateWithWarnings local_kms_infinity_state(const LevelAlgebra& alg, const TightSubdiagram& sub,
                                           const std::vector<double>& vertex_weights);
// tau o Q_F for a trace tau given by per-path weights on the G_n paths.
BlockState trace_to_ground(const LevelAlgebra& alg, const TightSubdiagram& sub,
                           const std::vector<std::vector<double>>& path_weights, double tol = 1e-12);
// Same, with tau spread evenly over each block; weights indexed by Br_n vertex.
BlockState trace_to_ground_blocks(const LevelAlgebra& alg, const TightSubdiagram& sub,
                                  const std::vector<double>& block_weights);

nlohmann::json state_to_json(const LevelAlgebra& alg, const BlockState& s);
BlockState state_from_json(const LevelAlgebra& alg, const nlohmann::json& j);

}  // namespace bratteli
