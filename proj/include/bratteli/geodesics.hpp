#pragma once

#include "bratteli/diagram.hpp"
#include "bratteli/path_statistics.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace bratteli {

enum class Certification { Exact, TruncatedAtDepth };
const char* to_string(Certification c);

struct GeodesicOptions {
    std::size_t lookahead = 8;
    std::size_t window = 5;        // stability window for truncated results
    std::size_t period_cap = 256;  // levels searched for a repeating state
    NumericMode mode = NumericMode::Float;
    TieTolerance tol{};
};

// Tight arrows pruned to those with an infinite (or horizon-reaching) tight
// continuation. Arrow flags are indexed like Diagram::arrows(gap).
struct TightSubdiagram {
    Diagram prefix;  // levels 0..depth of the input
    std::vector<std::vector<bool>> vertex_alive;  // per level
    std::vector<std::vector<bool>> arrow_alive;   // per gap, index gap-1
    std::vector<std::vector<bool>> tight;         // per gap, before pruning
    std::vector<std::vector<double>> min_potential;
    std::vector<std::vector<Rational>> min_potential_exact;
    Certification certification = Certification::TruncatedAtDepth;
    std::size_t horizon = 0;    // deepest level used for pruning
    std::size_t lookahead = 0;  // horizon - depth for truncated results
    bool stable = true;         // truncated: same answer with lookahead - window
    std::size_t period_start = 0;   // exact: first level of the detected cycle
    std::size_t period_length = 0;  // exact: cycle length

    std::size_t depth() const { return vertex_alive.size() - 1; }
};

class GeodesicDepthError : public std::runtime_error {
public:
    GeodesicDepthError(const std::string& what, Certification c) : std::runtime_error(what), certification(c) {}
    Certification certification;
};

TightSubdiagram extract_geodesic_subdiagram(const Diagram& d, std::size_t depth, const GeodesicOptions& opt = {});

struct GeodesicPrefixData {
    std::size_t n = 0;
    Integer total;                   // #G_n
    std::vector<Integer> per_vertex; // G_n paths ending at each vertex of level n
};

GeodesicPrefixData geodesic_prefix_data(const TightSubdiagram& sub, std::size_t n);
// True when the path starts at v0 and uses surviving arrows only.
bool is_geodesic_prefix(const TightSubdiagram& sub, const FinitePath& path);

struct GroundBlock {
    std::string vertex;
    Integer size;  // number of G_n paths ending at the vertex
};

struct AlgebraProfile {
    std::vector<std::vector<GroundBlock>> blocks;  // per level 0..depth
    Diagram plus;                                  // Br+ truncated at depth
    Certification certification = Certification::TruncatedAtDepth;

    std::size_t block_count(std::size_t level) const { return blocks.at(level).size(); }
};

// Surviving vertices and arrows as a diagram of their own.
Diagram geodesic_diagram(const TightSubdiagram& sub, std::size_t depth);
AlgebraProfile ground_state_algebra_profile(const TightSubdiagram& sub, std::size_t depth);

// "C", "C^2", "M_2 + C" ... for one level of a profile.
std::string describe_blocks(const std::vector<GroundBlock>& blocks);

}  // namespace bratteli
