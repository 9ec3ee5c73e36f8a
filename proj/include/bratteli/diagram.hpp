#pragma once

#include "bratteli/rational.hpp"

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bratteli {

class DiagramError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A class of parallel arrows from level j-1 to level j sharing one
// potential. Individual arrows are (class index, replica < count).
struct Arrow {
    std::size_t source = 0;  // index into level j-1
    std::size_t range = 0;   // index into level j
    Potential potential;
    Integer count = 1;
};

// Repeating tail: every level >= from_level has the vertex set `vertices`
// and every gap into a level > from_level carries `arrows`. The potential of
// a tail arrow on its r-th repetition (r = 0, 1, ...) is potential + r*step.
struct PeriodicTail {
    std::size_t from_level = 0;
    std::vector<std::string> vertices;
    std::vector<Arrow> arrows;
    std::vector<Potential> steps;  // parallel to arrows

    bool has_drift() const;
};

// Integer matrix over Br_j x Br_{j-1}: entry (v, w) counts arrows w -> v.
struct MultiplicityMatrix {
    std::size_t gap = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<Integer> entries;  // row-major

    const Integer& operator()(std::size_t v, std::size_t w) const { return entries[v * cols + w]; }
    Integer& operator()(std::size_t v, std::size_t w) { return entries[v * cols + w]; }
};

// Reference to a single arrow: gap, arrow class and replica.
struct ArrowRef {
    std::size_t gap = 0;
    std::size_t cls = 0;
    Integer replica = 0;
};

// A path that starts at `start_level`; arrows must be composable.
struct FinitePath {
    std::size_t start_level = 0;
    std::vector<ArrowRef> arrows;

    std::size_t length() const { return arrows.size(); }
};

// Leveled multigraph with potentials. Level 0 holds the single top vertex.
// Immutable once constructed; construction validates all structural
// invariants and throws DiagramError with level/vertex coordinates.
class Diagram {
public:
    Diagram(std::vector<std::vector<std::string>> levels,
            std::vector<std::vector<Arrow>> gaps,
            std::optional<PeriodicTail> tail = std::nullopt);

    bool is_periodic() const { return tail_.has_value(); }
    // Deepest level available; nullopt when the tail repeats forever.
    std::optional<std::size_t> depth() const;
    bool has_level(std::size_t j) const;
    void require_level(std::size_t j) const;

    std::size_t level_size(std::size_t j) const;
    const std::vector<std::string>& level(std::size_t j) const;
    // Arrows into level `gap` (gap >= 1).
    std::vector<Arrow> arrows(std::size_t gap) const;
    std::optional<std::size_t> find_vertex(std::size_t j, const std::string& name) const;

    const std::vector<std::vector<std::string>>& explicit_levels() const { return levels_; }
    const std::vector<std::vector<Arrow>>& explicit_gaps() const { return gaps_; }
    const std::optional<PeriodicTail>& tail() const { return tail_; }

    // Finite diagram holding levels 0..depth.
    Diagram prefix(std::size_t depth) const;

private:
    void validate() const;

    std::vector<std::vector<std::string>> levels_;
    std::vector<std::vector<Arrow>> gaps_;
    std::optional<PeriodicTail> tail_;
};

MultiplicityMatrix multiplicity_matrix(const Diagram& d, std::size_t gap);
std::vector<MultiplicityMatrix> multiplicity_matrices(const Diagram& d, std::size_t depth);
MultiplicityMatrix multiply(const MultiplicityMatrix& a, const MultiplicityMatrix& b);

// Collapse the levels between consecutive cuts. The new arrows are the
// paths between cut levels, carrying the summed potential; classes with the
// same endpoints and potential are merged.
Diagram telescope(const Diagram& d, const std::vector<std::size_t>& cuts);

// Level-wise cartesian product; arrow pairs carry summed potentials.
Diagram product(const Diagram& a, const Diagram& b);
std::string product_vertex_name(const std::string& a, const std::string& b);

Diagram negate_potential(const Diagram& d);

// Potential of a path, or throws when the arrows are not composable.
Potential path_potential(const Diagram& d, const FinitePath& path);

}  // namespace bratteli
