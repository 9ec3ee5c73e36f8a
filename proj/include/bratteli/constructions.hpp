#pragma once

#include "bratteli/diagram.hpp"
#include "bratteli/geodesics.hpp"

#include <json.hpp>

#include <stdexcept>
#include <string>
#include <vector>

namespace bratteli {

class ConstructionError : public std::runtime_error {
public:
    ConstructionError(const std::string& what, std::size_t gap) : std::runtime_error(what), gap(gap) {}
    std::size_t gap;
};

// d_1, d_2, ... presenting a UHF algebra; a cyclic list repeats forever.
struct Supernatural {
    std::vector<Integer> factors;
    bool cyclic = true;

    // d_i, 1-based; nullopt when a finite list has run out
    std::optional<Integer> at(std::size_t i) const;
    void validate() const;
    static Supernatural dyadic() { return {{Integer(2)}, true}; }
};

Supernatural supernatural_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Supernatural& s);

struct VerificationEntry {
    std::string check;
    bool pass = false;
    nlohmann::json detail;
};

struct ConstructionCertificate {
    std::string construction;
    Diagram output;
    nlohmann::json schedules;
    std::vector<VerificationEntry> verification;
    std::vector<std::string> warnings;

    bool all_pass() const;
    nlohmann::json to_json() const;  // without input hashes
};

// One-vertex diagram of a given depth, or levels of constant width.
Diagram point_diagram(std::size_t depth);

// --- uhf embedding ------------------------------------------------------

struct UhfSchedule {
    std::vector<std::size_t> cuts;  // k_1 < k_2 < ...
    std::vector<Integer> block;     // products of d over each block
    std::vector<Integer> s;
    std::vector<Integer> r;
    std::vector<std::size_t> u;     // chosen vertex per level (index)
};

struct UhfEmbedding {
    ConstructionCertificate certificate;
    UhfSchedule schedule;
    // Per gap, index of the first extra arrow class; classes before it are
    // the embedded base arrows in their original order.
    std::vector<std::size_t> first_extra;
};

// margins[j-1] = m_j; a shorter list repeats its last entry.
UhfEmbedding construct_uhf_embedding(const Diagram& base, const std::vector<Integer>& margins, const Supernatural& uhf,
                                     std::size_t depth);
std::vector<VerificationEntry> verify_uhf_embedding(const Diagram& base, const std::vector<Integer>& margins,
                                                    const Supernatural& uhf, const Diagram& output,
                                                    const UhfSchedule& schedule);

// --- ground / ceiling ---------------------------------------------------

// Disjoint union with a new top vertex; vertex names get "+:" / "-:" prefixes.
Diagram disjoint_union(const Diagram& plus, const Diagram& minus, std::size_t depth);

ConstructionCertificate construct_ground_ceiling(const Diagram& plus, const Diagram& minus, const Supernatural& uhf,
                                                 std::size_t depth);

// --- rigid KMS ----------------------------------------------------------

// Grid used for inequalities over beta in [-j, j]: endpoints, every integer
// inside and 50 evenly spaced interior points.
std::vector<double> beta_window_grid(std::size_t j);

ConstructionCertificate construct_rigid_kms(const Diagram& base, const Supernatural& uhf_minus, std::size_t depth);

// --- product pipeline ---------------------------------------------------

ConstructionCertificate main_theorem_pipeline(const Diagram& spec_f, const Diagram& plus, const Diagram& minus,
                                              const Supernatural& u1, const Supernatural& u2, std::size_t depth);

// Block counts of the F- and (-F)-geodesic profiles at levels 0..depth-1
// (the last level has no lookahead).
struct GeodesicCounts {
    std::vector<std::size_t> ground;
    std::vector<std::size_t> ceiling;
};
GeodesicCounts geodesic_block_counts(const Diagram& d);

}  // namespace bratteli
