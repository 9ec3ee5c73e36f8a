#include "bratteli/diagram.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

namespace bratteli {

namespace {

std::string at(std::size_t level, const std::string& vertex) {
    return "vertex '" + vertex + "' at level " + std::to_string(level);
}

void check_names(const std::vector<std::string>& names, std::size_t level) {
    std::set<std::string> seen;
    for (const auto& n : names) {
        if (n.empty()) {
            throw DiagramError("schema: empty vertex name at level " + std::to_string(level));
        }
        if (!seen.insert(n).second) {
            throw DiagramError("schema: duplicate " + at(level, n));
        }
    }
}

void check_arrows(const std::vector<Arrow>& arrows, std::size_t gap, std::size_t n_source,
                  std::size_t n_range) {
    for (const auto& a : arrows) {
        if (a.source >= n_source || a.range >= n_range) {
            throw DiagramError("level mismatch: arrow at gap " + std::to_string(gap) +
                               " does not run from level " + std::to_string(gap - 1) + " to level " +
                               std::to_string(gap));
        }
        if (a.count < 1) {
            throw DiagramError("schema: arrow count must be >= 1 at gap " + std::to_string(gap));
        }
    }
}

}  // namespace

bool PeriodicTail::has_drift() const {
    return std::any_of(steps.begin(), steps.end(), [](const Potential& s) { return !s.is_zero(); });
}

Diagram::Diagram(std::vector<std::vector<std::string>> levels, std::vector<std::vector<Arrow>> gaps,
                 std::optional<PeriodicTail> tail)
    : levels_(std::move(levels)), gaps_(std::move(gaps)), tail_(std::move(tail)) {
    if (tail_ && tail_->steps.empty()) {
        tail_->steps.assign(tail_->arrows.size(), Potential{});
    }
    validate();
}

void Diagram::validate() const {
    if (levels_.empty() || levels_[0].size() != 1) {
        throw DiagramError("schema: level 0 must consist of exactly one vertex");
    }
    if (gaps_.size() + 1 != levels_.size()) {
        throw DiagramError("level mismatch: " + std::to_string(levels_.size()) + " levels but " +
                           std::to_string(gaps_.size()) + " arrow gaps");
    }
    for (std::size_t j = 0; j < levels_.size(); ++j) {
        if (levels_[j].empty()) {
            throw DiagramError("schema: level " + std::to_string(j) + " is empty");
        }
        check_names(levels_[j], j);
    }
    for (std::size_t g = 1; g <= gaps_.size(); ++g) {
        check_arrows(gaps_[g - 1], g, levels_[g - 1].size(), levels_[g].size());
    }
    if (tail_) {
        const auto& t = *tail_;
        if (t.from_level + 1 != levels_.size()) {
            throw DiagramError("level mismatch: repeat.from_level must be the last listed level (" +
                               std::to_string(levels_.size() - 1) + ")");
        }
        if (t.vertices != levels_.back()) {
            throw DiagramError("level mismatch: repeat.vertices must equal the vertices of level " +
                               std::to_string(t.from_level));
        }
        if (t.steps.size() != t.arrows.size()) {
            throw DiagramError("schema: repeat arrows and steps differ in length");
        }
        check_arrows(t.arrows, t.from_level + 1, t.vertices.size(), t.vertices.size());
        std::vector<bool> emits(t.vertices.size()), receives(t.vertices.size());
        for (const auto& a : t.arrows) {
            emits[a.source] = true;
            receives[a.range] = true;
        }
        for (std::size_t v = 0; v < t.vertices.size(); ++v) {
            if (!emits[v]) {
                throw DiagramError("sink: repeating " + at(t.from_level, t.vertices[v]) + " emits no arrow");
            }
            if (!receives[v]) {
                throw DiagramError("unreachable: repeating " + at(t.from_level + 1, t.vertices[v]) +
                                   " receives no arrow");
            }
        }
    }
    for (std::size_t g = 1; g <= gaps_.size(); ++g) {
        std::vector<bool> emits(levels_[g - 1].size()), receives(levels_[g].size());
        for (const auto& a : gaps_[g - 1]) {
            emits[a.source] = true;
            receives[a.range] = true;
        }
        for (std::size_t v = 0; v < emits.size(); ++v) {
            if (!emits[v]) {
                throw DiagramError("sink: " + at(g - 1, levels_[g - 1][v]) + " emits no arrow");
            }
        }
        for (std::size_t v = 0; v < receives.size(); ++v) {
            if (!receives[v]) {
                throw DiagramError("unreachable: " + at(g, levels_[g][v]) + " receives no arrow");
            }
        }
    }
}

std::optional<std::size_t> Diagram::depth() const {
    if (tail_) {
        return std::nullopt;
    }
    return levels_.size() - 1;
}

bool Diagram::has_level(std::size_t j) const { return tail_.has_value() || j < levels_.size(); }

void Diagram::require_level(std::size_t j) const {
    if (!has_level(j)) {
        throw DiagramError("depth: level " + std::to_string(j) + " requested but the diagram stops at level " +
                           std::to_string(levels_.size() - 1));
    }
}

std::size_t Diagram::level_size(std::size_t j) const { return level(j).size(); }

const std::vector<std::string>& Diagram::level(std::size_t j) const {
    require_level(j);
    if (j < levels_.size()) {
        return levels_[j];
    }
    return tail_->vertices;
}

std::vector<Arrow> Diagram::arrows(std::size_t gap) const {
    if (gap == 0) {
        throw DiagramError("gap index starts at 1");
    }
    require_level(gap);
    if (gap <= gaps_.size()) {
        return gaps_[gap - 1];
    }
    const auto& t = *tail_;
    std::vector<Arrow> out = t.arrows;
    Rational reps(static_cast<long>(gap - t.from_level - 1));
    double reps_d = static_cast<double>(gap - t.from_level - 1);
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!t.steps[i].is_zero()) {
            out[i].potential.exact += reps * t.steps[i].exact;
            out[i].potential.value += reps_d * t.steps[i].value;
        }
    }
    return out;
}

std::optional<std::size_t> Diagram::find_vertex(std::size_t j, const std::string& name) const {
    const auto& names = level(j);
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - names.begin());
}

Diagram Diagram::prefix(std::size_t depth) const {
    require_level(depth);
    std::vector<std::vector<std::string>> levels;
    std::vector<std::vector<Arrow>> gaps;
    for (std::size_t j = 0; j <= depth; ++j) {
        levels.push_back(level(j));
        if (j >= 1) {
            gaps.push_back(arrows(j));
        }
    }
    return Diagram(std::move(levels), std::move(gaps));
}

MultiplicityMatrix multiplicity_matrix(const Diagram& d, std::size_t gap) {
    MultiplicityMatrix m;
    m.gap = gap;
    m.rows = d.level_size(gap);
    m.cols = d.level_size(gap - 1);
    m.entries.assign(m.rows * m.cols, Integer(0));
    for (const auto& a : d.arrows(gap)) {
        m(a.range, a.source) += a.count;
    }
    return m;
}

std::vector<MultiplicityMatrix> multiplicity_matrices(const Diagram& d, std::size_t depth) {
    if (depth < 1) {
        throw DiagramError("depth must be >= 1");
    }
    std::vector<MultiplicityMatrix> out;
    for (std::size_t g = 1; g <= depth; ++g) {
        out.push_back(multiplicity_matrix(d, g));
    }
    return out;
}

MultiplicityMatrix multiply(const MultiplicityMatrix& a, const MultiplicityMatrix& b) {
    if (a.cols != b.rows) {
        throw DiagramError("multiplicity matrix shapes do not compose");
    }
    MultiplicityMatrix c;
    c.gap = a.gap;
    c.rows = a.rows;
    c.cols = b.cols;
    c.entries.assign(c.rows * c.cols, Integer(0));
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t k = 0; k < a.cols; ++k) {
            if (sgn(a(i, k)) == 0) {
                continue;
            }
            for (std::size_t j = 0; j < b.cols; ++j) {
                c(i, j) += a(i, k) * b(k, j);
            }
        }
    }
    return c;
}

Diagram telescope(const Diagram& d, const std::vector<std::size_t>& cuts) {
    if (cuts.empty()) {
        throw DiagramError("telescope: no cut levels given");
    }
    std::size_t prev = 0;
    for (auto k : cuts) {
        if (k <= prev) {
            throw DiagramError("telescope: cut levels must be strictly increasing and positive");
        }
        prev = k;
    }
    d.require_level(cuts.back());

    std::vector<std::vector<std::string>> levels{d.level(0)};
    std::vector<std::vector<Arrow>> gaps;
    std::size_t from = 0;
    for (auto to : cuts) {
        levels.push_back(d.level(to));
        // key: (source at `from`, current vertex, exact potential)
        using Key = std::tuple<std::size_t, std::size_t, Rational>;
        auto less = [](const Key& x, const Key& y) {
            if (std::get<0>(x) != std::get<0>(y)) return std::get<0>(x) < std::get<0>(y);
            if (std::get<1>(x) != std::get<1>(y)) return std::get<1>(x) < std::get<1>(y);
            return std::get<2>(x) < std::get<2>(y);
        };
        std::map<Key, std::pair<Potential, Integer>, decltype(less)> frontier(less);
        for (std::size_t s = 0; s < d.level_size(from); ++s) {
            frontier.emplace(Key{s, s, Rational(0)}, std::make_pair(Potential{}, Integer(1)));
        }
        for (std::size_t g = from + 1; g <= to; ++g) {
            auto arrows = d.arrows(g);
            std::vector<std::vector<const Arrow*>> out_of(d.level_size(g - 1));
            for (const auto& a : arrows) {
                out_of[a.source].push_back(&a);
            }
            std::map<Key, std::pair<Potential, Integer>, decltype(less)> next(less);
            for (const auto& [key, val] : frontier) {
                for (const Arrow* a : out_of[std::get<1>(key)]) {
                    Potential p = val.first + a->potential;
                    Key k{std::get<0>(key), a->range, p.exact};
                    auto it = next.find(k);
                    if (it == next.end()) {
                        next.emplace(k, std::make_pair(p, val.second * a->count));
                    } else {
                        it->second.second += val.second * a->count;
                    }
                }
            }
            frontier = std::move(next);
        }
        std::vector<Arrow> gap;
        for (const auto& [key, val] : frontier) {
            gap.push_back(Arrow{std::get<0>(key), std::get<1>(key), val.first, val.second});
        }
        gaps.push_back(std::move(gap));
        from = to;
    }
    return Diagram(std::move(levels), std::move(gaps));
}

std::string product_vertex_name(const std::string& a, const std::string& b) { return "(" + a + "," + b + ")"; }

namespace {

std::vector<std::string> product_names(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::vector<std::string> out;
    for (const auto& x : a) {
        for (const auto& y : b) {
            out.push_back(product_vertex_name(x, y));
        }
    }
    return out;
}

std::vector<Arrow> product_arrows(const std::vector<Arrow>& a, const std::vector<Arrow>& b, std::size_t b_src,
                                  std::size_t b_rng) {
    std::vector<Arrow> out;
    for (const auto& x : a) {
        for (const auto& y : b) {
            out.push_back(Arrow{x.source * b_src + y.source, x.range * b_rng + y.range, x.potential + y.potential,
                                x.count * y.count});
        }
    }
    return out;
}

}  // namespace

Diagram product(const Diagram& a, const Diagram& b) {
    std::size_t explicit_depth;
    bool periodic = a.is_periodic() && b.is_periodic();
    if (periodic) {
        explicit_depth = std::max(a.tail()->from_level, b.tail()->from_level);
    } else {
        std::size_t da = a.depth().value_or(SIZE_MAX);
        std::size_t db = b.depth().value_or(SIZE_MAX);
        explicit_depth = std::min(da, db);
    }
    std::vector<std::vector<std::string>> levels;
    std::vector<std::vector<Arrow>> gaps;
    for (std::size_t j = 0; j <= explicit_depth; ++j) {
        levels.push_back(product_names(a.level(j), b.level(j)));
        if (j >= 1) {
            gaps.push_back(product_arrows(a.arrows(j), b.arrows(j), b.level_size(j - 1), b.level_size(j)));
        }
    }
    std::optional<PeriodicTail> tail;
    if (periodic) {
        // Tail repetition 0 of the product is gap explicit_depth + 1 in both factors.
        std::size_t g = explicit_depth + 1;
        PeriodicTail t;
        t.from_level = explicit_depth;
        t.vertices = levels.back();
        const auto& ta = *a.tail();
        const auto& tb = *b.tail();
        auto arrows_a = a.arrows(g);
        auto arrows_b = b.arrows(g);
        std::size_t nb = tb.vertices.size();
        for (std::size_t i = 0; i < arrows_a.size(); ++i) {
            for (std::size_t k = 0; k < arrows_b.size(); ++k) {
                const auto& x = arrows_a[i];
                const auto& y = arrows_b[k];
                t.arrows.push_back(Arrow{x.source * nb + y.source, x.range * nb + y.range,
                                         x.potential + y.potential, x.count * y.count});
                t.steps.push_back(ta.steps[i] + tb.steps[k]);
            }
        }
        tail = std::move(t);
    }
    return Diagram(std::move(levels), std::move(gaps), std::move(tail));
}

Diagram negate_potential(const Diagram& d) {
    auto gaps = d.explicit_gaps();
    for (auto& gap : gaps) {
        for (auto& a : gap) {
            a.potential = -a.potential;
        }
    }
    auto tail = d.tail();
    if (tail) {
        for (auto& a : tail->arrows) {
            a.potential = -a.potential;
        }
        for (auto& s : tail->steps) {
            s = -s;
        }
    }
    return Diagram(d.explicit_levels(), std::move(gaps), std::move(tail));
}

Potential path_potential(const Diagram& d, const FinitePath& path) {
    Potential total;
    std::optional<std::size_t> at_vertex;
    for (std::size_t i = 0; i < path.arrows.size(); ++i) {
        const auto& ref = path.arrows[i];
        if (ref.gap != path.start_level + i + 1) {
            throw DiagramError("path arrow " + std::to_string(i) + " is not at gap " +
                               std::to_string(path.start_level + i + 1));
        }
        auto arrows = d.arrows(ref.gap);
        if (ref.cls >= arrows.size() || ref.replica < 0 || ref.replica >= arrows[ref.cls].count) {
            throw DiagramError("path arrow " + std::to_string(i) + " does not exist");
        }
        const auto& a = arrows[ref.cls];
        if (at_vertex && *at_vertex != a.source) {
            throw DiagramError("path arrows " + std::to_string(i - 1) + " and " + std::to_string(i) +
                               " are not composable");
        }
        at_vertex = a.range;
        total += a.potential;
    }
    return total;
}

}  // namespace bratteli
