#include "bratteli/geodesics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace bratteli {

const char* to_string(Certification c) {
    return c == Certification::Exact ? "Exact" : "TruncatedAtDepth";
}

namespace {

struct Trace {
    std::vector<std::vector<Arrow>> arrows;  // index gap-1
    std::vector<std::vector<bool>> tight;    // index gap-1
    std::vector<std::vector<double>> m;
    std::vector<std::vector<Rational>> mq;
};

void record(Trace& t, const LevelStepper& s, bool with_gap) {
    if (with_gap) {
        t.arrows.push_back(s.last_arrows());
        t.tight.push_back(s.last_tight());
    }
    std::vector<double> m;
    std::vector<Rational> mq;
    for (const auto& v : s.current().vertices) {
        m.push_back(v.min_potential);
        mq.push_back(v.min_potential_exact);
    }
    t.m.push_back(std::move(m));
    t.mq.push_back(std::move(mq));
}

// Backward pruning from `alive_at_top` at level `top` down to level 0.
std::vector<std::vector<bool>> prune_back(const Trace& t, std::size_t top, std::vector<bool> alive_at_top) {
    std::vector<std::vector<bool>> alive(top + 1);
    alive[top] = std::move(alive_at_top);
    for (std::size_t n = top; n-- > 0;) {
        alive[n].assign(t.m[n].size(), false);
        const auto& arrows = t.arrows[n];
        const auto& tight = t.tight[n];
        for (std::size_t i = 0; i < arrows.size(); ++i)
            if (tight[i] && alive[n + 1][arrows[i].range]) alive[n][arrows[i].source] = true;
    }
    return alive;
}

bool same_key(const Trace& t, std::size_t a, std::size_t b, NumericMode mode, const TieTolerance& tol) {
    const auto& ma = t.m[a];
    const auto& mb = t.m[b];
    if (ma.size() != mb.size()) return false;
    if (mode == NumericMode::Exact) {
        const auto& qa = t.mq[a];
        const auto& qb = t.mq[b];
        Rational lo_a = *std::min_element(qa.begin(), qa.end());
        Rational lo_b = *std::min_element(qb.begin(), qb.end());
        for (std::size_t i = 0; i < qa.size(); ++i)
            if (qa[i] - lo_a != qb[i] - lo_b) return false;
        return true;
    }
    double lo_a = *std::min_element(ma.begin(), ma.end());
    double lo_b = *std::min_element(mb.begin(), mb.end());
    for (std::size_t i = 0; i < ma.size(); ++i) {
        double x = ma[i] - lo_a, y = mb[i] - lo_b;
        if (std::fabs(x - y) > tol.relative * (1.0 + std::fabs(y))) return false;
    }
    return true;
}

// Tight arrows must not drift and no arrow may drift downwards.
bool drift_compatible(const PeriodicTail& tail, const Trace& t, std::size_t first_gap, std::size_t last_gap) {
    for (const Potential& s : tail.steps)
        if (s.exact < 0) return false;
    for (std::size_t g = first_gap; g <= last_gap; ++g)
        for (std::size_t i = 0; i < t.tight[g - 1].size(); ++i)
            if (t.tight[g - 1][i] && !tail.steps[i].is_zero()) return false;
    return true;
}

TightSubdiagram assemble(const Diagram& d, std::size_t depth, const Trace& t,
                         const std::vector<std::vector<bool>>& alive) {
    TightSubdiagram sub{d.prefix(depth), {}, {}, {}, {}, {}};
    for (std::size_t n = 0; n <= depth; ++n) {
        sub.vertex_alive.push_back(alive[n]);
        sub.min_potential.push_back(t.m[n]);
        sub.min_potential_exact.push_back(t.mq[n]);
    }
    for (std::size_t g = 1; g <= depth; ++g) {
        const auto& arrows = t.arrows[g - 1];
        std::vector<bool> keep(arrows.size(), false);
        for (std::size_t i = 0; i < arrows.size(); ++i)
            keep[i] = t.tight[g - 1][i] && alive[g][arrows[i].range];
        sub.arrow_alive.push_back(std::move(keep));
        sub.tight.push_back(t.tight[g - 1]);
    }
    return sub;
}

}  // namespace

TightSubdiagram extract_geodesic_subdiagram(const Diagram& d, std::size_t depth, const GeodesicOptions& opt) {
    d.require_level(depth);
    LevelStepper step(d, {}, opt.mode, opt.tol);
    Trace t;
    record(t, step, false);

    if (d.is_periodic()) {
        const PeriodicTail& tail = *d.tail();
        std::size_t p0 = tail.from_level;
        std::size_t cap = std::max(depth, p0) + opt.period_cap;
        for (std::size_t n = 1; n <= cap; ++n) {
            step.advance();
            record(t, step, true);
            if (n <= p0) continue;
            // look for an earlier level p >= p0 with the same normalised minima
            for (std::size_t p = p0; p < n; ++p) {
                if (!same_key(t, p, n, opt.mode, opt.tol)) continue;
                if (!drift_compatible(tail, t, p + 1, n)) break;
                std::size_t c = n - p;
                // greatest fixed point on the cycle p..n-1 (level n == level p)
                std::vector<std::vector<bool>> cyc(c + 1);
                for (std::size_t k = 0; k <= c; ++k) cyc[k].assign(t.m[p + k].size(), true);
                bool changed = true;
                while (changed) {
                    changed = false;
                    for (std::size_t k = c; k-- > 0;) {
                        std::vector<bool> next(cyc[k].size(), false);
                        const auto& arrows = t.arrows[p + k];
                        const auto& tight = t.tight[p + k];
                        for (std::size_t i = 0; i < arrows.size(); ++i)
                            if (tight[i] && cyc[k + 1][arrows[i].range]) next[arrows[i].source] = true;
                        if (next != cyc[k]) {
                            cyc[k] = std::move(next);
                            changed = true;
                        }
                    }
                    if (cyc[0] != cyc[c]) {
                        cyc[c] = cyc[0];
                        changed = true;
                    }
                }
                // extend the trace periodically to cover depth
                std::size_t top = std::max(depth, n);
                while (t.m.size() <= top) {
                    step.advance();
                    record(t, step, true);
                }
                std::vector<std::vector<bool>> alive(top + 1);
                for (std::size_t lv = p; lv <= top; ++lv) alive[lv] = cyc[(lv - p) % c];
                auto head = prune_back(t, p, cyc[0]);
                for (std::size_t lv = 0; lv < p; ++lv) alive[lv] = head[lv];
                TightSubdiagram sub = assemble(d, depth, t, alive);
                sub.certification = Certification::Exact;
                sub.horizon = top;
                sub.period_start = p;
                sub.period_length = c;
                return sub;
            }
        }
        // no cycle found: fall through to a truncated answer on the trace so far
    }

    std::size_t horizon = depth + opt.lookahead;
    if (auto dd = d.depth()) horizon = std::min(horizon, *dd);
    while (t.m.size() <= horizon) {
        step.advance();
        record(t, step, true);
    }
    auto alive = prune_back(t, horizon, std::vector<bool>(t.m[horizon].size(), true));
    TightSubdiagram sub = assemble(d, depth, t, alive);
    sub.certification = Certification::TruncatedAtDepth;
    sub.horizon = horizon;
    sub.lookahead = horizon - depth;
    if (sub.lookahead >= opt.window && opt.window > 0) {
        std::size_t h2 = horizon - opt.window;
        auto shorter = prune_back(t, h2, std::vector<bool>(t.m[h2].size(), true));
        for (std::size_t n = 0; n <= depth; ++n)
            if (shorter[n] != alive[n]) sub.stable = false;
    } else {
        sub.stable = false;
    }
    return sub;
}

GeodesicPrefixData geodesic_prefix_data(const TightSubdiagram& sub, std::size_t n) {
    if (n > sub.depth()) {
        throw GeodesicDepthError("level " + std::to_string(n) + " is beyond the analysed depth " +
                                     std::to_string(sub.depth()) + " (" + to_string(sub.certification) + ")",
                                 sub.certification);
    }
    std::vector<Integer> cur(1, 1);
    for (std::size_t g = 1; g <= n; ++g) {
        std::vector<Integer> next(sub.vertex_alive[g].size(), 0);
        auto arrows = sub.prefix.arrows(g);
        for (std::size_t i = 0; i < arrows.size(); ++i)
            if (sub.arrow_alive[g - 1][i]) next[arrows[i].range] += cur[arrows[i].source] * arrows[i].count;
        cur = std::move(next);
    }
    GeodesicPrefixData out;
    out.n = n;
    out.total = 0;
    for (const auto& c : cur) out.total += c;
    out.per_vertex = std::move(cur);
    return out;
}

bool is_geodesic_prefix(const TightSubdiagram& sub, const FinitePath& path) {
    if (path.start_level != 0 || path.length() > sub.depth()) return false;
    std::size_t at = 0;
    for (std::size_t k = 0; k < path.arrows.size(); ++k) {
        const ArrowRef& r = path.arrows[k];
        if (r.gap != k + 1) return false;
        auto arrows = sub.prefix.arrows(r.gap);
        if (r.cls >= arrows.size() || r.replica < 0 || r.replica >= arrows[r.cls].count) return false;
        if (arrows[r.cls].source != at) return false;
        if (!sub.arrow_alive[r.gap - 1][r.cls]) return false;
        at = arrows[r.cls].range;
    }
    return true;
}

Diagram geodesic_diagram(const TightSubdiagram& sub, std::size_t depth) {
    if (depth > sub.depth()) {
        throw GeodesicDepthError("level " + std::to_string(depth) + " is beyond the analysed depth", sub.certification);
    }
    std::vector<std::vector<std::string>> levels;
    std::vector<std::vector<std::size_t>> remap;
    for (std::size_t n = 0; n <= depth; ++n) {
        std::vector<std::string> names;
        std::vector<std::size_t> idx(sub.vertex_alive[n].size(), 0);
        for (std::size_t v = 0; v < idx.size(); ++v)
            if (sub.vertex_alive[n][v]) {
                idx[v] = names.size();
                names.push_back(sub.prefix.level(n)[v]);
            }
        levels.push_back(std::move(names));
        remap.push_back(std::move(idx));
    }
    std::vector<std::vector<Arrow>> gaps;
    for (std::size_t g = 1; g <= depth; ++g) {
        std::vector<Arrow> out;
        auto arrows = sub.prefix.arrows(g);
        for (std::size_t i = 0; i < arrows.size(); ++i) {
            if (!sub.arrow_alive[g - 1][i]) continue;
            Arrow a = arrows[i];
            a.source = remap[g - 1][a.source];
            a.range = remap[g][a.range];
            out.push_back(std::move(a));
        }
        gaps.push_back(std::move(out));
    }
    return Diagram(std::move(levels), std::move(gaps));
}

AlgebraProfile ground_state_algebra_profile(const TightSubdiagram& sub, std::size_t depth) {
    AlgebraProfile prof{{}, geodesic_diagram(sub, depth), sub.certification};
    for (std::size_t n = 0; n <= depth; ++n) {
        GeodesicPrefixData g = geodesic_prefix_data(sub, n);
        std::vector<GroundBlock> blocks;
        for (std::size_t v = 0; v < g.per_vertex.size(); ++v)
            if (sub.vertex_alive[n][v] && g.per_vertex[v] > 0) blocks.push_back({sub.prefix.level(n)[v], g.per_vertex[v]});
        prof.blocks.push_back(std::move(blocks));
    }
    return prof;
}

std::string describe_blocks(const std::vector<GroundBlock>& blocks) {
    std::map<Integer, std::size_t, std::greater<Integer>> by_size;
    for (const auto& b : blocks) ++by_size[b.size];
    std::string out;
    for (const auto& [size, mult] : by_size) {
        if (!out.empty()) out += " + ";
        out += size == 1 ? std::string("C") : "M_" + to_string(size);
        if (mult > 1) out += "^" + std::to_string(mult);
    }
    return out.empty() ? "0" : out;
}

}  // namespace bratteli
