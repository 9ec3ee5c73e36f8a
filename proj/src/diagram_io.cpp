#include "bratteli/diagram_io.hpp"

#include <fstream>
#include <sstream>

namespace bratteli {

using nlohmann::json;

namespace {

std::size_t vertex_index(const std::vector<std::string>& names, const std::string& name, std::size_t level) {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) {
            return i;
        }
    }
    throw DiagramError("level mismatch: no vertex '" + name + "' at level " + std::to_string(level));
}

Integer count_from_json(const json& j) {
    if (!j.is_object() || !j.contains("count")) {
        return 1;
    }
    const auto& c = j.at("count");
    Integer n;
    if (c.is_number_unsigned() || c.is_number_integer()) {
        n = Integer(std::to_string(c.get<long long>()));
    } else if (c.is_string()) {
        n = Integer(c.get<std::string>(), 10);
    } else {
        throw DiagramError("schema: arrow count must be an integer");
    }
    if (n < 1) {
        throw DiagramError("schema: arrow count must be >= 1");
    }
    return n;
}

json count_to_json(const Integer& n) {
    if (n.fits_slong_p()) {
        return n.get_si();
    }
    return n.get_str();
}

}  // namespace

Potential potential_from_json(const json& j) {
    if (j.is_number()) {
        return Potential::from_double(j.get<double>());
    }
    if (j.is_string()) {
        try {
            return Potential::from_rational(parse_rational(j.get<std::string>()));
        } catch (const std::invalid_argument& e) {
            throw DiagramError(std::string("schema: ") + e.what());
        }
    }
    throw DiagramError("schema: potential must be a number or a \"p/q\" string");
}

json potential_to_json(const Potential& p) {
    if (p.exact.get_den() == 1 && p.exact.get_num().fits_slong_p()) {
        return p.exact.get_num().get_si();
    }
    if (p.decimal_exact()) {
        return p.value;
    }
    return to_string(p.exact);
}

Diagram load_spec(const json& doc) {
    try {
        if (!doc.is_object() || !doc.contains("levels") || !doc.contains("arrows")) {
            throw DiagramError("schema: top level must be an object with 'levels' and 'arrows'");
        }
        auto levels = doc.at("levels").get<std::vector<std::vector<std::string>>>();
        if (levels.empty()) {
            throw DiagramError("schema: 'levels' is empty");
        }
        std::vector<std::vector<Arrow>> gaps(levels.size() - 1);
        for (const auto& a : doc.at("arrows")) {
            auto gap = a.at("gap").get<std::size_t>();
            if (gap < 1 || gap >= levels.size()) {
                throw DiagramError("level mismatch: arrow gap " + std::to_string(gap) + " outside 1.." +
                                   std::to_string(levels.size() - 1));
            }
            Arrow arrow;
            arrow.source = vertex_index(levels[gap - 1], a.at("from").get<std::string>(), gap - 1);
            arrow.range = vertex_index(levels[gap], a.at("to").get<std::string>(), gap);
            arrow.potential = potential_from_json(a.at("potential"));
            arrow.count = count_from_json(a);
            gaps[gap - 1].push_back(std::move(arrow));
        }
        std::optional<PeriodicTail> tail;
        if (doc.contains("repeat") && !doc.at("repeat").is_null()) {
            const auto& r = doc.at("repeat");
            PeriodicTail t;
            t.from_level = r.at("from_level").get<std::size_t>();
            t.vertices = r.at("vertices").get<std::vector<std::string>>();
            std::size_t level = t.from_level + 1;
            for (const auto& a : r.at("arrows")) {
                Arrow arrow;
                arrow.source = vertex_index(t.vertices, a.at("from").get<std::string>(), t.from_level);
                arrow.range = vertex_index(t.vertices, a.at("to").get<std::string>(), level);
                arrow.potential = potential_from_json(a.at("potential"));
                arrow.count = count_from_json(a);
                t.arrows.push_back(std::move(arrow));
                t.steps.push_back(a.contains("step") ? potential_from_json(a.at("step")) : Potential{});
            }
            tail = std::move(t);
        }
        return Diagram(std::move(levels), std::move(gaps), std::move(tail));
    } catch (const json::exception& e) {
        throw DiagramError(std::string("schema: ") + e.what());
    }
}

Diagram load_spec(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw DiagramError(std::string("schema: ") + e.what());
    }
    return load_spec(doc);
}

Diagram load_spec_file(const std::string& path) { return load_spec(read_file(path)); }

json to_json(const Diagram& d) {
    json doc;
    doc["levels"] = d.explicit_levels();
    json arrows = json::array();
    const auto& levels = d.explicit_levels();
    for (std::size_t g = 1; g <= d.explicit_gaps().size(); ++g) {
        for (const auto& a : d.explicit_gaps()[g - 1]) {
            arrows.push_back({{"gap", g},
                              {"from", levels[g - 1][a.source]},
                              {"to", levels[g][a.range]},
                              {"potential", potential_to_json(a.potential)},
                              {"count", count_to_json(a.count)}});
        }
    }
    doc["arrows"] = std::move(arrows);
    if (d.tail()) {
        const auto& t = *d.tail();
        json r;
        r["from_level"] = t.from_level;
        r["vertices"] = t.vertices;
        json ta = json::array();
        for (std::size_t i = 0; i < t.arrows.size(); ++i) {
            const auto& a = t.arrows[i];
            json entry = {{"from", t.vertices[a.source]},
                          {"to", t.vertices[a.range]},
                          {"potential", potential_to_json(a.potential)},
                          {"count", count_to_json(a.count)}};
            if (!t.steps[i].is_zero()) {
                entry["step"] = potential_to_json(t.steps[i]);
            }
            ta.push_back(std::move(entry));
        }
        r["arrows"] = std::move(ta);
        doc["repeat"] = std::move(r);
    }
    return doc;
}

std::string serialize(const Diagram& d) { return to_json(d).dump(2) + "\n"; }

std::string to_dot(const Diagram& d, std::size_t depth, const ArrowHighlight& highlight) {
    d.require_level(depth);
    std::ostringstream out;
    out << "digraph bratteli {\n  rankdir=TB;\n  node [shape=circle, fontsize=10];\n";
    for (std::size_t j = 0; j <= depth; ++j) {
        out << "  { rank=same;";
        const auto& names = d.level(j);
        for (std::size_t v = 0; v < names.size(); ++v) {
            out << " n" << j << "_" << v << " [label=\"" << names[v] << "\"];";
        }
        out << " }\n";
    }
    for (std::size_t g = 1; g <= depth; ++g) {
        auto arrows = d.arrows(g);
        for (std::size_t c = 0; c < arrows.size(); ++c) {
            const auto& a = arrows[c];
            out << "  n" << g - 1 << "_" << a.source << " -> n" << g << "_" << a.range << " [label=\""
                << format_double(a.potential.value);
            if (a.count != 1) {
                out << " x" << a.count.get_str();
            }
            out << "\"";
            if (g - 1 < highlight.size() && c < highlight[g - 1].size() && highlight[g - 1][c]) {
                out << ", color=red, penwidth=2";
            }
            out << "];\n";
        }
    }
    out << "}\n";
    return out.str();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write '" + path + "'");
    }
    out << content;
}

}  // namespace bratteli
