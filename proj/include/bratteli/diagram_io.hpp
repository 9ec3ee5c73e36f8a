#pragma once

#include "bratteli/diagram.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace bratteli {

// Diagram files:
//   { "levels": [["v0"], ["a", "b"], ...],
//     "arrows": [{"gap": 1, "from": "v0", "to": "a", "potential": 0, "count": 1}, ...],
//     "repeat": {"from_level": L, "vertices": [...],
//                "arrows": [{"from", "to", "potential", "count", "step"}]} }
// Potentials are JSON numbers or "p/q" strings; counts may be strings for
// integers beyond 64 bits.
Diagram load_spec(const std::string& text);
Diagram load_spec(const nlohmann::json& doc);
Diagram load_spec_file(const std::string& path);

nlohmann::json to_json(const Diagram& d);
std::string serialize(const Diagram& d);

nlohmann::json potential_to_json(const Potential& p);
Potential potential_from_json(const nlohmann::json& j);

// Per-gap arrow-class highlight flags (index gap-1); empty means none.
using ArrowHighlight = std::vector<std::vector<bool>>;

// DOT rendering of levels 0..depth. Arrows are labelled with potentials,
// highlighted arrows are drawn bold red.
std::string to_dot(const Diagram& d, std::size_t depth, const ArrowHighlight& highlight = {});

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace bratteli
