#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <sstream>

#include "rowlight/error.hpp"
#include "rowlight/netlist.hpp"

namespace rowlight::netlist {

namespace {

bool is_reserved_word(std::string_view s) {
    static constexpr std::array<std::string_view, 10> kWords{
        "y", "n", "yes", "no", "on", "off", "true", "false", "null", "nan"};
    std::string lower(s);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return std::find(kWords.begin(), kWords.end(), lower) != kWords.end();
}

// Plain scalars are allowed only when every YAML reader types them as a string
// in both block and flow context.
bool plain_safe(std::string_view s) {
    if (s.empty() || (!std::isalpha(static_cast<unsigned char>(s.front())) && s.front() != '_')) {
        return false;
    }
    if (s.back() == ' ' || is_reserved_word(s)) {
        return false;
    }
    for (unsigned char c : s) {
        if (!std::isalnum(c) && c != '_' && c != '-' && c != '.' && c != '/' && c != '(' &&
            c != ')' && c != '+' && c != ' ') {
            return false;
        }
    }
    return true;
}

std::string scalar(std::string_view s) {
    if (plain_safe(s)) {
        return std::string(s);
    }
    std::string out = "\"";
    for (unsigned char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (c < 0x20 || c == 0x7f) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\x%02x", c);
                    out += buf;
                } else {
                    out.push_back(static_cast<char>(c));
                }
        }
    }
    out += "\"";
    return out;
}

std::string pin_ref(const PinRef& p) {
    return "{component: " + scalar(p.component_id) + ", pin: " + scalar(p.pin_name) + "}";
}

[[noreturn]] void invalid(const std::string& what) { fail(ErrorCode::YamlInvalid, what); }

YAML::Node require_seq(const YAML::Node& node, const char* key) {
    if (!node.IsSequence()) {
        invalid(std::string("'") + key + "' must be a sequence");
    }
    return node;
}

std::string str_field(const YAML::Node& map, const char* key) {
    YAML::Node v = map[key];
    if (!v || !v.IsScalar()) {
        invalid(std::string("missing scalar '") + key + "'");
    }
    return v.Scalar();
}

PinRef read_pin_ref(const YAML::Node& node) {
    if (!node.IsMap()) {
        invalid("pin reference must be a mapping");
    }
    return {str_field(node, "component"), str_field(node, "pin")};
}

}  // namespace

std::string emit_yaml(const Netlist& netlist) {
    std::ostringstream out;

    if (netlist.components.empty()) {
        out << "components: []\n";
    } else {
        out << "components:\n";
        for (const auto& c : netlist.components) {
            out << "  - id: " << scalar(c.id) << "\n";
            out << "    label: " << scalar(c.label) << "\n";
            out << "    kind: " << scalar(c.kind) << "\n";
            if (c.value) {
                out << "    value: " << scalar(*c.value) << "\n";
            }
            out << "    pins: [";
            for (std::size_t i = 0; i < c.pins.size(); ++i) {
                out << (i ? ", " : "") << scalar(c.pins[i]);
            }
            out << "]\n";
        }
    }

    if (netlist.nets.empty()) {
        out << "nets: []\n";
    } else {
        out << "nets:\n";
        for (const auto& n : netlist.nets) {
            out << "  - id: " << scalar(n.id) << "\n";
            out << "    members:\n";
            for (const auto& m : n.members) {
                out << "      - " << pin_ref(m) << "\n";
            }
            out << "    rows: [";
            bool first = true;
            for (const auto& r : n.rows) {
                out << (first ? "" : ", ") << r.value();
                first = false;
            }
            out << "]\n";
        }
    }

    if (netlist.assignments.empty()) {
        out << "assignments: []\n";
    } else {
        out << "assignments:\n";
        for (const auto& a : netlist.assignments) {
            out << "  - {component: " << scalar(a.pin.component_id) << ", pin: "
                << scalar(a.pin.pin_name) << ", row: " << a.row << "}\n";
        }
    }
    return out.str();
}

Netlist parse_yaml(std::string_view yaml) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(yaml));
    } catch (const YAML::Exception& e) {
        invalid(e.what());
    }
    if (!root.IsMap()) {
        invalid("top level must be a mapping");
    }

    Netlist out;
    try {
        for (const auto& node : require_seq(root["components"], "components")) {
            Component c;
            c.id = str_field(node, "id");
            c.label = str_field(node, "label");
            c.kind = str_field(node, "kind");
            if (node["value"]) {
                c.value = str_field(node, "value");
            }
            for (const auto& p : require_seq(node["pins"], "pins")) {
                c.pins.push_back(p.as<std::string>());
            }
            out.components.push_back(std::move(c));
        }
        for (const auto& node : require_seq(root["nets"], "nets")) {
            Net n;
            n.id = str_field(node, "id");
            for (const auto& m : require_seq(node["members"], "members")) {
                n.members.push_back(read_pin_ref(m));
            }
            out.nets.push_back(std::move(n));
        }
        for (const auto& node : require_seq(root["assignments"], "assignments")) {
            RowAssignment a;
            a.pin = read_pin_ref(node);
            a.row = node["row"].as<int>();
            out.assignments.push_back(std::move(a));
        }
    } catch (const YAML::Exception& e) {
        invalid(e.what());
    }
    // Net rows are derived data; canonicalize recomputes them from assignments.
    return canonicalize(std::move(out));
}

}  // namespace rowlight::netlist
