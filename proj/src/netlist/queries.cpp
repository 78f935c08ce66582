#include "rowlight/error.hpp"
#include "rowlight/netlist.hpp"

namespace rowlight::netlist {

namespace {

const Component& require_component(const Netlist& netlist, std::string_view id) {
    const Component* c = netlist.find_component(id);
    if (c == nullptr) {
        fail(ErrorCode::UnknownComponent, "no component '" + std::string(id) + "'");
    }
    return *c;
}

}  // namespace

std::set<RowId> rows_for_component(const Netlist& netlist, std::string_view component_id) {
    require_component(netlist, component_id);
    std::set<RowId> rows;
    for (const auto& a : netlist.assignments) {
        if (a.pin.component_id == component_id) {
            rows.insert(RowId(a.row));
        }
    }
    return rows;
}

std::vector<ComponentContextEntry> extract_component_context(const Netlist& netlist,
                                                             std::span<const std::string> ids) {
    for (const auto& id : ids) {
        require_component(netlist, id);
    }
    std::vector<ComponentContextEntry> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
        const Component& c = require_component(netlist, id);
        ComponentContextEntry e{c.id, c.label, c.kind, c.value, {}, {}};
        for (const auto& a : netlist.assignments) {
            if (a.pin.component_id == id) {
                e.pin_rows.emplace(a.pin.pin_name, a.row);
            }
        }
        // Nets are sorted by id, so a pin that appears in several nets maps
        // to the lowest id.
        for (const auto& n : netlist.nets) {
            for (const auto& m : n.members) {
                if (m.component_id == id) {
                    e.pin_nets.emplace(m.pin_name, n.id);
                }
            }
        }
        out.push_back(std::move(e));
    }
    return out;
}

void to_json(nlohmann::json& j, const ComponentContextEntry& entry) {
    j = nlohmann::json{{"id", entry.id}, {"label", entry.label}, {"kind", entry.kind}};
    if (entry.value) {
        j["value"] = *entry.value;
    }
    j["pin_rows"] = entry.pin_rows;
    j["pin_nets"] = entry.pin_nets;
}

void from_json(const nlohmann::json& j, ComponentContextEntry& entry) {
    entry.id = j.at("id").get<std::string>();
    entry.label = j.at("label").get<std::string>();
    entry.kind = j.at("kind").get<std::string>();
    entry.value = j.contains("value") ? std::optional(j.at("value").get<std::string>())
                                      : std::nullopt;
    entry.pin_rows = j.at("pin_rows").get<std::map<std::string, int>>();
    entry.pin_nets = j.at("pin_nets").get<std::map<std::string, std::string>>();
}

}  // namespace rowlight::netlist
