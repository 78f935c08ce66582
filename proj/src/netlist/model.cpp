#include "rowlight/netlist.hpp"

#include <algorithm>
#include <map>

#include "rowlight/error.hpp"

namespace rowlight::netlist {

RowId::RowId(int value) : value_(value) {
    if (!row_in_range(value)) {
        fail(ErrorCode::RowOutOfRange, "row " + std::to_string(value) + " outside " +
                                           std::to_string(kMinRow) + ".." + std::to_string(kMaxRow));
    }
}

bool row_in_range(int row) noexcept { return row >= kMinRow && row <= kMaxRow; }

bool Component::has_pin(std::string_view name) const {
    return std::find(pins.begin(), pins.end(), name) != pins.end();
}

const Component* Netlist::find_component(std::string_view id) const {
    for (const auto& c : components) {
        if (c.id == id) {
            return &c;
        }
    }
    return nullptr;
}

namespace {

std::string describe(const PinRef& pin) { return pin.component_id + "." + pin.pin_name; }

std::vector<Component> merge_components(std::vector<Component> raw) {
    std::map<std::string, Component> by_id;
    for (auto& c : raw) {
        if (c.id.empty()) {
            fail(ErrorCode::SchemaViolation, "component with empty id");
        }
        std::vector<std::string> pins;
        for (auto& p : c.pins) {
            if (p.empty()) {
                fail(ErrorCode::SchemaViolation, "component " + c.id + " has a pin with empty name");
            }
            if (std::find(pins.begin(), pins.end(), p) == pins.end()) {
                pins.push_back(std::move(p));
            }
        }
        if (pins.empty()) {
            fail(ErrorCode::SchemaViolation, "component " + c.id + " has no pins");
        }
        c.pins = std::move(pins);

        auto [it, inserted] = by_id.try_emplace(c.id, c);
        if (!inserted && !(it->second == c)) {
            fail(ErrorCode::SchemaViolation, "conflicting definitions for component " + c.id);
        }
    }
    std::vector<Component> out;
    out.reserve(by_id.size());
    for (auto& [_, c] : by_id) {
        out.push_back(std::move(c));
    }
    return out;
}

void require_pin(const std::map<std::string, const Component*>& index, const PinRef& pin,
                 std::string_view where) {
    auto it = index.find(pin.component_id);
    if (it == index.end()) {
        fail(ErrorCode::DanglingReference,
             std::string(where) + " references unknown component " + pin.component_id);
    }
    if (!it->second->has_pin(pin.pin_name)) {
        fail(ErrorCode::DanglingReference,
             std::string(where) + " references unknown pin " + describe(pin));
    }
}

}  // namespace

Netlist canonicalize(Netlist raw) {
    Netlist out;
    out.revision = raw.revision;
    out.components = merge_components(std::move(raw.components));

    std::map<std::string, const Component*> index;
    for (const auto& c : out.components) {
        index.emplace(c.id, &c);
    }

    std::map<PinRef, int> row_of;
    for (const auto& a : raw.assignments) {
        if (!row_in_range(a.row)) {
            fail(ErrorCode::RowOutOfRange, "assignment of " + describe(a.pin) + " to row " +
                                               std::to_string(a.row));
        }
        require_pin(index, a.pin, "assignment");
        auto [it, inserted] = row_of.try_emplace(a.pin, a.row);
        if (!inserted && it->second != a.row) {
            fail(ErrorCode::SchemaViolation, "pin " + describe(a.pin) + " assigned to rows " +
                                                 std::to_string(it->second) + " and " +
                                                 std::to_string(a.row));
        }
    }
    for (const auto& [pin, row] : row_of) {
        out.assignments.push_back({pin, row});
    }

    std::map<std::string, std::set<PinRef>> members_of;
    for (auto& n : raw.nets) {
        if (n.id.empty()) {
            fail(ErrorCode::SchemaViolation, "net with empty id");
        }
        auto& members = members_of[n.id];
        for (auto& m : n.members) {
            require_pin(index, m, "net " + n.id);
            members.insert(std::move(m));
        }
    }
    for (auto& [id, members] : members_of) {
        if (members.size() < 2) {
            continue;
        }
        Net net;
        net.id = id;
        net.members.assign(members.begin(), members.end());
        for (const auto& m : net.members) {
            if (auto it = row_of.find(m); it != row_of.end()) {
                net.rows.insert(RowId(it->second));
            }
        }
        out.nets.push_back(std::move(net));
    }
    return out;
}

Netlist parse_netlist_xml(std::string_view xml) { return canonicalize(read_netlist_xml(xml)); }

}  // namespace rowlight::netlist
