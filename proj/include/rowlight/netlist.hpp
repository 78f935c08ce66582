#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace rowlight::netlist {

inline constexpr int kMinRow = 1;
inline constexpr int kMaxRow = 50;

/// A breadboard row index. Construction outside 1..50 throws RowOutOfRange.
class RowId {
public:
    explicit RowId(int value);

    int value() const noexcept { return value_; }
    auto operator<=>(const RowId&) const = default;

private:
    int value_;
};

bool row_in_range(int row) noexcept;

struct PinRef {
    std::string component_id;
    std::string pin_name;

    auto operator<=>(const PinRef&) const = default;
};

struct Component {
    std::string id;
    std::string label;
    std::string kind;
    std::optional<std::string> value;
    std::vector<std::string> pins;  // document order

    bool has_pin(std::string_view name) const;
    bool operator==(const Component&) const = default;
};

struct Net {
    std::string id;
    std::vector<PinRef> members;  // sorted, unique once canonical
    std::set<RowId> rows;         // derived from the members' assignments

    bool operator==(const Net&) const = default;
};

// `row` is a plain integer so that raw, unvalidated input can be represented;
// canonicalize() rejects anything outside 1..50.
struct RowAssignment {
    PinRef pin;
    int row = 0;

    bool operator==(const RowAssignment&) const = default;
};

/// Components, nets and row assignments of one circuit. After canonicalize()
/// the lists are deduplicated, pruned and sorted, so equal circuits compare
/// equal and emit byte-identical YAML.
struct Netlist {
    std::vector<Component> components;
    std::vector<Net> nets;
    std::vector<RowAssignment> assignments;
    std::int64_t revision = 0;

    const Component* find_component(std::string_view id) const;
    bool operator==(const Netlist&) const = default;
};

// Reads the netlist XML into an uncanonicalized model. This is the seam for
// other exporters: anything that produces a raw Netlist can feed canonicalize().
// Throws MalformedXml, SchemaViolation or DanglingReference.
Netlist read_netlist_xml(std::string_view xml);

// read_netlist_xml followed by canonicalize.
Netlist parse_netlist_xml(std::string_view xml);

// Merges duplicates, prunes nets with fewer than two members, validates rows
// and references, and applies the deterministic ordering. Idempotent.
Netlist canonicalize(Netlist raw);

std::string emit_yaml(const Netlist& netlist);

// Inverse of emit_yaml. Throws YamlInvalid on structural problems.
Netlist parse_yaml(std::string_view yaml);

// Union of the rows assigned to the component's pins. Throws UnknownComponent.
std::set<RowId> rows_for_component(const Netlist& netlist, std::string_view component_id);

struct ComponentContextEntry {
    std::string id;
    std::string label;
    std::string kind;
    std::optional<std::string> value;
    std::map<std::string, int> pin_rows;
    std::map<std::string, std::string> pin_nets;

    bool operator==(const ComponentContextEntry&) const = default;
};

// One entry per requested id, in request order (duplicates preserved).
// Throws UnknownComponent naming the first unknown id.
std::vector<ComponentContextEntry> extract_component_context(const Netlist& netlist,
                                                             std::span<const std::string> ids);

void to_json(nlohmann::json& j, const ComponentContextEntry& entry);
void from_json(const nlohmann::json& j, ComponentContextEntry& entry);

}  // namespace rowlight::netlist
