#include <expat.h>

#include <charconv>
#include <map>
#include <memory>
#include <vector>

#include "rowlight/error.hpp"
#include "rowlight/netlist.hpp"

namespace rowlight::netlist {

namespace {

struct Element {
    std::string name;
    std::map<std::string, std::string> attrs;
    std::vector<Element> children;
    long line = 0;
};

struct TreeBuilder {
    XML_Parser parser = nullptr;
    Element root;
    std::vector<Element*> stack;
    bool has_root = false;

    static void on_start(void* user, const XML_Char* name, const XML_Char** atts) {
        auto* self = static_cast<TreeBuilder*>(user);
        Element el;
        el.name = name;
        el.line = static_cast<long>(XML_GetCurrentLineNumber(self->parser));
        for (int i = 0; atts[i] != nullptr; i += 2) {
            el.attrs.emplace(atts[i], atts[i + 1]);
        }
        if (self->stack.empty()) {
            self->root = std::move(el);
            self->has_root = true;
            self->stack.push_back(&self->root);
        } else {
            auto& kids = self->stack.back()->children;
            kids.push_back(std::move(el));
            self->stack.push_back(&kids.back());
        }
    }

    static void on_end(void* user, const XML_Char*) {
        static_cast<TreeBuilder*>(user)->stack.pop_back();
    }
};

Element parse_tree(std::string_view xml) {
    std::unique_ptr<XML_ParserStruct, decltype(&XML_ParserFree)> parser(XML_ParserCreate("UTF-8"),
                                                                         &XML_ParserFree);
    if (!parser) {
        fail(ErrorCode::MalformedXml, "cannot allocate XML parser");
    }
    TreeBuilder builder;
    builder.parser = parser.get();
    XML_SetUserData(parser.get(), &builder);
    XML_SetElementHandler(parser.get(), &TreeBuilder::on_start, &TreeBuilder::on_end);
    if (XML_Parse(parser.get(), xml.data(), static_cast<int>(xml.size()), XML_TRUE) ==
        XML_STATUS_ERROR) {
        fail(ErrorCode::MalformedXml,
             std::string(XML_ErrorString(XML_GetErrorCode(parser.get()))) + " at line " +
                 std::to_string(XML_GetCurrentLineNumber(parser.get())));
    }
    if (!builder.has_root) {
        fail(ErrorCode::MalformedXml, "no root element");
    }
    return std::move(builder.root);
}

std::string where(const Element& el) {
    return "<" + el.name + "> at line " + std::to_string(el.line);
}

const std::string& required(const Element& el, const std::string& attr) {
    auto it = el.attrs.find(attr);
    if (it == el.attrs.end()) {
        fail(ErrorCode::SchemaViolation, where(el) + " missing attribute '" + attr + "'");
    }
    return it->second;
}

void expect_leaf(const Element& el) {
    if (!el.children.empty()) {
        fail(ErrorCode::SchemaViolation,
             "unexpected element <" + el.children.front().name + "> inside " + where(el));
    }
}

int parse_row(const Element& el) {
    const std::string& text = required(el, "row");
    int row = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), row);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        fail(ErrorCode::SchemaViolation, where(el) + " has non-integer row '" + text + "'");
    }
    return row;
}

}  // namespace

Netlist read_netlist_xml(std::string_view xml) {
    const Element root = parse_tree(xml);
    if (root.name != "netlist") {
        fail(ErrorCode::SchemaViolation, "root element is <" + root.name + ">, expected <netlist>");
    }

    Netlist out;
    for (const auto& el : root.children) {
        if (el.name == "component") {
            Component c;
            c.id = required(el, "id");
            c.label = required(el, "label");
            c.kind = required(el, "kind");
            if (auto it = el.attrs.find("value"); it != el.attrs.end()) {
                c.value = it->second;
            }
            for (const auto& pin : el.children) {
                if (pin.name != "pin") {
                    fail(ErrorCode::SchemaViolation,
                         "unexpected element " + where(pin) + " in component " + c.id);
                }
                expect_leaf(pin);
                c.pins.push_back(required(pin, "name"));
            }
            out.components.push_back(std::move(c));
        } else if (el.name == "net") {
            Net n;
            n.id = required(el, "id");
            for (const auto& m : el.children) {
                if (m.name != "member") {
                    fail(ErrorCode::SchemaViolation,
                         "unexpected element " + where(m) + " in net " + n.id);
                }
                expect_leaf(m);
                n.members.push_back({required(m, "component"), required(m, "pin")});
            }
            out.nets.push_back(std::move(n));
        } else if (el.name == "assignment") {
            expect_leaf(el);
            out.assignments.push_back(
                {{required(el, "component"), required(el, "pin")}, parse_row(el)});
        } else {
            fail(ErrorCode::SchemaViolation, "unknown element " + where(el));
        }
    }

    // Reference checks happen here as well as in canonicalize() so that a
    // dangling member is reported even when its net would later be pruned.
    std::map<std::string, const Component*> index;
    for (const auto& c : out.components) {
        index.emplace(c.id, &c);
    }
    auto check = [&](const PinRef& pin, const std::string& ctx) {
        auto it = index.find(pin.component_id);
        if (it == index.end() || !it->second->has_pin(pin.pin_name)) {
            fail(ErrorCode::DanglingReference,
                 ctx + " references " + pin.component_id + "." + pin.pin_name);
        }
    };
    for (const auto& n : out.nets) {
        for (const auto& m : n.members) {
            check(m, "net " + n.id);
        }
    }
    for (const auto& a : out.assignments) {
        check(a.pin, "assignment");
    }
    return out;
}

}  // namespace rowlight::netlist
