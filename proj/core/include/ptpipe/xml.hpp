#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace ptpipe::xml {

/// Minimal element tree for walking scanner output. Attribute lookup and
/// child iteration only; no namespaces, no mutation.
struct Node {
    std::string name;
    std::map<std::string, std::string> attrs;
    std::string text; // character data directly under this element
    std::vector<std::unique_ptr<Node>> children;

    const std::string* attr(const std::string& key) const;
    std::string attr_or(const std::string& key, const std::string& fallback) const;
    const Node* first_child(const std::string& child_name) const;
    std::vector<const Node*> children_named(const std::string& child_name) const;
};

/// Parses a complete document. Throws MalformedXml when the input is not
/// well-formed.
std::unique_ptr<Node> parse_document(std::string_view bytes);

} // namespace ptpipe::xml
