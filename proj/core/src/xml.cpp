#include "ptpipe/xml.hpp"

#include <expat.h>

#include <cstring>

#include "ptpipe/errors.hpp"

namespace ptpipe::xml {

const std::string* Node::attr(const std::string& key) const {
    auto it = attrs.find(key);
    return it == attrs.end() ? nullptr : &it->second;
}

std::string Node::attr_or(const std::string& key, const std::string& fallback) const {
    const std::string* v = attr(key);
    return v ? *v : fallback;
}

const Node* Node::first_child(const std::string& child_name) const {
    for (const auto& c : children)
        if (c->name == child_name)
            return c.get();
    return nullptr;
}

std::vector<const Node*> Node::children_named(const std::string& child_name) const {
    std::vector<const Node*> out;
    for (const auto& c : children)
        if (c->name == child_name)
            out.push_back(c.get());
    return out;
}

namespace {

struct BuildState {
    std::unique_ptr<Node> root;
    std::vector<Node*> stack;
};

void XMLCALL on_start(void* user, const XML_Char* name, const XML_Char** atts) {
    auto* st = static_cast<BuildState*>(user);
    auto node = std::make_unique<Node>();
    node->name = name;
    for (int i = 0; atts[i]; i += 2)
        node->attrs.emplace(atts[i], atts[i + 1]);

    Node* raw = node.get();
    if (st->stack.empty()) {
        st->root = std::move(node);
    } else {
        st->stack.back()->children.push_back(std::move(node));
    }
    st->stack.push_back(raw);
}

void XMLCALL on_end(void* user, const XML_Char*) {
    auto* st = static_cast<BuildState*>(user);
    st->stack.pop_back();
}

void XMLCALL on_chardata(void* user, const XML_Char* s, int len) {
    auto* st = static_cast<BuildState*>(user);
    if (!st->stack.empty())
        st->stack.back()->text.append(s, static_cast<size_t>(len));
}

} // namespace

std::unique_ptr<Node> parse_document(std::string_view bytes) {
    XML_Parser parser = XML_ParserCreate(nullptr);
    if (!parser)
        throw MalformedXml("could not allocate XML parser");

    BuildState state;
    XML_SetUserData(parser, &state);
    XML_SetElementHandler(parser, on_start, on_end);
    XML_SetCharacterDataHandler(parser, on_chardata);

    XML_Status status = XML_Parse(parser, bytes.data(), static_cast<int>(bytes.size()), 1);
    if (status != XML_STATUS_OK) {
        std::string msg = XML_ErrorString(XML_GetErrorCode(parser));
        auto line = XML_GetCurrentLineNumber(parser);
        XML_ParserFree(parser);
        throw MalformedXml("not well-formed XML: " + msg + " at line " + std::to_string(line));
    }
    XML_ParserFree(parser);

    if (!state.root)
        throw MalformedXml("not well-formed XML: empty document");
    return std::move(state.root);
}

} // namespace ptpipe::xml
