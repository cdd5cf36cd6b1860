#include <doctest.h>

#include "ptpipe/errors.hpp"
#include "ptpipe/xml.hpp"

using namespace ptpipe;

TEST_CASE("xml: attributes, nesting and text") {
    auto doc = xml::parse_document(
        R"(<root a="1"><child b="x">hello</child><child b="y"/></root>)");
    CHECK(doc->name == "root");
    CHECK(doc->attr_or("a", "") == "1");
    auto children = doc->children_named("child");
    REQUIRE(children.size() == 2);
    CHECK(children[0]->text == "hello");
    CHECK(children[1]->attr_or("b", "") == "y");
    CHECK(doc->first_child("missing") == nullptr);
}

TEST_CASE("xml: entities decode") {
    auto doc = xml::parse_document(R"(<x v="a&amp;b">1 &lt; 2</x>)");
    CHECK(doc->attr_or("v", "") == "a&b");
    CHECK(doc->text == "1 < 2");
}

TEST_CASE("xml: malformed input throws MalformedXml") {
    CHECK_THROWS_AS(xml::parse_document("<root><unclosed></root>"), MalformedXml);
    CHECK_THROWS_AS(xml::parse_document("not xml at all"), MalformedXml);
    CHECK_THROWS_AS(xml::parse_document(""), MalformedXml);
}
