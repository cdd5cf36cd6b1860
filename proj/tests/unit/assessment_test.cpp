#include <doctest.h>

#include <nlohmann/json.hpp>

#include <random>

#include "ptpipe/assessment.hpp"
#include "ptpipe/errors.hpp"
#include "test_support.hpp"

using namespace ptpipe;

TEST_CASE("make_assessment seeds unresolved records for every referenced CVE") {
    scanner::PortService port;
    port.port = 80;
    port.cve_ids = {"CVE-2020-0001", "CVE-2020-0002"};
    scanner::HostRecon host;
    host.address = "10.0.0.1";
    host.ports = {port};

    auto ctx = make_assessment("p", scanner::TargetSpec::parse("10.0.0.1", "80"), {host});
    CHECK(ctx.vulnerabilities.size() == 2);
    CHECK(ctx.vulnerabilities.at("CVE-2020-0001").source == CveSource::Unresolved);
    CHECK(ctx.stage_status.size() == 5);
    CHECK_NOTHROW(check_invariants(ctx));
}

TEST_CASE("round-trip: load(save(ctx)) equals ctx for a 3-host context") {
    auto hosts = scanner::parse_scan_xml(testsupport::read_fixture("scans/three_hosts.xml"));
    auto ctx = make_assessment("rt3", scanner::TargetSpec::parse("10.0.2.0/27", "1-10000"), hosts);
    auto restored = assessment_from_json(to_canonical_json(ctx));
    CHECK(restored == ctx);
}

TEST_CASE("round-trip holds over seeded random contexts") {
    std::mt19937 rng(4242);
    for (int i = 0; i < 50; ++i) {
        auto ctx = testsupport::random_assessment(rng);
        auto restored = assessment_from_json(to_canonical_json(ctx));
        CHECK(restored == ctx);
    }
}

TEST_CASE("canonical form: sorted keys, newline-terminated, byte-stable") {
    auto ctx = testsupport::small_assessment();
    std::string a = to_canonical_json(ctx);
    std::string b = to_canonical_json(ctx);
    CHECK(a == b);
    CHECK(a.back() == '\n');

    auto doc = nlohmann::json::parse(a);
    std::vector<std::string> keys;
    for (auto it = doc.begin(); it != doc.end(); ++it)
        keys.push_back(it.key());
    CHECK(std::is_sorted(keys.begin(), keys.end()));
    CHECK(doc.at("schema_version").get<int>() == AssessmentContext::kSchemaVersion);
}

TEST_CASE("unsupported schema_version raises SchemaMismatch") {
    auto ctx = testsupport::small_assessment();
    auto doc = nlohmann::json::parse(to_canonical_json(ctx));
    doc["schema_version"] = 99;
    CHECK_THROWS_AS(assessment_from_json(doc.dump()), SchemaMismatch);
}

TEST_CASE("hand-edited artifact violating the vulnerabilities invariant is rejected") {
    auto ctx = testsupport::small_assessment();
    auto doc = nlohmann::json::parse(to_canonical_json(ctx));
    doc["vulnerabilities"].erase("CVE-2014-3120"); // still referenced by a host port
    try {
        assessment_from_json(doc.dump());
        FAIL("expected CorruptArtifact");
    } catch (const CorruptArtifact& e) {
        std::string what = e.what();
        CHECK(what.find("CVE-2014-3120") != std::string::npos);
        CHECK(what.find("vulnerabilities map") != std::string::npos);
    }
}

TEST_CASE("exploits key outside the vulnerabilities map is rejected") {
    auto ctx = testsupport::small_assessment();
    ctx.exploits["CVE-1999-1234"] = {};
    CHECK_THROWS_AS(check_invariants(ctx), CorruptArtifact);
}

TEST_CASE("parse failures surface as CorruptArtifact") {
    CHECK_THROWS_AS(assessment_from_json("not json"), CorruptArtifact);
    CHECK_THROWS_AS(assessment_from_json("{}"), CorruptArtifact);
    CHECK_THROWS_AS(assessment_from_json(R"({"schema_version":1})"), CorruptArtifact);
}

TEST_CASE("severity inconsistent with score is rejected") {
    auto ctx = testsupport::small_assessment();
    ctx.vulnerabilities.at("CVE-2017-0144").severity = Severity::Low; // score says high
    CHECK_THROWS_AS(check_invariants(ctx), CorruptArtifact);
}

TEST_CASE("distinct_cve_ids is the sorted union over hosts") {
    auto ctx = testsupport::small_assessment();
    auto ids = ctx.distinct_cve_ids();
    CHECK(ids == std::vector<std::string>{"CVE-2011-2523", "CVE-2014-3120", "CVE-2017-0144"});
}
