#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

#include "ptpipe/errors.hpp"
#include "ptpipe/exploiter.hpp"
#include "test_support.hpp"

using namespace ptpipe;
using namespace ptpipe::exploiter;
using testsupport::TempDir;

namespace {

IndexEntry entry_42030() {
    IndexEntry e;
    e.exploit_id = 42030;
    e.file_path = "exploits/windows/remote/42030.rb";
    e.title = "EternalBlue SMB Remote Code Execution (MS17-010) (Metasploit)";
    e.date = "2017-05-17";
    e.author = "Sean Dillon";
    e.platform = "windows";
    e.type = "remote";
    e.verified = true;
    e.codes = {"CVE-2017-0144"};
    return e;
}

IndexEntry entry_42745() {
    IndexEntry e;
    e.exploit_id = 42745;
    e.file_path = "exploits/linux/webapps/42745.c";
    e.title = "Apache httpd OPTIONS Memory Leak";
    e.date = "2017-09-18";
    e.author = "Hanno Boeck";
    e.platform = "linux";
    e.type = "webapps";
    e.verified = true;
    e.codes = {"CVE-2017-9798"};
    return e;
}

} // namespace

TEST_CASE("fetch_exploit: local mirror copy is byte-equal and lands at the fixed layout") {
    TempDir project;
    LocalMirrorFetcher fetcher(testsupport::fixtures_dir() / "exploit_mirror");

    ExploitRef ref = fetch_exploit(entry_42030(), project.path(), fetcher);
    REQUIRE(ref.local_path.has_value());
    CHECK(*ref.local_path == "exploits/42030_42030.rb");

    auto stored = project.path() / *ref.local_path;
    REQUIRE(std::filesystem::exists(stored));
    CHECK(testsupport::read_file(stored) ==
          testsupport::read_fixture("exploit_mirror/exploits/windows/remote/42030.rb"));
    CHECK(ref.language == Language::Metasploit);
    CHECK(!ref.compile_spec.has_value());
}

TEST_CASE("fetch_exploit: C exploit gets a compile spec referencing the stored name") {
    TempDir project;
    LocalMirrorFetcher fetcher(testsupport::fixtures_dir() / "exploit_mirror");

    ExploitRef ref = fetch_exploit(entry_42745(), project.path(), fetcher);
    REQUIRE(ref.local_path.has_value());
    CHECK(ref.language == Language::C);
    REQUIRE(ref.compile_spec.has_value());
    CHECK(ref.compile_spec->command_line ==
          "gcc 42745_42745.c -o optionsbleed -lpthread");
}

TEST_CASE("fetch_exploit: mirror miss degrades to a ref without local_path") {
    TempDir project;
    LocalMirrorFetcher fetcher(testsupport::fixtures_dir() / "exploit_mirror");

    IndexEntry missing = entry_42030();
    missing.exploit_id = 1;
    missing.file_path = "exploits/none/1.py";
    ExploitRef ref = fetch_exploit(missing, project.path(), fetcher);
    CHECK(!ref.local_path.has_value());
    CHECK(ref.language == Language::Python); // extension metadata still filled
}

TEST_CASE("fetch_exploit: refetch is idempotent (same path, same bytes)") {
    TempDir project;
    LocalMirrorFetcher fetcher(testsupport::fixtures_dir() / "exploit_mirror");

    ExploitRef first = fetch_exploit(entry_42030(), project.path(), fetcher);
    auto hash = [](const std::string& s) { return std::hash<std::string>{}(s); };
    size_t first_hash = hash(testsupport::read_file(project.path() / *first.local_path));

    ExploitRef second = fetch_exploit(entry_42030(), project.path(), fetcher);
    CHECK(first.local_path == second.local_path);
    CHECK(hash(testsupport::read_file(project.path() / *second.local_path)) == first_hash);
}

TEST_CASE("run_exploit_stage: failures are isolated per entry") {
    TempDir project;
    auto ctx = testsupport::small_assessment();
    ctx.exploits.clear();

    ExploitIndex index = load_index(
        "id,file,description,date,author,type,platform,verified,codes\n"
        "42030,exploits/windows/remote/42030.rb,EternalBlue (Metasploit),2017-05-17,x,remote,"
        "windows,1,CVE-2017-0144\n"
        "77777,exploits/missing/77777.py,gone from the mirror,2020-01-01,x,remote,linux,0,"
        "CVE-2011-2523\n");
    LocalMirrorFetcher fetcher(testsupport::fixtures_dir() / "exploit_mirror");

    auto outcome = run_exploit_stage(ctx, index, project.path(), fetcher);
    CHECK(outcome.refs_fetched == 1);
    CHECK(outcome.fetch_failures == 1);

    REQUIRE(ctx.exploits.count("CVE-2017-0144"));
    REQUIRE(ctx.exploits.at("CVE-2017-0144").size() == 1);
    CHECK(ctx.exploits.at("CVE-2017-0144")[0].local_path.has_value());

    REQUIRE(ctx.exploits.count("CVE-2011-2523"));
    REQUIRE(ctx.exploits.at("CVE-2011-2523").size() == 1);
    CHECK(!ctx.exploits.at("CVE-2011-2523")[0].local_path.has_value());

    // CVE with no matching entries still gets its (empty) slot
    CHECK(ctx.exploits.count("CVE-2014-3120"));
    CHECK(ctx.exploits.at("CVE-2014-3120").empty());
}

TEST_CASE("console_summary: empty assessment prints the no-hosts notice") {
    AssessmentContext ctx;
    std::string text = console_summary(ctx);
    CHECK(text.find("assessment summary") != std::string::npos);
    CHECK(text.find("(no hosts)") != std::string::npos);
}

TEST_CASE("console_summary: exploit line count matches the fixture") {
    auto ctx = testsupport::small_assessment();
    // 1 host/port/CVE with exactly 2 exploit refs
    auto ref1 = ctx.exploits.at("CVE-2017-0144")[0];
    auto ref2 = ref1;
    ref2.entry.exploit_id = 42315;
    ref2.entry.title = "EternalBlue standalone PoC";
    ref2.entry.verified = false;
    ref2.local_path.reset();
    ctx.exploits["CVE-2017-0144"] = {ref1, ref2};

    std::string text = console_summary(ctx);
    size_t exploit_lines = 0;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line))
        if (line.find("- 42") != std::string::npos)
            ++exploit_lines;
    CHECK(exploit_lines == 2);

    // ordering: hosts ascending by address, CVEs severity-desc per port
    auto pos_4 = text.find("host 10.0.2.4");
    auto pos_5 = text.find("host 10.0.2.5");
    REQUIRE(pos_4 != std::string::npos);
    REQUIRE(pos_5 != std::string::npos);
    CHECK(pos_4 < pos_5);

    CHECK(text.find("[verified]") != std::string::npos);
    CHECK(text.find("(not downloaded)") != std::string::npos);
}

TEST_CASE("console_summary is deterministic") {
    auto ctx = testsupport::small_assessment();
    CHECK(console_summary(ctx) == console_summary(ctx));
}

TEST_CASE("run_compile_command: builds a fixture C file and reports exit 0") {
    TempDir dir;
    auto src = dir.path() / "11_poc.c";
    std::ofstream(src) << "// gcc 11_poc.c -o poc_out\n#include <stdio.h>\nint main(){return 0;}\n";

    std::string transcript;
    int code = run_compile_command(src, &transcript);
    CHECK(code == 0);
    CHECK(std::filesystem::exists(dir.path() / "poc_out"));
    CHECK(transcript.find("gcc 11_poc.c -o poc_out") != std::string::npos);
}

TEST_CASE("run_compile_command: no compile comment reports a miss") {
    TempDir dir;
    auto src = dir.path() / "12_poc.c";
    std::ofstream(src) << "#include <stdio.h>\nint main(){return 0;}\n";
    std::string transcript;
    CHECK(run_compile_command(src, &transcript) == -1);
    CHECK(transcript.find("no compile command") != std::string::npos);
}
