#include <benchmark/benchmark.h>

#include <fstream>
#include <random>
#include <sstream>

#include "ptpipe/enricher.hpp"
#include "ptpipe/exploit_index.hpp"
#include "ptpipe/nlp_agent.hpp"
#include "ptpipe/reporter.hpp"
#include "ptpipe/scanner.hpp"

using namespace ptpipe;

namespace {

std::string read_fixture(const std::string& relative) {
    std::ifstream in(std::string(PTPIPE_FIXTURES_DIR) + "/" + relative, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

AssessmentContext bench_assessment() {
    auto hosts = scanner::parse_scan_xml(read_fixture("scans/three_hosts.xml"));
    auto ctx = make_assessment("bench", scanner::TargetSpec::parse("10.0.2.0/27", "1-10000"),
                               hosts);
    for (auto& [id, record] : ctx.vulnerabilities) {
        record.source = CveSource::Nvd;
        record.description = "Benchmark description for " + id + ". Filler sentence follows.";
        record.cvss_score = 7.5;
        record.severity = severity_from_score(record.cvss_score);
    }
    return ctx;
}

exploiter::ExploitIndex synthetic_index(size_t rows) {
    std::ostringstream csv;
    csv << "id,file,description,date,author,type,platform,verified,codes\n";
    std::mt19937 rng(42);
    for (size_t i = 1; i <= rows; ++i) {
        csv << i << ",exploits/gen/" << i << ".py,Generated exploit " << i << ",20"
            << 10 + rng() % 14 << "-01-01,gen,remote,linux," << (rng() % 2) << ",CVE-20"
            << 10 + rng() % 14 << "-" << 1000 + rng() % 9000 << "\n";
    }
    return exploiter::load_index(csv.str());
}

} // namespace

static void BM_ParseScanXml(benchmark::State& state) {
    std::string xml = read_fixture("scans/three_hosts.xml");
    for (auto _ : state)
        benchmark::DoNotOptimize(scanner::parse_scan_xml(xml));
}
BENCHMARK(BM_ParseScanXml);

static void BM_SeverityFromScore(benchmark::State& state) {
    double score = 0.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(severity_from_score(score));
        score += 0.1;
        if (score > 10.0)
            score = 0.0;
    }
}
BENCHMARK(BM_SeverityFromScore);

static void BM_IndexSearch(benchmark::State& state) {
    auto index = synthetic_index(static_cast<size_t>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(exploiter::search(index, "CVE-2013-4242"));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_IndexSearch)->Range(1000, 64000)->Complexity();

static void BM_DetectLanguage(benchmark::State& state) {
    std::string source = read_fixture("exploit_mirror/exploits/windows/remote/42030.rb");
    for (auto _ : state)
        benchmark::DoNotOptimize(exploiter::detect_language(source, ".rb"));
}
BENCHMARK(BM_DetectLanguage);

static void BM_ExtractCompileSpec(benchmark::State& state) {
    std::string source = read_fixture("exploit_mirror/exploits/linux/webapps/42745.c");
    for (auto _ : state)
        benchmark::DoNotOptimize(exploiter::extract_compile_spec(source, "42745_42745.c"));
}
BENCHMARK(BM_ExtractCompileSpec);

static void BM_CompactContext(benchmark::State& state) {
    auto ctx = bench_assessment();
    for (auto _ : state)
        benchmark::DoNotOptimize(nlp::compact_context(ctx, nlp::kSummaryDigestBudget));
}
BENCHMARK(BM_CompactContext);

static void BM_RenderReport(benchmark::State& state) {
    auto ctx = bench_assessment();
    auto model = reporter::build_report_model(ctx, "Benchmark summary.", {});
    std::string tmpl = reporter::default_report_template();
    for (auto _ : state)
        benchmark::DoNotOptimize(reporter::render_report(model, tmpl));
}
BENCHMARK(BM_RenderReport);

static void BM_CanonicalJsonRoundTrip(benchmark::State& state) {
    auto ctx = bench_assessment();
    for (auto _ : state) {
        auto restored = assessment_from_json(to_canonical_json(ctx));
        benchmark::DoNotOptimize(restored);
    }
}
BENCHMARK(BM_CanonicalJsonRoundTrip);

BENCHMARK_MAIN();
