#include "ptpipe/scanner.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <fstream>
#include <set>
#include <sstream>

#include "process.hpp"
#include "ptpipe/cve.hpp"
#include "ptpipe/errors.hpp"
#include "ptpipe/xml.hpp"

namespace ptpipe::scanner {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        out.push_back(item);
    return out;
}

std::string trim(std::string s) {
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

std::optional<int> parse_int(std::string_view s) {
    if (s.empty() || s.size() > 9)
        return std::nullopt;
    int value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size())
        return std::nullopt;
    return value;
}

// epoch timestamps are 10+ digits, parse_int's overflow guard rejects them
std::optional<std::int64_t> parse_epoch(std::string_view s) {
    if (s.empty() || s.size() > 18)
        return std::nullopt;
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size())
        return std::nullopt;
    return value;
}

} // namespace

bool is_ipv4_address(std::string_view s) {
    auto octets = split(std::string(s), '.');
    if (octets.size() != 4)
        return false;
    for (const auto& o : octets) {
        if (o.empty() || o.size() > 3)
            return false;
        auto v = parse_int(o);
        if (!v || *v < 0 || *v > 255)
            return false;
        if (o.size() > 1 && o[0] == '0')
            return false; // no leading zeros, avoids octal ambiguity
    }
    return true;
}

bool is_ipv4_or_cidr(std::string_view s) {
    auto slash = s.find('/');
    if (slash == std::string_view::npos)
        return is_ipv4_address(s);
    auto prefix = parse_int(s.substr(slash + 1));
    return is_ipv4_address(s.substr(0, slash)) && prefix && *prefix >= 0 && *prefix <= 32;
}

bool ipv4_less(std::string_view a, std::string_view b) {
    auto key = [](std::string_view s) {
        std::array<int, 4> octets{};
        size_t idx = 0, start = 0;
        while (idx < 4) {
            auto dot = s.find('.', start);
            auto part = s.substr(start, dot == std::string_view::npos ? std::string_view::npos
                                                                      : dot - start);
            octets[idx++] = parse_int(part).value_or(0);
            if (dot == std::string_view::npos)
                break;
            start = dot + 1;
        }
        return octets;
    };
    return key(a) < key(b);
}

TargetSpec TargetSpec::parse(const std::string& address_spec, const std::string& port_spec) {
    TargetSpec spec;

    for (auto& raw : split(address_spec, ',')) {
        std::string addr = trim(raw);
        if (addr.empty())
            continue;
        if (!is_ipv4_or_cidr(addr))
            throw InvalidTarget("invalid address '" + addr + "': expected IPv4 or IPv4/prefix");
        spec.addresses.push_back(addr);
    }
    if (spec.addresses.empty())
        throw InvalidTarget("no addresses given");

    std::set<std::uint16_t> ports;
    for (auto& raw : split(port_spec, ',')) {
        std::string token = trim(raw);
        if (token.empty())
            continue;
        auto dash = token.find('-');
        int low, high;
        if (dash == std::string::npos) {
            auto v = parse_int(token);
            if (!v)
                throw InvalidTarget("invalid port '" + token + "'");
            low = high = *v;
        } else {
            auto lo = parse_int(token.substr(0, dash));
            auto hi = parse_int(token.substr(dash + 1));
            if (!lo || !hi)
                throw InvalidTarget("invalid port range '" + token + "'");
            low = *lo;
            high = *hi;
        }
        if (low < 1 || high > 65535 || low > high)
            throw InvalidTarget("port range '" + token + "' outside 1..65535 or inverted");
        for (int p = low; p <= high; ++p)
            ports.insert(static_cast<std::uint16_t>(p));
    }
    if (ports.empty())
        throw InvalidTarget("no ports given");
    spec.ports.assign(ports.begin(), ports.end());
    return spec;
}

std::string TargetSpec::compressed_ports() const {
    std::string out;
    size_t i = 0;
    while (i < ports.size()) {
        size_t j = i;
        while (j + 1 < ports.size() && ports[j + 1] == ports[j] + 1)
            ++j;
        if (!out.empty())
            out += ',';
        if (j == i)
            out += std::to_string(ports[i]);
        else if (j == i + 1)
            out += std::to_string(ports[i]) + "," + std::to_string(ports[j]);
        else
            out += std::to_string(ports[i]) + "-" + std::to_string(ports[j]);
        i = j + 1;
    }
    return out;
}

std::string to_string(Protocol p) {
    return p == Protocol::Udp ? "udp" : "tcp";
}

std::string to_string(PortState s) {
    return s == PortState::Filtered ? "filtered" : "open";
}

std::optional<Protocol> protocol_from_string(const std::string& s) {
    if (s == "tcp") return Protocol::Tcp;
    if (s == "udp") return Protocol::Udp;
    return std::nullopt;
}

std::optional<PortState> port_state_from_string(const std::string& s) {
    if (s == "open") return PortState::Open;
    if (s == "filtered") return PortState::Filtered;
    return std::nullopt;
}

ScanCommandPlan build_scan_plan(const TargetSpec& targets) {
    if (targets.addresses.empty() || targets.ports.empty())
        throw InvalidTarget("scan plan needs at least one address and one port");

    ScanCommandPlan plan;
    std::string ports = targets.compressed_ports();

    auto with_targets = [&](std::vector<std::string> args) {
        for (const auto& a : targets.addresses)
            args.push_back(a);
        return args;
    };

    plan.phases.push_back({kPhasePortDiscovery,
                           with_targets({"-Pn", "-n", "--open", "-p", ports, "-oX", "-"})});
    plan.phases.push_back({kPhaseServiceVersion,
                           with_targets({"-Pn", "-n", "-sV", "--open", "-p",
                                         kOpenPortsPlaceholder, "-oX", "-"})});
    plan.phases.push_back({kPhaseVulnScript,
                           with_targets({"-Pn", "-n", "-sV", "--script", "vulners", "--open",
                                         "-p", kOpenPortsPlaceholder, "-oX", "-"})});
    plan.phases.push_back({kPhaseOsDiscovery,
                           with_targets({"-Pn", "-n", "-O", "--osscan-guess", "-p",
                                         kOpenPortsPlaceholder, "-oX", "-"})});
    return plan;
}

std::vector<std::string> substitute_open_ports(const ScanPhase& phase, const std::string& ports) {
    std::vector<std::string> args = phase.args;
    for (auto& a : args)
        if (a == kOpenPortsPlaceholder)
            a = ports;
    return args;
}

namespace {

// vulners attaches one nested table per advisory row; the id element carries
// the identifier. Only CVE-pattern ids survive, everything else (EDB-ID,
// PACKETSTORM, ...) is dropped.
void collect_cve_ids(const xml::Node& node, std::set<std::string>& sink) {
    if (node.name == "elem" && node.attr_or("key", "") == "id") {
        std::string id = normalize_cve_id(node.text);
        if (is_cve_id(id))
            sink.insert(id);
    }
    for (const auto& child : node.children)
        collect_cve_ids(*child, sink);
}

std::optional<PortService> parse_port(const xml::Node& port_node) {
    PortService ps;
    auto proto = protocol_from_string(port_node.attr_or("protocol", "tcp"));
    auto portid = parse_int(port_node.attr_or("portid", ""));
    if (!proto || !portid || *portid < 1 || *portid > 65535)
        return std::nullopt;
    ps.protocol = *proto;
    ps.port = static_cast<std::uint16_t>(*portid);

    const xml::Node* state = port_node.first_child("state");
    std::string state_str = state ? state->attr_or("state", "") : "";
    if (state_str == "open")
        ps.state = PortState::Open;
    else if (state_str == "filtered" || state_str == "open|filtered")
        ps.state = PortState::Filtered;
    else
        return std::nullopt; // closed or unknown ports are not carried forward

    if (const xml::Node* svc = port_node.first_child("service")) {
        ps.service_name = svc->attr_or("name", "");
        ps.product = svc->attr_or("product", "");
        ps.version = svc->attr_or("version", "");
    }

    std::set<std::string> ids;
    for (const xml::Node* script : port_node.children_named("script"))
        collect_cve_ids(*script, ids);
    ps.cve_ids.assign(ids.begin(), ids.end());
    return ps;
}

std::optional<HostRecon> parse_host(const xml::Node& host_node, std::int64_t run_started) {
    const xml::Node* status = host_node.first_child("status");
    if (!status || status->attr_or("state", "") != "up")
        return std::nullopt; // hosts reported down are silently omitted

    HostRecon host;
    for (const xml::Node* addr : host_node.children_named("address")) {
        if (addr->attr_or("addrtype", "") == "ipv4") {
            host.address = addr->attr_or("addr", "");
            break;
        }
    }
    if (host.address.empty() || !is_ipv4_address(host.address))
        return std::nullopt;

    auto end_ts = parse_epoch(host_node.attr_or("endtime", ""));
    auto start_ts = parse_epoch(host_node.attr_or("starttime", ""));
    host.scanned_at = end_ts ? *end_ts : (start_ts ? *start_ts : run_started);

    if (const xml::Node* ports = host_node.first_child("ports")) {
        for (const xml::Node* p : ports->children_named("port")) {
            if (auto ps = parse_port(*p))
                host.ports.push_back(std::move(*ps));
        }
    }
    std::sort(host.ports.begin(), host.ports.end(), [](const PortService& a, const PortService& b) {
        return std::tie(a.port, a.protocol) < std::tie(b.port, b.protocol);
    });

    // keep the top-accuracy OS match only
    if (const xml::Node* os = host_node.first_child("os")) {
        int best_accuracy = -1;
        for (const xml::Node* match : os->children_named("osmatch")) {
            int accuracy = parse_int(match->attr_or("accuracy", "0")).value_or(0);
            if (accuracy > best_accuracy) {
                best_accuracy = accuracy;
                host.os_guess = match->attr_or("name", "");
            }
        }
    }
    return host;
}

PortService merge_port(PortService into, const PortService& other) {
    if (into.service_name.empty()) into.service_name = other.service_name;
    if (into.product.empty()) into.product = other.product;
    if (into.version.empty()) into.version = other.version;
    if (other.state == PortState::Open)
        into.state = PortState::Open;
    std::set<std::string> ids(into.cve_ids.begin(), into.cve_ids.end());
    ids.insert(other.cve_ids.begin(), other.cve_ids.end());
    into.cve_ids.assign(ids.begin(), ids.end());
    return into;
}

HostRecon merge_host(HostRecon into, const HostRecon& other) {
    if (!into.os_guess && other.os_guess)
        into.os_guess = other.os_guess;
    into.scanned_at = std::max(into.scanned_at, other.scanned_at);
    for (const auto& op : other.ports) {
        auto it = std::find_if(into.ports.begin(), into.ports.end(), [&](const PortService& p) {
            return p.port == op.port && p.protocol == op.protocol;
        });
        if (it == into.ports.end())
            into.ports.push_back(op);
        else
            *it = merge_port(std::move(*it), op);
    }
    std::sort(into.ports.begin(), into.ports.end(), [](const PortService& a, const PortService& b) {
        return std::tie(a.port, a.protocol) < std::tie(b.port, b.protocol);
    });
    return into;
}

} // namespace

std::vector<HostRecon> parse_scan_xml(std::string_view xml_bytes) {
    auto doc = xml::parse_document(xml_bytes);
    if (doc->name != "nmaprun")
        throw UnsupportedSchema("unrecognized root element '" + doc->name + "', expected nmaprun");

    std::int64_t run_started = 0;
    if (auto v = parse_epoch(doc->attr_or("start", "")))
        run_started = *v;

    std::vector<HostRecon> hosts;
    for (const xml::Node* host_node : doc->children_named("host")) {
        auto host = parse_host(*host_node, run_started);
        if (!host)
            continue;
        auto it = std::find_if(hosts.begin(), hosts.end(), [&](const HostRecon& h) {
            return h.address == host->address;
        });
        if (it == hosts.end())
            hosts.push_back(std::move(*host));
        else
            *it = merge_host(std::move(*it), *host);
    }
    return hosts;
}

std::vector<HostRecon> merge_host_recons(std::vector<HostRecon> base,
                                         const std::vector<HostRecon>& overlay) {
    for (const auto& oh : overlay) {
        auto it = std::find_if(base.begin(), base.end(), [&](const HostRecon& h) {
            return h.address == oh.address;
        });
        if (it == base.end())
            base.push_back(oh);
        else
            *it = merge_host(std::move(*it), oh);
    }
    return base;
}

FixtureBackend::FixtureBackend(std::filesystem::path xml_path) : path_(std::move(xml_path)) {}

std::vector<HostRecon> FixtureBackend::run(const TargetSpec&) {
    std::ifstream in(path_, std::ios::binary);
    if (!in)
        throw ScanFailed("cannot read scan fixture: " + path_.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_scan_xml(buffer.str());
}

NmapBackend::NmapBackend(std::string binary) : binary_(std::move(binary)) {}

std::vector<HostRecon> NmapBackend::run(const TargetSpec& targets) {
    auto binary = proc::find_executable(binary_);
    if (!binary)
        throw ScannerNotFound("scanner binary '" + binary_ + "' not found on PATH");

    ScanCommandPlan plan = build_scan_plan(targets);
    phase_seconds_.clear();

    auto run_phase = [&](const std::string& phase_name, const std::vector<std::string>& args) {
        std::vector<std::string> argv;
        argv.push_back(*binary);
        argv.insert(argv.end(), args.begin(), args.end());
        auto started = std::chrono::steady_clock::now();
        auto result = proc::run_process(argv);
        phase_seconds_[phase_name] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        if (result.exit_code != 0)
            throw ScanFailed("scanner exited with code " + std::to_string(result.exit_code) +
                             ": " + result.err);
        return parse_scan_xml(result.out);
    };

    std::vector<HostRecon> merged = run_phase(plan.phases[0].name, plan.phases[0].args);

    std::set<std::uint16_t> open_ports;
    for (const auto& h : merged)
        for (const auto& p : h.ports)
            open_ports.insert(p.port);
    if (open_ports.empty())
        return merged;

    TargetSpec open_spec = targets;
    open_spec.ports.assign(open_ports.begin(), open_ports.end());
    std::string open_str = open_spec.compressed_ports();

    for (size_t i = 1; i < plan.phases.size(); ++i) {
        auto args = substitute_open_ports(plan.phases[i], open_str);
        merged = merge_host_recons(std::move(merged), run_phase(plan.phases[i].name, args));
    }
    return merged;
}

std::vector<HostRecon> scan(const TargetSpec& targets, ScannerBackend& backend) {
    if (targets.addresses.empty() || targets.ports.empty())
        throw InvalidTarget("scan requires at least one address and one port");
    return backend.run(targets);
}

} // namespace ptpipe::scanner
