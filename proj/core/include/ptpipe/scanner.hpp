#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ptpipe::scanner {

/// Assessment targets: validated addresses plus the expanded port selection.
struct TargetSpec {
    std::vector<std::string> addresses; // dotted-quad IPv4, optionally /prefix
    std::vector<std::uint16_t> ports;   // expanded, sorted, duplicate-free

    /// Parses comma-separated specs, e.g. ("10.0.0.5,10.0.1.0/24", "1-1000,8080").
    /// Throws InvalidTarget on malformed input.
    static TargetSpec parse(const std::string& address_spec, const std::string& port_spec);

    /// Re-compresses the expanded ports into "1-1000,8080" form.
    std::string compressed_ports() const;

    bool operator==(const TargetSpec&) const = default;
};

bool is_ipv4_address(std::string_view s);
bool is_ipv4_or_cidr(std::string_view s);

/// Numeric octet-wise ordering for dotted-quad addresses.
bool ipv4_less(std::string_view a, std::string_view b);

enum class Protocol { Tcp, Udp };
enum class PortState { Open, Filtered };

std::string to_string(Protocol p);
std::string to_string(PortState s);
std::optional<Protocol> protocol_from_string(const std::string& s);
std::optional<PortState> port_state_from_string(const std::string& s);

struct PortService {
    std::uint16_t port = 0;
    Protocol protocol = Protocol::Tcp;
    PortState state = PortState::Open;
    std::string service_name;
    std::string product;
    std::string version;
    std::vector<std::string> cve_ids; // uppercase, CVE-pattern, duplicate-free, sorted

    bool operator==(const PortService&) const = default;
};

struct HostRecon {
    std::string address;
    std::optional<std::string> os_guess; // top-accuracy OS match
    std::vector<PortService> ports;      // sorted by (port, protocol), unique keys
    std::int64_t scanned_at = 0;         // UTC epoch seconds, taken from scan output

    bool operator==(const HostRecon&) const = default;
};

inline constexpr const char* kOpenPortsPlaceholder = "{open-ports}";

inline constexpr const char* kPhasePortDiscovery = "port-discovery";
inline constexpr const char* kPhaseServiceVersion = "service-version";
inline constexpr const char* kPhaseVulnScript = "vuln-script";
inline constexpr const char* kPhaseOsDiscovery = "os-discovery";

struct ScanPhase {
    std::string name;
    std::vector<std::string> args; // scanner arguments, binary name excluded
};

/// Four phases in fixed order: port-discovery, service-version, vuln-script,
/// os-discovery. Phases after the first carry kOpenPortsPlaceholder where the
/// discovered open ports are substituted.
struct ScanCommandPlan {
    std::vector<ScanPhase> phases;
};

ScanCommandPlan build_scan_plan(const TargetSpec& targets);

/// Substitutes the open-ports placeholder into a phase's argument vector.
std::vector<std::string> substitute_open_ports(const ScanPhase& phase, const std::string& ports);

/// Parses scanner XML output (any subset of the phases, merged or separate)
/// into one record per live host. Throws MalformedXml / UnsupportedSchema.
std::vector<HostRecon> parse_scan_xml(std::string_view xml);

/// Merges phase outputs host-by-host: union of ports, service fields filled
/// from whichever side knows them, OS guess kept once known.
std::vector<HostRecon> merge_host_recons(std::vector<HostRecon> base,
                                         const std::vector<HostRecon>& overlay);

class ScannerBackend {
public:
    virtual ~ScannerBackend() = default;
    virtual std::vector<HostRecon> run(const TargetSpec& targets) = 0;

    /// Wall seconds per executed phase name, for backends that track them.
    virtual std::map<std::string, double> phase_seconds() const { return {}; }
};

/// Replays a stored XML capture. First-class backend: drives offline runs and
/// replays of past engagements, not just tests.
class FixtureBackend final : public ScannerBackend {
public:
    explicit FixtureBackend(std::filesystem::path xml_path);
    std::vector<HostRecon> run(const TargetSpec& targets) override;

private:
    std::filesystem::path path_;
};

/// Drives the external nmap binary through the four-phase plan.
class NmapBackend final : public ScannerBackend {
public:
    explicit NmapBackend(std::string binary = "nmap");
    std::vector<HostRecon> run(const TargetSpec& targets) override;
    std::map<std::string, double> phase_seconds() const override { return phase_seconds_; }

private:
    std::string binary_;
    std::map<std::string, double> phase_seconds_;
};

std::vector<HostRecon> scan(const TargetSpec& targets, ScannerBackend& backend);

} // namespace ptpipe::scanner
