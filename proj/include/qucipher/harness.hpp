#pragma once

// Experiment runner behind the `qucipher` CLI. Every command is a plain
// function of a typed request so tests can drive it without a process.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "qucipher/attacks.hpp"
#include "qucipher/gateset.hpp"
#include "qucipher/protocol.hpp"
#include "qucipher/tomography.hpp"

namespace qucipher::harness {

using BigInt = boost::multiprecision::cpp_int;

enum ExitCode : int {
    kExitOk = 0,
    kExitViolation = 1,
    kExitUsage = 2,
    kExitResource = 3,
};

inline constexpr double kDefaultBitrate = 5e4;  // bit/s
inline constexpr double kSecondsPerYear = 365.25 * 24 * 3600;

/// Default network length 2K².
std::size_t default_length(int num_qubits);

// Settings ---------------------------------------------------------------

/// Flat `key = value` text with `#` comments.
std::map<std::string, std::string> parse_config(std::string_view text);
std::map<std::string, std::string> load_config_file(const std::string& path);

/// Layered lookup: command-line values win over config-file values, which
/// win over defaults. Every lookup is recorded so outputs can embed the
/// resolved configuration.
class Settings {
public:
    Settings() = default;
    Settings(std::map<std::string, std::string> file, std::map<std::string, std::string> flags);

    std::string get_string(const std::string& key, const std::string& fallback);
    std::int64_t get_int(const std::string& key, std::int64_t fallback);
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback);
    double get_double(const std::string& key, double fallback);
    bool get_bool(const std::string& key, bool fallback);
    std::vector<std::uint64_t> get_u64_list(const std::string& key,
                                            const std::vector<std::uint64_t>& fallback);
    std::vector<double> get_double_list(const std::string& key, const std::vector<double>& fallback);
    bool has(const std::string& key) const;

    const std::map<std::string, std::string>& resolved() const noexcept { return resolved_; }

private:
    std::optional<std::string> lookup(const std::string& key) const;

    std::map<std::string, std::string> file_;
    std::map<std::string, std::string> flags_;
    std::map<std::string, std::string> resolved_;
};

// estimate ---------------------------------------------------------------

struct EstimateRequest {
    int num_qubits = 8;
    std::optional<std::size_t> length{};        // M, default 2K²
    std::optional<std::size_t> library_size{};  // L, default size of the standard library
    double c_factor = 1.0;
    double const_factor = 1.0;
    double alpha = 0.1;
    double bitrate = kDefaultBitrate;
};

struct CostReport {
    int num_qubits = 0;
    std::size_t length = 0;
    std::size_t library_size = 0;
    double alpha = 0.0;
    double bitrate = 0.0;
    BigInt intercepted_per_state;  // ceil(Const·α⁻²·2^K)
    BigInt operations;             // 2^{3K}
    BigInt data;                   // 2^{2K}
    BigInt gates;                  // ~2^{2K}
    BigInt keyspace;               // L^M
    BigInt messages;               // ceil(C·2^{2K})
    BigInt bits;                   // messages·K
    double key_bits_order = 0.0;   // K²·log2(K²)
    std::uint64_t key_bits_exact = 0;  // M·ceil(log2 L)
    double secure_seconds = 0.0;   // bits / bitrate
    double secure_years = 0.0;

    std::string to_text() const;
    std::string to_json() const;
};

CostReport cmd_estimate(const EstimateRequest& request);

// roundtrip --------------------------------------------------------------

struct RoundtripRequest {
    int num_qubits = 4;
    std::size_t num_keys = 100;
    std::optional<std::size_t> length{};
    std::uint64_t seed = 1;
    bool corrupt = false;  // Bob gets a key with one id changed
};

struct RoundtripReport {
    std::uint64_t plaintexts_checked = 0;
    std::uint64_t failures = 0;
    std::string to_json(const RoundtripRequest& request) const;
};

RoundtripReport cmd_roundtrip(const RoundtripRequest& request);

// tomography -------------------------------------------------------------

struct ScalingRequest {
    int num_qubits = 1;
    std::vector<std::uint64_t> sample_grid = {100, 1000, 10000, 100000};
    std::uint64_t num_seeds = 20;
    std::uint64_t seed = 1;
    std::optional<BlockValue> plaintext{};  // default: seeded draw
    tomography::Estimator estimator = tomography::Estimator::SingleShot;
    std::uint64_t repeats = 1;
};

struct ScalingRow {
    int num_qubits;
    std::uint64_t samples;
    std::uint64_t seed;
    double alpha;
};

struct ScalingReport {
    std::vector<ScalingRow> rows;
    double slope = 0.0;      // least-squares slope of log α on log N
    double intercept = 0.0;  // so α ≈ exp(intercept)·N^slope

    void write_csv(std::ostream& os, const std::map<std::string, std::string>& config) const;
};

ScalingReport cmd_tomography_scaling(const ScalingRequest& request);

/// Least-squares slope and intercept of y on x.
std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y);

struct TomographyAttackRequest {
    int num_qubits = 2;
    std::uint64_t samples_per_state = 100000;
    std::optional<std::size_t> length{};
    std::uint64_t seed = 1;
    std::uint64_t fresh_messages = 1000;
    bool quadrature = false;  // exact reconstruction instead of sampling
    int quadrature_grid = 100;
};

struct TomographyAttackReport {
    std::vector<double> column_fidelities;
    double min_fidelity = 0.0;
    double decode_rate = 0.0;
    double unitarity_defect = 0.0;
    std::uint64_t messages_intercepted = 0;
    std::vector<double> alphas;
    std::string degeneracy;  // nonempty when eigenvector extraction failed

    std::string to_json(const TomographyAttackRequest& request) const;
};

TomographyAttackReport cmd_tomography_attack(const TomographyAttackRequest& request);

// guessing and correlation attacks ---------------------------------------

struct GuessRequest {
    int num_qubits = 2;
    std::optional<std::size_t> library_size{};
    std::size_t length = 2;
    std::uint64_t seed = 1;
    std::uint64_t accept_after = attacks::kDefaultAcceptRun;
    std::uint64_t budget = 10'000'000;
    std::uint64_t cap = attacks::kEnumerationCap;
    /// Plant the key outside the enumerated space (length + 1 gates).
    bool key_outside = false;
};

struct GuessReport {
    attacks::AttackResult result;
    gates::NetworkKey true_key;
    bool found_equivalent = false;  // found key decodes like the true key
    std::optional<std::uint64_t> distinct_actions{};

    std::string to_json(const GuessRequest& request) const;
};

/// Library used by the attack commands: default_library(K), optionally cut
/// to its first L gates.
gates::GateLibrary attack_library(int num_qubits, std::optional<std::size_t> library_size);

GuessReport cmd_guess_attack(const GuessRequest& request);

enum class SourceKind { Markov, Uniform };

struct CorrelationRequest {
    int num_qubits = 2;
    std::optional<std::size_t> library_size{};
    std::size_t length = 2;
    std::uint64_t seed = 1;
    SourceKind source = SourceKind::Markov;
    std::optional<attacks::TransitionMatrix> transitions{};  // overrides the built-in chain
    std::vector<std::uint64_t> lags = {1};
    std::size_t window = 2000;
    std::uint64_t calibration_runs = 100;
    double calibration_quantile = 0.99;
    std::uint64_t budget = 100'000'000;
    std::uint64_t cap = attacks::kEnumerationCap;
};

struct CorrelationReport {
    attacks::AttackResult result;
    gates::NetworkKey true_key;
    double threshold = 0.0;
    bool found_equivalent = false;
    std::vector<attacks::Correlator> known;
    std::vector<attacks::Correlator> observed;  // decoded with the found (or true) key

    bool ambiguous() const {
        return result.symmetric_relabelings.value_or(0) > 0;
    }
    std::string to_json(const CorrelationRequest& request) const;
};

/// Built-in asymmetric chain for K = 2; seeded random chain otherwise.
attacks::TransitionMatrix default_transitions(int num_qubits, SourceKind kind, std::uint64_t seed);

CorrelationReport cmd_correlation_attack(const CorrelationRequest& request);

/// Calibrated acceptance threshold and per-run decisions for the true key
/// and a label-permuting wrong key ([X on qubit K-1] followed by the key).
struct Discrimination {
    double threshold = 0.0;
    std::uint64_t runs = 0;
    std::uint64_t true_accepted = 0;
    std::uint64_t wrong_rejected = 0;
    std::uint64_t both = 0;  // runs where both decisions were right
};

Discrimination evaluate_correlation_discrimination(const CorrelationRequest& request,
                                                   std::uint64_t runs);

// detection --------------------------------------------------------------

struct DetectionRequest {
    int num_qubits = 3;
    std::optional<std::size_t> length{};
    std::string strategy = "intercept-resend-z";
    std::uint64_t messages = 1000;
    std::uint64_t seed = 1;
    double check_fraction = 0.1;
    double tolerance = 0.0;
};

struct DetectionReport {
    protocol::SessionTranscript transcript;
    gates::NetworkKey key;
    double empirical_error = 0.0;  // decode errors / delivered messages
    std::optional<double> analytic_error{};  // intercept-resend-z only
    std::optional<double> sigma{};           // standard error of the empirical rate
    std::optional<double> z_score{};

    std::string to_json(const DetectionRequest& request) const;
};

/// 1 − mean_k Σ_j |⟨j|U|k⟩|⁴ over uniform plaintexts.
double z_resend_error_rate(const gates::GateLibrary& library, const gates::NetworkKey& key);

DetectionReport cmd_detection(const DetectionRequest& request);

/// Runs a session against an explicit key.
DetectionReport run_detection(const DetectionRequest& request, const gates::NetworkKey& key);

// keygen -----------------------------------------------------------------

std::string cmd_keygen(int num_qubits, std::optional<std::size_t> length, std::uint64_t seed);

// CLI dispatch -----------------------------------------------------------

std::vector<std::string> verbs();

/// Runs one verb with resolved settings, writing human-readable output to
/// `out` and diagnostics to `err`. Writes the machine-readable report to
/// the `out` setting when present. Returns an ExitCode.
int run_command(std::string_view verb, Settings& settings, std::ostream& out, std::ostream& err);

}  // namespace qucipher::harness
