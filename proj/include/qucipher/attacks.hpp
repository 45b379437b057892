#pragma once

// Eavesdropper attacks that do not reconstruct states: exhaustive network
// guessing with a sequential acceptance test, and correlation matching
// against known plaintext statistics. Also the plaintext source models.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "qucipher/common.hpp"
#include "qucipher/gateset.hpp"
#include "qucipher/protocol.hpp"

namespace qucipher::attacks {

using BigInt = boost::multiprecision::cpp_int;

/// Exact L^M.
BigInt keyspace_size(std::uint64_t library_size, std::uint64_t length);

/// |⟨k| V⁻¹ U |k⟩|² with U the true network and V the candidate.
double acceptance_probability(const gates::GateLibrary& library, const gates::NetworkKey& true_key,
                              const gates::NetworkKey& candidate, BlockValue k);

/// True when the candidate decodes every basis state exactly like the true
/// key (p = 1 for all k within 1e-9).
bool decodes_equivalently(const gates::GateLibrary& library, const gates::NetworkKey& true_key,
                          const gates::NetworkKey& candidate);

enum class CandidateStatus { Alive, Rejected, Accepted, Inconclusive };

std::string_view to_string(CandidateStatus s);

struct CandidateTest {
    gates::NetworkKey candidate;
    std::uint64_t measurements = 0;
    CandidateStatus status = CandidateStatus::Alive;
};

inline constexpr std::uint64_t kDefaultAcceptRun = 20;
inline constexpr std::uint64_t kEnumerationCap = 1'000'000;

/// Decodes known-plaintext messages with the candidate inverse, rejecting
/// on the first mismatch and accepting after `accept_after` matches. Status
/// is Inconclusive if the oracle runs dry or `max_measurements` is reached.
CandidateTest sequential_test(const gates::GateLibrary& library, const gates::NetworkKey& candidate,
                              protocol::InterceptStream& oracle, std::uint64_t accept_after,
                              std::uint64_t max_measurements, Rng& rng);

struct AttackResult {
    bool found = false;
    std::optional<gates::NetworkKey> key;
    std::uint64_t candidates_tried = 0;
    std::uint64_t messages_consumed = 0;
    BigInt keyspace;
    /// Correlation mode: number of nontrivial block relabelings that leave
    /// the known statistics unchanged. Nonzero means the result is ambiguous.
    std::optional<std::uint64_t> symmetric_relabelings;
    std::string failure;
};

/// Lexicographic enumeration of all length-M sequences (first id most
/// significant). Throws ResourceError when L^M exceeds the cap.
class CandidateEnumerator {
public:
    CandidateEnumerator(const gates::GateLibrary& library, std::size_t length,
                        std::uint64_t cap = kEnumerationCap);
    bool next(gates::NetworkKey& out);
    const BigInt& total() const noexcept { return total_; }

private:
    std::uint64_t fingerprint_;
    std::size_t radix_;
    std::vector<gates::GateId> digits_;
    bool done_ = false;
    BigInt total_;
};

AttackResult guess_attack(const gates::GateLibrary& library, std::size_t length,
                          protocol::InterceptStream& oracle, std::uint64_t accept_after, Rng& rng,
                          std::uint64_t cap = kEnumerationCap);

// Correlations ---------------------------------------------------------

/// ξ_kl(y): probability that block k at position x is followed by l at x + y.
struct Correlator {
    std::size_t lag = 0;
    std::size_t num_blocks = 0;
    std::vector<double> entries;  // row-major num_blocks × num_blocks

    double operator()(std::size_t k, std::size_t l) const { return entries[k * num_blocks + l]; }
    double total() const;
};

Correlator empirical_correlator(std::span<const BlockValue> sequence, std::size_t lag,
                                std::size_t num_blocks);

double frobenius_distance(const Correlator& a, const Correlator& b);

/// Number of non-identity permutations π of block labels with
/// ξ(π k, π l) = ξ(k, l) within `tolerance` for every given lag. Only
/// computed for at most 8 blocks; throws ResourceError beyond that.
std::uint64_t symmetric_relabelings(std::span<const Correlator> known, double tolerance = 1e-9);

/// Σ_y |ξ̂(y) − ξ(y)|_F over W messages decoded with the candidate inverse.
/// nullopt when the stream runs dry.
std::optional<double> correlation_statistic(const gates::GateLibrary& library,
                                            const gates::NetworkKey& candidate,
                                            protocol::InterceptStream& stream,
                                            std::span<const Correlator> known, std::size_t window,
                                            Rng& rng);

/// Nearest-rank percentile (q in (0, 1]).
double percentile(std::vector<double> values, double q);

AttackResult correlation_attack(const gates::GateLibrary& library, std::size_t length,
                                protocol::InterceptStream& stream,
                                std::span<const Correlator> known, std::size_t window,
                                double threshold, Rng& rng, std::uint64_t cap = kEnumerationCap);

// Plaintext sources ----------------------------------------------------

class UniformSource final : public protocol::PlaintextStream {
public:
    UniformSource(int num_qubits, std::uint64_t seed);
    BlockValue next() override;

private:
    std::uint64_t num_blocks_;
    Rng rng_;
};

/// Cycles through a fixed sequence.
class FixedSequenceSource final : public protocol::PlaintextStream {
public:
    explicit FixedSequenceSource(std::vector<BlockValue> sequence);
    BlockValue next() override;

private:
    std::vector<BlockValue> sequence_;
    std::size_t pos_ = 0;
};

struct TransitionMatrix {
    std::size_t num_blocks = 0;
    std::vector<double> p;  // row-major; row k is the distribution of the next block

    double operator()(std::size_t k, std::size_t l) const { return p[k * num_blocks + l]; }
    static TransitionMatrix uniform(std::size_t num_blocks);
    static TransitionMatrix identity(std::size_t num_blocks);
};

/// Stationary-start Markov chain over block values.
class MarkovSource final : public protocol::PlaintextStream {
public:
    /// Throws ValidationError unless every row is a distribution within 1e-9.
    MarkovSource(TransitionMatrix transitions, std::uint64_t seed);
    BlockValue next() override;

    const TransitionMatrix& transitions() const noexcept { return t_; }
    const std::vector<double>& stationary() const noexcept { return pi_; }
    /// ξ_kl(y) = π_k (T^y)_kl
    Correlator exact_correlator(std::size_t lag) const;

private:
    std::size_t sample(std::span<const double> dist);

    TransitionMatrix t_;
    std::vector<double> pi_;
    Rng rng_;
    std::optional<std::size_t> current_;
};

MarkovSource markov_source(TransitionMatrix transitions, std::uint64_t seed);

/// Number of distinct maps (up to global phase) realised by all L^M
/// sequences. Dense evaluation, K ≤ 2 only.
std::uint64_t distinct_action_classes(const gates::GateLibrary& library, std::size_t length,
                                      std::uint64_t cap = 100'000);

/// {"mode","found","candidates","messages","keyspace","seed"}
std::string attack_report_json(const AttackResult& result, std::string_view mode,
                               std::uint64_t seed);

}  // namespace qucipher::attacks
