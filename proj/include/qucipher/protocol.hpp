#pragma once

// Alice/Bob session engine over a simulated one-way quantum channel.
//
// A ChannelMessage owns its state exclusively and can be consumed once.
// Eavesdroppers receive messages by value and must either forward the
// original, consume it and send a freshly prepared replacement, or drop it.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qucipher/common.hpp"
#include "qucipher/gateset.hpp"
#include "qucipher/qstate.hpp"

namespace qucipher::protocol {

/// K classical bits, most-significant first.
struct PlaintextBlock {
    BlockValue value = 0;
    int num_bits = 0;

    static PlaintextBlock from_bits(const std::vector<bool>& bits);
    std::vector<bool> bits() const;
};

class ChannelMessage {
public:
    ChannelMessage(std::uint64_t sequence_number, qstate::PureState state)
        : seq_(sequence_number), state_(std::move(state)) {}

    ChannelMessage(const ChannelMessage&) = delete;
    ChannelMessage& operator=(const ChannelMessage&) = delete;
    ChannelMessage(ChannelMessage&& other) noexcept
        : seq_(other.seq_), state_(std::exchange(other.state_, std::nullopt)) {}
    ChannelMessage& operator=(ChannelMessage&& other) noexcept {
        seq_ = other.seq_;
        state_ = std::exchange(other.state_, std::nullopt);
        return *this;
    }

    std::uint64_t sequence_number() const noexcept { return seq_; }
    bool consumed() const noexcept { return !state_.has_value(); }
    int num_qubits() const;

    /// Hands out the state. A second call throws ContractViolation.
    qstate::PureState consume();

private:
    std::uint64_t seq_;
    std::optional<qstate::PureState> state_;
};

struct SessionConfig {
    gates::GateLibrary library;
    gates::NetworkKey key;
    double check_fraction = 0.1;
    double error_tolerance = 0.0;
    std::uint64_t alice_seed = 1;
    std::uint64_t bob_seed = 2;
    std::uint64_t eve_seed = 3;

    int num_qubits() const { return library.num_qubits(); }
};

class Alice {
public:
    explicit Alice(const SessionConfig& config);

    /// |Ψ_k⟩ = U|k⟩ with a fresh sequence number.
    ChannelMessage encode(BlockValue k);

private:
    const SessionConfig* config_;
    std::uint64_t next_seq_ = 0;
};

ChannelMessage alice_encode(BlockValue k, const SessionConfig& config, std::uint64_t sequence_number);

class Bob {
public:
    explicit Bob(const SessionConfig& config);

    /// Applies U⁻¹, measures every qubit along +Z and reads off k′.
    BlockValue decode(ChannelMessage& message, Rng& rng) const;

private:
    const SessionConfig* config_;
    gates::NetworkKey inverse_;
};

BlockValue bob_decode(ChannelMessage& message, const SessionConfig& config, Rng& rng);

/// Measures every qubit along +Z; m = +1/2 maps to bit 0.
BlockValue measure_computational(const qstate::PureState& state, Rng& rng);

// Streams --------------------------------------------------------------

class PlaintextStream {
public:
    virtual ~PlaintextStream() = default;
    virtual BlockValue next() = 0;
};

struct Intercepted {
    ChannelMessage message;
    std::optional<BlockValue> known_plaintext;
};

/// Source of intercepted traffic for attack code.
class InterceptStream {
public:
    virtual ~InterceptStream() = default;
    /// nullopt once the budget is exhausted.
    virtual std::optional<Intercepted> next() = 0;
    virtual std::uint64_t consumed() const = 0;
};

/// Alice's traffic as seen on the wire, with an optional known-plaintext
/// oracle. Stops after `budget` messages.
class AliceTraffic final : public InterceptStream {
public:
    AliceTraffic(const SessionConfig& config, PlaintextStream& plaintexts, std::uint64_t budget,
                 bool reveal_plaintext);

    std::optional<Intercepted> next() override;
    std::uint64_t consumed() const override { return consumed_; }

private:
    Alice alice_;
    PlaintextStream* plaintexts_;
    std::uint64_t budget_;
    bool reveal_;
    std::uint64_t consumed_ = 0;
};

// Eavesdroppers --------------------------------------------------------

class EveStrategy {
public:
    virtual ~EveStrategy() = default;
    virtual std::string_view tag() const = 0;
    /// Returns the message to forward to Bob, or nullopt to drop it.
    virtual std::optional<ChannelMessage> intercept(ChannelMessage message, Rng& rng) = 0;
};

class PassiveEve final : public EveStrategy {
public:
    std::string_view tag() const override { return "passive"; }
    std::optional<ChannelMessage> intercept(ChannelMessage message, Rng&) override {
        return message;
    }
};

/// Measures along +Z and resends the collapsed basis state.
class InterceptResendZ final : public EveStrategy {
public:
    std::string_view tag() const override { return "intercept-resend-z"; }
    std::optional<ChannelMessage> intercept(ChannelMessage message, Rng& rng) override;
};

/// Decodes with a trial network, measures along +Z, re-encodes with the
/// same trial network.
class InterceptResendNetwork final : public EveStrategy {
public:
    InterceptResendNetwork(gates::GateLibrary library, gates::NetworkKey trial_key);
    std::string_view tag() const override { return "intercept-resend-network"; }
    std::optional<ChannelMessage> intercept(ChannelMessage message, Rng& rng) override;

private:
    gates::GateLibrary library_;
    gates::NetworkKey trial_;
    gates::NetworkKey trial_inverse_;
};

/// Measures each spin along a uniformly random axis and keeps the record.
/// With `forward` set, resends the collapsed state; otherwise drops it.
class TomographySampler final : public EveStrategy {
public:
    explicit TomographySampler(bool forward) : forward_(forward) {}
    std::string_view tag() const override {
        return forward_ ? "tomography-resend" : "collect-tomography";
    }
    std::optional<ChannelMessage> intercept(ChannelMessage message, Rng& rng) override;

    const std::vector<qstate::OutcomeRecord>& records() const noexcept { return records_; }

private:
    bool forward_;
    std::vector<qstate::OutcomeRecord> records_;
};

std::vector<std::string> registered_strategies();

/// Builds a registered strategy by tag. `trial_key` is required for
/// intercept-resend-network. Throws DomainError for unknown tags.
std::unique_ptr<EveStrategy> make_strategy(std::string_view tag, const gates::GateLibrary& library,
                                           const std::optional<gates::NetworkKey>& trial_key = {});

// Sessions -------------------------------------------------------------

enum class Verdict { Clean, Abort, Indeterminate };

std::string_view to_string(Verdict v);

struct MessageRecord {
    std::uint64_t seq = 0;
    BlockValue k = 0;
    bool check = false;
    std::string eve;
    std::optional<BlockValue> k_prime;  // nullopt when the message was lost
    bool match = false;
};

struct SessionTranscript {
    std::vector<MessageRecord> records;
    std::uint64_t checked = 0;
    std::uint64_t check_errors = 0;
    std::uint64_t lost = 0;
    std::uint64_t decode_errors = 0;  // over all delivered messages, check or not
    Verdict verdict = Verdict::Indeterminate;

    /// JSON lines: one object per message, then a summary line.
    void write_jsonl(std::ostream& os) const;
    std::string to_jsonl() const;
};

/// Abort iff any message was lost or the check-round error rate exceeds the
/// tolerance. With zero received check rounds and no loss the verdict is
/// Indeterminate.
Verdict detect_eavesdropping(const SessionTranscript& transcript, double tolerance);

/// Streams `num_messages` blocks Alice → Eve → Bob. A seeded fraction of
/// rounds (Alice's coin) is revealed after Bob measures and compared.
SessionTranscript run_session(PlaintextStream& plaintexts, EveStrategy& eve,
                              const SessionConfig& config, std::uint64_t num_messages);

/// Probability that Bob decodes k correctly after Eve measures the message
/// along +Z and resends: Σ_j |⟨j|U|k⟩|⁴.
double z_resend_match_probability(const gates::GateLibrary& library, const gates::NetworkKey& key,
                                  BlockValue k);

}  // namespace qucipher::protocol
