#include "qucipher/protocol.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace qucipher::protocol {

using qstate::PureState;
using qstate::SpinDirection;

PlaintextBlock PlaintextBlock::from_bits(const std::vector<bool>& bits) {
    if (bits.empty() || bits.size() > 63) throw DomainError("plaintext block must have 1..63 bits");
    BlockValue v = 0;
    for (bool b : bits) v = (v << 1) | (b ? 1U : 0U);
    return {v, static_cast<int>(bits.size())};
}

std::vector<bool> PlaintextBlock::bits() const {
    std::vector<bool> out(num_bits);
    for (int i = 0; i < num_bits; ++i) out[i] = (value >> (num_bits - 1 - i)) & 1U;
    return out;
}

int ChannelMessage::num_qubits() const {
    if (!state_) throw ContractViolation("message " + std::to_string(seq_) + " already consumed");
    return state_->num_qubits();
}

PureState ChannelMessage::consume() {
    if (!state_) {
        throw ContractViolation("message " + std::to_string(seq_) +
                                " consumed twice; quantum states cannot be copied");
    }
    PureState s = std::move(*state_);
    state_.reset();
    return s;
}

// ---------------------------------------------------------------------------

Alice::Alice(const SessionConfig& config) : config_(&config) {
    gates::validate_key(config.library, config.key);
}

ChannelMessage Alice::encode(BlockValue k) { return alice_encode(k, *config_, next_seq_++); }

ChannelMessage alice_encode(BlockValue k, const SessionConfig& config, std::uint64_t sequence_number) {
    PureState s = qstate::basis_state(k, config.num_qubits());
    gates::apply_network_in_place(s, config.library, config.key);
    return {sequence_number, std::move(s)};
}

Bob::Bob(const SessionConfig& config)
    : config_(&config), inverse_(gates::inverse_key(config.library, config.key)) {}

BlockValue Bob::decode(ChannelMessage& message, Rng& rng) const {
    PureState s = message.consume();
    gates::apply_network_in_place(s, config_->library, inverse_);
    return measure_computational(s, rng);
}

BlockValue bob_decode(ChannelMessage& message, const SessionConfig& config, Rng& rng) {
    return Bob(config).decode(message, rng);
}

BlockValue measure_computational(const PureState& state, Rng& rng) {
    const std::vector<SpinDirection> z(state.num_qubits(), SpinDirection::plus_z());
    const auto m = qstate::measure_spins(state, z, rng);
    BlockValue k = 0;
    for (auto o : m.record.outcomes) k = (k << 1) | (o == qstate::Spin::Down ? 1U : 0U);
    return k;
}

// ---------------------------------------------------------------------------

AliceTraffic::AliceTraffic(const SessionConfig& config, PlaintextStream& plaintexts,
                           std::uint64_t budget, bool reveal_plaintext)
    : alice_(config), plaintexts_(&plaintexts), budget_(budget), reveal_(reveal_plaintext) {}

std::optional<Intercepted> AliceTraffic::next() {
    if (consumed_ >= budget_) return std::nullopt;
    ++consumed_;
    const BlockValue k = plaintexts_->next();
    Intercepted out{alice_.encode(k), std::nullopt};
    if (reveal_) out.known_plaintext = k;
    return out;
}

// ---------------------------------------------------------------------------

std::optional<ChannelMessage> InterceptResendZ::intercept(ChannelMessage message, Rng& rng) {
    const PureState s = message.consume();
    const BlockValue j = measure_computational(s, rng);
    return ChannelMessage(message.sequence_number(), qstate::basis_state(j, s.num_qubits()));
}

InterceptResendNetwork::InterceptResendNetwork(gates::GateLibrary library,
                                               gates::NetworkKey trial_key)
    : library_(std::move(library)),
      trial_(std::move(trial_key)),
      trial_inverse_(gates::inverse_key(library_, trial_)) {}

std::optional<ChannelMessage> InterceptResendNetwork::intercept(ChannelMessage message, Rng& rng) {
    PureState s = message.consume();
    gates::apply_network_in_place(s, library_, trial_inverse_);
    const BlockValue j = measure_computational(s, rng);
    PureState resend = qstate::basis_state(j, s.num_qubits());
    gates::apply_network_in_place(resend, library_, trial_);
    return ChannelMessage(message.sequence_number(), std::move(resend));
}

std::optional<ChannelMessage> TomographySampler::intercept(ChannelMessage message, Rng& rng) {
    const PureState s = message.consume();
    std::vector<SpinDirection> dirs;
    dirs.reserve(s.num_qubits());
    for (int q = 0; q < s.num_qubits(); ++q) dirs.push_back(SpinDirection::random(rng));
    auto m = qstate::measure_spins(s, dirs, rng);
    records_.push_back(std::move(m.record));
    if (!forward_) return std::nullopt;
    return ChannelMessage(message.sequence_number(), std::move(m.collapsed));
}

std::vector<std::string> registered_strategies() {
    return {"passive", "intercept-resend-z", "intercept-resend-network", "collect-tomography",
            "tomography-resend"};
}

std::unique_ptr<EveStrategy> make_strategy(std::string_view tag, const gates::GateLibrary& library,
                                           const std::optional<gates::NetworkKey>& trial_key) {
    if (tag == "passive") return std::make_unique<PassiveEve>();
    if (tag == "intercept-resend-z") return std::make_unique<InterceptResendZ>();
    if (tag == "collect-tomography") return std::make_unique<TomographySampler>(false);
    if (tag == "tomography-resend") return std::make_unique<TomographySampler>(true);
    if (tag == "intercept-resend-network") {
        if (!trial_key) throw DomainError("intercept-resend-network needs a trial key");
        return std::make_unique<InterceptResendNetwork>(library, *trial_key);
    }
    throw DomainError("unknown eavesdropper strategy '" + std::string(tag) + "'");
}

// ---------------------------------------------------------------------------

std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::Clean: return "clean";
        case Verdict::Abort: return "abort";
        case Verdict::Indeterminate: return "indeterminate";
    }
    return "indeterminate";
}

void SessionTranscript::write_jsonl(std::ostream& os) const {
    for (const auto& r : records) {
        nlohmann::ordered_json j;
        j["seq"] = r.seq;
        j["k"] = r.k;
        j["check"] = r.check;
        j["eve"] = r.eve;
        if (r.k_prime) j["k_prime"] = *r.k_prime;
        else j["k_prime"] = nullptr;
        j["match"] = r.match;
        os << j.dump() << "\n";
    }
    nlohmann::ordered_json summary;
    summary["verdict"] = to_string(verdict);
    summary["checked"] = checked;
    summary["errors"] = check_errors;
    summary["lost"] = lost;
    os << summary.dump() << "\n";
}

std::string SessionTranscript::to_jsonl() const {
    std::ostringstream os;
    write_jsonl(os);
    return os.str();
}

Verdict detect_eavesdropping(const SessionTranscript& t, double tolerance) {
    if (t.lost > 0) return Verdict::Abort;
    if (t.checked == 0) return Verdict::Indeterminate;
    const double rate = static_cast<double>(t.check_errors) / static_cast<double>(t.checked);
    return rate > tolerance ? Verdict::Abort : Verdict::Clean;
}

SessionTranscript run_session(PlaintextStream& plaintexts, EveStrategy& eve,
                              const SessionConfig& config, std::uint64_t num_messages) {
    if (!(config.check_fraction >= 0.0 && config.check_fraction <= 1.0)) {
        throw DomainError("check_fraction must lie in [0, 1]");
    }
    if (!(config.error_tolerance >= 0.0)) throw DomainError("error_tolerance must be >= 0");

    Rng alice_rng(config.alice_seed);
    Rng bob_rng(config.bob_seed);
    Rng eve_rng(config.eve_seed);
    Alice alice(config);
    Bob bob(config);

    SessionTranscript t;
    t.records.reserve(num_messages);
    for (std::uint64_t i = 0; i < num_messages; ++i) {
        const BlockValue k = plaintexts.next();
        ChannelMessage sent = alice.encode(k);
        // Alice's coin; announced only after Bob's measurement below.
        const bool check = uniform01(alice_rng) < config.check_fraction;

        MessageRecord rec;
        rec.seq = sent.sequence_number();
        rec.k = k;
        rec.check = check;
        rec.eve = std::string(eve.tag());

        std::optional<ChannelMessage> arrived;
        try {
            arrived = eve.intercept(std::move(sent), eve_rng);
        } catch (const ContractViolation& e) {
            throw ContractViolation("eavesdropper '" + rec.eve + "' broke the channel contract at seq " +
                                    std::to_string(rec.seq) + ": " + e.what());
        }
        if (arrived && (arrived->consumed() || arrived->sequence_number() != rec.seq)) {
            throw ContractViolation("eavesdropper '" + rec.eve +
                                    "' forwarded an invalid message at seq " +
                                    std::to_string(rec.seq));
        }

        if (!arrived) {
            ++t.lost;
        } else {
            rec.k_prime = bob.decode(*arrived, bob_rng);
            rec.match = *rec.k_prime == k;
            if (!rec.match) ++t.decode_errors;
            if (check) {
                ++t.checked;
                if (!rec.match) ++t.check_errors;
            }
        }
        t.records.push_back(std::move(rec));
    }
    t.verdict = detect_eavesdropping(t, config.error_tolerance);
    return t;
}

double z_resend_match_probability(const gates::GateLibrary& library, const gates::NetworkKey& key,
                                  BlockValue k) {
    const PureState psi = gates::apply_network(qstate::basis_state(k, library.num_qubits()), library, key);
    double s = 0.0;
    for (const auto& c : psi.amplitudes()) s += std::norm(c) * std::norm(c);
    return s;
}

}  // namespace qucipher::protocol
