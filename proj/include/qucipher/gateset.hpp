#pragma once

// Elementary gate libraries and secret network keys.

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qucipher/common.hpp"
#include "qucipher/qstate.hpp"

namespace qucipher::gates {

using GateId = std::uint32_t;

struct SingleQubitGate {
    int target = 0;
    qstate::Matrix2 matrix;
    std::string label;
};

/// |a, b⟩ → |a, a ⊕ b⟩
struct ControlledNot {
    int control = 0;
    int target = 1;
};

struct GateSpec {
    GateId id = 0;
    std::variant<SingleQubitGate, ControlledNot> kind;
    GateId inverse_id = 0;
};

std::string gate_label(const GateSpec& gate);

/// Immutable, inverse-closed set of L gates on K qubits.
class GateLibrary {
public:
    /// Validates ids, qubit ranges, unitarity, and that inverse_id is a
    /// bijection whose partner undoes each gate. Throws ValidationError.
    GateLibrary(int num_qubits, std::vector<GateSpec> gates);

    int num_qubits() const noexcept { return num_qubits_; }
    std::size_t size() const noexcept { return gates_.size(); }
    const GateSpec& operator[](GateId id) const { return gates_.at(id); }
    const std::vector<GateSpec>& gates() const noexcept { return gates_; }
    std::uint64_t fingerprint() const noexcept { return fingerprint_; }

    /// First `count` gates as a library of their own; throws ValidationError
    /// when the prefix is not inverse-closed.
    GateLibrary prefix(std::size_t count) const;

    /// Id of the gate with the given label, or throws DomainError.
    GateId find(std::string_view label) const;

private:
    int num_qubits_;
    std::vector<GateSpec> gates_;
    std::uint64_t fingerprint_;
};

/// Number of gates in default_library(K): 7K single-qubit + K(K-1) CNOT.
std::size_t default_library_size(int num_qubits);

/// Per qubit H, S, S†, T, T†, X, Z (ids 7q .. 7q+6), then CNOT over ordered
/// pairs (control, target) in lexicographic order.
GateLibrary default_library(int num_qubits);

struct NetworkKey {
    std::uint64_t library_fingerprint = 0;
    std::vector<GateId> sequence;  // applied first to last

    friend bool operator==(const NetworkKey&, const NetworkKey&) = default;
};

/// Throws KeyError if the key does not fit the library.
void validate_key(const GateLibrary& library, const NetworkKey& key);

NetworkKey make_key(const GateLibrary& library, std::vector<GateId> sequence);

using WarningSink = std::function<void(std::string_view)>;

/// M independent uniform draws from [0, L). Emits a warning when M < K².
NetworkKey random_key(const GateLibrary& library, std::size_t length, Rng& rng,
                      const WarningSink& warn = {});

void apply_gate(qstate::PureState& state, const GateSpec& gate);
void apply_network_in_place(qstate::PureState& state, const GateLibrary& library,
                            const NetworkKey& key);
qstate::PureState apply_network(const qstate::PureState& state, const GateLibrary& library,
                                const NetworkKey& key);

/// Reversed sequence with every id replaced by its inverse.
NetworkKey inverse_key(const GateLibrary& library, const NetworkKey& key);

/// Concatenation: `first` is applied before `second`.
NetworkKey concat(const NetworkKey& first, const NetworkKey& second);

inline constexpr int kDenseQubitCap = 12;

/// Column k is apply_network(basis_state(k)). Throws ResourceError above the cap.
qstate::ComplexMatrix network_to_matrix(const GateLibrary& library, const NetworkKey& key,
                                        int max_qubits = kDenseQubitCap);

// Key codec --------------------------------------------------------------

using BitString = std::vector<bool>;

/// ceil(log2 L) bits per gate id.
int id_width(std::size_t library_size);

/// 16-bit M, 16-bit L, then M fixed-width ids, all big-endian.
BitString serialize_key(const GateLibrary& library, const NetworkKey& key);
NetworkKey deserialize_key(const GateLibrary& library, const BitString& bits);

std::string to_hex(const BitString& bits);
BitString from_hex(std::string_view hex, std::size_t num_bits);

/// Two lines: `qucipher-key v1 K=.. L=.. M=.. fp=<hex16>` and the hex payload.
std::string write_key_file(const GateLibrary& library, const NetworkKey& key);
NetworkKey read_key_file(const GateLibrary& library, std::string_view text);

std::string format_fingerprint(std::uint64_t fp);

}  // namespace qucipher::gates
