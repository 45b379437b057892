#include "qucipher/gateset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

namespace qucipher::gates {

using qstate::ComplexMatrix;
using qstate::Matrix2;
using qstate::PureState;

namespace {

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

bool close(const Matrix2& a, const Matrix2& b, double tol) {
    for (int i = 0; i < 4; ++i)
        if (std::abs(a.m[i] - b.m[i]) > tol) return false;
    return true;
}

const Matrix2 kIdentity{{1.0, 0.0, 0.0, 1.0}};

}  // namespace

std::string gate_label(const GateSpec& gate) {
    if (const auto* s = std::get_if<SingleQubitGate>(&gate.kind)) return s->label;
    const auto& c = std::get<ControlledNot>(gate.kind);
    return "CNOT[" + std::to_string(c.control) + "," + std::to_string(c.target) + "]";
}

GateLibrary::GateLibrary(int num_qubits, std::vector<GateSpec> gates)
    : num_qubits_(num_qubits), gates_(std::move(gates)) {
    if (num_qubits_ < 1 || num_qubits_ > kMaxQubits) {
        throw ValidationError("gate library: qubit count out of range");
    }
    if (gates_.empty()) throw ValidationError("gate library is empty");
    const std::size_t n = gates_.size();
    std::vector<bool> hit(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        const GateSpec& g = gates_[i];
        const std::string where = "gate " + std::to_string(i) + " (" + gate_label(g) + ")";
        if (g.id != i) throw ValidationError(where + ": id does not match position");
        if (g.inverse_id >= n) throw ValidationError(where + ": inverse_id out of range");
        if (hit[g.inverse_id]) throw ValidationError(where + ": inverse_id is not a bijection");
        hit[g.inverse_id] = true;

        const GateSpec& inv = gates_[g.inverse_id];
        if (const auto* s = std::get_if<SingleQubitGate>(&g.kind)) {
            if (s->target < 0 || s->target >= num_qubits_) {
                throw ValidationError(where + ": target qubit out of range");
            }
            if (!close(s->matrix * s->matrix.adjoint(), kIdentity, 1e-12)) {
                throw ValidationError(where + ": matrix not unitary");
            }
            const auto* si = std::get_if<SingleQubitGate>(&inv.kind);
            if (si == nullptr || si->target != s->target ||
                !close(si->matrix * s->matrix, kIdentity, 1e-9)) {
                throw ValidationError(where + ": inverse partner does not undo the gate");
            }
        } else {
            const auto& c = std::get<ControlledNot>(g.kind);
            if (c.control < 0 || c.control >= num_qubits_ || c.target < 0 ||
                c.target >= num_qubits_) {
                throw ValidationError(where + ": qubit index out of range");
            }
            if (c.control == c.target) throw ValidationError(where + ": control equals target");
            const auto* ci = std::get_if<ControlledNot>(&inv.kind);
            if (ci == nullptr || ci->control != c.control || ci->target != c.target) {
                throw ValidationError(where + ": inverse partner does not undo the gate");
            }
        }
    }

    std::uint64_t h = fnv1a("K=" + std::to_string(num_qubits_) + ";");
    for (const auto& g : gates_) h = fnv1a(gate_label(g) + ";", h);
    fingerprint_ = h;
}

GateLibrary GateLibrary::prefix(std::size_t count) const {
    if (count == 0 || count > gates_.size()) {
        throw ValidationError("library prefix size " + std::to_string(count) + " outside [1, " +
                              std::to_string(gates_.size()) + "]");
    }
    return GateLibrary(num_qubits_, {gates_.begin(), gates_.begin() + count});
}

GateId GateLibrary::find(std::string_view label) const {
    for (const auto& g : gates_)
        if (gate_label(g) == label) return g.id;
    throw DomainError("no gate labelled " + std::string(label));
}

std::size_t default_library_size(int num_qubits) {
    const auto k = static_cast<std::size_t>(num_qubits);
    return 7 * k + k * (k - 1);
}

GateLibrary default_library(int num_qubits) {
    if (num_qubits < 1 || num_qubits > kMaxQubits) {
        throw DomainError("default_library: qubit count out of range");
    }
    const double r = 1.0 / std::numbers::sqrt2;
    const Complex i{0.0, 1.0};
    const Complex t = std::polar(1.0, std::numbers::pi / 4);

    struct Proto {
        const char* name;
        Matrix2 m;
        int inverse;  // offset within the per-qubit block
    };
    const Proto protos[] = {
        {"H", {{r, r, r, -r}}, 0},
        {"S", {{1.0, 0.0, 0.0, i}}, 2},
        {"Sdg", {{1.0, 0.0, 0.0, -i}}, 1},
        {"T", {{1.0, 0.0, 0.0, t}}, 4},
        {"Tdg", {{1.0, 0.0, 0.0, std::conj(t)}}, 3},
        {"X", {{0.0, 1.0, 1.0, 0.0}}, 5},
        {"Z", {{1.0, 0.0, 0.0, -1.0}}, 6},
    };
    constexpr GateId kPerQubit = std::size(protos);

    std::vector<GateSpec> gates;
    gates.reserve(default_library_size(num_qubits));
    for (int q = 0; q < num_qubits; ++q) {
        for (GateId j = 0; j < kPerQubit; ++j) {
            const GateId id = static_cast<GateId>(q) * kPerQubit + j;
            gates.push_back({id,
                             SingleQubitGate{q, protos[j].m,
                                             std::string(protos[j].name) + "[" +
                                                 std::to_string(q) + "]"},
                             static_cast<GateId>(q) * kPerQubit + protos[j].inverse});
        }
    }
    for (int c = 0; c < num_qubits; ++c) {
        for (int tq = 0; tq < num_qubits; ++tq) {
            if (c == tq) continue;
            const auto id = static_cast<GateId>(gates.size());
            gates.push_back({id, ControlledNot{c, tq}, id});
        }
    }
    return GateLibrary(num_qubits, std::move(gates));
}

void validate_key(const GateLibrary& library, const NetworkKey& key) {
    if (key.library_fingerprint != library.fingerprint()) {
        throw KeyError("key fingerprint " + format_fingerprint(key.library_fingerprint) +
                       " does not match library " + format_fingerprint(library.fingerprint()));
    }
    if (key.sequence.empty()) throw KeyError("key has no gates");
    for (GateId id : key.sequence) {
        if (id >= library.size()) {
            throw KeyError("gate id " + std::to_string(id) + " outside library of size " +
                           std::to_string(library.size()));
        }
    }
}

NetworkKey make_key(const GateLibrary& library, std::vector<GateId> sequence) {
    NetworkKey key{library.fingerprint(), std::move(sequence)};
    validate_key(library, key);
    return key;
}

NetworkKey random_key(const GateLibrary& library, std::size_t length, Rng& rng,
                      const WarningSink& warn) {
    if (length == 0) throw DomainError("random_key: length must be at least 1");
    const auto k = static_cast<std::size_t>(library.num_qubits());
    if (warn && length < k * k) {
        warn("network length " + std::to_string(length) + " is below K^2 = " +
             std::to_string(k * k) + "; qubits may not all be mixed");
    }
    NetworkKey key{library.fingerprint(), {}};
    key.sequence.reserve(length);
    for (std::size_t i = 0; i < length; ++i) {
        key.sequence.push_back(static_cast<GateId>(uniform_below(rng, library.size())));
    }
    return key;
}

void apply_gate(PureState& state, const GateSpec& gate) {
    if (const auto* s = std::get_if<SingleQubitGate>(&gate.kind)) {
        state.apply_single_qubit(s->target, s->matrix);
    } else {
        const auto& c = std::get<ControlledNot>(gate.kind);
        state.apply_controlled_not(c.control, c.target);
    }
}

void apply_network_in_place(PureState& state, const GateLibrary& library, const NetworkKey& key) {
    validate_key(library, key);
    if (state.num_qubits() != library.num_qubits()) {
        throw DomainError("state has " + std::to_string(state.num_qubits()) +
                          " qubits, library expects " + std::to_string(library.num_qubits()));
    }
    for (GateId id : key.sequence) apply_gate(state, library[id]);
}

PureState apply_network(const PureState& state, const GateLibrary& library, const NetworkKey& key) {
    PureState out = state;
    apply_network_in_place(out, library, key);
    return out;
}

NetworkKey inverse_key(const GateLibrary& library, const NetworkKey& key) {
    validate_key(library, key);
    NetworkKey inv{key.library_fingerprint, {}};
    inv.sequence.reserve(key.sequence.size());
    for (auto it = key.sequence.rbegin(); it != key.sequence.rend(); ++it) {
        inv.sequence.push_back(library[*it].inverse_id);
    }
    return inv;
}

NetworkKey concat(const NetworkKey& first, const NetworkKey& second) {
    if (first.library_fingerprint != second.library_fingerprint) {
        throw KeyError("cannot concatenate keys from different libraries");
    }
    NetworkKey out = first;
    out.sequence.insert(out.sequence.end(), second.sequence.begin(), second.sequence.end());
    return out;
}

ComplexMatrix network_to_matrix(const GateLibrary& library, const NetworkKey& key,
                                int max_qubits) {
    const int k = library.num_qubits();
    if (k > max_qubits) {
        throw ResourceError("network_to_matrix: K=" + std::to_string(k) + " exceeds dense cap " +
                            std::to_string(max_qubits));
    }
    validate_key(library, key);
    const std::size_t n = qstate::dimension(k);
    ComplexMatrix u(n);
    for (std::size_t col = 0; col < n; ++col) {
        PureState s = qstate::basis_state(col, k);
        apply_network_in_place(s, library, key);
        for (std::size_t row = 0; row < n; ++row) u(row, col) = s[row];
    }
    return u;
}

// ---------------------------------------------------------------------------
// Key codec

int id_width(std::size_t library_size) {
    if (library_size == 0) throw DomainError("empty library");
    return static_cast<int>(std::bit_width(library_size - 1));
}

namespace {

void push_bits(BitString& out, std::uint64_t value, int width) {
    for (int b = width - 1; b >= 0; --b) out.push_back((value >> b) & 1U);
}

std::uint64_t read_bits(const BitString& in, std::size_t& pos, int width) {
    if (pos + static_cast<std::size_t>(width) > in.size()) {
        throw FormatError("serialized key truncated at bit " + std::to_string(pos));
    }
    std::uint64_t v = 0;
    for (int b = 0; b < width; ++b) v = (v << 1) | (in[pos++] ? 1U : 0U);
    return v;
}

}  // namespace

BitString serialize_key(const GateLibrary& library, const NetworkKey& key) {
    validate_key(library, key);
    if (key.sequence.size() > 0xFFFF || library.size() > 0xFFFF) {
        throw FormatError("key or library too large for 16-bit header fields");
    }
    const int w = id_width(library.size());
    BitString bits;
    bits.reserve(32 + key.sequence.size() * static_cast<std::size_t>(w));
    push_bits(bits, key.sequence.size(), 16);
    push_bits(bits, library.size(), 16);
    for (GateId id : key.sequence) push_bits(bits, id, w);
    return bits;
}

NetworkKey deserialize_key(const GateLibrary& library, const BitString& bits) {
    std::size_t pos = 0;
    const auto m = read_bits(bits, pos, 16);
    const auto l = read_bits(bits, pos, 16);
    if (l != library.size()) {
        throw FormatError("serialized key is for L=" + std::to_string(l) + ", library has L=" +
                          std::to_string(library.size()));
    }
    if (m == 0) throw FormatError("serialized key has M=0");
    const int w = id_width(library.size());
    if (bits.size() != 32 + m * static_cast<std::size_t>(w)) {
        throw FormatError("serialized key has " + std::to_string(bits.size()) +
                          " bits, header implies " + std::to_string(32 + m * w));
    }
    NetworkKey key{library.fingerprint(), {}};
    key.sequence.reserve(m);
    for (std::uint64_t i = 0; i < m; ++i) {
        const auto id = read_bits(bits, pos, w);
        if (id >= l) throw FormatError("gate id " + std::to_string(id) + " out of range");
        key.sequence.push_back(static_cast<GateId>(id));
    }
    return key;
}

std::string to_hex(const BitString& bits) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve((bits.size() + 3) / 4);
    for (std::size_t i = 0; i < bits.size(); i += 4) {
        unsigned nibble = 0;
        for (std::size_t j = 0; j < 4; ++j) {
            nibble <<= 1;
            if (i + j < bits.size() && bits[i + j]) nibble |= 1U;
        }
        out.push_back(kDigits[nibble]);
    }
    return out;
}

BitString from_hex(std::string_view hex, std::size_t num_bits) {
    if (hex.size() != (num_bits + 3) / 4) {
        throw FormatError("hex payload has " + std::to_string(hex.size()) + " digits, expected " +
                          std::to_string((num_bits + 3) / 4));
    }
    BitString bits;
    bits.reserve(hex.size() * 4);
    for (char ch : hex) {
        unsigned v;
        if (ch >= '0' && ch <= '9') v = ch - '0';
        else if (ch >= 'a' && ch <= 'f') v = ch - 'a' + 10;
        else if (ch >= 'A' && ch <= 'F') v = ch - 'A' + 10;
        else throw FormatError(std::string("invalid hex digit '") + ch + "'");
        for (int b = 3; b >= 0; --b) bits.push_back((v >> b) & 1U);
    }
    for (std::size_t i = num_bits; i < bits.size(); ++i) {
        if (bits[i]) throw FormatError("nonzero padding bits in hex payload");
    }
    bits.resize(num_bits);
    return bits;
}

std::string format_fingerprint(std::uint64_t fp) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fp));
    return buf;
}

std::string write_key_file(const GateLibrary& library, const NetworkKey& key) {
    const BitString bits = serialize_key(library, key);
    std::ostringstream os;
    os << "qucipher-key v1 K=" << library.num_qubits() << " L=" << library.size()
       << " M=" << key.sequence.size() << " fp=" << format_fingerprint(library.fingerprint())
       << "\n"
       << to_hex(bits) << "\n";
    return os.str();
}

NetworkKey read_key_file(const GateLibrary& library, std::string_view text) {
    std::istringstream is{std::string(text)};
    std::string header;
    std::string payload;
    if (!std::getline(is, header) || !std::getline(is, payload)) {
        throw FormatError("key file must contain a header line and a payload line");
    }
    if (!payload.empty() && payload.back() == '\r') payload.pop_back();

    int k = 0;
    unsigned long long l = 0, m = 0, fp = 0;
    int consumed = 0;
    if (std::sscanf(header.c_str(), "qucipher-key v1 K=%d L=%llu M=%llu fp=%16llx%n", &k, &l, &m,
                    &fp, &consumed) != 4 ||
        header.find_first_not_of(" \r", static_cast<std::size_t>(consumed)) != std::string::npos) {
        throw FormatError("malformed key file header: " + header);
    }
    if (k != library.num_qubits() || l != library.size()) {
        throw FormatError("key file is for K=" + std::to_string(k) + " L=" + std::to_string(l));
    }
    if (fp != library.fingerprint()) {
        throw KeyError("key file fingerprint does not match the gate library");
    }
    const std::size_t num_bits = 32 + m * static_cast<std::size_t>(id_width(library.size()));
    NetworkKey key = deserialize_key(library, from_hex(payload, num_bits));
    if (key.sequence.size() != m) throw FormatError("header M disagrees with payload");
    return key;
}

}  // namespace qucipher::gates
