#include "qucipher/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <json.hpp>

namespace qucipher::attacks {

using gates::GateLibrary;
using gates::NetworkKey;
using qstate::PureState;

BigInt keyspace_size(std::uint64_t library_size, std::uint64_t length) {
    if (library_size < 1 || length < 1) throw DomainError("keyspace_size: L and M must be >= 1");
    return boost::multiprecision::pow(BigInt(library_size), static_cast<unsigned>(length));
}

double acceptance_probability(const GateLibrary& library, const NetworkKey& true_key,
                              const NetworkKey& candidate, BlockValue k) {
    gates::validate_key(library, true_key);
    gates::validate_key(library, candidate);
    PureState s = qstate::basis_state(k, library.num_qubits());
    gates::apply_network_in_place(s, library, true_key);
    gates::apply_network_in_place(s, library, gates::inverse_key(library, candidate));
    return std::norm(s[k]);
}

bool decodes_equivalently(const GateLibrary& library, const NetworkKey& true_key,
                          const NetworkKey& candidate) {
    const std::size_t n = qstate::dimension(library.num_qubits());
    for (BlockValue k = 0; k < n; ++k) {
        if (std::abs(acceptance_probability(library, true_key, candidate, k) - 1.0) > 1e-9) {
            return false;
        }
    }
    return true;
}

std::string_view to_string(CandidateStatus s) {
    switch (s) {
        case CandidateStatus::Alive: return "alive";
        case CandidateStatus::Rejected: return "rejected";
        case CandidateStatus::Accepted: return "accepted";
        case CandidateStatus::Inconclusive: return "inconclusive";
    }
    return "alive";
}

namespace {

CandidateTest run_sequential(const GateLibrary& library, const NetworkKey& candidate,
                             const NetworkKey& candidate_inverse, protocol::InterceptStream& oracle,
                             std::uint64_t accept_after, std::uint64_t max_measurements, Rng& rng) {
    if (accept_after < 1) throw DomainError("sequential_test: accept_after must be >= 1");
    CandidateTest t{candidate, 0, CandidateStatus::Alive};
    while (t.status == CandidateStatus::Alive) {
        if (t.measurements >= max_measurements) {
            t.status = CandidateStatus::Inconclusive;
            break;
        }
        auto in = oracle.next();
        if (!in) {
            t.status = CandidateStatus::Inconclusive;
            break;
        }
        if (!in->known_plaintext) {
            throw DomainError("sequential_test needs a known-plaintext oracle");
        }
        PureState s = in->message.consume();
        gates::apply_network_in_place(s, library, candidate_inverse);
        const BlockValue decoded = protocol::measure_computational(s, rng);
        ++t.measurements;
        if (decoded != *in->known_plaintext) {
            t.status = CandidateStatus::Rejected;
        } else if (t.measurements >= accept_after) {
            t.status = CandidateStatus::Accepted;
        }
    }
    return t;
}

}  // namespace

CandidateTest sequential_test(const GateLibrary& library, const NetworkKey& candidate,
                              protocol::InterceptStream& oracle, std::uint64_t accept_after,
                              std::uint64_t max_measurements, Rng& rng) {
    return run_sequential(library, candidate, gates::inverse_key(library, candidate), oracle,
                          accept_after, max_measurements, rng);
}

// ---------------------------------------------------------------------------

CandidateEnumerator::CandidateEnumerator(const GateLibrary& library, std::size_t length,
                                         std::uint64_t cap)
    : fingerprint_(library.fingerprint()),
      radix_(library.size()),
      digits_(length, 0),
      total_(keyspace_size(library.size(), length)) {
    if (total_ > cap) {
        throw ResourceError("keyspace L^M = " + total_.str() + " exceeds enumeration cap " +
                            std::to_string(cap) + "; reduce K or M");
    }
}

bool CandidateEnumerator::next(NetworkKey& out) {
    if (done_) return false;
    out = NetworkKey{fingerprint_, digits_};
    // Odometer increment, last position fastest.
    std::size_t i = digits_.size();
    while (i > 0) {
        --i;
        if (++digits_[i] < radix_) return true;
        digits_[i] = 0;
    }
    done_ = true;
    return true;
}

AttackResult guess_attack(const GateLibrary& library, std::size_t length,
                          protocol::InterceptStream& oracle, std::uint64_t accept_after, Rng& rng,
                          std::uint64_t cap) {
    CandidateEnumerator candidates(library, length, cap);
    AttackResult result;
    result.keyspace = candidates.total();
    const std::uint64_t start = oracle.consumed();

    NetworkKey candidate;
    while (candidates.next(candidate)) {
        ++result.candidates_tried;
        const CandidateTest t = run_sequential(library, candidate, gates::inverse_key(library, candidate),
                                               oracle, accept_after, UINT64_MAX, rng);
        if (t.status == CandidateStatus::Accepted) {
            result.found = true;
            result.key = candidate;
            break;
        }
        if (t.status == CandidateStatus::Inconclusive) {
            result.failure = "message budget exhausted";
            break;
        }
    }
    if (!result.found && result.failure.empty()) result.failure = "keyspace exhausted";
    result.messages_consumed = oracle.consumed() - start;
    return result;
}

// ---------------------------------------------------------------------------

double Correlator::total() const { return std::accumulate(entries.begin(), entries.end(), 0.0); }

Correlator empirical_correlator(std::span<const BlockValue> sequence, std::size_t lag,
                                std::size_t num_blocks) {
    if (sequence.size() <= lag) {
        throw DomainError("empirical_correlator: sequence of length " +
                          std::to_string(sequence.size()) + " too short for lag " +
                          std::to_string(lag));
    }
    if (num_blocks == 0) throw DomainError("empirical_correlator: no blocks");
    Correlator c{lag, num_blocks, std::vector<double>(num_blocks * num_blocks, 0.0)};
    const std::size_t pairs = sequence.size() - lag;
    std::vector<std::uint64_t> counts(num_blocks * num_blocks, 0);
    for (std::size_t x = 0; x < pairs; ++x) {
        const BlockValue k = sequence[x];
        const BlockValue l = sequence[x + lag];
        if (k >= num_blocks || l >= num_blocks) throw DomainError("block value out of range");
        ++counts[k * num_blocks + l];
    }
    for (std::size_t i = 0; i < counts.size(); ++i) {
        c.entries[i] = static_cast<double>(counts[i]) / static_cast<double>(pairs);
    }
    return c;
}

double frobenius_distance(const Correlator& a, const Correlator& b) {
    if (a.num_blocks != b.num_blocks) throw DomainError("correlator dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
        const double d = a.entries[i] - b.entries[i];
        s += d * d;
    }
    return std::sqrt(s);
}

std::uint64_t symmetric_relabelings(std::span<const Correlator> known, double tolerance) {
    if (known.empty()) return 0;
    const std::size_t n = known.front().num_blocks;
    if (n > 8) throw ResourceError("symmetry search limited to 8 block values");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::uint64_t count = 0;
    while (std::next_permutation(perm.begin(), perm.end())) {
        bool invariant = true;
        for (const auto& xi : known) {
            for (std::size_t k = 0; k < n && invariant; ++k)
                for (std::size_t l = 0; l < n && invariant; ++l)
                    if (std::abs(xi(perm[k], perm[l]) - xi(k, l)) > tolerance) invariant = false;
            if (!invariant) break;
        }
        if (invariant) ++count;
    }
    return count;
}

std::optional<double> correlation_statistic(const GateLibrary& library, const NetworkKey& candidate,
                                            protocol::InterceptStream& stream,
                                            std::span<const Correlator> known, std::size_t window,
                                            Rng& rng) {
    const NetworkKey inverse = gates::inverse_key(library, candidate);
    const std::size_t blocks = qstate::dimension(library.num_qubits());
    std::vector<BlockValue> decoded;
    decoded.reserve(window);
    for (std::size_t i = 0; i < window; ++i) {
        auto in = stream.next();
        if (!in) return std::nullopt;
        // Each message is destroyed here whether or not the candidate is right.
        PureState s = in->message.consume();
        gates::apply_network_in_place(s, library, inverse);
        decoded.push_back(protocol::measure_computational(s, rng));
    }
    double stat = 0.0;
    for (const auto& xi : known) {
        if (xi.num_blocks != blocks) throw DomainError("known correlator has wrong block count");
        stat += frobenius_distance(empirical_correlator(decoded, xi.lag, blocks), xi);
    }
    return stat;
}

double percentile(std::vector<double> values, double q) {
    if (values.empty() || !(q > 0.0 && q <= 1.0)) throw DomainError("percentile: bad input");
    std::sort(values.begin(), values.end());
    const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
    return values[std::max<std::size_t>(rank, 1) - 1];
}

AttackResult correlation_attack(const GateLibrary& library, std::size_t length,
                                protocol::InterceptStream& stream,
                                std::span<const Correlator> known, std::size_t window,
                                double threshold, Rng& rng, std::uint64_t cap) {
    if (known.empty()) throw DomainError("correlation_attack needs at least one known correlator");
    CandidateEnumerator candidates(library, length, cap);
    AttackResult result;
    result.keyspace = candidates.total();
    if (known.front().num_blocks <= 8) result.symmetric_relabelings = symmetric_relabelings(known);
    const std::uint64_t start = stream.consumed();

    NetworkKey candidate;
    while (candidates.next(candidate)) {
        ++result.candidates_tried;
        const auto stat = correlation_statistic(library, candidate, stream, known, window, rng);
        if (!stat) {
            result.failure = "intercepted stream exhausted";
            break;
        }
        if (*stat <= threshold) {
            result.found = true;
            result.key = candidate;
            break;
        }
    }
    if (!result.found && result.failure.empty()) result.failure = "keyspace exhausted";
    result.messages_consumed = stream.consumed() - start;
    return result;
}

// ---------------------------------------------------------------------------

UniformSource::UniformSource(int num_qubits, std::uint64_t seed)
    : num_blocks_(qstate::dimension(num_qubits)), rng_(seed) {}

BlockValue UniformSource::next() { return uniform_below(rng_, num_blocks_); }

FixedSequenceSource::FixedSequenceSource(std::vector<BlockValue> sequence)
    : sequence_(std::move(sequence)) {
    if (sequence_.empty()) throw DomainError("fixed plaintext sequence is empty");
}

BlockValue FixedSequenceSource::next() {
    const BlockValue v = sequence_[pos_];
    pos_ = (pos_ + 1) % sequence_.size();
    return v;
}

TransitionMatrix TransitionMatrix::uniform(std::size_t n) {
    return {n, std::vector<double>(n * n, 1.0 / static_cast<double>(n))};
}

TransitionMatrix TransitionMatrix::identity(std::size_t n) {
    TransitionMatrix t{n, std::vector<double>(n * n, 0.0)};
    for (std::size_t i = 0; i < n; ++i) t.p[i * n + i] = 1.0;
    return t;
}

MarkovSource::MarkovSource(TransitionMatrix transitions, std::uint64_t seed)
    : t_(std::move(transitions)), rng_(seed) {
    const std::size_t n = t_.num_blocks;
    if (n == 0 || t_.p.size() != n * n) throw ValidationError("transition matrix has wrong shape");
    for (std::size_t k = 0; k < n; ++k) {
        double row = 0.0;
        for (std::size_t l = 0; l < n; ++l) {
            const double v = t_(k, l);
            if (!(v >= 0.0) || v > 1.0) {
                throw ValidationError("transition probability out of [0, 1] in row " +
                                      std::to_string(k));
            }
            row += v;
        }
        if (std::abs(row - 1.0) > 1e-9) {
            throw ValidationError("transition row " + std::to_string(k) + " sums to " +
                                  std::to_string(row));
        }
    }
    // Stationary distribution of the lazy chain (I + T)/2, which shares T's
    // stationary vectors and is aperiodic.
    pi_.assign(n, 1.0 / static_cast<double>(n));
    for (int it = 0; it < 1'000'000; ++it) {
        std::vector<double> next(n, 0.0);
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t l = 0; l < n; ++l) next[l] += pi_[k] * t_(k, l);
        double change = 0.0;
        for (std::size_t l = 0; l < n; ++l) {
            next[l] = 0.5 * (next[l] + pi_[l]);
            change += std::abs(next[l] - pi_[l]);
        }
        pi_ = std::move(next);
        if (change < 1e-15) break;
    }
}

std::size_t MarkovSource::sample(std::span<const double> dist) {
    const double u = uniform01(rng_);
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        if (dist[i] <= 0.0) continue;
        acc += dist[i];
        last = i;
        if (u < acc) return i;
    }
    return last;
}

BlockValue MarkovSource::next() {
    const std::size_t n = t_.num_blocks;
    if (!current_) {
        current_ = sample(pi_);
    } else {
        current_ = sample(std::span<const double>(t_.p).subspan(*current_ * n, n));
    }
    return *current_;
}

Correlator MarkovSource::exact_correlator(std::size_t lag) const {
    const std::size_t n = t_.num_blocks;
    std::vector<double> power(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) power[i * n + i] = 1.0;
    for (std::size_t step = 0; step < lag; ++step) {
        std::vector<double> next(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t m = 0; m < n; ++m)
                for (std::size_t j = 0; j < n; ++j) next[i * n + j] += power[i * n + m] * t_(m, j);
        power = std::move(next);
    }
    Correlator c{lag, n, std::vector<double>(n * n)};
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = 0; l < n; ++l) c.entries[k * n + l] = pi_[k] * power[k * n + l];
    return c;
}

MarkovSource markov_source(TransitionMatrix transitions, std::uint64_t seed) {
    return MarkovSource(std::move(transitions), seed);
}

// ---------------------------------------------------------------------------

std::uint64_t distinct_action_classes(const GateLibrary& library, std::size_t length,
                                      std::uint64_t cap) {
    if (library.num_qubits() > 2) throw ResourceError("distinct_action_classes is limited to K <= 2");
    CandidateEnumerator candidates(library, length, cap);
    std::set<std::vector<long long>> seen;
    NetworkKey key;
    while (candidates.next(key)) {
        qstate::ComplexMatrix u = gates::network_to_matrix(library, key);
        Complex phase = 1.0;
        for (const auto& a : u.data()) {
            if (std::abs(a) > 1e-6) {
                phase = std::conj(a) / std::abs(a);
                break;
            }
        }
        std::vector<long long> sig;
        sig.reserve(2 * u.data().size());
        for (const auto& a : u.data()) {
            const Complex z = a * phase;
            sig.push_back(std::llround(z.real() * 1e7));
            sig.push_back(std::llround(z.imag() * 1e7));
        }
        seen.insert(std::move(sig));
    }
    return seen.size();
}

std::string attack_report_json(const AttackResult& result, std::string_view mode,
                               std::uint64_t seed) {
    nlohmann::ordered_json j;
    j["mode"] = mode;
    j["found"] = result.found;
    j["candidates"] = result.candidates_tried;
    j["messages"] = result.messages_consumed;
    j["keyspace"] = result.keyspace.str();
    j["seed"] = seed;
    return j.dump();
}

}  // namespace qucipher::attacks
