#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace qucipher {

using Complex = std::complex<double>;
using Rng = std::mt19937_64;
using BlockValue = std::uint64_t;

// Maximum register size supported by the dense representation.
inline constexpr int kMaxQubits = 16;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Argument outside the operation's domain (index range, dimension mismatch).
struct DomainError : Error {
    using Error::Error;
};

/// Input violates a structural requirement (non-unitary, non-stochastic).
struct ValidationError : Error {
    using Error::Error;
};

/// Key does not belong to the library it is used with.
struct KeyError : Error {
    using Error::Error;
};

/// Malformed serialized key or key file.
struct FormatError : Error {
    using Error::Error;
};

/// Configured size cap exceeded.
struct ResourceError : Error {
    using Error::Error;
};

/// A message stream ran dry before the operation completed.
struct BudgetError : Error {
    BudgetError(const std::string& what, std::uint64_t consumed)
        : Error(what), consumed_(consumed) {}
    std::uint64_t consumed() const noexcept { return consumed_; }

private:
    std::uint64_t consumed_;
};

/// Attempt to consume a channel message twice (no-cloning contract).
struct ContractViolation : Error {
    using Error::Error;
};

struct ConvergenceError : Error {
    ConvergenceError(const std::string& what, double residual)
        : Error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

struct DegeneracyError : Error {
    DegeneracyError(const std::string& what, double gap)
        : Error(what), gap_(gap) {}
    double gap() const noexcept { return gap_; }

private:
    double gap_;
};

// Uniform double in [0, 1) from the top 53 bits. Independent of the
// standard library's distribution implementation, so streams are
// reproducible across toolchains.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n) by rejection sampling.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
    if (n == 0) throw DomainError("uniform_below: empty range");
    const std::uint64_t threshold = (0 - n) % n;
    std::uint64_t x;
    do {
        x = rng();
    } while (x < threshold);
    return x % n;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent stream derived from (seed, index). Used for per-sample and
/// per-seed substreams so work can be reordered without changing results.
inline Rng substream(std::uint64_t seed, std::uint64_t index) {
    return Rng(splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL)));
}

}  // namespace qucipher
