#pragma once

// Dense statevector and density-matrix kernel.
//
// Qubit i corresponds to bit (K-1-i) of the basis index, so basis_state(k)
// reads the binary record of k left to right. Bit value 0 is spin +1/2
// along Z.

#include <array>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "qucipher/common.hpp"

namespace qucipher::qstate {

/// Square dense complex matrix, row-major.
class ComplexMatrix {
public:
    ComplexMatrix() = default;
    explicit ComplexMatrix(std::size_t dim) : dim_(dim), data_(dim * dim) {}

    static ComplexMatrix identity(std::size_t dim);

    std::size_t dim() const noexcept { return dim_; }
    Complex& operator()(std::size_t r, std::size_t c) { return data_[r * dim_ + c]; }
    const Complex& operator()(std::size_t r, std::size_t c) const { return data_[r * dim_ + c]; }
    std::span<const Complex> data() const noexcept { return data_; }
    std::span<Complex> data() noexcept { return data_; }

    ComplexMatrix adjoint() const;
    ComplexMatrix operator*(const ComplexMatrix& rhs) const;
    std::vector<Complex> operator*(std::span<const Complex> v) const;
    ComplexMatrix& operator+=(const ComplexMatrix& rhs);
    ComplexMatrix& operator-=(const ComplexMatrix& rhs);
    ComplexMatrix& operator*=(Complex s);

    Complex trace() const;
    /// max |A - A†| elementwise.
    double hermiticity_defect() const;
    /// max |A A† - I| elementwise.
    double unitarity_defect() const;
    /// A ⊗ B
    ComplexMatrix kron(const ComplexMatrix& rhs) const;

private:
    std::size_t dim_ = 0;
    std::vector<Complex> data_;
};

/// 2x2 operator acting on one qubit, row-major {m00, m01, m10, m11}.
struct Matrix2 {
    std::array<Complex, 4> m{};

    Complex operator()(int r, int c) const { return m[2 * r + c]; }
    Matrix2 operator*(const Matrix2& rhs) const;
    Matrix2 adjoint() const;
    ComplexMatrix dense() const;
};

inline constexpr double kNormTolerance = 1e-9;

/// Normalized amplitude vector over 2^K basis states.
class PureState {
public:
    /// Validates length 2^K and unit norm within 1e-9.
    PureState(int num_qubits, std::vector<Complex> amplitudes);

    /// Rescales to unit norm. Throws DomainError for a zero vector.
    static PureState normalized(int num_qubits, std::vector<Complex> amplitudes);

    int num_qubits() const noexcept { return num_qubits_; }
    std::size_t dim() const noexcept { return amplitudes_.size(); }
    std::span<const Complex> amplitudes() const noexcept { return amplitudes_; }
    Complex operator[](std::size_t i) const { return amplitudes_[i]; }
    double norm() const;

    // In-place kernels used by the gate network. Each is O(2^K) and never
    // forms the full matrix.
    void apply_single_qubit(int target, const Matrix2& gate);
    void apply_controlled_not(int control, int target);

    friend bool operator==(const PureState&, const PureState&) = default;

private:
    PureState() = default;
    std::size_t stride(int qubit) const { return std::size_t{1} << (num_qubits_ - 1 - qubit); }

    int num_qubits_ = 0;
    std::vector<Complex> amplitudes_;
};

std::size_t dimension(int num_qubits);

struct DensityMatrix {
    int num_qubits = 0;
    ComplexMatrix entries;

    DensityMatrix() = default;
    DensityMatrix(int k, ComplexMatrix m);

    /// (ρ + ρ†)/2
    DensityMatrix symmetrized() const;
};

/// Spin measurement axis in spherical coordinates.
struct SpinDirection {
    double theta = 0.0;  // [0, π]
    double phi = 0.0;    // [0, 2π)

    static SpinDirection plus_z() { return {0.0, 0.0}; }
    static SpinDirection plus_x();
    static SpinDirection plus_y();
    /// From a Cartesian vector; throws DomainError unless |v| = 1 within 1e-12.
    static SpinDirection from_vector(double x, double y, double z);
    static SpinDirection random(Rng& rng);

    std::array<double, 3> unit_vector() const;
};

/// Spin projection m along the measured axis.
enum class Spin : std::uint8_t { Up, Down };

inline double spin_value(Spin s) { return s == Spin::Up ? 0.5 : -0.5; }

struct OutcomeRecord {
    std::vector<SpinDirection> directions;
    std::vector<Spin> outcomes;
};

/// P(n, m) = (I + 2m n·σ)/2
Matrix2 spin_projector(const SpinDirection& n, Spin m);

PureState basis_state(BlockValue k, int num_qubits);

PureState apply_unitary(const PureState& state, const ComplexMatrix& u);

struct Measurement {
    OutcomeRecord record;
    PureState collapsed;
};

/// Samples one outcome per qubit from the joint projector distribution and
/// returns the normalized post-measurement state.
Measurement measure_spins(const PureState& state, std::span<const SpinDirection> directions,
                          Rng& rng);

double outcome_probability(const PureState& state, const OutcomeRecord& record);

double frobenius_distance(const DensityMatrix& a, const DensityMatrix& b);
double frobenius_norm(const DensityMatrix& a);
double frobenius_norm(const ComplexMatrix& a);

DensityMatrix density_from_pure(const PureState& state);

/// |⟨a|b⟩|²
double fidelity(const PureState& a, const PureState& b);

struct Eigenpair {
    double eigenvalue;
    PureState vector;
    /// λ1 minus the largest eigenvalue of the deflated matrix.
    double gap;
    int iterations;
};

struct PowerIterationOptions {
    int max_iterations = 10000;
    double residual_tolerance = 1e-8;
    double degeneracy_gap = 1e-6;
    std::uint64_t seed = 0x5eed;
};

/// Largest eigenpair of a Hermitian matrix by shifted power iteration.
/// Returned vector is phase-gauged: its first component with magnitude above
/// 1e-6 is real and positive.
Eigenpair top_eigenvector(const DensityMatrix& rho, const PowerIterationOptions& opts = {});

/// Multiplies by a global phase so the first component above 1e-6 in
/// magnitude is real positive.
std::vector<Complex> phase_gauge(std::vector<Complex> v);

}  // namespace qucipher::qstate
