#pragma once

// Monte-Carlo state tomography from intercepted copies and reassembly of the
// secret unitary from the reconstructed density matrices.
//
// Each spin contributes the kernel 3·P(n, m) − I; averaged over uniformly
// random axes and the measured outcome it reproduces ρ exactly, because
// ∫ n_i n_j dΩ/4π = δ_ij/3.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "qucipher/common.hpp"
#include "qucipher/protocol.hpp"
#include "qucipher/qstate.hpp"

namespace qucipher::tomography {

using BigInt = boost::multiprecision::cpp_int;

enum class Estimator {
    SingleShot,  // one message per direction set
    Frequency,   // R messages per direction set estimate the outcome distribution
};

std::string_view to_string(Estimator e);

struct TomographyConfig {
    std::uint64_t num_samples = 1000;  // N, number of direction sets
    Estimator estimator = Estimator::SingleShot;
    std::uint64_t repeats = 1;  // R, frequency mode only
    std::uint64_t seed = 0;
};

struct ReconstructionResult {
    qstate::DensityMatrix rho_calc;  // raw average, not projected onto physical states
    std::optional<double> alpha;
    std::uint64_t samples_used = 0;  // messages consumed
};

struct EstimateParams {
    double const_factor = 1.0;  // prefactor of the per-state interception budget
    double c_factor = 1.0;      // prefactor of the whole-unitary budget C·2^{2K}
};

/// 3·P(n, m) − I
qstate::ComplexMatrix kernel_single(const qstate::SpinDirection& n, qstate::Spin m);

/// ⊗_i kernel_single(n_i, m_i), qubit 0 leftmost.
qstate::ComplexMatrix kernel_product(const qstate::OutcomeRecord& record);

/// Averages the kernel estimator over N direction sets drawn from the
/// intercepted stream. Directions and measurement noise for sample i come
/// from substream(seed, i). Throws BudgetError when the stream runs dry.
/// If `truth` is given, alpha is filled in.
ReconstructionResult reconstruct_density(protocol::InterceptStream& source, int num_qubits,
                                         const TomographyConfig& config,
                                         const qstate::DensityMatrix* truth = nullptr);

/// Deterministic midpoint quadrature of Σ_m ∫ p(n, m) K(n, m) dΩ/4π on a
/// grid×grid (cos θ, φ) product grid per qubit.
qstate::DensityMatrix quadrature_reconstruct(const qstate::DensityMatrix& rho, int grid = 100);

/// |ρ_calc − ρ_true| / |ρ_true| in the Frobenius norm.
double relative_error(const qstate::DensityMatrix& rho_calc, const qstate::DensityMatrix& rho_true);

/// ceil(Const · α⁻² · 2^K). Accepts K = 0 and 0 < α ≤ 1.
BigInt required_messages(double alpha_target, int num_qubits, const EstimateParams& params);

struct AssembledUnitary {
    qstate::ComplexMatrix u;         // column k: dominant eigenvector of sym(ρ_k)
    double unitarity_defect = 0.0;   // |U†U − I| (Frobenius)
    std::vector<double> eigenvalues;  // top eigenvalue per column
};

/// Throws DegeneracyError naming the offending k.
AssembledUnitary assemble_unitary(std::span<const ReconstructionResult> rhos, int num_qubits);

/// min_k |⟨true_k|assembled_k⟩|², insensitive to per-column phase.
double min_column_fidelity(const qstate::ComplexMatrix& assembled, const qstate::ComplexMatrix& truth);

struct ClassicalCost {
    BigInt operations;  // 2^{3K}
    BigInt data;        // 2^{2K} complex numbers
    BigInt gates;       // ~2^{2K}
};

ClassicalCost classical_cost_estimates(int num_qubits);

/// {"K","N","estimator","alpha","unitarity_defect","seed"}
std::string reconstruction_report_json(int num_qubits, const TomographyConfig& config,
                                       std::optional<double> alpha,
                                       std::optional<double> unitarity_defect);

}  // namespace qucipher::tomography
