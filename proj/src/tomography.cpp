#include "qucipher/tomography.hpp"

#include <cmath>
#include <numbers>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <json.hpp>

namespace qucipher::tomography {

using qstate::ComplexMatrix;
using qstate::DensityMatrix;
using qstate::Spin;
using qstate::SpinDirection;

namespace {

constexpr std::uint64_t kChunk = 1024;

}  // namespace

std::string_view to_string(Estimator e) {
    return e == Estimator::SingleShot ? "single_shot" : "frequency";
}

ComplexMatrix kernel_single(const SpinDirection& n, Spin m) {
    const qstate::Matrix2 p = qstate::spin_projector(n, m);
    ComplexMatrix k(2);
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) k(r, c) = 3.0 * p(r, c) - (r == c ? 1.0 : 0.0);
    return k;
}

ComplexMatrix kernel_product(const qstate::OutcomeRecord& record) {
    if (record.directions.empty() || record.directions.size() != record.outcomes.size()) {
        throw DomainError("kernel_product: malformed outcome record");
    }
    ComplexMatrix out = kernel_single(record.directions[0], record.outcomes[0]);
    for (std::size_t q = 1; q < record.directions.size(); ++q) {
        out = out.kron(kernel_single(record.directions[q], record.outcomes[q]));
    }
    return out;
}

ReconstructionResult reconstruct_density(protocol::InterceptStream& source, int num_qubits,
                                         const TomographyConfig& config,
                                         const DensityMatrix* truth) {
    if (config.num_samples == 0) throw DomainError("tomography needs at least one sample");
    if (config.estimator == Estimator::Frequency && config.repeats == 0) {
        throw DomainError("frequency estimator needs at least one repeat");
    }
    const std::size_t dim = qstate::dimension(num_qubits);
    const std::uint64_t per_set = config.estimator == Estimator::Frequency ? config.repeats : 1;

    ComplexMatrix total(dim);
    ComplexMatrix chunk(dim);
    std::uint64_t used = 0;
    std::vector<SpinDirection> dirs(num_qubits);

    for (std::uint64_t i = 0; i < config.num_samples; ++i) {
        Rng rng = substream(config.seed, i);
        for (auto& d : dirs) d = SpinDirection::random(rng);
        for (std::uint64_t r = 0; r < per_set; ++r) {
            auto intercepted = source.next();
            if (!intercepted) {
                throw BudgetError("intercepted-message source exhausted after " +
                                      std::to_string(used) + " messages (sample " +
                                      std::to_string(i) + " of " +
                                      std::to_string(config.num_samples) + ")",
                                  used);
            }
            ++used;
            const qstate::PureState s = intercepted->message.consume();
            if (s.num_qubits() != num_qubits) throw DomainError("intercepted state has wrong size");
            const auto m = qstate::measure_spins(s, dirs, rng);
            ComplexMatrix contribution = kernel_product(m.record);
            if (per_set > 1) contribution *= 1.0 / static_cast<double>(per_set);
            chunk += contribution;
        }
        if ((i + 1) % kChunk == 0) {
            total += chunk;
            chunk = ComplexMatrix(dim);
        }
    }
    total += chunk;
    total *= 1.0 / static_cast<double>(config.num_samples);

    ReconstructionResult result{DensityMatrix(num_qubits, std::move(total)), std::nullopt, used};
    if (truth != nullptr) result.alpha = relative_error(result.rho_calc, *truth);
    return result;
}

DensityMatrix quadrature_reconstruct(const DensityMatrix& rho, int grid) {
    if (grid < 1) throw DomainError("quadrature grid must be positive");
    // Single-spin reconstruction map Φ evaluated on the matrix units E_ab:
    // Φ(E_ab) = Σ_cells w Σ_m tr(E_ab P(n,m)) K(n,m), with tr(E_ab P) = P_ba.
    ComplexMatrix phi[2][2] = {{ComplexMatrix(2), ComplexMatrix(2)},
                               {ComplexMatrix(2), ComplexMatrix(2)}};
    const double w = 1.0 / (static_cast<double>(grid) * grid);
    for (int i = 0; i < grid; ++i) {
        const double cos_theta = -1.0 + 2.0 * (i + 0.5) / grid;
        const double theta = std::acos(cos_theta);
        for (int j = 0; j < grid; ++j) {
            const SpinDirection n{theta, 2.0 * std::numbers::pi * (j + 0.5) / grid};
            for (Spin m : {Spin::Up, Spin::Down}) {
                const qstate::Matrix2 p = qstate::spin_projector(n, m);
                const ComplexMatrix k = kernel_single(n, m);
                for (int a = 0; a < 2; ++a)
                    for (int b = 0; b < 2; ++b) {
                        ComplexMatrix term = k;
                        term *= w * p(b, a);
                        phi[a][b] += term;
                    }
            }
        }
    }

    const int nq = rho.num_qubits;
    const std::size_t dim = rho.entries.dim();
    auto bit = [nq](std::size_t idx, int q) { return static_cast<int>((idx >> (nq - 1 - q)) & 1U); };
    ComplexMatrix out(dim);
    for (std::size_t a = 0; a < dim; ++a) {
        for (std::size_t b = 0; b < dim; ++b) {
            const Complex coeff = rho.entries(a, b);
            if (coeff == Complex{}) continue;
            for (std::size_t r = 0; r < dim; ++r) {
                for (std::size_t c = 0; c < dim; ++c) {
                    Complex prod = coeff;
                    for (int q = 0; q < nq; ++q) prod *= phi[bit(a, q)][bit(b, q)](bit(r, q), bit(c, q));
                    out(r, c) += prod;
                }
            }
        }
    }
    return {nq, std::move(out)};
}

double relative_error(const DensityMatrix& rho_calc, const DensityMatrix& rho_true) {
    const double norm = qstate::frobenius_norm(rho_true);
    if (!(norm > 0.0)) throw DomainError("relative_error: reference matrix has zero norm");
    return qstate::frobenius_distance(rho_calc, rho_true) / norm;
}

BigInt required_messages(double alpha_target, int num_qubits, const EstimateParams& params) {
    if (!(alpha_target > 0.0 && alpha_target <= 1.0)) {
        throw DomainError("alpha must lie in (0, 1]");
    }
    if (!(params.const_factor > 0.0)) throw DomainError("Const must be positive");
    if (num_qubits < 0) throw DomainError("K must be non-negative");
    using Float = boost::multiprecision::cpp_bin_float_50;
    Float value = Float(params.const_factor) / (Float(alpha_target) * Float(alpha_target));
    value = ldexp(value, num_qubits);
    // Inputs like α = 0.1 are not exact in binary; trim representation error
    // before rounding up.
    value *= Float(1) - Float(1e-12);
    return static_cast<BigInt>(ceil(value));
}

AssembledUnitary assemble_unitary(std::span<const ReconstructionResult> rhos, int num_qubits) {
    const std::size_t dim = qstate::dimension(num_qubits);
    if (rhos.size() != dim) {
        throw DomainError("assemble_unitary needs one reconstruction per basis state (" +
                          std::to_string(dim) + "), got " + std::to_string(rhos.size()));
    }
    AssembledUnitary out{ComplexMatrix(dim), 0.0, {}};
    for (std::size_t k = 0; k < dim; ++k) {
        qstate::Eigenpair e = [&] {
            try {
                return qstate::top_eigenvector(rhos[k].rho_calc.symmetrized());
            } catch (const DegeneracyError& err) {
                throw DegeneracyError("reconstruction for k=" + std::to_string(k) + ": " + err.what(),
                                      err.gap());
            }
        }();
        out.eigenvalues.push_back(e.eigenvalue);
        for (std::size_t r = 0; r < dim; ++r) out.u(r, k) = e.vector[r];
    }
    ComplexMatrix gram = out.u.adjoint() * out.u;
    gram -= ComplexMatrix::identity(dim);
    out.unitarity_defect = qstate::frobenius_norm(gram);
    return out;
}

double min_column_fidelity(const ComplexMatrix& assembled, const ComplexMatrix& truth) {
    if (assembled.dim() != truth.dim()) throw DomainError("min_column_fidelity: dimension mismatch");
    double worst = 1.0;
    for (std::size_t k = 0; k < truth.dim(); ++k) {
        Complex overlap{};
        for (std::size_t r = 0; r < truth.dim(); ++r) overlap += std::conj(truth(r, k)) * assembled(r, k);
        worst = std::min(worst, std::norm(overlap));
    }
    return worst;
}

ClassicalCost classical_cost_estimates(int num_qubits) {
    if (num_qubits < 1) throw DomainError("K must be at least 1");
    const auto k = static_cast<unsigned>(num_qubits);
    const BigInt one = 1;
    return {one << (3 * k), one << (2 * k), one << (2 * k)};
}

std::string reconstruction_report_json(int num_qubits, const TomographyConfig& config,
                                       std::optional<double> alpha,
                                       std::optional<double> unitarity_defect) {
    nlohmann::ordered_json j;
    j["K"] = num_qubits;
    j["N"] = config.num_samples;
    j["estimator"] = to_string(config.estimator);
    j["alpha"] = alpha ? nlohmann::ordered_json(*alpha) : nlohmann::ordered_json(nullptr);
    j["unitarity_defect"] = unitarity_defect ? nlohmann::ordered_json(*unitarity_defect)
                                             : nlohmann::ordered_json(nullptr);
    j["seed"] = config.seed;
    return j.dump();
}

}  // namespace qucipher::tomography
