#include "qucipher/qstate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace qucipher::qstate {

namespace {

void require_same_dim(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw DomainError(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                          " vs " + std::to_string(b) + ")");
    }
}

double squared_norm(std::span<const Complex> v) {
    double s = 0.0;
    for (const auto& a : v) s += std::norm(a);
    return s;
}

std::vector<Complex> multiply(const ComplexMatrix& m, std::span<const Complex> v) {
    const std::size_t n = m.dim();
    std::vector<Complex> out(n);
    for (std::size_t r = 0; r < n; ++r) {
        Complex acc{};
        for (std::size_t c = 0; c < n; ++c) acc += m(r, c) * v[c];
        out[r] = acc;
    }
    return out;
}

Complex inner(std::span<const Complex> a, std::span<const Complex> b) {
    Complex acc{};
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
    return acc;
}

void normalize_in_place(std::vector<Complex>& v) {
    const double n = std::sqrt(squared_norm(v));
    for (auto& a : v) a /= n;
}

std::vector<Complex> perturbed_uniform(std::size_t n, Rng& rng) {
    std::vector<Complex> v(n, Complex(1.0 / std::sqrt(static_cast<double>(n)), 0.0));
    for (auto& a : v) {
        a += Complex(0.1 * (uniform01(rng) - 0.5), 0.1 * (uniform01(rng) - 0.5));
    }
    normalize_in_place(v);
    return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// ComplexMatrix

ComplexMatrix ComplexMatrix::identity(std::size_t dim) {
    ComplexMatrix m(dim);
    for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0;
    return m;
}

ComplexMatrix ComplexMatrix::adjoint() const {
    ComplexMatrix out(dim_);
    for (std::size_t r = 0; r < dim_; ++r)
        for (std::size_t c = 0; c < dim_; ++c) out(c, r) = std::conj((*this)(r, c));
    return out;
}

ComplexMatrix ComplexMatrix::operator*(const ComplexMatrix& rhs) const {
    require_same_dim(dim_, rhs.dim_, "matrix product");
    ComplexMatrix out(dim_);
    for (std::size_t r = 0; r < dim_; ++r) {
        for (std::size_t k = 0; k < dim_; ++k) {
            const Complex a = (*this)(r, k);
            if (a == Complex{}) continue;
            for (std::size_t c = 0; c < dim_; ++c) out(r, c) += a * rhs(k, c);
        }
    }
    return out;
}

std::vector<Complex> ComplexMatrix::operator*(std::span<const Complex> v) const {
    require_same_dim(dim_, v.size(), "matrix-vector product");
    return multiply(*this, v);
}

ComplexMatrix& ComplexMatrix::operator+=(const ComplexMatrix& rhs) {
    require_same_dim(dim_, rhs.dim_, "matrix sum");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += rhs.data_[i];
    return *this;
}

ComplexMatrix& ComplexMatrix::operator-=(const ComplexMatrix& rhs) {
    require_same_dim(dim_, rhs.dim_, "matrix difference");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= rhs.data_[i];
    return *this;
}

ComplexMatrix& ComplexMatrix::operator*=(Complex s) {
    for (auto& a : data_) a *= s;
    return *this;
}

Complex ComplexMatrix::trace() const {
    Complex t{};
    for (std::size_t i = 0; i < dim_; ++i) t += (*this)(i, i);
    return t;
}

double ComplexMatrix::hermiticity_defect() const {
    double worst = 0.0;
    for (std::size_t r = 0; r < dim_; ++r)
        for (std::size_t c = r; c < dim_; ++c)
            worst = std::max(worst, std::abs((*this)(r, c) - std::conj((*this)(c, r))));
    return worst;
}

double ComplexMatrix::unitarity_defect() const {
    const ComplexMatrix p = (*this) * adjoint();
    double worst = 0.0;
    for (std::size_t r = 0; r < dim_; ++r)
        for (std::size_t c = 0; c < dim_; ++c)
            worst = std::max(worst, std::abs(p(r, c) - (r == c ? 1.0 : 0.0)));
    return worst;
}

ComplexMatrix ComplexMatrix::kron(const ComplexMatrix& rhs) const {
    const std::size_t n = dim_ * rhs.dim_;
    ComplexMatrix out(n);
    for (std::size_t r1 = 0; r1 < dim_; ++r1)
        for (std::size_t c1 = 0; c1 < dim_; ++c1) {
            const Complex a = (*this)(r1, c1);
            for (std::size_t r2 = 0; r2 < rhs.dim_; ++r2)
                for (std::size_t c2 = 0; c2 < rhs.dim_; ++c2)
                    out(r1 * rhs.dim_ + r2, c1 * rhs.dim_ + c2) = a * rhs(r2, c2);
        }
    return out;
}

// ---------------------------------------------------------------------------
// Matrix2

Matrix2 Matrix2::operator*(const Matrix2& rhs) const {
    Matrix2 out;
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c)
            out.m[2 * r + c] = (*this)(r, 0) * rhs(0, c) + (*this)(r, 1) * rhs(1, c);
    return out;
}

Matrix2 Matrix2::adjoint() const {
    return {{std::conj(m[0]), std::conj(m[2]), std::conj(m[1]), std::conj(m[3])}};
}

ComplexMatrix Matrix2::dense() const {
    ComplexMatrix out(2);
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) out(r, c) = (*this)(r, c);
    return out;
}

// ---------------------------------------------------------------------------
// PureState

std::size_t dimension(int num_qubits) {
    if (num_qubits < 1 || num_qubits > kMaxQubits) {
        throw DomainError("qubit count " + std::to_string(num_qubits) + " outside [1, " +
                          std::to_string(kMaxQubits) + "]");
    }
    return std::size_t{1} << num_qubits;
}

PureState::PureState(int num_qubits, std::vector<Complex> amplitudes)
    : num_qubits_(num_qubits), amplitudes_(std::move(amplitudes)) {
    require_same_dim(amplitudes_.size(), dimension(num_qubits), "PureState");
    const double n = std::sqrt(squared_norm(amplitudes_));
    if (std::abs(n - 1.0) > kNormTolerance) {
        throw DomainError("PureState: amplitudes not normalized (norm " + std::to_string(n) + ")");
    }
}

PureState PureState::normalized(int num_qubits, std::vector<Complex> amplitudes) {
    require_same_dim(amplitudes.size(), dimension(num_qubits), "PureState");
    const double n = std::sqrt(squared_norm(amplitudes));
    if (!(n > 0.0)) throw DomainError("PureState: zero vector cannot be normalized");
    for (auto& a : amplitudes) a /= n;
    PureState s;
    s.num_qubits_ = num_qubits;
    s.amplitudes_ = std::move(amplitudes);
    return s;
}

double PureState::norm() const { return std::sqrt(squared_norm(amplitudes_)); }

void PureState::apply_single_qubit(int target, const Matrix2& g) {
    if (target < 0 || target >= num_qubits_) throw DomainError("qubit index out of range");
    const std::size_t s = stride(target);
    const std::size_t n = amplitudes_.size();
    for (std::size_t base = 0; base < n; base += 2 * s) {
        for (std::size_t j = base; j < base + s; ++j) {
            const Complex a0 = amplitudes_[j];
            const Complex a1 = amplitudes_[j + s];
            amplitudes_[j] = g.m[0] * a0 + g.m[1] * a1;
            amplitudes_[j + s] = g.m[2] * a0 + g.m[3] * a1;
        }
    }
}

void PureState::apply_controlled_not(int control, int target) {
    if (control < 0 || control >= num_qubits_ || target < 0 || target >= num_qubits_) {
        throw DomainError("qubit index out of range");
    }
    if (control == target) throw DomainError("CNOT control equals target");
    const std::size_t cs = stride(control);
    const std::size_t ts = stride(target);
    for (std::size_t j = 0; j < amplitudes_.size(); ++j) {
        if ((j & cs) && !(j & ts)) std::swap(amplitudes_[j], amplitudes_[j | ts]);
    }
}

PureState basis_state(BlockValue k, int num_qubits) {
    const std::size_t n = dimension(num_qubits);
    if (k >= n) {
        throw DomainError("basis_state: k=" + std::to_string(k) + " outside [0, 2^" +
                          std::to_string(num_qubits) + ")");
    }
    std::vector<Complex> amps(n);
    amps[k] = 1.0;
    return PureState(num_qubits, std::move(amps));
}

PureState apply_unitary(const PureState& state, const ComplexMatrix& u) {
    require_same_dim(u.dim(), state.dim(), "apply_unitary");
    if (const double d = u.unitarity_defect(); d > kNormTolerance) {
        throw ValidationError("apply_unitary: matrix not unitary (defect " + std::to_string(d) +
                              ")");
    }
    return PureState::normalized(state.num_qubits(), multiply(u, state.amplitudes()));
}

// ---------------------------------------------------------------------------
// Density matrices

DensityMatrix::DensityMatrix(int k, ComplexMatrix m) : num_qubits(k), entries(std::move(m)) {
    require_same_dim(entries.dim(), dimension(k), "DensityMatrix");
}

DensityMatrix DensityMatrix::symmetrized() const {
    ComplexMatrix s = entries;
    s += entries.adjoint();
    s *= 0.5;
    return {num_qubits, std::move(s)};
}

double frobenius_norm(const ComplexMatrix& a) { return std::sqrt(squared_norm(a.data())); }

double frobenius_norm(const DensityMatrix& a) { return frobenius_norm(a.entries); }

double frobenius_distance(const DensityMatrix& a, const DensityMatrix& b) {
    require_same_dim(a.entries.dim(), b.entries.dim(), "frobenius_distance");
    double s = 0.0;
    const auto da = a.entries.data();
    const auto db = b.entries.data();
    for (std::size_t i = 0; i < da.size(); ++i) s += std::norm(da[i] - db[i]);
    return std::sqrt(s);
}

DensityMatrix density_from_pure(const PureState& state) {
    const std::size_t n = state.dim();
    ComplexMatrix m(n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) m(r, c) = state[r] * std::conj(state[c]);
    return {state.num_qubits(), std::move(m)};
}

double fidelity(const PureState& a, const PureState& b) {
    require_same_dim(a.dim(), b.dim(), "fidelity");
    return std::norm(inner(a.amplitudes(), b.amplitudes()));
}

// ---------------------------------------------------------------------------
// Spin measurements

SpinDirection SpinDirection::plus_x() { return {std::numbers::pi / 2, 0.0}; }
SpinDirection SpinDirection::plus_y() { return {std::numbers::pi / 2, std::numbers::pi / 2}; }

SpinDirection SpinDirection::from_vector(double x, double y, double z) {
    const double len = std::sqrt(x * x + y * y + z * z);
    if (!(std::abs(len - 1.0) <= 1e-12)) {
        throw DomainError("spin direction is not a unit vector (|n| = " + std::to_string(len) + ")");
    }
    double phi = std::atan2(y, x);
    if (phi < 0) phi += 2 * std::numbers::pi;
    return {std::acos(std::clamp(z, -1.0, 1.0)), phi};
}

SpinDirection SpinDirection::random(Rng& rng) {
    // Uniform on the sphere: cos θ uniform in [-1, 1], φ uniform in [0, 2π).
    const double cos_theta = 2.0 * uniform01(rng) - 1.0;
    const double phi = 2.0 * std::numbers::pi * uniform01(rng);
    return {std::acos(cos_theta), phi};
}

std::array<double, 3> SpinDirection::unit_vector() const {
    return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

Matrix2 spin_projector(const SpinDirection& n, Spin m) {
    if (!std::isfinite(n.theta) || !std::isfinite(n.phi)) {
        throw DomainError("spin direction has non-finite angles");
    }
    const auto [x, y, z] = n.unit_vector();
    const double s = 2.0 * spin_value(m);  // ±1
    return {{Complex(0.5 * (1 + s * z), 0.0), Complex(0.5 * s * x, -0.5 * s * y),
             Complex(0.5 * s * x, 0.5 * s * y), Complex(0.5 * (1 - s * z), 0.0)}};
}

Measurement measure_spins(const PureState& state, std::span<const SpinDirection> directions,
                          Rng& rng) {
    const int k = state.num_qubits();
    require_same_dim(directions.size(), static_cast<std::size_t>(k), "measure_spins");

    std::vector<Complex> amps(state.amplitudes().begin(), state.amplitudes().end());
    OutcomeRecord record;
    record.directions.assign(directions.begin(), directions.end());
    record.outcomes.reserve(k);

    for (int q = 0; q < k; ++q) {
        const Matrix2 up = spin_projector(directions[q], Spin::Up);
        const Matrix2 down = spin_projector(directions[q], Spin::Down);
        const std::size_t s = std::size_t{1} << (k - 1 - q);

        double p_up = 0.0;
        double p_down = 0.0;
        for (std::size_t base = 0; base < amps.size(); base += 2 * s) {
            for (std::size_t j = base; j < base + s; ++j) {
                const Complex a0 = amps[j];
                const Complex a1 = amps[j + s];
                p_up += std::norm(up.m[0] * a0 + up.m[1] * a1) + std::norm(up.m[2] * a0 + up.m[3] * a1);
                p_down += std::norm(down.m[0] * a0 + down.m[1] * a1) +
                          std::norm(down.m[2] * a0 + down.m[3] * a1);
            }
        }
        const Spin outcome = uniform01(rng) * (p_up + p_down) < p_up ? Spin::Up : Spin::Down;
        const Matrix2& p = outcome == Spin::Up ? up : down;
        const double scale = 1.0 / std::sqrt(outcome == Spin::Up ? p_up : p_down);
        for (std::size_t base = 0; base < amps.size(); base += 2 * s) {
            for (std::size_t j = base; j < base + s; ++j) {
                const Complex a0 = amps[j];
                const Complex a1 = amps[j + s];
                amps[j] = (p.m[0] * a0 + p.m[1] * a1) * scale;
                amps[j + s] = (p.m[2] * a0 + p.m[3] * a1) * scale;
            }
        }
        record.outcomes.push_back(outcome);
    }
    return {std::move(record), PureState::normalized(k, std::move(amps))};
}

double outcome_probability(const PureState& state, const OutcomeRecord& record) {
    const int k = state.num_qubits();
    require_same_dim(record.directions.size(), static_cast<std::size_t>(k), "outcome_probability");
    require_same_dim(record.outcomes.size(), static_cast<std::size_t>(k), "outcome_probability");
    std::vector<Complex> amps(state.amplitudes().begin(), state.amplitudes().end());
    for (int q = 0; q < k; ++q) {
        const Matrix2 p = spin_projector(record.directions[q], record.outcomes[q]);
        const std::size_t s = std::size_t{1} << (k - 1 - q);
        for (std::size_t base = 0; base < amps.size(); base += 2 * s) {
            for (std::size_t j = base; j < base + s; ++j) {
                const Complex a0 = amps[j];
                const Complex a1 = amps[j + s];
                amps[j] = p.m[0] * a0 + p.m[1] * a1;
                amps[j + s] = p.m[2] * a0 + p.m[3] * a1;
            }
        }
    }
    return std::clamp(squared_norm(amps), 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Eigenvector extraction

std::vector<Complex> phase_gauge(std::vector<Complex> v) {
    for (const auto& a : v) {
        if (std::abs(a) > 1e-6) {
            const Complex phase = std::conj(a) / std::abs(a);
            for (auto& b : v) b *= phase;
            break;
        }
    }
    return v;
}

namespace {

struct PowerResult {
    double eigenvalue;
    std::vector<Complex> vector;
    double residual;
    int iterations;
    bool converged;
};

// Power iteration on (H + shift·I). The shift bounds the spectral radius of H,
// so the iteration targets the algebraically largest eigenvalue.
PowerResult shifted_power_iteration(const ComplexMatrix& h, double shift, std::vector<Complex> v,
                                    int max_iterations, double tolerance) {
    double lambda = 0.0;
    double residual = 0.0;
    for (int it = 1; it <= max_iterations; ++it) {
        std::vector<Complex> hv = multiply(h, v);
        lambda = inner(v, hv).real();
        residual = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) residual += std::norm(hv[i] - lambda * v[i]);
        residual = std::sqrt(residual);
        if (residual <= tolerance * std::max(std::abs(lambda), 1e-300) || residual == 0.0) {
            return {lambda, std::move(v), residual, it, true};
        }
        for (std::size_t i = 0; i < v.size(); ++i) hv[i] += shift * v[i];
        normalize_in_place(hv);
        v = std::move(hv);
    }
    return {lambda, std::move(v), residual, max_iterations, false};
}

}  // namespace

Eigenpair top_eigenvector(const DensityMatrix& rho, const PowerIterationOptions& opts) {
    const ComplexMatrix& h = rho.entries;
    const double scale = std::max(frobenius_norm(h), 1e-300);
    if (const double d = h.hermiticity_defect(); d > 1e-9 * std::max(1.0, scale)) {
        throw DomainError("top_eigenvector: matrix not Hermitian (defect " + std::to_string(d) +
                          "); symmetrize first");
    }
    const ComplexMatrix sym = rho.symmetrized().entries;
    const std::size_t n = sym.dim();
    const double shift = frobenius_norm(sym);

    Rng rng(opts.seed);
    PowerResult top = shifted_power_iteration(sym, shift, perturbed_uniform(n, rng),
                                              opts.max_iterations, opts.residual_tolerance);
    if (!top.converged) {
        throw ConvergenceError("power iteration did not converge after " +
                                   std::to_string(opts.max_iterations) + " iterations (residual " +
                                   std::to_string(top.residual) + ")",
                               top.residual);
    }

    // Second eigenvalue from the deflated matrix H - λ v v†.
    double second = 0.0;
    if (n > 1) {
        ComplexMatrix deflated = sym;
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c)
                deflated(r, c) -= top.eigenvalue * top.vector[r] * std::conj(top.vector[c]);
        std::vector<Complex> w = perturbed_uniform(n, rng);
        const Complex overlap = inner(top.vector, w);
        for (std::size_t i = 0; i < n; ++i) w[i] -= overlap * top.vector[i];
        if (std::sqrt(squared_norm(w)) < 1e-12) w = perturbed_uniform(n, rng);
        normalize_in_place(w);

        double prev = std::numeric_limits<double>::infinity();
        for (int it = 0; it < opts.max_iterations; ++it) {
            std::vector<Complex> bw = multiply(deflated, w);
            second = inner(w, bw).real();
            if (std::abs(second - prev) <= 1e-13 * std::max(1.0, shift)) break;
            prev = second;
            for (std::size_t i = 0; i < n; ++i) bw[i] += shift * w[i];
            const double len = std::sqrt(squared_norm(bw));
            if (len == 0.0) break;
            for (auto& a : bw) a /= len;
            w = std::move(bw);
        }
    }
    const double gap = top.eigenvalue - second;
    if (gap < opts.degeneracy_gap) {
        throw DegeneracyError("top eigenvalue is degenerate (gap " + std::to_string(gap) + ")", gap);
    }
    return {top.eigenvalue, PureState::normalized(rho.num_qubits, phase_gauge(std::move(top.vector))),
            gap, top.iterations};
}

}  // namespace qucipher::qstate
