#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "oracle.hpp"
#include "qucipher/qstate.hpp"

using namespace qucipher;
using namespace qucipher::qstate;

namespace {

PureState random_state(int k, Rng& rng) {
    std::normal_distribution<double> g;
    std::vector<Complex> a(dimension(k));
    for (auto& c : a) c = {g(rng), g(rng)};
    return PureState::normalized(k, std::move(a));
}

ComplexMatrix random_unitary(int k, Rng& rng) {
    // Gram-Schmidt on random columns, done with Eigen's QR as the reference.
    std::normal_distribution<double> g;
    const int d = static_cast<int>(dimension(k));
    oracle::Mat a(d, d);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) a(r, c) = {g(rng), g(rng)};
    Eigen::HouseholderQR<oracle::Mat> qr(a);
    const oracle::Mat q = qr.householderQ();
    ComplexMatrix u(d);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) u(r, c) = q(r, c);
    return u;
}

std::vector<SpinDirection> random_dirs(int k, Rng& rng) {
    std::vector<SpinDirection> d;
    for (int i = 0; i < k; ++i) d.push_back(SpinDirection::random(rng));
    return d;
}

}  // namespace

TEST_CASE("dimension bounds") {
    CHECK(dimension(1) == 2);
    CHECK(dimension(16) == 65536);
    CHECK_THROWS_AS(dimension(0), DomainError);
    CHECK_THROWS_AS(dimension(17), DomainError);
}

TEST_CASE("basis state uses most-significant-first qubit order") {
    const PureState s = basis_state(0b10, 2);
    CHECK(s[2] == Complex(1, 0));
    CHECK(s.norm() == doctest::Approx(1.0));
    CHECK_THROWS(basis_state(4, 2));
}

TEST_CASE("pure state rejects unnormalized amplitudes") {
    CHECK_THROWS_AS(PureState(1, {1.0, 1.0}), DomainError);
    CHECK_THROWS(PureState(2, {1.0, 0.0}));
    const PureState s = PureState::normalized(1, {1.0, 1.0});
    CHECK(std::abs(s[0] - Complex(M_SQRT1_2, 0)) < 1e-15);
}

TEST_CASE("projectors match Pauli construction") {
    Rng rng(7);
    for (int t = 0; t < 50; ++t) {
        const auto n = SpinDirection::random(rng);
        for (Spin m : {Spin::Up, Spin::Down}) {
            const oracle::Mat p = oracle::two(spin_projector(n, m));
            const oracle::Mat ref = oracle::projector(n.theta, n.phi, m == Spin::Up ? 1 : -1);
            CHECK((p - ref).norm() < 1e-12);
        }
    }
    const oracle::Mat up_z = oracle::two(spin_projector(SpinDirection::plus_z(), Spin::Up));
    CHECK(std::abs(up_z(0, 0) - 1.0) < 1e-15);
    CHECK(std::abs(up_z(1, 1)) < 1e-15);
}

TEST_CASE("spin direction construction") {
    const auto x = SpinDirection::plus_x().unit_vector();
    CHECK(x[0] == doctest::Approx(1.0));
    const auto y = SpinDirection::plus_y().unit_vector();
    CHECK(y[1] == doctest::Approx(1.0));
    const auto d = SpinDirection::from_vector(0, 0, -1).unit_vector();
    CHECK(d[2] == doctest::Approx(-1.0));
    CHECK_THROWS(SpinDirection::from_vector(1, 1, 0));
}

TEST_CASE("random directions are uniform on the sphere") {
    Rng rng(11);
    const int n = 100000;
    double sz = 0, sz2 = 0, sx = 0;
    for (int i = 0; i < n; ++i) {
        const auto v = SpinDirection::random(rng).unit_vector();
        sz += v[2];
        sz2 += v[2] * v[2];
        sx += v[0];
    }
    // E[z] = 0 with var 1/3; E[z²] = 1/3 with var 4/45.
    CHECK(std::abs(sz / n) < 4 * std::sqrt(1.0 / 3 / n));
    CHECK(std::abs(sx / n) < 4 * std::sqrt(1.0 / 3 / n));
    CHECK(std::abs(sz2 / n - 1.0 / 3) < 4 * std::sqrt(4.0 / 45 / n));
}

TEST_CASE("apply_unitary preserves norm and validates unitarity") {
    Rng rng(3);
    for (int k = 1; k <= 3; ++k) {
        for (int t = 0; t < 20; ++t) {
            const PureState s = random_state(k, rng);
            const ComplexMatrix u = random_unitary(k, rng);
            const PureState out = apply_unitary(s, u);
            CHECK(std::abs(out.norm() - 1.0) < 1e-9);
            const oracle::Vec ref = oracle::from(u) * oracle::from(s);
            CHECK((oracle::from(out) - ref).norm() < 1e-12);
        }
    }
    ComplexMatrix bad = ComplexMatrix::identity(2);
    bad(0, 0) = 2.0;
    CHECK_THROWS(apply_unitary(basis_state(0, 1), bad));
}

TEST_CASE("outcome probabilities are complete") {
    Rng rng(5);
    for (int k = 1; k <= 3; ++k) {
        const PureState s = random_state(k, rng);
        const auto dirs = random_dirs(k, rng);
        double total = 0.0;
        for (BlockValue o = 0; o < dimension(k); ++o) {
            OutcomeRecord rec{dirs, {}};
            for (int q = 0; q < k; ++q) rec.outcomes.push_back(((o >> (k - 1 - q)) & 1) ? Spin::Down : Spin::Up);
            total += outcome_probability(s, rec);
        }
        CHECK(std::abs(total - 1.0) < 1e-9);
    }
}

TEST_CASE("outcome probability matches dense projector oracle") {
    Rng rng(9);
    const int k = 2;
    for (int t = 0; t < 20; ++t) {
        const PureState s = random_state(k, rng);
        const auto dirs = random_dirs(k, rng);
        OutcomeRecord rec{dirs, {Spin::Up, Spin::Down}};
        const oracle::Mat p = oracle::kron(oracle::projector(dirs[0].theta, dirs[0].phi, 1),
                                           oracle::projector(dirs[1].theta, dirs[1].phi, -1));
        const oracle::Vec v = oracle::from(s);
        const double ref = (v.adjoint() * p * v)(0, 0).real();
        CHECK(std::abs(outcome_probability(s, rec) - ref) < 1e-12);
    }
}

TEST_CASE("measurement frequencies converge to outcome probabilities") {
    Rng rng(13);
    const int k = 2;
    const PureState s = random_state(k, rng);
    const auto dirs = random_dirs(k, rng);
    const int n = 100000;
    std::map<std::vector<Spin>, int> counts;
    for (int i = 0; i < n; ++i) counts[measure_spins(s, dirs, rng).record.outcomes]++;
    for (const auto& [outcomes, c] : counts) {
        const double p = outcome_probability(s, {dirs, outcomes});
        const double sigma = std::sqrt(p * (1 - p) / n);
        CHECK(std::abs(double(c) / n - p) <= 4 * sigma + 1e-12);
    }
}

TEST_CASE("collapsed state re-measures identically") {
    Rng rng(17);
    for (int t = 0; t < 50; ++t) {
        const int k = 1 + t % 3;
        const PureState s = random_state(k, rng);
        const auto dirs = random_dirs(k, rng);
        const auto first = measure_spins(s, dirs, rng);
        CHECK(outcome_probability(first.collapsed, first.record) == doctest::Approx(1.0).epsilon(1e-9));
        const auto second = measure_spins(first.collapsed, dirs, rng);
        CHECK(second.record.outcomes == first.record.outcomes);
    }
}

TEST_CASE("frobenius helpers") {
    const DensityMatrix zero = density_from_pure(basis_state(0, 1));
    CHECK(frobenius_norm(zero) == doctest::Approx(1.0));
    ComplexMatrix half = ComplexMatrix::identity(2);
    half *= 0.5;
    CHECK(frobenius_norm(DensityMatrix(1, half)) == doctest::Approx(M_SQRT1_2));
    const DensityMatrix one = density_from_pure(basis_state(1, 1));
    CHECK(frobenius_distance(zero, one) == doctest::Approx(std::sqrt(2.0)));

    Rng rng(21);
    const auto a = density_from_pure(random_state(2, rng));
    const auto b = density_from_pure(random_state(2, rng));
    double sum = 0.0;
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 4; ++c) sum += std::norm(a.entries(r, c) - b.entries(r, c));
    CHECK(frobenius_distance(a, b) == doctest::Approx(std::sqrt(sum)).epsilon(1e-12));
}

TEST_CASE("density from pure is a rank-one projector") {
    const auto plus = density_from_pure(PureState::normalized(1, {1.0, 1.0}));
    for (std::size_t r = 0; r < 2; ++r)
        for (std::size_t c = 0; c < 2; ++c) CHECK(std::abs(plus.entries(r, c) - 0.5) < 1e-15);
    Rng rng(23);
    for (int k = 1; k <= 3; ++k) {
        const auto rho = density_from_pure(random_state(k, rng));
        CHECK(std::abs(rho.entries.trace() - 1.0) < 1e-12);
        const oracle::Mat m = oracle::from(rho.entries);
        CHECK((m * m - m).norm() < 1e-9);
        CHECK(frobenius_norm(rho) == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("top eigenvector on simple inputs") {
    const auto e0 = top_eigenvector(density_from_pure(basis_state(0, 1)));
    CHECK(e0.eigenvalue == doctest::Approx(1.0));
    CHECK(std::abs(e0.vector[0] - 1.0) < 1e-8);

    ComplexMatrix m(2);
    m(0, 0) = 0.9;
    m(1, 1) = 0.1;
    const auto e1 = top_eigenvector(DensityMatrix(1, m));
    CHECK(e1.eigenvalue == doctest::Approx(0.9));
    CHECK(std::abs(e1.vector[0] - 1.0) < 1e-8);
    CHECK(e1.gap == doctest::Approx(0.8).epsilon(1e-6));

    ComplexMatrix flat = ComplexMatrix::identity(2);
    flat *= 0.5;
    CHECK_THROWS_AS(top_eigenvector(DensityMatrix(1, flat)), DegeneracyError);

    ComplexMatrix skew(2);
    skew(0, 1) = 1.0;
    CHECK_THROWS(top_eigenvector(DensityMatrix(1, skew)));
}

TEST_CASE("top eigenvector agrees with dense eigensolver on noisy projectors") {
    Rng rng(29);
    std::normal_distribution<double> g;
    for (int k = 1; k <= 3; ++k) {
        for (double noise : {0.1, 0.01, 0.001}) {
            const PureState psi = random_state(k, rng);
            DensityMatrix rho = density_from_pure(psi);
            const std::size_t d = dimension(k);
            for (std::size_t r = 0; r < d; ++r)
                for (std::size_t c = 0; c < d; ++c) rho.entries(r, c) += noise * Complex(g(rng), g(rng));
            rho = rho.symmetrized();

            const auto ep = top_eigenvector(rho);
            Eigen::SelfAdjointEigenSolver<oracle::Mat> es(oracle::from(rho.entries));
            const oracle::Vec ref = es.eigenvectors().col(es.eigenvalues().size() - 1);
            CHECK(ep.eigenvalue == doctest::Approx(es.eigenvalues().maxCoeff()).epsilon(1e-7));
            const double overlap = std::norm(ref.dot(oracle::from(ep.vector)));
            CHECK(overlap > 1 - 1e-8);
            // Residual criterion.
            const oracle::Vec v = oracle::from(ep.vector);
            const double residual = (oracle::from(rho.entries) * v - ep.eigenvalue * v).norm();
            CHECK(residual <= 1e-8 * std::abs(ep.eigenvalue) * 1.0001);
            // Phase gauge: first significant component is real positive.
            for (std::size_t i = 0; i < d; ++i) {
                if (std::abs(ep.vector[i]) > 1e-6) {
                    CHECK(ep.vector[i].real() > 0);
                    CHECK(std::abs(ep.vector[i].imag()) < 1e-12);
                    break;
                }
            }
            if (noise <= 0.001) CHECK(fidelity(ep.vector, psi) > 0.999);
        }
    }
}

TEST_CASE("sampling is deterministic per seed") {
    Rng a(99), b(99);
    const PureState s = PureState::normalized(2, {1.0, 1.0, 1.0, 1.0});
    const auto dirs = std::vector<SpinDirection>{SpinDirection::plus_x(), SpinDirection::plus_z()};
    for (int i = 0; i < 100; ++i) {
        CHECK(measure_spins(s, dirs, a).record.outcomes == measure_spins(s, dirs, b).record.outcomes);
    }
}
