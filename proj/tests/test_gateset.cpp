#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "oracle.hpp"
#include "qucipher/gateset.hpp"

using namespace qucipher;
using namespace qucipher::gates;
using qstate::basis_state;
using qstate::Matrix2;

namespace {

const Complex I{0, 1};

// Inverse-closed one-qubit libraries of size 1 to 4.
GateLibrary tiny_library(std::size_t size) {
    const double r = M_SQRT1_2;
    const GateSpec x{0, SingleQubitGate{0, Matrix2{{0, 1, 1, 0}}, "X[0]"}, 0};
    const GateSpec h{1, SingleQubitGate{0, Matrix2{{r, r, r, -r}}, "H[0]"}, 1};
    switch (size) {
        case 1: return GateLibrary(1, {x});
        case 2: return GateLibrary(1, {x, h});
        case 3: return GateLibrary(1, {x, h, {2, SingleQubitGate{0, Matrix2{{1, 0, 0, -1}}, "Z[0]"}, 2}});
        default:
            return GateLibrary(1, {x, h,
                                   {2, SingleQubitGate{0, Matrix2{{1, 0, 0, I}}, "S[0]"}, 3},
                                   {3, SingleQubitGate{0, Matrix2{{1, 0, 0, -I}}, "Sdg[0]"}, 2}});
    }
}

}  // namespace

TEST_CASE("default library sizes") {
    CHECK(default_library(1).size() == 7);
    CHECK(default_library(2).size() == 16);
    CHECK(default_library(3).size() == 27);
    CHECK(default_library_size(8) == 112);
    CHECK(default_library(8).size() == 112);
}

TEST_CASE("default library gate matrices and inverse wiring") {
    const GateLibrary lib = default_library(3);
    const double r = M_SQRT1_2;
    const Complex t = std::polar(1.0, M_PI / 4);
    auto single = [&](std::string_view label) {
        return oracle::two(std::get<SingleQubitGate>(lib[lib.find(label)].kind).matrix);
    };
    oracle::Mat h(2, 2), s(2, 2), tm(2, 2), x(2, 2), z(2, 2);
    h << r, r, r, -r;
    s << 1, 0, 0, I;
    tm << 1, 0, 0, t;
    x << 0, 1, 1, 0;
    z << 1, 0, 0, -1;
    CHECK((single("H[1]") - h).norm() < 1e-15);
    CHECK((single("S[2]") - s).norm() < 1e-15);
    CHECK((single("Sdg[0]") - s.adjoint()).norm() < 1e-15);
    CHECK((single("T[0]") - tm).norm() < 1e-15);
    CHECK((single("Tdg[1]") - tm.adjoint()).norm() < 1e-15);
    CHECK((single("X[2]") - x).norm() < 1e-15);
    CHECK((single("Z[0]") - z).norm() < 1e-15);

    std::set<GateId> images;
    for (const auto& g : lib.gates()) {
        images.insert(g.inverse_id);
        const oracle::Mat prod = oracle::gate_matrix(lib[g.inverse_id], 3) * oracle::gate_matrix(g, 3);
        CHECK((prod - oracle::Mat::Identity(8, 8)).norm() < 1e-12);
    }
    CHECK(images.size() == lib.size());
    CHECK(lib[lib.find("CNOT[0,1]")].inverse_id == lib.find("CNOT[0,1]"));
    CHECK(lib[lib.find("S[1]")].inverse_id == lib.find("Sdg[1]"));
    CHECK_THROWS(lib.find("nope"));
}

TEST_CASE("library construction validates its invariants") {
    // Inverse that does not undo the gate.
    CHECK_THROWS(GateLibrary(1, {{0, SingleQubitGate{0, Matrix2{{1, 0, 0, I}}, "S"}, 0}}));
    // Non-unitary matrix.
    CHECK_THROWS(GateLibrary(1, {{0, SingleQubitGate{0, Matrix2{{2, 0, 0, 1}}, "bad"}, 0}}));
    // Control equals target.
    CHECK_THROWS(GateLibrary(2, {{0, ControlledNot{1, 1}, 0}}));
    // Qubit out of range.
    CHECK_THROWS(GateLibrary(1, {{0, SingleQubitGate{3, Matrix2{{0, 1, 1, 0}}, "X"}, 0}}));
    // Inverse map is not a bijection.
    CHECK_THROWS(GateLibrary(1, {{0, SingleQubitGate{0, Matrix2{{0, 1, 1, 0}}, "X"}, 0},
                                 {1, SingleQubitGate{0, Matrix2{{0, 1, 1, 0}}, "X2"}, 0}}));
}

TEST_CASE("random keys are deterministic, in range and uniform") {
    const GateLibrary lib = default_library(2);
    Rng a(42), b(42);
    CHECK(random_key(lib, 4, a) == random_key(lib, 4, b));
    Rng c(43);
    const auto key = random_key(lib, 4, c);
    CHECK(key.sequence.size() == 4);
    for (auto id : key.sequence) CHECK(id < 16);

    int warnings = 0;
    Rng d(1);
    random_key(lib, 3, d, [&](std::string_view) { ++warnings; });
    CHECK(warnings == 1);
    random_key(lib, 4, d, [&](std::string_view) { ++warnings; });
    CHECK(warnings == 1);

    Rng rng(5);
    std::vector<int> counts(16);
    const int draws = 100000;
    const auto big = random_key(lib, draws, rng);
    for (auto id : big.sequence) counts[id]++;
    const double p = 1.0 / 16, sigma = std::sqrt(draws * p * (1 - p));
    double chi2 = 0.0;
    for (int cnt : counts) {
        CHECK(std::abs(cnt - draws * p) < 4 * sigma);
        chi2 += (cnt - draws * p) * (cnt - draws * p) / (draws * p);
    }
    // 15 degrees of freedom; 99.9th percentile is 37.7.
    CHECK(chi2 < 37.7);
}

TEST_CASE("apply_network on small examples") {
    const GateLibrary lib = default_library(1);
    const GateId x = lib.find("X[0]"), h = lib.find("H[0]");
    const auto id_state = apply_network(basis_state(0, 1), lib, make_key(lib, {x, x}));
    CHECK(std::abs(id_state[0] - 1.0) < 1e-15);
    const auto plus = apply_network(basis_state(0, 1), lib, make_key(lib, {h}));
    CHECK(std::abs(plus[0] - M_SQRT1_2) < 1e-15);
    CHECK(std::abs(plus[1] - M_SQRT1_2) < 1e-15);

    const auto other = default_library(2);
    CHECK_THROWS_AS(apply_network(basis_state(0, 1), lib, make_key(other, {0})), KeyError);
    CHECK_THROWS_AS(make_key(lib, {}), KeyError);
    CHECK_THROWS_AS(make_key(lib, {7}), KeyError);
}

TEST_CASE("CNOT acts as |a,b> -> |a,a xor b>") {
    const GateLibrary lib = default_library(2);
    const auto key = make_key(lib, {lib.find("CNOT[0,1]")});
    CHECK(std::abs(apply_network(basis_state(0b10, 2), lib, key)[0b11] - 1.0) < 1e-15);
    CHECK(std::abs(apply_network(basis_state(0b11, 2), lib, key)[0b10] - 1.0) < 1e-15);
    CHECK(std::abs(apply_network(basis_state(0b01, 2), lib, key)[0b01] - 1.0) < 1e-15);
}

TEST_CASE("apply_network matches the dense oracle") {
    Rng rng(8);
    for (int k = 1; k <= 3; ++k) {
        const GateLibrary lib = default_library(k);
        for (int t = 0; t < 20; ++t) {
            const auto key = random_key(lib, 2 * k * k, rng);
            const oracle::Mat u = oracle::network(lib, key);
            CHECK((oracle::from(network_to_matrix(lib, key)) - u).norm() < 1e-9);
            for (BlockValue b = 0; b < qstate::dimension(k); ++b) {
                const auto s = apply_network(basis_state(b, k), lib, key);
                CHECK((oracle::from(s) - u.col(b)).norm() < 1e-9);
            }
            CHECK((u * u.adjoint() - oracle::Mat::Identity(u.rows(), u.cols())).norm() < 1e-9);
        }
    }
}

TEST_CASE("network_to_matrix examples and cap") {
    const GateLibrary lib = default_library(1);
    const auto x = oracle::from(network_to_matrix(lib, make_key(lib, {lib.find("X[0]")})));
    CHECK(std::abs(x(0, 1) - 1.0) < 1e-15);
    CHECK(std::abs(x(0, 0)) < 1e-15);
    const auto h = oracle::from(network_to_matrix(lib, make_key(lib, {lib.find("H[0]")})));
    CHECK(std::abs(h(1, 1) + M_SQRT1_2) < 1e-15);
    const GateLibrary lib3 = default_library(3);
    CHECK_THROWS_AS(network_to_matrix(lib3, make_key(lib3, {0}), 2), ResourceError);
}

TEST_CASE("inverse keys") {
    const GateLibrary lib1 = default_library(1);
    const GateId h = lib1.find("H[0]");
    CHECK(inverse_key(lib1, make_key(lib1, {h})).sequence == std::vector<GateId>{h});

    const GateLibrary lib = default_library(2);
    const GateId s0 = lib.find("S[0]"), sdg0 = lib.find("Sdg[0]"), cx = lib.find("CNOT[0,1]");
    CHECK(inverse_key(lib, make_key(lib, {s0, cx})).sequence == std::vector<GateId>{cx, sdg0});

    Rng rng(77);
    for (int k = 1; k <= 3; ++k) {
        const GateLibrary l = default_library(k);
        for (int t = 0; t < 100; ++t) {
            const auto key = random_key(l, 2 * k * k, rng);
            const auto inv = inverse_key(l, key);
            for (BlockValue b = 0; b < qstate::dimension(k); ++b) {
                const auto back = apply_network(apply_network(basis_state(b, k), l, key), l, inv);
                CHECK(std::abs(back[b] - 1.0) < 1e-9);
            }
        }
    }
}

TEST_CASE("composition is application order") {
    Rng rng(31);
    for (int k = 1; k <= 3; ++k) {
        const GateLibrary lib = default_library(k);
        for (int t = 0; t < 10; ++t) {
            const auto a = random_key(lib, 5, rng);
            const auto b = random_key(lib, 7, rng);
            const oracle::Mat ab = oracle::from(network_to_matrix(lib, concat(a, b)));
            const oracle::Mat ref =
                oracle::from(network_to_matrix(lib, b)) * oracle::from(network_to_matrix(lib, a));
            CHECK((ab - ref).norm() < 1e-9);
        }
    }
}

TEST_CASE("key codec") {
    const GateLibrary lib = default_library(2);
    CHECK(id_width(16) == 4);
    CHECK(id_width(112) == 7);
    CHECK(id_width(7) == 3);
    const auto key = make_key(lib, {1, 15, 0, 9});
    const BitString bits = serialize_key(lib, key);
    CHECK(bits.size() == 32 + 16);
    CHECK(deserialize_key(lib, bits) == key);

    const GateLibrary lib8 = default_library(8);
    Rng rng(4);
    const auto key8 = random_key(lib8, 64, rng);
    CHECK(serialize_key(lib8, key8).size() == 32 + 448);
    CHECK(deserialize_key(lib8, serialize_key(lib8, key8)) == key8);

    BitString truncated = bits;
    truncated.pop_back();
    CHECK_THROWS_AS(deserialize_key(lib, truncated), FormatError);
    CHECK_THROWS_AS(deserialize_key(lib, BitString(10)), FormatError);
    BitString wrong_l = bits;
    wrong_l[31] = !wrong_l[31];  // L field
    CHECK_THROWS_AS(deserialize_key(lib, wrong_l), FormatError);
}

TEST_CASE("hex and key file round trip") {
    const GateLibrary lib = default_library(3);
    Rng rng(12);
    for (int t = 0; t < 20; ++t) {
        const auto key = random_key(lib, 1 + t, rng);
        const BitString bits = serialize_key(lib, key);
        CHECK(from_hex(to_hex(bits), bits.size()) == bits);
        const std::string text = write_key_file(lib, key);
        CHECK(text.rfind("qucipher-key v1 K=3 L=27 M=" + std::to_string(1 + t) + " fp=", 0) == 0);
        CHECK(read_key_file(lib, text) == key);
    }
    CHECK_THROWS_AS(from_hex("zz", 8), FormatError);
    const std::string text = write_key_file(lib, make_key(lib, {0}));
    CHECK_THROWS(read_key_file(default_library(2), text));
    CHECK_THROWS_AS(read_key_file(lib, "garbage\n00"), FormatError);
}

TEST_CASE("keyspace equals L^M by exhaustive enumeration") {
    for (std::size_t l = 1; l <= 4; ++l) {
        const GateLibrary sub = tiny_library(l);
        for (std::size_t m = 1; m <= 3; ++m) {
            std::set<BitString> seen;
            std::vector<GateId> seq(m, 0);
            while (true) {
                seen.insert(serialize_key(sub, make_key(sub, seq)));
                std::size_t i = m;
                while (i > 0 && ++seq[i - 1] == l) seq[--i] = 0;
                if (i == 0) break;
            }
            CHECK(seen.size() == static_cast<std::size_t>(std::pow(l, m)));
        }
    }
}

TEST_CASE("fingerprint depends on K and labels") {
    CHECK(default_library(2).fingerprint() != default_library(3).fingerprint());
    CHECK(default_library(2).fingerprint() == default_library(2).fingerprint());
    CHECK(default_library(2).prefix(15).fingerprint() != default_library(2).fingerprint());
    CHECK(format_fingerprint(0xabc).size() == 16);
}
