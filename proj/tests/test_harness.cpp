#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include <json.hpp>

#include "qucipher/harness.hpp"

using namespace qucipher;
using namespace qucipher::harness;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::string_view verb, std::map<std::string, std::string> flags,
        std::map<std::string, std::string> file = {}) {
    Settings s(std::move(file), std::move(flags));
    std::ostringstream out, err;
    const int code = run_command(verb, s, out, err);
    return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("config parsing") {
    const auto m = parse_config("# comment\nqubits = 3\n  seed=9 # trailing\n\nsamples = 100, 1000\n");
    CHECK(m.at("qubits") == "3");
    CHECK(m.at("seed") == "9");
    CHECK(m.at("samples") == "100, 1000");
    CHECK_THROWS_AS(parse_config("no equals sign"), FormatError);
    CHECK_THROWS_AS(parse_config("= 4"), FormatError);
    CHECK_THROWS(load_config_file("/nonexistent/file.cfg"));
}

TEST_CASE("settings layering and recording") {
    Settings s({{"qubits", "3"}, {"alpha", "0.2"}}, {{"qubits", "5"}});
    CHECK(s.get_int("qubits", 1) == 5);
    CHECK(s.get_double("alpha", 0.1) == 0.2);
    CHECK(s.get_u64("seed", 7) == 7);
    CHECK(s.get_u64_list("samples", {1, 2}) == std::vector<std::uint64_t>{1, 2});
    CHECK(s.resolved().at("qubits") == "5");
    CHECK(s.resolved().at("seed") == "7");
    CHECK(s.resolved().at("samples") == "1,2");

    Settings t({}, {{"samples", "1e2,1e3"}, {"flag", "yes"}, {"bad", "x"}, {"neg", "-3"}});
    CHECK(t.get_u64_list("samples", {}) == std::vector<std::uint64_t>{100, 1000});
    CHECK(t.get_bool("flag", false));
    CHECK_THROWS_AS(t.get_int("bad", 0), DomainError);
    CHECK_THROWS_AS(t.get_double("bad", 0), DomainError);
    CHECK_THROWS_AS(t.get_bool("bad", false), DomainError);
    CHECK_THROWS_AS(t.get_u64("neg", 0), DomainError);
}

TEST_CASE("estimate reproduces the worked numbers") {
    const auto k8 = cmd_estimate({.num_qubits = 8});
    CHECK(k8.messages == 65536);
    CHECK(k8.bits == 524288);
    CHECK(k8.intercepted_per_state == 25600);
    CHECK(k8.operations == BigInt(1) << 24);
    CHECK(k8.length == 128);
    CHECK(k8.library_size == 112);
    CHECK(k8.key_bits_exact == 128 * 7);
    CHECK(k8.key_bits_order == doctest::Approx(384));
    CHECK(k8.keyspace == boost::multiprecision::pow(BigInt(112), 128));
    CHECK(k8.to_text().find("secure_time = 10.49 s") != std::string::npos);

    const auto k24 = cmd_estimate({.num_qubits = 24});
    CHECK(k24.secure_seconds == doctest::Approx(1.351e11).epsilon(1e-3));
    CHECK(k24.secure_years == doctest::Approx(4281.3).epsilon(1e-3));
    CHECK(k24.to_text().find("(4.3e+03 years)") != std::string::npos);

    EstimateRequest one{.num_qubits = 1};
    one.alpha = 1.0;
    CHECK(cmd_estimate(one).intercepted_per_state == 2);

    EstimateRequest custom{.num_qubits = 4};
    custom.length = 16;
    custom.library_size = 16;
    custom.c_factor = 2.5;
    const auto c = cmd_estimate(custom);
    CHECK(c.keyspace == BigInt(1) << 64);
    CHECK(c.messages == 640);
    CHECK(c.key_bits_exact == 64);

    const auto j = nlohmann::json::parse(k8.to_json());
    CHECK(j["N"] == "65536");
    CHECK(j["N_bit"] == "524288");
    EstimateRequest bad{.num_qubits = 2};
    bad.bitrate = 0;
    CHECK_THROWS_AS(cmd_estimate(bad), DomainError);
}

TEST_CASE("roundtrip") {
    const auto ok = cmd_roundtrip({.num_qubits = 4, .num_keys = 100});
    CHECK(ok.plaintexts_checked == 1600);
    CHECK(ok.failures == 0);
    RoundtripRequest k8{.num_qubits = 8, .num_keys = 10};
    CHECK(cmd_roundtrip(k8).failures == 0);
    RoundtripRequest bad{.num_qubits = 4, .num_keys = 20};
    bad.corrupt = true;
    CHECK(cmd_roundtrip(bad).failures > 0);
    CHECK_THROWS(cmd_roundtrip({.num_qubits = 11, .num_keys = 1}));
}

TEST_CASE("line fit") {
    const auto [s, b] = fit_line({0, 1, 2, 3}, {1, 3, 5, 7});
    CHECK(s == doctest::Approx(2.0));
    CHECK(b == doctest::Approx(1.0));
    CHECK_THROWS(fit_line({1}, {1}));
    CHECK_THROWS(fit_line({1, 1}, {1, 2}));
}

TEST_CASE("tomography scaling CSV") {
    ScalingRequest r;
    r.sample_grid = {100, 400, 1600};
    r.num_seeds = 10;
    const auto rep = cmd_tomography_scaling(r);
    CHECK(rep.rows.size() == 30);
    CHECK(rep.slope < -0.3);
    CHECK(rep.slope > -0.7);
    std::ostringstream os;
    rep.write_csv(os, {{"qubits", "1"}, {"seed", "1"}});
    const std::string csv = os.str();
    CHECK(csv.rfind("# qubits = 1\n# seed = 1\nK,N,seed,alpha\n1,100,0,", 0) == 0);
    CHECK(csv.find("# slope_log_alpha_vs_log_N = ") != std::string::npos);
    CHECK(csv.find('\r') == std::string::npos);

    // Quadrupling N halves alpha on average.
    double a100 = 0, a1600 = 0;
    for (const auto& row : rep.rows) {
        if (row.samples == 100) a100 += row.alpha;
        if (row.samples == 1600) a1600 += row.alpha;
    }
    CHECK(a100 / a1600 == doctest::Approx(4.0).epsilon(0.3));
    CHECK_THROWS(cmd_tomography_scaling({.num_qubits = 4}));
}

TEST_CASE("tomography attack in quadrature mode is exact at K=1") {
    TomographyAttackRequest r;
    r.num_qubits = 1;
    r.quadrature = true;
    const auto rep = cmd_tomography_attack(r);
    CHECK(rep.degeneracy.empty());
    CHECK(rep.min_fidelity == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(rep.decode_rate == 1.0);
    CHECK(rep.messages_intercepted == 0);
}

TEST_CASE("tomography attack reports its decode rate at a reduced budget") {
    TomographyAttackRequest r;
    r.num_qubits = 2;
    r.samples_per_state = 1000;
    const auto rep = cmd_tomography_attack(r);
    MESSAGE("decode rate at 1e3 samples per state: " << rep.decode_rate);
    CHECK(rep.messages_intercepted == 4000);
    CHECK(rep.alphas.size() == 4);
    const auto j = nlohmann::json::parse(rep.to_json(r));
    CHECK(j["K"] == 2);
    CHECK(j["N"] == 1000);
}

TEST_CASE("guess attack report") {
    GuessRequest r;
    r.library_size = 16;
    const auto rep = cmd_guess_attack(r);
    CHECK(rep.result.found);
    CHECK(rep.found_equivalent);
    CHECK(rep.result.keyspace == 256);
    CHECK(rep.distinct_actions.has_value());
    const auto j = nlohmann::json::parse(rep.to_json(r));
    CHECK(j["keyspace"] == "256");
    CHECK(j["L"] == 16);

    GuessRequest k1;
    k1.num_qubits = 1;
    const auto rep1 = cmd_guess_attack(k1);
    CHECK(rep1.result.found);
    CHECK(rep1.result.candidates_tried <= 49);

    GuessRequest big;
    big.length = 5;
    CHECK_THROWS_AS(cmd_guess_attack(big), ResourceError);
}

TEST_CASE("detection") {
    DetectionRequest passive;
    passive.strategy = "passive";
    const auto p = cmd_detection(passive);
    CHECK(p.transcript.verdict == protocol::Verdict::Clean);
    CHECK_FALSE(p.analytic_error.has_value());

    DetectionRequest collect;
    collect.strategy = "collect-tomography";
    CHECK(cmd_detection(collect).transcript.verdict == protocol::Verdict::Abort);

    const auto lib = gates::default_library(3);
    const auto key = gates::make_key(lib, {lib.find("H[0]"), lib.find("CNOT[0,1]"), lib.find("H[2]"),
                                           lib.find("T[2]"), lib.find("H[2]")});
    const double q = z_resend_error_rate(lib, key);
    CHECK(q > 0.1);
    const auto z = run_detection({}, key);
    CHECK(z.transcript.verdict == protocol::Verdict::Abort);
    REQUIRE(z.analytic_error);
    CHECK(std::abs(*z.z_score) < 4.0);
    const auto j = nlohmann::json::parse(z.to_json({}));
    CHECK(j["verdict"] == "abort");
}

TEST_CASE("correlation attack via the harness") {
    CorrelationRequest r;
    r.library_size = 16;
    r.calibration_runs = 20;
    const auto rep = cmd_correlation_attack(r);
    CHECK_FALSE(rep.ambiguous());
    CHECK(rep.result.found);
    CHECK(rep.found_equivalent);
    CHECK(rep.observed.size() == 1);
    const auto j = nlohmann::json::parse(rep.to_json(r));
    CHECK(j["known_xi"].size() == 1);
    CHECK(j["observed_xi"][0]["xi"].size() == 4);

    CorrelationRequest u = r;
    u.source = SourceKind::Uniform;
    CHECK(cmd_correlation_attack(u).ambiguous());

    CorrelationRequest bad = r;
    bad.window = 1;
    CHECK_THROWS_AS(cmd_correlation_attack(bad), DomainError);
}

TEST_CASE("default transitions") {
    const auto t2 = default_transitions(2, SourceKind::Markov, 1);
    CHECK(t2.num_blocks == 4);
    const std::vector<attacks::Correlator> xi{attacks::MarkovSource(t2, 0).exact_correlator(1)};
    CHECK(attacks::symmetric_relabelings(xi) == 0);
    const auto t3 = default_transitions(3, SourceKind::Markov, 1);
    CHECK_NOTHROW(attacks::MarkovSource(t3, 0));
    CHECK(default_transitions(2, SourceKind::Uniform, 1).p[5] == doctest::Approx(0.25));
}

TEST_CASE("keygen output round-trips through the key reader") {
    const std::string text = cmd_keygen(3, std::nullopt, 5);
    const auto lib = gates::default_library(3);
    const auto key = gates::read_key_file(lib, text);
    CHECK(key.sequence.size() == 18);
    CHECK(cmd_keygen(3, std::nullopt, 5) == text);
}

TEST_CASE("run_command exit codes and embedded configuration") {
    const auto est = run("estimate", {{"qubits", "8"}, {"bitrate", "50000"}});
    CHECK(est.code == kExitOk);
    CHECK(est.out.find("N = C*2^(2K) = 65536") != std::string::npos);

    CHECK(run("estimate", {{"qubits", "abc"}}).code == kExitUsage);
    CHECK(run("nope", {}).code == kExitUsage);
    CHECK(run("guess-attack", {{"gates", "5"}}).code == kExitResource);
    CHECK(run("roundtrip", {{"corrupt", "true"}, {"keys", "5"}}).code == kExitViolation);
    CHECK(run("detect", {{"strategy", "bogus"}}).code == kExitUsage);

    const auto rt = run("roundtrip", {{"keys", "3"}}, {{"qubits", "2"}, {"seed", "4"}});
    CHECK(rt.code == kExitOk);
    const auto j = nlohmann::json::parse(rt.out);
    CHECK(j["K"] == 2);
    CHECK(j["config"]["seed"] == "4");
    CHECK(j["config"]["keys"] == "3");
}

TEST_CASE("commands are byte-for-byte deterministic") {
    for (const auto& [verb, flags] : std::vector<std::pair<std::string, std::map<std::string, std::string>>>{
             {"detect", {{"messages", "300"}}},
             {"guess-attack", {{"library-size", "16"}}},
             {"tomo-scaling", {{"samples", "100,200"}, {"seeds", "3"}}},
             {"keygen", {{"qubits", "2"}}},
         }) {
        CHECK(run(verb, flags).out == run(verb, flags).out);
    }
    CHECK(run("keygen", {{"seed", "1"}}).out != run("keygen", {{"seed", "2"}}).out);
}

TEST_CASE("verbs") {
    CHECK(verbs().size() == 8);
}
