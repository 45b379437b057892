#include "qucipher/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <json.hpp>

namespace qucipher::harness {

using gates::GateLibrary;
using gates::NetworkKey;
using nlohmann::ordered_json;
using qstate::ComplexMatrix;
using qstate::PureState;

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        if (v.find_first_of(".eE") == std::string::npos) {
            if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
            const auto x = std::stoull(v, &used);
            if (used == v.size()) return x;
        } else {
            const double d = std::stod(v, &used);
            if (used == v.size() && d >= 0 && d < 1.8e19 && std::floor(d) == d) {
                return static_cast<std::uint64_t>(d);
            }
        }
    } catch (const std::exception&) {
    }
    throw DomainError("invalid non-negative integer for '" + key + "': " + v);
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used == v.size() && std::isfinite(d)) return d;
    } catch (const std::exception&) {
    }
    throw DomainError("invalid number for '" + key + "': " + v);
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

ordered_json config_json(const std::map<std::string, std::string>& config) {
    ordered_json j = ordered_json::object();
    for (const auto& [k, v] : config) j[k] = v;
    return j;
}

ordered_json optional_json(const std::optional<double>& v) {
    return v ? ordered_json(*v) : ordered_json(nullptr);
}

ordered_json correlator_json(const attacks::Correlator& c) {
    ordered_json rows = ordered_json::array();
    for (std::size_t k = 0; k < c.num_blocks; ++k) {
        ordered_json row = ordered_json::array();
        for (std::size_t l = 0; l < c.num_blocks; ++l) row.push_back(c(k, l));
        rows.push_back(std::move(row));
    }
    return {{"lag", c.lag}, {"xi", std::move(rows)}};
}

std::string key_string(const NetworkKey& key) {
    std::string s;
    for (std::size_t i = 0; i < key.sequence.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(key.sequence[i]);
    }
    return s;
}

std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t stream) { return substream(seed, stream)(); }

protocol::SessionConfig session_config(const GateLibrary& library, const NetworkKey& key,
                                       std::uint64_t seed) {
    protocol::SessionConfig config{library, key};
    config.alice_seed = derived_seed(seed, 10);
    config.bob_seed = derived_seed(seed, 11);
    config.eve_seed = derived_seed(seed, 12);
    return config;
}

std::size_t resolve_length(int k, const std::optional<std::size_t>& length) {
    const std::size_t m = length.value_or(default_length(k));
    if (m < 1) throw DomainError("network length M must be at least 1");
    return m;
}

}  // namespace

std::size_t default_length(int num_qubits) {
    const auto k = static_cast<std::size_t>(num_qubits);
    return 2 * k * k;
}

// ---------------------------------------------------------------------------
// Settings

std::map<std::string, std::string> parse_config(std::string_view text) {
    std::map<std::string, std::string> out;
    std::istringstream is{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw FormatError("config line " + std::to_string(lineno) + ": expected 'key = value'");
        }
        const std::string key = trim(t.substr(0, eq));
        if (key.empty()) throw FormatError("config line " + std::to_string(lineno) + ": empty key");
        out[key] = trim(t.substr(eq + 1));
    }
    return out;
}

std::map<std::string, std::string> load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

Settings::Settings(std::map<std::string, std::string> file, std::map<std::string, std::string> flags)
    : file_(std::move(file)), flags_(std::move(flags)) {}

std::optional<std::string> Settings::lookup(const std::string& key) const {
    if (auto it = flags_.find(key); it != flags_.end()) return it->second;
    if (auto it = file_.find(key); it != file_.end()) return it->second;
    return std::nullopt;
}

bool Settings::has(const std::string& key) const { return lookup(key).has_value(); }

std::string Settings::get_string(const std::string& key, const std::string& fallback) {
    const std::string v = lookup(key).value_or(fallback);
    resolved_[key] = v;
    return v;
}

std::int64_t Settings::get_int(const std::string& key, std::int64_t fallback) {
    const auto v = lookup(key);
    std::int64_t x = fallback;
    if (v) {
        try {
            std::size_t used = 0;
            x = std::stoll(*v, &used);
            if (used != v->size()) throw std::invalid_argument(*v);
        } catch (const std::exception&) {
            throw DomainError("invalid integer for '" + key + "': " + *v);
        }
    }
    resolved_[key] = std::to_string(x);
    return x;
}

std::uint64_t Settings::get_u64(const std::string& key, std::uint64_t fallback) {
    const auto v = lookup(key);
    const std::uint64_t x = v ? parse_u64(key, *v) : fallback;
    resolved_[key] = std::to_string(x);
    return x;
}

double Settings::get_double(const std::string& key, double fallback) {
    const auto v = lookup(key);
    const double x = v ? parse_double(key, *v) : fallback;
    resolved_[key] = format_double(x);
    return x;
}

bool Settings::get_bool(const std::string& key, bool fallback) {
    const auto v = lookup(key);
    bool x = fallback;
    if (v) {
        if (*v == "true" || *v == "1" || *v == "yes" || *v == "on" || v->empty()) x = true;
        else if (*v == "false" || *v == "0" || *v == "no" || *v == "off") x = false;
        else throw DomainError("invalid boolean for '" + key + "': " + *v);
    }
    resolved_[key] = x ? "true" : "false";
    return x;
}

std::vector<std::uint64_t> Settings::get_u64_list(const std::string& key,
                                                  const std::vector<std::uint64_t>& fallback) {
    const auto v = lookup(key);
    std::vector<std::uint64_t> out = fallback;
    if (v) {
        out.clear();
        for (const auto& item : split_list(*v)) out.push_back(parse_u64(key, item));
    }
    std::string joined;
    for (std::size_t i = 0; i < out.size(); ++i) joined += (i ? "," : "") + std::to_string(out[i]);
    resolved_[key] = joined;
    return out;
}

std::vector<double> Settings::get_double_list(const std::string& key,
                                              const std::vector<double>& fallback) {
    const auto v = lookup(key);
    std::vector<double> out = fallback;
    if (v) {
        out.clear();
        for (const auto& item : split_list(*v)) out.push_back(parse_double(key, item));
    }
    std::string joined;
    for (std::size_t i = 0; i < out.size(); ++i) joined += (i ? "," : "") + format_double(out[i]);
    resolved_[key] = joined;
    return out;
}

// ---------------------------------------------------------------------------
// estimate

CostReport cmd_estimate(const EstimateRequest& r) {
    if (r.num_qubits < 1) throw DomainError("K must be at least 1");
    if (!(r.c_factor > 0.0) || !(r.const_factor > 0.0) || !(r.bitrate > 0.0)) {
        throw DomainError("C, Const and bitrate must be positive");
    }
    const int k = r.num_qubits;
    CostReport rep;
    rep.num_qubits = k;
    rep.length = resolve_length(k, r.length);
    rep.library_size = r.library_size.value_or(gates::default_library_size(k));
    if (rep.library_size < 1) throw DomainError("library size L must be at least 1");
    rep.alpha = r.alpha;
    rep.bitrate = r.bitrate;

    rep.intercepted_per_state =
        tomography::required_messages(r.alpha, k, {r.const_factor, r.c_factor});
    const auto cost = tomography::classical_cost_estimates(k);
    rep.operations = cost.operations;
    rep.data = cost.data;
    rep.gates = cost.gates;
    rep.keyspace = attacks::keyspace_size(rep.library_size, rep.length);

    using Float = boost::multiprecision::cpp_bin_float_50;
    Float n = ldexp(Float(r.c_factor), 2 * k);
    rep.messages = static_cast<BigInt>(ceil(n));
    rep.bits = rep.messages * k;

    const double k2 = static_cast<double>(k) * k;
    rep.key_bits_order = k2 * std::log2(k2);
    rep.key_bits_exact = rep.length * static_cast<std::uint64_t>(gates::id_width(rep.library_size));
    rep.secure_seconds = static_cast<double>(rep.bits) / r.bitrate;
    rep.secure_years = rep.secure_seconds / kSecondsPerYear;
    return rep;
}

std::string CostReport::to_text() const {
    char seconds[64];
    char years[64];
    std::snprintf(seconds, sizeof seconds, "%.2f", secure_seconds);
    std::snprintf(years, sizeof years, "%.2g", secure_years);
    char order[64];
    std::snprintf(order, sizeof order, "%.0f", key_bits_order);
    std::ostringstream os;
    os << "K = " << num_qubits << "\n"
       << "M = " << length << "\n"
       << "L = " << library_size << "\n"
       << "N_intercepted per state (alpha=" << alpha << ") = " << intercepted_per_state << "\n"
       << "N_operations = 2^(3K) = " << operations << "\n"
       << "N_data = 2^(2K) = " << data << "\n"
       << "N_gates ~ 2^(2K) = " << gates << "\n"
       << "N_quant = L^M = " << keyspace << "\n"
       << "N = C*2^(2K) = " << messages << "\n"
       << "N_bit = N*K = " << bits << "\n"
       << "N_key ~ K^2*log2(K^2) = " << order << "\n"
       << "N_key exact = M*ceil(log2 L) = " << key_bits_exact << "\n"
       << "secure_time = " << seconds << " s (" << years << " years) at " << bitrate
       << " bit/s\n";
    return os.str();
}

std::string CostReport::to_json() const {
    ordered_json j;
    j["K"] = num_qubits;
    j["M"] = length;
    j["L"] = library_size;
    j["alpha"] = alpha;
    j["bitrate"] = bitrate;
    j["N_intercepted"] = intercepted_per_state.str();
    j["N_operations"] = operations.str();
    j["N_data"] = data.str();
    j["N_gates"] = gates.str();
    j["N_quant"] = keyspace.str();
    j["N"] = messages.str();
    j["N_bit"] = bits.str();
    j["N_key_order"] = key_bits_order;
    j["N_key_exact"] = key_bits_exact;
    j["secure_time_s"] = secure_seconds;
    j["secure_time_years"] = secure_years;
    return j.dump();
}

// ---------------------------------------------------------------------------
// roundtrip

RoundtripReport cmd_roundtrip(const RoundtripRequest& r) {
    if (r.num_qubits < 1 || r.num_qubits > 10) throw DomainError("roundtrip supports 1 <= K <= 10");
    const GateLibrary library = gates::default_library(r.num_qubits);
    const std::size_t m = resolve_length(r.num_qubits, r.length);
    const std::size_t blocks = qstate::dimension(r.num_qubits);

    RoundtripReport rep;
    for (std::size_t i = 0; i < r.num_keys; ++i) {
        Rng key_rng = substream(r.seed, i);
        const NetworkKey key = gates::random_key(library, m, key_rng);
        protocol::SessionConfig alice_cfg{library, key};
        protocol::SessionConfig bob_cfg{library, key};
        if (r.corrupt) {
            const std::size_t pos = uniform_below(key_rng, m);
            auto& id = bob_cfg.key.sequence[pos];
            id = static_cast<gates::GateId>((id + 1) % library.size());
        }
        protocol::Alice alice(alice_cfg);
        protocol::Bob bob(bob_cfg);
        Rng bob_rng = substream(r.seed, 1'000'000 + i);
        for (BlockValue k = 0; k < blocks; ++k) {
            auto msg = alice.encode(k);
            if (bob.decode(msg, bob_rng) != k) ++rep.failures;
            ++rep.plaintexts_checked;
        }
    }
    return rep;
}

std::string RoundtripReport::to_json(const RoundtripRequest& r) const {
    ordered_json j;
    j["mode"] = "roundtrip";
    j["K"] = r.num_qubits;
    j["keys"] = r.num_keys;
    j["M"] = resolve_length(r.num_qubits, r.length);
    j["corrupt"] = r.corrupt;
    j["plaintexts"] = plaintexts_checked;
    j["failures"] = failures;
    j["seed"] = r.seed;
    return j.dump();
}

// ---------------------------------------------------------------------------
// tomography

std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw DomainError("fit_line needs two or more points");
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw DomainError("fit_line: x values are all equal");
    const double slope = sxy / sxx;
    return {slope, my - slope * mx};
}

ScalingReport cmd_tomography_scaling(const ScalingRequest& r) {
    if (r.num_qubits < 1 || r.num_qubits > 3) throw DomainError("tomo-scaling supports 1 <= K <= 3");
    if (r.sample_grid.size() < 2) throw DomainError("sample grid needs at least two sizes");
    if (r.num_seeds < 1) throw DomainError("need at least one seed");
    const int k = r.num_qubits;
    const GateLibrary library = gates::default_library(k);
    Rng setup = substream(r.seed, 0);
    const NetworkKey key = gates::random_key(library, default_length(k), setup);
    const BlockValue plaintext = r.plaintext.value_or(uniform_below(setup, qstate::dimension(k)));
    const protocol::SessionConfig config{library, key};
    const auto truth =
        qstate::density_from_pure(gates::apply_network(qstate::basis_state(plaintext, k), library, key));

    ScalingReport rep;
    std::vector<double> lx, ly;
    for (std::uint64_t n : r.sample_grid) {
        for (std::uint64_t s = 0; s < r.num_seeds; ++s) {
            tomography::TomographyConfig tc{n, r.estimator, r.repeats,
                                            derived_seed(r.seed, 1000 + s * 131 + n)};
            attacks::FixedSequenceSource same({plaintext});
            protocol::AliceTraffic traffic(config, same, n * std::max<std::uint64_t>(r.repeats, 1), true);
            const auto result = tomography::reconstruct_density(traffic, k, tc, &truth);
            rep.rows.push_back({k, n, s, *result.alpha});
            lx.push_back(std::log(static_cast<double>(n)));
            ly.push_back(std::log(*result.alpha));
        }
    }
    std::tie(rep.slope, rep.intercept) = fit_line(lx, ly);
    return rep;
}

void ScalingReport::write_csv(std::ostream& os, const std::map<std::string, std::string>& config) const {
    for (const auto& [k, v] : config) os << "# " << k << " = " << v << "\n";
    os << "K,N,seed,alpha\n";
    char buf[64];
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof buf, "%.10g", row.alpha);
        os << row.num_qubits << "," << row.samples << "," << row.seed << "," << buf << "\n";
    }
    std::snprintf(buf, sizeof buf, "%.6f", slope);
    os << "# slope_log_alpha_vs_log_N = " << buf << "\n";
}

TomographyAttackReport cmd_tomography_attack(const TomographyAttackRequest& r) {
    if (r.num_qubits < 1 || r.num_qubits > 3) throw DomainError("tomo-attack supports 1 <= K <= 3");
    const int k = r.num_qubits;
    const std::size_t blocks = qstate::dimension(k);
    const GateLibrary library = gates::default_library(k);
    Rng setup = substream(r.seed, 0);
    const NetworkKey key = gates::random_key(library, resolve_length(k, r.length), setup);
    const protocol::SessionConfig config{library, key};
    const ComplexMatrix true_u = gates::network_to_matrix(library, key);

    TomographyAttackReport rep;
    std::vector<tomography::ReconstructionResult> rhos;
    for (BlockValue b = 0; b < blocks; ++b) {
        const auto truth = qstate::density_from_pure(
            gates::apply_network(qstate::basis_state(b, k), library, key));
        if (r.quadrature) {
            tomography::ReconstructionResult res{tomography::quadrature_reconstruct(truth, r.quadrature_grid),
                                                 std::nullopt, 0};
            res.alpha = tomography::relative_error(res.rho_calc, truth);
            rhos.push_back(std::move(res));
        } else {
            attacks::FixedSequenceSource same({b});
            protocol::AliceTraffic traffic(config, same, r.samples_per_state, true);
            tomography::TomographyConfig tc{r.samples_per_state, tomography::Estimator::SingleShot, 1,
                                            derived_seed(r.seed, 100 + b)};
            rhos.push_back(tomography::reconstruct_density(traffic, k, tc, &truth));
            rep.messages_intercepted += rhos.back().samples_used;
        }
        rep.alphas.push_back(*rhos.back().alpha);
    }

    tomography::AssembledUnitary stolen;
    try {
        stolen = tomography::assemble_unitary(rhos, k);
    } catch (const DegeneracyError& e) {
        rep.degeneracy = e.what();
        return rep;
    } catch (const ConvergenceError& e) {
        rep.degeneracy = e.what();
        return rep;
    }
    rep.unitarity_defect = stolen.unitarity_defect;
    for (std::size_t c = 0; c < blocks; ++c) {
        Complex overlap{};
        for (std::size_t row = 0; row < blocks; ++row) overlap += std::conj(true_u(row, c)) * stolen.u(row, c);
        rep.column_fidelities.push_back(std::norm(overlap));
    }
    rep.min_fidelity = tomography::min_column_fidelity(stolen.u, true_u);

    // Decode fresh traffic with U_stolen†. Columns carry arbitrary phases,
    // which do not change measurement statistics.
    const ComplexMatrix decoder = stolen.u.adjoint();
    attacks::UniformSource fresh(k, derived_seed(r.seed, 200));
    protocol::Alice alice(config);
    Rng eve_rng = substream(r.seed, 201);
    std::uint64_t ok = 0;
    for (std::uint64_t i = 0; i < r.fresh_messages; ++i) {
        const BlockValue b = fresh.next();
        auto msg = alice.encode(b);
        const PureState s = msg.consume();
        const PureState decoded = PureState::normalized(k, decoder * s.amplitudes());
        if (protocol::measure_computational(decoded, eve_rng) == b) ++ok;
    }
    rep.decode_rate = r.fresh_messages ? static_cast<double>(ok) / static_cast<double>(r.fresh_messages) : 0.0;
    return rep;
}

std::string TomographyAttackReport::to_json(const TomographyAttackRequest& r) const {
    tomography::TomographyConfig tc{r.samples_per_state, tomography::Estimator::SingleShot, 1, r.seed};
    double mean_alpha = 0.0;
    for (double a : alphas) mean_alpha += a;
    if (!alphas.empty()) mean_alpha /= static_cast<double>(alphas.size());
    ordered_json j = ordered_json::parse(tomography::reconstruction_report_json(
        r.num_qubits, tc, alphas.empty() ? std::nullopt : std::optional<double>(mean_alpha),
        degeneracy.empty() ? std::optional<double>(unitarity_defect) : std::nullopt));
    j["mode"] = r.quadrature ? "quadrature" : "sampled";
    j["alphas"] = alphas;
    j["column_fidelities"] = column_fidelities;
    j["min_fidelity"] = min_fidelity;
    j["decode_rate"] = decode_rate;
    j["fresh_messages"] = r.fresh_messages;
    j["messages_intercepted"] = messages_intercepted;
    j["degeneracy"] = degeneracy.empty() ? ordered_json(nullptr) : ordered_json(degeneracy);
    return j.dump();
}

// ---------------------------------------------------------------------------
// guessing

GateLibrary attack_library(int num_qubits, std::optional<std::size_t> library_size) {
    GateLibrary full = gates::default_library(num_qubits);
    if (!library_size || *library_size == full.size()) return full;
    return full.prefix(*library_size);
}

GuessReport cmd_guess_attack(const GuessRequest& r) {
    const GateLibrary library = attack_library(r.num_qubits, r.library_size);
    if (r.length < 1) throw DomainError("network length M must be at least 1");
    Rng setup = substream(r.seed, 0);
    GuessReport rep;
    rep.true_key = gates::random_key(library, r.length + (r.key_outside ? 1 : 0), setup);
    const protocol::SessionConfig config = session_config(library, rep.true_key, r.seed);

    attacks::UniformSource plaintexts(r.num_qubits, derived_seed(r.seed, 1));
    protocol::AliceTraffic oracle(config, plaintexts, r.budget, true);
    Rng eve_rng = substream(r.seed, 2);
    rep.result = attacks::guess_attack(library, r.length, oracle, r.accept_after, eve_rng, r.cap);
    if (rep.result.key) {
        rep.found_equivalent = attacks::decodes_equivalently(library, rep.true_key, *rep.result.key);
    }
    if (r.num_qubits <= 2 && rep.result.keyspace <= 100'000) {
        rep.distinct_actions = attacks::distinct_action_classes(library, r.length);
    }
    return rep;
}

std::string GuessReport::to_json(const GuessRequest& r) const {
    ordered_json j = ordered_json::parse(attacks::attack_report_json(result, "guess", r.seed));
    j["K"] = r.num_qubits;
    j["L"] = attack_library(r.num_qubits, r.library_size).size();
    j["M"] = r.length;
    j["accept_after"] = r.accept_after;
    j["true_key"] = key_string(true_key);
    j["found_key"] = result.key ? ordered_json(key_string(*result.key)) : ordered_json(nullptr);
    j["found_equivalent"] = found_equivalent;
    j["distinct_actions"] =
        distinct_actions ? ordered_json(*distinct_actions) : ordered_json(nullptr);
    j["failure"] = result.failure.empty() ? ordered_json(nullptr) : ordered_json(result.failure);
    return j.dump();
}

// ---------------------------------------------------------------------------
// correlations

attacks::TransitionMatrix default_transitions(int num_qubits, SourceKind kind, std::uint64_t seed) {
    const std::size_t n = qstate::dimension(num_qubits);
    if (kind == SourceKind::Uniform) return attacks::TransitionMatrix::uniform(n);
    if (num_qubits == 2) {
        // Strongly asymmetric chain: no relabeling of the four blocks leaves
        // its lag-1 statistics unchanged.
        return {4,
                {0.70, 0.20, 0.05, 0.05,  //
                 0.10, 0.10, 0.70, 0.10,  //
                 0.30, 0.10, 0.10, 0.50,  //
                 0.05, 0.60, 0.15, 0.20}};
    }
    Rng rng = substream(seed, 50);
    attacks::TransitionMatrix t{n, std::vector<double>(n * n)};
    for (std::size_t k = 0; k < n; ++k) {
        double row = 0.0;
        for (std::size_t l = 0; l < n; ++l) {
            const double u = uniform01(rng);
            t.p[k * n + l] = u * u * u + 0.01;
            row += t.p[k * n + l];
        }
        for (std::size_t l = 0; l < n; ++l) t.p[k * n + l] /= row;
    }
    return t;
}

namespace {

struct CorrelationSetup {
    GateLibrary library;
    NetworkKey true_key;
    attacks::TransitionMatrix transitions;
    std::vector<attacks::Correlator> known;
};

CorrelationSetup correlation_setup(const CorrelationRequest& r) {
    GateLibrary library = attack_library(r.num_qubits, r.library_size);
    if (r.length < 1) throw DomainError("network length M must be at least 1");
    if (r.lags.empty()) throw DomainError("at least one lag is required");
    if (r.window <= *std::max_element(r.lags.begin(), r.lags.end())) {
        throw DomainError("window must exceed the largest lag");
    }
    Rng setup = substream(r.seed, 0);
    NetworkKey key = gates::random_key(library, r.length, setup);
    attacks::TransitionMatrix t = r.transitions.value_or(default_transitions(r.num_qubits, r.source, r.seed));
    const attacks::MarkovSource model(t, 0);
    std::vector<attacks::Correlator> known;
    for (auto lag : r.lags) known.push_back(model.exact_correlator(lag));
    return {std::move(library), std::move(key), std::move(t), std::move(known)};
}

double true_key_statistic(const CorrelationSetup& s, const NetworkKey& candidate,
                          const CorrelationRequest& r, std::uint64_t run_seed) {
    const protocol::SessionConfig config{s.library, s.true_key};
    attacks::MarkovSource source(s.transitions, derived_seed(run_seed, 1));
    protocol::AliceTraffic traffic(config, source, r.window, false);
    Rng rng = substream(run_seed, 2);
    return *attacks::correlation_statistic(s.library, candidate, traffic, s.known, r.window, rng);
}

double calibrate(const CorrelationSetup& s, const CorrelationRequest& r) {
    if (r.calibration_runs < 1) throw DomainError("calibration needs at least one run");
    std::vector<double> stats;
    stats.reserve(r.calibration_runs);
    for (std::uint64_t i = 0; i < r.calibration_runs; ++i) {
        stats.push_back(true_key_statistic(s, s.true_key, r, derived_seed(r.seed, 10'000 + i)));
    }
    return attacks::percentile(std::move(stats), r.calibration_quantile);
}

}  // namespace

CorrelationReport cmd_correlation_attack(const CorrelationRequest& r) {
    const CorrelationSetup s = correlation_setup(r);
    CorrelationReport rep;
    rep.true_key = s.true_key;
    rep.known = s.known;
    // Check the cap before spending time on calibration.
    attacks::CandidateEnumerator probe(s.library, r.length, r.cap);
    rep.threshold = calibrate(s, r);

    const protocol::SessionConfig config = session_config(s.library, s.true_key, r.seed);
    attacks::MarkovSource source(s.transitions, derived_seed(r.seed, 3));
    protocol::AliceTraffic stream(config, source, r.budget, false);
    Rng eve_rng = substream(r.seed, 4);
    rep.result = attacks::correlation_attack(s.library, r.length, stream, s.known, r.window,
                                             rep.threshold, eve_rng, r.cap);
    if (rep.result.key) {
        rep.found_equivalent = attacks::decodes_equivalently(s.library, s.true_key, *rep.result.key);
    }

    // Statistics of W fresh messages decoded with the found key (or the true
    // key when nothing was found).
    const NetworkKey shown = rep.result.key.value_or(s.true_key);
    const NetworkKey inverse = gates::inverse_key(s.library, shown);
    attacks::MarkovSource fresh(s.transitions, derived_seed(r.seed, 5));
    protocol::Alice alice(config);
    Rng rng = substream(r.seed, 6);
    std::vector<BlockValue> decoded;
    for (std::size_t i = 0; i < r.window; ++i) {
        auto msg = alice.encode(fresh.next());
        PureState st = msg.consume();
        gates::apply_network_in_place(st, s.library, inverse);
        decoded.push_back(protocol::measure_computational(st, rng));
    }
    for (const auto& xi : s.known) {
        rep.observed.push_back(attacks::empirical_correlator(decoded, xi.lag, xi.num_blocks));
    }
    return rep;
}

std::string CorrelationReport::to_json(const CorrelationRequest& r) const {
    ordered_json j = ordered_json::parse(attacks::attack_report_json(result, "correlation", r.seed));
    j["K"] = r.num_qubits;
    j["M"] = r.length;
    j["source"] = r.source == SourceKind::Markov ? "markov" : "uniform";
    j["window"] = r.window;
    j["threshold"] = threshold;
    j["ambiguous"] = ambiguous();
    j["symmetric_relabelings"] = result.symmetric_relabelings
                                     ? ordered_json(*result.symmetric_relabelings)
                                     : ordered_json(nullptr);
    j["true_key"] = key_string(true_key);
    j["found_key"] = result.key ? ordered_json(key_string(*result.key)) : ordered_json(nullptr);
    j["found_equivalent"] = found_equivalent;
    ordered_json kn = ordered_json::array();
    for (const auto& c : known) kn.push_back(correlator_json(c));
    ordered_json ob = ordered_json::array();
    for (const auto& c : observed) ob.push_back(correlator_json(c));
    j["known_xi"] = std::move(kn);
    j["observed_xi"] = std::move(ob);
    j["failure"] = result.failure.empty() ? ordered_json(nullptr) : ordered_json(result.failure);
    return j.dump();
}

Discrimination evaluate_correlation_discrimination(const CorrelationRequest& r, std::uint64_t runs) {
    const CorrelationSetup s = correlation_setup(r);
    const int k = r.num_qubits;
    const gates::GateId flip = s.library.find("X[" + std::to_string(k - 1) + "]");
    const NetworkKey wrong = gates::concat(gates::make_key(s.library, {flip}), s.true_key);

    Discrimination d;
    d.threshold = calibrate(s, r);
    d.runs = runs;
    for (std::uint64_t i = 0; i < runs; ++i) {
        const std::uint64_t run_seed = derived_seed(r.seed, 20'000 + i);
        const bool accepted = true_key_statistic(s, s.true_key, r, run_seed) <= d.threshold;
        const bool rejected =
            true_key_statistic(s, wrong, r, derived_seed(run_seed, 9)) > d.threshold;
        d.true_accepted += accepted;
        d.wrong_rejected += rejected;
        d.both += accepted && rejected;
    }
    return d;
}

// ---------------------------------------------------------------------------
// detection

double z_resend_error_rate(const GateLibrary& library, const NetworkKey& key) {
    const std::size_t n = qstate::dimension(library.num_qubits());
    double match = 0.0;
    for (BlockValue k = 0; k < n; ++k) match += protocol::z_resend_match_probability(library, key, k);
    return 1.0 - match / static_cast<double>(n);
}

DetectionReport run_detection(const DetectionRequest& r, const NetworkKey& key) {
    const GateLibrary library = gates::default_library(r.num_qubits);
    protocol::SessionConfig config = session_config(library, key, r.seed);
    config.check_fraction = r.check_fraction;
    config.error_tolerance = r.tolerance;

    std::optional<NetworkKey> trial;
    if (r.strategy == "intercept-resend-network") {
        Rng trial_rng = substream(r.seed, 20);
        trial = gates::random_key(library, key.sequence.size(), trial_rng);
    }
    auto eve = protocol::make_strategy(r.strategy, library, trial);
    attacks::UniformSource plaintexts(r.num_qubits, derived_seed(r.seed, 21));

    DetectionReport rep;
    rep.key = key;
    rep.transcript = protocol::run_session(plaintexts, *eve, config, r.messages);
    const std::uint64_t delivered = rep.transcript.records.size() - rep.transcript.lost;
    if (delivered > 0) {
        rep.empirical_error =
            static_cast<double>(rep.transcript.decode_errors) / static_cast<double>(delivered);
    }
    if (r.strategy == "intercept-resend-z" && delivered > 0) {
        std::map<BlockValue, double> cache;
        double mean = 0.0, var = 0.0;
        for (const auto& rec : rep.transcript.records) {
            if (!rec.k_prime) continue;
            auto it = cache.find(rec.k);
            if (it == cache.end()) {
                it = cache.emplace(rec.k, 1.0 - protocol::z_resend_match_probability(library, key, rec.k)).first;
            }
            mean += it->second;
            var += it->second * (1.0 - it->second);
        }
        const double n = static_cast<double>(delivered);
        rep.analytic_error = mean / n;
        rep.sigma = std::sqrt(var) / n;
        const double diff = rep.empirical_error - *rep.analytic_error;
        rep.z_score = *rep.sigma > 0.0 ? diff / *rep.sigma : (std::abs(diff) < 1e-12 ? 0.0 : INFINITY);
    }
    return rep;
}

DetectionReport cmd_detection(const DetectionRequest& r) {
    if (r.num_qubits < 1 || r.num_qubits > 10) throw DomainError("detect supports 1 <= K <= 10");
    const GateLibrary library = gates::default_library(r.num_qubits);
    Rng key_rng = substream(r.seed, 0);
    const NetworkKey key = gates::random_key(library, resolve_length(r.num_qubits, r.length), key_rng);
    return run_detection(r, key);
}

std::string DetectionReport::to_json(const DetectionRequest& r) const {
    ordered_json j;
    j["mode"] = "detect";
    j["strategy"] = r.strategy;
    j["verdict"] = protocol::to_string(transcript.verdict);
    j["messages"] = transcript.records.size();
    j["checked"] = transcript.checked;
    j["errors"] = transcript.check_errors;
    j["lost"] = transcript.lost;
    j["empirical_error"] = empirical_error;
    j["analytic_error"] = optional_json(analytic_error);
    j["sigma"] = optional_json(sigma);
    j["z"] = z_score && std::isfinite(*z_score) ? ordered_json(*z_score) : ordered_json(nullptr);
    j["key"] = key_string(key);
    j["seed"] = r.seed;
    return j.dump();
}

// ---------------------------------------------------------------------------
// keygen

std::string cmd_keygen(int num_qubits, std::optional<std::size_t> length, std::uint64_t seed) {
    const GateLibrary library = gates::default_library(num_qubits);
    Rng rng = substream(seed, 0);
    return gates::write_key_file(library,
                                 gates::random_key(library, resolve_length(num_qubits, length), rng));
}

// ---------------------------------------------------------------------------
// dispatch

std::vector<std::string> verbs() {
    return {"estimate", "roundtrip", "tomo-scaling", "tomo-attack", "guess-attack", "corr-attack",
            "detect", "keygen"};
}

namespace {

// Closed-form estimates only; no state is simulated.
constexpr int kMaxEstimateQubits = 128;

std::optional<std::size_t> optional_size(Settings& s, const std::string& key) {
    if (!s.has(key)) return std::nullopt;
    return static_cast<std::size_t>(s.get_u64(key, 0));
}

int qubits(Settings& s, int fallback, int max = kMaxQubits) {
    const auto k = s.get_int("qubits", fallback);
    if (k < 1 || k > max) {
        throw DomainError("--qubits must lie in [1, " + std::to_string(max) + "]");
    }
    return static_cast<int>(k);
}

void emit(const std::string& path, const std::string& body) {
    if (path.empty()) return;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DomainError("cannot write output file " + path);
    f << body;
}

std::string with_config(const std::string& json, const Settings& s) {
    ordered_json j = ordered_json::parse(json);
    j["config"] = config_json(s.resolved());
    return j.dump() + "\n";
}

int dispatch(std::string_view verb, Settings& s, std::ostream& out, std::ostream& err) {
    const std::uint64_t seed = s.get_u64("seed", 1);
    const std::string out_path = s.get_string("out", "");

    if (verb == "estimate") {
        EstimateRequest r;
        r.num_qubits = qubits(s, 8, kMaxEstimateQubits);
        r.length = optional_size(s, "gates");
        r.library_size = optional_size(s, "library-size");
        r.c_factor = s.get_double("C", 1.0);
        r.const_factor = s.get_double("const", 1.0);
        r.alpha = s.get_double("alpha", 0.1);
        r.bitrate = s.get_double("bitrate", kDefaultBitrate);
        const CostReport rep = cmd_estimate(r);
        out << rep.to_text();
        emit(out_path, with_config(rep.to_json(), s));
        return kExitOk;
    }
    if (verb == "roundtrip") {
        RoundtripRequest r;
        r.num_qubits = qubits(s, 4);
        r.num_keys = s.get_u64("keys", 100);
        r.length = optional_size(s, "gates");
        r.corrupt = s.get_bool("corrupt", false);
        r.seed = seed;
        const RoundtripReport rep = cmd_roundtrip(r);
        const std::string json = with_config(rep.to_json(r), s);
        out << json;
        emit(out_path, json);
        if (rep.failures > 0) {
            err << "roundtrip: " << rep.failures << " decode failures\n";
            return kExitViolation;
        }
        return kExitOk;
    }
    if (verb == "tomo-scaling") {
        ScalingRequest r;
        r.num_qubits = qubits(s, 1);
        r.sample_grid = s.get_u64_list("samples", r.sample_grid);
        r.num_seeds = s.get_u64("seeds", 20);
        r.seed = seed;
        if (s.has("plaintext")) r.plaintext = s.get_u64("plaintext", 0);
        const std::string est = s.get_string("estimator", "single_shot");
        if (est == "frequency") r.estimator = tomography::Estimator::Frequency;
        else if (est != "single_shot") throw DomainError("estimator must be single_shot or frequency");
        r.repeats = s.get_u64("repeats", 1);
        const ScalingReport rep = cmd_tomography_scaling(r);
        std::ostringstream csv;
        rep.write_csv(csv, s.resolved());
        out << csv.str();
        emit(out_path, csv.str());
        return kExitOk;
    }
    if (verb == "tomo-attack") {
        TomographyAttackRequest r;
        r.num_qubits = qubits(s, 2);
        r.samples_per_state = s.get_u64("samples", 100000);
        r.length = optional_size(s, "gates");
        r.seed = seed;
        r.fresh_messages = s.get_u64("fresh", 1000);
        r.quadrature = s.get_bool("quadrature", false);
        r.quadrature_grid = static_cast<int>(s.get_u64("grid", 100));
        const TomographyAttackReport rep = cmd_tomography_attack(r);
        const std::string json = with_config(rep.to_json(r), s);
        out << json;
        emit(out_path, json);
        return kExitOk;
    }
    if (verb == "guess-attack") {
        GuessRequest r;
        r.num_qubits = qubits(s, 2);
        r.library_size = optional_size(s, "library-size");
        r.length = s.get_u64("gates", 2);
        r.seed = seed;
        r.accept_after = s.get_u64("accept-run", attacks::kDefaultAcceptRun);
        r.budget = s.get_u64("budget", r.budget);
        r.cap = s.get_u64("cap", r.cap);
        r.key_outside = s.get_bool("key-outside", false);
        const GuessReport rep = cmd_guess_attack(r);
        const std::string json = with_config(rep.to_json(r), s);
        out << json;
        emit(out_path, json);
        return kExitOk;
    }
    if (verb == "corr-attack") {
        CorrelationRequest r;
        r.num_qubits = qubits(s, 2);
        r.library_size = optional_size(s, "library-size");
        r.length = s.get_u64("gates", 2);
        r.seed = seed;
        const std::string src = s.get_string("source", "markov");
        if (src == "uniform") r.source = SourceKind::Uniform;
        else if (src != "markov") throw DomainError("source must be markov or uniform");
        if (s.has("transitions")) {
            const auto p = s.get_double_list("transitions", {});
            const std::size_t n = qstate::dimension(r.num_qubits);
            if (p.size() != n * n) throw DomainError("transitions needs 4^K entries");
            r.transitions = attacks::TransitionMatrix{n, p};
        }
        r.lags = s.get_u64_list("lags", r.lags);
        r.window = s.get_u64("window", r.window);
        r.calibration_runs = s.get_u64("calibration-runs", r.calibration_runs);
        r.budget = s.get_u64("budget", r.budget);
        r.cap = s.get_u64("cap", r.cap);
        const CorrelationReport rep = cmd_correlation_attack(r);
        const std::string json = with_config(rep.to_json(r), s);
        out << json;
        emit(out_path, json);
        if (rep.ambiguous()) {
            err << "corr-attack: known statistics are invariant under "
                << *rep.result.symmetric_relabelings
                << " block relabelings; the accepted network is ambiguous\n";
        }
        return kExitOk;
    }
    if (verb == "detect") {
        DetectionRequest r;
        r.num_qubits = qubits(s, 3);
        r.length = optional_size(s, "gates");
        r.strategy = s.get_string("strategy", r.strategy);
        r.messages = s.get_u64("messages", r.messages);
        r.seed = seed;
        r.check_fraction = s.get_double("check-fraction", r.check_fraction);
        r.tolerance = s.get_double("tolerance", r.tolerance);
        const std::string transcript_path = s.get_string("transcript", "");
        const DetectionReport rep = cmd_detection(r);
        const std::string json = with_config(rep.to_json(r), s);
        out << json;
        emit(out_path, json);
        emit(transcript_path, rep.transcript.to_jsonl());
        return kExitOk;
    }
    if (verb == "keygen") {
        const int k = qubits(s, 4);
        const auto m = optional_size(s, "gates");
        if (m && *m < static_cast<std::size_t>(k) * k) {
            err << "warning: network length " << *m << " is below K^2 = " << k * k << "\n";
        }
        const std::string text = cmd_keygen(k, m, seed);
        if (out_path.empty()) out << text;
        else emit(out_path, text);
        return kExitOk;
    }
    err << "unknown verb '" << verb << "'\n";
    return kExitUsage;
}

}  // namespace

int run_command(std::string_view verb, Settings& settings, std::ostream& out, std::ostream& err) {
    try {
        return dispatch(verb, settings, out, err);
    } catch (const ResourceError& e) {
        err << "resource cap: " << e.what() << "\n";
        return kExitResource;
    } catch (const DomainError& e) {
        err << "usage: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ValidationError& e) {
        err << "usage: " << e.what() << "\n";
        return kExitUsage;
    } catch (const FormatError& e) {
        err << "usage: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitViolation;
    }
}

}  // namespace qucipher::harness
