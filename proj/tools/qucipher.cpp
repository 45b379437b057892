// qucipher: command-line front end for the simulator and attack harness.

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qucipher/harness.hpp"

namespace {

using namespace qucipher::harness;

struct FlagSpec {
    const char* name;
    const char* help;
    bool is_switch = false;
};

// Shared by every verb; verbs ignore flags they do not read.
const std::vector<FlagSpec> kFlags = {
    {"seed", "master RNG seed"},
    {"out", "write the machine-readable report to this path"},
    {"qubits", "number of qubits K"},
    {"gates", "network length M"},
    {"library-size", "gate library size L (prefix of the default library)"},
    {"alpha", "target relative reconstruction error"},
    {"samples", "intercepted messages per state (list for tomo-scaling)"},
    {"bitrate", "channel bitrate in bit/s"},
    {"C", "constant in N = C*2^(2K)"},
    {"const", "constant in the per-state sample bound"},
    {"keys", "number of random keys"},
    {"corrupt", "give Bob a key with one gate changed", true},
    {"seeds", "independent seeds per sample size"},
    {"plaintext", "fixed plaintext block"},
    {"estimator", "single_shot or frequency"},
    {"repeats", "messages per direction set (frequency estimator)"},
    {"fresh", "fresh messages decoded with the stolen unitary"},
    {"quadrature", "replace sampling with exact quadrature", true},
    {"grid", "quadrature points per angle"},
    {"accept-run", "consecutive matches needed to accept a candidate"},
    {"budget", "maximum intercepted messages"},
    {"cap", "maximum keyspace size to enumerate"},
    {"key-outside", "plant the key outside the enumerated space", true},
    {"source", "markov or uniform"},
    {"transitions", "comma-separated row-major transition matrix"},
    {"lags", "comma-separated correlator lags"},
    {"window", "messages per correlation statistic"},
    {"calibration-runs", "runs used to calibrate the threshold"},
    {"strategy", "eavesdropper strategy tag"},
    {"messages", "messages in the session"},
    {"check-fraction", "fraction of check rounds"},
    {"tolerance", "tolerated check error rate"},
    {"transcript", "write the session transcript (JSONL) to this path"},
};

const std::map<std::string, std::string> kDescriptions = {
    {"estimate", "closed-form attack costs and secure talk time"},
    {"roundtrip", "encode and decode every block under random keys"},
    {"tomo-scaling", "reconstruction error versus sample count (CSV)"},
    {"tomo-attack", "steal the network by tomography and decode fresh traffic"},
    {"guess-attack", "exhaustive network guessing with known plaintexts"},
    {"corr-attack", "network guessing against known plaintext correlations"},
    {"detect", "run a session against an eavesdropper and report the verdict"},
    {"keygen", "write a random key file"},
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Entangled-network block cipher simulator and attack harness"};
    app.require_subcommand(1);

    std::map<std::string, std::map<std::string, std::string>> values;
    std::map<std::string, std::map<std::string, bool>> switches;
    std::map<std::string, std::string> config_paths;

    for (const auto& verb : verbs()) {
        auto* sub = app.add_subcommand(verb, kDescriptions.at(verb));
        sub->add_option("--config", config_paths[verb], "key = value configuration file");
        for (const auto& f : kFlags) {
            const std::string flag = std::string("--") + f.name;
            if (f.is_switch) sub->add_flag(flag, switches[verb][f.name], f.help);
            else sub->add_option(flag, values[verb][f.name], f.help);
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    for (auto* sub : app.get_subcommands()) {
        const std::string verb = sub->get_name();
        std::map<std::string, std::string> flags;
        for (const auto& f : kFlags) {
            const std::string flag = std::string("--") + f.name;
            if (sub->count(flag) == 0) continue;
            flags[f.name] = f.is_switch ? "true" : values[verb][f.name];
        }
        std::map<std::string, std::string> file;
        if (!config_paths[verb].empty()) {
            try {
                file = load_config_file(config_paths[verb]);
            } catch (const qucipher::Error& e) {
                std::cerr << "usage: " << e.what() << "\n";
                return kExitUsage;
            }
        }
        Settings settings(std::move(file), std::move(flags));
        return run_command(verb, settings, std::cout, std::cerr);
    }
    return kExitUsage;
}
