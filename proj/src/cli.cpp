#include "plctopo/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <thread>

#include "plctopo/error.hpp"
#include "plctopo/forward.hpp"
#include "plctopo/harness.hpp"
#include "plctopo/infer.hpp"
#include "plctopo/metrics.hpp"
#include "plctopo/topology.hpp"

namespace plctopo {
namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_output(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty()) {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InvalidInput("cannot write " + path);
    f << text;
    if (!f) throw InvalidInput("error writing " + path);
}

CableModel resolve_cable(const std::string& spec) {
    if (spec == "reference") return CableModel::reference();
    if (spec == "lossy") return CableModel::lossy();
    return parse_cable_model(read_file(spec));
}

double parse_anr(const std::string& text) {
    if (text == "noiseless" || text == "inf") return std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != text.size() || !std::isfinite(v)) throw CLI::ValidationError("--anr", "expected a number in dB or \"noiseless\"");
    return v;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Topology inference for tree-shaped power-line networks from single-frequency measurements", "plctopo"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_path;
    bool quiet = false;
    app.add_option("--config", config_path, "Sweep configuration file");
    app.add_option("--seed", seed, "Random seed");
    app.add_option("--out", out_path, "Output file (default: stdout)");
    app.add_flag("--quiet", quiet, "Suppress progress messages");

    std::string input, loads_path, truth_path, inferred_path, report_path, cable_spec = "reference", anr_text;
    int modems = 10;
    double d_max = 500.0, branch_rate = 2.0, frequency = 10e3, length_tol = 1.0, epsilon_merge = 1.0;
    std::optional<double> forward_frequency;
    unsigned workers = std::max(1u, std::thread::hardware_concurrency());
    bool no_timing = false;

    auto* gen = app.add_subcommand("generate", "Write a random topology");
    gen->add_option("--modems", modems, "Number of modems")->check(CLI::Range(2, 100000));
    gen->add_option("--d-max", d_max, "Maximum branch length, m");
    gen->add_option("--branch-rate", branch_rate, "Poisson mean of junction fan-out");
    gen->add_option("--frequency", frequency, "Frequency stamped into the topology, Hz");

    auto* fwd = app.add_subcommand("forward", "Compute the admittance set of a topology");
    fwd->add_option("--input", input, "Topology file")->required();
    fwd->add_option("--cable", cable_spec, "reference, lossy or a cable file");
    fwd->add_option("--frequency", forward_frequency, "Frequency, Hz (default: the topology's)");

    auto* noise = app.add_subcommand("noise", "Perturb an admittance set");
    noise->add_option("--input", input, "Admittance set file")->required();
    noise->add_option("--anr", anr_text, "ANR in dB, or \"noiseless\"")->required();

    auto* inf = app.add_subcommand("infer", "Infer a topology from an admittance set");
    inf->add_option("--input", input, "Admittance set file")->required();
    inf->add_option("--loads", loads_path, "File with a top-level \"loads\" array")->required();
    inf->add_option("--cable", cable_spec, "reference, lossy or a cable file");
    inf->add_option("--report", report_path, "Write inference diagnostics here");
    inf->add_option("--epsilon-merge", epsilon_merge, "Branches shorter than this merge junctions, m");

    auto* cmp = app.add_subcommand("compare", "Score an inferred topology against the truth");
    cmp->add_option("--truth", truth_path, "True topology file")->required();
    cmp->add_option("--inferred", inferred_path, "Inferred topology file")->required();
    cmp->add_option("--length-tol", length_tol, "Length tolerance, m");

    auto* sweep = app.add_subcommand("sweep", "Run a Monte Carlo sweep and write CSV");
    sweep->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
    sweep->add_flag("--no-timing", no_timing, "Write 0 wall time for reproducible output");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << app.help();
        return 1;
    }

    auto note = [&](const std::string& msg) {
        if (!quiet) err << msg << "\n";
    };

    try {
        if (gen->parsed()) {
            GeneratorConfig g;
            g.n_modems = modems;
            g.d_max = d_max;
            g.branch_rate = branch_rate;
            g.frequency_hz = frequency;
            g.seed = seed.value_or(0);
            write_output(out_path, serialize(generate_random(g)), out);
        } else if (fwd->parsed()) {
            const Topology t = deserialize(read_file(input));
            const CableModel cable = resolve_cable(cable_spec);
            const auto lc = secondary_params(cable, forward_frequency.value_or(t.frequency_hz));
            const auto issues = validate(t, lc);
            if (!issues.empty()) throw InvalidInput("invalid topology: " + issues.front().message);
            write_output(out_path, serialize(all_admittances(t, cable, lc.frequency)), out);
        } else if (noise->parsed()) {
            const auto set = deserialize_admittance_set(read_file(input));
            const double anr = parse_anr(anr_text);
            write_output(out_path, serialize(apply_noise(set, {anr, seed.value_or(0)})), out);
        } else if (inf->parsed()) {
            const auto set = deserialize_admittance_set(read_file(input));
            const auto loads = deserialize_loads(read_file(loads_path));
            InferenceOptions opts;
            opts.epsilon_merge = epsilon_merge;
            const auto result = infer_topology(set, loads, resolve_cable(cable_spec), opts);
            write_output(out_path, serialize(result.topology), out);
            if (!report_path.empty()) write_output(report_path, serialize_diagnostics(result), out);
            if (!result.converged) note("warning: inference did not converge");
        } else if (cmp->parsed()) {
            const auto report = compare(deserialize(read_file(truth_path)), deserialize(read_file(inferred_path)), length_tol);
            write_output(out_path, serialize(report), out);
        } else if (sweep->parsed()) {
            SweepConfig cfg = config_path.empty() ? default_sweep_config() : parse_sweep_config(read_file(config_path));
            if (seed) cfg.master_seed = *seed;
            SweepOptions opts;
            opts.workers = workers;
            opts.timing = !no_timing;
            note("sweep: " + std::to_string(cfg.modem_counts.size() * cfg.anr_grid_db.size()) + " grid points x " +
                 std::to_string(cfg.trials_per_point) + " trials, " + std::to_string(workers) + " workers");
            const auto report = run_sweep(cfg, opts);
            write_output(out_path, to_csv(report), out);
        }
    } catch (const CLI::ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const SweepAborted& e) {
        err << "sweep aborted: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

int cli_main(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return cli_main(args, std::cout, std::cerr);
}

}  // namespace plctopo
