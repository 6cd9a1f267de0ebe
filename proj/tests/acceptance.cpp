// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "plctopo/forward.hpp"
#include "plctopo/harness.hpp"
#include "plctopo/infer.hpp"
#include "plctopo/metrics.hpp"

using namespace plctopo;

namespace {

constexpr double kExactLengthTol = 1e-2;     // m
constexpr double kForwardRelTol = 1e-9;
constexpr double kInvertLengthRelTol = 1e-6;
constexpr double kInvertLoadRelTol = 1e-9;
constexpr double kBandLow = 0.85;
constexpr double kBandHigh = 0.95;
constexpr double kInversionSlack = 0.02;     // one inversion of at most 2 percentage points
constexpr double kRecallFloor = 0.25;

struct Verdict {
    bool pass;
    std::string detail;
};

int failures = 0;
std::string summary;

void report(int id, const std::string& name, const Verdict& v) {
    const std::string line = std::string("[") + (v.pass ? "PASS" : "FAIL") + "] " + std::to_string(id) + " " + name + ": " +
                             v.detail + "\n";
    std::fputs(line.c_str(), stdout);
    std::fflush(stdout);
    summary += line;
    if (!v.pass) ++failures;
}

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

// Non-decreasing with at most one inversion, itself no larger than the slack.
// NaN entries (no data) are skipped.
bool monotone_with_slack(const std::vector<double>& values, std::string& why) {
    int inversions = 0;
    double prev = std::nan("");
    for (double v : values) {
        if (std::isnan(v)) continue;
        if (!std::isnan(prev) && v < prev) {
            ++inversions;
            if (prev - v > kInversionSlack || inversions > 1) {
                why = "drop " + fmt("%.6f", prev) + " -> " + fmt("%.6f", v);
                return false;
            }
        }
        prev = v;
    }
    return true;
}

// Never drops more than the slack below any earlier value.
bool non_decreasing_within_slack(const std::vector<double>& values, std::string& why) {
    double best = -1.0;
    for (double v : values) {
        if (v < best - kInversionSlack) {
            why = "drop " + fmt("%.6f", best) + " -> " + fmt("%.6f", v);
            return false;
        }
        best = std::max(best, v);
    }
    return true;
}

Verdict noiseless_exactness() {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> modems(5, 30);
    int total = 0, exact = 0;
    std::string first_miss;
    for (const CableModel& cable : {CableModel::reference(), CableModel::lossy()}) {
        for (int k = 0; k < 500; ++k) {
            GeneratorConfig g;
            g.n_modems = modems(rng);
            g.d_max = 500.0;
            g.frequency_hz = 10e3;
            g.seed = rng();
            const Topology t = generate_random(g);
            const auto r = infer_topology(all_admittances(t, cable, 10e3), t.loads, cable);
            ++total;
            if (compare(t, r.topology, kExactLengthTol).exact) {
                ++exact;
            } else if (first_miss.empty()) {
                first_miss = ", first miss at seed " + std::to_string(g.seed);
            }
        }
    }
    return {exact == total, std::to_string(exact) + "/" + std::to_string(total) +
                                " noiseless networks (5-30 modems, both cables) exact at " + fmt("%g", kExactLengthTol) +
                                " m" + first_miss};
}

Verdict forward_oracle() {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> modems(2, 30);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        GeneratorConfig g;
        g.n_modems = modems(rng);
        g.seed = rng();
        const CableModel cable = k % 2 == 0 ? CableModel::reference() : CableModel::lossy();
        const Topology t = generate_random(g);
        const auto got = all_admittances(t, cable, 10e3);
        const auto want = oracle::nodal_admittances(t, cable, 10e3);
        for (const auto& [id, y] : want.entries) worst = std::max(worst, std::abs(got.entries.at(id) - y) / std::abs(y));
        for (const auto& [key, h] : want.transfers) {
            worst = std::max(worst, std::abs(got.transfers.at(key) - h) / std::abs(h));
        }
    }
    return {worst <= kForwardRelTol, "100 networks, worst relative deviation from nodal analysis " + fmt("%.3e", worst)};
}

Verdict inversion_suite() {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst_length = 0.0, worst_load = 0.0;
    int unique_minima = 0, grid_cases = 0;
    for (int k = 0; k < 1000; ++k) {
        CableModel cable;
        cable.l_per_m = (0.2 + 0.8 * unit(rng)) * 1e-6;
        cable.c_per_m = (20.0 + 180.0 * unit(rng)) * 1e-12;
        cable.r_per_m = unit(rng) < 0.5 ? 0.0 : 1e-3 * unit(rng);
        cable.g_per_m = unit(rng) < 0.5 ? 0.0 : 1e-9 * unit(rng);
        const auto lc = secondary_params(cable, 10e3);
        const double d = unit(rng) * lc.quarter_wavelength();
        const double g = 1e-3 + 0.05 * unit(rng);
        const Complex y_load(g, (2.0 * unit(rng) - 1.0) * g);
        const Complex y_in = line_input_admittance(lc, d, y_load);

        const double got = line_invert_length(lc, y_load, y_in);
        worst_length = std::max(worst_length, std::abs(got - d) / std::max(d, 1.0));
        worst_load = std::max(worst_load, std::abs(line_invert_load(lc, d, y_in) - y_load) / std::abs(y_load));

        if (k % 20 == 0) {
            ++grid_cases;
            const double step = lc.quarter_wavelength() / 20000.0;
            const auto minima = oracle::grid_minima(cable, 10e3, y_load, y_in, lc.quarter_wavelength(), step);
            if (minima.size() == 1 && std::abs(minima.front() - d) <= step) ++unique_minima;
        }
    }
    const bool pass = worst_length <= kInvertLengthRelTol && worst_load <= kInvertLoadRelTol && unique_minima == grid_cases;
    return {pass, "1000 triples: worst length error " + fmt("%.3e", worst_length) + " rel, worst load round trip " +
                      fmt("%.3e", worst_load) + " rel, grid search single minimum in " + std::to_string(unique_minima) +
                      "/" + std::to_string(grid_cases)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::string csv_path = argc > 1 ? argv[1] : "acceptance_sweep.csv";
    const std::string report_path = argc > 2 ? argv[2] : "acceptance_report.txt";
    const auto t0 = std::chrono::steady_clock::now();

    report(1, "noiseless exactness", noiseless_exactness());
    report(2, "forward-model oracle", forward_oracle());

    const SweepConfig cfg = default_sweep_config();
    const auto sweep = run_sweep(cfg, {2, false});
    const std::string csv = to_csv(sweep);
    std::ofstream(csv_path, std::ios::binary) << csv;
    std::printf("default sweep (%d trials per point) written to %s\n%s", cfg.trials_per_point, csv_path.c_str(), csv.c_str());

    // Criterion 4 first: criterion 3's fallback clause depends on it.
    Verdict shape{true, ""};
    for (int n : cfg.modem_counts) {
        std::vector<double> rates;
        for (double a : cfg.anr_grid_db) rates.push_back(sweep.at(n, a).full_detection_rate);
        std::string why;
        if (!monotone_with_slack(rates, why)) shape = {false, "n = " + std::to_string(n) + " not monotone in ANR (" + why + ")"};
    }
    for (double a : cfg.anr_grid_db) {
        std::vector<double> rates;
        for (auto it = cfg.modem_counts.rbegin(); it != cfg.modem_counts.rend(); ++it) {
            rates.push_back(sweep.at(*it, a).full_detection_rate);
        }
        std::string why;
        if (!non_decreasing_within_slack(rates, why)) {
            shape = {false, "ANR " + fmt("%g", a) + " dB not non-increasing in modem count (" + why + ")"};
        }
    }
    if (shape.pass) shape.detail = "detection rate non-decreasing in ANR and non-increasing in modem count";

    const double rate95 = sweep.at(30, 95).full_detection_rate;
    const bool in_band = rate95 >= kBandLow && rate95 <= kBandHigh;
    Verdict high_anr{in_band || shape.pass, "rate at 95 dB, 30 modems = " + fmt("%.4f", rate95)};
    if (in_band) {
        high_anr.detail += " (inside [0.85, 0.95])";
    } else if (shape.pass) {
        high_anr.detail += " OUTSIDE [0.85, 0.95]; accepted only under the curve-shape clause (criterion 4 holds), "
                        "deviation documented in README";
    } else {
        high_anr.detail += " outside [0.85, 0.95] and the curve shape does not hold";
    }
    report(3, "detection rate at 95 dB", high_anr);
    report(4, "monotonicity", shape);

    std::vector<double> recalls;
    for (double a : cfg.anr_grid_db) recalls.push_back(sweep.at(30, a).element_recall_failed);
    std::string why;
    const double recall55 = sweep.at(30, 55).element_recall_failed;
    const bool recall_monotone = monotone_with_slack(recalls, why);
    report(5, "recall on failed trials",
           {recall55 > kRecallFloor && recall_monotone,
            "recall over failed trials at 55 dB, 30 modems = " + fmt("%.4f", recall55) +
                (recall_monotone ? ", non-decreasing in ANR" : ", not monotone (" + why + ")")});

    report(6, "inversion property suite", inversion_suite());

    const std::string again = to_csv(run_sweep(cfg, {1, false}));
    report(7, "determinism", {again == csv, again == csv ? "2-worker and 1-worker sweeps byte-identical"
                                                         : "CSV differs between worker counts"});

    const double minutes = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
    std::printf("acceptance: %d failing criteria, %.1f min\n", failures, minutes);
    std::ofstream(report_path, std::ios::binary) << summary;
    return failures == 0 ? 0 : 1;
}
