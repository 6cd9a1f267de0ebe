#pragma once

// Monte Carlo sweep over (modem count, ANR): generate, measure, perturb,
// infer and score, with per-trial seeds derived from the configuration only.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "plctopo/error.hpp"
#include "plctopo/metrics.hpp"
#include "plctopo/tline.hpp"
#include "plctopo/topology.hpp"

namespace plctopo {

struct SweepConfig {
    std::vector<int> modem_counts;
    std::vector<double> anr_grid_db;  ///< +inf is the noiseless point
    int trials_per_point = 1;
    double frequency = 10e3;
    double d_max = 500.0;
    CableModel cable = CableModel::reference();
    GeneratorConfig generator;  ///< n_modems, d_max, frequency_hz and seed are overwritten per trial
    std::uint64_t master_seed = 0;
    double length_tol = 1.0;
    double epsilon_merge = 1.0;

    /// Throws ConfigError.
    void check() const;
};

/// {5, 10, 20, 30} modems, 55..95 dB in 5 dB steps, 1000 trials per point.
SweepConfig default_sweep_config();

/// Parses a config document. Every key is optional and defaults to
/// default_sweep_config(); unknown keys are errors.
SweepConfig parse_sweep_config(std::string_view text);

/// Cable from a JSON document: "reference", "lossy" or an object with
/// r_per_m, l_per_m, g_per_m and c_per_m. Throws ConfigError.
CableModel parse_cable_model(std::string_view text);

struct GridPoint {
    int n_modems = 0;
    double anr_db = 0.0;
    int trials = 0;
    int exact = 0;
    double full_detection_rate = 0.0;
    double element_recall_failed = 0.0;  ///< NaN when every trial was exact
    double mean_junctions = 0.0;         ///< junctions of the generated networks
    double mean_wall_ms = 0.0;
};

struct SweepReport {
    std::vector<GridPoint> points;  ///< modem-count major, in config order

    const GridPoint& at(int n_modems, double anr_db) const;
};

struct TrialSeeds {
    std::uint64_t topology;
    std::uint64_t noise;
};

/// splitmix64 finaliser.
std::uint64_t splitmix64(std::uint64_t x);

/// Topology seed from (master, n, trial); noise seed from the topology seed.
/// The ANR is deliberately not mixed in: every ANR point sees the same
/// networks and the same normalised noise draws.
TrialSeeds trial_seeds(std::uint64_t master_seed, int n_modems, int trial);

struct TrialResult {
    ComparisonReport comparison;
    std::size_t junctions = 0;
    double wall_ms = 0.0;
};

/// One trial of the sweep, reproducible from its seeds.
TrialResult run_trial(const SweepConfig& cfg, int n_modems, double anr_db, const TrialSeeds& seeds);

/// A trial raised an error; the seeds replay it.
class SweepAborted : public Error {
public:
    SweepAborted(const std::string& what, int n_modems, double anr_db, int trial, TrialSeeds seeds);

    int n_modems() const noexcept { return n_modems_; }
    double anr_db() const noexcept { return anr_db_; }
    int trial() const noexcept { return trial_; }
    TrialSeeds seeds() const noexcept { return seeds_; }

private:
    int n_modems_;
    double anr_db_;
    int trial_;
    TrialSeeds seeds_;
};

struct SweepOptions {
    unsigned workers = 1;
    bool timing = true;  ///< false writes 0 wall time so output is byte-reproducible
};

SweepReport run_sweep(const SweepConfig& cfg, const SweepOptions& options = {});

/// Header `n_modems,anr_db,trials,full_detection_rate,element_recall_failed,mean_wall_ms`.
std::string to_csv(const SweepReport& report);

}  // namespace plctopo
