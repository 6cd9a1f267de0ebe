#include "plctopo/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <set>
#include <thread>
#include <tuple>

#include "json_util.hpp"
#include "plctopo/forward.hpp"
#include "plctopo/infer.hpp"

namespace plctopo {
namespace {

constexpr double kNoiseless = std::numeric_limits<double>::infinity();

std::string format_anr(double anr_db) {
    if (std::isinf(anr_db)) return "noiseless";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", anr_db);
    return buf;
}

CableModel read_cable(const detail::Json& v) {
    if (v.is_string()) {
        const auto name = v.get<std::string>();
        if (name == "reference") return CableModel::reference();
        if (name == "lossy") return CableModel::lossy();
        throw ConfigError("cable must be \"reference\", \"lossy\" or an object");
    }
    if (!v.is_object()) throw ConfigError("cable must be \"reference\", \"lossy\" or an object");
    for (const auto& [key, val] : v.items()) {
        if (key != "r_per_m" && key != "l_per_m" && key != "g_per_m" && key != "c_per_m") {
            throw ConfigError("unknown cable key \"" + key + "\"");
        }
    }
    CableModel c;
    c.r_per_m = detail::require_number(v, "r_per_m", "cable");
    c.l_per_m = detail::require_number(v, "l_per_m", "cable");
    c.g_per_m = detail::require_number(v, "g_per_m", "cable");
    c.c_per_m = detail::require_number(v, "c_per_m", "cable");
    return c;
}

double read_number(const detail::Json& v, const std::string& key) {
    if (!v.is_number()) throw ConfigError("\"" + key + "\" must be a number");
    return v.get<double>();
}

void read_generator(const detail::Json& v, GeneratorConfig& g) {
    if (!v.is_object()) throw ConfigError("generator must be an object");
    for (const auto& [key, val] : v.items()) {
        if (key == "branch_rate") {
            g.branch_rate = read_number(val, key);
        } else if (key == "d_min") {
            g.d_min = read_number(val, key);
        } else if (key == "g_min_s") {
            g.load_distribution.g_min_s = read_number(val, key);
        } else if (key == "g_max_s") {
            g.load_distribution.g_max_s = read_number(val, key);
        } else if (key == "b_over_g_max") {
            g.load_distribution.b_over_g_max = read_number(val, key);
        } else {
            throw ConfigError("unknown generator key \"" + key + "\"");
        }
    }
}

}  // namespace

void SweepConfig::check() const {
    if (modem_counts.empty()) throw ConfigError("modem_counts must not be empty");
    if (anr_grid_db.empty()) throw ConfigError("anr_grid_db must not be empty");
    if (trials_per_point < 1) throw ConfigError("trials_per_point must be at least 1");
    for (int n : modem_counts) {
        if (n < 2) throw ConfigError("modem counts must be at least 2");
    }
    for (double a : anr_grid_db) {
        if (std::isnan(a) || a == -kNoiseless) throw ConfigError("ANR values must be finite or \"noiseless\"");
    }
    if (!(frequency > 0.0) || !std::isfinite(frequency)) throw ConfigError("frequency must be positive");
    if (!(length_tol >= 0.0)) throw ConfigError("length_tol must be non-negative");
    if (!(epsilon_merge >= 0.0)) throw ConfigError("epsilon_merge must be non-negative");
    try {
        cable.check();
        GeneratorConfig g = generator;
        g.n_modems = modem_counts.front();
        g.d_max = d_max;
        g.check();
        const auto lc = secondary_params(cable, frequency);
        if (d_max > lc.quarter_wavelength()) throw ConfigError("d_max exceeds a quarter wavelength");
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
}

SweepConfig default_sweep_config() {
    SweepConfig cfg;
    cfg.modem_counts = {5, 10, 20, 30};
    for (int a = 55; a <= 95; a += 5) cfg.anr_grid_db.push_back(a);
    cfg.trials_per_point = 1000;
    return cfg;
}

SweepConfig parse_sweep_config(std::string_view text) {
    detail::Json doc;
    try {
        doc = detail::parse_json(text);
    } catch (const ParseError& e) {
        throw ConfigError(e.what());
    }
    if (!doc.is_object()) throw ConfigError("sweep config must be an object");

    SweepConfig cfg = default_sweep_config();
    for (const auto& [key, v] : doc.items()) {
        if (key == "modem_counts") {
            if (!v.is_array()) throw ConfigError("modem_counts must be an array");
            cfg.modem_counts.clear();
            for (const auto& n : v) {
                if (!n.is_number_integer()) throw ConfigError("modem_counts must hold integers");
                cfg.modem_counts.push_back(n.get<int>());
            }
        } else if (key == "anr_grid_db") {
            if (!v.is_array()) throw ConfigError("anr_grid_db must be an array");
            cfg.anr_grid_db.clear();
            for (const auto& a : v) {
                if (a.is_string() && a.get<std::string>() == "noiseless") {
                    cfg.anr_grid_db.push_back(kNoiseless);
                } else {
                    cfg.anr_grid_db.push_back(read_number(a, key));
                }
            }
        } else if (key == "trials_per_point") {
            if (!v.is_number_integer()) throw ConfigError("trials_per_point must be an integer");
            cfg.trials_per_point = v.get<int>();
        } else if (key == "frequency") {
            cfg.frequency = read_number(v, key);
        } else if (key == "d_max") {
            cfg.d_max = read_number(v, key);
        } else if (key == "cable") {
            cfg.cable = read_cable(v);
        } else if (key == "generator") {
            read_generator(v, cfg.generator);
        } else if (key == "master_seed") {
            if (!v.is_number_unsigned()) throw ConfigError("master_seed must be a non-negative integer");
            cfg.master_seed = v.get<std::uint64_t>();
        } else if (key == "length_tol") {
            cfg.length_tol = read_number(v, key);
        } else if (key == "epsilon_merge") {
            cfg.epsilon_merge = read_number(v, key);
        } else {
            throw ConfigError("unknown config key \"" + key + "\"");
        }
    }
    cfg.check();
    return cfg;
}

CableModel parse_cable_model(std::string_view text) {
    try {
        return read_cable(detail::parse_json(text));
    } catch (const ParseError& e) {
        throw ConfigError(e.what());
    }
}

const GridPoint& SweepReport::at(int n_modems, double anr_db) const {
    for (const auto& p : points) {
        if (p.n_modems == n_modems && (p.anr_db == anr_db)) return p;
    }
    throw InvalidParameter("no grid point for n = " + std::to_string(n_modems) + ", ANR = " + format_anr(anr_db));
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

TrialSeeds trial_seeds(std::uint64_t master_seed, int n_modems, int trial) {
    std::uint64_t h = splitmix64(master_seed);
    h = splitmix64(h ^ static_cast<std::uint64_t>(n_modems));
    h = splitmix64(h ^ static_cast<std::uint64_t>(trial));
    return {h, splitmix64(h ^ 0x6E6F697365ULL)};
}

TrialResult run_trial(const SweepConfig& cfg, int n_modems, double anr_db, const TrialSeeds& seeds) {
    const auto start = std::chrono::steady_clock::now();
    GeneratorConfig g = cfg.generator;
    g.n_modems = n_modems;
    g.d_max = cfg.d_max;
    g.frequency_hz = cfg.frequency;
    g.seed = seeds.topology;
    const Topology truth = generate_random(g);

    AdmittanceSet measured = all_admittances(truth, cfg.cable, cfg.frequency);
    if (!std::isinf(anr_db)) measured = apply_noise(measured, {anr_db, seeds.noise});

    InferenceOptions opts;
    opts.epsilon_merge = cfg.epsilon_merge;
    const auto inferred = infer_topology(measured, truth.loads, cfg.cable, opts);

    TrialResult r;
    r.comparison = compare(truth, inferred.topology, cfg.length_tol);
    r.junctions = truth.junction_count();
    r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return r;
}

SweepAborted::SweepAborted(const std::string& what, int n_modems, double anr_db, int trial, TrialSeeds seeds)
    : Error("trial failed (n_modems " + std::to_string(n_modems) + ", anr_db " + format_anr(anr_db) + ", trial " +
            std::to_string(trial) + ", topology seed " + std::to_string(seeds.topology) + ", noise seed " +
            std::to_string(seeds.noise) + "): " + what),
      n_modems_(n_modems),
      anr_db_(anr_db),
      trial_(trial),
      seeds_(seeds) {}

SweepReport run_sweep(const SweepConfig& cfg, const SweepOptions& options) {
    cfg.check();
    const std::size_t per_point = static_cast<std::size_t>(cfg.trials_per_point);
    const std::size_t n_points = cfg.modem_counts.size() * cfg.anr_grid_db.size();
    const std::size_t total = n_points * per_point;

    struct Slot {
        std::optional<TrialResult> result;
        std::string error;
    };
    std::vector<Slot> slots(total);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};

    auto coordinates = [&](std::size_t index) {
        const std::size_t point = index / per_point;
        const int trial = static_cast<int>(index % per_point);
        const int n = cfg.modem_counts[point / cfg.anr_grid_db.size()];
        const double anr = cfg.anr_grid_db[point % cfg.anr_grid_db.size()];
        return std::tuple<int, double, int>{n, anr, trial};
    };

    auto worker = [&] {
        for (;;) {
            const std::size_t index = next.fetch_add(1);
            if (index >= total || failed.load()) return;
            const auto [n, anr, trial] = coordinates(index);
            try {
                slots[index].result = run_trial(cfg, n, anr, trial_seeds(cfg.master_seed, n, trial));
            } catch (const std::exception& e) {
                slots[index].error = e.what();
                failed.store(true);
            }
        }
    };

    const unsigned workers = std::max(1u, options.workers);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    if (failed.load()) {
        for (std::size_t index = 0; index < total; ++index) {
            if (!slots[index].error.empty()) {
                const auto [n, anr, trial] = coordinates(index);
                throw SweepAborted(slots[index].error, n, anr, trial, trial_seeds(cfg.master_seed, n, trial));
            }
        }
    }

    SweepReport report;
    for (std::size_t point = 0; point < n_points; ++point) {
        GridPoint gp;
        std::tie(gp.n_modems, gp.anr_db, std::ignore) = coordinates(point * per_point);
        gp.trials = cfg.trials_per_point;
        double recall_sum = 0.0;
        double junctions = 0.0;
        double wall = 0.0;
        for (std::size_t t = 0; t < per_point; ++t) {
            const TrialResult& r = *slots[point * per_point + t].result;
            if (r.comparison.exact) {
                ++gp.exact;
            } else {
                recall_sum += r.comparison.element_recall;
            }
            junctions += static_cast<double>(r.junctions);
            wall += r.wall_ms;
        }
        const int failures = gp.trials - gp.exact;
        gp.full_detection_rate = static_cast<double>(gp.exact) / gp.trials;
        gp.element_recall_failed = failures == 0 ? std::numeric_limits<double>::quiet_NaN() : recall_sum / failures;
        gp.mean_junctions = junctions / gp.trials;
        gp.mean_wall_ms = options.timing ? wall / gp.trials : 0.0;
        report.points.push_back(gp);
    }
    return report;
}

std::string to_csv(const SweepReport& report) {
    std::string out = "n_modems,anr_db,trials,full_detection_rate,element_recall_failed,mean_wall_ms\n";
    char buf[256];
    for (const auto& p : report.points) {
        const std::string recall = [&] {
            if (std::isnan(p.element_recall_failed)) return std::string("nan");
            char r[32];
            std::snprintf(r, sizeof r, "%.6f", p.element_recall_failed);
            return std::string(r);
        }();
        std::snprintf(buf, sizeof buf, "%d,%s,%d,%.6f,%s,%.3f\n", p.n_modems, format_anr(p.anr_db).c_str(), p.trials,
                      p.full_detection_rate, recall.c_str(), p.mean_wall_ms);
        out += buf;
    }
    return out;
}

}  // namespace plctopo
