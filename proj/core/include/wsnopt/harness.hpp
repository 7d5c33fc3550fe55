#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "wsnopt/baselines.hpp"
#include "wsnopt/network.hpp"
#include "wsnopt/trainer.hpp"

namespace wsnopt {

// Instance generator: gateway pinned at the disc center, sensors placed
// area-uniformly (r = R*sqrt(u)). Defaults are the reference deployment:
// 1 J batteries, 50 nJ/bit processing, 1 pJ/(m^2*bit) amplification,
// 500-1000 bit payloads.
struct GenParams {
    int nodes = 20;  // gateway included
    double radius_m = 1000.0;
    uint64_t seed = 1;
    double initial_energy_j = 1.0;
    double eps_proc = 50e-9;
    double rho = 1e-12;
    int64_t data_bits_min = 500;
    int64_t data_bits_max = 1000;
};

NetworkSpec generate_instance(const GenParams& params);

struct BaselineReport {
    int64_t star = 0;
    double random_mean = 0.0;
    double random_std = 0.0;
    int64_t mst = 0;
    std::optional<int64_t> oracle;
};

// star/MST plus mean and std over n_random seeded random topologies. The
// random seeds derive from `seed` exactly like the trainer's baseline
// columns, so file and CSV agree for the same seed.
BaselineReport compute_baselines(const NetworkSpec& spec, uint64_t seed, int n_random = 100,
                                 LoadsMode mode = LoadsMode::Subtree);

std::string serialize_baselines(const BaselineReport& report);
BaselineReport parse_baselines(const std::string& text);

// "IT:id[,id...][;IT:id,...]" -> sensor removals scheduled at the listed
// 1-based iterations, strictly increasing across entries.
std::vector<NetworkChange> parse_remove_script(const std::string& script);

struct ExperimentConfig {
    std::string instance_file;  // when set, loads this file instead of generating
    GenParams gen;
    TrainConfig train;  // train.out_dir is overridden with the experiment out_dir
    bool with_baselines = true;
    bool with_oracle = false;
    bool with_training = true;
    std::vector<NetworkChange> changes;
    int oracle_threads = 1;
    std::string out_dir;
    std::function<void(const IterationReport&)> iteration_hook;
    std::function<void(uint64_t done, uint64_t total)> oracle_progress;
};

struct ExperimentResult {
    NetworkSpec spec;
    std::optional<BaselineReport> baselines;
    std::optional<OracleResult> oracle;
    std::vector<IterationReport> reports;
};

// Sequential driver. Writes instance.txt, then baselines.csv (plus
// oracle_topology.txt when the oracle is on), then trains: metrics.csv and
// checkpoints/ under out_dir, final_topology.txt from a greedy rollout.
// Throws on the first error; artifacts already written stay on disk.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

}  // namespace wsnopt
