#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "wsnopt/harness.hpp"
#include "wsnopt/instance_io.hpp"
#include "wsnopt/rng.hpp"

using namespace wsnopt;

namespace {

const std::map<std::string, LoadsMode> kLoadsNames{{"subtree", LoadsMode::Subtree},
                                                   {"literal", LoadsMode::Literal}};
const std::map<std::string, EvalMode> kEvalNames{{"sample", EvalMode::Sample}, {"greedy", EvalMode::Greedy}};

void add_gen_options(CLI::App* cmd, GenParams& gp) {
    cmd->add_option("--nodes", gp.nodes, "Total node count, gateway included")->check(CLI::Range(2, 1000000));
    cmd->add_option("--radius", gp.radius_m, "Deployment disc radius in meters");
    cmd->add_option("--energy", gp.initial_energy_j, "Initial sensor battery, joules");
    cmd->add_option("--eps-proc", gp.eps_proc, "Processing energy, J/bit");
    cmd->add_option("--rho", gp.rho, "Amplification energy, J/(m^2*bit)");
    cmd->add_option("--bits-min", gp.data_bits_min, "Per-round data lower bound, bits");
    cmd->add_option("--bits-max", gp.data_bits_max, "Per-round data upper bound, bits");
}

NetworkSpec resolve_instance(const std::string& file, const GenParams& gp) {
    return file.empty() ? generate_instance(gp) : load_instance(file);
}

void print_iteration(const IterationReport& r) {
    std::printf("iter %3d  mean %9.1f  std %8.1f  best %7lld  greedy %7lld  loss %9.5f%s\n", r.iteration,
                r.mean_lifetime, r.std_lifetime, static_cast<long long>(r.best_lifetime),
                static_cast<long long>(r.greedy_lifetime), r.loss, r.change_event ? "  [network change]" : "");
    std::fflush(stdout);
}

void oracle_progress(uint64_t done, uint64_t total) {
    std::fprintf(stderr, "oracle: %llu/%llu trees\n", static_cast<unsigned long long>(done),
                 static_cast<unsigned long long>(total));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Energy-aware tree topology construction for wireless sensor networks"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from a TOML/INI file; command line flags win");

    // gen
    auto* gen = app.add_subcommand("gen", "Generate a network instance file");
    GenParams gen_gp;
    std::string gen_out;
    add_gen_options(gen, gen_gp);
    gen->add_option("--seed", gen_gp.seed, "Layout seed");
    gen->add_option("--out", gen_out, "Instance file path (stdout when omitted)");
    gen->callback([&] {
        const NetworkSpec spec = generate_instance(gen_gp);
        if (gen_out.empty())
            std::fputs(serialize_instance(spec).c_str(), stdout);
        else
            save_instance(spec, gen_out);
    });

    // baseline
    auto* baseline = app.add_subcommand("baseline", "Score star/random/MST (optionally oracle) topologies");
    std::string bl_instance, bl_out;
    GenParams bl_gp;
    uint64_t bl_seed = 1;
    int bl_count = 100, bl_threads = 1;
    bool bl_oracle = false;
    LoadsMode bl_loads = LoadsMode::Subtree;
    baseline->add_option("--instance", bl_instance, "Instance file (generated from flags when omitted)");
    add_gen_options(baseline, bl_gp);
    baseline->add_option("--seed", bl_seed, "Seed for the layout and the random-topology draws");
    baseline->add_option("--count", bl_count, "Number of random topologies")->check(CLI::PositiveNumber);
    baseline->add_flag("--oracle", bl_oracle, "Also compute the exact optimum (at most 9 active nodes)");
    baseline->add_option("--threads", bl_threads, "Oracle worker threads")->check(CLI::PositiveNumber);
    baseline->add_option("--loads", bl_loads, "Load accounting: subtree or literal")
        ->transform(CLI::CheckedTransformer(kLoadsNames, CLI::ignore_case));
    baseline->add_option("--out", bl_out, "Also write the CSV here");
    baseline->callback([&] {
        bl_gp.seed = bl_seed;
        const NetworkSpec spec = resolve_instance(bl_instance, bl_gp);
        BaselineReport report = compute_baselines(spec, bl_seed, bl_count, bl_loads);
        if (bl_oracle) {
            OracleOptions opts;
            opts.mode = bl_loads;
            opts.threads = bl_threads;
            opts.progress = oracle_progress;
            report.oracle = brute_force_optimal(spec, opts).best_lifetime;
        }
        const std::string csv = serialize_baselines(report);
        std::fputs(csv.c_str(), stdout);
        if (!bl_out.empty()) write_text_file(bl_out, csv);
    });

    // oracle
    auto* oracle = app.add_subcommand("oracle", "Exhaustive optimum over all labeled trees (N_active <= 9)");
    std::string or_instance, or_out;
    GenParams or_gp;
    uint64_t or_seed = 1;
    int or_threads = 1;
    LoadsMode or_loads = LoadsMode::Subtree;
    oracle->add_option("--instance", or_instance, "Instance file (generated from flags when omitted)");
    add_gen_options(oracle, or_gp);
    oracle->add_option("--seed", or_seed, "Layout seed when generating");
    oracle->add_option("--threads", or_threads, "Worker threads")->check(CLI::PositiveNumber);
    oracle->add_option("--loads", or_loads, "Load accounting: subtree or literal")
        ->transform(CLI::CheckedTransformer(kLoadsNames, CLI::ignore_case));
    oracle->add_option("--out", or_out, "Write the optimal topology file here");
    oracle->callback([&] {
        or_gp.seed = or_seed;
        const NetworkSpec spec = resolve_instance(or_instance, or_gp);
        OracleOptions opts;
        opts.mode = or_loads;
        opts.threads = or_threads;
        opts.progress = oracle_progress;
        const OracleResult result = brute_force_optimal(spec, opts);
        std::printf("trees %llu\nlifetime %lld\ncontinuous %.12g\n",
                    static_cast<unsigned long long>(result.tree_count),
                    static_cast<long long>(result.best_lifetime), result.best_continuous);
        if (!or_out.empty()) save_topology(spec, result.best_topology, or_out);
    });

    // train
    auto* train = app.add_subcommand("train", "Run the full training experiment into an output directory");
    ExperimentConfig ex;
    uint64_t tr_seed = 1;
    std::string tr_remove;
    bool tr_strict = false, tr_no_baselines = false, tr_oracle = false, tr_bare = false;
    train->add_option("--instance", ex.instance_file, "Instance file (generated from flags when omitted)");
    add_gen_options(train, ex.gen);
    train->add_option("--seed", tr_seed, "Top-level seed; derives layout, episodes, shuffles, evaluation");
    train->add_option("--iterations", ex.train.iterations, "Outer-loop iterations")->check(CLI::PositiveNumber);
    train->add_option("--episodes", ex.train.episodes_per_iter, "Episodes per iteration")
        ->check(CLI::PositiveNumber);
    train->add_option("--sims", ex.train.sims_per_state, "MCTS simulations per construction step")
        ->check(CLI::PositiveNumber);
    train->add_option("--batch", ex.train.minibatch, "Minibatch size")->check(CLI::PositiveNumber);
    train->add_option("--lr", ex.train.learning_rate, "Adam learning rate");
    train->add_option("--cpuct", ex.train.c_puct, "PUCT exploration constant");
    train->add_option("--eval-count", ex.train.eval_realizations, "Sampled rollouts per evaluation")
        ->check(CLI::PositiveNumber);
    train->add_option("--replay", ex.train.replay_capacity,
                      "Replay capacity in samples; 0 = auto, -1 = unbounded");
    train->add_option("--threads", ex.train.threads, "Episode worker threads")->check(CLI::PositiveNumber);
    train->add_option("--dirichlet-eps", ex.train.dirichlet_eps, "Root Dirichlet noise weight (0 = off)");
    train->add_option("--filters", ex.train.net.filters, "Trunk convolution filters")->check(CLI::PositiveNumber);
    train->add_option("--blocks", ex.train.net.conv_blocks, "Residual blocks")->check(CLI::PositiveNumber);
    train->add_option("--loads", ex.train.loads_mode, "Load accounting: subtree or literal")
        ->transform(CLI::CheckedTransformer(kLoadsNames, CLI::ignore_case));
    train->add_flag("--reuse-tree,!--no-reuse-tree", ex.train.reuse_tree, "Keep the search tree between moves");
    train->add_flag("--bare-encoding", tr_bare, "Encode only the adjacency channel");
    train->add_flag("--strict-paper", tr_strict,
                    "Literal-loop preset: unbounded replay, no tree reuse, bare adjacency encoding");
    train->add_flag("--no-baselines", tr_no_baselines, "Skip the baselines file");
    train->add_flag("--oracle", tr_oracle, "Also compute the exact optimum (at most 9 active nodes)");
    train->add_option("--oracle-threads", ex.oracle_threads, "Oracle worker threads")->check(CLI::PositiveNumber);
    train->add_option("--remove", tr_remove, "Removal script IT:id[,id...][;IT:ids...], e.g. 20:3,5");
    train->add_option("--out", ex.out_dir, "Output directory for all artifacts")->required();
    train->callback([&] {
        ex.gen.seed = tr_seed;
        ex.train.seed = tr_seed;
        if (tr_bare) ex.train.encode_mode = EncodeMode::BareAdjacency;
        if (tr_strict) {
            if (!train->count("--replay")) ex.train.replay_capacity = kUnboundedReplay;
            if (!train->count("--reuse-tree") && !train->count("--no-reuse-tree"))
                ex.train.reuse_tree = false;
            if (!tr_bare) ex.train.encode_mode = EncodeMode::BareAdjacency;
        }
        ex.with_baselines = !tr_no_baselines;
        ex.with_oracle = tr_oracle;
        ex.changes = parse_remove_script(tr_remove);
        ex.iteration_hook = print_iteration;
        ex.oracle_progress = oracle_progress;
        const ExperimentResult result = run_experiment(ex);
        if (result.baselines) {
            std::printf("star %lld  random_mean %.1f  mst %lld", static_cast<long long>(result.baselines->star),
                        result.baselines->random_mean, static_cast<long long>(result.baselines->mst));
            if (result.baselines->oracle) std::printf("  oracle %lld", static_cast<long long>(*result.baselines->oracle));
            std::printf("\n");
        }
        if (!result.reports.empty())
            std::printf("final greedy lifetime %lld\n",
                        static_cast<long long>(result.reports.back().greedy_lifetime));
        std::printf("artifacts in %s\n", ex.out_dir.c_str());
    });

    // eval
    auto* eval = app.add_subcommand("eval", "Evaluate a trained checkpoint");
    std::string ev_dir, ev_save;
    int ev_ckpt = -1, ev_count = 100;
    uint64_t ev_seed = 1;
    EvalMode ev_mode = EvalMode::Greedy;
    eval->add_option("--out", ev_dir, "Experiment directory holding checkpoints/")->required();
    eval->add_option("--ckpt", ev_ckpt, "Checkpoint iteration (-1 = latest)");
    eval->add_option("--mode", ev_mode, "sample or greedy")
        ->transform(CLI::CheckedTransformer(kEvalNames, CLI::ignore_case));
    eval->add_option("--count", ev_count, "Realizations in sample mode")->check(CLI::PositiveNumber);
    eval->add_option("--seed", ev_seed, "Evaluation seed");
    eval->add_option("--save", ev_save, "Write the best topology file here");
    eval->callback([&] {
        const Trainer trainer = Trainer::from_checkpoint(ev_dir, ev_ckpt);
        const EvalResult r = trainer.evaluate_now(ev_mode, ev_count, derive_seed(ev_seed, "cli.eval"));
        std::printf("mean %.12g\nstd %.12g\nbest %lld\n", r.mean_lifetime, r.std_lifetime,
                    static_cast<long long>(r.best_lifetime));
        if (!ev_save.empty()) save_topology(trainer.spec(), r.best_topology, ev_save);
    });

    // resume
    auto* resume = app.add_subcommand("resume", "Continue training from the latest (or a given) checkpoint");
    std::string rs_dir;
    int rs_ckpt = -1, rs_max = -1;
    resume->add_option("--out", rs_dir, "Experiment directory holding checkpoints/")->required();
    resume->add_option("--ckpt", rs_ckpt, "Checkpoint iteration to resume from (-1 = latest)");
    resume->add_option("--max-new", rs_max, "Run at most this many further iterations (-1 = all remaining)");
    resume->callback([&] {
        Trainer trainer = Trainer::from_checkpoint(rs_dir, rs_ckpt);
        trainer.set_iteration_hook(print_iteration);
        trainer.run(rs_max);
        std::printf("completed through iteration %d of %d\n", trainer.completed_iterations(),
                    trainer.config().iterations);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
