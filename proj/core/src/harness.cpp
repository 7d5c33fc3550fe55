#include "wsnopt/harness.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "wsnopt/instance_io.hpp"
#include "wsnopt/rng.hpp"

namespace wsnopt {

NetworkSpec generate_instance(const GenParams& p) {
    if (p.nodes < 2) throw std::invalid_argument("generate_instance: need a gateway and at least one sensor");
    if (!(p.radius_m > 0.0) || !std::isfinite(p.radius_m))
        throw std::invalid_argument("generate_instance: radius must be positive");
    if (!(p.initial_energy_j > 0.0) || !std::isfinite(p.initial_energy_j))
        throw std::invalid_argument("generate_instance: sensor energy must be positive");

    Rng rng(derive_seed(p.seed, "gen"));
    std::vector<Point> pos(static_cast<size_t>(p.nodes));
    pos[0] = Point{0.0, 0.0};
    for (int i = 1; i < p.nodes; ++i) {
        const double r = p.radius_m * std::sqrt(rng.uniform_real());
        const double theta = 2.0 * std::numbers::pi * rng.uniform_real();
        pos[static_cast<size_t>(i)] = Point{r * std::cos(theta), r * std::sin(theta)};
    }
    return make_spec(std::move(pos), p.initial_energy_j, p.eps_proc, p.rho, p.data_bits_min, p.data_bits_max);
}

BaselineReport compute_baselines(const NetworkSpec& spec, uint64_t seed, int n_random, LoadsMode mode) {
    if (n_random < 1) throw std::invalid_argument("compute_baselines: n_random must be >= 1");
    BaselineReport b;
    b.star = lifetime_deterministic(spec, star_topology(spec), mode).rounds;
    b.mst = lifetime_deterministic(spec, mst_topology(spec), mode).rounds;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n_random; ++i) {
        const Topology t = random_topology(spec, derive_seed(seed, "baseline.random", static_cast<uint64_t>(i)));
        const double rounds = static_cast<double>(lifetime_deterministic(spec, t, mode).rounds);
        sum += rounds;
        sum_sq += rounds * rounds;
    }
    b.random_mean = sum / n_random;
    b.random_std = std::sqrt(std::max(0.0, sum_sq / n_random - b.random_mean * b.random_mean));
    return b;
}

std::string serialize_baselines(const BaselineReport& report) {
    char buf[96];
    std::string out = "baseline,lifetime\n";
    std::snprintf(buf, sizeof buf, "star,%lld\n", static_cast<long long>(report.star));
    out += buf;
    std::snprintf(buf, sizeof buf, "random_mean,%.12g\n", report.random_mean);
    out += buf;
    std::snprintf(buf, sizeof buf, "random_std,%.12g\n", report.random_std);
    out += buf;
    std::snprintf(buf, sizeof buf, "mst,%lld\n", static_cast<long long>(report.mst));
    out += buf;
    if (report.oracle) {
        std::snprintf(buf, sizeof buf, "oracle,%lld\n", static_cast<long long>(*report.oracle));
        out += buf;
    }
    return out;
}

BaselineReport parse_baselines(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "baseline,lifetime")
        throw std::invalid_argument("baseline file: missing header");
    BaselineReport b;
    bool got_star = false, got_rmean = false, got_rstd = false, got_mst = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const size_t comma = line.find(',');
        if (comma == std::string::npos) throw std::invalid_argument("baseline file: bad row: " + line);
        const std::string name = line.substr(0, comma);
        const std::string value = line.substr(comma + 1);
        const char* vb = value.data();
        const char* ve = vb + value.size();
        if (name == "star" || name == "mst" || name == "oracle") {
            long long v = 0;
            const auto res = std::from_chars(vb, ve, v);
            if (res.ec != std::errc{} || res.ptr != ve)
                throw std::invalid_argument("baseline file: bad integer in row: " + line);
            if (name == "star") b.star = v, got_star = true;
            else if (name == "mst") b.mst = v, got_mst = true;
            else b.oracle = v;
        } else if (name == "random_mean" || name == "random_std") {
            double v = 0.0;
            const auto res = std::from_chars(vb, ve, v);
            if (res.ec != std::errc{} || res.ptr != ve)
                throw std::invalid_argument("baseline file: bad number in row: " + line);
            if (name == "random_mean") b.random_mean = v, got_rmean = true;
            else b.random_std = v, got_rstd = true;
        } else {
            throw std::invalid_argument("baseline file: unknown row: " + name);
        }
    }
    if (!got_star || !got_rmean || !got_rstd || !got_mst)
        throw std::invalid_argument("baseline file: missing required rows");
    return b;
}

namespace {

int parse_int(const std::string& s, const char* what) {
    int v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw std::invalid_argument(std::string("change script: bad ") + what + ": " + s);
    return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    size_t at = 0;
    while (at <= s.size()) {
        const size_t next = s.find(sep, at);
        if (next == std::string::npos) {
            parts.push_back(s.substr(at));
            break;
        }
        parts.push_back(s.substr(at, next - at));
        at = next + 1;
    }
    return parts;
}

}  // namespace

std::vector<NetworkChange> parse_remove_script(const std::string& script) {
    std::vector<NetworkChange> changes;
    if (script.empty()) return changes;
    for (const std::string& entry : split(script, ';')) {
        if (entry.empty()) throw std::invalid_argument("change script: empty entry");
        const size_t colon = entry.find(':');
        if (colon == std::string::npos)
            throw std::invalid_argument("change script: expected IT:ids, got: " + entry);
        NetworkChange ch;
        ch.kind = NetworkChange::Kind::Remove;
        ch.iteration = parse_int(entry.substr(0, colon), "iteration");
        if (ch.iteration < 1) throw std::invalid_argument("change script: iteration must be >= 1");
        for (const std::string& id : split(entry.substr(colon + 1), ','))
            ch.nodes.push_back(parse_int(id, "node id"));
        if (ch.nodes.empty()) throw std::invalid_argument("change script: no node ids in entry: " + entry);
        if (!changes.empty() && ch.iteration <= changes.back().iteration)
            throw std::invalid_argument("change script: iterations must be strictly increasing");
        changes.push_back(std::move(ch));
    }
    return changes;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    if (cfg.out_dir.empty()) throw std::invalid_argument("experiment: out_dir is required");
    for (size_t i = 1; i < cfg.changes.size(); ++i)
        if (cfg.changes[i].iteration <= cfg.changes[i - 1].iteration)
            throw std::invalid_argument("experiment: change iterations must be strictly increasing");
    std::filesystem::create_directories(cfg.out_dir);

    ExperimentResult out;
    out.spec = cfg.instance_file.empty() ? generate_instance(cfg.gen) : load_instance(cfg.instance_file);
    save_instance(out.spec, cfg.out_dir + "/instance.txt");

    if (cfg.with_oracle && out.spec.active_nodes().size() > 9)
        throw std::invalid_argument("experiment: the oracle is limited to 9 active nodes");

    if (cfg.with_baselines || cfg.with_oracle) {
        BaselineReport b = compute_baselines(out.spec, cfg.train.seed, 100, cfg.train.loads_mode);
        if (cfg.with_oracle) {
            OracleOptions opts;
            opts.mode = cfg.train.loads_mode;
            opts.threads = cfg.oracle_threads;
            opts.progress = cfg.oracle_progress;
            OracleResult oracle = brute_force_optimal(out.spec, opts);
            b.oracle = oracle.best_lifetime;
            save_topology(out.spec, oracle.best_topology, cfg.out_dir + "/oracle_topology.txt");
            out.oracle = std::move(oracle);
        }
        write_text_file(cfg.out_dir + "/baselines.csv", serialize_baselines(b));
        out.baselines = b;
    }

    if (cfg.with_training) {
        TrainConfig t = cfg.train;
        t.out_dir = cfg.out_dir;
        Trainer trainer(out.spec, t);
        for (const auto& ch : cfg.changes) trainer.add_change(ch);
        if (cfg.iteration_hook) trainer.set_iteration_hook(cfg.iteration_hook);
        out.reports = trainer.run();
        const EvalResult fin = trainer.evaluate_now(EvalMode::Greedy, 1, derive_seed(t.seed, "final"));
        save_topology(trainer.spec(), fin.best_topology, cfg.out_dir + "/final_topology.txt");
    }
    return out;
}

}  // namespace wsnopt
