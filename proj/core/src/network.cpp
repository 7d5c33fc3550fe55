#include "wsnopt/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wsnopt/rng.hpp"

namespace wsnopt {

int NetworkSpec::active_sensor_count() const {
    int count = 0;
    for (int i = 1; i < node_count(); ++i)
        if (active[static_cast<size_t>(i)]) ++count;
    return count;
}

std::vector<NodeId> NetworkSpec::active_nodes() const {
    std::vector<NodeId> out;
    for (int i = 0; i < node_count(); ++i)
        if (active[static_cast<size_t>(i)]) out.push_back(i);
    return out;
}

void NetworkSpec::validate() const {
    const size_t n = positions.size();
    if (n < 2) throw std::invalid_argument("spec: need at least the gateway and one sensor");
    if (initial_energy.size() != n || eps_proc.size() != n || active.size() != n)
        throw std::invalid_argument("spec: per-node arrays must all have length N");
    if (!active[0]) throw std::invalid_argument("spec: gateway must be active");
    if (!(rho > 0.0) || !std::isfinite(rho)) throw std::invalid_argument("spec: rho must be finite and > 0");
    if (data_bits_min <= 0 || data_bits_max < data_bits_min)
        throw std::invalid_argument("spec: need 0 < data_bits_min <= data_bits_max");
    if (!std::isinf(initial_energy[0]) || initial_energy[0] < 0)
        throw std::invalid_argument("spec: gateway energy must be +infinity");
    for (size_t i = 0; i < n; ++i) {
        if (!std::isfinite(positions[i].x) || !std::isfinite(positions[i].y))
            throw std::invalid_argument("spec: non-finite position at node " + std::to_string(i));
        if (!(eps_proc[i] >= 0.0) || !std::isfinite(eps_proc[i]))
            throw std::invalid_argument("spec: eps_proc must be finite and >= 0 at node " + std::to_string(i));
        if (i > 0 && (!(initial_energy[i] > 0.0) || !std::isfinite(initial_energy[i])))
            throw std::invalid_argument("spec: sensor energy must be finite and > 0 at node " + std::to_string(i));
        if (active[i] > 1) throw std::invalid_argument("spec: active flags must be 0 or 1");
    }
    if (active_sensor_count() < 1) throw std::invalid_argument("spec: need at least one active sensor");
}

NetworkSpec make_spec(std::vector<Point> positions, double sensor_energy, double eps,
                      double rho, int64_t data_bits_min, int64_t data_bits_max) {
    NetworkSpec spec;
    const size_t n = positions.size();
    spec.positions = std::move(positions);
    spec.initial_energy.assign(n, sensor_energy);
    spec.initial_energy[0] = std::numeric_limits<double>::infinity();
    spec.eps_proc.assign(n, eps);
    spec.active.assign(n, 1);
    spec.rho = rho;
    spec.data_bits_min = data_bits_min;
    spec.data_bits_max = data_bits_max;
    spec.validate();
    return spec;
}

double euclidean_distance(const NetworkSpec& spec, NodeId i, NodeId j) {
    const Point& a = spec.positions[static_cast<size_t>(i)];
    const Point& b = spec.positions[static_cast<size_t>(j)];
    return std::hypot(a.x - b.x, a.y - b.y);
}

std::optional<std::string> topology_error(const NetworkSpec& spec, const Topology& t) {
    const int n = spec.node_count();
    if (static_cast<int>(t.parent.size()) != n) return "parent array length != node count";
    if (t.parent[0] != kNoParent) return "gateway must have no parent";
    for (NodeId i = 1; i < n; ++i) {
        const NodeId p = t.parent[static_cast<size_t>(i)];
        if (!spec.is_active(i)) {
            if (p != kNoParent) return "inactive node " + std::to_string(i) + " has a parent";
            continue;
        }
        if (p == kNoParent) return "active sensor " + std::to_string(i) + " is an orphan";
        if (p < 0 || p >= n) return "sensor " + std::to_string(i) + " has out-of-range parent";
        if (p == i) return "sensor " + std::to_string(i) + " parents itself";
        if (!spec.is_active(p)) return "sensor " + std::to_string(i) + " parents inactive node";
    }
    // every active sensor must reach the gateway; a chain longer than n edges
    // can only mean a cycle
    for (NodeId i = 1; i < n; ++i) {
        if (!spec.is_active(i)) continue;
        NodeId cur = i;
        int steps = 0;
        while (cur != kGateway) {
            cur = t.parent[static_cast<size_t>(cur)];
            if (++steps > n) return "cycle through sensor " + std::to_string(i);
        }
    }
    return std::nullopt;
}

void validate_topology(const NetworkSpec& spec, const Topology& t) {
    if (auto err = topology_error(spec, t)) throw std::invalid_argument("invalid topology: " + *err);
}

bool topology_valid(const NetworkSpec& spec, const Topology& t) {
    return !topology_error(spec, t).has_value();
}

std::vector<double> compute_loads(const NetworkSpec& spec, const Topology& t,
                                  const std::vector<double>& data_bits, LoadsMode mode) {
    validate_topology(spec, t);
    const int n = spec.node_count();
    if (static_cast<int>(data_bits.size()) != n)
        throw std::invalid_argument("compute_loads: data_bits length != node count");
    for (NodeId i = 1; i < n; ++i)
        if (spec.is_active(i) && !(data_bits[static_cast<size_t>(i)] > 0.0))
            throw std::invalid_argument("compute_loads: sensor data must be > 0");

    std::vector<double> g(static_cast<size_t>(n), 0.0);
    if (mode == LoadsMode::Literal) {
        for (NodeId i = 1; i < n; ++i)
            if (spec.is_active(i)) g[static_cast<size_t>(i)] = data_bits[static_cast<size_t>(i)];
        for (NodeId i = 1; i < n; ++i) {
            if (!spec.is_active(i)) continue;
            const NodeId p = t.parent[static_cast<size_t>(i)];
            if (p != kGateway) g[static_cast<size_t>(p)] += data_bits[static_cast<size_t>(i)];
        }
        // gateway entry: what it actually receives from its children
        for (NodeId i = 1; i < n; ++i)
            if (spec.is_active(i) && t.parent[static_cast<size_t>(i)] == kGateway)
                g[0] += g[static_cast<size_t>(i)];
        return g;
    }

    // subtree mode: accumulate children before parents (deepest first)
    std::vector<int> depth(static_cast<size_t>(n), 0);
    std::vector<NodeId> order;
    order.reserve(static_cast<size_t>(n));
    for (NodeId i = 1; i < n; ++i) {
        if (!spec.is_active(i)) continue;
        int d = 0;
        for (NodeId cur = i; cur != kGateway; cur = t.parent[static_cast<size_t>(cur)]) ++d;
        depth[static_cast<size_t>(i)] = d;
        order.push_back(i);
        g[static_cast<size_t>(i)] = data_bits[static_cast<size_t>(i)];
    }
    std::sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
        return depth[static_cast<size_t>(a)] > depth[static_cast<size_t>(b)];
    });
    for (NodeId i : order) g[static_cast<size_t>(t.parent[static_cast<size_t>(i)])] += g[static_cast<size_t>(i)];
    return g;
}

std::vector<double> compute_round_energy(const NetworkSpec& spec, const Topology& t,
                                         const std::vector<double>& loads) {
    const int n = spec.node_count();
    if (static_cast<int>(loads.size()) != n)
        throw std::invalid_argument("compute_round_energy: loads length != node count");
    std::vector<double> e(static_cast<size_t>(n), 0.0);
    for (NodeId i = 1; i < n; ++i) {
        if (!spec.is_active(i)) continue;
        const double d = euclidean_distance(spec, i, t.parent[static_cast<size_t>(i)]);
        e[static_cast<size_t>(i)] = (spec.eps_proc[static_cast<size_t>(i)] + spec.rho * d * d) *
                                    loads[static_cast<size_t>(i)];
    }
    return e;
}

LifetimeResult lifetime_deterministic(const NetworkSpec& spec, const Topology& t, LoadsMode mode) {
    const int n = spec.node_count();
    std::vector<double> data(static_cast<size_t>(n), 0.0);
    const double mean = spec.mean_data_bits();
    for (NodeId i = 1; i < n; ++i)
        if (spec.is_active(i)) data[static_cast<size_t>(i)] = mean;
    const auto loads = compute_loads(spec, t, data, mode);
    const auto energy = compute_round_energy(spec, t, loads);

    double best = std::numeric_limits<double>::infinity();
    for (NodeId i = 1; i < n; ++i) {
        if (!spec.is_active(i)) continue;
        const double e = energy[static_cast<size_t>(i)];
        if (e > 0.0) best = std::min(best, spec.initial_energy[static_cast<size_t>(i)] / e);
    }
    LifetimeResult result;
    result.continuous = best;
    result.rounds = std::isinf(best) ? kUnboundedLifetime : static_cast<int64_t>(std::floor(best));
    return result;
}

int64_t lifetime_stochastic(const NetworkSpec& spec, const Topology& t, uint64_t seed, LoadsMode mode) {
    validate_topology(spec, t);
    const int n = spec.node_count();
    // a topology where no sensor dissipates energy never dies
    if (lifetime_deterministic(spec, t, mode).rounds == kUnboundedLifetime) return kUnboundedLifetime;

    Rng rng(seed);
    std::vector<double> battery = spec.initial_energy;
    std::vector<double> data(static_cast<size_t>(n), 0.0);
    int64_t rounds = 0;
    for (;;) {
        for (NodeId i = 1; i < n; ++i)
            if (spec.is_active(i))
                data[static_cast<size_t>(i)] =
                    static_cast<double>(rng.uniform_int(spec.data_bits_min, spec.data_bits_max));
        const auto loads = compute_loads(spec, t, data, mode);
        const auto energy = compute_round_energy(spec, t, loads);
        for (NodeId i = 1; i < n; ++i)
            if (spec.is_active(i) && battery[static_cast<size_t>(i)] < energy[static_cast<size_t>(i)])
                return rounds;
        for (NodeId i = 1; i < n; ++i)
            if (spec.is_active(i)) battery[static_cast<size_t>(i)] -= energy[static_cast<size_t>(i)];
        ++rounds;
    }
}

}  // namespace wsnopt
