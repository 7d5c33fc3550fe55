#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace wsnopt {

// Node 0 is always the gateway; nodes 1..N-1 are sensors.
using NodeId = int32_t;
inline constexpr NodeId kGateway = 0;
inline constexpr NodeId kNoParent = -1;

struct Point {
    double x = 0.0;
    double y = 0.0;
};

// Immutable physical description of the network: geometry, batteries, radio
// constants, and the per-round data distribution. Treat as read-only after
// construction; it is shared across threads by const reference.
struct NetworkSpec {
    std::vector<Point> positions;        // meters
    std::vector<double> initial_energy;  // joules; entry 0 (gateway) is +inf
    std::vector<double> eps_proc;        // processing energy, J/bit
    std::vector<uint8_t> active;         // 1 = participates in the network
    double rho = 1e-12;                  // amplification constant, J/(m^2*bit)
    int64_t data_bits_min = 500;         // per-round generated data bounds
    int64_t data_bits_max = 1000;

    int node_count() const { return static_cast<int>(positions.size()); }
    bool is_active(NodeId i) const { return active[static_cast<size_t>(i)] != 0; }
    int active_sensor_count() const;
    std::vector<NodeId> active_nodes() const;  // gateway included, ascending

    // mean of the uniform integer data distribution
    double mean_data_bits() const { return 0.5 * static_cast<double>(data_bits_min + data_bits_max); }

    // throws std::invalid_argument on any violated invariant
    void validate() const;
};

// convenience constructor for a uniform-parameter network
NetworkSpec make_spec(std::vector<Point> positions, double sensor_energy, double eps_proc,
                      double rho, int64_t data_bits_min, int64_t data_bits_max);

// Complete tree topology: parent[i] is the node sensor i transmits to.
// parent[0] == kNoParent; inactive nodes carry kNoParent as well.
struct Topology {
    std::vector<NodeId> parent;
};

double euclidean_distance(const NetworkSpec& spec, NodeId i, NodeId j);

// Returns a description of the first violated arborescence rule, or nullopt
// if the topology is a valid arborescence toward the gateway over the active
// nodes (one parent per active sensor, no cycles, all paths reach node 0).
std::optional<std::string> topology_error(const NetworkSpec& spec, const Topology& t);
void validate_topology(const NetworkSpec& spec, const Topology& t);  // throws
bool topology_valid(const NetworkSpec& spec, const Topology& t);

// Per-round forwarded load.
//   Subtree (default): g_i = R_i + sum over children of g_j
//   Literal:           g_i = R_i + sum over children of R_j
// Literal makes relaying of grandchild data free; both are kept selectable.
// The gateway entry reports the received load and consumes no battery.
enum class LoadsMode { Subtree, Literal };

std::vector<double> compute_loads(const NetworkSpec& spec, const Topology& t,
                                  const std::vector<double>& data_bits,
                                  LoadsMode mode = LoadsMode::Subtree);

// e_i = (eps_proc_i + rho * d(i, parent_i)^2) * g_i; zero for the gateway
std::vector<double> compute_round_energy(const NetworkSpec& spec, const Topology& t,
                                         const std::vector<double>& loads);

inline constexpr int64_t kUnboundedLifetime = std::numeric_limits<int64_t>::max();

struct LifetimeResult {
    int64_t rounds = 0;       // floor of the continuous value
    double continuous = 0.0;  // min over sensors of E_i / e_i, pre-floor
};

// Lifetime with every sensor's per-round data fixed to the distribution mean.
LifetimeResult lifetime_deterministic(const NetworkSpec& spec, const Topology& t,
                                      LoadsMode mode = LoadsMode::Subtree);

// Round-by-round simulation with per-sensor uniform integer data draws
// (ascending node order within a round). Returns the number of fully
// completed rounds before any sensor's battery would go negative.
int64_t lifetime_stochastic(const NetworkSpec& spec, const Topology& t, uint64_t seed,
                            LoadsMode mode = LoadsMode::Subtree);

}  // namespace wsnopt
