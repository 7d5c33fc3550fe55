#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "wsnopt/network.hpp"

namespace wsnopt {

// Network instance file, line oriented:
//
//   rho <J/(m^2*bit)>
//   eps_proc <J/bit>
//   data_bits_min <bits>
//   data_bits_max <bits>
//   <id> <x> <y> <energy_joules> <active>
//   ...
//
// The four header lines may appear in any order but exactly once each. Node
// ids must cover 0..N-1 with no duplicates; the gateway (id 0) writes its
// energy as "inf", the only place a non-finite number is accepted. Blank
// lines and lines starting with '#' are ignored. A topology file is the same
// format with a sixth column `parent` per node line (-1 for the gateway).

std::string serialize_instance(const NetworkSpec& spec);
NetworkSpec parse_instance(const std::string& text);
void save_instance(const NetworkSpec& spec, const std::string& path);
NetworkSpec load_instance(const std::string& path);

std::string serialize_topology(const NetworkSpec& spec, const Topology& t);
std::pair<NetworkSpec, Topology> parse_topology(const std::string& text);
void save_topology(const NetworkSpec& spec, const Topology& t, const std::string& path);
std::pair<NetworkSpec, Topology> load_topology(const std::string& path);

// FNV-1a over the canonical serialization; used to bind checkpoints to the
// instance they were trained on
uint64_t spec_fingerprint(const NetworkSpec& spec);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace wsnopt
