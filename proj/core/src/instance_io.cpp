#include "wsnopt/instance_io.hpp"

#include <cctype>
#include <charconv>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace wsnopt {

namespace {

std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

[[noreturn]] void fail(size_t line_no, const std::string& what) {
    throw std::invalid_argument("instance parse error at line " + std::to_string(line_no) + ": " + what);
}

double parse_double_field(const std::string& tok, size_t line_no, const char* what) {
    const char* begin = tok.data();
    const char* end = tok.data() + tok.size();
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) fail(line_no, std::string("bad number for ") + what + ": '" + tok + "'");
    return value;
}

int64_t parse_int_field(const std::string& tok, size_t line_no, const char* what) {
    const char* begin = tok.data();
    const char* end = tok.data() + tok.size();
    int64_t value = 0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) fail(line_no, std::string("bad integer for ") + what + ": '" + tok + "'");
    return value;
}

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

struct ParsedFile {
    NetworkSpec spec;
    std::vector<NodeId> parents;
    bool has_parents = false;
};

ParsedFile parse_file(const std::string& text, bool expect_parent) {
    std::map<std::string, double> headers;
    struct NodeLine {
        double x, y, energy;
        int active;
        NodeId parent;
    };
    std::map<int64_t, NodeLine> nodes;

    std::istringstream in(text);
    std::string line;
    size_t line_no = 0;
    const size_t node_fields = expect_parent ? 6 : 5;
    while (std::getline(in, line)) {
        ++line_no;
        auto toks = split_ws(line);
        if (toks.empty() || toks[0][0] == '#') continue;
        if (std::isalpha(static_cast<unsigned char>(toks[0][0]))) {
            if (toks.size() != 2) fail(line_no, "header line needs exactly one value");
            const std::string& key = toks[0];
            if (key != "rho" && key != "eps_proc" && key != "data_bits_min" && key != "data_bits_max")
                fail(line_no, "unknown header '" + key + "'");
            if (headers.count(key)) fail(line_no, "duplicate header '" + key + "'");
            double v = parse_double_field(toks[1], line_no, key.c_str());
            if (!std::isfinite(v)) fail(line_no, "non-finite value for header '" + key + "'");
            headers[key] = v;
            continue;
        }
        if (toks.size() != node_fields)
            fail(line_no, "node line needs " + std::to_string(node_fields) + " fields: id x y energy active" +
                              (expect_parent ? " parent" : ""));
        int64_t id = parse_int_field(toks[0], line_no, "id");
        if (id < 0) fail(line_no, "negative node id");
        if (nodes.count(id)) fail(line_no, "duplicate node id " + std::to_string(id));
        NodeLine nl{};
        nl.x = parse_double_field(toks[1], line_no, "x");
        nl.y = parse_double_field(toks[2], line_no, "y");
        if (!std::isfinite(nl.x) || !std::isfinite(nl.y)) fail(line_no, "non-finite position");
        if (toks[3] == "inf") {
            if (id != 0) fail(line_no, "only the gateway may have infinite energy");
            nl.energy = std::numeric_limits<double>::infinity();
        } else {
            nl.energy = parse_double_field(toks[3], line_no, "energy");
            if (!std::isfinite(nl.energy)) fail(line_no, "non-finite energy");
        }
        int64_t act = parse_int_field(toks[4], line_no, "active");
        if (act != 0 && act != 1) fail(line_no, "active flag must be 0 or 1");
        nl.active = static_cast<int>(act);
        nl.parent = kNoParent;
        if (expect_parent) {
            int64_t p = parse_int_field(toks[5], line_no, "parent");
            nl.parent = static_cast<NodeId>(p);
        }
        nodes.emplace(id, nl);
    }

    for (const char* key : {"rho", "eps_proc", "data_bits_min", "data_bits_max"})
        if (!headers.count(key)) throw std::invalid_argument(std::string("instance parse error: missing header '") + key + "'");
    if (nodes.size() < 2) throw std::invalid_argument("instance parse error: need at least 2 nodes");
    const auto n = static_cast<int64_t>(nodes.size());
    for (int64_t i = 0; i < n; ++i)
        if (!nodes.count(i))
            throw std::invalid_argument("instance parse error: node ids must cover 0.." + std::to_string(n - 1) +
                                        " (missing " + std::to_string(i) + ")");

    ParsedFile out;
    out.spec.rho = headers["rho"];
    out.spec.data_bits_min = static_cast<int64_t>(headers["data_bits_min"]);
    out.spec.data_bits_max = static_cast<int64_t>(headers["data_bits_max"]);
    const double eps = headers["eps_proc"];
    for (int64_t i = 0; i < n; ++i) {
        const NodeLine& nl = nodes[i];
        out.spec.positions.push_back({nl.x, nl.y});
        out.spec.initial_energy.push_back(i == 0 ? std::numeric_limits<double>::infinity() : nl.energy);
        out.spec.eps_proc.push_back(eps);
        out.spec.active.push_back(static_cast<uint8_t>(nl.active));
        out.parents.push_back(nl.parent);
    }
    out.has_parents = expect_parent;
    out.spec.validate();
    return out;
}

std::string serialize(const NetworkSpec& spec, const Topology* t) {
    spec.validate();
    for (size_t i = 1; i < spec.eps_proc.size(); ++i)
        if (spec.eps_proc[i] != spec.eps_proc[0])
            throw std::invalid_argument("serialize_instance: file format holds a single eps_proc value");
    std::string out;
    out += "rho " + format_double(spec.rho) + "\n";
    out += "eps_proc " + format_double(spec.eps_proc[0]) + "\n";
    out += "data_bits_min " + std::to_string(spec.data_bits_min) + "\n";
    out += "data_bits_max " + std::to_string(spec.data_bits_max) + "\n";
    char buf[32];
    for (int i = 0; i < spec.node_count(); ++i) {
        const auto idx = static_cast<size_t>(i);
        out += std::to_string(i) + " " + format_double(spec.positions[idx].x) + " " +
               format_double(spec.positions[idx].y) + " " + format_double(spec.initial_energy[idx]) + " " +
               (spec.active[idx] ? "1" : "0");
        if (t) {
            std::snprintf(buf, sizeof buf, " %d", t->parent[idx]);
            out += buf;
        }
        out += "\n";
    }
    return out;
}

}  // namespace

std::string serialize_instance(const NetworkSpec& spec) { return serialize(spec, nullptr); }

NetworkSpec parse_instance(const std::string& text) { return parse_file(text, false).spec; }

std::string serialize_topology(const NetworkSpec& spec, const Topology& t) {
    validate_topology(spec, t);
    return serialize(spec, &t);
}

std::pair<NetworkSpec, Topology> parse_topology(const std::string& text) {
    auto parsed = parse_file(text, true);
    Topology t{std::move(parsed.parents)};
    validate_topology(parsed.spec, t);
    return {std::move(parsed.spec), std::move(t)};
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path);
}

void save_instance(const NetworkSpec& spec, const std::string& path) {
    write_text_file(path, serialize_instance(spec));
}

NetworkSpec load_instance(const std::string& path) { return parse_instance(read_text_file(path)); }

void save_topology(const NetworkSpec& spec, const Topology& t, const std::string& path) {
    write_text_file(path, serialize_topology(spec, t));
}

std::pair<NetworkSpec, Topology> load_topology(const std::string& path) {
    return parse_topology(read_text_file(path));
}

uint64_t spec_fingerprint(const NetworkSpec& spec) {
    const std::string text = serialize_instance(spec);
    uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace wsnopt
