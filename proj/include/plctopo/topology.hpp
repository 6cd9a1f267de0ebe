#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "plctopo/tline.hpp"

namespace plctopo {

using NodeId = int;

enum class NodeKind { Modem, Junction };

struct Node {
    NodeId id = 0;
    NodeKind kind = NodeKind::Modem;

    bool operator==(const Node&) const = default;
};

/// Undirected line segment. Stored with a < b once inside a Topology.
struct Branch {
    NodeId a = 0;
    NodeId b = 0;
    double length_m = 0.0;

    bool operator==(const Branch&) const = default;
};

/// A radial line network: modems at the leaves, unloaded junctions inside.
///
/// The containers are kept in canonical order (nodes by id, branches by
/// (min id, max id)); use normalize() after editing them by hand.
struct Topology {
    double frequency_hz = 10e3;
    std::vector<Node> nodes;
    std::vector<Branch> branches;
    std::map<NodeId, Complex> loads;  ///< modem id -> load admittance (S)

    void normalize();

    std::vector<NodeId> modem_ids() const;
    std::size_t junction_count() const;
    const Node* find(NodeId id) const;
    bool is_modem(NodeId id) const;

    /// Neighbour lists as (node, branch length) pairs, keyed by node id.
    std::map<NodeId, std::vector<std::pair<NodeId, double>>> adjacency() const;

    bool operator==(const Topology&) const = default;
};

struct LoadDistribution {
    double g_min_s = 5e-3;   ///< conductance lower bound, S
    double g_max_s = 50e-3;  ///< conductance upper bound, S
    double b_over_g_max = 1.0;  ///< capacitive susceptance drawn from [0, b_over_g_max * g]
};

struct GeneratorConfig {
    int n_modems = 10;
    double branch_rate = 2.0;  ///< Poisson mean of a junction's fan-out before truncation
    double d_min = 10.0;
    double d_max = 500.0;
    LoadDistribution load_distribution;
    std::uint64_t seed = 0;
    double frequency_hz = 10e3;  ///< stamped into the generated topology

    /// Throws GenerationError on n_modems < 2, 0 < d_min < d_max violated, or branch_rate <= 0.
    void check() const;
};

/// Bottom-up random tree. Identical configs produce identical topologies.
///
/// Starts from one junction with Poisson(branch_rate) children truncated to
/// >= 3, then repeatedly turns a uniformly chosen leaf into a junction with
/// Poisson children truncated to >= 2 until n_modems leaves exist. The last
/// expansion is capped so the modem count is met exactly. Modems get ids
/// 0..n-1 and junctions n.. in creation order (the root junction is n).
Topology generate_random(const GeneratorConfig& config);

enum class ViolationKind {
    DuplicateNode,
    UnknownEndpoint,
    SelfLoop,
    Cycle,
    Disconnected,
    ModemDegree,
    JunctionDegree,
    NonPositiveLength,
    QuarterWavelength,
    MissingLoad,
    ActiveLoad,
    StrayLoad,
};

struct Violation {
    ViolationKind kind;
    std::string message;
};

/// All invariant violations of `t`, including branches longer than λ/4 of `lc`.
std::vector<Violation> validate(const Topology& t, const LineConstants& lc);

std::string_view to_string(NodeKind kind);

/// Canonical JSON document. Equal topologies serialize to identical bytes.
std::string serialize(const Topology& t);

/// Inverse of serialize(). Throws ParseError on malformed text.
Topology deserialize(std::string_view text);

}  // namespace plctopo
