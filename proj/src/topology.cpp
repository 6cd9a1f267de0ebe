#include "plctopo/topology.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

#include "json_util.hpp"
#include "plctopo/error.hpp"

namespace plctopo {
namespace {

std::string branch_name(const Branch& b) {
    std::ostringstream os;
    os << "branch " << b.a << "-" << b.b;
    return os.str();
}

// Draw from Poisson(rate) conditioned on k >= min_k by inverse CDF over the
// conditional pmf. Weights are built from the ratio p(k+1)/p(k) = rate/(k+1),
// which stays finite for any rate > 0.
int truncated_poisson(std::mt19937_64& rng, double rate, int min_k) {
    std::vector<double> weights{1.0};
    double total = 1.0;
    for (int k = min_k;; ++k) {
        const double next = weights.back() * rate / (k + 1);
        if (next < 1e-17 * total) break;
        weights.push_back(next);
        total += next;
    }
    const double u = std::uniform_real_distribution<double>(0.0, total)(rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (u < acc) return min_k + static_cast<int>(i);
    }
    return min_k + static_cast<int>(weights.size()) - 1;
}

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
        return x;
    }

    bool unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent_[b] = a;
        return true;
    }

private:
    std::vector<std::size_t> parent_;
};

}  // namespace

void Topology::normalize() {
    std::sort(nodes.begin(), nodes.end(), [](const Node& x, const Node& y) { return x.id < y.id; });
    for (auto& br : branches) {
        if (br.a > br.b) std::swap(br.a, br.b);
    }
    std::sort(branches.begin(), branches.end(), [](const Branch& x, const Branch& y) {
        return std::tie(x.a, x.b, x.length_m) < std::tie(y.a, y.b, y.length_m);
    });
}

std::vector<NodeId> Topology::modem_ids() const {
    std::vector<NodeId> ids;
    for (const auto& n : nodes) {
        if (n.kind == NodeKind::Modem) ids.push_back(n.id);
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

std::size_t Topology::junction_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes.begin(), nodes.end(), [](const Node& n) { return n.kind == NodeKind::Junction; }));
}

const Node* Topology::find(NodeId id) const {
    auto it = std::find_if(nodes.begin(), nodes.end(), [id](const Node& n) { return n.id == id; });
    return it == nodes.end() ? nullptr : &*it;
}

bool Topology::is_modem(NodeId id) const {
    const Node* n = find(id);
    return n != nullptr && n->kind == NodeKind::Modem;
}

std::map<NodeId, std::vector<std::pair<NodeId, double>>> Topology::adjacency() const {
    std::map<NodeId, std::vector<std::pair<NodeId, double>>> adj;
    for (const auto& n : nodes) adj[n.id];
    for (const auto& br : branches) {
        adj[br.a].emplace_back(br.b, br.length_m);
        adj[br.b].emplace_back(br.a, br.length_m);
    }
    return adj;
}

void GeneratorConfig::check() const {
    if (n_modems < 2) throw GenerationError("n_modems must be at least 2");
    if (!(d_min > 0.0) || !(d_min < d_max) || !std::isfinite(d_max)) {
        throw GenerationError("branch lengths need 0 < d_min < d_max");
    }
    if (!(branch_rate > 0.0) || !std::isfinite(branch_rate)) throw GenerationError("branch_rate must be positive");
    const auto& ld = load_distribution;
    if (!(ld.g_min_s > 0.0) || !(ld.g_min_s <= ld.g_max_s) || !(ld.b_over_g_max >= 0.0)) {
        throw GenerationError("load distribution needs 0 < g_min <= g_max and b_over_g_max >= 0");
    }
}

Topology generate_random(const GeneratorConfig& config) {
    config.check();
    std::mt19937_64 rng(config.seed);
    const int n = config.n_modems;

    // Build the shape with provisional indices: parent[i] is -1 for the root.
    std::vector<int> parent;
    std::vector<bool> junction;
    std::vector<int> leaves;
    auto add_child = [&](int p) {
        parent.push_back(p);
        junction.push_back(false);
        leaves.push_back(static_cast<int>(parent.size()) - 1);
    };

    if (n == 2) {
        parent = {-1};
        junction = {false};
        add_child(0);
        leaves = {0, 1};
    } else {
        parent = {-1};
        junction = {true};
        const int root_fanout = std::min(truncated_poisson(rng, config.branch_rate, 3), n);
        for (int k = 0; k < root_fanout; ++k) add_child(0);
        while (static_cast<int>(leaves.size()) < n) {
            const auto pick = std::uniform_int_distribution<std::size_t>(0, leaves.size() - 1)(rng);
            const int node = leaves[pick];
            leaves.erase(leaves.begin() + static_cast<std::ptrdiff_t>(pick));
            junction[node] = true;
            const int room = n - static_cast<int>(leaves.size());
            const int fanout = std::min(truncated_poisson(rng, config.branch_rate, 2), room);
            for (int k = 0; k < fanout; ++k) add_child(node);
        }
    }

    std::vector<NodeId> id_of(parent.size());
    NodeId next_modem = 0;
    NodeId next_junction = n;
    for (std::size_t i = 0; i < parent.size(); ++i) id_of[i] = junction[i] ? next_junction++ : next_modem++;

    Topology t;
    t.frequency_hz = config.frequency_hz;
    std::uniform_real_distribution<double> length(config.d_min, config.d_max);
    for (std::size_t i = 0; i < parent.size(); ++i) {
        t.nodes.push_back({id_of[i], junction[i] ? NodeKind::Junction : NodeKind::Modem});
        if (parent[i] >= 0) t.branches.push_back({id_of[static_cast<std::size_t>(parent[i])], id_of[i], length(rng)});
    }
    t.normalize();

    const auto& ld = config.load_distribution;
    std::uniform_real_distribution<double> conductance(ld.g_min_s, ld.g_max_s);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (NodeId m = 0; m < n; ++m) {
        const double g = conductance(rng);
        t.loads[m] = Complex(g, unit(rng) * ld.b_over_g_max * g);
    }
    return t;
}

std::vector<Violation> validate(const Topology& t, const LineConstants& lc) {
    std::vector<Violation> out;
    auto report = [&out](ViolationKind kind, std::string msg) { out.push_back({kind, std::move(msg)}); };

    std::map<NodeId, std::size_t> index;
    for (const auto& n : t.nodes) {
        if (!index.emplace(n.id, index.size()).second) report(ViolationKind::DuplicateNode, "duplicate node id " + std::to_string(n.id));
    }

    std::map<NodeId, int> degree;
    UnionFind uf(index.size());
    for (const auto& br : t.branches) {
        const auto ia = index.find(br.a);
        const auto ib = index.find(br.b);
        if (ia == index.end() || ib == index.end()) {
            report(ViolationKind::UnknownEndpoint, branch_name(br) + " references an unknown node");
            continue;
        }
        if (br.a == br.b) {
            report(ViolationKind::SelfLoop, branch_name(br) + " is a self-loop");
            continue;
        }
        ++degree[br.a];
        ++degree[br.b];
        if (!uf.unite(ia->second, ib->second)) report(ViolationKind::Cycle, branch_name(br) + " closes a cycle");
        if (!std::isfinite(br.length_m) || br.length_m <= 0.0) {
            report(ViolationKind::NonPositiveLength, branch_name(br) + " has non-positive length");
        } else if (br.length_m > lc.quarter_wavelength()) {
            std::ostringstream os;
            os << branch_name(br) << " is " << br.length_m << " m, longer than lambda/4 = " << lc.quarter_wavelength() << " m";
            report(ViolationKind::QuarterWavelength, os.str());
        }
    }

    std::set<std::size_t> components;
    for (const auto& [id, i] : index) components.insert(uf.find(i));
    if (components.size() > 1) {
        report(ViolationKind::Disconnected, "network has " + std::to_string(components.size()) + " components");
    }

    for (const auto& n : t.nodes) {
        const int deg = degree[n.id];
        if (n.kind == NodeKind::Modem) {
            if (deg != 1) report(ViolationKind::ModemDegree, "modem " + std::to_string(n.id) + " has degree " + std::to_string(deg));
            auto it = t.loads.find(n.id);
            if (it == t.loads.end()) {
                report(ViolationKind::MissingLoad, "modem " + std::to_string(n.id) + " has no load");
            } else if (!(it->second.real() >= 0.0) || !std::isfinite(it->second.imag())) {
                report(ViolationKind::ActiveLoad, "modem " + std::to_string(n.id) + " load is not passive");
            }
        } else if (deg < 3) {
            report(ViolationKind::JunctionDegree, "junction " + std::to_string(n.id) + " has degree " + std::to_string(deg));
        }
    }
    for (const auto& [id, y] : t.loads) {
        if (!t.is_modem(id)) report(ViolationKind::StrayLoad, "load on non-modem node " + std::to_string(id));
    }
    return out;
}

std::string_view to_string(NodeKind kind) { return kind == NodeKind::Modem ? "modem" : "junction"; }

std::string serialize(const Topology& input) {
    Topology t = input;
    t.normalize();

    detail::OrderedJson doc;
    doc["frequency_hz"] = t.frequency_hz;
    auto& nodes = doc["nodes"] = detail::OrderedJson::array();
    for (const auto& n : t.nodes) nodes.push_back({{"id", n.id}, {"kind", to_string(n.kind)}});
    auto& branches = doc["branches"] = detail::OrderedJson::array();
    for (const auto& br : t.branches) branches.push_back({{"a", br.a}, {"b", br.b}, {"length_m", br.length_m}});
    auto& loads = doc["loads"] = detail::OrderedJson::array();
    for (const auto& [id, y] : t.loads) loads.push_back({{"node", id}, {"g_s", y.real()}, {"b_s", y.imag()}});
    return doc.dump(2) + "\n";
}

Topology deserialize(std::string_view text) {
    const auto doc = detail::parse_json(text);
    Topology t;
    t.frequency_hz = detail::require_number(doc, "frequency_hz", "topology");
    for (const auto& n : detail::require_array(doc, "nodes", "topology")) {
        const auto& kind = detail::require(n, "kind", "topology node");
        NodeKind k;
        if (kind == "modem") {
            k = NodeKind::Modem;
        } else if (kind == "junction") {
            k = NodeKind::Junction;
        } else {
            throw ParseError("topology node: kind must be \"modem\" or \"junction\"");
        }
        t.nodes.push_back({detail::require_int(n, "id", "topology node"), k});
    }
    for (const auto& br : detail::require_array(doc, "branches", "topology")) {
        t.branches.push_back({detail::require_int(br, "a", "topology branch"), detail::require_int(br, "b", "topology branch"),
                              detail::require_number(br, "length_m", "topology branch")});
    }
    for (const auto& ld : detail::require_array(doc, "loads", "topology")) {
        const NodeId id = detail::require_int(ld, "node", "topology load");
        if (!t.loads.emplace(id, detail::read_admittance(ld, "topology load")).second) {
            throw ParseError("topology load: duplicate entry for node " + std::to_string(id));
        }
    }
    t.normalize();
    return t;
}

}  // namespace plctopo
