#include "plctopo/forward.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "json_util.hpp"
#include "plctopo/error.hpp"

namespace plctopo {
namespace {

using Adjacency = std::map<NodeId, std::vector<std::pair<NodeId, double>>>;

// One traversal of the tree rooted at a transmitting modem.
struct RootedPass {
    std::map<NodeId, Complex> away;     // admittance at a node looking away from the root, own load included
    std::map<NodeId, Complex> voltage;  // node voltage relative to the root
    Complex root_admittance;            // what the root sees, its own load excluded
};

RootedPass rooted_pass(const Topology& t, const Adjacency& adj, const LineConstants& lc, NodeId root) {
    const Node* node = t.find(root);
    if (node == nullptr || node->kind != NodeKind::Modem) {
        throw InvalidNode("node " + std::to_string(root) + " is not a modem");
    }
    const auto& root_nbrs = adj.at(root);
    if (root_nbrs.size() != 1) throw InvalidNode("modem " + std::to_string(root) + " is not a leaf");

    // Iterative DFS: preorder with parents and the length of the edge to the parent.
    struct Visit {
        NodeId id;
        NodeId parent;
        double length;
    };
    std::vector<Visit> order;
    std::vector<Visit> stack{{root, root, 0.0}};
    while (!stack.empty()) {
        Visit v = stack.back();
        stack.pop_back();
        order.push_back(v);
        for (const auto& [nb, d] : adj.at(v.id)) {
            if (nb != v.parent) stack.push_back({nb, v.id, d});
        }
    }

    RootedPass pass;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Complex y = 0.0;
        if (it->id != root) {
            if (auto ld = t.loads.find(it->id); ld != t.loads.end()) y += ld->second;
        }
        for (const auto& [nb, d] : adj.at(it->id)) {
            if (nb == it->parent) continue;
            y += line_input_admittance(lc, d, pass.away.at(nb));
        }
        pass.away[it->id] = y;
    }
    pass.root_admittance = pass.away.at(root);

    pass.voltage[root] = 1.0;
    for (const auto& v : order) {
        if (v.id == root) continue;
        pass.voltage[v.id] = pass.voltage.at(v.parent) * line_voltage_ratio(lc, v.length, pass.away.at(v.id));
    }
    return pass;
}

Complex perturb(Complex y, double rel_std, std::normal_distribution<double>& normal, std::mt19937_64& rng) {
    const double re = normal(rng);
    const double im = normal(rng);
    return y + std::abs(y) * rel_std * Complex(re, im) / std::sqrt(2.0);
}

}  // namespace

Complex node_admittance(const Topology& t, const CableModel& cable, double frequency_hz, NodeId modem) {
    const auto lc = secondary_params(cable, frequency_hz);
    return rooted_pass(t, t.adjacency(), lc, modem).root_admittance;
}

std::map<NodeId, Complex> transfer_ratios(const Topology& t, const CableModel& cable, double frequency_hz,
                                          NodeId source) {
    const auto lc = secondary_params(cable, frequency_hz);
    const auto pass = rooted_pass(t, t.adjacency(), lc, source);
    std::map<NodeId, Complex> out;
    for (NodeId m : t.modem_ids()) {
        if (m != source) out[m] = pass.voltage.at(m);
    }
    return out;
}

AdmittanceSet all_admittances(const Topology& t, const CableModel& cable, double frequency_hz) {
    const auto lc = secondary_params(cable, frequency_hz);
    const auto adj = t.adjacency();
    const auto modems = t.modem_ids();

    AdmittanceSet set;
    set.frequency_hz = frequency_hz;
    for (NodeId src : modems) {
        const auto pass = rooted_pass(t, adj, lc, src);
        set.entries[src] = pass.root_admittance;
        for (NodeId m : modems) {
            if (m != src) set.transfers[{src, m}] = pass.voltage.at(m);
        }
    }
    return set;
}

AdmittanceSet apply_noise(const AdmittanceSet& a, const NoiseModel& nm) {
    if (std::isnan(nm.anr_db) || nm.anr_db == -std::numeric_limits<double>::infinity()) {
        throw InvalidParameter("ANR must be finite or +inf");
    }
    if (std::isinf(nm.anr_db)) return a;

    const double rel_std = std::pow(10.0, -nm.anr_db / 20.0);
    std::mt19937_64 rng(nm.seed);
    std::normal_distribution<double> normal;

    AdmittanceSet out = a;
    for (auto& [id, y] : out.entries) y = perturb(y, rel_std, normal, rng);
    for (auto& [key, h] : out.transfers) h = perturb(h, rel_std, normal, rng);
    out.noisy = true;
    out.anr_db = nm.anr_db;
    return out;
}

std::string serialize(const AdmittanceSet& a) {
    detail::OrderedJson doc;
    doc["frequency_hz"] = a.frequency_hz;
    doc["anr_db"] = a.anr_db ? detail::OrderedJson(*a.anr_db) : detail::OrderedJson(nullptr);
    auto& entries = doc["entries"] = detail::OrderedJson::array();
    for (const auto& [id, y] : a.entries) entries.push_back({{"node", id}, {"g_s", y.real()}, {"b_s", y.imag()}});
    auto& transfers = doc["transfers"] = detail::OrderedJson::array();
    for (const auto& [key, h] : a.transfers) {
        transfers.push_back({{"source", key.first}, {"node", key.second}, {"re", h.real()}, {"im", h.imag()}});
    }
    return doc.dump(2) + "\n";
}

AdmittanceSet deserialize_admittance_set(std::string_view text) {
    const auto doc = detail::parse_json(text);
    AdmittanceSet a;
    a.frequency_hz = detail::require_number(doc, "frequency_hz", "admittance set");
    const auto& anr = detail::require(doc, "anr_db", "admittance set");
    if (!anr.is_null()) {
        if (!anr.is_number()) throw ParseError("admittance set: \"anr_db\" must be a number or null");
        a.anr_db = anr.get<double>();
        a.noisy = true;
    }
    for (const auto& e : detail::require_array(doc, "entries", "admittance set")) {
        const NodeId id = detail::require_int(e, "node", "admittance entry");
        if (!a.entries.emplace(id, detail::read_admittance(e, "admittance entry")).second) {
            throw ParseError("admittance set: duplicate entry for node " + std::to_string(id));
        }
    }
    if (doc.contains("transfers")) {
        for (const auto& e : detail::require_array(doc, "transfers", "admittance set")) {
            const std::pair<NodeId, NodeId> key{detail::require_int(e, "source", "transfer"),
                                                detail::require_int(e, "node", "transfer")};
            const Complex h{detail::require_number(e, "re", "transfer"), detail::require_number(e, "im", "transfer")};
            if (!a.transfers.emplace(key, h).second) throw ParseError("admittance set: duplicate transfer entry");
        }
    }
    return a;
}

std::map<NodeId, Complex> deserialize_loads(std::string_view text) {
    const auto doc = detail::parse_json(text);
    std::map<NodeId, Complex> loads;
    for (const auto& ld : detail::require_array(doc, "loads", "loads")) {
        const NodeId id = detail::require_int(ld, "node", "load");
        if (!loads.emplace(id, detail::read_admittance(ld, "load")).second) {
            throw ParseError("loads: duplicate entry for node " + std::to_string(id));
        }
    }
    return loads;
}

}  // namespace plctopo
