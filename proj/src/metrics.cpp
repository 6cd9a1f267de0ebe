#include "plctopo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "json_util.hpp"
#include "plctopo/error.hpp"

namespace plctopo {

std::vector<std::pair<Element, double>> canonical_elements(const Topology& t) {
    const auto modems = t.modem_ids();
    std::map<NodeId, std::map<NodeId, double>> adj;
    for (const auto& n : t.nodes) adj[n.id];
    for (const auto& br : t.branches) {
        adj[br.a][br.b] += br.length_m;
        adj[br.b][br.a] += br.length_m;
    }
    for (bool changed = true; changed;) {
        changed = false;
        for (auto& [id, nbrs] : adj) {
            if (t.is_modem(id) || nbrs.size() != 2) continue;
            const auto [x, dx] = *nbrs.begin();
            const auto [y, dy] = *std::next(nbrs.begin());
            adj[x].erase(id);
            adj[y].erase(id);
            adj[x][y] = dx + dy;
            adj[y][x] = dx + dy;
            adj.erase(id);
            changed = true;
            break;
        }
    }
    if (modems.empty()) return {};

    // Post-order DFS from the smallest modem; each child's subtree gives an element.
    struct Frame {
        NodeId id;
        NodeId parent;
        double length;
        bool expanded;
    };
    std::map<NodeId, Element> below;
    std::vector<std::pair<Element, double>> out;
    std::vector<Frame> stack{{modems.front(), modems.front(), 0.0, false}};
    while (!stack.empty()) {
        Frame f = stack.back();
        stack.pop_back();
        if (!f.expanded) {
            stack.push_back({f.id, f.parent, f.length, true});
            for (const auto& [nb, d] : adj[f.id]) {
                if (nb != f.parent) stack.push_back({nb, f.id, d, false});
            }
            continue;
        }
        Element side;
        if (t.is_modem(f.id)) side.push_back(f.id);
        for (const auto& [nb, d] : adj[f.id]) {
            if (nb == f.parent) continue;
            auto& child = below[nb];
            side.insert(side.end(), child.begin(), child.end());
        }
        std::sort(side.begin(), side.end());
        if (f.id != f.parent) out.emplace_back(side, f.length);
        below[f.id] = std::move(side);
    }
    std::sort(out.begin(), out.end());
    return out;
}

ComparisonReport compare(const Topology& truth, const Topology& inferred, double length_tol) {
    if (truth.modem_ids() != inferred.modem_ids()) throw InvalidComparison("topologies have different modem sets");
    if (!(length_tol >= 0.0)) throw InvalidParameter("length_tol must be non-negative");

    const auto a = canonical_elements(truth);
    const auto b = canonical_elements(inferred);
    std::multimap<Element, double> other(b.begin(), b.end());

    ComparisonReport r;
    r.length_tol = length_tol;
    r.elements_total = a.size();
    bool same_keys = a.size() == b.size();
    for (const auto& [el, len] : a) {
        const auto [lo, hi] = other.equal_range(el);
        if (lo == hi) {
            same_keys = false;
            continue;
        }
        if (std::next(lo) != hi) same_keys = false;
        double best = std::abs(lo->second - len);
        for (auto it = lo; it != hi; ++it) best = std::min(best, std::abs(it->second - len));
        r.length_errors.push_back({el, best});
        if (best <= length_tol) ++r.elements_correct;
    }
    r.element_recall = r.elements_total == 0 ? 1.0 : static_cast<double>(r.elements_correct) / static_cast<double>(r.elements_total);
    r.exact = same_keys && r.elements_correct == r.elements_total;
    return r;
}

std::string serialize(const ComparisonReport& r) {
    detail::OrderedJson doc;
    doc["exact"] = r.exact;
    doc["elements_total"] = r.elements_total;
    doc["elements_correct"] = r.elements_correct;
    doc["element_recall"] = r.element_recall;
    doc["length_tol_m"] = r.length_tol;
    auto& errs = doc["length_errors"] = detail::OrderedJson::array();
    for (const auto& e : r.length_errors) errs.push_back({{"element", e.element}, {"error_m", e.error_m}});
    return doc.dump(2) + "\n";
}

}  // namespace plctopo
