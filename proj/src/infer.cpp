#include "plctopo/infer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <set>
#include <tuple>

#include "json_util.hpp"
#include "plctopo/error.hpp"

namespace plctopo {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

// Impedance at the near end of a line whose far end is grounded, with `shunt`
// in parallel at the near end: 1 / (shunt + y_c coth(gamma d)).
Complex shorted_impedance(const LineConstants& lc, double d, Complex shunt) {
    const Complex t = std::tanh(lc.gamma * d);
    return t / (shunt * t + lc.y_c);
}

// Damped Gauss-Newton on a residual R^2 -> R^4 with a central-difference
// Jacobian.
template <typename Residual>
std::array<double, 2> gauss_newton(Residual&& residual, std::array<double, 2> x, double fd_step) {
    constexpr int kMaxIterations = 50;
    auto norm = [](const std::array<double, 4>& r) { return std::sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2] + r[3] * r[3]); };

    auto r = residual(x);
    double current = norm(r);
    for (int iter = 0; iter < kMaxIterations && current >= 1e-12; ++iter) {
        std::array<std::array<double, 2>, 4> jac{};
        for (int c = 0; c < 2; ++c) {
            auto hi = x;
            auto lo = x;
            hi[c] += fd_step;
            lo[c] -= fd_step;
            const auto rh = residual(hi);
            const auto rl = residual(lo);
            for (int k = 0; k < 4; ++k) jac[k][c] = (rh[k] - rl[k]) / (2.0 * fd_step);
        }
        // Normal equations J^T J dx = -J^T r.
        double a = 0, b = 0, d = 0, g0 = 0, g1 = 0;
        for (int k = 0; k < 4; ++k) {
            a += jac[k][0] * jac[k][0];
            b += jac[k][0] * jac[k][1];
            d += jac[k][1] * jac[k][1];
            g0 += jac[k][0] * r[k];
            g1 += jac[k][1] * r[k];
        }
        const double det = a * d - b * b;
        if (!(std::abs(det) > 0.0) || !std::isfinite(det)) break;
        std::array<double, 2> step{-(d * g0 - b * g1) / det, -(a * g1 - b * g0) / det};

        bool improved = false;
        for (int halving = 0; halving < 10; ++halving) {
            const std::array<double, 2> trial{x[0] + step[0], x[1] + step[1]};
            const auto rt = residual(trial);
            const double n = norm(rt);
            if (n < current) {
                x = trial;
                r = rt;
                current = n;
                improved = true;
                break;
            }
            step[0] *= 0.5;
            step[1] *= 0.5;
        }
        if (!improved) break;
        if (std::abs(step[0]) < 1e-9 * std::max(1.0, std::abs(x[0])) &&
            std::abs(step[1]) < 1e-9 * std::max(1.0, std::abs(x[1]))) {
            break;
        }
    }
    return x;
}

// Relative RMS spread of z[r][p] / z[r][q] over the rows r other than p and q
// of a dense k-by-k table; NaN becomes +inf.
double ratio_spread(const std::vector<Complex>& z, std::size_t k, std::size_t p, std::size_t q) {
    Complex mean = 0.0;
    std::size_t count = 0;
    for (std::size_t r = 0; r < k; ++r) {
        if (r != p && r != q) {
            mean += z[r * k + p] / z[r * k + q];
            ++count;
        }
    }
    mean /= static_cast<double>(count);
    double sum_sq = 0.0;
    for (std::size_t r = 0; r < k; ++r) {
        if (r != p && r != q) sum_sq += std::norm(z[r * k + p] / z[r * k + q] - mean);
    }
    const double spread = std::sqrt(sum_sq / static_cast<double>(count)) / std::abs(mean);
    return std::isnan(spread) ? kInf : spread;
}

// Union-find over node ids, used for ε-merged nodes.
class IdUnion {
public:
    NodeId find(NodeId x) {
        auto it = parent_.find(x);
        if (it == parent_.end() || it->second == x) return x;
        const NodeId root = find(it->second);
        parent_[x] = root;
        return root;
    }

    // Keeps the smaller representative so modem ids survive a merge.
    void unite(NodeId a, NodeId b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (b < a) std::swap(a, b);
        parent_[b] = a;
    }

private:
    std::map<NodeId, NodeId> parent_;
};

Topology assemble(const PartialTopology& partial, const std::map<NodeId, Complex>& loads, double frequency_hz,
                  bool& all_finite) {
    IdUnion ids;
    for (const auto& [a, b] : partial.merged) ids.unite(a, b);

    std::map<NodeId, std::map<NodeId, double>> adj;
    for (const auto& [id, y] : loads) adj[id];
    for (const auto& br : partial.branches) {
        const NodeId a = ids.find(br.a);
        const NodeId b = ids.find(br.b);
        if (a == b) continue;
        double len = br.length_m;
        if (!std::isfinite(len)) {
            all_finite = false;
            len = 0.0;
        }
        adj[a][b] = len;
        adj[b][a] = len;
    }

    // Degree-2 junctions are electrically invisible: merge their two branches.
    for (bool changed = true; changed;) {
        changed = false;
        for (auto& [id, nbrs] : adj) {
            if (loads.count(id) != 0 || nbrs.size() != 2) continue;
            auto first = nbrs.begin();
            auto second = std::next(first);
            const NodeId x = first->first;
            const NodeId y = second->first;
            const double len = first->second + second->second;
            adj[x].erase(id);
            adj[y].erase(id);
            adj[x][y] = len;
            adj[y][x] = len;
            adj.erase(id);
            changed = true;
            break;
        }
    }

    const NodeId first_junction = loads.empty() ? 0 : loads.rbegin()->first + 1;
    std::map<NodeId, NodeId> rename;
    NodeId next = first_junction;
    for (const auto& [id, nbrs] : adj) rename[id] = loads.count(id) != 0 ? id : next++;

    Topology t;
    t.frequency_hz = frequency_hz;
    t.loads = loads;
    for (const auto& [id, nbrs] : adj) {
        t.nodes.push_back({rename[id], loads.count(id) != 0 ? NodeKind::Modem : NodeKind::Junction});
        for (const auto& [nb, len] : nbrs) {
            if (id < nb) t.branches.push_back({rename[id], rename[nb], len});
        }
    }
    t.normalize();
    return t;
}

double median_magnitude(const AdmittanceSet& a) {
    std::vector<double> mags;
    for (const auto& [id, y] : a.entries) mags.push_back(std::abs(y));
    std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(mags.size() / 2), mags.end());
    return mags[mags.size() / 2];
}

}  // namespace

ActiveNetwork::ActiveNetwork(const AdmittanceSet& a, const std::map<NodeId, Complex>& loads) {
    if (a.entries.size() < 2) throw InvalidInput("inference needs at least two modems");
    if (a.entries.size() != loads.size() ||
        !std::equal(a.entries.begin(), a.entries.end(), loads.begin(),
                    [](const auto& x, const auto& y) { return x.first == y.first; })) {
        throw InvalidInput("measurements and loads must cover the same modems");
    }

    const std::size_t n = a.entries.size();
    const std::size_t capacity = 2 * n;
    z_.assign(capacity, std::vector<Complex>(capacity));
    for (const auto& [id, m] : a.entries) {
        const Complex e = loads.at(id);
        if (!finite(m) || !finite(e)) throw InvalidInput("non-finite measurement or load at modem " + std::to_string(id));
        const std::size_t s = nodes_.size();
        slot_of_[id] = s;
        nodes_.push_back({id, e, m, true});
        active_.push_back(s);
        z_[s][s] = 1.0 / (m + e);
    }
    next_id_ = a.entries.rbegin()->first + 1;

    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = p + 1; q < n; ++q) {
            const NodeId ip = nodes_[p].id;
            const NodeId iq = nodes_[q].id;
            const auto fwd = a.transfers.find({ip, iq});
            const auto bwd = a.transfers.find({iq, ip});
            if (fwd == a.transfers.end() || bwd == a.transfers.end()) {
                if (n > 2) {
                    throw InvalidInput("missing transfer measurement between modems " + std::to_string(ip) + " and " +
                                       std::to_string(iq));
                }
                continue;
            }
            // Reciprocity: both directions estimate the same Z entry.
            const Complex zpq = 0.5 * (fwd->second * z_[p][p] + bwd->second * z_[q][q]);
            z_[p][q] = z_[q][p] = zpq;
        }
    }
}

std::size_t ActiveNetwork::slot(NodeId id) const {
    auto it = slot_of_.find(id);
    if (it == slot_of_.end()) throw InvalidNode("unknown node " + std::to_string(id));
    return it->second;
}

std::vector<ActiveNode> ActiveNetwork::active() const {
    std::vector<ActiveNode> out;
    out.reserve(active_.size());
    for (std::size_t s : active_) out.push_back(nodes_[s]);
    return out;
}

const ActiveNode& ActiveNetwork::node(NodeId id) const { return nodes_[slot(id)]; }

Complex ActiveNetwork::z(NodeId a, NodeId b) const { return z_[slot(a)][slot(b)]; }

NodeId ActiveNetwork::replace_pair(NodeId i, NodeId j, Complex equiv_load, Complex z_self,
                                   const std::map<NodeId, Complex>& z_row) {
    const std::size_t si = slot(i);
    const std::size_t sj = slot(j);
    const std::size_t s = nodes_.size();
    if (s >= z_.size()) throw InvalidInput("active network capacity exceeded");

    const NodeId id = next_id_++;
    nodes_.push_back({id, equiv_load, 1.0 / z_self - equiv_load, false});
    slot_of_[id] = s;
    z_[s][s] = z_self;
    std::erase_if(active_, [&](std::size_t x) { return x == si || x == sj; });
    for (std::size_t k : active_) z_[s][k] = z_[k][s] = z_row.at(nodes_[k].id);
    active_.push_back(s);  // new ids are the largest, so the order by id is kept
    return id;
}

SiblingHypothesis solve_sibling(const ActiveNetwork& net, NodeId i, NodeId j, const LineConstants& lc,
                                double noise_rel) {
    SiblingHypothesis h;
    h.i = i;
    h.j = j;
    if (i == j) throw InvalidInput("a node cannot be its own sibling");

    const ActiveNode& ni = net.node(i);
    const ActiveNode& nj = net.node(j);
    const Complex zij = net.z(i, j);

    // Ratio Z_ki / Z_kj must be common to every outside node k.
    std::vector<Complex> ratios;
    for (const auto& k : net.active()) {
        if (k.id != i && k.id != j) ratios.push_back(net.z(k.id, i) / net.z(k.id, j));
    }
    if (ratios.empty()) throw InvalidInput("sibling test needs at least three active nodes");
    const Complex rho = std::accumulate(ratios.begin(), ratios.end(), Complex{}) / static_cast<double>(ratios.size());
    double spread = 0.0;
    for (const Complex& r : ratios) spread += std::norm(r - rho);
    spread = std::sqrt(spread / static_cast<double>(ratios.size())) / std::abs(rho);
    h.ratio_spread = spread;
    if (!std::isfinite(spread)) return h;

    // Shorted-junction impedances seen from i and from j.
    const Complex s_i = net.z(i, i) - rho * zij;
    const Complex s_j = net.z(j, j) - zij / rho;
    auto initial_length = [&](Complex s, Complex e) { return length_from_tanh(lc, lc.y_c * s / (1.0 - e * s)).real(); };
    std::array<double, 2> x{initial_length(s_i, ni.equiv_load), initial_length(s_j, nj.equiv_load)};
    if (!std::isfinite(x[0]) || !std::isfinite(x[1])) return h;

    const double scale_i = std::abs(net.z(i, i));
    const double scale_j = std::abs(net.z(j, j));
    auto residual = [&](const std::array<double, 2>& v) {
        const Complex fi = (shorted_impedance(lc, v[0], ni.equiv_load) - s_i) / scale_i;
        const Complex fj = (shorted_impedance(lc, v[1], nj.equiv_load) - s_j) / scale_j;
        return std::array<double, 4>{fi.real(), fi.imag(), fj.real(), fj.imag()};
    };
    x = gauss_newton(residual, x, lc.quarter_wavelength() * 1e-6);
    const auto r = residual(x);
    const double fit = std::sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2] + r[3] * r[3]);

    const double quarter = lc.quarter_wavelength();
    const double slack = quarter * std::max(1e-9, 6.0 * noise_rel);
    const bool in_range = x[0] >= -slack && x[1] >= -slack && x[0] <= quarter + slack && x[1] <= quarter + slack;
    h.d_i = std::clamp(x[0], 0.0, quarter);
    h.d_j = std::clamp(x[1], 0.0, quarter);

    try {
        const Complex yi = line_input_admittance(lc, h.d_i, ni.equiv_load);
        const Complex yj = line_input_admittance(lc, h.d_j, nj.equiv_load);
        const Complex z_junction =
            zij / (line_voltage_ratio(lc, h.d_i, ni.equiv_load) * line_voltage_ratio(lc, h.d_j, nj.equiv_load));
        const Complex y_junction = 1.0 / z_junction;
        h.y_r = y_junction - (yi + yj);

        // The defining relation on the self-admittances: both sides must see the
        // same total admittance at the junction.
        const Complex total_i = line_invert_load(lc, h.d_i, ni.meas) + yi;
        const Complex total_j = line_invert_load(lc, h.d_j, nj.meas) + yj;
        const double self = std::abs(total_i - total_j) / std::abs(y_junction);

        h.raw_residual = std::sqrt(spread * spread + fit * fit + self * self);
        if (!std::isfinite(h.raw_residual)) h.raw_residual = kInf;

        const double passive_tol = std::max(1e-9, 6.0 * noise_rel) * std::abs(y_junction);
        const bool passive = h.y_r.real() >= -passive_tol;
        h.residual = (in_range && passive) ? h.raw_residual : kInf;
    } catch (const Error&) {
        h.raw_residual = h.residual = kInf;
    }
    return h;
}

ActiveNode collapse(ActiveNetwork& net, const SiblingHypothesis& h, const LineConstants& lc, PartialTopology& out,
                    double epsilon_merge) {
    const ActiveNode ni = net.node(h.i);
    const ActiveNode nj = net.node(h.j);
    const Complex hi = line_voltage_ratio(lc, h.d_i, ni.equiv_load);
    const Complex hj = line_voltage_ratio(lc, h.d_j, nj.equiv_load);

    std::map<NodeId, Complex> row;
    for (const auto& k : net.active()) {
        if (k.id == h.i || k.id == h.j) continue;
        row[k.id] = 0.5 * (net.z(h.i, k.id) / hi + net.z(h.j, k.id) / hj);
    }
    const Complex z_self = net.z(h.i, h.j) / (hi * hj);
    const Complex equiv = line_input_admittance(lc, h.d_i, ni.equiv_load) + line_input_admittance(lc, h.d_j, nj.equiv_load);
    const NodeId junction = net.replace_pair(h.i, h.j, equiv, z_self, row);

    // A modem always keeps its own branch; only synthetic junctions merge.
    auto attach = [&](const ActiveNode& child, double d) {
        if (!child.modem && d < epsilon_merge) {
            out.merged.emplace_back(junction, child.id);
        } else {
            out.branches.push_back({junction, child.id, d});
        }
    };
    attach(ni, h.d_i);
    attach(nj, h.d_j);
    return net.node(junction);
}

InferenceResult infer_topology(const AdmittanceSet& a, const std::map<NodeId, Complex>& loads, const CableModel& cable,
                               const InferenceOptions& options) {
    ActiveNetwork net(a, loads);
    const auto lc = secondary_params(cable, a.frequency_hz);

    double noise_rel = options.noise_rel;
    if (noise_rel < 0.0) noise_rel = (a.noisy && a.anr_db && std::isfinite(*a.anr_db)) ? std::pow(10.0, -*a.anr_db / 20.0) : 0.0;

    InferenceResult result;
    PartialTopology partial;
    bool consistent = true;

    while (net.size() > 2) {
        const auto active = net.active();
        const std::size_t k = active.size();
        std::vector<Complex> z(k * k);
        for (std::size_t p = 0; p < k; ++p) {
            for (std::size_t q = 0; q < k; ++q) z[p * k + q] = net.z(active[p].id, active[q].id);
        }

        // The ratio spread is a lower bound on the raw residual, so candidates
        // are solved in order of increasing spread until none can win.
        struct Candidate {
            double spread;
            std::size_t p, q;
        };
        std::vector<Candidate> candidates;
        candidates.reserve(k * (k - 1) / 2);
        for (std::size_t p = 0; p < k; ++p) {
            for (std::size_t q = p + 1; q < k; ++q) {
                candidates.push_back({ratio_spread(z, k, p, q), p, q});
            }
        }
        std::stable_sort(candidates.begin(), candidates.end(),
                         [](const Candidate& x, const Candidate& y) { return x.spread < y.spread; });

        auto key = [](const SiblingHypothesis& h) {
            const double raw = std::isnan(h.raw_residual) ? kInf : h.raw_residual;
            return std::tuple<bool, double, NodeId, NodeId>{std::isinf(h.residual), raw, h.i, h.j};
        };
        SiblingHypothesis best;
        bool have = false;
        for (const auto& c : candidates) {
            if (have && !std::isinf(best.residual) && c.spread > best.raw_residual) break;
            auto h = solve_sibling(net, active[c.p].id, active[c.q].id, lc, noise_rel);
            if (!have || key(h) < key(best)) {
                best = h;
                have = true;
            }
        }
        if (std::isinf(best.residual)) consistent = false;
        collapse(net, best, lc, partial, options.epsilon_merge);
        result.collapse_log.push_back(best);
    }

    const auto last = net.active();
    const ActiveNode& ni = last[0];
    const ActiveNode& nj = last[1];
    FinalBranch& fb = result.final_branch;
    fb.a = ni.id;
    fb.b = nj.id;
    const Complex den = lc.y_c * lc.y_c - ni.meas * nj.equiv_load;
    const Complex t = lc.y_c * (ni.meas - nj.equiv_load) / den;
    const double quarter = lc.quarter_wavelength();
    double d = ni.meas == nj.equiv_load ? 0.0 : length_from_tanh(lc, t).real();
    if (!std::isfinite(d)) {
        consistent = false;
        d = 0.0;
    }
    d = std::clamp(d, 0.0, quarter);
    fb.length_m = d;
    try {
        fb.residual = std::abs(ni.meas - line_input_admittance(lc, d, nj.equiv_load));
        fb.cross_check = std::abs(nj.meas - line_input_admittance(lc, d, ni.equiv_load));
    } catch (const Error&) {
        consistent = false;
    }

    const bool mergeable = !ni.modem || !nj.modem;
    if (mergeable && d < options.epsilon_merge) {
        partial.merged.emplace_back(ni.id, nj.id);
    } else {
        partial.branches.push_back({ni.id, nj.id, d});
    }

    bool lengths_finite = true;
    result.topology = assemble(partial, loads, a.frequency_hz, lengths_finite);
    result.tolerance = std::max(1e-6, 6.0 * noise_rel) * median_magnitude(a);
    result.converged = consistent && lengths_finite && fb.residual <= result.tolerance &&
                       fb.cross_check <= result.tolerance && validate(result.topology, lc).empty();
    return result;
}

std::string serialize_diagnostics(const InferenceResult& r) {
    detail::OrderedJson doc;
    doc["converged"] = r.converged;
    doc["tolerance_s"] = r.tolerance;
    auto& log = doc["collapse_log"] = detail::OrderedJson::array();
    auto num = [](double v) { return std::isfinite(v) ? detail::OrderedJson(v) : detail::OrderedJson(nullptr); };
    for (const auto& h : r.collapse_log) {
        log.push_back({{"i", h.i},
                       {"j", h.j},
                       {"d_i_m", num(h.d_i)},
                       {"d_j_m", num(h.d_j)},
                       {"y_r", {{"g_s", num(h.y_r.real())}, {"b_s", num(h.y_r.imag())}}},
                       {"residual", num(h.residual)},
                       {"ratio_spread", num(h.ratio_spread)}});
    }
    doc["final_branch"] = {{"a", r.final_branch.a},
                           {"b", r.final_branch.b},
                           {"length_m", num(r.final_branch.length_m)},
                           {"residual_s", num(r.final_branch.residual)},
                           {"cross_check_s", num(r.final_branch.cross_check)}};
    return doc.dump(2) + "\n";
}

}  // namespace plctopo
