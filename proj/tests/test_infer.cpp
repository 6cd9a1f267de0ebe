#include <gtest/gtest.h>

#include <json.hpp>

#include <cmath>

#include "plctopo/error.hpp"
#include "plctopo/forward.hpp"
#include "plctopo/infer.hpp"
#include "plctopo/metrics.hpp"

using namespace plctopo;

namespace {

const CableModel kRefCable = CableModel::reference();
const LineConstants kRef = secondary_params(kRefCable, 10e3);

Topology star(double d0, double d1, double d2) {
    Topology t;
    t.nodes = {{0, NodeKind::Modem}, {1, NodeKind::Modem}, {2, NodeKind::Modem}, {3, NodeKind::Junction}};
    t.branches = {{0, 3, d0}, {1, 3, d1}, {2, 3, d2}};
    t.loads = {{0, {0.01, 0.002}}, {1, {0.02, 0.0}}, {2, {0.03, 0.01}}};
    t.normalize();
    return t;
}

// {0,1} - 4 - 5 - {2,3}
Topology h_network(double middle) {
    Topology t;
    for (int i = 0; i < 4; ++i) t.nodes.push_back({i, NodeKind::Modem});
    t.nodes.push_back({4, NodeKind::Junction});
    t.nodes.push_back({5, NodeKind::Junction});
    t.branches = {{0, 4, 120}, {1, 4, 340}, {4, 5, middle}, {2, 5, 75}, {3, 5, 410}};
    for (int i = 0; i < 4; ++i) t.loads[i] = Complex(0.008 + 0.006 * i, 0.002 * i);
    t.normalize();
    return t;
}

ActiveNetwork network_of(const Topology& t, const CableModel& cable = kRefCable) {
    return ActiveNetwork(all_admittances(t, cable, 10e3), t.loads);
}

}  // namespace

TEST(SolveSibling, StarPairIsExact) {
    const Topology t = star(150.0, 300.0, 220.0);
    const auto net = network_of(t);
    const auto h = solve_sibling(net, 0, 1, kRef);
    EXPECT_NEAR(h.d_i, 150.0, 1e-3);
    EXPECT_NEAR(h.d_j, 300.0, 1e-3);
    EXPECT_LT(h.residual, 1e-9);
    // y_r is what the junction sees towards modem 2.
    EXPECT_LT(std::abs(h.y_r - line_input_admittance(kRef, 220.0, t.loads.at(2))), 1e-12);
}

TEST(SolveSibling, NonSiblingsStandOutInHNetwork) {
    const auto net = network_of(h_network(90.0));
    const double true_pair = std::max(solve_sibling(net, 0, 1, kRef).residual, solve_sibling(net, 2, 3, kRef).residual);
    EXPECT_LT(true_pair, 1e-9);
    for (auto [i, j] : {std::pair{0, 2}, {0, 3}, {1, 2}, {1, 3}}) {
        const auto h = solve_sibling(net, i, j, kRef);
        EXPECT_GE(h.raw_residual, 10.0 * true_pair) << i << "," << j;
        EXPECT_GT(h.ratio_spread, 1e-3) << i << "," << j;
    }
}

TEST(SolveSibling, InconsistentMeasurementIsRejected) {
    const Topology t = star(150.0, 300.0, 220.0);
    auto a = all_admittances(t, kRefCable, 10e3);
    a.entries[0] = -a.entries[0];
    const ActiveNetwork net(a, t.loads);
    const auto good = solve_sibling(network_of(t), 0, 1, kRef);
    const auto bad = solve_sibling(net, 0, 1, kRef);
    EXPECT_TRUE(std::isinf(bad.residual) || bad.raw_residual > 1e3 * good.raw_residual) << bad.raw_residual;
}

TEST(SolveSibling, NeedsAThirdNode) {
    Topology t;
    t.nodes = {{0, NodeKind::Modem}, {1, NodeKind::Modem}};
    t.branches = {{0, 1, 200}};
    t.loads = {{0, 0.01}, {1, 0.02}};
    const auto net = network_of(t);
    EXPECT_THROW(solve_sibling(net, 0, 1, kRef), InvalidInput);
}

TEST(Collapse, StarLeavesTwoNodesAndFinalBranch) {
    const Topology t = star(150.0, 300.0, 220.0);
    auto net = network_of(t);
    PartialTopology partial;
    const auto h = solve_sibling(net, 0, 1, kRef);
    const ActiveNode j = collapse(net, h, kRef, partial);
    EXPECT_EQ(net.size(), 2u);
    EXPECT_EQ(partial.branches.size(), 2u);
    EXPECT_TRUE(partial.merged.empty());
    EXPECT_FALSE(j.modem);
    // The junction's meas is what modem 2's branch presents to it.
    const ActiveNode& m2 = net.node(2);
    EXPECT_NEAR(line_invert_length(kRef, m2.equiv_load, j.meas), 220.0, 1e-6);
    EXPECT_NEAR(line_invert_length(kRef, j.equiv_load, m2.meas), 220.0, 1e-6);
}

TEST(Collapse, ShortJunctionBranchMerges) {
    // The middle branch is shorter than epsilon, so the two junctions become one.
    const Topology t = h_network(0.4);
    auto net = network_of(t);
    PartialTopology partial;
    collapse(net, solve_sibling(net, 0, 1, kRef), kRef, partial, 1.0);
    EXPECT_EQ(partial.branches.size(), 2u);
    const auto h = solve_sibling(net, 2, 3, kRef);
    EXPECT_LT(h.residual, 1e-9);
    collapse(net, h, kRef, partial, 1.0);
    EXPECT_EQ(partial.branches.size(), 4u);

    const auto result = infer_topology(all_admittances(t, kRefCable, 10e3), t.loads, kRefCable);
    EXPECT_EQ(result.topology.junction_count(), 1u);
    EXPECT_EQ(result.topology.branches.size(), 4u);
    EXPECT_TRUE(validate(result.topology, kRef).empty());
}

TEST(Collapse, ModemKeepsShortBranch) {
    const Topology t = star(0.5, 300.0, 220.0);
    const auto result = infer_topology(all_admittances(t, kRefCable, 10e3), t.loads, kRefCable);
    EXPECT_TRUE(result.converged);
    EXPECT_TRUE(compare(t, result.topology, 1e-3).exact);
}

TEST(Infer, TwoModemLine) {
    Topology t;
    t.nodes = {{0, NodeKind::Modem}, {1, NodeKind::Modem}};
    t.branches = {{0, 1, 200.0}};
    t.loads = {{0, {0.01, 0.001}}, {1, {0.02, 0.0}}};
    const auto r = infer_topology(all_admittances(t, kRefCable, 10e3), t.loads, kRefCable);
    EXPECT_TRUE(r.converged);
    ASSERT_EQ(r.topology.branches.size(), 1u);
    EXPECT_NEAR(r.topology.branches[0].length_m, 200.0, 1e-3);
    EXPECT_TRUE(r.collapse_log.empty());
}

TEST(Infer, NoiselessThirtyModemNetworksAreExact) {
    for (const CableModel& cable : {CableModel::reference(), CableModel::lossy()}) {
        for (std::uint64_t s = 0; s < 10; ++s) {
            GeneratorConfig g;
            g.n_modems = 30;
            g.seed = 100 + s;
            const Topology t = generate_random(g);
            const auto r = infer_topology(all_admittances(t, cable, 10e3), t.loads, cable);
            EXPECT_TRUE(r.converged) << "seed " << g.seed;
            const auto cmp = compare(t, r.topology, 1e-2);
            EXPECT_TRUE(cmp.exact) << "seed " << g.seed << " recall " << cmp.element_recall;
            EXPECT_EQ(r.collapse_log.size(), 28u);
        }
    }
}

TEST(Infer, JunctionsAreNumberedAfterModems) {
    GeneratorConfig g;
    g.n_modems = 12;
    g.seed = 5;
    const Topology t = generate_random(g);
    const auto r = infer_topology(all_admittances(t, kRefCable, 10e3), t.loads, kRefCable);
    NodeId expected = 12;
    for (const auto& n : r.topology.nodes) {
        if (n.kind == NodeKind::Junction) EXPECT_EQ(n.id, expected++);
    }
    EXPECT_EQ(r.topology.loads, t.loads);
}

TEST(Infer, ModeratelyNoisyRunIsScoredNotThrown) {
    GeneratorConfig g;
    g.n_modems = 20;
    g.seed = 77;
    const Topology t = generate_random(g);
    const auto a = apply_noise(all_admittances(t, kRefCable, 10e3), {50.0, 1});
    const auto r = infer_topology(a, t.loads, kRefCable);
    EXPECT_GT(r.tolerance, 0.0);
    const auto cmp = compare(t, r.topology, 1.0);
    EXPECT_GE(cmp.element_recall, 0.0);
    EXPECT_LE(cmp.element_recall, 1.0);
}

TEST(Infer, RejectsUnusableInput) {
    const Topology t = star(150.0, 300.0, 220.0);
    auto a = all_admittances(t, kRefCable, 10e3);
    auto loads = t.loads;
    loads.erase(2);
    EXPECT_THROW(infer_topology(a, loads, kRefCable), InvalidInput);
    a.transfers.erase({0, 1});
    EXPECT_THROW(infer_topology(a, t.loads, kRefCable), InvalidInput);
    AdmittanceSet one;
    one.frequency_hz = 10e3;
    one.entries[0] = 0.01;
    EXPECT_THROW(infer_topology(one, {{0, 0.01}}, kRefCable), InvalidInput);
}

TEST(Infer, DiagnosticsAreJson) {
    const Topology t = star(150.0, 300.0, 220.0);
    const auto r = infer_topology(all_admittances(t, kRefCable, 10e3), t.loads, kRefCable);
    const auto doc = nlohmann::json::parse(serialize_diagnostics(r));
    EXPECT_TRUE(doc.at("converged").get<bool>());
    EXPECT_EQ(doc.at("collapse_log").size(), 1u);
    EXPECT_NEAR(doc.at("final_branch").at("length_m").get<double>(), 220.0, 1e-3);
}
