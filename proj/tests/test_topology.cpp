#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "plctopo/error.hpp"
#include "plctopo/topology.hpp"

using namespace plctopo;

namespace {

const LineConstants kRef = secondary_params(CableModel::reference(), 10e3);

bool has(const std::vector<Violation>& v, ViolationKind k) {
    return std::any_of(v.begin(), v.end(), [k](const Violation& x) { return x.kind == k; });
}

// Modems 0..4, junctions 5 and 6: {0,1} - 5 - 6 - {2,3,4}.
Topology five_modem_tree() {
    Topology t;
    for (int i = 0; i < 5; ++i) t.nodes.push_back({i, NodeKind::Modem});
    t.nodes.push_back({5, NodeKind::Junction});
    t.nodes.push_back({6, NodeKind::Junction});
    t.branches = {{0, 5, 100}, {1, 5, 120}, {5, 6, 80}, {2, 6, 60}, {3, 6, 200}, {4, 6, 40}};
    for (int i = 0; i < 5; ++i) t.loads[i] = Complex(0.01 + 0.002 * i, 0.001);
    t.normalize();
    return t;
}

// Mean of Poisson(rate) conditioned on k >= min_k, by direct summation.
double truncated_poisson_mean(double rate, int min_k) {
    double p = std::exp(-rate);
    double mass = 0.0;
    double first = 0.0;
    for (int k = 0; k < 200; ++k) {
        if (k >= min_k) {
            mass += p;
            first += k * p;
        }
        p *= rate / (k + 1);
    }
    return first / mass;
}

}  // namespace

TEST(Generate, TwoModemsIsASingleLine) {
    GeneratorConfig g;
    g.n_modems = 2;
    g.seed = 4;
    const Topology t = generate_random(g);
    EXPECT_EQ(t.nodes.size(), 2u);
    EXPECT_EQ(t.junction_count(), 0u);
    ASSERT_EQ(t.branches.size(), 1u);
    EXPECT_EQ(t.branches[0].a, 0);
    EXPECT_EQ(t.branches[0].b, 1);
    EXPECT_TRUE(validate(t, kRef).empty());
}

TEST(Generate, SameSeedSameBytes) {
    GeneratorConfig g;
    g.n_modems = 17;
    g.seed = 7;
    EXPECT_EQ(serialize(generate_random(g)), serialize(generate_random(g)));
    GeneratorConfig h = g;
    h.seed = 8;
    EXPECT_NE(serialize(generate_random(g)), serialize(generate_random(h)));
}

TEST(Generate, ManyNetworksAreValidWithPoissonFanOut) {
    GeneratorConfig g;
    g.n_modems = 30;
    g.d_max = 500;
    double fanout_sum = 0.0;
    int fanout_count = 0;
    for (int s = 0; s < 1000; ++s) {
        g.seed = static_cast<std::uint64_t>(s);
        const Topology t = generate_random(g);
        const auto issues = validate(t, kRef);
        ASSERT_TRUE(issues.empty()) << "seed " << s << ": " << issues.front().message;
        ASSERT_EQ(t.modem_ids().size(), 30u);
        for (const auto& br : t.branches) ASSERT_LE(br.length_m, 500.0);
        // Fan-out of a junction is its number of children; every junction but
        // the root (the first junction id) has one parent edge.
        const auto adj = t.adjacency();
        const NodeId root = g.n_modems;
        for (const auto& n : t.nodes) {
            if (n.kind != NodeKind::Junction || n.id == root) continue;
            fanout_sum += static_cast<double>(adj.at(n.id).size() - 1);
            ++fanout_count;
        }
    }
    const double expected = truncated_poisson_mean(2.0, 2);
    EXPECT_NEAR(fanout_sum / fanout_count, expected, 0.1 * expected);
}

TEST(Generate, RejectsBadConfig) {
    GeneratorConfig g;
    g.n_modems = 1;
    EXPECT_THROW(generate_random(g), GenerationError);
    g.n_modems = 5;
    g.d_min = 600;
    EXPECT_THROW(generate_random(g), GenerationError);
    g.d_min = 10;
    g.branch_rate = 0;
    EXPECT_THROW(generate_random(g), GenerationError);
}

TEST(Validate, FiveModemTreeIsValid) { EXPECT_TRUE(validate(five_modem_tree(), kRef).empty()); }

TEST(Validate, BranchLongerThanQuarterWavelength) {
    Topology t = five_modem_tree();
    t.branches[0].length_m = kRef.quarter_wavelength() + 1.0;
    const auto v = validate(t, kRef);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].kind, ViolationKind::QuarterWavelength);
    EXPECT_NE(v[0].message.find("branch 0-5"), std::string::npos);
}

TEST(Validate, Cycle) {
    Topology t = five_modem_tree();
    t.nodes.push_back({7, NodeKind::Junction});
    t.branches.push_back({5, 7, 10});
    t.branches.push_back({6, 7, 10});
    t.branches.push_back({5, 6, 10});
    EXPECT_TRUE(has(validate(t, kRef), ViolationKind::Cycle));
}

TEST(Validate, StructuralViolations) {
    Topology t = five_modem_tree();
    t.branches.push_back({0, 9, 10});
    EXPECT_TRUE(has(validate(t, kRef), ViolationKind::UnknownEndpoint));

    t = five_modem_tree();
    std::erase_if(t.branches, [](const Branch& b) { return b.a == 5 && b.b == 6; });
    const auto v = validate(t, kRef);
    EXPECT_TRUE(has(v, ViolationKind::Disconnected));
    EXPECT_TRUE(has(v, ViolationKind::JunctionDegree));

    t = five_modem_tree();
    t.branches[0].length_m = 0.0;
    EXPECT_TRUE(has(validate(t, kRef), ViolationKind::NonPositiveLength));

    t = five_modem_tree();
    t.loads.erase(3);
    t.loads[5] = 0.01;
    EXPECT_TRUE(has(validate(t, kRef), ViolationKind::MissingLoad));
    EXPECT_TRUE(has(validate(t, kRef), ViolationKind::StrayLoad));

    t = five_modem_tree();
    t.loads[2] = Complex(-0.01, 0.0);
    EXPECT_TRUE(has(validate(t, kRef), ViolationKind::ActiveLoad));

    t = five_modem_tree();
    t.nodes.push_back({1, NodeKind::Modem});
    EXPECT_TRUE(has(validate(t, kRef), ViolationKind::DuplicateNode));
}

TEST(Serialize, RoundTripAndCanonicalBytes) {
    for (std::uint64_t s = 0; s < 20; ++s) {
        GeneratorConfig g;
        g.n_modems = 3 + static_cast<int>(s);
        g.seed = s;
        const Topology t = generate_random(g);
        const std::string text = serialize(t);
        const Topology back = deserialize(text);
        EXPECT_EQ(back, t);
        EXPECT_EQ(serialize(back), text);
    }
}

TEST(Serialize, BranchOrderDoesNotMatter) {
    Topology a = five_modem_tree();
    Topology b = a;
    std::reverse(b.branches.begin(), b.branches.end());
    for (auto& br : b.branches) std::swap(br.a, br.b);
    EXPECT_EQ(serialize(a), serialize(b));
}

TEST(Serialize, TruncatedFileIsAParseError) {
    const std::string text = serialize(five_modem_tree());
    for (std::size_t cut : {std::size_t{0}, std::size_t{1}, text.size() / 3, text.size() / 2, text.size() - 3}) {
        EXPECT_THROW(deserialize(text.substr(0, cut)), ParseError) << cut;
    }
    try {
        deserialize("{\n  \"frequency_hz\": 10000,\n  \"nodes\": [,]\n}");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    EXPECT_THROW(deserialize(R"({"frequency_hz": 1, "nodes": [{"id": 0, "kind": "hub"}], "branches": [], "loads": []})"),
                 ParseError);
}
