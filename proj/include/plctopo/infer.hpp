#pragma once

// Single-step topology estimation from one set of single-frequency
// measurements, by repeatedly collapsing the best-supported sibling pair into
// the junction that joins them.
//
// Each active node carries the admittance of the subtree already resolved
// below it (equiv_load) and the admittance it sees into the unresolved rest of
// the network (meas). The network is also tracked as a symmetric transfer
// impedance table Z over the active nodes: Z_aa = 1 / (meas_a + equiv_a), and
// Z_ab = V_b / I_a with a current injected at a. Two nodes i, j hang off one
// junction J exactly when Z_ki / Z_kj is the same for every other active k;
// that common ratio fixes both branch lengths in closed form.

#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "plctopo/forward.hpp"
#include "plctopo/tline.hpp"
#include "plctopo/topology.hpp"

namespace plctopo {

struct ActiveNode {
    NodeId id = 0;
    Complex equiv_load;
    Complex meas;
    bool modem = false;
};

struct SiblingHypothesis {
    NodeId i = 0;
    NodeId j = 0;
    double d_i = 0.0;
    double d_j = 0.0;
    Complex y_r;  ///< admittance of the rest of the network at the hypothesised junction
    double residual = std::numeric_limits<double>::infinity();  ///< includes penalties
    double raw_residual = std::numeric_limits<double>::infinity();  ///< same, without penalties
    double ratio_spread = 0.0;  ///< relative spread of Z_ki / Z_kj over the other nodes
};

struct InferenceOptions {
    double epsilon_merge = 1.0;  ///< shorter inferred branches identify a junction with its neighbour
    /// Relative noise std 10^(-ANR/20). Negative means "derive from the input set".
    double noise_rel = -1.0;
};

/// Nodes still to be placed, plus the transfer impedance table between them.
class ActiveNetwork {
public:
    /// Throws InvalidInput if the measurements and loads do not cover the same
    /// modem set, there are fewer than two modems, or transfers are missing.
    ActiveNetwork(const AdmittanceSet& a, const std::map<NodeId, Complex>& loads);

    /// Active nodes ordered by id.
    std::vector<ActiveNode> active() const;
    std::size_t size() const noexcept { return active_.size(); }
    const ActiveNode& node(NodeId id) const;
    Complex z(NodeId a, NodeId b) const;

    /// Replaces i and j by a new node whose transfer row is given by `z_row`
    /// (indexed by the remaining active ids) and whose self term is z_self.
    NodeId replace_pair(NodeId i, NodeId j, Complex equiv_load, Complex z_self, const std::map<NodeId, Complex>& z_row);

private:
    std::size_t slot(NodeId id) const;

    std::vector<ActiveNode> nodes_;         // every node ever created, by slot
    std::map<NodeId, std::size_t> slot_of_;
    std::vector<std::size_t> active_;       // active slots, ordered by id
    std::vector<std::vector<Complex>> z_;   // by slot
    NodeId next_id_ = 0;
};

/// Tests the hypothesis that i and j share a junction and returns the branch
/// lengths and remainder admittance it implies. Needs at least one other
/// active node. Never throws on bad data: inconsistent hypotheses get an
/// infinite residual.
SiblingHypothesis solve_sibling(const ActiveNetwork& net, NodeId i, NodeId j, const LineConstants& lc,
                                double noise_rel = 0.0);

/// Growing output: branches between original and synthetic node ids, and
/// pairs of ids that were identified with each other by the ε-merge rule.
struct PartialTopology {
    std::vector<Branch> branches;
    std::vector<std::pair<NodeId, NodeId>> merged;
};

/// Replaces the pair of `h` by their junction and records its branches in `out`.
ActiveNode collapse(ActiveNetwork& net, const SiblingHypothesis& h, const LineConstants& lc, PartialTopology& out,
                    double epsilon_merge = 1.0);

struct FinalBranch {
    NodeId a = 0;
    NodeId b = 0;
    double length_m = 0.0;
    double residual = std::numeric_limits<double>::infinity();     ///< |meas_a - Y(d, equiv_b)|, S
    double cross_check = std::numeric_limits<double>::infinity();  ///< |meas_b - Y(d, equiv_a)|, S
};

struct InferenceResult {
    Topology topology;
    std::vector<SiblingHypothesis> collapse_log;
    FinalBranch final_branch;
    double tolerance = 0.0;  ///< threshold applied to the final residuals
    bool converged = false;
};

/// Never throws on non-convergence; throws InvalidInput for unusable input.
InferenceResult infer_topology(const AdmittanceSet& a, const std::map<NodeId, Complex>& loads, const CableModel& cable,
                               const InferenceOptions& options = {});

/// Collapse log and final-branch diagnostics as a JSON document.
std::string serialize_diagnostics(const InferenceResult& r);

}  // namespace plctopo
