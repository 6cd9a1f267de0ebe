#pragma once

#include <string>
#include <vector>

#include "plctopo/topology.hpp"

namespace plctopo {

/// An element is one edge of a topology with degree-2 junctions suppressed,
/// named by the sorted modem ids on the side away from the smallest modem.
using Element = std::vector<NodeId>;

struct LengthError {
    Element element;
    double error_m = 0.0;
};

struct ComparisonReport {
    bool exact = false;
    std::size_t elements_total = 0;    ///< elements of the truth
    std::size_t elements_correct = 0;  ///< truth elements present in the inferred tree within length_tol
    double element_recall = 0.0;
    double length_tol = 0.0;
    std::vector<LengthError> length_errors;  ///< for every element present in both trees
};

/// Canonical elements of t with their lengths, ordered by element.
std::vector<std::pair<Element, double>> canonical_elements(const Topology& t);

/// Throws InvalidComparison if the two topologies do not have the same modems.
ComparisonReport compare(const Topology& truth, const Topology& inferred, double length_tol = 1.0);

std::string serialize(const ComparisonReport& r);

}  // namespace plctopo
