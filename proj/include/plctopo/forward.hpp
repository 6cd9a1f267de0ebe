#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "plctopo/tline.hpp"
#include "plctopo/topology.hpp"

namespace plctopo {

/// Single-frequency measurements taken by the modems of one network.
///
/// `entries[i]` is the network admittance modem i sees at its terminals while
/// transmitting, with its own load excluded and every other modem's load
/// attached. `transfers[{i, k}]` is the voltage ratio V_k / V_i observed by
/// modem k while modem i transmits (the channel transfer function at this
/// frequency).
struct AdmittanceSet {
    double frequency_hz = 0.0;
    std::map<NodeId, Complex> entries;
    std::map<std::pair<NodeId, NodeId>, Complex> transfers;
    bool noisy = false;
    std::optional<double> anr_db;

    bool operator==(const AdmittanceSet&) const = default;
};

struct NoiseModel {
    double anr_db = 0.0;  ///< +inf means noiseless
    std::uint64_t seed = 0;
};

/// Admittance seen by `modem` looking into the network, by recursive tree
/// reduction rooted at that modem. Throws InvalidNode if `modem` is not a leaf modem.
Complex node_admittance(const Topology& t, const CableModel& cable, double frequency_hz, NodeId modem);

/// V_k / V_source for every modem k != source while `source` transmits.
std::map<NodeId, Complex> transfer_ratios(const Topology& t, const CableModel& cable, double frequency_hz,
                                          NodeId source);

/// node_admittance and transfer_ratios for every modem.
AdmittanceSet all_admittances(const Topology& t, const CableModel& cable, double frequency_hz);

/// Adds circularly-symmetric complex Gaussian noise with variance
/// |Y|^2 * 10^(-anr_db/10) to every entry and transfer, independently.
/// Draws are consumed in key order, so a fixed seed gives the same
/// normalised noise at every ANR.
AdmittanceSet apply_noise(const AdmittanceSet& a, const NoiseModel& nm);

std::string serialize(const AdmittanceSet& a);
AdmittanceSet deserialize_admittance_set(std::string_view text);

/// Loads from a document with a top-level "loads" array (a topology file or a
/// loads-only file).
std::map<NodeId, Complex> deserialize_loads(std::string_view text);

}  // namespace plctopo
