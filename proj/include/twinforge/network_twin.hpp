#pragma once

// Stock twin models and the twin graph mirroring a simulated network.

#include "twinforge/net_sim.hpp"
#include "twinforge/twin_graph.hpp"

namespace twinforge {

/// sensor (with a battery component), battery, gateway and waste_bin models.
ModelRegistry standard_models();

/// Sensors, gateways and their connected_to edges. When metrics are given the
/// gateway twins carry the network-wide KPI readings.
TwinGraph build_network_graph(const SimConfig& config, const ModelRegistry& registry, Timestamp timestamp,
                              const SimMetrics* metrics = nullptr);

/// KPI scores read back from gateway twins; nullopt when none carry readings.
std::optional<KpiVector> kpis_from_graph(const TwinGraph& graph, double l_max = 9.0);

}  // namespace twinforge
