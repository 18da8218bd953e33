#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "tpn2f/analysis.hpp"

namespace tpn2f {

struct ClusterRow {
  std::string relation;
  double x = 0.0;
  double y = 0.0;
  std::size_t cluster = 0;
};

/// Averaged relation vectors -> 2-D PCA -> k-means. k is clipped to the
/// number of relations; fewer than two relations yield zero coordinates in
/// cluster 0.
std::vector<ClusterRow> cluster_relations(const std::vector<RelationVectorStats>& stats, std::size_t k,
                                          std::uint64_t seed);

/// Writes assignments.csv, clusters.csv, scatter.svg, roles.svg and
/// report.json into out_dir. Output depends only on the arguments.
void emit_report(const std::vector<AssignmentRecord>& assignments, const std::vector<ClusterRow>& clusters,
                 const nlohmann::json& meta, const std::filesystem::path& out_dir);

}  // namespace tpn2f
