#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tpn2f/model.hpp"
#include "tpn2f/training.hpp"
#include "tpn2f/vocab.hpp"

namespace tpn2f {

inline constexpr double kAssignmentThreshold = 0.1;

struct ScoredId {
  std::size_t id = 0;
  double score = 0.0;

  bool operator==(const ScoredId&) const = default;
};

/// Entries with score >= threshold, highest score first (ties by id).
std::vector<ScoredId> threshold_scores(std::span<const double> scores, double threshold = kAssignmentThreshold);

struct AssignmentRecord {
  std::string token;
  std::size_t position = 0;
  std::vector<ScoredId> fillers;
  std::vector<ScoredId> roles;
};

/// Runs the TPR encoder on one token sequence and keeps the filler and role
/// selections at or above the threshold. Throws StateError for an LSTM encoder.
std::vector<AssignmentRecord> extract_assignments(const Model& model, const std::vector<std::string>& tokens,
                                                  const Vocabulary& token_vocab,
                                                  double threshold = kAssignmentThreshold);

struct RelationVectorStats {
  std::string relation;
  std::vector<double> mean;  // average r'_rel over steps that emitted `relation`
  std::size_t count = 0;
};

/// Greedy-decodes every example and averages the unbinding relation vector
/// per emitted relation, in relation-vocabulary order. Relations never
/// emitted are absent. Throws InputError on an empty dataset and StateError
/// for an LSTM decoder.
std::vector<RelationVectorStats> collect_relation_vectors(const Model& model, std::span<const Example> data,
                                                          const Vocabularies& vocab, std::size_t max_len,
                                                          std::size_t batch_size = 64);

struct PcaResult {
  std::vector<double> mean;
  std::vector<std::vector<double>> components;  // unit vectors, descending eigenvalue
  std::vector<double> eigenvalues;              // all of them, descending
  std::vector<double> explained_ratio;          // for the kept components
  std::vector<std::vector<double>> projected;
  bool degenerate = false;
};

/// Mean-centred projection onto the top principal components of the sample
/// covariance. Component signs are fixed so the largest-magnitude entry is
/// positive. Identical inputs give zero projections and a logged warning.
PcaResult pca_project(const std::vector<std::vector<double>>& vectors, std::size_t target_dim);

/// Maps projections back to the input space (centred unless add_mean).
std::vector<std::vector<double>> pca_reconstruct(const PcaResult& pca, bool add_mean = false);

struct KMeansResult {
  std::vector<std::size_t> labels;
  std::vector<std::vector<double>> centroids;
  double inertia = 0.0;
  std::vector<double> inertia_history;  // after each assignment step
  std::size_t iterations = 0;
};

/// k-means++ seeding, then Lloyd iterations until every centroid moves less
/// than 1e-9 or 300 iterations pass. Throws InputError when k is 0 or exceeds
/// the number of points.
KMeansResult kmeans(const std::vector<std::vector<double>>& points, std::size_t k, std::uint64_t seed);

}  // namespace tpn2f
