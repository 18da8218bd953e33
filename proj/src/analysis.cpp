#include "tpn2f/analysis.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "tpn2f/error.hpp"
#include "tpn2f/linalg.hpp"
#include "tpn2f/random.hpp"

namespace tpn2f {

std::vector<ScoredId> threshold_scores(std::span<const double> scores, double threshold) {
  std::vector<ScoredId> kept;
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (scores[i] >= threshold) kept.push_back({i, scores[i]});
  std::stable_sort(kept.begin(), kept.end(), [](const ScoredId& a, const ScoredId& b) { return a.score > b.score; });
  return kept;
}

std::vector<AssignmentRecord> extract_assignments(const Model& model, const std::vector<std::string>& tokens,
                                                  const Vocabulary& token_vocab, double threshold) {
  if (model.config().variant.encoder != EncoderKind::Tpr) {
    throw StateError("role/filler assignments need the TPR encoder");
  }
  if (tokens.empty()) return {};
  std::vector<std::vector<int>> ids(1);
  for (const auto& t : tokens) ids[0].push_back(token_vocab.id(t));
  const Encoded enc = model.encode(TokenBatch::from_sequences(ids, kTokenPad));
  std::vector<AssignmentRecord> out;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    out.push_back({tokens[t], t, threshold_scores(enc.filler_scores[t].data(), threshold),
                   threshold_scores(enc.role_scores[t].data(), threshold)});
  }
  return out;
}

std::vector<RelationVectorStats> collect_relation_vectors(const Model& model, std::span<const Example> data,
                                                          const Vocabularies& vocab, std::size_t max_len,
                                                          std::size_t batch_size) {
  if (data.empty()) throw InputError("collect_relation_vectors: empty dataset");
  if (model.config().variant.decoder != DecoderKind::Tpr) {
    throw StateError("relation unbinding vectors need the TPR decoder");
  }
  if (batch_size == 0) batch_size = 1;
  const std::size_t d = model.config().dims.rel_dim;
  std::map<int, std::pair<std::vector<double>, std::size_t>> sums;
  for (std::size_t lo = 0; lo < data.size(); lo += batch_size) {
    const std::size_t hi = std::min(data.size(), lo + batch_size);
    std::vector<std::vector<int>> tokens;
    for (std::size_t i = lo; i < hi; ++i) tokens.push_back(data[i].tokens);
    for (const auto& trace : greedy_decode_traced(model, tokens, max_len)) {
      for (std::size_t s = 0; s < trace.program.size(); ++s) {
        auto& [sum, count] = sums[trace.program[s].relation];
        sum.resize(d, 0.0);
        for (std::size_t j = 0; j < d; ++j) sum[j] += trace.relation_vectors[s][j];
        ++count;
      }
    }
  }
  std::vector<RelationVectorStats> out;
  for (auto& [rel, entry] : sums) {
    auto& [sum, count] = entry;
    for (double& x : sum) x /= static_cast<double>(count);
    out.push_back({vocab.relations.symbol(rel), std::move(sum), count});
  }
  return out;
}

PcaResult pca_project(const std::vector<std::vector<double>>& vectors, std::size_t target_dim) {
  if (vectors.size() < 2) throw InputError("pca needs at least two vectors");
  const std::size_t n = vectors.size(), dim = vectors[0].size();
  if (target_dim == 0 || target_dim > dim) {
    throw InputError("pca target dimension " + std::to_string(target_dim) + " outside [1, " + std::to_string(dim) + "]");
  }
  for (const auto& v : vectors)
    if (v.size() != dim) throw InputError("pca input vectors differ in length");

  PcaResult r;
  r.mean.assign(dim, 0.0);
  for (const auto& v : vectors)
    for (std::size_t j = 0; j < dim; ++j) r.mean[j] += v[j];
  for (double& m : r.mean) m /= static_cast<double>(n);

  linalg::Matrix centered(n, dim);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < dim; ++j) centered(i, j) = vectors[i][j] - r.mean[j];
  linalg::Matrix cov = linalg::multiply(centered.transpose(), centered);
  for (double& x : cov.data) x /= static_cast<double>(n - 1);

  const auto eig = linalg::symmetric_eigen(cov);
  r.eigenvalues = eig.values;
  double total = 0.0;
  for (double& v : r.eigenvalues) {
    v = std::max(v, 0.0);  // round-off can leave tiny negatives
    total += v;
  }
  r.projected.assign(n, std::vector<double>(target_dim, 0.0));
  if (!(total > 0.0)) {
    spdlog::warn("pca: all input vectors are identical, projections are zero");
    r.degenerate = true;
    r.explained_ratio.assign(target_dim, 0.0);
    for (std::size_t k = 0; k < target_dim; ++k) {
      std::vector<double> e(dim, 0.0);
      e[k] = 1.0;
      r.components.push_back(std::move(e));
    }
    return r;
  }
  for (std::size_t k = 0; k < target_dim; ++k) {
    std::vector<double> c = eig.vectors.column(k);
    const auto peak = std::max_element(c.begin(), c.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
    if (*peak < 0)
      for (double& x : c) x = -x;
    r.explained_ratio.push_back(r.eigenvalues[k] / total);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < dim; ++j) s += centered(i, j) * c[j];
      r.projected[i][k] = s;
    }
    r.components.push_back(std::move(c));
  }
  return r;
}

std::vector<std::vector<double>> pca_reconstruct(const PcaResult& pca, bool add_mean) {
  const std::size_t dim = pca.mean.size();
  std::vector<std::vector<double>> out;
  for (const auto& p : pca.projected) {
    std::vector<double> x = add_mean ? pca.mean : std::vector<double>(dim, 0.0);
    for (std::size_t k = 0; k < p.size(); ++k)
      for (std::size_t j = 0; j < dim; ++j) x[j] += p[k] * pca.components[k][j];
    out.push_back(std::move(x));
  }
  return out;
}

namespace {

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
  return s;
}

}  // namespace

KMeansResult kmeans(const std::vector<std::vector<double>>& points, std::size_t k, std::uint64_t seed) {
  const std::size_t n = points.size();
  if (k == 0) throw InputError("kmeans: k must be positive");
  if (k > n) throw InputError("kmeans: k = " + std::to_string(k) + " exceeds " + std::to_string(n) + " points");
  const std::size_t dim = points[0].size();
  for (const auto& p : points)
    if (p.size() != dim) throw InputError("kmeans: points differ in dimension");

  Rng rng(seed);
  KMeansResult r;
  // k-means++: first centre uniform, then proportional to squared distance.
  r.centroids.push_back(points[rng.index(n)]);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  while (r.centroids.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(points[i], r.centroids.back()));
      total += nearest[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        if (nearest[i] > 0.0 && target < nearest[i]) {
          pick = i;
          break;
        }
        target -= nearest[i];
      }
    } else {
      pick = rng.index(n);
    }
    r.centroids.push_back(points[pick]);
  }

  r.labels.assign(n, 0);
  for (r.iterations = 1; r.iterations <= 300; ++r.iterations) {
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = squared_distance(points[i], r.centroids[c]);
        if (d < best) {
          best = d;
          r.labels[i] = c;
        }
      }
      inertia += best;
    }
    r.inertia_history.push_back(inertia);
    r.inertia = inertia;

    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[r.labels[i]];
      for (std::size_t j = 0; j < dim; ++j) sums[r.labels[i]][j] += points[i][j];
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // an empty cluster keeps its centre
      for (double& x : sums[c]) x /= static_cast<double>(counts[c]);
      shift = std::max(shift, std::sqrt(squared_distance(sums[c], r.centroids[c])));
      r.centroids[c] = std::move(sums[c]);
    }
    if (shift < 1e-9) break;
  }
  r.iterations = std::min<std::size_t>(r.iterations, 300);
  return r;
}

}  // namespace tpn2f
