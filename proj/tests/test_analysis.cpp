#include <gtest/gtest.h>
#include <unistd.h>

#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <set>

#include "synthetic.hpp"
#include "tpn2f/analysis.hpp"
#include "tpn2f/error.hpp"
#include "tpn2f/report.hpp"

using namespace tpn2f;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

std::vector<std::vector<double>> blobs(Rng& rng, std::size_t per_blob, double offset = 0.0) {
  std::vector<std::vector<double>> pts;
  for (double centre : {0.0, 100.0}) {
    for (std::size_t i = 0; i < per_blob; ++i) {
      const double angle = rng.uniform(0, 6.283185307179586), radius = rng.uniform(0, 1);
      pts.push_back({centre + offset + radius * std::cos(angle), centre + offset + radius * std::sin(angle)});
    }
  }
  return pts;
}

struct Fixture {
  std::vector<Sample> samples = testing_data::micro_dataset(12);
  Vocabularies vocab = build_vocabularies(samples);
  std::vector<Example> examples = make_examples(samples, vocab, 2);
  ModelConfig config() const {
    ModelConfig c;
    c.dims = testing_data::micro_dims();
    c.vocab = {vocab.tokens.size(), vocab.relations.size(), vocab.arguments.size()};
    return c;
  }
};

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() / ("tpn2f_report_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::filesystem::path dir_;
};

}  // namespace

TEST(Threshold, CraftedScores) {
  const std::vector<double> s{0.05, 0.70, 0.25};
  EXPECT_EQ(threshold_scores(s), (std::vector<ScoredId>{{1, 0.70}, {2, 0.25}}));
  const std::vector<double> uniform(150, 1.0 / 150);
  EXPECT_TRUE(threshold_scores(uniform).empty());
  const std::vector<double> edge{0.1, std::nextafter(0.1, 0.0), 0.3, 0.3};
  EXPECT_EQ(threshold_scores(edge), (std::vector<ScoredId>{{2, 0.3}, {3, 0.3}, {0, 0.1}}));
}

TEST(Threshold, KeepsExactlyEntriesAtOrAboveThreshold) {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const auto scores = rng.uniform_vector(1 + rng.index(40), 0.0, 0.3);
    const auto kept = threshold_scores(scores);
    std::set<std::size_t> expect, got;
    for (std::size_t i = 0; i < scores.size(); ++i)
      if (scores[i] >= 0.1) expect.insert(i);
    for (std::size_t i = 0; i < kept.size(); ++i) {
      got.insert(kept[i].id);
      EXPECT_EQ(kept[i].score, scores[kept[i].id]);
      if (i > 0) EXPECT_GE(kept[i - 1].score, kept[i].score);
    }
    EXPECT_EQ(got, expect);
  }
}

TEST(Assignments, FromEncoderScores) {
  Fixture f;
  Rng rng(2);
  Model model(f.config(), rng);
  const auto records = extract_assignments(model, f.samples[0].tokens, f.vocab.tokens);
  ASSERT_EQ(records.size(), f.samples[0].tokens.size());
  for (std::size_t t = 0; t < records.size(); ++t) {
    EXPECT_EQ(records[t].position, t);
    EXPECT_EQ(records[t].token, f.samples[0].tokens[t]);
    for (const auto& r : records[t].roles) EXPECT_GE(r.score, 0.1);
    for (const auto& x : records[t].fillers) EXPECT_GE(x.score, 0.1);
  }
  // Low threshold keeps everything, which sums to one.
  const auto all = extract_assignments(model, f.samples[0].tokens, f.vocab.tokens, 0.0);
  double total = 0;
  for (const auto& r : all[0].roles) total += r.score;
  EXPECT_NEAR(total, 1.0, 1e-12);

  ModelConfig lstm = f.config();
  lstm.variant.encoder = EncoderKind::Lstm;
  Model other(lstm, rng);
  EXPECT_THROW(extract_assignments(other, f.samples[0].tokens, f.vocab.tokens), StateError);
}

TEST(RelationVectors, AveragesPerEmittedRelation) {
  Fixture f;
  Rng rng(3);
  Model model(f.config(), rng);
  const auto stats = collect_relation_vectors(model, f.examples, f.vocab, 5, 4);
  std::vector<std::vector<int>> tokens;
  for (const auto& e : f.examples) tokens.push_back(e.tokens);
  const auto traces = greedy_decode_traced(model, tokens, 5);
  std::size_t emitted = 0, counted = 0;
  for (const auto& t : traces) emitted += t.program.size();
  for (const auto& s : stats) {
    counted += s.count;
    ASSERT_GE(s.count, 1u);
    EXPECT_EQ(s.mean.size(), 8u);
    const int rel = f.vocab.relations.id(s.relation);
    std::vector<double> sum(8, 0.0);
    std::size_t n = 0;
    for (const auto& t : traces)
      for (std::size_t k = 0; k < t.program.size(); ++k)
        if (t.program[k].relation == rel) {
          ++n;
          for (std::size_t j = 0; j < 8; ++j) sum[j] += t.relation_vectors[k][j];
        }
    EXPECT_EQ(n, s.count);
    for (std::size_t j = 0; j < 8; ++j) EXPECT_NEAR(s.mean[j], sum[j] / double(n), 1e-12);
  }
  EXPECT_EQ(counted, emitted);
  EXPECT_THROW(collect_relation_vectors(model, std::span<const Example>{}, f.vocab, 5), InputError);
}

TEST(Pca, TwoDimensionalRotation) {
  Rng rng(4);
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < 30; ++i) pts.push_back({rng.uniform(-3, 3), rng.uniform(-1, 1)});
  const auto r = pca_project(pts, 2);
  EXPECT_NEAR(r.explained_ratio[0] + r.explained_ratio[1], 1.0, 1e-12);
  EXPECT_GE(r.explained_ratio[0], r.explained_ratio[1]);
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = 0; j < pts.size(); ++j) {
      const double a = std::hypot(pts[i][0] - pts[j][0], pts[i][1] - pts[j][1]);
      const double b = std::hypot(r.projected[i][0] - r.projected[j][0], r.projected[i][1] - r.projected[j][1]);
      ASSERT_NEAR(a, b, 1e-10);
    }
}

TEST(Pca, CollinearPointsHaveOneComponent) {
  std::vector<std::vector<double>> pts;
  for (double t : {-2.0, -0.5, 0.25, 1.0, 3.0}) pts.push_back({1 + 2 * t, -1 + 0.5 * t, 3 - t});
  const auto r = pca_project(pts, 2);
  EXPECT_NEAR(r.explained_ratio[0], 1.0, 1e-10);
  EXPECT_LT(r.explained_ratio[1], 1e-10);
}

TEST(Pca, ReconstructionAndEigenOracle) {
  Rng rng(5);
  const std::size_t n = 25, d = 6;
  std::vector<std::vector<double>> pts;
  Eigen::MatrixXd x(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    pts.push_back(rng.uniform_vector(d, -1, 1));
    for (std::size_t j = 0; j < d; ++j) x(i, j) = pts[i][j] * double(j + 1);
    for (std::size_t j = 0; j < d; ++j) pts[i][j] = x(i, j);
  }
  const auto r = pca_project(pts, d);
  const auto back = pca_reconstruct(r, true);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) ASSERT_NEAR(back[i][j], pts[i][j], 1e-10);

  const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd cov = centered.transpose() * centered / double(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  for (std::size_t k = 0; k < d; ++k) EXPECT_NEAR(r.eigenvalues[k], solver.eigenvalues()[d - 1 - k], 1e-10);
}

TEST(Pca, DegenerateAndErrors) {
  const std::vector<std::vector<double>> same(4, {1.0, 2.0, 3.0});
  const auto r = pca_project(same, 2);
  EXPECT_TRUE(r.degenerate);
  for (const auto& p : r.projected) EXPECT_EQ(p, (std::vector<double>{0.0, 0.0}));
  EXPECT_THROW(pca_project({{1.0, 2.0}}, 1), InputError);
  EXPECT_THROW(pca_project(same, 4), InputError);
  EXPECT_THROW(pca_project({{1.0, 2.0}, {1.0}}, 1), InputError);
}

TEST(KMeans, SingleClusterIsMean) {
  Rng rng(6);
  std::vector<std::vector<double>> pts;
  std::vector<double> mean(3, 0.0);
  for (int i = 0; i < 20; ++i) {
    pts.push_back(rng.uniform_vector(3, -5, 5));
    for (int j = 0; j < 3; ++j) mean[j] += pts.back()[j] / 20;
  }
  const auto r = kmeans(pts, 1, 1);
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(r.centroids[0][j], mean[j], 1e-12);
}

TEST(KMeans, SeparatedBlobsAndInertia) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const auto pts = blobs(rng, 25);
    const auto r = kmeans(pts, 2, seed);
    for (std::size_t i = 0; i < 25; ++i) {
      EXPECT_EQ(r.labels[i], r.labels[0]);
      EXPECT_EQ(r.labels[25 + i], r.labels[25]);
    }
    EXPECT_NE(r.labels[0], r.labels[25]);
    for (std::size_t i = 1; i < r.inertia_history.size(); ++i) EXPECT_LE(r.inertia_history[i], r.inertia_history[i - 1]);
  }
  Rng rng(1);
  const auto pts = blobs(rng, 30);
  for (std::size_t k = 2; k <= 6; ++k) {
    const auto r = kmeans(pts, k, 42);
    for (std::size_t i = 1; i < r.inertia_history.size(); ++i) EXPECT_LE(r.inertia_history[i], r.inertia_history[i - 1]);
    EXPECT_EQ(kmeans(pts, k, 42).labels, r.labels);
  }
}

TEST(KMeans, TranslationInvariantUpToRelabeling) {
  Rng a(7), b(7);
  const auto pts = blobs(a, 20);
  const auto moved = blobs(b, 20, 37.5);
  Rng extra(8);
  std::vector<std::vector<double>> p = pts, q = moved;
  for (int i = 0; i < 10; ++i) {  // a third, diffuse group
    const double x = extra.uniform(40, 60), y = extra.uniform(40, 60);
    p.push_back({x, y});
    q.push_back({x + 37.5, y + 37.5});
  }
  const auto r1 = kmeans(p, 3, 5), r2 = kmeans(q, 3, 5);
  std::map<std::size_t, std::size_t> mapping;
  for (std::size_t i = 0; i < p.size(); ++i) {
    auto [it, inserted] = mapping.emplace(r1.labels[i], r2.labels[i]);
    EXPECT_EQ(it->second, r2.labels[i]);
  }
  EXPECT_THROW(kmeans(p, p.size() + 1, 1), InputError);
  EXPECT_THROW(kmeans(p, 0, 1), InputError);
}

TEST_F(TempDir, EmptyReportHasHeadersOnly) {
  emit_report({}, {}, nlohmann::json::object(), dir_);
  EXPECT_EQ(slurp(dir_ / "assignments.csv"), "token,position,role,filler,score\n");
  EXPECT_EQ(slurp(dir_ / "clusters.csv"), "relation,x,y,cluster\n");
  const std::string svg = slurp(dir_ / "scatter.svg");
  EXPECT_EQ(svg.rfind("<?xml", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_EQ(svg.find("<circle"), std::string::npos);
}

TEST_F(TempDir, ReportRowsAndByteStability) {
  Fixture f;
  Rng rng(9);
  Model model(f.config(), rng);
  const auto records = extract_assignments(model, f.samples[1].tokens, f.vocab.tokens);
  std::vector<RelationVectorStats> stats;
  for (const char* rel : {"add", "divide", "multiply", "sqrt", "a,\"quoted\""}) {
    stats.push_back({rel, rng.uniform_vector(8, -1, 1), 1});
  }
  const auto rows = cluster_relations(stats, 3, 11);
  ASSERT_EQ(rows.size(), 5u);
  const nlohmann::json meta{{"seed", 11}, {"k", 3}};
  emit_report(records, rows, meta, dir_ / "a");
  emit_report(records, cluster_relations(stats, 3, 11), meta, dir_ / "b");
  for (const char* file : {"assignments.csv", "clusters.csv", "scatter.svg", "roles.svg", "report.json"}) {
    EXPECT_EQ(slurp(dir_ / "a" / file), slurp(dir_ / "b" / file)) << file;
  }
  const std::string clusters = slurp(dir_ / "a" / "clusters.csv");
  EXPECT_EQ(line_count(clusters), 6u);
  EXPECT_NE(clusters.find("\"a,\"\"quoted\"\"\""), std::string::npos);
  std::size_t kept = 0;
  for (const auto& r : records) kept += r.roles.size() + r.fillers.size();
  EXPECT_EQ(line_count(slurp(dir_ / "a" / "assignments.csv")), kept + 1);
  EXPECT_EQ(cluster_relations({stats[0]}, 3, 1).size(), 1u);
}
