#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tpn2f/algolisp.hpp"
#include "tpn2f/tuple.hpp"

namespace tpn2f {

enum class Dialect { MathQA, AlgoLisp };

const char* to_string(Dialect d);
Dialect dialect_from_string(const std::string& s);

struct IoTest {
  algolisp::Bindings inputs;
  algolisp::Value expected;
};

/// Everything needed to score one prediction against its gold program.
struct GoldRecord {
  Program program;
  std::vector<double> numbers;           // MathQA
  std::vector<double> options;           // MathQA multiple choice
  std::optional<std::size_t> correct;    // index into options
  std::optional<double> answer;          // MathQA answer when no options
  std::vector<IoTest> tests;             // AlgoLisp
};

/// Metrics that do not apply to the dialect stay empty (null in JSON).
struct MetricReport {
  std::size_t n = 0;
  std::optional<double> op_acc;
  std::optional<double> exec_acc;
  std::optional<double> acc;
  std::optional<double> p50_acc;
  std::optional<double> m_acc;

  nlohmann::json to_json() const;
};

/// Index of the option nearest to `value` (first one on ties).
std::size_t nearest_option(double value, std::span<const double> options);

/// MathQA execution check: the predicted program's value selects the gold
/// option (nearest-option rule) or matches the gold answer within 1e-6
/// relative. Execution errors count as wrong.
bool mathqa_execution_correct(const Program& predicted, const GoldRecord& gold);

/// Number of I/O tests the program passes; execution errors fail the test.
std::size_t algolisp_tests_passed(const Program& predicted, const GoldRecord& gold);

MetricReport evaluate_metrics(Dialect dialect, std::span<const Program> predictions,
                              std::span<const GoldRecord> golds);

}  // namespace tpn2f
