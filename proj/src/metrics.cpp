#include "tpn2f/metrics.hpp"

#include <cmath>

#include "tpn2f/error.hpp"
#include "tpn2f/mathqa.hpp"

namespace tpn2f {

const char* to_string(Dialect d) { return d == Dialect::MathQA ? "mathqa" : "algolisp"; }

Dialect dialect_from_string(const std::string& s) {
  if (s == "mathqa") return Dialect::MathQA;
  if (s == "algolisp") return Dialect::AlgoLisp;
  throw ConfigError("unknown dataset dialect '" + s + "' (expected mathqa or algolisp)");
}

nlohmann::json MetricReport::to_json() const {
  auto opt = [](const std::optional<double>& v) -> nlohmann::json {
    if (v) return *v;
    return nullptr;
  };
  return nlohmann::json{{"op_acc", opt(op_acc)}, {"exec_acc", opt(exec_acc)}, {"acc", opt(acc)},
                        {"p50_acc", opt(p50_acc)}, {"m_acc", opt(m_acc)}, {"n", n}};
}

std::size_t nearest_option(double value, std::span<const double> options) {
  if (options.empty()) throw InputError("no options to choose from");
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < options.size(); ++i) {
    if (!std::isfinite(options[i])) continue;
    if (!best || std::abs(options[i] - value) < std::abs(options[*best] - value)) best = i;
  }
  if (!best) throw InputError("no numeric options to choose from");
  return *best;
}

namespace {

bool close(double a, double b) { return std::abs(a - b) <= 1e-6 * std::max({1.0, std::abs(a), std::abs(b)}); }

std::optional<double> try_execute(const Program& program, const std::vector<double>& numbers) {
  try {
    mathqa::ProgramEnv env{numbers, {}};
    return mathqa::execute(program, env);
  } catch (const ExecError&) {
    return std::nullopt;
  }
}

}  // namespace

bool mathqa_execution_correct(const Program& predicted, const GoldRecord& gold) {
  const auto value = try_execute(predicted, gold.numbers);
  if (!value) return false;
  if (!gold.options.empty()) {
    std::optional<std::size_t> target = gold.correct;
    if (!target) {
      const auto gold_value = try_execute(gold.program, gold.numbers);
      if (!gold_value) return false;
      target = nearest_option(*gold_value, gold.options);
    }
    return nearest_option(*value, gold.options) == *target;
  }
  std::optional<double> reference = gold.answer;
  if (!reference) reference = try_execute(gold.program, gold.numbers);
  return reference && close(*value, *reference);
}

std::size_t algolisp_tests_passed(const Program& predicted, const GoldRecord& gold) {
  std::size_t passed = 0;
  for (const auto& test : gold.tests) {
    try {
      if (algolisp::values_equal(algolisp::execute(predicted, test.inputs), test.expected)) ++passed;
    } catch (const ExecError&) {
    }
  }
  return passed;
}

MetricReport evaluate_metrics(Dialect dialect, std::span<const Program> predictions,
                              std::span<const GoldRecord> golds) {
  if (predictions.size() != golds.size()) {
    throw InputError("evaluate_metrics: " + std::to_string(predictions.size()) + " predictions for " +
                     std::to_string(golds.size()) + " gold records");
  }
  MetricReport report;
  report.n = golds.size();
  if (golds.empty()) return report;
  const double n = static_cast<double>(golds.size());
  std::size_t exact = 0, executed = 0, all_pass = 0, half_pass = 0;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    if (predictions[i] == golds[i].program) ++exact;
    if (dialect == Dialect::MathQA) {
      if (mathqa_execution_correct(predictions[i], golds[i])) ++executed;
    } else {
      const std::size_t total = golds[i].tests.size();
      const std::size_t passed = algolisp_tests_passed(predictions[i], golds[i]);
      if (total > 0 && passed == total) ++all_pass;
      if (total > 0 && 2 * passed >= total) ++half_pass;
    }
  }
  report.op_acc = exact / n;
  if (dialect == Dialect::MathQA) {
    report.exec_acc = executed / n;
  } else {
    report.m_acc = exact / n;
    report.acc = all_pass / n;
    report.p50_acc = half_pass / n;
  }
  return report;
}

}  // namespace tpn2f
