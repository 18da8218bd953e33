#include "tpn2f/training.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

#include "tpn2f/dataset.hpp"
#include "tpn2f/error.hpp"
#include "tpn2f/ops.hpp"

namespace tpn2f {

namespace {

std::size_t row_argmax(const Tensor& logits, std::size_t row) {
  const std::size_t n = logits.dim(1);
  const auto d = logits.data().subspan(row * n, n);
  return static_cast<std::size_t>(std::max_element(d.begin(), d.end()) - d.begin());
}

}  // namespace

TupleIds go_tuple(std::size_t positions) { return {kRelationGo, std::vector<int>(positions, kArgumentPad)}; }
TupleIds eos_tuple(std::size_t positions) { return {kRelationEos, std::vector<int>(positions, kArgumentPad)}; }

Example make_example(const Sample& sample, const Vocabularies& vocab, std::size_t positions) {
  if (sample.tokens.empty()) throw InputError("sample '" + sample.id + "' has no tokens");
  Example ex;
  for (const auto& t : sample.tokens) ex.tokens.push_back(vocab.tokens.id(t));
  for (const auto& tuple : sample.program) {
    if (tuple.args.size() != positions) {
      throw InputError("sample '" + sample.id + "': tuple " + tuple.str() + " does not have " +
                       std::to_string(positions) + " arguments (run prepare first)");
    }
    TupleIds ids{vocab.relations.id(tuple.relation), {}};
    for (const auto& a : tuple.args) ids.args.push_back(vocab.arguments.id(a));
    ex.program.push_back(std::move(ids));
  }
  return ex;
}

std::vector<Example> make_examples(std::span<const Sample> samples, const Vocabularies& vocab,
                                   std::size_t positions) {
  std::vector<Example> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(make_example(s, vocab, positions));
  return out;
}

Program program_from_ids(std::span<const TupleIds> program, const Vocabularies& vocab) {
  Program out;
  for (const auto& t : program) {
    RelationalTuple tuple{vocab.relations.symbol(t.relation), {}};
    for (int a : t.args) tuple.args.push_back(vocab.arguments.symbol(a));
    out.push_back(std::move(tuple));
  }
  return out;
}

Tensor sequence_loss(std::span<const StepOutput> steps, std::span<const TupleIds> gold) {
  if (steps.size() != gold.size()) {
    throw InputError("sequence_loss: " + std::to_string(steps.size()) + " steps for " +
                     std::to_string(gold.size()) + " gold tuples");
  }
  if (steps.empty()) return Tensor::scalar(0.0);
  const std::vector<double> one{1.0};
  std::vector<Tensor> terms;
  for (std::size_t t = 0; t < steps.size(); ++t) {
    const auto& s = steps[t];
    if (s.arg_logits.size() != gold[t].args.size()) {
      throw InputError("sequence_loss: step " + std::to_string(t) + " has " + std::to_string(s.arg_logits.size()) +
                       " argument heads for " + std::to_string(gold[t].args.size()) + " arguments");
    }
    const std::vector<int> rel{gold[t].relation};
    terms.push_back(cross_entropy_rows(s.relation_logits, rel, one));
    for (std::size_t i = 0; i < s.arg_logits.size(); ++i) {
      const std::vector<int> arg{gold[t].args[i]};
      terms.push_back(cross_entropy_rows(s.arg_logits[i], arg, one));
    }
  }
  return add_n(terms);
}

BatchResult teacher_forced_batch(const Model& model, std::span<const Example> batch) {
  if (batch.empty()) throw InputError("teacher_forced_batch: empty batch");
  const std::size_t B = batch.size();
  const std::size_t k = model.config().dims.positions;
  std::vector<std::vector<int>> tokens;
  std::size_t longest = 0;
  for (const auto& ex : batch) {
    tokens.push_back(ex.tokens);
    longest = std::max(longest, ex.program.size());
  }
  const std::size_t T = longest + 1;  // trailing EOS

  const TokenBatch tb = TokenBatch::from_sequences(tokens, kTokenPad);
  const Encoded enc = model.encode(tb);
  DecoderState state = model.initial_state(enc);
  const Tensor context = model.project_context(enc);

  BatchResult result;
  result.exact.assign(B, true);
  std::vector<Tensor> terms;
  const TupleIds go = go_tuple(k), eos = eos_tuple(k);
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<TupleIds> inputs(B);
    std::vector<int> rel_targets(B);
    std::vector<std::vector<int>> arg_targets(k, std::vector<int>(B));
    std::vector<double> weights(B);
    for (std::size_t b = 0; b < B; ++b) {
      const auto& prog = batch[b].program;
      inputs[b] = t == 0 ? go : (t - 1 < prog.size() ? prog[t - 1] : eos);
      const TupleIds& target = t < prog.size() ? prog[t] : eos;
      rel_targets[b] = target.relation;
      for (std::size_t i = 0; i < k; ++i) arg_targets[i][b] = target.args[i];
      weights[b] = t <= prog.size() ? 1.0 / static_cast<double>(B) : 0.0;
    }
    StepOutput out = model.decode_step(inputs, state, context, enc.mask);
    terms.push_back(cross_entropy_rows(out.relation_logits, rel_targets, weights));
    for (std::size_t i = 0; i < k; ++i) terms.push_back(cross_entropy_rows(out.arg_logits[i], arg_targets[i], weights));

    for (std::size_t b = 0; b < B; ++b) {
      if (weights[b] == 0.0 || !result.exact[b]) continue;
      bool ok = static_cast<int>(row_argmax(out.relation_logits, b)) == rel_targets[b];
      // Arguments of the EOS step are never emitted, so they do not count.
      if (ok && rel_targets[b] != kRelationEos) {
        for (std::size_t i = 0; i < k && ok; ++i) ok = static_cast<int>(row_argmax(out.arg_logits[i], b)) == arg_targets[i][b];
      }
      result.exact[b] = ok;
    }
    state = out.state;
    result.steps.push_back(std::move(out));
  }
  result.loss = add_n(terms);
  return result;
}

std::vector<DecodeTrace> greedy_decode_traced(const Model& model, std::span<const std::vector<int>> tokens,
                                              std::size_t max_len) {
  if (max_len == 0) throw InputError("greedy_decode: max_len must be at least 1");
  const std::size_t B = tokens.size();
  std::vector<DecodeTrace> traces(B);
  if (B == 0) return traces;
  const std::size_t k = model.config().dims.positions;

  const TokenBatch tb = TokenBatch::from_sequences(tokens, kTokenPad);
  const Encoded enc = model.encode(tb);
  DecoderState state = model.initial_state(enc);
  const Tensor context = model.project_context(enc);

  std::vector<TupleIds> previous(B, go_tuple(k));
  std::vector<bool> done(B, false);
  std::size_t remaining = B;
  for (std::size_t t = 0; t < max_len && remaining > 0; ++t) {
    StepOutput out = model.decode_step(previous, state, context, enc.mask);
    for (std::size_t b = 0; b < B; ++b) {
      TupleIds predicted{static_cast<int>(row_argmax(out.relation_logits, b)), std::vector<int>(k)};
      for (std::size_t i = 0; i < k; ++i) predicted.args[i] = static_cast<int>(row_argmax(out.arg_logits[i], b));
      if (!done[b]) {
        if (predicted.relation == kRelationEos) {
          done[b] = true;
          --remaining;
        } else {
          traces[b].program.push_back(predicted);
          if (out.relation_vector.defined()) {
            const std::size_t d = out.relation_vector.dim(1);
            const auto row = out.relation_vector.data().subspan(b * d, d);
            traces[b].relation_vectors.emplace_back(row.begin(), row.end());
          }
        }
      }
      previous[b] = std::move(predicted);
    }
    state = out.state;
  }
  return traces;
}

std::vector<std::vector<TupleIds>> greedy_decode(const Model& model, std::span<const std::vector<int>> tokens,
                                                 std::size_t max_len) {
  std::vector<std::vector<TupleIds>> out;
  for (auto& trace : greedy_decode_traced(model, tokens, max_len)) out.push_back(std::move(trace.program));
  return out;
}

nlohmann::json EpochStats::to_json() const {
  return {{"epoch", epoch}, {"mean_loss", mean_loss}, {"op_acc", op_acc}, {"wallclock", seconds}};
}

void check_vocabulary(const Model& model, std::span<const Example> data) {
  const VocabSizes& v = model.config().vocab;
  const std::size_t k = model.config().dims.positions;
  auto in_range = [](int id, std::size_t n) { return id >= 0 && static_cast<std::size_t>(id) < n; };
  for (std::size_t s = 0; s < data.size(); ++s) {
    for (int t : data[s].tokens) {
      if (!in_range(t, v.tokens)) throw VocabError("example " + std::to_string(s) + ": token id outside the model vocabulary");
    }
    for (const auto& tuple : data[s].program) {
      if (!in_range(tuple.relation, v.relations)) {
        throw VocabError("example " + std::to_string(s) + ": relation id outside the model vocabulary");
      }
      if (tuple.args.size() != k) {
        throw VocabError("example " + std::to_string(s) + ": tuple arity does not match the model");
      }
      for (int a : tuple.args) {
        if (!in_range(a, v.arguments)) {
          throw VocabError("example " + std::to_string(s) + ": argument id outside the model vocabulary");
        }
      }
    }
  }
}

Trainer::Trainer(Model& model, TrainConfig config)
    : model_(model), config_(std::move(config)), rng_(config_.seed) {
  if (config_.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!config_.teacher_forcing) throw ConfigError("training always uses teacher forcing");
  const auto params = model_.parameter_tensors();
  adam_ = AdamState::for_params(params, config_.learning_rate);
  adam_.grad_clip = config_.grad_clip;
}

EpochStats Trainer::train_epoch(std::span<const Example> data) {
  if (data.empty()) throw InputError("train_epoch: empty dataset");
  check_vocabulary(model_, data);
  const auto start = std::chrono::steady_clock::now();

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (config_.shuffle) rng_.shuffle(order);

  auto params = model_.parameter_tensors();
  double loss_sum = 0.0;
  std::size_t exact = 0;
  std::vector<Example> batch;
  for (std::size_t lo = 0; lo < order.size(); lo += config_.batch_size) {
    const std::size_t hi = std::min(order.size(), lo + config_.batch_size);
    batch.clear();
    for (std::size_t i = lo; i < hi; ++i) batch.push_back(data[order[i]]);
    GradientTape tape;
    BatchResult r = teacher_forced_batch(model_, batch);
    loss_sum += r.loss.item() * static_cast<double>(batch.size());
    exact += static_cast<std::size_t>(std::count(r.exact.begin(), r.exact.end(), true));
    backward(r.loss);
    adam_step(params, adam_);
  }

  ++epoch_;
  EpochStats stats;
  stats.epoch = epoch_;
  stats.mean_loss = loss_sum / static_cast<double>(data.size());
  stats.op_acc = static_cast<double>(exact) / static_cast<double>(data.size());
  stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return stats;
}

}  // namespace tpn2f
