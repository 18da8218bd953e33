#include "tpn2f/model.hpp"

#include <algorithm>
#include <cmath>

#include "tpn2f/error.hpp"
#include "tpn2f/ops.hpp"

namespace tpn2f {

const char* to_string(EncoderKind kind) { return kind == EncoderKind::Tpr ? "tpr" : "lstm"; }
const char* to_string(DecoderKind kind) { return kind == DecoderKind::Tpr ? "tpr" : "lstm"; }
const char* to_string(Pooling pooling) {
  return pooling == Pooling::SumTprs ? "sum_tprs" : "last_state";
}

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(dims.n_fillers, "n_F");
  positive(dims.n_roles, "n_R");
  positive(dims.filler_dim, "d_F");
  positive(dims.role_dim, "d_R");
  positive(dims.rel_dim, "d_Rel");
  positive(dims.arg_dim, "d_Arg");
  positive(dims.pos_dim, "d_Pos");
  positive(dims.embed_dim, "embed_dim");
  positive(dims.lstm_hidden, "lstm_hidden");
  positive(variant.reasoning_layers, "reasoning_layers");
  positive(vocab.tokens, "token vocabulary size");
  positive(vocab.relations, "relation vocabulary size");
  positive(vocab.arguments, "argument vocabulary size");
  if (dims.positions < 1 || dims.positions > 3) throw ConfigError("positions must be 1, 2 or 3");
  if (variant.decoder == DecoderKind::Tpr && dims.positions > dims.pos_dim) {
    throw ConfigError("positions (" + std::to_string(dims.positions) + ") exceed d_Pos (" +
                      std::to_string(dims.pos_dim) + ")");
  }
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
}

TokenBatch TokenBatch::from_sequences(std::span<const std::vector<int>> sequences, int pad_id) {
  if (sequences.empty()) throw InputError("empty batch");
  TokenBatch out;
  out.batch = sequences.size();
  for (const auto& s : sequences) {
    if (s.empty()) throw InputError("empty token sequence");
    out.length = std::max(out.length, s.size());
    out.lengths.push_back(s.size());
  }
  out.ids.assign(out.batch * out.length, pad_id);
  for (std::size_t b = 0; b < out.batch; ++b)
    std::copy(sequences[b].begin(), sequences[b].end(), out.ids.begin() + b * out.length);
  return out;
}

std::vector<std::uint8_t> TokenBatch::mask() const {
  std::vector<std::uint8_t> m(batch * length, 0);
  for (std::size_t b = 0; b < batch; ++b)
    std::fill_n(m.begin() + b * length, lengths[b], std::uint8_t{1});
  return m;
}

namespace {

std::string position_name(std::size_t i) { return "unbinding.position" + std::to_string(i); }
std::string argument_head(std::size_t i) { return "classifier.argument" + std::to_string(i); }

}  // namespace

Model::Model(ModelConfig config, Rng& rng) : config_(std::move(config)) {
  config_.validate();
  const ModelDims& d = config_.dims;
  const std::size_t enc = encoder_dim(), dec = decoder_dim();

  add_parameter("embedding.words", {config_.vocab.tokens, d.embed_dim});
  if (config_.variant.encoder == EncoderKind::Tpr) {
    const std::size_t dt = d.tpr_dim();
    for (const char* side : {"filler", "role"}) {
      const std::string p = std::string("encoder.") + side + "_lstm";
      add_parameter(p + ".input", {4 * dt, d.embed_dim});
      add_parameter(p + ".recurrent", {4 * dt, dt});
      add_parameter(p + ".bias", {4 * dt});
    }
    add_parameter("encoder.filler_attention", {d.n_fillers, dt});
    add_parameter("encoder.role_attention", {d.n_roles, dt});
    add_parameter("encoder.fillers", {d.filler_dim, d.n_fillers});
    add_parameter("encoder.roles", {d.role_dim, d.n_roles});
  } else {
    add_parameter("encoder.lstm.input", {4 * enc, d.embed_dim});
    add_parameter("encoder.lstm.recurrent", {4 * enc, enc});
    add_parameter("encoder.lstm.bias", {4 * enc});
  }

  for (std::size_t i = 0; i < config_.variant.reasoning_layers; ++i) {
    const std::string p = "reasoning." + std::to_string(i);
    add_parameter(p + ".weight", {dec, i == 0 ? enc : dec});
    add_parameter(p + ".bias", {dec});
  }

  add_parameter("decoder.relation_embedding", {config_.vocab.relations, d.rel_dim});
  add_parameter("decoder.argument_embedding", {config_.vocab.arguments, d.arg_dim});
  add_parameter("decoder.lstm.input", {4 * dec, d.decoder_input_dim()});
  add_parameter("decoder.lstm.recurrent", {4 * dec, dec});
  add_parameter("decoder.lstm.bias", {4 * dec});
  add_parameter("decoder.context", {dec, enc});
  add_parameter("decoder.combine", {dec, 2 * dec});

  if (config_.variant.decoder == DecoderKind::Tpr) {
    for (std::size_t i = 0; i < d.positions; ++i) add_parameter(position_name(i), {d.pos_dim});
    add_parameter("unbinding.dual", {d.rel_dim, d.arg_dim * d.rel_dim});
    if (config_.variant.relation_linear) add_parameter("unbinding.relation_linear", {d.rel_dim, d.rel_dim});
    add_parameter("classifier.relation", {config_.vocab.relations, d.rel_dim});
    add_parameter("classifier.argument", {config_.vocab.arguments, d.arg_dim});
  } else {
    add_parameter("classifier.relation", {config_.vocab.relations, dec});
    for (std::size_t i = 0; i < d.positions; ++i) add_parameter(argument_head(i), {config_.vocab.arguments, dec});
  }

  // Uniform(-0.1, 0.1) everywhere except positional unbinding vectors, which
  // start as unit-norm Gaussian draws.
  for (auto& p : params_) {
    auto data = p.value.mutable_data();
    if (p.name.starts_with("unbinding.position")) {
      const auto v = rng.normal_vector(data.size());
      double norm = 0.0;
      for (double x : v) norm += x * x;
      norm = std::sqrt(norm);
      for (std::size_t i = 0; i < v.size(); ++i) data[i] = v[i] / norm;
    } else {
      for (double& x : data) x = rng.uniform(-0.1, 0.1);
    }
  }
}

Tensor& Model::add_parameter(std::string name, Shape shape) {
  params_.push_back({std::move(name), Tensor::zeros(std::move(shape), true)});
  return params_.back().value;
}

std::size_t Model::encoder_dim() const {
  return config_.variant.encoder == EncoderKind::Tpr ? config_.dims.tpr_dim() : config_.dims.lstm_hidden;
}

std::size_t Model::decoder_dim() const {
  return config_.variant.decoder == DecoderKind::Tpr ? config_.dims.tuple_dim() : config_.dims.lstm_hidden;
}

std::vector<Tensor> Model::parameter_tensors() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.value);
  return out;
}

bool Model::has_parameter(std::string_view name) const {
  return std::any_of(params_.begin(), params_.end(), [&](const NamedTensor& p) { return p.name == name; });
}

const Tensor& Model::parameter(std::string_view name) const {
  for (const auto& p : params_)
    if (p.name == name) return p.value;
  throw StateError("model has no parameter '" + std::string(name) + "'");
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.numel();
  return n;
}

// Gate layout along the stacked axis: input, forget, output, candidate.
std::pair<Tensor, Tensor> Model::lstm_cell(const std::string& prefix, const Tensor& input,
                                           const Tensor& recurrent, const Tensor& cell) const {
  const std::size_t h = cell.shape().back();
  Tensor pre = add(linear(input, parameter(prefix + ".input"), parameter(prefix + ".bias")),
                   linear(recurrent, parameter(prefix + ".recurrent")));
  Tensor i = sigmoid(slice_last(pre, 0, h));
  Tensor f = sigmoid(slice_last(pre, h, h));
  Tensor o = sigmoid(slice_last(pre, 2 * h, h));
  Tensor g = tanh(slice_last(pre, 3 * h, h));
  Tensor c = add(mul(f, cell), mul(i, g));
  Tensor out = mul(o, tanh(c));
  return {out, c};
}

Encoded Model::encode(const TokenBatch& tokens) const {
  if (tokens.batch == 0 || tokens.length == 0) throw InputError("encode: empty token batch");
  const std::size_t B = tokens.batch, L = tokens.length;
  const std::size_t V = config_.vocab.tokens;
  for (int id : tokens.ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= V) {
      throw VocabError("token id " + std::to_string(id) + " outside vocabulary of size " + std::to_string(V));
    }
  }
  const bool tpr = config_.variant.encoder == EncoderKind::Tpr;
  const std::size_t enc = encoder_dim();
  const ModelDims& d = config_.dims;

  Encoded out;
  out.mask = tokens.mask();
  Tensor state = Tensor::zeros({B, enc});
  Tensor filler_cell = Tensor::zeros({B, enc});
  Tensor role_cell = Tensor::zeros({B, enc});

  std::vector<int> column(B);
  for (std::size_t t = 0; t < L; ++t) {
    for (std::size_t b = 0; b < B; ++b) column[b] = tokens.ids[b * L + t];
    Tensor x = embedding(parameter("embedding.words"), column);
    if (tpr) {
      auto [h_f, c_f] = lstm_cell("encoder.filler_lstm", x, state, filler_cell);
      auto [h_r, c_r] = lstm_cell("encoder.role_lstm", x, state, role_cell);
      filler_cell = c_f;
      role_cell = c_r;
      Tensor a_f = softmax_with_temperature(linear(h_f, parameter("encoder.filler_attention")),
                                            config_.temperature);
      Tensor a_r = softmax_with_temperature(linear(h_r, parameter("encoder.role_attention")),
                                            config_.temperature);
      Tensor f = linear(a_f, parameter("encoder.fillers"));  // F . a_f
      Tensor r = linear(a_r, parameter("encoder.roles"));    // R . a_r
      state = reshape(batched_outer(f, r), {B, d.tpr_dim()});
      out.filler_scores.push_back(a_f);
      out.role_scores.push_back(a_r);
    } else {
      auto [h, c] = lstm_cell("encoder.lstm", x, state, filler_cell);
      state = h;
      filler_cell = c;
    }
    out.steps.push_back(state);
  }

  // Pooling weights per position: every live position for sum pooling, only
  // the last live one otherwise.
  std::vector<Tensor> pooled;
  std::vector<double> w(B);
  for (std::size_t t = 0; t < L; ++t) {
    bool all_one = true, any = false;
    for (std::size_t b = 0; b < B; ++b) {
      const bool live = config_.variant.pooling == Pooling::SumTprs ? t < tokens.lengths[b]
                                                                     : t + 1 == tokens.lengths[b];
      w[b] = live ? 1.0 : 0.0;
      all_one = all_one && live;
      any = any || live;
    }
    if (!any) continue;
    pooled.push_back(all_one ? out.steps[t] : scale_rows(out.steps[t], w));
  }
  out.summary = pooled.size() == 1 ? pooled[0] : add_n(pooled);
  out.context = stack(out.steps);
  return out;
}

Tensor Model::reason(const Tensor& summary) const {
  Tensor x = summary;
  for (std::size_t i = 0; i < config_.variant.reasoning_layers; ++i) {
    const std::string p = "reasoning." + std::to_string(i);
    x = tanh(linear(x, parameter(p + ".weight"), parameter(p + ".bias")));
  }
  return x;
}

DecoderState Model::initial_state(const Encoded& encoded) const {
  Tensor h0 = reason(encoded.summary);
  return {h0, Tensor::zeros(h0.shape())};
}

Tensor Model::project_context(const Encoded& encoded) const {
  return linear(encoded.context, parameter("decoder.context"));
}

StepOutput Model::decode_step(std::span<const TupleIds> previous, const DecoderState& state,
                              const Tensor& projected_context,
                              std::span<const std::uint8_t> mask) const {
  const std::size_t B = previous.size();
  const std::size_t k = config_.dims.positions;
  if (B == 0 || state.hidden.rank() != 2 || state.hidden.dim(0) != B) {
    throw DimensionError("decode_step: " + std::to_string(B) + " previous tuples for state " +
                         shape_str(state.hidden.shape()));
  }
  if (projected_context.rank() != 3 || projected_context.dim(0) != B ||
      mask.size() != B * projected_context.dim(1)) {
    throw DimensionError("decode_step: context " + shape_str(projected_context.shape()) +
                         " does not match batch and mask");
  }
  std::vector<int> rel(B);
  std::vector<std::vector<int>> args(k, std::vector<int>(B));
  for (std::size_t b = 0; b < B; ++b) {
    if (previous[b].args.size() != k) {
      throw DimensionError("decode_step: tuple has " + std::to_string(previous[b].args.size()) +
                           " arguments, model expects " + std::to_string(k));
    }
    rel[b] = previous[b].relation;
    for (std::size_t i = 0; i < k; ++i) args[i][b] = previous[b].args[i];
  }
  std::vector<Tensor> pieces{embedding(parameter("decoder.relation_embedding"), rel)};
  for (std::size_t i = 0; i < k; ++i) pieces.push_back(embedding(parameter("decoder.argument_embedding"), args[i]));
  Tensor x = concat(pieces);

  auto [h, c] = lstm_cell("decoder.lstm", x, state.hidden, state.cell);

  // Dot-product attention over the projected encoder states.
  Tensor scores = batched_contract_last(projected_context, h);
  Tensor weights = masked_softmax(scores, mask);
  Tensor summary = weighted_sum(weights, projected_context);
  std::vector<Tensor> both{h, summary};
  Tensor hidden = linear(concat(both), parameter("decoder.combine"));
  if (config_.variant.attention_tanh) hidden = tanh(hidden);

  StepOutput out;
  if (config_.variant.decoder == DecoderKind::Tpr) {
    out = unbind(hidden);
  } else {
    out.relation_logits = linear(hidden, parameter("classifier.relation"));
    for (std::size_t i = 0; i < k; ++i) out.arg_logits.push_back(linear(hidden, parameter(argument_head(i))));
  }
  out.attention = weights;
  out.state = {hidden, c};
  return out;
}

StepOutput Model::unbind(const Tensor& hidden) const {
  if (config_.variant.decoder != DecoderKind::Tpr) throw StateError("unbind needs a TPR decoder");
  const ModelDims& d = config_.dims;
  if (hidden.rank() != 2 || hidden.dim(1) != d.tuple_dim()) {
    throw DimensionError("unbind: expected [B x " + std::to_string(d.tuple_dim()) + "], got " +
                         shape_str(hidden.shape()));
  }
  const std::size_t B = hidden.dim(0);
  Tensor h3 = reshape(hidden, {B, d.arg_dim, d.rel_dim, d.pos_dim});
  std::vector<Tensor> bound;
  for (std::size_t i = 0; i < d.positions; ++i) bound.push_back(contract_last(h3, parameter(position_name(i))));
  Tensor merged = reshape(bound.size() == 1 ? bound[0] : add_n(bound), {B, d.arg_dim * d.rel_dim});
  Tensor r_unbind = linear(merged, parameter("unbinding.dual"));

  StepOutput out;
  out.relation_vector = r_unbind;
  Tensor rel = config_.variant.relation_linear ? linear(r_unbind, parameter("unbinding.relation_linear"))
                                               : r_unbind;
  out.relation_logits = linear(rel, parameter("classifier.relation"));
  for (const auto& b_i : bound) {
    Tensor a = batched_contract_last(b_i, r_unbind);
    out.arg_vectors.push_back(a);
    out.arg_logits.push_back(linear(a, parameter("classifier.argument")));
  }
  return out;
}

}  // namespace tpn2f
