#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tpn2f/random.hpp"
#include "tpn2f/tensor.hpp"

namespace tpn2f {

enum class EncoderKind { Tpr, Lstm };
enum class DecoderKind { Tpr, Lstm };
enum class Pooling { SumTprs, LastState };

const char* to_string(EncoderKind kind);
const char* to_string(DecoderKind kind);
const char* to_string(Pooling pooling);

struct ModelDims {
  std::size_t n_fillers = 150;
  std::size_t n_roles = 50;
  std::size_t filler_dim = 30;
  std::size_t role_dim = 20;
  std::size_t rel_dim = 20;
  std::size_t arg_dim = 10;
  std::size_t pos_dim = 5;
  std::size_t embed_dim = 100;
  std::size_t lstm_hidden = 100;
  std::size_t positions = 2;  // argument slots per tuple

  std::size_t tpr_dim() const { return filler_dim * role_dim; }           // d_T
  std::size_t tuple_dim() const { return arg_dim * rel_dim * pos_dim; }   // d_H
  std::size_t decoder_input_dim() const { return rel_dim + positions * arg_dim; }
};

struct ModelVariant {
  EncoderKind encoder = EncoderKind::Tpr;
  DecoderKind decoder = DecoderKind::Tpr;
  Pooling pooling = Pooling::SumTprs;
  std::size_t reasoning_layers = 1;
  bool relation_linear = false;  // extra d_Rel x d_Rel map before the relation classifier
  bool attention_tanh = true;
};

struct VocabSizes {
  std::size_t tokens = 0;
  std::size_t relations = 0;
  std::size_t arguments = 0;
};

struct ModelConfig {
  ModelDims dims;
  ModelVariant variant;
  VocabSizes vocab;
  double temperature = 0.1;

  /// Throws ConfigError when a dimension is zero or inconsistent.
  void validate() const;
};

/// A decoder input or output tuple as vocabulary ids.
struct TupleIds {
  int relation = 0;
  std::vector<int> args;

  bool operator==(const TupleIds&) const = default;
};

/// Right-padded token ids, row-major batch x length.
struct TokenBatch {
  std::size_t batch = 0;
  std::size_t length = 0;
  std::vector<int> ids;
  std::vector<std::size_t> lengths;

  static TokenBatch from_sequences(std::span<const std::vector<int>> sequences, int pad_id);
  std::vector<std::uint8_t> mask() const;
};

struct Encoded {
  Tensor summary;  // [B x enc_dim], pooled encoder state
  Tensor context;  // [B x L x enc_dim]
  std::vector<std::uint8_t> mask;  // [B x L]
  std::vector<Tensor> steps;       // per position [B x enc_dim]
  // Softmax selections per position, TPR encoder only.
  std::vector<Tensor> filler_scores;  // [B x n_F]
  std::vector<Tensor> role_scores;    // [B x n_R]
};

struct DecoderState {
  Tensor hidden;  // [B x dec_dim]
  Tensor cell;    // [B x dec_dim]
};

struct StepOutput {
  Tensor relation_logits;           // [B x n_O]
  std::vector<Tensor> arg_logits;   // per position, [B x n_A]
  Tensor relation_vector;           // r'_rel [B x d_Rel], TPR decoder only
  std::vector<Tensor> arg_vectors;  // a_i [B x d_Arg], TPR decoder only
  Tensor attention;                 // [B x L]
  DecoderState state;
};

struct NamedTensor {
  std::string name;
  Tensor value;
};

/// Encoder, reasoning MLP and decoder with every learned parameter. All four
/// encoder/decoder combinations share the decoder input embeddings and the
/// attention layout; they differ in the recurrent state and the output heads.
class Model {
 public:
  Model(ModelConfig config, Rng& rng);

  const ModelConfig& config() const { return config_; }
  std::size_t encoder_dim() const;
  std::size_t decoder_dim() const;

  std::span<const NamedTensor> parameters() const { return params_; }
  std::vector<Tensor> parameter_tensors() const;
  bool has_parameter(std::string_view name) const;
  const Tensor& parameter(std::string_view name) const;
  std::size_t parameter_count() const;

  Encoded encode(const TokenBatch& tokens) const;
  /// Reasoning MLP: [B x enc_dim] -> [B x dec_dim], affine + tanh per layer.
  Tensor reason(const Tensor& summary) const;
  DecoderState initial_state(const Encoded& encoded) const;
  /// C_T = W_ctx . context, computed once per batch.
  Tensor project_context(const Encoded& encoded) const;
  StepOutput decode_step(std::span<const TupleIds> previous, const DecoderState& state,
                         const Tensor& projected_context,
                         std::span<const std::uint8_t> mask) const;
  /// Unbinding module on H_t [B x d_H]; leaves attention and state empty.
  StepOutput unbind(const Tensor& hidden) const;

 private:
  Tensor& add_parameter(std::string name, Shape shape);
  std::pair<Tensor, Tensor> lstm_cell(const std::string& prefix, const Tensor& input,
                                      const Tensor& recurrent, const Tensor& cell) const;

  ModelConfig config_;
  std::vector<NamedTensor> params_;
};

}  // namespace tpn2f
