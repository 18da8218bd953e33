#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tpn2f/adam.hpp"
#include "tpn2f/model.hpp"
#include "tpn2f/random.hpp"
#include "tpn2f/tuple.hpp"
#include "tpn2f/vocab.hpp"

namespace tpn2f {

struct Sample;

struct TrainConfig {
  std::size_t epochs = 60;
  double learning_rate = 0.00115;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  std::size_t max_decode_len = 30;
  std::optional<double> grad_clip;
  bool shuffle = true;
  // Always on: the gold tuple is the next decoder input.
  bool teacher_forcing = true;
};

/// One sample as ids. `program` holds the gold tuples without GO or EOS.
struct Example {
  std::vector<int> tokens;
  std::vector<TupleIds> program;
};

/// Maps a preprocessed sample to ids; every tuple must already carry exactly
/// `positions` arguments. Unknown relations raise VocabError.
Example make_example(const Sample& sample, const Vocabularies& vocab, std::size_t positions);
std::vector<Example> make_examples(std::span<const Sample> samples, const Vocabularies& vocab,
                                   std::size_t positions);

/// Ids back to symbols.
Program program_from_ids(std::span<const TupleIds> program, const Vocabularies& vocab);

TupleIds go_tuple(std::size_t positions);
TupleIds eos_tuple(std::size_t positions);

/// Sum over steps of CE(relation) + sum over heads of CE(argument), for a
/// batch of one. Throws InputError when the lengths differ.
Tensor sequence_loss(std::span<const StepOutput> steps, std::span<const TupleIds> gold);

/// Teacher-forced pass over a batch. The target sequence is the program
/// followed by EOS; inputs are GO followed by the program.
struct BatchResult {
  Tensor loss;  // mean over samples of the summed sequence loss
  std::vector<StepOutput> steps;
  // Per sample: every step's argmax equals its target. With teacher forcing
  // this is the same as an exact greedy decode of the gold program.
  std::vector<bool> exact;
};
BatchResult teacher_forced_batch(const Model& model, std::span<const Example> batch);

struct DecodeTrace {
  std::vector<TupleIds> program;
  // r'_rel for each emitted tuple (TPR decoder only).
  std::vector<std::vector<double>> relation_vectors;
};

/// Greedy decoding from GO until EOS or max_len tuples. Argmax ties go to the
/// lowest id.
std::vector<DecodeTrace> greedy_decode_traced(const Model& model, std::span<const std::vector<int>> tokens,
                                              std::size_t max_len);
std::vector<std::vector<TupleIds>> greedy_decode(const Model& model, std::span<const std::vector<int>> tokens,
                                                 std::size_t max_len);

struct EpochStats {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double op_acc = 0.0;
  double seconds = 0.0;

  nlohmann::json to_json() const;
};

/// Adam-driven training with seeded batch order. Holds everything a
/// checkpoint needs to resume.
class Trainer {
 public:
  Trainer(Model& model, TrainConfig config);

  /// One teacher-forced pass. Throws VocabError when an id falls outside the
  /// model's vocabularies.
  EpochStats train_epoch(std::span<const Example> data);

  const TrainConfig& config() const { return config_; }
  AdamState& optimizer() { return adam_; }
  const AdamState& optimizer() const { return adam_; }
  Rng& rng() { return rng_; }
  const Rng& rng() const { return rng_; }
  std::size_t epoch() const { return epoch_; }
  void set_epoch(std::size_t epoch) { epoch_ = epoch; }

 private:
  Model& model_;
  TrainConfig config_;
  AdamState adam_;
  Rng rng_;
  std::size_t epoch_ = 0;
};

/// Checks that every id fits the model's vocabulary sizes.
void check_vocabulary(const Model& model, std::span<const Example> data);

}  // namespace tpn2f
