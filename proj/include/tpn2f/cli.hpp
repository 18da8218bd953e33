#pragma once

#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "tpn2f/config.hpp"
#include "tpn2f/model.hpp"
#include "tpn2f/vocab.hpp"

namespace tpn2f {

/// Model, vocabularies and run settings restored from a checkpoint written by
/// `train`.
struct LoadedModel {
  RunConfig run;
  Vocabularies vocab;
  std::unique_ptr<Model> model;
};

LoadedModel load_trained_model(const std::filesystem::path& checkpoint);

/// Drops PAD arguments and normalizes MathQA constants so that programs
/// padded to different arities compare equal.
Program canonical_program(const Program& program, Dialect dialect);

/// Seed for parameter initialization, derived from the run seed so that the
/// batch-order stream and the init stream differ.
std::uint64_t init_seed(std::uint64_t run_seed);

/// Runs one command. `args` excludes the program name. Returns 0 on success,
/// 1 on a usage or input error and 2 on an internal error.
int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace tpn2f
