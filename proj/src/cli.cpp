#include "tpn2f/cli.hpp"

#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "tpn2f/analysis.hpp"
#include "tpn2f/checkpoint.hpp"
#include "tpn2f/dataset.hpp"
#include "tpn2f/error.hpp"
#include "tpn2f/log.hpp"
#include "tpn2f/mathqa.hpp"
#include "tpn2f/preprocess.hpp"
#include "tpn2f/report.hpp"
#include "tpn2f/sexpr.hpp"
#include "tpn2f/training.hpp"

namespace tpn2f {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t init_seed(std::uint64_t run_seed) { return run_seed ^ 0x9e3779b97f4a7c15ULL; }

Program canonical_program(const Program& program, Dialect dialect) {
  Program out;
  out.reserve(program.size());
  for (const auto& t : program) {
    RelationalTuple c{t.relation, t.live_args()};
    if (dialect == Dialect::MathQA) {
      for (auto& a : c.args) a = mathqa::normalize_constant(a);
    }
    out.push_back(std::move(c));
  }
  return out;
}

LoadedModel load_trained_model(const fs::path& checkpoint) {
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  if (!ckpt.config.contains("run") || !ckpt.config.contains("vocab")) {
    throw CheckpointError(CheckpointError::Kind::Corrupt, "checkpoint header lacks run settings or vocabularies");
  }
  LoadedModel loaded;
  loaded.run = config_from_json(ckpt.config["run"]);
  loaded.vocab = Vocabularies::from_json(ckpt.config["vocab"]);
  const VocabSizes sizes{loaded.vocab.tokens.size(), loaded.vocab.relations.size(), loaded.vocab.arguments.size()};
  Rng rng(init_seed(loaded.run.train.seed));
  loaded.model = std::make_unique<Model>(loaded.run.model_config(sizes), rng);
  restore_parameters(*loaded.model, ckpt);
  return loaded;
}

namespace {

std::string read_file(const fs::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(std::string("cannot open ") + what + " '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

// Either JSON-lines or one JSON array.
std::vector<json> read_records(const fs::path& path) {
  const std::string text = read_file(path, "file");
  std::vector<json> records;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return records;
  if (text[first] == '[') {
    try {
      for (auto& r : json::parse(text)) records.push_back(std::move(r));
    } catch (const json::parse_error& e) {
      throw InputError(path.string() + ": malformed JSON: " + e.what());
    }
    return records;
  }
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      records.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": malformed record: " + e.what());
    }
  }
  return records;
}

// Text-only records (no program) are accepted for inference.
std::vector<Sample> load_inputs(const fs::path& path, Dialect dialect) {
  std::vector<Sample> samples;
  const auto records = read_records(path);
  for (std::size_t i = 0; i < records.size(); ++i) {
    json r = records[i];
    if (r.is_object() && !r.contains("program") && !r.contains("program_tree")) r["program"] = json::array();
    try {
      samples.push_back(sample_from_json(r, dialect, i));
    } catch (const Error& e) {
      throw InputError(path.string() + ": record " + std::to_string(i) + ": " + e.what());
    }
  }
  return samples;
}

RewriteTable rewrite_table_for(const RunConfig& cfg) {
  if (!cfg.rewrite_table.empty()) {
    const std::string text = read_file(cfg.rewrite_table, "rewrite table");
    try {
      return RewriteTable::from_json(json::parse(text));
    } catch (const json::parse_error& e) {
      throw InputError("rewrite table '" + cfg.rewrite_table + "' is not valid JSON: " + e.what());
    }
  }
  return cfg.dialect == Dialect::MathQA ? RewriteTable::mathqa_defaults() : RewriteTable{};
}

void preprocess_samples(std::vector<Sample>& samples, const RunConfig& cfg) {
  const RewriteTable table = rewrite_table_for(cfg);
  for (auto& s : samples) {
    try {
      s.program = preprocess_program(s.program, cfg.dialect, cfg.dims.positions, table);
    } catch (const PreprocessError& e) {
      throw PreprocessError("sample '" + s.id + "': " + e.what());
    }
  }
}

std::vector<std::vector<int>> token_ids(std::span<const Sample> samples, const Vocabularies& vocab) {
  std::vector<std::vector<int>> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    if (s.tokens.empty()) throw InputError("sample '" + s.id + "' has no tokens");
    std::vector<int> ids;
    for (const auto& t : s.tokens) ids.push_back(vocab.tokens.id(t));
    out.push_back(std::move(ids));
  }
  return out;
}

std::vector<Program> decode_programs(const Model& model, std::span<const Sample> samples, const Vocabularies& vocab,
                                     std::size_t max_len, std::size_t batch_size) {
  const auto ids = token_ids(samples, vocab);
  std::vector<Program> out;
  out.reserve(ids.size());
  const std::size_t step = std::max<std::size_t>(batch_size, 1);
  for (std::size_t start = 0; start < ids.size(); start += step) {
    const std::size_t n = std::min(step, ids.size() - start);
    for (const auto& p : greedy_decode(model, std::span(ids).subspan(start, n), max_len)) {
      out.push_back(program_from_ids(p, vocab));
    }
  }
  return out;
}

MetricReport score(Dialect dialect, const std::vector<Program>& predictions, const std::vector<Sample>& gold) {
  std::vector<Program> preds;
  std::vector<GoldRecord> golds;
  for (const auto& p : predictions) preds.push_back(canonical_program(p, dialect));
  for (const auto& s : gold) {
    GoldRecord g = s.gold();
    g.program = canonical_program(g.program, dialect);
    golds.push_back(std::move(g));
  }
  return evaluate_metrics(dialect, preds, golds);
}

std::vector<double> parse_numbers(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || item.find_first_not_of(" \t", used) != std::string::npos) {
      throw InputError("--numbers: '" + item + "' is not a number");
    }
    out.push_back(v);
  }
  return out;
}

// Tuple sequence first; nested s-expressions fall back to tree flattening.
Program parse_any_program(const std::string& text, Dialect dialect) {
  try {
    return parse_tuple_sequence(text);
  } catch (const ParseError&) {
    if (dialect != Dialect::AlgoLisp) throw;
  }
  return flatten_program_tree(text);
}

struct ConfigFlags {
  std::string config;
  std::string preset;
  std::string dataset;
  std::optional<std::size_t> epochs, batch_size, positions, max_decode_len;
  std::optional<double> lr;
  std::optional<std::uint64_t> seed;
  std::string encoder, decoder, pooling;
  std::vector<std::string> settings;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& f) {
  auto* config = cmd->add_option("--config", f.config, "key=value or JSON config file");
  cmd->add_option("--preset", f.preset, "mathqa or algolisp hyperparameters")->excludes(config);
  cmd->add_option("--dataset", f.dataset, "dataset dialect: mathqa or algolisp");
  cmd->add_option("--epochs", f.epochs);
  cmd->add_option("--lr", f.lr);
  cmd->add_option("--batch-size", f.batch_size);
  cmd->add_option("--seed", f.seed, "single source of randomness for the run");
  cmd->add_option("--positions", f.positions, "argument slots per tuple (2 or 3)");
  cmd->add_option("--max-decode-len", f.max_decode_len);
  cmd->add_option("--encoder", f.encoder, "tpr or lstm");
  cmd->add_option("--decoder", f.decoder, "tpr or lstm");
  cmd->add_option("--pooling", f.pooling, "sum_tprs or last_state");
  cmd->add_option("--set", f.settings, "extra key=value override, repeatable");
}

// Config file (or preset), then individual flags.
RunConfig resolve_config(const ConfigFlags& f) {
  RunConfig cfg;
  if (!f.config.empty()) cfg = load_config(f.config);
  else if (!f.preset.empty()) cfg = preset_config(f.preset);
  else cfg = preset_config(f.dataset.empty() ? "mathqa" : f.dataset);
  if (!f.dataset.empty()) apply_setting(cfg, "dialect", f.dataset);
  for (const auto& kv : f.settings) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (f.epochs) cfg.train.epochs = *f.epochs;
  if (f.lr) cfg.train.learning_rate = *f.lr;
  if (f.batch_size) cfg.train.batch_size = *f.batch_size;
  if (f.seed) cfg.train.seed = *f.seed;
  if (f.positions) cfg.dims.positions = *f.positions;
  if (f.max_decode_len) cfg.train.max_decode_len = *f.max_decode_len;
  if (!f.encoder.empty()) apply_setting(cfg, "encoder", f.encoder);
  if (!f.decoder.empty()) apply_setting(cfg, "decoder", f.decoder);
  if (!f.pooling.empty()) apply_setting(cfg, "pooling", f.pooling);
  return cfg;
}

Dialect dialect_flag(const std::string& name, Dialect fallback) {
  return name.empty() ? fallback : dialect_from_string(name);
}

// ---- commands ----

struct PrepareArgs {
  ConfigFlags flags;
  std::string input, output;
};

int cmd_prepare(const PrepareArgs& a, std::ostream& out) {
  const RunConfig cfg = resolve_config(a.flags);
  auto samples = load_dataset(a.input, cfg.dialect);
  preprocess_samples(samples, cfg);
  save_dataset(a.output, samples);
  write_file(fs::path(a.output).string() + ".cfg", cfg.to_text());
  out << fmt::format("prepared {} samples -> {}\n", samples.size(), a.output);
  return 0;
}

struct TrainArgs {
  ConfigFlags flags;
  std::string train, dev, out_dir, resume;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  const RunConfig cfg = resolve_config(a.flags);
  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  write_file(dir / "effective.cfg", cfg.to_text());

  auto samples = load_dataset(a.train, cfg.dialect);
  if (samples.empty()) throw InputError("training set '" + a.train + "' is empty");
  preprocess_samples(samples, cfg);
  std::vector<Sample> dev;
  if (!a.dev.empty()) {
    dev = load_dataset(a.dev, cfg.dialect);
    preprocess_samples(dev, cfg);
  }

  std::optional<Checkpoint> resumed;
  Vocabularies vocab;
  if (!a.resume.empty()) {
    resumed = load_checkpoint(a.resume);
    vocab = Vocabularies::from_json(resumed->config.at("vocab"));
  } else {
    vocab = build_vocabularies(samples);
  }
  const auto examples = make_examples(samples, vocab, cfg.dims.positions);
  const VocabSizes sizes{vocab.tokens.size(), vocab.relations.size(), vocab.arguments.size()};
  Rng init_rng(init_seed(cfg.train.seed));
  Model model(cfg.model_config(sizes), init_rng);
  Trainer trainer(model, cfg.train);
  if (resumed) {
    restore_parameters(model, *resumed);
    if (resumed->optimizer) trainer.optimizer() = *resumed->optimizer;
    trainer.rng().set_state(resumed->rng_state);
    trainer.set_epoch(resumed->epoch);
  }
  spdlog::info("training {} samples, {} parameters, vocab {}/{}/{}", examples.size(), model.parameter_count(),
               sizes.tokens, sizes.relations, sizes.arguments);

  const json header{{"run", cfg.to_json()}, {"vocab", vocab.to_json()}};
  std::ofstream log(dir / "train_log.jsonl", resumed ? std::ios::app : std::ios::trunc);
  if (!log) throw IoError("cannot write '" + (dir / "train_log.jsonl").string() + "'");
  while (trainer.epoch() < cfg.train.epochs) {
    const EpochStats stats = trainer.train_epoch(examples);
    json line = stats.to_json();
    if (!dev.empty()) {
      const auto preds = decode_programs(model, dev, vocab, cfg.train.max_decode_len, cfg.train.batch_size);
      line["dev"] = score(cfg.dialect, preds, dev).to_json();
    }
    log << line.dump() << '\n' << std::flush;
    spdlog::info("epoch {} loss {:.6f} op_acc {:.4f} ({:.1f}s)", stats.epoch, stats.mean_loss, stats.op_acc,
                 stats.seconds);

    Checkpoint ckpt = Checkpoint::capture(model);
    ckpt.config = header;
    ckpt.optimizer = trainer.optimizer();
    ckpt.rng_state = trainer.rng().state();
    ckpt.epoch = trainer.epoch();
    save_checkpoint(dir / "model.ckpt", ckpt);
  }
  if (!fs::exists(dir / "model.ckpt")) {
    Checkpoint ckpt = Checkpoint::capture(model);
    ckpt.config = header;
    ckpt.optimizer = trainer.optimizer();
    ckpt.rng_state = trainer.rng().state();
    ckpt.epoch = trainer.epoch();
    save_checkpoint(dir / "model.ckpt", ckpt);
  }
  out << fmt::format("trained {} epochs -> {}\n", trainer.epoch(), (dir / "model.ckpt").string());
  return 0;
}

struct EvalArgs {
  std::string pred, gold, checkpoint, dataset, out_path;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  MetricReport report;
  if (!a.checkpoint.empty()) {
    const LoadedModel lm = load_trained_model(a.checkpoint);
    const Dialect dialect = dialect_flag(a.dataset, lm.run.dialect);
    auto gold = load_dataset(a.gold, dialect);
    preprocess_samples(gold, lm.run);
    const auto preds = decode_programs(*lm.model, gold, lm.vocab, lm.run.train.max_decode_len, lm.run.train.batch_size);
    report = score(dialect, preds, gold);
  } else {
    const Dialect dialect = dialect_flag(a.dataset, Dialect::MathQA);
    const auto gold = load_dataset(a.gold, dialect);
    const auto records = read_records(a.pred);
    std::map<std::string, std::size_t> gold_index;
    for (std::size_t i = 0; i < gold.size(); ++i) gold_index[gold[i].id] = i;
    std::vector<Program> preds(gold.size());
    std::vector<bool> seen(gold.size(), false);
    for (std::size_t i = 0; i < records.size(); ++i) {
      const json& r = records[i];
      if (!r.is_object()) throw InputError(a.pred + ": record " + std::to_string(i) + " is not an object");
      std::size_t slot = i;
      if (r.contains("id")) {
        const std::string id = r["id"].is_string() ? r["id"].get<std::string>() : r["id"].dump();
        const auto it = gold_index.find(id);
        if (it == gold_index.end()) throw InputError(a.pred + ": prediction for unknown id '" + id + "'");
        slot = it->second;
      } else if (i >= gold.size()) {
        throw InputError(a.pred + ": more predictions than gold records");
      }
      try {
        preds[slot] = program_from_record(r);
      } catch (const Error& e) {
        throw InputError(a.pred + ": record " + std::to_string(i) + ": " + e.what());
      }
      seen[slot] = true;
    }
    for (std::size_t i = 0; i < gold.size(); ++i)
      if (!seen[i]) throw InputError(a.pred + ": no prediction for gold id '" + gold[i].id + "'");
    report = score(dialect, preds, gold);
  }
  const std::string text = report.to_json().dump(2) + "\n";
  if (!a.out_path.empty()) write_file(a.out_path, text);
  out << text;
  return 0;
}

struct InferArgs {
  std::string checkpoint, input, output;
};

int cmd_infer(const InferArgs& a, std::ostream& out) {
  const LoadedModel lm = load_trained_model(a.checkpoint);
  const auto samples = load_inputs(a.input, lm.run.dialect);
  const auto preds =
      decode_programs(*lm.model, samples, lm.vocab, lm.run.train.max_decode_len, lm.run.train.batch_size);
  std::string lines;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Program p = canonical_program(preds[i], lm.run.dialect);
    json r{{"id", samples[i].id}, {"program", format_program(p)}};
    if (lm.run.dialect == Dialect::MathQA) {
      try {
        mathqa::ProgramEnv env{samples[i].numbers, {}};
        r["value"] = mathqa::execute(p, env);
      } catch (const ExecError&) {
        r["value"] = nullptr;
      }
    } else {
      try {
        r["program_tree"] = rebuild_program_tree(p).str();
      } catch (const Error&) {
        r["program_tree"] = nullptr;
      }
    }
    lines += r.dump() + "\n";
  }
  if (a.output.empty() || a.output == "-") out << lines;
  else write_file(a.output, lines);
  return 0;
}

struct ExecArgs {
  std::string dataset = "mathqa", program, program_file, numbers, inputs, inputs_file;
};

int cmd_exec(const ExecArgs& a, std::ostream& out) {
  const Dialect dialect = dialect_from_string(a.dataset);
  std::string text = a.program;
  if (!a.program_file.empty()) text = read_file(a.program_file, "program file");
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) throw InputError("exec needs --program or --program-file");
  const Program program = parse_any_program(text, dialect);

  if (dialect == Dialect::MathQA) {
    mathqa::ProgramEnv env;
    if (!a.numbers.empty()) env.numbers = parse_numbers(a.numbers);
    out << fmt::format("{}\n", mathqa::execute(program, env));
    return 0;
  }
  std::string env_text = a.inputs;
  if (!a.inputs_file.empty()) env_text = read_file(a.inputs_file, "inputs file");
  algolisp::Bindings bindings;
  if (!env_text.empty()) {
    json j;
    try {
      j = json::parse(env_text);
    } catch (const json::parse_error& e) {
      throw InputError(std::string("--inputs is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw InputError("--inputs must be a JSON object of name -> value");
    for (const auto& [name, value] : j.items()) bindings[name] = algolisp::value_from_json(value);
  }
  out << algolisp::value_to_json(algolisp::execute(program, bindings)).dump() << '\n';
  return 0;
}

struct AnalyzeArgs {
  std::string checkpoint, data, out_dir;
  std::size_t k = 3;
  std::optional<std::uint64_t> seed;
  double threshold = kAssignmentThreshold;
  std::size_t samples = 5;
};

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out) {
  const LoadedModel lm = load_trained_model(a.checkpoint);
  const auto samples = load_inputs(a.data, lm.run.dialect);
  if (samples.empty()) throw InputError("analysis data '" + a.data + "' is empty");
  const std::uint64_t seed = a.seed.value_or(lm.run.train.seed);

  std::vector<AssignmentRecord> assignments;
  if (lm.run.variant.encoder == EncoderKind::Tpr) {
    for (std::size_t i = 0; i < std::min(a.samples, samples.size()); ++i) {
      auto recs = extract_assignments(*lm.model, samples[i].tokens, lm.vocab.tokens, a.threshold);
      assignments.insert(assignments.end(), recs.begin(), recs.end());
    }
  } else {
    spdlog::warn("LSTM encoder has no role attention; assignments.csv will be empty");
  }

  std::vector<ClusterRow> clusters;
  std::size_t relations = 0;
  if (lm.run.variant.decoder == DecoderKind::Tpr) {
    std::vector<Example> data;
    for (auto& ids : token_ids(samples, lm.vocab)) data.push_back(Example{std::move(ids), {}});
    const auto stats = collect_relation_vectors(*lm.model, data, lm.vocab, lm.run.train.max_decode_len,
                                                lm.run.train.batch_size);
    relations = stats.size();
    clusters = cluster_relations(stats, a.k, seed);
  } else {
    spdlog::warn("LSTM decoder has no relation unbinding vectors; clusters.csv will be empty");
  }

  const json meta{{"checkpoint", fs::path(a.checkpoint).filename().string()},
                  {"data", fs::path(a.data).filename().string()},
                  {"samples", samples.size()},
                  {"assignment_samples", std::min(a.samples, samples.size())},
                  {"threshold", a.threshold},
                  {"k", a.k},
                  {"seed", seed},
                  {"relations", relations},
                  {"config", lm.run.to_json()}};
  emit_report(assignments, clusters, meta, a.out_dir);
  write_file(fs::path(a.out_dir) / "effective.cfg", lm.run.to_text());
  out << fmt::format("analysis written to {}\n", a.out_dir);
  return 0;
}

}  // namespace

int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tensor-product structured text-to-program model", "tpn2f"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  PrepareArgs prepare;
  auto* c_prepare = app.add_subcommand("prepare", "normalize, rewrite and pad dataset programs");
  add_config_flags(c_prepare, prepare.flags);
  c_prepare->add_option("--input", prepare.input, "raw dataset")->required();
  c_prepare->add_option("--output", prepare.output, "preprocessed JSON-lines output")->required();

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "train a model; writes model.ckpt and train_log.jsonl");
  add_config_flags(c_train, train.flags);
  c_train->add_option("--train", train.train, "training set")->required();
  c_train->add_option("--dev", train.dev, "optional dev set scored after every epoch");
  c_train->add_option("--out", train.out_dir, "output directory")->required();
  c_train->add_option("--resume", train.resume, "checkpoint to continue from");

  EvalArgs eval;
  auto* c_eval = app.add_subcommand("eval", "score predictions or a checkpoint against gold data");
  auto* pred_opt = c_eval->add_option("--pred", eval.pred, "predictions (JSON-lines with a program field)");
  c_eval->add_option("--checkpoint", eval.checkpoint, "decode the gold texts with this model")->excludes(pred_opt);
  c_eval->add_option("--gold", eval.gold, "gold dataset")->required();
  c_eval->add_option("--dataset", eval.dataset, "mathqa or algolisp");
  c_eval->add_option("--out", eval.out_path, "also write the metric report here");

  InferArgs infer;
  auto* c_infer = app.add_subcommand("infer", "greedy-decode programs for input texts");
  c_infer->add_option("--checkpoint", infer.checkpoint)->required();
  c_infer->add_option("--input", infer.input, "texts (JSON-lines)")->required();
  c_infer->add_option("--output", infer.output, "prediction JSON-lines; stdout when omitted");

  ExecArgs exec;
  auto* c_exec = app.add_subcommand("exec", "run one program");
  c_exec->add_option("--dataset", exec.dataset, "mathqa or algolisp");
  auto* prog_opt = c_exec->add_option("--program", exec.program, "tuple sequence or s-expression");
  c_exec->add_option("--program-file", exec.program_file)->excludes(prog_opt);
  c_exec->add_option("--numbers", exec.numbers, "comma-separated n0,n1,... (mathqa)");
  auto* inputs_opt = c_exec->add_option("--inputs", exec.inputs, "JSON object of bindings (algolisp)");
  c_exec->add_option("--inputs-file", exec.inputs_file)->excludes(inputs_opt);

  AnalyzeArgs analyze;
  auto* c_analyze = app.add_subcommand("analyze", "role assignments and relation clusters");
  c_analyze->add_option("--checkpoint", analyze.checkpoint)->required();
  c_analyze->add_option("--data", analyze.data, "texts to analyse")->required();
  c_analyze->add_option("--out", analyze.out_dir, "report directory")->required();
  c_analyze->add_option("--k", analyze.k, "number of relation clusters")->check(CLI::PositiveNumber);
  c_analyze->add_option("--seed", analyze.seed, "k-means seed; defaults to the run seed");
  c_analyze->add_option("--threshold", analyze.threshold, "softmax threshold for assignments");
  c_analyze->add_option("--samples", analyze.samples, "texts to extract assignments from");

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*c_prepare) return cmd_prepare(prepare, out);
    if (*c_train) return cmd_train(train, out);
    if (*c_eval) {
      if (eval.pred.empty() && eval.checkpoint.empty()) throw InputError("eval needs --pred or --checkpoint");
      return cmd_eval(eval, out);
    }
    if (*c_infer) return cmd_infer(infer, out);
    if (*c_exec) return cmd_exec(exec, out);
    if (*c_analyze) return cmd_analyze(analyze, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

int run_cli(int argc, char** argv) {
  init_logging();
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(std::move(args), std::cout, std::cerr);
}

}  // namespace tpn2f
