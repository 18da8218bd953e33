#include <gtest/gtest.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "synthetic.hpp"
#include "tpn2f/cli.hpp"
#include "tpn2f/config.hpp"
#include "tpn2f/dataset.hpp"
#include "tpn2f/error.hpp"

namespace fs = std::filesystem;
using namespace tpn2f;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("tpn2f_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

}  // namespace

TEST(Config, MathqaPreset) {
  const RunConfig c = preset_config("mathqa");
  EXPECT_EQ(c.dims.n_fillers, 150u);
  EXPECT_EQ(c.dims.n_roles, 50u);
  EXPECT_EQ(c.dims.filler_dim, 30u);
  EXPECT_EQ(c.dims.role_dim, 20u);
  EXPECT_EQ(c.train.epochs, 60u);
  EXPECT_DOUBLE_EQ(c.train.learning_rate, 0.00115);
  EXPECT_EQ(c.dialect, Dialect::MathQA);
}

TEST(Config, AlgolispPreset) {
  const RunConfig c = preset_config("algolisp");
  EXPECT_EQ(c.dims.role_dim, 30u);
  EXPECT_EQ(c.dims.rel_dim, 30u);
  EXPECT_EQ(c.dims.arg_dim, 20u);
  EXPECT_EQ(c.train.epochs, 50u);
  EXPECT_EQ(c.dialect, Dialect::AlgoLisp);
}

TEST(Config, PresetAppliesBeforeOtherKeys) {
  const RunConfig c = parse_config("epochs = 7\n# comment\npreset = algolisp\n");
  EXPECT_EQ(c.train.epochs, 7u);
  EXPECT_EQ(c.dims.role_dim, 30u);
}

TEST(Config, UnknownKeyIsNamed) {
  try {
    parse_config("preset = mathqa\nwidth = 3\n");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("width"), std::string::npos);
  }
}

TEST(Config, TypeMismatch) {
  EXPECT_THROW(parse_config("epochs = many\n"), ConfigError);
  EXPECT_THROW(parse_config("lr = 0.1x\n"), ConfigError);
  EXPECT_THROW(parse_config("shuffle = maybe\n"), ConfigError);
  EXPECT_THROW(parse_config("encoder = gru\n"), ConfigError);
  EXPECT_THROW(parse_config("no equals sign\n"), ConfigError);
  EXPECT_THROW(preset_config("imagenet"), ConfigError);
}

TEST(Config, JsonAccepted) {
  const RunConfig c = parse_config(R"({"preset": "algolisp", "epochs": 4, "lr": 0.5, "grad_clip": 5})");
  EXPECT_EQ(c.train.epochs, 4u);
  EXPECT_DOUBLE_EQ(c.train.learning_rate, 0.5);
  ASSERT_TRUE(c.train.grad_clip);
  EXPECT_DOUBLE_EQ(*c.train.grad_clip, 5.0);
  EXPECT_EQ(c.dims.arg_dim, 20u);
}

TEST(Config, TextRoundTrip) {
  RunConfig c = preset_config("algolisp");
  c.train.learning_rate = 0.0123456789;
  c.train.grad_clip = 2.5;
  c.variant.decoder = DecoderKind::Lstm;
  c.train.seed = 99;
  const RunConfig back = parse_config(c.to_text());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_EQ(config_from_json(c.to_json()).to_json(), c.to_json());
}

TEST(Config, MissingFile) { EXPECT_THROW(load_config("/nonexistent/run.cfg"), IoError); }

TEST(Cli, ExecMathqa) {
  const CliRun r = cli({"exec", "--dataset", "mathqa", "--program", "(add,n0,n2) (divide,n1,const100) (divide,#0,#1)",
                     "--numbers", "20,60,88"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "180\n");
}

TEST(Cli, ExecAlgolispTree) {
  const CliRun r = cli({"exec", "--dataset", "algolisp", "--program", "(reduce (map a (partial1 b +)) 0 +)",
                     "--inputs", R"({"a": [1, 2, 3], "b": 10})"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "36\n");
}

TEST(Cli, ExecErrorsExitOne) {
  EXPECT_EQ(cli({"exec", "--program", "(add,n0,n5)", "--numbers", "1,2"}).code, 1);
  EXPECT_EQ(cli({"exec", "--program", "(add,n0", "--numbers", "1"}).code, 1);
  EXPECT_EQ(cli({"exec", "--numbers", "1,x", "--program", "(add,n0,n1)"}).code, 1);
}

TEST(Cli, MissingConfigExitsOne) {
  const CliRun r = cli({"train", "--config", "missing.cfg", "--train", "t.jsonl", "--out", "unused"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("missing.cfg"), std::string::npos);
  EXPECT_NE(r.err.find("not found"), std::string::npos);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli({}).code, 1);
  EXPECT_EQ(cli({"frobnicate"}).code, 1);
  const CliRun r = cli({"exec", "--no-such-flag"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
  EXPECT_EQ(cli({"--help"}).code, 0);
}

TEST(Cli, EvalIdenticalMathqa) {
  const fs::path dir = scratch("eval_mathqa");
  spit(dir / "g.jsonl",
       R"J({"text": "20 60 88", "program": "(add,n0,n2) (divide,n1,const100) (divide,#0,#1)", "options": [170, 180, 190], "correct": 1}
{"text": "3 4", "program": "(multiply,n0,n1)", "answer": 12}
)J");
  fs::copy_file(dir / "g.jsonl", dir / "p.jsonl");
  const CliRun r = cli({"eval", "--pred", (dir / "p.jsonl").string(), "--gold", (dir / "g.jsonl").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["op_acc"], 1.0);
  EXPECT_EQ(j["exec_acc"], 1.0);
  EXPECT_EQ(j["n"], 2);
}

TEST(Cli, EvalIdenticalAlgolisp) {
  const fs::path dir = scratch("eval_algolisp");
  spit(dir / "g.jsonl",
       R"J({"text": "add b to each element of a", "program_tree": "(map a (partial1 b +))", "tests": [{"input": {"a": [1, 2], "b": 1}, "output": [2, 3]}, {"input": {"a": [], "b": 4}, "output": []}]}
)J");
  fs::copy_file(dir / "g.jsonl", dir / "p.jsonl");
  const CliRun r = cli({"eval", "--dataset", "algolisp", "--pred", (dir / "p.jsonl").string(), "--gold",
                     (dir / "g.jsonl").string(), "--out", (dir / "m.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["acc"], 1.0);
  EXPECT_EQ(j["p50_acc"], 1.0);
  EXPECT_EQ(j["m_acc"], 1.0);
  EXPECT_EQ(slurp(dir / "m.json"), r.out);
}

TEST(Cli, EvalIgnoresPadding) {
  const Program expected{{"sqrt", {"n0"}}, {"add", {"#0", "const100"}}};
  EXPECT_EQ(canonical_program(parse_tuple_sequence("(sqrt,n0,PAD) (add,#0,const-100)"), Dialect::MathQA), expected);
  EXPECT_EQ(canonical_program(parse_tuple_sequence("(sqrt n0) (add #0 const_100)"), Dialect::MathQA), expected);
}

TEST(Cli, TrainFlagsOverrideConfigAndEchoReproduces) {
  const fs::path dir = scratch("train");
  std::vector<Sample> data = testing_data::micro_dataset(12, 5);
  save_dataset(dir / "train.jsonl", data);
  spit(dir / "run.cfg",
       "preset = mathqa\nd_F = 6\nd_R = 4\nd_Rel = 4\nd_Arg = 3\nd_Pos = 3\nembed_dim = 8\nn_F = 10\nn_R = 6\n"
       "epochs = 9\nbatch_size = 4\nseed = 11\n");

  const CliRun a = cli({"train", "--config", (dir / "run.cfg").string(), "--epochs", "2", "--train",
                     (dir / "train.jsonl").string(), "--out", (dir / "a").string()});
  ASSERT_EQ(a.code, 0) << a.err;
  const RunConfig echoed = load_config(dir / "a" / "effective.cfg");
  EXPECT_EQ(echoed.train.epochs, 2u);
  EXPECT_EQ(echoed.dims.filler_dim, 6u);
  EXPECT_EQ(echoed.train.seed, 11u);
  EXPECT_EQ(echoed.dims.role_dim, 4u);

  std::ifstream log(dir / "a" / "train_log.jsonl");
  std::string line;
  std::size_t lines = 0;
  while (std::getline(log, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_TRUE(j.contains("mean_loss") && j.contains("op_acc") && j.contains("wallclock"));
    EXPECT_EQ(j["epoch"], ++lines);
  }
  EXPECT_EQ(lines, 2u);

  // The echoed file alone reproduces the run.
  const CliRun b = cli({"train", "--config", (dir / "a" / "effective.cfg").string(), "--train",
                     (dir / "train.jsonl").string(), "--out", (dir / "b").string()});
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(slurp(dir / "a" / "model.ckpt"), slurp(dir / "b" / "model.ckpt"));

  // A different seed changes the parameters.
  const CliRun c = cli({"train", "--config", (dir / "run.cfg").string(), "--epochs", "2", "--seed", "12", "--train",
                     (dir / "train.jsonl").string(), "--out", (dir / "c").string()});
  ASSERT_EQ(c.code, 0) << c.err;
  EXPECT_NE(slurp(dir / "a" / "model.ckpt"), slurp(dir / "c" / "model.ckpt"));

  // Inference and checkpoint evaluation agree.
  const CliRun inf = cli({"infer", "--checkpoint", (dir / "a" / "model.ckpt").string(), "--input",
                       (dir / "train.jsonl").string(), "--output", (dir / "pred.jsonl").string()});
  ASSERT_EQ(inf.code, 0) << inf.err;
  const CliRun by_pred = cli({"eval", "--pred", (dir / "pred.jsonl").string(), "--gold", (dir / "train.jsonl").string()});
  const CliRun by_ckpt =
      cli({"eval", "--checkpoint", (dir / "a" / "model.ckpt").string(), "--gold", (dir / "train.jsonl").string()});
  ASSERT_EQ(by_pred.code, 0) << by_pred.err;
  ASSERT_EQ(by_ckpt.code, 0) << by_ckpt.err;
  EXPECT_EQ(by_pred.out, by_ckpt.out);

  const CliRun an = cli({"analyze", "--checkpoint", (dir / "a" / "model.ckpt").string(), "--data",
                      (dir / "train.jsonl").string(), "--out", (dir / "report").string(), "--k", "2"});
  ASSERT_EQ(an.code, 0) << an.err;
  for (const char* f : {"assignments.csv", "clusters.csv", "scatter.svg", "roles.svg", "report.json"}) {
    EXPECT_TRUE(fs::exists(dir / "report" / f)) << f;
  }
}

TEST(Cli, ResumeContinuesTrajectory) {
  const fs::path dir = scratch("resume");
  save_dataset(dir / "train.jsonl", testing_data::micro_dataset(12, 6));
  const std::vector<std::string> common = {"--set", "d_F=6", "--set", "d_R=4", "--set", "d_Rel=4", "--set",
                                           "d_Arg=3", "--set", "d_Pos=3", "--set", "embed_dim=8", "--set",
                                           "n_F=10", "--set", "n_R=6", "--batch-size", "4", "--train",
                                           (dir / "train.jsonl").string()};
  auto train = [&](std::vector<std::string> extra) {
    std::vector<std::string> args = {"train"};
    args.insert(args.end(), common.begin(), common.end());
    args.insert(args.end(), extra.begin(), extra.end());
    return cli(args);
  };
  ASSERT_EQ(train({"--epochs", "3", "--out", (dir / "full").string()}).code, 0);
  ASSERT_EQ(train({"--epochs", "1", "--out", (dir / "part").string()}).code, 0);
  const CliRun r = train({"--epochs", "3", "--out", (dir / "part").string(), "--resume",
                       (dir / "part" / "model.ckpt").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(dir / "full" / "model.ckpt"), slurp(dir / "part" / "model.ckpt"));
}

TEST(Cli, PrepareIsIdempotent) {
  const fs::path dir = scratch("prepare");
  spit(dir / "raw.jsonl",
       R"J({"text": "a box 2 by 3 by 4", "program": "(volume_rectangular_prism,n0,n1,n2) (add,#0,const-1)"}
)J");
  ASSERT_EQ(cli({"prepare", "--input", (dir / "raw.jsonl").string(), "--output", (dir / "p1.jsonl").string()}).code, 0);
  ASSERT_EQ(cli({"prepare", "--input", (dir / "p1.jsonl").string(), "--output", (dir / "p2.jsonl").string()}).code, 0);
  EXPECT_EQ(slurp(dir / "p1.jsonl"), slurp(dir / "p2.jsonl"));
  const auto s = load_dataset(dir / "p1.jsonl", Dialect::MathQA);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(format_program(s[0].program), "(multiply,n0,n1) (multiply,#0,n2) (add,#1,const1)");
}
