#include "doctest.h"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "cli.hpp"
#include "json.hpp"
#include "nhdp/checkpoint.hpp"
#include "nhdp/corpus.hpp"
#include "nhdp/evaluation.hpp"
#include "temp_dir.hpp"

using namespace nhdp;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "nhdp");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) ++n;
  return n;
}

std::map<std::string, std::string> read_summary(const std::filesystem::path& p) {
  std::map<std::string, std::string> out;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    out[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return out;
}

// A small sampled corpus shared by the command tests.
struct SampledData {
  TempDir dir;
  SampledData() {
    const auto r = run_cli({"sample", "--truncation", "3,2", "--docs", "60", "--words", "30", "--vocab-size", "40",
                            "--seed", "5", "--output", (dir / "data").string()});
    REQUIRE(r.code == 0);
  }
  std::string corpus() const { return (dir / "data" / "corpus.txt").string(); }
};

}  // namespace

TEST_CASE("sample writes the corpus and one truth row per token") {
  TempDir dir;
  const auto r = run_cli({"sample", "--truncation", "3,3,3", "--docs", "100", "--words", "50", "--vocab-size", "200",
                          "--seed", "9", "--output", (dir / "a").string()});
  REQUIRE(r.code == 0);
  const auto c = load_term_counts(dir / "a" / "corpus.txt", load_vocabulary(dir / "a" / "vocab.txt"));
  CHECK(c.size() == 100);
  for (const auto& d : c.documents) CHECK(d.total_words() == 50);
  CHECK(count_lines(dir / "a" / "truth_assignments.txt") == 5000);
  CHECK(count_lines(dir / "a" / "truth_topics.txt") == 39);
  run_cli({"sample", "--truncation", "3,3,3", "--docs", "100", "--words", "50", "--vocab-size", "200", "--seed", "9",
           "--output", (dir / "b").string()});
  CHECK(slurp(dir / "a" / "corpus.txt") == slurp(dir / "b" / "corpus.txt"));
  CHECK(slurp(dir / "a" / "truth_assignments.txt") == slurp(dir / "b" / "truth_assignments.txt"));
}

TEST_CASE("train reports a missing corpus with exit code 2") {
  TempDir dir;
  const auto missing = (dir / "nope.txt").string();
  const auto r = run_cli({"train", "--corpus", missing, "--output", (dir / "out").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find(missing) != std::string::npos);
  CHECK(run_cli({"train"}).code == 2);
  CHECK(run_cli({}).code == 2);
  CHECK(run_cli({"bogus"}).code == 2);
  CHECK(run_cli({"--help"}).code == 0);
}

TEST_CASE("invalid configuration fails before any output is written") {
  SampledData data;
  const auto out = data.dir / "out";
  CHECK(run_cli({"train", "--corpus", data.corpus(), "--kappa", "0.3", "--output", out.string()}).code == 2);
  CHECK(run_cli({"train", "--corpus", data.corpus(), "--truncation", "3,0", "--output", out.string()}).code == 2);
  CHECK(run_cli({"train", "--corpus", data.corpus(), "--minibatch-size", "x", "--output", out.string()}).code == 2);
  {
    std::ofstream(data.dir / "bad.cfg") << "alpha = -1\n";
  }
  CHECK(run_cli({"train", "--config", (data.dir / "bad.cfg").string(), "--corpus", data.corpus(), "--output", out.string()}).code == 2);
  CHECK_FALSE(std::filesystem::exists(out));
}

TEST_CASE("train with one step writes one update, one checkpoint and one metrics row") {
  SampledData data;
  const auto out = data.dir / "run";
  const auto r = run_cli({"train", "--corpus", data.corpus(), "--truncation", "3,2", "--minibatch-size", "20",
                          "--steps", "1", "--threads", "2", "--heldout", data.corpus(), "--output", out.string()});
  REQUIRE(r.code == 0);
  const auto ck = load_checkpoint(out / "model.ckpt");
  CHECK(ck.model.step_count == 1);
  CHECK(ck.docs_seen == 20);
  int checkpoints = 0;
  for (const auto& e : std::filesystem::directory_iterator(out))
    if (e.path().extension() == ".ckpt") ++checkpoints;
  CHECK(checkpoints == 1);
  CHECK(count_lines(out / "metrics.csv") == 2);
}

TEST_CASE("config file values apply and flags override them") {
  SampledData data;
  {
    std::ofstream(data.dir / "run.cfg") << "# settings\ntruncation = 3,2\nminibatch-size = 15\nsteps = 4\nmetrics-every = 1\nseed = 3\n";
  }
  const auto cfg = (data.dir / "run.cfg").string();
  REQUIRE(run_cli({"train", "--config", cfg, "--corpus", data.corpus(), "--output", (data.dir / "a").string()}).code == 0);
  const auto a = load_checkpoint(data.dir / "a" / "model.ckpt");
  CHECK(a.model.tree.truncation().widths == std::vector<int>{3, 2});
  CHECK(a.model.step_count == 4);
  CHECK(a.docs_seen == 60);
  CHECK(count_lines(data.dir / "a" / "metrics.csv") == 5);
  REQUIRE(run_cli({"train", "--config", cfg, "--steps", "2", "--corpus", data.corpus(), "--output", (data.dir / "b").string()}).code == 0);
  CHECK(load_checkpoint(data.dir / "b" / "model.ckpt").model.step_count == 2);
}

TEST_CASE("identical runs write identical metrics; resume appends") {
  SampledData data;
  const std::vector<std::string> base{"train", "--corpus", data.corpus(), "--truncation", "3,2", "--minibatch-size",
                                      "10", "--metrics-every", "2", "--heldout", data.corpus(), "--seed", "4"};
  auto a = base, b = base;
  a.insert(a.end(), {"--output", (data.dir / "a").string()});
  b.insert(b.end(), {"--output", (data.dir / "b").string(), "--threads", "3"});
  REQUIRE(run_cli(a).code == 0);
  REQUIRE(run_cli(b).code == 0);
  CHECK(slurp(data.dir / "a" / "metrics.csv") == slurp(data.dir / "b" / "metrics.csv"));

  // Three steps, then resume to the full epoch of six.
  auto first = base;
  first.insert(first.end(), {"--steps", "3", "--output", (data.dir / "c").string()});
  REQUIRE(run_cli(first).code == 0);
  auto second = base;
  second.insert(second.end(), {"--steps", "6", "--resume", (data.dir / "c" / "model.ckpt").string(), "--output",
                               (data.dir / "c").string()});
  REQUIRE(run_cli(second).code == 0);
  // The interrupted run also reported its last step; otherwise the rows match.
  auto resumed = slurp(data.dir / "c" / "metrics.csv");
  const auto row3 = resumed.find("\n3,30,");
  REQUIRE(row3 != std::string::npos);
  resumed.erase(row3 + 1, resumed.find('\n', row3 + 1) - row3);
  CHECK(slurp(data.dir / "a" / "metrics.csv") == resumed);
  CHECK(load_checkpoint(data.dir / "a" / "model.ckpt").model.lambda ==
        load_checkpoint(data.dir / "c" / "model.ckpt").model.lambda);

  auto mismatch = base;
  mismatch[4] = "2,2";
  mismatch.insert(mismatch.end(), {"--resume", (data.dir / "c" / "model.ckpt").string(), "--output", (data.dir / "d").string()});
  CHECK(run_cli(mismatch).code == 3);
}

TEST_CASE("eval: uniform topics, determinism and truncation mismatch") {
  SampledData data;
  const auto model = make_prior_model(TruncatedTree(Truncation{{3, 2}}), {}, 40);
  const auto ckpt = data.dir / "uniform.ckpt";
  save_checkpoint({model, 1, 0}, ckpt);
  const auto r = run_cli({"eval", "--checkpoint", ckpt.string(), "--corpus", data.corpus(), "--output",
                          (data.dir / "e1").string(), "--debug-dump", (data.dir / "dump.jsonl").string()});
  REQUIRE(r.code == 0);
  const auto summary = read_summary(data.dir / "e1" / "eval_summary.txt");
  CHECK(std::stod(summary.at("corpus_avg")) == doctest::Approx(-std::log(40.0)).epsilon(1e-12));
  CHECK(count_lines(data.dir / "e1" / "eval_per_doc.csv") == 61);
  CHECK(count_lines(data.dir / "dump.jsonl") == 60);
  std::ifstream dump(data.dir / "dump.jsonl");
  std::string line;
  std::getline(dump, line);
  CHECK(nlohmann::json::parse(line).contains("nodes"));

  REQUIRE(run_cli({"train", "--corpus", data.corpus(), "--truncation", "3,2", "--minibatch-size", "20", "--output",
                   (data.dir / "t").string()}).code == 0);
  const auto trained = (data.dir / "t" / "model.ckpt").string();
  REQUIRE(run_cli({"eval", "--checkpoint", trained, "--corpus", data.corpus(), "--seed", "2", "--output", (data.dir / "e2").string()}).code == 0);
  REQUIRE(run_cli({"eval", "--checkpoint", trained, "--corpus", data.corpus(), "--seed", "2", "--threads", "3", "--output", (data.dir / "e3").string()}).code == 0);
  CHECK(slurp(data.dir / "e2" / "eval_per_doc.csv") == slurp(data.dir / "e3" / "eval_per_doc.csv"));

  const auto bad = run_cli({"eval", "--checkpoint", trained, "--corpus", data.corpus(), "--truncation", "3,3",
                            "--output", (data.dir / "e4").string()});
  CHECK(bad.code == 3);
  CHECK(bad.err.find("truncation") != std::string::npos);
  CHECK(run_cli({"eval", "--checkpoint", trained, "--corpus", data.corpus(), "--truncation", "3,2", "--output",
                 (data.dir / "e5").string()}).code == 0);
}

TEST_CASE("numeric failures exit with code 4") {
  TempDir dir;
  const auto model = make_prior_model(TruncatedTree(Truncation{{2, 2}}), {}, 5);
  save_checkpoint({model, 1, 0}, dir / "m.ckpt");
  {
    // First lambda entry sits after the 96-byte header of a depth-2 tree.
    std::fstream f(dir / "m.ckpt", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(96);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    f.write(reinterpret_cast<const char*>(&nan), sizeof nan);
  }
  CHECK(run_cli({"export", "--checkpoint", (dir / "m.ckpt").string(), "--output", (dir / "x").string()}).code == 4);
}

TEST_CASE("export lists every node and its JSON parses back") {
  TempDir dir;
  const auto model = make_prior_model(TruncatedTree(Truncation{{20, 10, 5}}), {}, 30);
  save_checkpoint({model, 1, 0}, dir / "init.ckpt");
  REQUIRE(run_cli({"export", "--checkpoint", (dir / "init.ckpt").string(), "--output", (dir / "x").string()}).code == 0);
  const auto tree = topic_tree_from_json(slurp(dir / "x" / "topics.json"));
  CHECK(tree.nodes.size() == 1220);
  CHECK(tree.nodes.front().top_terms.size() == 10);
  CHECK(count_lines(dir / "x" / "topics.txt") == 2440);
}

TEST_CASE("stats thresholds are monotone") {
  SampledData data;
  REQUIRE(run_cli({"train", "--corpus", data.corpus(), "--truncation", "3,2", "--minibatch-size", "20", "--output",
                   (data.dir / "t").string()}).code == 0);
  REQUIRE(run_cli({"stats", "--checkpoint", (data.dir / "t" / "model.ckpt").string(), "--corpus", data.corpus(),
                   "--output", (data.dir / "s").string()}).code == 0);
  const auto csv = slurp(data.dir / "s" / "stats.csv");
  const auto value = [&](const std::string& key) {
    const auto pos = csv.find(key + ",");
    return std::stoi(csv.substr(pos + key.size() + 1));
  };
  CHECK(value("nodes_95") <= value("nodes_99"));
  CHECK(value("nodes_99") <= value("nodes_999"));
  CHECK(count_lines(data.dir / "s" / "node_mass.csv") == 10);
  CHECK(run_cli({"stats", "--checkpoint", (data.dir / "t" / "model.ckpt").string(), "--output", (data.dir / "s2").string()}).code == 2);
}
