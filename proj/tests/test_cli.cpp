#include <doctest.h>

#include <fstream>
#include <sstream>

#include "support.hpp"
#include "uhd/checkpoint.hpp"
#include "uhd/cli.hpp"
#include "uhd/embedding_file.hpp"
#include "uhd/index_io.hpp"

using namespace uhd;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "uhd");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

void write(const std::string& path, const std::string& text) { std::ofstream(path, std::ios::binary) << text; }

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string config(const std::string& extra = "", int batch = 4, const std::string& lr = "0.01") {
  return R"({"h": 8, "n": 64, "k": 4, "weight_sparsity": 0.3, "layers": [1], "mode": "single", "batch_size": )" +
         std::to_string(batch) + R"(, "steps": 20, "lr": )" + lr + R"(, "warmup_steps": 2, "seed": 1, "encoder_layers": 1)" +
         extra + "}";
}

const char* kTriples =
    "red apple\tred apple fruit\tblue sea\n"
    "blue sea\tblue sea water\tred apple\n"
    "green tree\tgreen tree leaf\tblue water\n"
    "yellow sun\tyellow sun sky\tgreen leaf\n";

/// A scratch directory holding a small trained checkpoint and collection.
struct Workspace {
  testing::TempDir dir{"cli"};
  Workspace() {
    write(f("t.tsv"), kTriples);
    write(f("c.json"), config());
    std::string coll;
    for (int i = 0; i < 100; ++i) {
      static const char* words[] = {"red apple fruit", "blue sea water", "green tree leaf", "yellow sun sky"};
      coll += "d" + std::to_string(i) + "\t" + words[i % 4] + "\n";
    }
    write(f("coll.tsv"), coll);
    write(f("q.tsv"), "q1\tred apple\nq2\tblue water\n");
    write(f("qrels.txt"), "q1 0 d0 1\nq2 0 d1 1\n");
    REQUIRE(run({"train", "--triples", f("t.tsv"), "--config", f("c.json"), "--out", f("m.uhdw")}).code == 0);
  }
  std::string f(const std::string& name) const { return dir.file(name); }
};

}  // namespace

TEST_CASE("usage errors exit 2") {
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"frobnicate"}).code == kExitUsage);
  CHECK(run({"eval", "--run", "/nonexistent/run", "--qrels", "/nonexistent/q"}).code == kExitUsage);
  CHECK(run({"--help"}).code == kExitOk);
}

TEST_CASE("train writes a checkpoint and a loss log") {
  Workspace ws;
  CHECK(read_checkpoint(ws.f("m.uhdw")).plan.size() == 1);
  const auto log = slurp(ws.f("m.uhdw.loss.csv"));
  CHECK(log.rfind("step,mean_loss,mean_pos,mean_neg\n", 0) == 0);
  CHECK(std::count(log.begin(), log.end(), '\n') == 21);
}

TEST_CASE("train argument and data errors") {
  testing::TempDir dir("cli-train");
  write(dir.file("t.tsv"), kTriples);

  write(dir.file("missing.json"), R"({"h": 8, "n": 64, "k": 4})");
  auto r = run({"train", "--triples", dir.file("t.tsv"), "--config", dir.file("missing.json"), "--out", dir.file("m")});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("missing config key: weight_sparsity") != std::string::npos);

  write(dir.file("b1.json"), config("", 1));
  r = run({"train", "--triples", dir.file("t.tsv"), "--config", dir.file("b1.json"), "--out", dir.file("m")});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("in-batch negatives require batch size >= 2") != std::string::npos);

  write(dir.file("ok.json"), config());
  write(dir.file("bad.tsv"), "a\tb\tc\nbroken line\n");
  r = run({"train", "--triples", dir.file("bad.tsv"), "--config", dir.file("ok.json"), "--out", dir.file("m")});
  CHECK(r.code == kExitData);
  CHECK(r.err.find("bad.tsv:2") != std::string::npos);

  write(dir.file("boom.json"), config("", 4, "1e300"));
  r = run({"train", "--triples", dir.file("t.tsv"), "--config", dir.file("boom.json"), "--out", dir.file("m")});
  CHECK(r.code == kExitDiverged);
}

TEST_CASE("index, search and eval") {
  Workspace ws;
  auto r = run({"index", "--checkpoint", ws.f("m.uhdw"), "--collection", ws.f("coll.tsv"), "--out", ws.f("i.uhdi")});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("docs\t100\n") == 0);
  CHECK(read_index(ws.f("i.uhdi")).doc_count() == 100);

  r = run({"search", "--index", ws.f("i.uhdi"), "--checkpoint", ws.f("m.uhdw"), "--query", "red apple", "--k", "10"});
  REQUIRE(r.code == 0);
  std::istringstream lines(r.out);
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    std::istringstream fields(line);
    int rank;
    std::string doc;
    double score;
    CHECK(static_cast<bool>(fields >> rank >> doc >> score));
    CHECK(rank == ++n);
  }
  CHECK(n == 10);

  r = run({"search", "--index", ws.f("i.uhdi"), "--checkpoint", ws.f("m.uhdw"), "--queries", ws.f("q.tsv"), "--out",
           ws.f("r.run"), "--k", "100"});
  REQUIRE(r.code == 0);
  r = run({"eval", "--run", ws.f("r.run"), "--qrels", ws.f("qrels.txt")});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("mrr@10\t") == 0);

  r = run({"index", "--checkpoint", ws.f("m.uhdw"), "--collection", ws.f("coll.tsv"), "--out", ws.f("k2.uhdi"),
           "--infer-k", "2"});
  REQUIRE(r.code == 0);
  CHECK(read_index(ws.f("k2.uhdi")).posting_count() < read_index(ws.f("i.uhdi")).posting_count());
}

TEST_CASE("eval prints mrr@10 of 1.0000 when the relevant doc is first") {
  testing::TempDir dir("cli-eval");
  write(dir.file("r.run"), "q1 Q0 a 1 3.0 x\nq1 Q0 b 2 2.0 x\n");
  write(dir.file("qrels.txt"), "q1 0 a 1\n");
  const auto r = run({"eval", "--run", dir.file("r.run"), "--qrels", dir.file("qrels.txt")});
  CHECK(r.code == 0);
  CHECK(r.out.find("mrr@10\t1.0000\n") == 0);

  write(dir.file("bad.txt"), "q1 0 a 1\nq1 0 b\n");
  const auto bad = run({"eval", "--run", dir.file("r.run"), "--qrels", dir.file("bad.txt")});
  CHECK(bad.code == kExitData);
  CHECK(bad.err.find(":2") != std::string::npos);
}

TEST_CASE("data errors exit 3") {
  Workspace ws;
  write(ws.f("dup.tsv"), "a\tred apple\na\tblue sea\n");
  CHECK(run({"index", "--checkpoint", ws.f("m.uhdw"), "--collection", ws.f("dup.tsv"), "--out", ws.f("x")}).code ==
        kExitData);

  // A two-bucket checkpoint cannot search a one-bucket index.
  write(ws.f("v.json"), config(R"(, "mode": "vertical", "layers": [1, 2], "encoder_layers": 2)"));
  auto vcfg = slurp(ws.f("v.json"));
  vcfg.replace(vcfg.find(R"("layers": [1], "mode": "single", )"), 33, "");
  write(ws.f("v.json"), vcfg);
  REQUIRE(run({"train", "--triples", ws.f("t.tsv"), "--config", ws.f("v.json"), "--out", ws.f("v.uhdw")}).code == 0);
  REQUIRE(run({"index", "--checkpoint", ws.f("m.uhdw"), "--collection", ws.f("coll.tsv"), "--out", ws.f("i.uhdi")})
              .code == 0);
  CHECK(run({"search", "--index", ws.f("i.uhdi"), "--checkpoint", ws.f("v.uhdw"), "--query", "red"}).code == kExitData);
}

TEST_CASE("empty search result prints nothing") {
  Workspace ws;
  write(ws.f("empty.tsv"), "");
  REQUIRE(run({"index", "--checkpoint", ws.f("m.uhdw"), "--collection", ws.f("empty.tsv"), "--out", ws.f("e.uhdi")})
              .code == 0);
  const auto r = run({"search", "--index", ws.f("e.uhdi"), "--checkpoint", ws.f("m.uhdw"), "--query", "red apple"});
  CHECK(r.code == 0);
  CHECK(r.out.empty());
}

TEST_CASE("index from dense embeddings bypasses the toy encoder") {
  Workspace ws;
  Rng rng(3);
  {
    EmbeddingFileWriter w(ws.f("e.uhde"), 1, 8);
    for (int i = 0; i < 5; ++i) {
      RowMatrix<float> m(3, 8);
      for (auto& x : m.reshaped()) x = static_cast<float>(rng.uniform(-1, 1));
      w.write("e" + std::to_string(i), {{1, m}});
    }
    w.close();
  }
  auto r = run({"index", "--checkpoint", ws.f("m.uhdw"), "--embeddings", ws.f("e.uhde"), "--out", ws.f("e.uhdi")});
  REQUIRE(r.code == 0);
  const auto idx = read_index(ws.f("e.uhdi"));
  CHECK(idx.doc_count() == 5);
  CHECK(idx.doc_ids()[4] == "e4");

  {
    EmbeddingFileWriter w(ws.f("wide.uhde"), 1, 9);
    w.write("x", {{1, RowMatrix<float>::Ones(2, 9)}});
    w.close();
  }
  CHECK(run({"index", "--checkpoint", ws.f("m.uhdw"), "--embeddings", ws.f("wide.uhde"), "--out", ws.f("w")}).code ==
        kExitData);
}

TEST_CASE("tune prints colon-separated weights") {
  testing::TempDir dir("cli-tune");
  write(dir.file("t.tsv"), kTriples);
  auto cfg = config(R"(, "layers": [1, 2, 3], "mode": "vertical", "encoder_layers": 3)");
  cfg.replace(cfg.find(R"("layers": [1], "mode": "single", )"), 33, "");
  write(dir.file("c.json"), cfg);
  REQUIRE(run({"train", "--triples", dir.file("t.tsv"), "--config", dir.file("c.json"), "--out", dir.file("m.uhdw")})
              .code == 0);
  write(dir.file("coll.tsv"), "d1\tred apple fruit\nd2\tblue sea water\nd3\tgreen tree leaf\n");
  write(dir.file("q.tsv"), "q1\tred apple\nq2\tblue sea\n");
  write(dir.file("cand.run"), "q1 Q0 d2 1 0 c\nq1 Q0 d1 2 0 c\nq1 Q0 d3 3 0 c\nq2 Q0 d1 1 0 c\nq2 Q0 d2 2 0 c\n");
  write(dir.file("qrels.txt"), "q1 0 d1 1\nq2 0 d2 1\n");
  const auto r = run({"tune", "--checkpoint", dir.file("m.uhdw"), "--collection", dir.file("coll.tsv"), "--queries",
                      dir.file("q.tsv"), "--candidates", dir.file("cand.run"), "--qrels", dir.file("qrels.txt"),
                      "--grid", "0,1", "--oracle"});
  REQUIRE(r.code == 0);
  const auto line = r.out.substr(0, r.out.find('\n'));
  CHECK(std::count(line.begin(), line.end(), ':') == 2);
  for (char c : line) CHECK((c == ':' || c == '0' || c == '1'));
  CHECK(r.err.find("oracle mrr@10") != std::string::npos);
}

TEST_CASE("analyze writes csv reports") {
  Workspace ws;
  REQUIRE(run({"index", "--checkpoint", ws.f("m.uhdw"), "--collection", ws.f("coll.tsv"), "--out", ws.f("i.uhdi")})
              .code == 0);
  const auto r = run({"analyze", "--checkpoint", ws.f("m.uhdw"), "--queries", ws.f("q.tsv"), "--density",
                      ws.f("d.csv"), "--index", ws.f("i.uhdi"), "--frequency", ws.f("f.csv"), "--stats",
                      "--interpret", ws.f("t.csv"), "--min-count", "1"});
  REQUIRE(r.code == 0);
  CHECK(slurp(ws.f("d.csv")).rfind("length,mean_density\n2,", 0) == 0);
  CHECK(slurp(ws.f("f.csv")).rfind("bucket,dim,docs\n", 0) == 0);
  CHECK(slurp(ws.f("t.csv")).rfind("dim,term,count\n", 0) == 0);
  CHECK(r.out.find("docs\t100\n") == 0);
  CHECK(run({"analyze", "--index", ws.f("i.uhdi")}).code == kExitUsage);
}

TEST_CASE("commands are idempotent") {
  Workspace ws;
  const auto first = slurp(ws.f("m.uhdw"));
  REQUIRE(run({"train", "--triples", ws.f("t.tsv"), "--config", ws.f("c.json"), "--out", ws.f("m2.uhdw")}).code == 0);
  CHECK(slurp(ws.f("m2.uhdw")) == first);
  run({"index", "--checkpoint", ws.f("m.uhdw"), "--collection", ws.f("coll.tsv"), "--out", ws.f("a.uhdi")});
  run({"index", "--checkpoint", ws.f("m.uhdw"), "--collection", ws.f("coll.tsv"), "--out", ws.f("b.uhdi"),
       "--threads", "3"});
  CHECK(slurp(ws.f("a.uhdi")) == slurp(ws.f("b.uhdi")));
}
