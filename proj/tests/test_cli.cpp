// End-to-end checks of the command-line surface: exit codes, logging,
// file outputs, and the full synth -> train -> decode -> eval pipeline.
#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <string>

#include "helpers.hpp"
#include "transdict/classlm.hpp"
#include "transdict/corpus.hpp"
#include "transdict/transmodel.hpp"

namespace {

struct RunResult {
  int exit_code;
  std::string out;
  std::string err;
};

RunResult run_cli(const helpers::TempDir& tmp, const std::string& args) {
  std::string out_path = tmp.file("stdout.txt");
  std::string err_path = tmp.file("stderr.txt");
  std::string cmd = std::string(TRANSDICT_CLI) + " " + args + " >" + out_path +
                    " 2>" + err_path;
  int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = helpers::read_file(out_path);
  r.err = helpers::read_file(err_path);
  return r;
}

std::size_t count_occurrences(const std::string& hay, const std::string& needle) {
  std::size_t count = 0, pos = 0;
  while ((pos = hay.find(needle, pos)) != std::string::npos) {
    ++count;
    pos += needle.size();
  }
  return count;
}

// One shared synthetic corpus for the pipeline tests.
struct Workspace {
  helpers::TempDir tmp;
  std::string dir;

  Workspace() {
    dir = tmp.file("corpus");
    RunResult r = run_cli(tmp,
                          "synth --out-dir " + dir +
                              " --seed 5 --french-vocab 40 --english-vocab 30"
                              " --classes 4 --train-pairs 120 --test-pairs 6"
                              " --min-len 3 --max-len 10 --test-min-len 4"
                              " --test-max-len 6 --ambiguity 0.15");
    REQUIRE(r.exit_code == 0);
  }
  std::string file(const std::string& name) const { return dir + "/" + name; }
};

}  // namespace

TEST_CASE("synth is byte-deterministic per seed") {
  helpers::TempDir tmp;
  std::string args =
      " --seed 9 --french-vocab 25 --english-vocab 20 --classes 3"
      " --train-pairs 30 --test-pairs 4 --min-len 2 --max-len 6";
  REQUIRE(run_cli(tmp, "synth --out-dir " + tmp.file("a") + args).exit_code == 0);
  REQUIRE(run_cli(tmp, "synth --out-dir " + tmp.file("b") + args).exit_code == 0);
  for (const char* f : {"train.bitext", "test.bitext", "lexicon.tsv",
                        "phones.tsv", "truth_bilex.tsv"})
    CHECK(helpers::read_file(tmp.file("a") + "/" + std::string(f)) ==
          helpers::read_file(tmp.file("b") + "/" + std::string(f)));
}

TEST_CASE("train-lm: logging, round-trip, and error paths") {
  Workspace ws;
  std::string model = ws.tmp.file("lm.model");

  SECTION("exactly as many iterations as requested are logged") {
    RunResult r = run_cli(ws.tmp, "train-lm --bitext " + ws.file("train.bitext") +
                                      " --lexicon " + ws.file("lexicon.tsv") +
                                      " --out " + model +
                                      " --iters 3 --rel-tol 0");
    REQUIRE(r.exit_code == 0);
    CHECK(count_occurrences(r.err, "iteration") == 3);
    // written model reloads cleanly and keeps its invariants
    transdict::ClassLM lm = transdict::load_class_lm(model);
    CHECK(lm.contextual.max_row_deviation() <= 1e-9);
    CHECK(lm.lexical.max_class_deviation() <= 1e-9);
  }
  SECTION("missing lexicon path exits 2 and names the path") {
    RunResult r = run_cli(ws.tmp, "train-lm --bitext " + ws.file("train.bitext") +
                                      " --lexicon /nonexistent/lex.tsv --out " +
                                      model);
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("/nonexistent/lex.tsv") != std::string::npos);
  }
  SECTION("usage errors exit 2") {
    RunResult r = run_cli(ws.tmp, "train-lm --bitext " + ws.file("train.bitext"));
    CHECK(r.exit_code == 2);
  }
}

TEST_CASE("full pipeline: train-tm, decode, perplexity, eval, tag") {
  Workspace ws;
  std::string lm_path = ws.tmp.file("lm.model");
  std::string tm_path = ws.tmp.file("tm.model");
  REQUIRE(run_cli(ws.tmp, "train-lm --bitext " + ws.file("train.bitext") +
                              " --lexicon " + ws.file("lexicon.tsv") +
                              " --out " + lm_path)
              .exit_code == 0);

  // train-tm with a tight length bound so the drop counter shows up
  RunResult tm = run_cli(ws.tmp, "train-tm --bitext " + ws.file("train.bitext") +
                                     " --lm " + lm_path + " --out " + tm_path +
                                     " --max-tokens 8 --max-iters 1");
  REQUIRE(tm.exit_code == 0);
  CHECK(tm.err.find("dropped") != std::string::npos);
  CHECK(count_occurrences(tm.err, "iteration") == 1);
  transdict::JointParams joint = transdict::load_joint_params(tm_path);
  CHECK(joint.max_conditioner_deviation() <= 1e-9);

  // retrain with defaults for the decode stages
  REQUIRE(run_cli(ws.tmp, "train-tm --bitext " + ws.file("train.bitext") +
                              " --lm " + lm_path + " --out " + tm_path)
              .exit_code == 0);

  std::string lattice = ws.tmp.file("test.lattice");
  RunResult sim = run_cli(ws.tmp, "simulate --bitext " + ws.file("test.bitext") +
                                      " --dict " + ws.file("phones.tsv") +
                                      " --out " + lattice +
                                      " --n 10 --noise-sd 1.0 --seed 3");
  REQUIRE(sim.exit_code == 0);

  SECTION("decode from a lattice file") {
    std::string hyps = ws.tmp.file("hyps.tsv");
    RunResult dec = run_cli(ws.tmp, "decode --bitext " + ws.file("test.bitext") +
                                        " --lattice " + lattice + " --lm " +
                                        lm_path + " --tm " + tm_path +
                                        " --smoothing interp:0.85 --n 10"
                                        " --out " + hyps);
    REQUIRE(dec.exit_code == 0);
    CHECK(dec.out.find("words_total=") != std::string::npos);
    CHECK(dec.out.find("perplexity=") != std::string::npos);
    // one hypothesis line per test sentence, classes attached
    std::string content = helpers::read_file(hyps);
    CHECK(count_occurrences(content, "\n") == 6);
    CHECK(count_occurrences(content, "\t") == 12);  // two tabs per line

    // eval on the written hypotheses reproduces the same counts
    RunResult ev = run_cli(ws.tmp, "eval --hyps " + hyps + " --refs " +
                                       ws.file("test.bitext") + " --lm " + lm_path);
    REQUIRE(ev.exit_code == 0);
    auto key = dec.out.substr(dec.out.find("words_correct="));
    key = key.substr(0, key.find('\n'));
    CHECK(ev.out.find(key) != std::string::npos);
  }

  SECTION("decode with on-the-fly simulation and unnormalized smoothing") {
    std::string hyps = ws.tmp.file("hyps_sim.tsv");
    RunResult dec = run_cli(ws.tmp, "decode --bitext " + ws.file("test.bitext") +
                                        " --simulate --dict " +
                                        ws.file("phones.tsv") + " --seed 3" +
                                        " --lm " + lm_path + " --tm " + tm_path +
                                        " --smoothing etest:0.30 --n 10 --out " +
                                        hyps);
    REQUIRE(dec.exit_code == 0);
    CHECK(dec.out.find("words_total=") != std::string::npos);
    // unnormalized scheme: no perplexity row
    CHECK(dec.out.find("perplexity=") == std::string::npos);
  }

  SECTION("malformed smoothing spec is a usage error") {
    RunResult dec = run_cli(ws.tmp, "decode --bitext " + ws.file("test.bitext") +
                                        " --lattice " + lattice + " --lm " +
                                        lm_path + " --tm " + tm_path +
                                        " --smoothing interp: --out " +
                                        ws.tmp.file("x.tsv"));
    CHECK(dec.exit_code == 2);
    CHECK(dec.err.find("smoothing") != std::string::npos);
  }

  SECTION("perplexity command prints the value and rejects max smoothing") {
    RunResult pp = run_cli(ws.tmp, "perplexity --bitext " + ws.file("test.bitext") +
                                       " --lm " + lm_path + " --tm " + tm_path +
                                       " --smoothing interp:0.85");
    REQUIRE(pp.exit_code == 0);
    CHECK(pp.out.find("perplexity=") == 0);
    RunResult bad = run_cli(ws.tmp, "perplexity --bitext " + ws.file("test.bitext") +
                                        " --lm " + lm_path + " --tm " + tm_path +
                                        " --smoothing max");
    CHECK(bad.exit_code == 2);
  }

  SECTION("tag command writes one tagged line per input line") {
    // tag the French sides of the test corpus
    auto pairs = transdict::load_bitext(ws.file("test.bitext"));
    std::string input = ws.tmp.file("french.txt");
    std::string text;
    for (const auto& p : pairs) text += transdict::join(p.french, ' ') + "\n";
    helpers::write_file(input, text);
    std::string tagged = ws.tmp.file("tagged.tsv");
    RunResult tr = run_cli(ws.tmp, "tag --input " + input + " --lm " + lm_path +
                                       " --out " + tagged);
    REQUIRE(tr.exit_code == 0);
    CHECK(count_occurrences(helpers::read_file(tagged), "\n") == pairs.size());
  }
}
