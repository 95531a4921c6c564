#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "oracles.hpp"
#include "transdict/decoder.hpp"

using namespace transdict;

namespace {

TransModel make_model(BiLexicalParams bilex, ClassLM lm) {
  TransModel m;
  m.bilexical = std::move(bilex);
  m.lm = std::move(lm);
  return m;
}

NBestLattice lattice_of(std::vector<std::vector<Candidate>> lists) {
  NBestLattice lat;
  for (auto& l : lists) {
    NBestList nb;
    nb.entries = std::move(l);
    lat.positions.push_back(std::move(nb));
  }
  return lat;
}

// Random decode instance over a closed vocabulary.
struct Instance {
  TransModel model;
  NBestLattice lattice;
  std::vector<Token> e_sent;
};

Instance random_instance(Rng& rng, std::size_t C, std::size_t max_n,
                         std::size_t max_f, std::size_t max_e) {
  std::vector<Token> fr{"f0", "f1", "f2", "f3", "f4"};
  std::vector<Token> en{"e0", "e1", "e2"};
  Instance inst;
  inst.model = make_model(oracles::random_bilex(C, fr, en, rng),
                          oracles::random_classlm(C, fr, rng));
  std::size_t flen = 1 + rng.uniform(max_f);
  std::size_t elen = rng.uniform(max_e + 1);
  for (std::size_t j = 0; j < elen; ++j)
    inst.e_sent.push_back(en[rng.uniform(en.size())]);
  for (std::size_t i = 0; i < flen; ++i) {
    NBestList list;
    std::size_t n = 1 + rng.uniform(max_n);
    std::vector<std::size_t> picks;
    for (std::size_t r = 0; r < fr.size(); ++r) picks.push_back(r);
    // distinct candidate words per position
    for (std::size_t r = 0; r < n && r < picks.size(); ++r) {
      std::size_t k = r + rng.uniform(picks.size() - r);
      std::swap(picks[r], picks[k]);
      list.entries.push_back({fr[picks[r]], -3.0 * rng.unit()});
    }
    std::sort(list.entries.begin(), list.entries.end(),
              [](const Candidate& a, const Candidate& b) {
                if (a.score != b.score) return a.score > b.score;
                return a.word < b.word;
              });
    inst.lattice.positions.push_back(std::move(list));
  }
  return inst;
}

}  // namespace

TEST_CASE("prune keeps the acoustic top-n") {
  NBestLattice lat = lattice_of({{{"a", -1.0}, {"b", -2.0}, {"c", -3.0}}});
  SECTION("identity when n covers the list") {
    NBestLattice p = prune(lat, 5);
    CHECK(p.positions[0].entries.size() == 3);
  }
  SECTION("n=1 keeps only the best") {
    NBestLattice p = prune(lat, 1);
    REQUIRE(p.positions[0].entries.size() == 1);
    CHECK(p.positions[0].entries[0].word == "a");
  }
  SECTION("ties at the cut keep the lexicographically smaller word") {
    NBestLattice t = lattice_of({{{"b", -1.0}, {"a", -1.0}, {"c", -1.0}}});
    NBestLattice p = prune(t, 2);
    REQUIRE(p.positions[0].entries.size() == 2);
    CHECK(p.positions[0].entries[0].word == "a");
    CHECK(p.positions[0].entries[1].word == "b");
  }
  SECTION("truth rank is recomputed and may disappear") {
    NBestLattice t = lattice_of({{{"a", -1.0}, {"b", -2.0}, {"c", -3.0}}});
    t.positions[0].truth_rank = 2;  // "c"
    NBestLattice kept = prune(t, 3);
    CHECK(*kept.positions[0].truth_rank == 2);
    NBestLattice gone = prune(t, 2);
    CHECK_FALSE(gone.positions[0].truth_rank.has_value());
  }
  CHECK_THROWS_AS(prune(lat, 0), std::invalid_argument);
}

TEST_CASE("decode: single position, single candidate, two classes") {
  Rng rng(11);
  std::vector<Token> fr{"f0"};
  std::vector<Token> en{"e0"};
  Instance inst;
  inst.model = make_model(oracles::random_bilex(2, fr, en, rng),
                          oracles::random_classlm(2, fr, rng));
  inst.e_sent = {"e0"};
  inst.lattice = lattice_of({{{"f0", -0.5}}});
  SmoothingConfig cfg = SmoothingConfig::interpolate(0.85);

  DecodeResult got = decode(inst.lattice, inst.e_sent, inst.model, cfg);
  // hand enumeration of the two classes
  const ContextualParams& ctx = inst.model.lm.contextual;
  const std::size_t B = ctx.boundary();
  double best = kNegInf;
  ClassId arg = 0;
  for (ClassId c : {0u, 1u}) {
    double v = -0.5 + std::log(ctx.at(B, B, c)) +
               std::log(smoothed_score("f0", c, inst.e_sent, inst.model, cfg)) +
               std::log(ctx.at(B, c, ctx.end_event()));
    if (v > best) {
      best = v;
      arg = c;
    }
  }
  CHECK(got.words == std::vector<Token>{"f0"});
  CHECK(got.classes == std::vector<ClassId>{arg});
  CHECK(got.log_score == Catch::Approx(best).margin(1e-12));
}

TEST_CASE("decode equals the exhaustive oracle") {
  Rng rng(777);
  SECTION("the n=2, |f|=3, C=3, |e|=2 case") {
    Instance inst = random_instance(rng, 3, 2, 3, 2);
    while (inst.lattice.positions.size() != 3)
      inst = random_instance(rng, 3, 2, 3, 2);
    for (auto cfg : {SmoothingConfig::interpolate(0.85), SmoothingConfig::maximum(),
                     SmoothingConfig::e_test(1.5)}) {
      DecodeResult fast = decode(inst.lattice, inst.e_sent, inst.model, cfg);
      DecodeResult slow =
          brute_force_decode(inst.lattice, inst.e_sent, inst.model, cfg);
      CHECK(fast.words == slow.words);
      CHECK(fast.classes == slow.classes);
      CHECK(fast.log_score == Catch::Approx(slow.log_score).margin(1e-9));
    }
  }
  SECTION("randomized instances") {
    for (int round = 0; round < 60; ++round) {
      std::size_t C = 2 + rng.uniform(2);
      Instance inst = random_instance(rng, C, 3, 5, 3);
      double aw = 0.5 + rng.unit() * 1.5;
      SmoothingConfig cfg = round % 3 == 0 ? SmoothingConfig::maximum()
                            : round % 3 == 1
                                ? SmoothingConfig::interpolate(0.5 + 0.5 * rng.unit())
                                : SmoothingConfig::e_test(1.0 + rng.unit());
      DecodeResult fast = decode(inst.lattice, inst.e_sent, inst.model, cfg, aw);
      DecodeResult slow =
          brute_force_decode(inst.lattice, inst.e_sent, inst.model, cfg, aw);
      CHECK(fast.words == slow.words);
      CHECK(fast.classes == slow.classes);
      CHECK(fast.log_score == Catch::Approx(slow.log_score).margin(1e-9));
    }
  }
}

TEST_CASE("decode score can be replayed through the scorer") {
  Rng rng(909);
  for (int round = 0; round < 20; ++round) {
    Instance inst = random_instance(rng, 3, 3, 4, 2);
    SmoothingConfig cfg = SmoothingConfig::interpolate(0.85);
    DecodeResult r = decode(inst.lattice, inst.e_sent, inst.model, cfg, 1.2);
    double replay = score_decode_path(inst.lattice, r.words, r.classes,
                                      inst.e_sent, inst.model, cfg, 1.2);
    CHECK(r.log_score == Catch::Approx(replay).margin(1e-9));
    REQUIRE(r.per_position_margins.has_value());
    CHECK(r.per_position_margins->size() == r.words.size());
    for (double m : *r.per_position_margins) CHECK(m >= 0.0);
  }
}

TEST_CASE("pure-LM decoding ignores the English sentence") {
  Rng rng(321);
  Instance inst = random_instance(rng, 3, 3, 4, 3);
  SmoothingConfig w0 = SmoothingConfig::interpolate(0.0);
  DecodeResult with_e = decode(inst.lattice, inst.e_sent, inst.model, w0);
  DecodeResult no_e = decode(inst.lattice, {}, inst.model, w0);
  CHECK(with_e.words == no_e.words);
  CHECK(with_e.classes == no_e.classes);
  CHECK(with_e.log_score == Catch::Approx(no_e.log_score).margin(1e-12));
}

TEST_CASE("huge acoustic weight reduces to per-position acoustic argmax") {
  Rng rng(646);
  for (int round = 0; round < 10; ++round) {
    Instance inst = random_instance(rng, 3, 3, 4, 2);
    DecodeResult r = decode(inst.lattice, inst.e_sent, inst.model,
                            SmoothingConfig::interpolate(0.85), 1e6);
    for (std::size_t i = 0; i < r.words.size(); ++i) {
      const auto& entries = inst.lattice.positions[i].entries;
      double top = entries[0].score;  // lists are sorted
      // the decoded word carries the maximal acoustic score at its position
      double got = kNegInf;
      for (const auto& c : entries)
        if (c.word == r.words[i]) got = c.score;
      CHECK(got == top);
    }
  }
}

TEST_CASE("decoded classes stay within each word's lexicon set") {
  // lexicon-restricted model: words admit only some classes
  Lexicon lex(std::vector<std::string>{"K0", "K1", "K2"});
  lex.add("fa", 0);
  lex.add("fb", 1);
  lex.add("fb", 2);
  lex.add("fc", 2);
  ClassLM lm = train_class_lm({{"fa", "fb"}, {"fb", "fc"}, {"fc", "fa"}}, lex);
  std::vector<TaggedPair> tagged;
  for (auto& sent : {std::vector<Token>{"fa", "fb"}, {"fb", "fc"}}) {
    TaggedPair tp;
    tp.pair.french = sent;
    tp.pair.english = {"x", "y"};
    tp.classes = tag(sent, lm);
    tagged.push_back(std::move(tp));
  }
  JointParams joint = train_bilexical(tagged);
  TransModel model = make_model(to_bilexical(joint), std::move(lm));

  NBestLattice lat = lattice_of({{{"fa", -0.1}, {"fb", -0.2}, {"fc", -0.3}},
                                 {{"fc", -0.1}, {"fa", -0.4}}});
  DecodeResult r = decode(lat, {"x"}, model, SmoothingConfig::interpolate(0.85));
  for (std::size_t i = 0; i < r.words.size(); ++i) {
    auto classes = model.lm.lexicon.classes_of(r.words[i]);
    CHECK(std::find(classes.begin(), classes.end(), r.classes[i]) != classes.end());
  }
}

TEST_CASE("decode reports the position when everything is impossible") {
  Lexicon lex(std::vector<std::string>{"K0", "K1"});
  lex.add("fa", 0);
  ClassLM lm = train_class_lm({{"fa", "fa"}}, lex);
  TransModel model = make_model(BiLexicalParams{}, std::move(lm));
  NBestLattice lat = lattice_of({{{"fa", -0.1}}, {{"unknown", -0.1}}});
  CHECK_THROWS_WITH(
      decode(lat, {}, model, SmoothingConfig::interpolate(0.0)),
      Catch::Matchers::ContainsSubstring("position 1"));
}

TEST_CASE("ties break toward lower rank, then lower class") {
  // fully symmetric model: uniform transitions, identical emissions
  Lexicon lex(std::vector<std::string>{"K0", "K1"});
  lex.add("fa", 0);
  lex.add("fa", 1);
  lex.add("fb", 0);
  lex.add("fb", 1);
  ClassLM lm;
  lm.lexicon = lex;
  lm.contextual = ContextualParams(2);
  lm.contextual.fill_uniform();
  lm.lexical.C = 2;
  lm.lexical.table["fa"] = {{0, 0.25}, {1, 0.25}};
  lm.lexical.table["fb"] = {{0, 0.25}, {1, 0.25}};
  TransModel model = make_model(BiLexicalParams{}, std::move(lm));
  SmoothingConfig cfg = SmoothingConfig::interpolate(0.0);

  // equal acoustic scores: rank 0 ("fa" sorts first) must win, class 0 chosen
  NBestLattice lat = lattice_of({{{"fa", -1.0}, {"fb", -1.0}}});
  DecodeResult fast = decode(lat, {}, model, cfg);
  DecodeResult slow = brute_force_decode(lat, {}, model, cfg);
  CHECK(fast.words == std::vector<Token>{"fa"});
  CHECK(fast.classes == std::vector<ClassId>{0});
  CHECK(slow.words == fast.words);
  CHECK(slow.classes == fast.classes);
}

TEST_CASE("brute force guard") {
  Rng rng(4);
  Instance inst = random_instance(rng, 3, 3, 5, 2);
  // inflate to 20 positions so n^|f| * C^|f| blows past the guard
  while (inst.lattice.positions.size() < 20)
    inst.lattice.positions.push_back(inst.lattice.positions[0]);
  CHECK_THROWS_WITH(
      brute_force_decode(inst.lattice, inst.e_sent, inst.model,
                         SmoothingConfig::interpolate(0.85)),
      Catch::Matchers::ContainsSubstring("guard"));
}

TEST_CASE("English evidence flips an acoustically tied homophone") {
  // the dictation scenario: two near-homophones, the language model alone
  // prefers the wrong one, the source word rescues the right one
  Lexicon lex(std::vector<std::string>{"NOUN", "OTHER"});
  lex.add("chevaux", 0);
  lex.add("cheveux", 0);
  ClassLM lm;
  lm.lexicon = lex;
  lm.contextual = ContextualParams(2);
  lm.contextual.fill_uniform();
  lm.lexical.C = 2;
  lm.lexical.table["chevaux"] = {{0, 0.4}};
  lm.lexical.table["cheveux"] = {{0, 0.6}};

  BiLexicalParams bl;
  bl.class_names = {"NOUN", "OTHER"};
  std::uint32_t f = bl.french.intern("chevaux");
  std::uint32_t e = bl.english.intern("horses");
  bl.table[detail::fce_key(f, 0, e)] = 0.9;
  TransModel model = make_model(std::move(bl), std::move(lm));

  NBestLattice lat = lattice_of({{{"chevaux", -1.0}, {"cheveux", -1.0}}});
  std::vector<Token> e_sent{"horses"};

  DecodeResult pure = decode(lat, e_sent, model, SmoothingConfig::interpolate(0.0));
  CHECK(pure.words == std::vector<Token>{"cheveux"});
  DecodeResult trans = decode(lat, e_sent, model, SmoothingConfig::interpolate(0.85));
  CHECK(trans.words == std::vector<Token>{"chevaux"});
}
