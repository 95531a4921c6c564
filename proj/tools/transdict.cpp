// transdict: train and run the translation-aided dictation pipeline.
//
// Subcommands: train-lm, train-tm, tag, simulate, decode, perplexity, eval,
// synth. Exit codes: 0 success, 1 internal invariant failure, 2 usage or
// input error. All randomness flows from explicit --seed flags.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "transdict/classlm.hpp"
#include "transdict/corpus.hpp"
#include "transdict/decoder.hpp"
#include "transdict/eval.hpp"
#include "transdict/phonosim.hpp"
#include "transdict/synth.hpp"
#include "transdict/transmodel.hpp"

namespace td = transdict;

namespace {

std::vector<std::vector<td::Token>> french_sides(
    const std::vector<td::SentencePair>& pairs) {
  std::vector<std::vector<td::Token>> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(p.french);
  return out;
}

void log_iterations(const char* cmd, const td::TrainStats& st) {
  for (std::size_t i = 0; i < st.log_likelihood.size(); ++i)
    std::fprintf(stderr, "[%s] iteration %zu: log-likelihood %.6f\n", cmd,
                 i + 1, st.log_likelihood[i]);
}

// One plain-text line per sentence: tokens<TAB>class-labels[<TAB>logscore].
void write_tagged_line(std::ostream& out, const td::Lexicon& lex,
                       const std::vector<td::Token>& words,
                       const std::vector<td::ClassId>& classes,
                       const double* logscore) {
  std::vector<std::string> labels;
  labels.reserve(classes.size());
  for (td::ClassId c : classes) labels.push_back(lex.class_name(c));
  out << td::join(words, ' ') << '\t' << td::join(labels, ' ');
  if (logscore != nullptr) out << '\t' << td::g17(*logscore);
  out << '\n';
}

struct ChannelFlags {
  double distance_weight = 2.0;
  double noise_sd = 1.0;
  std::size_t n = 20;
  std::uint64_t seed = 0;

  void attach(CLI::App* cmd, bool with_n = true) {
    cmd->add_option("--distance-weight", distance_weight,
                    "phone edit distance weight");
    cmd->add_option("--noise-sd", noise_sd, "acoustic noise std deviation");
    if (with_n) cmd->add_option("--n", n, "n-best list size");
    cmd->add_option("--seed", seed, "channel seed");
  }
  td::ChannelConfig config() const { return {distance_weight, noise_sd, n, seed}; }
};

int cmd_train_lm(const std::string& bitext, const std::string& lexicon_path,
                 const std::string& out_path, std::size_t iters, double rel_tol,
                 double ctx_lambda, int threads) {
  td::Lexicon lexicon = td::load_lexicon(lexicon_path);
  std::vector<td::SentencePair> pairs = td::load_bitext(bitext);
  td::LmTrainConfig cfg;
  cfg.max_iters = iters;
  cfg.rel_tol = rel_tol;
  cfg.ctx_lambda = ctx_lambda;
  cfg.threads = threads;
  td::TrainStats stats;
  td::ClassLM lm = td::train_class_lm(french_sides(pairs), lexicon, cfg, &stats);
  log_iterations("train-lm", stats);
  if (stats.unknown_words > 0)
    std::fprintf(stderr,
                 "[train-lm] warning: %zu words outside the lexicon were "
                 "given the full class set\n",
                 stats.unknown_words);
  td::save_class_lm(lm, out_path);
  std::fprintf(stderr, "[train-lm] wrote %s\n", out_path.c_str());
  return 0;
}

int cmd_train_tm(const std::string& bitext, const std::string& lm_path,
                 const std::string& out_path, std::size_t max_iters,
                 double rel_tol, double prune_floor, std::size_t max_tokens,
                 int threads) {
  td::ClassLM lm = td::load_class_lm(lm_path);
  std::vector<td::SentencePair> pairs = td::load_bitext(bitext);
  td::FilterResult filtered = td::filter_pairs(pairs, max_tokens);
  std::fprintf(stderr, "[train-tm] filtered: kept %zu/%zu pairs (%s), dropped %zu\n",
               filtered.retained, pairs.size(),
               td::format_percent(filtered.retained, pairs.size()).c_str(),
               filtered.dropped);
  if (filtered.pairs.empty())
    throw std::invalid_argument("no pairs survive length filtering");

  std::vector<td::TaggedPair> tagged(filtered.pairs.size());
  td::parallel_blocks(filtered.pairs.size(), threads,
                      [&](std::size_t, std::size_t lo, std::size_t hi) {
                        for (std::size_t k = lo; k < hi; ++k) {
                          tagged[k].pair = filtered.pairs[k];
                          tagged[k].classes = td::tag(filtered.pairs[k].french, lm);
                        }
                      });

  td::TmTrainConfig cfg;
  cfg.max_iters = max_iters;
  cfg.rel_tol = rel_tol;
  cfg.prune_floor = prune_floor;
  cfg.threads = threads;
  td::TrainStats stats;
  td::JointParams joint = td::train_bilexical(tagged, cfg, &stats);
  joint.class_names = lm.lexicon.class_names();
  log_iterations("train-tm", stats);
  td::save_joint_params(joint, out_path);
  std::fprintf(stderr, "[train-tm] wrote %s (%zu parameters)\n", out_path.c_str(),
               joint.table.size());
  return 0;
}

int cmd_tag(const std::string& input, const std::string& lm_path,
            const std::string& out_path) {
  td::ClassLM lm = td::load_class_lm(lm_path);
  std::ifstream in(input);
  if (!in) throw td::ParseError("cannot open file: " + input);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + out_path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) throw td::ParseError(input, lineno, "empty line");
    std::vector<td::Token> words;
    for (auto t : td::split(line, ' ')) {
      if (t.empty()) throw td::ParseError(input, lineno, "empty token");
      words.emplace_back(t);
    }
    std::vector<td::ClassId> classes = td::tag(words, lm);
    write_tagged_line(out, lm.lexicon, words, classes, nullptr);
  }
  return 0;
}

int cmd_simulate(const std::string& bitext, const std::string& dict_path,
                 const std::string& out_path, const ChannelFlags& ch,
                 int threads) {
  std::vector<td::SentencePair> pairs = td::load_bitext(bitext);
  td::PhoneticDict dict = td::load_phonetic_dict(dict_path);
  std::size_t fallbacks = 0;
  for (const auto& p : pairs)
    for (const td::Token& w : p.french)
      if (dict.ensure_pronunciation(w)) ++fallbacks;
  if (fallbacks > 0)
    std::fprintf(stderr,
                 "[simulate] warning: %zu words missing from the dictionary; "
                 "letter-to-phone fallback used\n",
                 fallbacks);
  td::AcousticSimulator sim(dict);
  std::vector<td::NBestLattice> lats(pairs.size());
  td::parallel_blocks(pairs.size(), threads,
                      [&](std::size_t, std::size_t lo, std::size_t hi) {
                        for (std::size_t k = lo; k < hi; ++k) {
                          td::ChannelConfig sub = ch.config();
                          sub.seed = td::mix_seed(ch.seed, 0x5e17 + k);
                          lats[k] = sim.simulate_sentence(pairs[k].french, sub);
                        }
                      });
  td::save_lattices(lats, out_path);
  std::fprintf(stderr, "[simulate] wrote %s (%zu sentences)\n", out_path.c_str(),
               lats.size());
  return 0;
}

int cmd_decode(const std::string& bitext, const std::string& lattice_path,
               bool simulate, const std::string& dict_path,
               const ChannelFlags& ch, const std::string& lm_path,
               const std::string& tm_path, const std::string& smoothing,
               std::size_t n, double acoustic_weight,
               const std::string& out_path, const std::string& report_path,
               bool no_eval, int threads) {
  td::SmoothingConfig cfg = td::parse_smoothing_spec(smoothing);
  td::ClassLM lm = td::load_class_lm(lm_path);
  td::JointParams joint = td::load_joint_params(tm_path);
  td::TransModel model{td::to_bilexical(joint), std::move(lm)};
  std::vector<td::SentencePair> pairs = td::load_bitext(bitext);

  std::vector<td::NBestLattice> lats;
  if (simulate) {
    if (dict_path.empty())
      throw std::invalid_argument("--simulate requires --dict");
    td::PhoneticDict dict = td::load_phonetic_dict(dict_path);
    std::size_t fallbacks = 0;
    for (const auto& p : pairs)
      for (const td::Token& w : p.french)
        if (dict.ensure_pronunciation(w)) ++fallbacks;
    if (fallbacks > 0)
      std::fprintf(stderr, "[decode] warning: %zu fallback pronunciations\n",
                   fallbacks);
    td::AcousticSimulator sim(dict);
    lats.resize(pairs.size());
    td::parallel_blocks(pairs.size(), threads,
                        [&](std::size_t, std::size_t lo, std::size_t hi) {
                          for (std::size_t k = lo; k < hi; ++k) {
                            td::ChannelConfig sub = ch.config();
                            // full-vocabulary lists; stage-1 pruning applies --n
                            sub.n = dict.size();
                            sub.seed = td::mix_seed(ch.seed, 0x5e17 + k);
                            lats[k] = sim.simulate_sentence(pairs[k].french, sub);
                          }
                        });
  } else {
    if (lattice_path.empty())
      throw std::invalid_argument("either --lattice or --simulate is required");
    lats = td::load_lattices(lattice_path);
    if (lats.size() != pairs.size())
      throw std::invalid_argument("lattice/bitext sentence count mismatch");
  }

  std::vector<td::DecodeResult> results(lats.size());
  td::parallel_blocks(lats.size(), threads,
                      [&](std::size_t, std::size_t lo, std::size_t hi) {
                        for (std::size_t k = lo; k < hi; ++k) {
                          td::NBestLattice pruned = td::prune(lats[k], n);
                          results[k] = td::decode(pruned, pairs[k].english,
                                                  model, cfg, acoustic_weight);
                        }
                      });

  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + out_path);
  for (const td::DecodeResult& r : results)
    write_tagged_line(out, model.lm.lexicon, r.words, r.classes, &r.log_score);
  std::fprintf(stderr, "[decode] wrote %s (%zu sentences)\n", out_path.c_str(),
               results.size());

  if (!no_eval) {
    std::vector<std::vector<td::Token>> hyps;
    hyps.reserve(results.size());
    for (const auto& r : results) hyps.push_back(r.words);
    td::EvalReport rep = td::word_accuracy(
        hyps, french_sides(pairs), td::default_content_classes(model.lm.lexicon),
        model.lm);
    if (cfg.method == td::SmoothingConfig::Method::kInterpolate) {
      td::PerplexityResult ppl = td::perplexity(pairs, model, cfg);
      rep.perplexity = ppl.value;
      for (std::size_t s : ppl.infinite_sentences)
        std::fprintf(stderr, "[decode] sentence %zu has zero probability\n", s);
    }
    std::string report = td::format_report(rep, cfg.label());
    std::fputs(report.c_str(), stdout);
    if (!report_path.empty()) {
      std::ofstream rf(report_path, std::ios::binary);
      if (!rf) throw std::runtime_error("cannot write file: " + report_path);
      rf << report;
    }
  }
  return 0;
}

int cmd_perplexity(const std::string& bitext, const std::string& lm_path,
                   const std::string& tm_path, const std::string& smoothing) {
  td::SmoothingConfig cfg = td::parse_smoothing_spec(smoothing);
  if (cfg.method != td::SmoothingConfig::Method::kInterpolate)
    throw std::invalid_argument(
        "perplexity requires interpolate smoothing (try interp:0.85 or "
        "interp:0 for the pure language model)");
  td::ClassLM lm = td::load_class_lm(lm_path);
  td::JointParams joint = td::load_joint_params(tm_path);
  td::TransModel model{td::to_bilexical(joint), std::move(lm)};
  std::vector<td::SentencePair> pairs = td::load_bitext(bitext);
  td::PerplexityResult r = td::perplexity(pairs, model, cfg);
  for (std::size_t s : r.infinite_sentences)
    std::fprintf(stderr, "[perplexity] sentence %zu has zero probability\n", s);
  std::printf("perplexity=%s\n", std::isinf(r.value) ? "inf" : td::g17(r.value).c_str());
  return 0;
}

int cmd_eval(const std::string& hyps_path, const std::string& refs_path,
             const std::string& lm_path, const std::string& content_spec) {
  td::ClassLM lm = td::load_class_lm(lm_path);
  std::vector<td::SentencePair> refs = td::load_bitext(refs_path);
  // hypotheses: first tab-separated field of each line, tokens space-split
  std::ifstream in(hyps_path);
  if (!in) throw td::ParseError("cannot open file: " + hyps_path);
  std::vector<std::vector<td::Token>> hyps;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv(line);
    sv = sv.substr(0, sv.find('\t'));
    if (sv.empty()) throw td::ParseError(hyps_path, lineno, "empty hypothesis");
    std::vector<td::Token> words;
    for (auto t : td::split(sv, ' ')) {
      if (t.empty()) throw td::ParseError(hyps_path, lineno, "empty token");
      words.emplace_back(t);
    }
    hyps.push_back(std::move(words));
  }
  std::set<td::ClassId> content;
  if (content_spec.empty()) {
    content = td::default_content_classes(lm.lexicon);
  } else {
    for (auto name : td::split(content_spec, ',')) {
      auto id = lm.lexicon.class_id(name);
      if (!id)
        throw std::invalid_argument("unknown content class: " + std::string(name));
      content.insert(*id);
    }
  }
  td::EvalReport rep = td::word_accuracy(hyps, french_sides(refs), content, lm);
  std::fputs(td::format_report(rep, "eval").c_str(), stdout);
  return 0;
}

int cmd_synth(const td::SynthConfig& cfg, const std::string& out_dir) {
  td::SynthData data = td::synthesize(cfg);
  td::write_synth(data, out_dir);
  std::fprintf(stderr,
               "[synth] wrote %zu train / %zu test pairs, %zu-word French "
               "vocabulary, %zu classes -> %s\n",
               data.train.size(), data.test.size(), data.french_words.size(),
               data.class_words.size(), out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"translation-aided dictation decoder toolkit"};
  app.require_subcommand(1);

  // train-lm
  auto* tlm = app.add_subcommand("train-lm", "train the tri-class language model");
  std::string tlm_bitext, tlm_lexicon, tlm_out;
  std::size_t tlm_iters = 20;
  double tlm_rel_tol = 1e-4, tlm_lambda = 1e-6;
  int tlm_threads = 1;
  tlm->add_option("--bitext", tlm_bitext, "training bitext")->required();
  tlm->add_option("--lexicon", tlm_lexicon, "class lexicon")->required();
  tlm->add_option("--out", tlm_out, "output model file")->required();
  tlm->add_option("--iters", tlm_iters, "max EM iterations");
  tlm->add_option("--rel-tol", tlm_rel_tol, "relative log-likelihood tolerance");
  tlm->add_option("--ctx-lambda", tlm_lambda, "final contextual add-lambda");
  tlm->add_option("--threads", tlm_threads, "worker threads");

  // train-tm
  auto* ttm = app.add_subcommand("train-tm", "train bi-lexical translation parameters");
  std::string ttm_bitext, ttm_lm, ttm_out;
  std::size_t ttm_iters = 10, ttm_max_tokens = 40;
  double ttm_rel_tol = 1e-4, ttm_floor = 1e-9;
  int ttm_threads = 1;
  ttm->add_option("--bitext", ttm_bitext, "training bitext")->required();
  ttm->add_option("--lm", ttm_lm, "trained language model")->required();
  ttm->add_option("--out", ttm_out, "output model file")->required();
  ttm->add_option("--max-iters", ttm_iters, "max EM iterations");
  ttm->add_option("--rel-tol", ttm_rel_tol, "relative log-likelihood tolerance");
  ttm->add_option("--prune-floor", ttm_floor, "drop parameters below this");
  ttm->add_option("--max-tokens", ttm_max_tokens, "length filter bound");
  ttm->add_option("--threads", ttm_threads, "worker threads");

  // tag
  auto* tg = app.add_subcommand("tag", "Viterbi-tag French sentences");
  std::string tg_input, tg_lm, tg_out;
  tg->add_option("--input", tg_input, "one tokenized sentence per line")->required();
  tg->add_option("--lm", tg_lm, "trained language model")->required();
  tg->add_option("--out", tg_out, "output file")->required();

  // simulate
  auto* sm = app.add_subcommand("simulate", "simulate acoustic n-best lattices");
  std::string sm_bitext, sm_dict, sm_out;
  ChannelFlags sm_ch;
  int sm_threads = 1;
  sm->add_option("--bitext", sm_bitext, "reference bitext")->required();
  sm->add_option("--dict", sm_dict, "phonetic dictionary")->required();
  sm->add_option("--out", sm_out, "output lattice file")->required();
  sm_ch.attach(sm);
  sm->add_option("--threads", sm_threads, "worker threads");

  // decode
  auto* dc = app.add_subcommand("decode", "decode lattices with the translation model");
  std::string dc_bitext, dc_lattice, dc_dict, dc_lm, dc_tm, dc_out, dc_report;
  std::string dc_smoothing = "interp:0.85";
  bool dc_simulate = false, dc_no_eval = false;
  std::size_t dc_n = 20;
  double dc_aw = 1.0;
  ChannelFlags dc_ch;
  int dc_threads = 1;
  dc->add_option("--bitext", dc_bitext, "bitext (English sides are the sources)")
      ->required();
  dc->add_option("--lattice", dc_lattice, "input lattice file");
  dc->add_flag("--simulate", dc_simulate, "simulate lattices instead");
  dc->add_option("--dict", dc_dict, "phonetic dictionary (with --simulate)");
  dc->add_option("--lm", dc_lm, "trained language model")->required();
  dc->add_option("--tm", dc_tm, "trained translation model")->required();
  dc->add_option("--smoothing", dc_smoothing, "interp:W | max | etest:T");
  dc->add_option("--n", dc_n, "candidates kept per position");
  dc->add_option("--acoustic-weight", dc_aw, "acoustic score weight");
  dc->add_option("--out", dc_out, "hypotheses output file")->required();
  dc->add_option("--report", dc_report, "also write the report here");
  dc->add_flag("--no-eval", dc_no_eval, "skip evaluation against references");
  dc_ch.attach(dc, /*with_n=*/false);
  dc->add_option("--threads", dc_threads, "worker threads");

  // perplexity
  auto* pp = app.add_subcommand("perplexity", "test-set perplexity");
  std::string pp_bitext, pp_lm, pp_tm;
  std::string pp_smoothing = "interp:0.85";
  pp->add_option("--bitext", pp_bitext, "test bitext")->required();
  pp->add_option("--lm", pp_lm, "trained language model")->required();
  pp->add_option("--tm", pp_tm, "trained translation model")->required();
  pp->add_option("--smoothing", pp_smoothing, "interp:W (normalized only)");

  // eval
  auto* ev = app.add_subcommand("eval", "score a hypotheses file");
  std::string ev_hyps, ev_refs, ev_lm, ev_content;
  ev->add_option("--hyps", ev_hyps, "decode output file")->required();
  ev->add_option("--refs", ev_refs, "reference bitext")->required();
  ev->add_option("--lm", ev_lm, "language model for tagging")->required();
  ev->add_option("--content-classes", ev_content, "comma-separated class names");

  // synth
  auto* sy = app.add_subcommand("synth", "generate a synthetic corpus");
  td::SynthConfig sy_cfg;
  std::string sy_dir;
  sy->add_option("--out-dir", sy_dir, "output directory")->required();
  sy->add_option("--french-vocab", sy_cfg.french_vocab, "French vocabulary size");
  sy->add_option("--english-vocab", sy_cfg.english_vocab, "English vocabulary size");
  sy->add_option("--classes", sy_cfg.classes, "class count");
  sy->add_option("--concentration", sy_cfg.concentration,
                 "translation concentration in (0,1]");
  sy->add_option("--ambiguity", sy_cfg.ambiguity, "two-class word fraction");
  sy->add_option("--train-pairs", sy_cfg.train_pairs, "training pair count");
  sy->add_option("--test-pairs", sy_cfg.test_pairs, "test pair count");
  sy->add_option("--min-len", sy_cfg.train_min_len, "min train French length");
  sy->add_option("--max-len", sy_cfg.train_max_len, "max train French length");
  sy->add_option("--test-min-len", sy_cfg.test_min_len, "min test French length");
  sy->add_option("--test-max-len", sy_cfg.test_max_len, "max test French length");
  sy->add_option("--phones", sy_cfg.phone_symbols, "phone inventory size");
  sy->add_option("--pron-min", sy_cfg.pron_min, "min pronunciation length");
  sy->add_option("--pron-max", sy_cfg.pron_max, "max pronunciation length");
  sy->add_option("--seed", sy_cfg.seed, "corpus seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (tlm->parsed())
      return cmd_train_lm(tlm_bitext, tlm_lexicon, tlm_out, tlm_iters,
                          tlm_rel_tol, tlm_lambda, tlm_threads);
    if (ttm->parsed())
      return cmd_train_tm(ttm_bitext, ttm_lm, ttm_out, ttm_iters, ttm_rel_tol,
                          ttm_floor, ttm_max_tokens, ttm_threads);
    if (tg->parsed()) return cmd_tag(tg_input, tg_lm, tg_out);
    if (sm->parsed())
      return cmd_simulate(sm_bitext, sm_dict, sm_out, sm_ch, sm_threads);
    if (dc->parsed())
      return cmd_decode(dc_bitext, dc_lattice, dc_simulate, dc_dict, dc_ch,
                        dc_lm, dc_tm, dc_smoothing, dc_n, dc_aw, dc_out,
                        dc_report, dc_no_eval, dc_threads);
    if (pp->parsed()) return cmd_perplexity(pp_bitext, pp_lm, pp_tm, pp_smoothing);
    if (ev->parsed()) return cmd_eval(ev_hyps, ev_refs, ev_lm, ev_content);
    if (sy->parsed()) return cmd_synth(sy_cfg, sy_dir);
  } catch (const td::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::logic_error& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
