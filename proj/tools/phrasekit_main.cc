// Command-line front end: one subcommand per pipeline stage plus `run`.

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "phrasekit/bpe.h"
#include "phrasekit/config.h"
#include "phrasekit/corpus.h"
#include "phrasekit/decoder.h"
#include "phrasekit/error.h"
#include "phrasekit/evaluation.h"
#include "phrasekit/hashing.h"
#include "phrasekit/ngram_lm.h"
#include "phrasekit/phrase_table.h"
#include "phrasekit/pipeline.h"
#include "phrasekit/unicode.h"

namespace {

using namespace phrasekit;
namespace fs = std::filesystem;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitDependency = 3;

struct GlobalFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string workdir;
  std::optional<int> jobs;
};

PipelineConfig ResolveConfig(const GlobalFlags& g) {
  PipelineConfig c = g.config.empty() ? PipelineConfig{} : LoadConfig(g.config);
  if (g.seed) c.seed = *g.seed;
  if (!g.workdir.empty()) c.workdir = fs::absolute(g.workdir).lexically_normal();
  if (g.jobs) c.jobs = *g.jobs;
  if (!c.workdir.is_absolute()) c.workdir = fs::absolute(c.workdir).lexically_normal();
  return c;
}

std::vector<std::string> Lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  return out;
}

void RunStages(const PipelineConfig& c, const std::vector<Stage>& stages) {
  RunPipeline(c, stages, &std::cerr);
}

struct DecodeFlags {
  std::string table, lm, weights, input, output, tokenizer;
  std::optional<int> nbest, stack, dl;
};

int DirectDecode(const PipelineConfig& base, const DecodeFlags& f) {
  if (f.lm.empty() || f.input.empty()) {
    throw ConfigError({"decode with --table also needs --lm and --input"});
  }
  DecoderWeights weights = base.weights;
  if (!f.weights.empty()) weights = LoadConfig(f.weights).weights;
  DecoderParams params = base.decoder;
  if (f.stack) params.stack_size = *f.stack;
  if (f.dl) params.distortion_limit = *f.dl;

  const PhraseTable table = PhraseTable::LoadBinary(f.table);
  const LanguageModel lm = LanguageModel::LoadArpa(f.lm);
  std::optional<BpeModel> tokenizer;
  if (!f.tokenizer.empty()) tokenizer = BpeModel::Load(f.tokenizer);
  const Decoder decoder(table, lm, weights, params);

  std::vector<std::vector<std::string>> sources;
  for (const auto& line : Lines(ReadFile(f.input))) {
    sources.push_back(tokenizer ? tokenizer->Encode(line).surface : SplitWhitespace(line));
  }
  auto render = [&](const Translation& t) {
    return tokenizer ? tokenizer->DecodePieces(t.tokens) : Join(t.tokens, " ");
  };
  std::string out;
  const int n = f.nbest.value_or(0);
  if (n > 0) {
    const auto lists = NBestAll(decoder, sources, n, base.jobs);
    for (std::size_t i = 0; i < lists.size(); ++i) {
      for (const auto& t : lists[i]) out += FormatNBestLine(i, render(t), t) + '\n';
    }
  } else {
    for (const auto& t : DecodeAll(decoder, sources, base.jobs)) out += render(t) + '\n';
  }
  if (f.output.empty()) {
    std::cout << out;
  } else {
    WriteFile(f.output, out);
  }
  return 0;
}

struct ScoreFlags {
  std::string smoothing = "none";
  int buckets = 5;
  std::string hyp, ref, src, outdir;
};

int DirectScore(const ScoreFlags& f) {
  if (f.ref.empty()) throw ConfigError({"score with --hyp also needs --ref"});
  const Smoothing smoothing = Smoothing::Parse(f.smoothing);
  const auto hyp_lines = Lines(ReadFile(f.hyp));
  const auto ref_lines = Lines(ReadFile(f.ref));
  if (hyp_lines.size() != ref_lines.size()) {
    throw DataError("--hyp has " + std::to_string(hyp_lines.size()) + " lines, --ref has " +
                    std::to_string(ref_lines.size()));
  }
  std::vector<std::vector<std::string>> hyps, refs;
  for (const auto& l : hyp_lines) hyps.push_back(SplitWhitespace(l));
  for (const auto& l : ref_lines) refs.push_back(SplitWhitespace(l));
  const BleuResult corpus = BleuCorpus(hyps, refs, smoothing);
  double mean = 0.0;
  for (std::size_t i = 0; i < hyps.size(); ++i) mean += BleuSentence(hyps[i], refs[i], smoothing).score;
  mean /= static_cast<double>(hyps.size());
  std::printf("smoothing %s\ncorpus_bleu %.4f\nmean_sentence_bleu %.4f\n",
              smoothing.ToString().c_str(), corpus.score, mean);
  std::printf("precisions %.6f %.6f %.6f %.6f\nbrevity_penalty %.6f\n", corpus.precisions[0],
              corpus.precisions[1], corpus.precisions[2], corpus.precisions[3],
              corpus.brevity_penalty);

  if (!f.src.empty()) {
    const auto src_lines = Lines(ReadFile(f.src));
    if (src_lines.size() != hyps.size()) throw DataError("--src and --hyp differ in length");
    std::vector<std::uint64_t> ids;
    std::vector<std::size_t> lengths;
    for (std::size_t i = 0; i < src_lines.size(); ++i) {
      ids.push_back(i);
      lengths.push_back(CountScalars(NormalizeNfc(TrimAscii(src_lines[i]))));
    }
    const EvaluationReport report = Evaluate(ids, lengths, hyps, refs, f.buckets);
    if (!f.outdir.empty()) {
      EmitReport(report, f.outdir);
    } else {
      std::cout << SummaryText(report);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"phrasekit: phrase-based translation toolkit"};
  app.require_subcommand(1);
  GlobalFlags g;
  app.add_option("--config", g.config, "Pipeline config file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Override the global seed");
  app.add_option("--workdir", g.workdir, "Override the work directory");
  app.add_option("--jobs", g.jobs, "Decoder threads")->check(CLI::PositiveNumber);
  app.fallthrough();

  std::optional<std::size_t> max_src, max_tgt;
  std::optional<double> train_fraction;
  auto* prepare = app.add_subcommand("prepare", "Normalize, filter and split the corpus");
  prepare->add_option("--max-src-chars", max_src, "Source length limit")
      ->check(CLI::PositiveNumber);
  prepare->add_option("--max-tgt-chars", max_tgt, "Target length limit")
      ->check(CLI::PositiveNumber);
  prepare->add_option("--train-fraction", train_fraction, "Share of pairs used for training")
      ->check(CLI::Range(0.0, 1.0));

  std::optional<std::size_t> vocab_size;
  bool char_mode = false;
  std::vector<std::string> tok_inputs;
  std::string tok_out;
  auto* train_tok =
      app.add_subcommand("train-tokenizer", "Learn the joint BPE (or character) model");
  train_tok->add_option("--vocab-size", vocab_size, "Target vocabulary size")
      ->check(CLI::Range(std::size_t{4}, std::size_t{100000000}));
  train_tok->add_flag("--char-mode", char_mode, "Character tokenizer, no merges");
  train_tok->add_option("--input", tok_inputs, "Train on these text files instead")
      ->check(CLI::ExistingFile);
  train_tok->add_option("--out", tok_out, "Model file for --input");

  std::optional<int> lm_order;
  std::string lm_in, lm_out;
  auto* train_lm = app.add_subcommand("train-lm", "Estimate the target n-gram model");
  train_lm->add_option("--order", lm_order, "N-gram order")->check(CLI::Range(1, 10));
  train_lm->add_option("--in", lm_in, "Train on this tokenized file instead")
      ->check(CLI::ExistingFile);
  train_lm->add_option("--out", lm_out, "ARPA file for --in");

  std::optional<int> max_len;
  auto* extract = app.add_subcommand("extract-phrases", "Build the binary phrase table");
  extract->add_option("--max-len", max_len, "Maximum phrase length")->check(CLI::Range(1, 32));

  auto* analyze = app.add_subcommand("analyze", "Length-bucket report over sentence scores");

  std::optional<int> align_iters;
  std::string align_dir = "both";
  auto* align = app.add_subcommand("align", "Model 1 alignment; both directions are symmetrized");
  align->add_option("--iters", align_iters, "EM iterations")->check(CLI::Range(1, 1000));
  align->add_option("--dir", align_dir, "fwd | rev | both")
      ->check(CLI::IsMember({"fwd", "rev", "both"}));

  DecodeFlags df;
  auto* decode = app.add_subcommand("decode", "Translate the test set, or --input with --table");
  decode->add_option("--table", df.table, "Binary phrase table");
  decode->add_option("--lm", df.lm, "ARPA language model");
  decode->add_option("--weights", df.weights, "Config fragment with weight_* keys");
  decode->add_option("--tokenizer", df.tokenizer, "Tokenizer model for raw --input text");
  decode->add_option("--input", df.input, "Source sentences, one per line");
  decode->add_option("--output", df.output, "Output file (default stdout)");
  decode->add_option("--nbest", df.nbest, "N-best size")->check(CLI::NonNegativeNumber);
  decode->add_option("--stack", df.stack, "Stack size")->check(CLI::PositiveNumber);
  decode->add_option("--dl", df.dl, "Distortion limit, -1 for none")->check(CLI::Range(-1, 1000));

  ScoreFlags sf;
  auto* score = app.add_subcommand("score", "BLEU of the test output, or of --hyp against --ref");
  score->add_option("--smoothing", sf.smoothing, "none | floor[=f] | addk[=k]");
  score->add_option("--buckets", sf.buckets, "Length buckets")->check(CLI::Range(2, 100));
  score->add_option("--hyp", sf.hyp, "Hypotheses, one per line");
  score->add_option("--ref", sf.ref, "References, one per line");
  score->add_option("--src", sf.src, "Sources, for the length report");
  score->add_option("--outdir", sf.outdir, "Write CSV report files here");

  std::string endpoint, model, template_file;
  std::optional<std::size_t> k, limit;
  auto* icl = app.add_subcommand("icl", "Few-shot translation through an HTTP endpoint");
  icl->add_option("--endpoint", endpoint, "Base URL, e.g. http://127.0.0.1:8000/v1");
  icl->add_option("--model", model, "Model name sent with each request");
  icl->add_option("--k", k, "Exemplars per prompt");
  icl->add_option("--limit", limit, "Maximum test sentences")->check(CLI::PositiveNumber);
  icl->add_option("--template", template_file, "File holding the prompt template")
      ->check(CLI::ExistingFile);

  std::string stage_list;
  auto* run = app.add_subcommand("run", "Run several stages in order");
  run->add_option("--stages", stage_list, "Comma-separated stages (default: all)");

  std::string tok_model, tok_input;
  auto* tokenize = app.add_subcommand("tokenize", "Print the pieces of each input line");
  tokenize->add_option("--model", tok_model, "Tokenizer model")->required();
  tokenize->add_option("--input", tok_input, "Text file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (tokenize->parsed()) {
      const BpeModel m = BpeModel::Load(tok_model);
      for (const auto& line : Lines(ReadFile(tok_input))) {
        std::cout << Join(m.Encode(line).surface, " ") << '\n';
      }
      return 0;
    }
    PipelineConfig config = ResolveConfig(g);
    if (prepare->parsed()) {
      if (max_src) config.max_source_chars = *max_src;
      if (max_tgt) config.max_target_chars = *max_tgt;
      if (train_fraction) config.train_fraction = *train_fraction;
      RunStages(config, {Stage::kPrepare});
    } else if (train_tok->parsed()) {
      if (vocab_size) config.vocab_size = *vocab_size;
      if (char_mode) config.char_mode = true;
      if (tok_inputs.empty()) {
        RunStages(config, {Stage::kTrainTokenizer});
        return 0;
      }
      if (tok_out.empty()) throw ConfigError({"train-tokenizer --input also needs --out"});
      std::vector<std::string> lines;
      for (const auto& f : tok_inputs) {
        for (auto& l : Lines(ReadFile(f))) lines.push_back(NormalizeNfc(l));
      }
      const BpeModel m = config.char_mode ? TrainCharacterModel(lines)
                                          : TrainBpe(lines, config.vocab_size);
      m.Save(tok_out);
    } else if (train_lm->parsed()) {
      if (lm_order) config.lm_order = *lm_order;
      if (lm_in.empty()) {
        RunStages(config, {Stage::kTrainLm});
        return 0;
      }
      if (lm_out.empty()) throw ConfigError({"train-lm --in also needs --out"});
      TrainLm(ReadTokenized(lm_in), config.lm_order).SaveArpa(lm_out);
    } else if (extract->parsed()) {
      if (max_len) config.max_phrase_len = *max_len;
      RunStages(config, {Stage::kExtractPhrases});
    } else if (analyze->parsed()) {
      RunStages(config, {Stage::kAnalyze});
    } else if (align->parsed()) {
      if (align_iters) config.alignment_iterations = *align_iters;
      if (align_dir == "both") {
        RunStages(config, {Stage::kAlign});
      } else {
        AlignOneDirection(config, align_dir == "fwd" ? Direction::kForward : Direction::kReverse,
                          &std::cerr);
      }
    } else if (decode->parsed()) {
      if (!df.table.empty()) return DirectDecode(config, df);
      if (df.nbest) config.nbest = *df.nbest;
      if (df.stack) config.decoder.stack_size = *df.stack;
      if (df.dl) config.decoder.distortion_limit = *df.dl;
      if (!df.weights.empty()) config.weights = LoadConfig(df.weights).weights;
      RunStages(config, {Stage::kDecode});
    } else if (score->parsed()) {
      if (!sf.hyp.empty()) return DirectScore(sf);
      const Smoothing s = Smoothing::Parse(sf.smoothing);
      if (s.mode == Smoothing::Mode::kFloor) config.floor_value = s.value;
      if (s.mode == Smoothing::Mode::kAddK) config.addk_value = s.value;
      config.buckets = sf.buckets;
      RunStages(config, {Stage::kScore});
      std::cout << ReadFile(WorkLayout(config.workdir).score);
    } else if (icl->parsed()) {
      if (!endpoint.empty()) config.endpoint.base_url = endpoint;
      if (!model.empty()) config.endpoint.model = model;
      if (k) config.icl_k = *k;
      if (limit) config.icl_limit = *limit;
      if (!template_file.empty()) {
        std::string t = ReadFile(template_file);
        while (!t.empty() && (t.back() == '\n' || t.back() == '\r')) t.pop_back();
        config.prompt.pattern = t;
        config.prompt.Validate();
      }
      RunStages(config, {Stage::kIcl});
      std::cout << ReadFile(WorkLayout(config.workdir).icl_score);
    } else if (run->parsed()) {
      std::vector<Stage> stages;
      if (stage_list.empty()) {
        stages = DefaultStages(config);
      } else {
        std::stringstream in(stage_list);
        for (std::string name; std::getline(in, name, ',');) {
          const auto s = ParseStage(std::string(TrimAscii(name)));
          if (!s) throw ConfigError({"unknown stage '" + name + "'"});
          stages.push_back(*s);
        }
      }
      RunStages(config, stages);
    }
    return 0;
  } catch (const ConfigError& e) {
    for (const auto& p : e.problems()) std::cerr << "config error: " << p << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DependencyError& e) {
    std::cerr << "dependency error: " << e.what() << '\n';
    return kExitDependency;
  } catch (const AuthError& e) {
    std::cerr << "authentication error: " << e.what() << '\n';
    return kExitDependency;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
}
