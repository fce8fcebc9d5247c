#include "phrasekit/pipeline.h"

#include <signal.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "phrasekit/alignment.h"
#include "phrasekit/bpe.h"
#include "phrasekit/corpus.h"
#include "phrasekit/error.h"
#include "phrasekit/evaluation.h"
#include "phrasekit/hashing.h"
#include "phrasekit/icl.h"
#include "phrasekit/ngram_lm.h"
#include "phrasekit/phrase_table.h"
#include "phrasekit/unicode.h"

namespace phrasekit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr Stage kAllStages[] = {
    Stage::kPrepare, Stage::kTrainTokenizer, Stage::kTrainLm,
    Stage::kAlign,   Stage::kExtractPhrases, Stage::kDecode,
    Stage::kScore,   Stage::kAnalyze,        Stage::kIcl,
};

struct StagePlan {
  std::vector<fs::path> inputs;
  std::vector<fs::path> outputs;
  std::vector<std::string> settings;
  bool cacheable = true;
};

StagePlan Plan(Stage stage, const PipelineConfig& c, const WorkLayout& w) {
  StagePlan p;
  switch (stage) {
    case Stage::kPrepare:
      p.inputs = {c.corpus};
      if (!c.test_corpus.empty()) p.inputs.push_back(c.test_corpus);
      p.outputs = {w.train_tsv, w.test_tsv};
      p.settings = {"max_source_chars", "max_target_chars", "train_fraction", "seed"};
      break;
    case Stage::kTrainTokenizer:
      p.inputs = {w.train_tsv, w.test_tsv};
      p.outputs = {w.tokenizer, w.train_src_tok, w.train_tgt_tok, w.test_src_tok};
      p.settings = {"vocab_size", "char_mode"};
      break;
    case Stage::kTrainLm:
      p.inputs = {w.train_tgt_tok};
      p.outputs = {w.lm};
      p.settings = {"lm_order"};
      break;
    case Stage::kAlign:
      p.inputs = {w.train_src_tok, w.train_tgt_tok};
      p.outputs = {w.ttable_fwd, w.ttable_rev, w.alignment};
      p.settings = {"alignment_iterations"};
      break;
    case Stage::kExtractPhrases:
      p.inputs = {w.train_src_tok, w.train_tgt_tok, w.alignment, w.ttable_fwd, w.ttable_rev};
      p.outputs = {w.phrase_table};
      p.settings = {"max_phrase_len"};
      break;
    case Stage::kDecode:
      p.inputs = {w.phrase_table, w.lm, w.tokenizer, w.test_src_tok};
      p.outputs = {w.hyp_tok, w.hyp};
      if (c.nbest > 0) p.outputs.push_back(w.nbest);
      p.settings = {"stack_size",    "distortion_limit",  "recombine",
                    "table_limit",   "copy_penalty",      "nbest",
                    "weight_lm",     "weight_phi_ts",     "weight_phi_st",
                    "weight_lex_ts", "weight_lex_st",     "weight_distortion",
                    "weight_word_penalty"};
      break;
    case Stage::kScore:
      p.inputs = {w.hyp, w.test_tsv};
      p.outputs = {w.score};
      p.settings = {"smoothing_floor", "smoothing_addk"};
      break;
    case Stage::kAnalyze:
      p.inputs = {w.hyp, w.test_tsv};
      p.outputs = {w.eval_dir / "sentences.csv", w.eval_dir / "buckets.csv",
                   w.eval_dir / "summary.txt"};
      p.settings = {"smoothing_floor", "smoothing_addk", "buckets"};
      break;
    case Stage::kIcl:
      p.inputs = {w.train_tsv, w.test_tsv};
      p.outputs = {w.icl_hyp, w.icl_audit, w.icl_score};
      p.cacheable = false;
      break;
  }
  return p;
}

std::string Relative(const fs::path& p, const WorkLayout& w) {
  const fs::path rel = p.lexically_relative(w.root);
  if (rel.empty() || *rel.begin() == "..") return p.string();
  return rel.generic_string();
}

std::string ProducerOf(const fs::path& p, const PipelineConfig& c, const WorkLayout& w) {
  for (Stage s : kAllStages) {
    for (const auto& out : Plan(s, c, w).outputs) {
      if (out == p) return std::string(StageName(s));
    }
  }
  return "";
}

std::vector<std::string> ReadLines(const fs::path& path) {
  const std::string text = ReadFile(path);
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    std::string line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    pos = nl + 1;
  }
  return lines;
}

std::vector<std::vector<std::string>> Sides(const ParallelCorpus& corpus, bool source) {
  std::vector<std::vector<std::string>> out;
  out.reserve(corpus.size());
  for (const auto& p : corpus.pairs) out.push_back(SplitWhitespace(source ? p.source : p.target));
  return out;
}

std::string ScoreText(const std::vector<std::vector<std::string>>& hyps,
                      const std::vector<std::vector<std::string>>& refs, const PipelineConfig& c) {
  const Smoothing modes[] = {Smoothing::None(), Smoothing::Floor(c.floor_value),
                             Smoothing::AddK(c.addk_value)};
  std::string out = "sentences: " + std::to_string(hyps.size()) + "\n";
  char buf[160];
  for (const auto& m : modes) {
    const BleuResult corpus = BleuCorpus(hyps, refs, m);
    double mean = 0.0;
    for (std::size_t i = 0; i < hyps.size(); ++i) mean += BleuSentence(hyps[i], refs[i], m).score;
    mean /= static_cast<double>(hyps.size());
    std::snprintf(buf, sizeof(buf), "%s corpus_bleu %.4f mean_sentence_bleu %.4f\n",
                  m.ToString().c_str(), corpus.score, mean);
    out += buf;
  }
  return out;
}

void EnsureParent(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p.parent_path(), ec);
  if (ec) throw IoError("cannot create " + p.parent_path().string() + ": " + ec.message());
}

void Write(const fs::path& p, std::string_view data) {
  EnsureParent(p);
  WriteFile(p, data);
}

void RunPrepare(const PipelineConfig& c, const WorkLayout& w) {
  const ParallelCorpus all =
      FilterByLength(LoadParallel(c.corpus), c.max_source_chars, c.max_target_chars);
  CorpusSplit split;
  if (c.test_corpus.empty()) {
    split = Split(all, c.train_fraction, c.seed);
  } else {
    split.train = all;
    split.test =
        FilterByLength(LoadParallel(c.test_corpus), c.max_source_chars, c.max_target_chars);
  }
  if (split.train.empty() || split.test.empty()) {
    throw DataError("prepare: train or test set is empty after filtering");
  }
  Write(w.train_tsv, SerializeParallel(split.train));
  Write(w.test_tsv, SerializeParallel(split.test));
}

std::vector<std::vector<std::string>> EncodeAll(const BpeModel& model,
                                                const std::vector<std::string>& lines) {
  std::vector<std::vector<std::string>> out;
  out.reserve(lines.size());
  for (const auto& l : lines) out.push_back(model.Encode(l).surface);
  return out;
}

void RunTrainTokenizer(const PipelineConfig& c, const WorkLayout& w, std::ostream* log) {
  const ParallelCorpus train = LoadParallel(w.train_tsv);
  const ParallelCorpus test = LoadParallel(w.test_tsv);
  std::vector<std::string> src, tgt, test_src;
  for (const auto& p : train.pairs) {
    src.push_back(p.source);
    tgt.push_back(p.target);
  }
  for (const auto& p : test.pairs) test_src.push_back(p.source);
  std::vector<std::string> joint = src;
  joint.insert(joint.end(), tgt.begin(), tgt.end());

  BpeModel model;
  if (c.char_mode) {
    model = TrainCharacterModel(joint);
  } else {
    const std::size_t floor = CharacterVocabSize(joint);
    if (c.vocab_size < floor && log) {
      *log << "warning: vocab_size " << c.vocab_size << " is below the " << floor
           << " pieces needed for the characters alone; using " << floor << "\n";
    }
    model = TrainBpe(joint, std::max(c.vocab_size, floor));
  }
  Write(w.tokenizer, model.Serialize());
  Write(w.train_src_tok, FormatTokenized(EncodeAll(model, src)));
  Write(w.train_tgt_tok, FormatTokenized(EncodeAll(model, tgt)));
  Write(w.test_src_tok, FormatTokenized(EncodeAll(model, test_src)));
}

std::vector<TokenizedPair> LoadPairs(const WorkLayout& w) {
  auto src = ReadTokenized(w.train_src_tok);
  auto tgt = ReadTokenized(w.train_tgt_tok);
  if (src.size() != tgt.size()) throw DataError("tokenized source and target differ in length");
  std::vector<TokenizedPair> pairs(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    pairs[i].source = std::move(src[i]);
    pairs[i].target = std::move(tgt[i]);
  }
  return pairs;
}

void RunAlign(const PipelineConfig& c, const WorkLayout& w) {
  const auto pairs = LoadPairs(w);
  const TranslationTable fwd = TrainModel1(pairs, c.alignment_iterations, Direction::kForward);
  const TranslationTable rev = TrainModel1(pairs, c.alignment_iterations, Direction::kReverse);
  std::string lines;
  for (const auto& p : pairs) {
    lines += FormatPharaoh(Symmetrize(ViterbiAlign(fwd, p), ViterbiAlign(rev, p)));
    lines += '\n';
  }
  Write(w.ttable_fwd, fwd.Serialize());
  Write(w.ttable_rev, rev.Serialize());
  Write(w.alignment, lines);
}

void RunExtract(const PipelineConfig& c, const WorkLayout& w) {
  const auto pairs = LoadPairs(w);
  const auto lines = ReadLines(w.alignment);
  if (lines.size() != pairs.size()) throw DataError("alignment file does not match the corpus");
  const TranslationTable fwd = TranslationTable::Load(w.ttable_fwd);
  const TranslationTable rev = TranslationTable::Load(w.ttable_rev);
  PhraseTableBuilder builder(fwd, rev);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    const Alignment al = ParsePharaoh(lines[i], static_cast<int>(p.source.size()),
                                      static_cast<int>(p.target.size()));
    for (const auto& span : ExtractPhrases(al, c.max_phrase_len)) {
      builder.Add(MakeOccurrence(p, al, span));
    }
  }
  Write(w.phrase_table, builder.Build().SerializeBinary());
}

void RunDecode(const PipelineConfig& c, const WorkLayout& w) {
  const PhraseTable table = PhraseTable::LoadBinary(w.phrase_table);
  const LanguageModel lm = LanguageModel::LoadArpa(w.lm);
  const BpeModel tokenizer = BpeModel::Load(w.tokenizer);
  const auto sources = ReadTokenized(w.test_src_tok);
  const Decoder decoder(table, lm, c.weights, c.decoder);

  std::string tok, text;
  const auto best = DecodeAll(decoder, sources, c.jobs);
  for (const auto& t : best) {
    tok += Join(t.tokens, " ") + '\n';
    text += tokenizer.DecodePieces(t.tokens) + '\n';
  }
  Write(w.hyp_tok, tok);
  Write(w.hyp, text);
  if (c.nbest > 0) {
    std::string nbest;
    const auto lists = NBestAll(decoder, sources, c.nbest, c.jobs);
    for (std::size_t i = 0; i < lists.size(); ++i) {
      for (const auto& t : lists[i]) {
        nbest += FormatNBestLine(i, tokenizer.DecodePieces(t.tokens), t) + '\n';
      }
    }
    Write(w.nbest, nbest);
  }
}

struct Scored {
  ParallelCorpus test;
  std::vector<std::vector<std::string>> hyps;
  std::vector<std::vector<std::string>> refs;
};

Scored LoadScored(const WorkLayout& w) {
  Scored s;
  s.test = LoadParallel(w.test_tsv);
  const auto lines = ReadLines(w.hyp);
  if (lines.size() != s.test.size()) {
    throw DataError("hypotheses (" + std::to_string(lines.size()) + ") and test pairs (" +
                    std::to_string(s.test.size()) + ") differ in number");
  }
  for (const auto& l : lines) s.hyps.push_back(SplitWhitespace(l));
  s.refs = Sides(s.test, false);
  return s;
}

void RunScore(const PipelineConfig& c, const WorkLayout& w) {
  const Scored s = LoadScored(w);
  Write(w.score, ScoreText(s.hyps, s.refs, c));
}

void RunAnalyze(const PipelineConfig& c, const WorkLayout& w) {
  const Scored s = LoadScored(w);
  std::vector<std::uint64_t> ids;
  std::vector<std::size_t> lengths;
  for (const auto& p : s.test.pairs) {
    ids.push_back(p.id);
    lengths.push_back(CountScalars(p.source));
  }
  const EvaluationReport report =
      Evaluate(ids, lengths, s.hyps, s.refs, c.buckets, Smoothing::Floor(c.floor_value),
               Smoothing::AddK(c.addk_value));
  EmitReport(report, w.eval_dir);
}

void RunIclStage(const PipelineConfig& c, const WorkLayout& w, std::ostream* log) {
  if (c.endpoint.base_url.empty() || c.endpoint.model.empty()) {
    throw ConfigError({"the icl stage needs 'endpoint' and 'model' in [icl]"});
  }
  const ParallelCorpus train = LoadParallel(w.train_tsv);
  const ParallelCorpus test = LoadParallel(w.test_tsv);
  const auto exemplars = SampleExemplars(train, c.icl_k, c.seed);
  const std::size_t n = std::min(c.icl_limit, test.size());
  std::vector<std::string> prompts;
  for (std::size_t i = 0; i < n; ++i) {
    prompts.push_back(BuildPrompt(c.prompt, exemplars, test.pairs[i].source));
  }
  const IclResult result = RunIcl(c.endpoint, prompts, c.icl_limit);
  std::string hyp_text;
  std::vector<std::vector<std::string>> hyps, refs;
  std::size_t failures = 0;
  for (std::size_t i = 0; i < result.hypotheses.size(); ++i) {
    std::string h = result.hypotheses[i];
    std::replace(h.begin(), h.end(), '\n', ' ');
    hyp_text += h + '\n';
    hyps.push_back(SplitWhitespace(h));
    refs.push_back(SplitWhitespace(test.pairs[i].target));
    if (!result.records[i].error.empty()) ++failures;
  }
  if (failures && log) *log << "icl: " << failures << " request(s) without a hypothesis\n";
  Write(w.icl_hyp, hyp_text);
  Write(w.icl_audit, AuditJsonl(result, c.endpoint));
  Write(w.icl_score, ScoreText(hyps, refs, c));
}

void Execute(Stage stage, const PipelineConfig& c, const WorkLayout& w, std::ostream* log) {
  switch (stage) {
    case Stage::kPrepare: return RunPrepare(c, w);
    case Stage::kTrainTokenizer: return RunTrainTokenizer(c, w, log);
    case Stage::kTrainLm: {
      const LanguageModel lm = TrainLm(ReadTokenized(w.train_tgt_tok), c.lm_order);
      return Write(w.lm, lm.ToArpa());
    }
    case Stage::kAlign: return RunAlign(c, w);
    case Stage::kExtractPhrases: return RunExtract(c, w);
    case Stage::kDecode: return RunDecode(c, w);
    case Stage::kScore: return RunScore(c, w);
    case Stage::kAnalyze: return RunAnalyze(c, w);
    case Stage::kIcl: return RunIclStage(c, w, log);
  }
}

std::map<std::string, std::string> SettingValues(const PipelineConfig& c) {
  std::map<std::string, std::string> values;
  std::size_t pos = 0;
  const std::string canonical = c.Canonical();
  while (pos < canonical.size()) {
    const auto nl = canonical.find('\n', pos);
    const std::string line = canonical.substr(pos, nl - pos);
    const auto eq = line.find(" = ");
    values[line.substr(0, eq)] = line.substr(eq + 3);
    pos = nl + 1;
  }
  return values;
}

std::map<std::string, std::string> HashAll(const std::vector<fs::path>& files,
                                           const WorkLayout& w) {
  std::map<std::string, std::string> out;
  for (const auto& f : files) out[Relative(f, w)] = Sha256File(f);
  return out;
}

}  // namespace

std::string_view StageName(Stage stage) {
  switch (stage) {
    case Stage::kPrepare: return "prepare";
    case Stage::kTrainTokenizer: return "train-tokenizer";
    case Stage::kTrainLm: return "train-lm";
    case Stage::kAlign: return "align";
    case Stage::kExtractPhrases: return "extract-phrases";
    case Stage::kDecode: return "decode";
    case Stage::kScore: return "score";
    case Stage::kAnalyze: return "analyze";
    case Stage::kIcl: return "icl";
  }
  return "";
}

std::optional<Stage> ParseStage(std::string_view name) {
  for (Stage s : kAllStages) {
    if (StageName(s) == name) return s;
  }
  return std::nullopt;
}

std::vector<Stage> DefaultStages(const PipelineConfig& config) {
  std::vector<Stage> out(std::begin(kAllStages), std::end(kAllStages) - 1);
  if (!config.endpoint.base_url.empty()) out.push_back(Stage::kIcl);
  return out;
}

WorkLayout::WorkLayout(const fs::path& workdir)
    : root(workdir),
      train_tsv(workdir / "data" / "train.tsv"),
      test_tsv(workdir / "data" / "test.tsv"),
      tokenizer(workdir / "model" / "tokenizer.model"),
      train_src_tok(workdir / "data" / "train.src.tok"),
      train_tgt_tok(workdir / "data" / "train.tgt.tok"),
      test_src_tok(workdir / "data" / "test.src.tok"),
      lm(workdir / "model" / "lm.arpa"),
      ttable_fwd(workdir / "model" / "lex.fwd"),
      ttable_rev(workdir / "model" / "lex.rev"),
      alignment(workdir / "model" / "aligned.grow-diag-final-and"),
      phrase_table(workdir / "model" / "phrase-table.bin"),
      hyp_tok(workdir / "output" / "test.hyp.tok"),
      hyp(workdir / "output" / "test.hyp"),
      nbest(workdir / "output" / "test.nbest"),
      score(workdir / "eval" / "score.txt"),
      eval_dir(workdir / "eval"),
      icl_hyp(workdir / "icl" / "test.hyp"),
      icl_audit(workdir / "icl" / "audit.jsonl"),
      icl_score(workdir / "icl" / "score.txt"),
      manifest(workdir / "manifest.json"),
      lock(workdir / ".lock"),
      stamps(workdir / ".stamps") {}

std::string RunManifest::ToJson() const {
  json j;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  j["stages"] = json::array();
  for (const auto& s : stages) {
    json st;
    st["name"] = s.name;
    st["inputs"] = s.inputs;
    st["outputs"] = s.outputs;
    st["wall_seconds"] = s.wall_seconds;
    st["reused"] = s.reused;
    j["stages"].push_back(std::move(st));
  }
  return j.dump(2) + "\n";
}

WorkdirLock::WorkdirLock(const fs::path& workdir) : path_(workdir / ".lock") {
  std::error_code ec;
  fs::create_directories(workdir, ec);
  if (ec) throw IoError("cannot create " + workdir.string() + ": " + ec.message());
  for (int attempt = 0; attempt < 2; ++attempt) {
    FILE* f = std::fopen(path_.c_str(), "wx");
    if (f) {
      std::fprintf(f, "%ld\n", static_cast<long>(::getpid()));
      std::fclose(f);
      return;
    }
    long pid = 0;
    if (FILE* r = std::fopen(path_.c_str(), "r")) {
      if (std::fscanf(r, "%ld", &pid) != 1) pid = 0;
      std::fclose(r);
    }
    const bool alive = pid > 0 && (::kill(static_cast<pid_t>(pid), 0) == 0 || errno == EPERM);
    if (alive) {
      throw DependencyError("work directory " + workdir.string() + " is locked by process " +
                            std::to_string(pid));
    }
    fs::remove(path_, ec);
  }
  throw IoError("cannot create lock file " + path_.string());
}

WorkdirLock::~WorkdirLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

RunManifest RunPipeline(const PipelineConfig& config, std::vector<Stage> stages,
                        std::ostream* log) {
  const WorkLayout w(config.workdir);
  std::sort(stages.begin(), stages.end());
  stages.erase(std::unique(stages.begin(), stages.end()), stages.end());
  for (Stage s : stages) {
    if (s == Stage::kPrepare && config.corpus.empty()) {
      throw ConfigError({"the prepare stage needs 'corpus' in [paths]"});
    }
  }

  WorkdirLock lock(config.workdir);
  const auto settings = SettingValues(config);

  RunManifest manifest;
  manifest.config_hash = Sha256Hex(config.Canonical());
  manifest.seed = config.seed;

  for (Stage stage : stages) {
    const std::string name(StageName(stage));
    const StagePlan plan = Plan(stage, config, w);
    for (const auto& in : plan.inputs) {
      if (!fs::exists(in)) {
        const std::string producer = ProducerOf(in, config, w);
        throw DependencyError("stage '" + name + "' needs " + Relative(in, w) +
                              (producer.empty() ? "" : " (produced by '" + producer + "')"));
      }
    }

    StageRecord record;
    record.name = name;
    record.inputs = HashAll(plan.inputs, w);

    std::string key_text = name + "\n";
    for (const auto& k : plan.settings) key_text += k + " = " + settings.at(k) + "\n";
    for (const auto& [path, hash] : record.inputs) key_text += path + " " + hash + "\n";
    const std::string key = Sha256Hex(key_text);
    const fs::path stamp_path = w.stamps / (name + ".json");

    bool reuse = false;
    if (plan.cacheable && fs::exists(stamp_path)) {
      const json stamp = json::parse(ReadFile(stamp_path), nullptr, false);
      if (!stamp.is_discarded() && stamp.value("key", "") == key) {
        reuse = true;
        for (const auto& out : plan.outputs) {
          const std::string rel = Relative(out, w);
          const auto recorded = stamp["outputs"].find(rel);
          if (recorded == stamp["outputs"].end() || !fs::exists(out) ||
              *recorded != Sha256File(out)) {
            reuse = false;
            break;
          }
        }
      }
    }

    const auto start = std::chrono::steady_clock::now();
    if (!reuse) {
      std::error_code ec;
      fs::remove(stamp_path, ec);
      Execute(stage, config, w, log);
    }
    record.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    record.reused = reuse;
    record.outputs = HashAll(plan.outputs, w);
    if (plan.cacheable && !reuse) {
      json stamp;
      stamp["key"] = key;
      stamp["outputs"] = record.outputs;
      Write(stamp_path, stamp.dump(2) + "\n");
    }
    if (log) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.2fs", record.wall_seconds);
      *log << name << ": " << (reuse ? "up to date" : buf) << "\n";
    }
    manifest.stages.push_back(std::move(record));
  }
  Write(w.manifest, manifest.ToJson());
  return manifest;
}

std::vector<std::vector<std::string>> ReadTokenized(const fs::path& path) {
  std::vector<std::vector<std::string>> out;
  for (const auto& line : ReadLines(path)) out.push_back(SplitWhitespace(line));
  return out;
}

std::string FormatTokenized(const std::vector<std::vector<std::string>>& sentences) {
  std::string out;
  for (const auto& s : sentences) out += Join(s, " ") + '\n';
  return out;
}

namespace {

template <typename Fn>
void ParallelFor(std::size_t n, int jobs, Fn fn) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, jobs)), n);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace

void AlignOneDirection(const PipelineConfig& config, Direction direction, std::ostream* log) {
  const WorkLayout w(config.workdir);
  for (const auto& in : {w.train_src_tok, w.train_tgt_tok}) {
    if (!fs::exists(in)) {
      throw DependencyError("align needs " + fs::relative(in, w.root).string() +
                            " (produced by 'train-tokenizer')");
    }
  }
  const WorkdirLock lock(w.root);
  const auto start = std::chrono::steady_clock::now();
  const auto pairs = LoadPairs(w);
  const TranslationTable table = TrainModel1(pairs, config.alignment_iterations, direction);
  std::string lines;
  for (const auto& p : pairs) {
    lines += FormatPharaoh(ViterbiAlign(table, p));
    lines += '\n';
  }
  const bool fwd = direction == Direction::kForward;
  Write(fwd ? w.ttable_fwd : w.ttable_rev, table.Serialize());
  Write(w.root / "model" / (fwd ? "aligned.fwd" : "aligned.rev"), lines);
  if (log) {
    const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2fs", took.count());
    *log << "align (" << (fwd ? "fwd" : "rev") << "): " << buf << "\n";
  }
}

std::vector<Translation> DecodeAll(const Decoder& decoder,
                                   const std::vector<std::vector<std::string>>& sources,
                                   int jobs) {
  std::vector<Translation> out(sources.size());
  ParallelFor(sources.size(), jobs, [&](std::size_t i) { out[i] = decoder.Decode(sources[i]); });
  return out;
}

std::vector<NBestList> NBestAll(const Decoder& decoder,
                                const std::vector<std::vector<std::string>>& sources, int n,
                                int jobs) {
  std::vector<NBestList> out(sources.size());
  ParallelFor(sources.size(), jobs,
              [&](std::size_t i) { out[i] = decoder.NBest(sources[i], n); });
  return out;
}

}  // namespace phrasekit
