#ifndef PHRASEKIT_PIPELINE_H_
#define PHRASEKIT_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "phrasekit/alignment.h"
#include "phrasekit/config.h"
#include "phrasekit/decoder.h"

namespace phrasekit {

enum class Stage {
  kPrepare,
  kTrainTokenizer,
  kTrainLm,
  kAlign,
  kExtractPhrases,
  kDecode,
  kScore,
  kAnalyze,
  kIcl,
};

std::string_view StageName(Stage stage);
std::optional<Stage> ParseStage(std::string_view name);

// prepare through analyze, plus icl when an endpoint is configured.
std::vector<Stage> DefaultStages(const PipelineConfig& config);

// Artifact locations inside a work directory.
struct WorkLayout {
  explicit WorkLayout(const std::filesystem::path& workdir);

  std::filesystem::path root;
  std::filesystem::path train_tsv, test_tsv;
  std::filesystem::path tokenizer;
  std::filesystem::path train_src_tok, train_tgt_tok, test_src_tok;
  std::filesystem::path lm;
  std::filesystem::path ttable_fwd, ttable_rev, alignment;
  std::filesystem::path phrase_table;
  std::filesystem::path hyp_tok, hyp, nbest;
  std::filesystem::path score;
  std::filesystem::path eval_dir;
  std::filesystem::path icl_hyp, icl_audit, icl_score;
  std::filesystem::path manifest, lock, stamps;
};

struct StageRecord {
  std::string name;
  std::map<std::string, std::string> inputs;   // relative path -> sha256
  std::map<std::string, std::string> outputs;  // relative path -> sha256
  double wall_seconds = 0.0;
  bool reused = false;
};

struct RunManifest {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<StageRecord> stages;

  std::string ToJson() const;
};

// Holds <workdir>/.lock for its lifetime. Throws DependencyError if another
// live process owns it; a lock left by a dead process is taken over.
class WorkdirLock {
 public:
  explicit WorkdirLock(const std::filesystem::path& workdir);
  ~WorkdirLock();
  WorkdirLock(const WorkdirLock&) = delete;
  WorkdirLock& operator=(const WorkdirLock&) = delete;

 private:
  std::filesystem::path path_;
};

// Runs `stages` in pipeline order inside config.workdir and writes
// manifest.json there. A stage whose inputs and settings hash to the value
// recorded by its previous run, and whose outputs are unchanged, is not
// re-run. Throws DependencyError naming the first missing input.
RunManifest RunPipeline(const PipelineConfig& config, std::vector<Stage> stages,
                        std::ostream* log = nullptr);

// Trains Model 1 in one direction only and writes its table plus the
// Viterbi alignments (model/aligned.fwd or model/aligned.rev) without
// symmetrizing. Bypasses the stage cache.
void AlignOneDirection(const PipelineConfig& config, Direction direction,
                       std::ostream* log = nullptr);

// One sentence per line, tokens separated by single spaces.
std::vector<std::vector<std::string>> ReadTokenized(const std::filesystem::path& path);
std::string FormatTokenized(const std::vector<std::vector<std::string>>& sentences);

// Decodes sentences on `jobs` threads; results are in input order.
std::vector<Translation> DecodeAll(const Decoder& decoder,
                                   const std::vector<std::vector<std::string>>& sources,
                                   int jobs);
std::vector<NBestList> NBestAll(const Decoder& decoder,
                                const std::vector<std::vector<std::string>>& sources,
                                int n, int jobs);

}  // namespace phrasekit

#endif  // PHRASEKIT_PIPELINE_H_
