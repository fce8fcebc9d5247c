#ifndef PHRASEKIT_CONFIG_H_
#define PHRASEKIT_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "phrasekit/decoder.h"
#include "phrasekit/icl.h"

namespace phrasekit {

struct PipelineConfig {
  // [paths]. Relative paths are resolved against the config file's
  // directory.
  std::filesystem::path corpus;
  std::filesystem::path test_corpus;  // optional; otherwise corpus is split
  std::filesystem::path workdir = "work";

  // [corpus]
  std::size_t max_source_chars = 128;
  std::size_t max_target_chars = 1024;
  double train_fraction = 0.8;

  // [tokenizer]
  std::size_t vocab_size = 10000;
  bool char_mode = false;

  // [lm]
  int lm_order = 3;

  // [alignment]
  int alignment_iterations = 10;

  // [phrases]
  int max_phrase_len = 7;

  // [decoder]
  DecoderWeights weights;
  DecoderParams decoder;
  int nbest = 0;  // 0 disables the n-best file

  // [evaluation]
  double floor_value = 0.1;
  double addk_value = 1.0;
  int buckets = 5;

  // [icl]
  EndpointConfig endpoint;
  PromptTemplate prompt;
  std::size_t icl_k = 20;
  std::size_t icl_limit = 1000;

  // [run]
  std::uint64_t seed = 42;
  int jobs = 1;

  // Every setting as sorted `key = value` lines; the basis of the config
  // hash.
  std::string Canonical() const;
};

// All keys accepted in config files.
const std::vector<std::string>& ConfigKeys();

// Parses `key = value` lines with optional `[section]` headers. '#' or ';'
// starts a comment line. Values may be double-quoted, with backslash
// escapes for newline, tab, quote and backslash. Every key belongs to one
// section and may also appear before the first header. Collects every
// problem (unknown key with a suggestion, type mismatch, range violation,
// missing file) and throws ConfigError.
PipelineConfig ParseConfig(std::string_view text,
                           const std::filesystem::path& base_dir = ".");

// Throws IoError if unreadable.
PipelineConfig LoadConfig(const std::filesystem::path& path);

// Levenshtein distance over bytes.
std::size_t EditDistance(std::string_view a, std::string_view b);

}  // namespace phrasekit

#endif  // PHRASEKIT_CONFIG_H_
