#ifndef PHRASEKIT_TESTS_ORACLES_ALIGNMENT_ORACLE_H_
#define PHRASEKIT_TESTS_ORACLES_ALIGNMENT_ORACLE_H_

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace phrasekit::oracle {

using Links = std::set<std::pair<int, int>>;

// Model 1 EM written directly from the definition with ordered maps.
// Sentences are (given, emitted); NULL is prepended to every given side.
struct Model1Result {
  std::map<std::pair<std::string, std::string>, double> prob;  // (given, emitted)
  std::vector<double> log_likelihood;  // before each iteration, then final
};

Model1Result Model1(const std::vector<std::pair<std::vector<std::string>,
                                                std::vector<std::string>>>& corpus,
                    int iterations);

// grow-diag-final-and as a textbook fixpoint over sets.
Links GrowDiagFinalAnd(int source_len, int target_len, const Links& forward,
                       const Links& backward);

// Every (src_begin, src_end, tgt_begin, tgt_end) box, half-open, with at
// least one link inside and none crossing its border, each side at most
// max_len long.
std::set<std::vector<int>> ConsistentBoxes(int source_len, int target_len, const Links& links,
                                           int max_len);

}  // namespace phrasekit::oracle

#endif  // PHRASEKIT_TESTS_ORACLES_ALIGNMENT_ORACLE_H_
