#ifndef PHRASEKIT_UNICODE_H_
#define PHRASEKIT_UNICODE_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace phrasekit {

// True if `text` is well-formed UTF-8 (no surrogates, no overlongs).
bool IsValidUtf8(std::string_view text);

// Number of Unicode scalar values. `text` must be valid UTF-8.
std::size_t CountScalars(std::string_view text);

// Splits valid UTF-8 into one string per scalar value.
std::vector<std::string> SplitScalars(std::string_view text);

// Canonical composition (NFC). Throws DataError on invalid UTF-8.
std::string NormalizeNfc(std::string_view text);

// Strips ASCII whitespace from both ends.
std::string_view TrimAscii(std::string_view text);

// Splits on runs of ASCII whitespace; no empty pieces.
std::vector<std::string> SplitWhitespace(std::string_view text);

std::string Join(const std::vector<std::string>& pieces, std::string_view sep);

}  // namespace phrasekit

#endif  // PHRASEKIT_UNICODE_H_
