#ifndef PHRASEKIT_HASHING_H_
#define PHRASEKIT_HASHING_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace phrasekit {

// Lowercase hex SHA-256 digests.
std::string Sha256Hex(std::string_view data);
std::string Sha256File(const std::filesystem::path& path);

std::uint32_t Crc32(std::string_view data);

// Whole-file helpers. Throw IoError.
std::string ReadFile(const std::filesystem::path& path);
void WriteFile(const std::filesystem::path& path, std::string_view data);

}  // namespace phrasekit

#endif  // PHRASEKIT_HASHING_H_
