#ifndef PHRASEKIT_RANDOM_H_
#define PHRASEKIT_RANDOM_H_

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace phrasekit {

// Seeded generator whose output does not depend on the standard library
// vendor: std::mt19937_64 is fully specified, the distributions are not, so
// bounded draws and shuffles are implemented here.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, bound). bound must be > 0.
  std::uint64_t Below(std::uint64_t bound);

  // Uniform in [0, 1).
  double Unit();

  template <typename T>
  void Shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(Below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace phrasekit

#endif  // PHRASEKIT_RANDOM_H_
