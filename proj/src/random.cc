#include "phrasekit/random.h"

#include <limits>
#include <stdexcept>

namespace phrasekit {

std::uint64_t SeededRng::Below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("SeededRng::Below: bound is 0");
  constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t limit = kMax - kMax % bound;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

double SeededRng::Unit() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

}  // namespace phrasekit
