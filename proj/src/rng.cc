#include "ocrlab/rng.h"

#include "ocrlab/error.h"

namespace ocrlab {

CounterRng::CounterRng(uint64_t seed, uint64_t trial, Stream stream)
    : CounterRng(seed, trial, static_cast<uint64_t>(stream)) {}

CounterRng::CounterRng(uint64_t seed, uint64_t trial, uint64_t stream) {
  uint64_t k = Mix64(seed ^ 0x6a09e667f3bcc909ULL);
  k = Mix64(k ^ (trial * 0xbb67ae8584caa73bULL + 0x3c6ef372fe94f82bULL));
  key_ = Mix64(k ^ (stream * 0xa54ff53a5f1d36f1ULL));
}

uint64_t CounterRng::UniformInt(uint64_t bound) {
  if (bound == 0) throw Error(ErrorCode::kInvalidArgument, "UniformInt bound 0");
  // Rejection keeps the draw unbiased.
  const uint64_t limit = max() - max() % bound;
  uint64_t x;
  do {
    x = NextU64();
  } while (x >= limit);
  return x % bound;
}

}  // namespace ocrlab
