#ifndef OCRLAB_RNG_H_
#define OCRLAB_RNG_H_

#include <cstdint>
#include <limits>

namespace ocrlab {

// Stream identifiers used to key independent random streams for one trial.
enum class Stream : uint64_t {
  kValues = 1,
  kOrder = 2,
  kPolicy = 3,
  kConstruction = 4,
  kAux = 5,
};

// SplitMix64 finalizer.
constexpr uint64_t Mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based generator keyed by (seed, trial, stream). The i-th output is a
// pure function of the key and i, so draws can be addressed directly
// (`U64At`) and results never depend on the order in which trials run.
// Also satisfies UniformRandomBitGenerator for use with <algorithm>.
class CounterRng {
 public:
  using result_type = uint64_t;

  CounterRng(uint64_t seed, uint64_t trial, Stream stream);
  CounterRng(uint64_t seed, uint64_t trial, uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() { return NextU64(); }

  uint64_t NextU64() { return U64At(counter_++); }
  // Uniform double in [0, 1) with 53 random bits.
  double Uniform() { return ToUnit(NextU64()); }
  // Unbiased integer in [0, bound); bound must be positive.
  uint64_t UniformInt(uint64_t bound);

  uint64_t U64At(uint64_t index) const {
    return Mix64(key_ + kGolden * (index + 1));
  }
  double UniformAt(uint64_t index) const { return ToUnit(U64At(index)); }

  uint64_t key() const { return key_; }
  uint64_t counter() const { return counter_; }

  static double ToUnit(uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
  }

 private:
  static constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  uint64_t key_;
  uint64_t counter_ = 0;
};

}  // namespace ocrlab

#endif  // OCRLAB_RNG_H_
