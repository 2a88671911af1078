#pragma once

#include <cstdint>
#include <random>

namespace oscprop {

// Deterministic stream of doubles built directly from mt19937_64 output so
// that sequences are identical across platforms and standard libraries.
class random_stream {
  public:
    explicit random_stream(std::uint64_t seed) : eng_(seed) {}

    double uniform01() { return (eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(eng_() % static_cast<std::uint64_t>(hi - lo + 1));
    }

  private:
    std::mt19937_64 eng_;
};

}  // namespace oscprop
