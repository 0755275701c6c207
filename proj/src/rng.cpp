#include "cvb/rng.hpp"

#include <algorithm>
#include <cmath>

#include "cvb/mathutil.hpp"

namespace cvb {

namespace {
constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;
}

std::uint64_t CounterRng::mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream_id)
    : state0_(mix64(mix64(seed) ^ stream_id)) {}

std::uint64_t CounterRng::next_u64() {
    return mix64(state0_ + (++counter_) * kGamma);
}

double CounterRng::next_uniform() {
    // 53-bit mantissa; zero mapped to 2^-53 to stay inside (0,1).
    const double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return u > 0.0 ? u : 0x1.0p-53;
}

double CounterRng::next_normal() {
    return normal_quantile(next_uniform());
}

int CounterRng::next_index(int k) {
    const int i = static_cast<int>(next_uniform() * k);
    return std::min(i, k - 1);
}

}  // namespace cvb
