#pragma once

#include <cstdint>

namespace cvb {

// Counter-based generator: draw d of stream (seed, stream_id) is
// mix64(state0 + d * GAMMA), with state0 = mix64(mix64(seed) ^ stream_id)
// and mix64 the SplitMix64 finalizer. Every draw is a pure function of
// (seed, stream_id, draw index), so alternate implementations can
// reproduce the streams exactly.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t next_u64();
    double next_uniform();        // in (0, 1)
    double next_normal();         // standard normal via inverse CDF
    int next_index(int k);        // uniform over {0, ..., k-1}

    static std::uint64_t mix64(std::uint64_t z);

private:
    std::uint64_t state0_;
    std::uint64_t counter_ = 0;
};

}  // namespace cvb
