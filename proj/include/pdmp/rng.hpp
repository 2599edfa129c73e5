#pragma once

#include <cmath>
#include <cstdint>

namespace pdmp {

// SplitMix64 (Steele/Lea/Flood; Vigna's fixed-increment variant). One
// invocation of mix() is also used as the stream-derivation hash below.
struct SplitMix64 {
    std::uint64_t state = 0;

    std::uint64_t next() {
        std::uint64_t z = (state += UINT64_C(0x9E3779B97F4A7C15));
        z = (z ^ (z >> 30)) * UINT64_C(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)) * UINT64_C(0x94D049BB133111EB);
        return z ^ (z >> 31);
    }
};

// Independent stream addressed by (master seed, stream id). Every
// trajectory gets its own id, so ensembles reproduce bit-exactly no
// matter how work is scheduled across threads.
class RngStream {
public:
    RngStream() = default;

    RngStream(std::uint64_t master_seed, std::uint64_t stream_id) {
        SplitMix64 a{master_seed};
        const std::uint64_t h0 = a.next();
        SplitMix64 b{stream_id ^ UINT64_C(0xA3EC4E1DA624B6C5)};
        const std::uint64_t h1 = b.next();
        gen_.state = h0 ^ (h1 + UINT64_C(0x9E3779B97F4A7C15) + (h0 << 6) + (h0 >> 2));
    }

    std::uint64_t next_u64() { return gen_.next(); }

    // Uniform on the open interval (0,1): 53-bit lattice shifted by half
    // a step, so neither endpoint is representable.
    double uniform01() {
        const std::uint64_t bits = gen_.next() >> 11;
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    }

    // Inverse-CDF exponential from a single uniform: -ln(1-U)/lambda.
    double exponential(double lambda) { return -std::log1p(-uniform01()) / lambda; }

private:
    SplitMix64 gen_;
};

}  // namespace pdmp
