#pragma once
// Counter-keyed Gaussian streams.  Every (seed, replicate, dimension) triple
// owns an independent xoshiro256++ stream seeded through splitmix64, so
// replicate generation is reproducible and order-independent under
// parallel execution.  Normals come from Box-Muller on 53-bit uniforms;
// the draw order is part of the on-disk reproducibility contract.

#include <cmath>
#include <cstdint>

namespace fbmtk {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class NormalStream {
public:
    NormalStream(std::uint64_t seed, std::uint64_t replicate, std::uint64_t dimension) {
        std::uint64_t s = seed;
        s ^= 0xa0761d6478bd642fULL + splitmix64(s);
        s ^= replicate * 0xe7037ed1a0b428dbULL + splitmix64(s);
        s ^= dimension * 0x8ebc6af09c88c6e3ULL + splitmix64(s);
        for (int i = 0; i < 4; ++i) state_[i] = splitmix64(s);
        have_spare_ = false;
    }

    // Uniform on (0, 1]; never returns 0 so log() below is safe.
    double uniform() {
        return (static_cast<double>(next_bits() >> 11) + 1.0) * 0x1p-53;
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t next_bits() {
        std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    std::uint64_t state_[4];
    double spare_ = 0.0;
    bool have_spare_;
};

} // namespace fbmtk
