#pragma once

#include <cstdint>
#include <vector>

namespace texflow {

// splitmix64; fully specified so results are identical across platforms
// (std::uniform_real_distribution is not).
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0,1)
    double uniform() { return (next() >> 11) * (1.0 / 9007199254740992.0); }

    // uniform in [lo,hi)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    uint64_t below(uint64_t n) { return n ? next() % n : 0; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i)
            std::swap(v[i - 1], v[below(i)]);
    }

private:
    uint64_t state_;
};

// Decorrelated sub-seed for a named stream of a master seed.
inline uint64_t derive_seed(uint64_t master, uint64_t stream) {
    Rng r(master ^ (0xd1b54a32d192ed03ULL * (stream + 1)));
    return r.next();
}

} // namespace texflow
