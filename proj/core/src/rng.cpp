#include "occuflux/rng.hpp"

namespace occuflux {

namespace {

// splitmix64 finalizer; decorrelates consecutive stream numbers.
std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t base_seed, std::uint64_t stream) {
    std::uint64_t h = splitmix64(base_seed);
    h ^= splitmix64(stream + 0x632be59bd9b4e019ull);
    return splitmix64(h);
}

}  // namespace occuflux
