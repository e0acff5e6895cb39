#include "waum/seeding.hpp"

namespace waum {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view stage, std::uint64_t index) {
    std::uint64_t h = splitmix64(master_seed);
    h = splitmix64(h ^ fnv1a(stage));
    return splitmix64(h ^ index);
}

std::size_t uniform_index(Rng& rng, std::size_t n) {
    // rejection sampling keeps the draw exactly uniform and library-independent
    const std::uint64_t range = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = Rng::max() - Rng::max() % range;
    std::uint64_t x = rng();
    while (x >= limit) x = rng();
    return static_cast<std::size_t>(x % range);
}

}  // namespace waum
