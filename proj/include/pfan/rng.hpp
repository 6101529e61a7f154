#ifndef PFAN_RNG_HPP
#define PFAN_RNG_HPP

#include <cstdint>
#include <string_view>
#include <vector>

namespace pfan {

// Counter-based generator (splitmix64 core).  The sequence depends only on
// the seed, never on platform or standard-library internals, so identical
// seeds give identical draws everywhere.  Distribution transforms are done
// by hand below for the same reason: std::normal_distribution is not
// pinned down by the standard.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), state_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform on [0,1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0,n), n >= 1.  Rejection sampling, no modulo bias.
    int uniform_int(int n);

    // Standard normal via Box-Muller; the partner draw is cached.
    double normal();

    // In-place Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
            int j = uniform_int(i + 1);
            std::swap(v[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(j)]);
        }
    }

    // Independent sub-stream named by purpose ("data", "init", "shuffle", ...).
    // Derived from the original seed, not the current position, so streams do
    // not depend on draw order elsewhere.
    Rng fork(std::string_view name) const { return Rng(derive_seed(seed_, name)); }

    static std::uint64_t derive_seed(std::uint64_t base, std::string_view name);

private:
    std::uint64_t seed_;
    std::uint64_t state_;
    bool has_cached_normal_ = false;
    double cached_normal_ = 0.0;
};

}  // namespace pfan

#endif
