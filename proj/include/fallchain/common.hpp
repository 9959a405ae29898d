#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fallchain {

// Base for all library errors. Subcommands map these to exit code 1/2.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct invalid_argument_error : error {
    using error::error;
};

struct parse_error : error {
    using error::error;
};

struct not_fitted_error : error {
    using error::error;
};

struct io_error : error {
    using error::error;
};

inline bool all_finite(const std::vector<double>& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

// SplitMix64. Used to derive independent seeds from (base seed, stream name),
// so stages and clients can be re-run in isolation reproducibly.
inline std::uint64_t mix_seed(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, const std::string& stream, std::uint64_t index = 0) {
    std::uint64_t h = base;
    for (unsigned char c : stream) h = mix_seed(h ^ c);
    return mix_seed(h ^ index);
}

}  // namespace fallchain
