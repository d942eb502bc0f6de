#pragma once

#include <cstdint>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace foresee {

// ---------------------------------------------------------------------------
// Error taxonomy. The CLI maps each class to a distinct exit code.
// ---------------------------------------------------------------------------

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PreconditionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct EstimatorError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using IndexSet = std::vector<std::size_t>;

// ---------------------------------------------------------------------------
// Dense row-major matrix of doubles.
// ---------------------------------------------------------------------------

struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
    std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
    std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
};

// ---------------------------------------------------------------------------
// Deterministic RNG. splitmix64 stream; identical draws on every platform,
// which std::shuffle and the std distributions do not guarantee.
// ---------------------------------------------------------------------------

inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // uniform integer in [0, n)
    std::uint64_t below(std::uint64_t n) { return next() % n; }

private:
    std::uint64_t state_;
};

// derive an independent stream for sub-task k of a seeded computation
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t k) {
    return mix64(seed ^ mix64(k + 0x51ed270b7a2fa4ffULL));
}

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(v[i - 1], v[j]);
    }
}

// first `count` elements of a shuffled copy; order of the remainder preserved
// for callers that want the out-of-sample complement
IndexSet sample_without_replacement(const IndexSet& pool, std::size_t count, Rng& rng);

template <typename T>
std::vector<T> gather(const std::vector<T>& values, const IndexSet& indices) {
    std::vector<T> out;
    out.reserve(indices.size());
    for (std::size_t i : indices) out.push_back(values[i]);
    return out;
}

// ---------------------------------------------------------------------------
// Thread helpers. Work is addressed by index so the result layout is
// independent of the thread count.
// ---------------------------------------------------------------------------

int default_threads();

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

// ---------------------------------------------------------------------------
// SHA-256 for run-manifest input digests.
// ---------------------------------------------------------------------------

std::string sha256_hex(std::span<const unsigned char> bytes);
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

}  // namespace foresee
