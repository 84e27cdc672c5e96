#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <string>

namespace cglab {

using Complex = std::complex<double>;

// FNV-1a, used for content-addressed output file names.
class Fnv1a {
public:
    void feed(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            state_ ^= p[i];
            state_ *= 0x100000001b3ull;
        }
    }
    void feed(const std::string& s) { feed(s.data(), s.size()); }
    std::uint64_t value() const { return state_; }
    std::string hex() const;

private:
    std::uint64_t state_ = 0xcbf29ce484222325ull;
};

// Worker count for the embarrassingly parallel vertex loops. Respects the
// CGLAB_THREADS environment variable; result is >= 1.
int worker_count();

// Runs fn(i) for i in [0, n). Chunked across worker_count() threads; each
// index is touched exactly once, so per-slot writes stay deterministic.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// Deterministic xorshift generator for test/sample points (seeded explicitly
// everywhere; never wall-clock seeded).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : s_(seed ? seed : 0x9e3779b97f4a7c15ull) {}
    std::uint64_t next() {
        s_ ^= s_ << 13;
        s_ ^= s_ >> 7;
        s_ ^= s_ << 17;
        return s_;
    }
    double uniform() { return (next() >> 11) * 0x1.0p-53; } // [0,1)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
    std::uint64_t s_;
};

} // namespace cglab
