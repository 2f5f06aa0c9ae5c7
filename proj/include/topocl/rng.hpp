#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <vector>

namespace topocl {

// SplitMix64 finalizer, used to derive independent stream seeds from one
// base seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    return splitmix64(base ^ splitmix64(stream));
}

// mt19937_64 plus hand-rolled distributions. The standard distributions are
// implementation-defined, so all randomness goes through these helpers to
// keep identical seeds giving identical streams on any toolchain.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t raw() { return eng_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(eng_() >> 11) * (1.0 / 9007199254740992.0); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n); rejection sampling, requires n > 0.
    std::uint64_t index(std::uint64_t n) {
        const std::uint64_t limit = (0ull - n) % n;  // 2^64 mod n
        std::uint64_t r;
        do {
            r = eng_();
        } while (r < limit);
        return r % n;
    }

    // Standard normal via Box-Muller; the spare value is cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    // Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[index(i)]);
        }
    }

    // Full state as text (engine state plus the Box-Muller cache), for
    // exact resume.
    std::string state() const {
        std::ostringstream out;
        out << eng_ << ' ' << (have_spare_ ? 1 : 0) << ' ';
        out.precision(17);
        out << spare_;
        return out.str();
    }

    void restore_state(const std::string& s) {
        std::istringstream in(s);
        int spare_flag = 0;
        in >> eng_ >> spare_flag >> spare_;
        have_spare_ = spare_flag != 0;
    }

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace topocl
