#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace distlab {

namespace detail {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += kGolden;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace detail

/// Combine two 64-bit ids into a derived stream id (splitmix64 of the pair).
/// Used to carve independent sub-streams out of a parent id, e.g.
/// stream_for_student = mix_streams(kTeacherDrawDomain, student_index).
inline std::uint64_t mix_streams(std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = a ^ detail::rotl(b + detail::kGolden, 27);
    return detail::splitmix64(s);
}

/// Seedable, splittable random stream: xoshiro256++ state derived from
/// (master_seed, stream_id) via the splitting rule
///     s = splitmix64 chain seeded with master_seed ^ splitmix64(stream_id).
/// Identical (master_seed, stream_id) pairs always yield identical sequences;
/// distinct stream_ids give statistically independent sequences, which is how
/// per-student / per-replicate parallelism stays deterministic.
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
        : master_seed_(master_seed), stream_id_(stream_id) {
        std::uint64_t id_state = stream_id;
        std::uint64_t seed_state = master_seed ^ detail::splitmix64(id_state);
        for (auto& word : state_) word = detail::splitmix64(seed_state);
        // xoshiro forbids the all-zero state
        if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = detail::kGolden;
    }

    std::uint64_t master_seed() const { return master_seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    /// A child stream under the same master seed.
    RngStream child(std::uint64_t substream) const {
        return RngStream(master_seed_, mix_streams(stream_id_, substream));
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = detail::rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = detail::rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform index in [0, n). Rejection sampling keeps it exactly uniform.
    std::size_t uniform_index(std::size_t n) {
        const std::uint64_t bound = n;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t r;
        do {
            r = next_u64();
        } while (r >= limit);
        return static_cast<std::size_t>(r % bound);
    }

    /// Standard Box-Muller with cached spare; deterministic across platforms.
    double normal(double mu = 0.0, double sigma = 1.0) {
        if (has_spare_) {
            has_spare_ = false;
            return mu + sigma * spare_;
        }
        double u1 = uniform();
        // keep log() finite
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return mu + sigma * r * std::cos(a);
    }

private:
    std::array<std::uint64_t, 4> state_{};
    std::uint64_t master_seed_;
    std::uint64_t stream_id_;
    bool has_spare_{false};
    double spare_{0.0};
};

// Fixed stream-id domains so independent parts of an experiment never collide.
namespace stream_domain {
constexpr std::uint64_t kTeacherDraw = 0x11;
constexpr std::uint64_t kStudentInit = 0x22;
constexpr std::uint64_t kBootstrap = 0x33;
constexpr std::uint64_t kDataset = 0x44;
constexpr std::uint64_t kPreliminary = 0x55;
constexpr std::uint64_t kSequenceSample = 0x66;
constexpr std::uint64_t kEval = 0x77;
}  // namespace stream_domain

}  // namespace distlab
