#ifndef CTXENT_NUMERIC_HPP
#define CTXENT_NUMERIC_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace ctxent {

/// Tolerances used by every validation and comparison in the library.
/// One record, threaded through all constructors; defaults target double
/// precision at dimensions up to a few dozen.
struct NumericPolicy {
    double tol_herm = 1e-10;     // Hermiticity residual, max-abs
    double tol_proj = 1e-10;     // idempotency / orthogonality / completeness
    double tol_unitary = 1e-10;  // ||U U^dag - I||_max
    double tol_trace = 1e-10;    // unit-trace and integer-rank residuals
    double tol_psd = 1e-9;       // allowed negative excursion of eigenvalues
    double tol_eig = 1e-9;       // eigendecomposition reconstruction residual
    double tol_prob = 1e-9;      // probability clamping and sum checks
    double tol_inv = 1e-12;      // two-outcome entropy inversion residual
    double tol_dist = 1e-6;      // context-distance symmetry slack

    static const NumericPolicy& standard() {
        static const NumericPolicy p{};
        return p;
    }
};

enum class errc {
    not_hermitian,
    not_unit_trace,
    not_positive,
    dimension_mismatch,
    bad_rank,
    not_orthogonal,
    not_complete,
    zero_projection,
    trivial_context,
    not_a_refinement,
    bad_partition,
    not_a_probability_vector,
    target_out_of_range,
    target_negative,
    unsupported_kind,
    no_zero_context,
    multiple_zero_contexts,
    budget_exhausted,
    numerical_breakdown,
    missing_context,
    bad_input,
};

inline const char* errc_name(errc c) {
    switch (c) {
        case errc::not_hermitian: return "NotHermitian";
        case errc::not_unit_trace: return "NotUnitTrace";
        case errc::not_positive: return "NotPositive";
        case errc::dimension_mismatch: return "DimensionMismatch";
        case errc::bad_rank: return "BadRank";
        case errc::not_orthogonal: return "NotOrthogonal";
        case errc::not_complete: return "NotComplete";
        case errc::zero_projection: return "ZeroProjection";
        case errc::trivial_context: return "TrivialContext";
        case errc::not_a_refinement: return "NotARefinement";
        case errc::bad_partition: return "BadPartition";
        case errc::not_a_probability_vector: return "NotAProbabilityVector";
        case errc::target_out_of_range: return "TargetOutOfRange";
        case errc::target_negative: return "TargetNegative";
        case errc::unsupported_kind: return "UnsupportedKind";
        case errc::no_zero_context: return "NoZeroContext";
        case errc::multiple_zero_contexts: return "MultipleZeroContexts";
        case errc::budget_exhausted: return "BudgetExhausted";
        case errc::numerical_breakdown: return "NumericalBreakdown";
        case errc::missing_context: return "MissingContext";
        case errc::bad_input: return "BadInput";
    }
    return "Unknown";
}

/// Library error carrying the failed check and, where meaningful, the
/// measured residual that violated it.
class Error : public std::runtime_error {
  public:
    Error(errc code, const std::string& what, double residual = 0.0)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what),
          code_(code),
          residual_(residual) {}

    errc code() const { return code_; }
    double residual() const { return residual_; }

  private:
    errc code_;
    double residual_;
};

// ---------------------------------------------------------------------------
// Deterministic random streams.
//
// Distribution algorithms in <random> differ between standard libraries, so
// the generator and the uniform/normal transforms are spelled out here;
// identical seeds give identical streams on every platform.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// xoshiro256** with splitmix64 seeding; enough state for Haar sampling.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
        have_normal_ = false;
    }

    /// Derive an independent stream (seed mixed with a stream id).
    Rng stream(std::uint64_t id) const {
        std::uint64_t sm = s_[0] ^ (0xa0761d6478bd642fULL * (id + 1));
        return Rng(splitmix64(sm));
    }

    std::uint64_t next_u64() {
        auto rotl = [](std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); };
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform in [0, 1).
    double uniform() { return std::ldexp(static_cast<double>(next_u64() >> 11), -53); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    /// Standard normal via Box-Muller.
    double normal() {
        if (have_normal_) {
            have_normal_ = false;
            return cached_normal_;
        }
        double u1 = 0.0;
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        cached_normal_ = r * std::sin(a);
        have_normal_ = true;
        return r * std::cos(a);
    }

  private:
    std::uint64_t s_[4];
    bool have_normal_;
    double cached_normal_ = 0.0;
};

}  // namespace ctxent

#endif  // CTXENT_NUMERIC_HPP
