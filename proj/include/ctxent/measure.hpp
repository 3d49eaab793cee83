#ifndef CTXENT_MEASURE_HPP
#define CTXENT_MEASURE_HPP

#include <string>
#include <vector>

#include "ctxent/context.hpp"

namespace ctxent {

/// Probability vector a state induces on a context, listed in the context's
/// canonical order.
struct ContextProbability {
    const Context* context;
    std::vector<double> probs;
};

struct CheckReport {
    std::string check;
    double max_residual = 0.0;
    int trials = 0;
    bool pass = false;
};

/// probs[i] = Tr(rho P_i). Values within tol_prob of 0 or 1 are snapped to
/// the boundary; larger excursions are numerical breakdowns, never silently
/// clipped.
inline std::vector<double> measure_probs(const DensityMatrix& rho, const Context& v,
                                         const NumericPolicy& num = NumericPolicy::standard()) {
    if (rho.dim() != v.dim()) throw Error(errc::dimension_mismatch, "state and context dimensions differ");
    std::vector<double> probs;
    probs.reserve(static_cast<std::size_t>(v.size()));
    double sum = 0.0;
    for (const auto& p : v.projections()) {
        double x = (rho.matrix() * p.matrix()).trace().real();
        if (x < 0.0 || x > 1.0) {
            const double excess = std::max(-x, x - 1.0);
            if (excess > num.tol_prob)
                throw Error(errc::numerical_breakdown,
                            "measure value " + std::to_string(x) + " outside [0,1]", excess);
            x = std::clamp(x, 0.0, 1.0);
        }
        probs.push_back(x);
        sum += x;
    }
    if (std::abs(sum - 1.0) > num.tol_prob)
        throw Error(errc::numerical_breakdown, "measure sum residual " + std::to_string(sum - 1.0),
                    std::abs(sum - 1.0));
    return probs;
}

inline ContextProbability measure_eval(const DensityMatrix& rho, const Context& v,
                                       const NumericPolicy& num = NumericPolicy::standard()) {
    return ContextProbability{&v, measure_probs(rho, v, num)};
}

/// Raw projection value m(P) = Tr(rho P); also valid for the zero projection,
/// which contexts exclude.
inline double measure_raw(const DensityMatrix& rho, const Matrix& p) {
    if (rho.dim() != p.rows() || p.rows() != p.cols())
        throw Error(errc::dimension_mismatch, "projection has wrong dimension");
    return (rho.matrix() * p).trace().real();
}

/// Samples random contexts and projection pairs and checks the finitely
/// additive probability measure axioms plus the context-independence of
/// m(P): m(I) = 1, m(0) = 0, additivity on orthogonal pairs, monotonicity
/// under P <= Q, and equality of m(P) across two embeddings of the same
/// projection.
inline CheckReport check_finite_additivity(const DensityMatrix& rho, int trials, std::uint64_t seed,
                                           const NumericPolicy& num = NumericPolicy::standard()) {
    Rng rng(seed);
    const int n = rho.dim();
    double worst = 0.0;
    worst = std::max(worst, std::abs(measure_raw(rho, Matrix::Identity(n, n)) - 1.0));
    worst = std::max(worst, std::abs(measure_raw(rho, Matrix::Zero(n, n))));
    for (int t = 0; t < trials; ++t) {
        const Context v = random_context(n, rng, num);
        const std::vector<double> probs = measure_probs(rho, v, num);
        // Additivity on an orthogonal pair drawn from the context.
        const int k = v.size();
        const int i = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
        int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(k - 1)));
        if (j >= i) ++j;
        const Matrix pq = v.projection(i).matrix() + v.projection(j).matrix();
        worst = std::max(worst, std::abs(measure_raw(rho, pq) - probs[static_cast<std::size_t>(i)] -
                                         probs[static_cast<std::size_t>(j)]));
        // Monotonicity for P <= P + Q.
        const double mp = measure_raw(rho, v.projection(i).matrix());
        worst = std::max(worst, std::max(0.0, mp - measure_raw(rho, pq)));
        // Context independence: the same summed projection read off from the
        // fine context and from its two-outcome coarse-graining.
        const double direct = measure_raw(rho, pq);
        if (k > 2) {
            std::vector<int> rest;
            for (int r = 0; r < k; ++r)
                if (r != i && r != j) rest.push_back(r);
            const Context coarse = coarsened(v, {{i, j}, rest}, num);
            const std::vector<double> cp = measure_probs(rho, coarse, num);
            // Locate the merged projection in the coarse canonical listing.
            double via_coarse = cp[0];
            for (int c = 0; c < coarse.size(); ++c)
                if (max_abs(coarse.projection(c).matrix() - pq) <= 1e-8) via_coarse = cp[static_cast<std::size_t>(c)];
            worst = std::max(worst, std::abs(direct - via_coarse));
        }
    }
    return CheckReport{"finite_additivity", worst, trials, worst <= 1e-10};
}

/// Verifies mu_rho restricted to V (x) {I_m} equals mu_{rho1} at V, and the
/// symmetric statement on the second factor, both sides computed
/// independently.
inline CheckReport check_partial_trace_compat(const DensityMatrix& rho, int n, int m, const Context& v,
                                              const Context& w,
                                              const NumericPolicy& num = NumericPolicy::standard()) {
    if (rho.dim() != n * m) throw Error(errc::dimension_mismatch, "composite state dimension mismatch");
    if (v.dim() != n || w.dim() != m) throw Error(errc::dimension_mismatch, "factor context dimension mismatch");
    const DensityMatrix rho1 = partial_trace(rho, n, m, Keep::First, num);
    const DensityMatrix rho2 = partial_trace(rho, n, m, Keep::Second, num);
    double worst = 0.0;
    const Matrix idn = Matrix::Identity(n, n), idm = Matrix::Identity(m, m);
    for (const auto& p : v.projections()) {
        const double lhs = measure_raw(rho, tensor(p.matrix(), idm));
        const double rhs = measure_raw(rho1, p.matrix());
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    for (const auto& q : w.projections()) {
        const double lhs = measure_raw(rho, tensor(idn, q.matrix()));
        const double rhs = measure_raw(rho2, q.matrix());
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return CheckReport{"partial_trace_compat", worst, v.size() + w.size(), worst <= 1e-10};
}

}  // namespace ctxent

#endif  // CTXENT_MEASURE_HPP
