#ifndef CTXENT_PROPERTIES_HPP
#define CTXENT_PROPERTIES_HPP

#include "ctxent/reconstruct.hpp"

namespace ctxent {

/// Schur-Horn rotation: a unitary U with diag(U rho U^dag) equal to the
/// maximally mixed vector, built by driving one diagonal entry at a time to
/// 1/n with plane rotations.
inline Unitary uniformizing_unitary(const DensityMatrix& rho,
                                    const NumericPolicy& num = NumericPolicy::standard()) {
    const int n = rho.dim();
    const double target = 1.0 / n;
    Matrix m = rho.matrix();
    Matrix u = Matrix::Identity(n, n);
    std::vector<bool> fixed(static_cast<std::size_t>(n), false);
    for (int step = 0; step < n - 1; ++step) {
        int imax = -1, imin = -1;
        for (int i = 0; i < n; ++i) {
            if (fixed[static_cast<std::size_t>(i)]) continue;
            if (imax < 0 || m(i, i).real() > m(imax, imax).real()) imax = i;
            if (imin < 0 || m(i, i).real() < m(imin, imin).real()) imin = i;
        }
        if (m(imax, imax).real() - target < 1e-15 && target - m(imin, imin).real() < 1e-15) break;
        const int i = imax, j = imin;
        const Complex c = m(i, j);
        const double phase = (std::abs(c) > 0) ? -std::arg(c) : 0.0;
        auto rotated_entry = [&](double theta) {
            const Complex e = std::polar(1.0, phase);
            // 2x2 conjugation of the (i, j) block by [[cos, e sin], [-conj(e) sin, cos]].
            const double ct = std::cos(theta), st = std::sin(theta);
            const Complex a = m(i, i), b = m(j, j);
            const Complex off = m(i, j);
            return (ct * ct * a + st * st * b + ct * st * (e * std::conj(off) + std::conj(e) * off)).real();
        };
        double lo = 0.0, hi = M_PI / 2.0;
        double flo = rotated_entry(lo) - target;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double f = rotated_entry(mid) - target;
            if ((f > 0) == (flo > 0)) {
                lo = mid;
                flo = f;
            } else {
                hi = mid;
            }
        }
        const double theta = 0.5 * (lo + hi);
        Matrix g = Matrix::Identity(n, n);
        const Complex e = std::polar(1.0, phase);
        g(i, i) = std::cos(theta);
        g(i, j) = e * std::sin(theta);
        g(j, i) = -std::conj(e) * std::sin(theta);
        g(j, j) = std::cos(theta);
        m = g * m * g.adjoint();
        u = g * u;
        fixed[static_cast<std::size_t>(i)] = true;
    }
    return Unitary::validated(u, num);
}

// ---------------------------------------------------------------------------
// Property batteries. Each samples deterministically from the seed and
// reports the worst residual; pass thresholds mirror the library-wide
// guarantees they exercise.
// ---------------------------------------------------------------------------

/// E|_V <= E|_{V'} across random refinement pairs (order-preserving section).
inline CheckReport check_section_monotonicity(int n, int trials, std::uint64_t seed,
                                              const EntropyKind& kind = EntropyKind::shannon(),
                                              const NumericPolicy& num = NumericPolicy::standard()) {
    Rng rng(seed);
    double worst = -std::numeric_limits<double>::infinity();
    for (int t = 0; t < trials; ++t) {
        const DensityMatrix rho = random_density(n, 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n))),
                                                 rng.next_u64(), num);
        const Context fine = random_context(n, rng, num);
        if (fine.size() < 3) continue;
        const int k = fine.size();
        std::vector<std::vector<int>> groups(2);
        const int cut = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(k - 1)));
        for (int i = 0; i < k; ++i) groups[(i < cut) ? 0 : 1].push_back(i);
        const Context coarse = coarsened(fine, groups, num);
        const double gap = contextual_entropy(rho, coarse, kind, num) - contextual_entropy(rho, fine, kind, num);
        worst = std::max(worst, gap);
    }
    return CheckReport{"section_monotonicity[" + kind.name() + "]", worst, trials, worst <= 1e-9};
}

/// Shannon recursion-formula residual across random refinement pairs.
inline CheckReport check_recursion_battery(int n, int trials, std::uint64_t seed,
                                           const NumericPolicy& num = NumericPolicy::standard()) {
    Rng rng(seed);
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        const DensityMatrix rho = random_density(n, 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n))),
                                                 rng.next_u64(), num);
        const Context fine = random_context(n, rng, num);
        if (fine.size() < 3) continue;
        const int k = fine.size();
        std::vector<std::vector<int>> groups(2);
        const int cut = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(k - 1)));
        for (int i = 0; i < k; ++i) groups[(i < cut) ? 0 : 1].push_back(i);
        const Context coarse = coarsened(fine, groups, num);
        worst = std::max(worst, check_recursion(rho, coarse, fine, num));
    }
    return CheckReport{"recursion_formula", worst, trials, worst <= 1e-9};
}

/// E(mu_rho)|_V = E(mu_{U rho U^dag})|_{U V U^dag}.
inline CheckReport check_equivariance(int n, int trials, std::uint64_t seed,
                                      const EntropyKind& kind = EntropyKind::shannon(),
                                      const NumericPolicy& num = NumericPolicy::standard()) {
    Rng rng(seed);
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        const DensityMatrix rho = random_density(n, n, rng.next_u64(), num);
        const Context v = random_context(n, rng, num);
        const Unitary u = haar_random_unitary(n, rng, num);
        const DensityMatrix rho_u = validate_density(u.matrix() * rho.matrix() * u.matrix().adjoint(), num);
        const Context v_u = conjugated(v, u, num);
        worst = std::max(worst,
                         std::abs(contextual_entropy(rho, v, kind, num) - contextual_entropy(rho_u, v_u, kind, num)));
    }
    return CheckReport{"unitary_equivariance[" + kind.name() + "]", worst, trials, worst <= 1e-10};
}

/// Pointwise concavity of the section in the state (Shannon always; Renyi
/// only for 0 < q <= 1).
inline CheckReport check_concavity(int n, int trials, std::uint64_t seed,
                                   const EntropyKind& kind = EntropyKind::shannon(),
                                   const NumericPolicy& num = NumericPolicy::standard()) {
    Rng rng(seed);
    double worst = -std::numeric_limits<double>::infinity();
    for (int t = 0; t < trials; ++t) {
        const DensityMatrix a = random_density(n, n, rng.next_u64(), num);
        const DensityMatrix b = random_density(n, 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n))),
                                               rng.next_u64(), num);
        const double r = rng.uniform();
        const DensityMatrix mix = validate_density(r * a.matrix() + (1.0 - r) * b.matrix(), num);
        const Context v = random_context(n, rng, num);
        const double gap = r * contextual_entropy(a, v, kind, num) +
                           (1.0 - r) * contextual_entropy(b, v, kind, num) -
                           contextual_entropy(mix, v, kind, num);
        worst = std::max(worst, gap);
    }
    return CheckReport{"pointwise_concavity[" + kind.name() + "]", worst, trials, worst <= 1e-9};
}

/// Additivity at split contexts on product states, exact for every kind.
inline CheckReport check_split_additivity(int n, int m, int trials, std::uint64_t seed,
                                          const EntropyKind& kind = EntropyKind::shannon(),
                                          const NumericPolicy& num = NumericPolicy::standard()) {
    Rng rng(seed);
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        const DensityMatrix r1 = random_density(n, 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n))),
                                                rng.next_u64(), num);
        const DensityMatrix r2 = random_density(m, 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(m))),
                                                rng.next_u64(), num);
        const DensityMatrix prod = validate_density(tensor(r1.matrix(), r2.matrix()), num);
        const Context v = random_context(n, rng, num);
        const Context w = random_context(m, rng, num);
        const double lhs = contextual_entropy(prod, split_context(v, w, num), kind, num);
        const double rhs = contextual_entropy(r1, v, kind, num) + contextual_entropy(r2, w, kind, num);
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return CheckReport{"split_additivity[" + kind.name() + "]", worst, trials, worst <= 1e-10};
}

/// Shannon subadditivity at split contexts for arbitrary (entangled)
/// composite states: E(rho)|_{V(x)W} <= E(rho1)|_V + E(rho2)|_W.
inline CheckReport check_split_subadditivity(int n, int m, int trials, std::uint64_t seed,
                                             const NumericPolicy& num = NumericPolicy::standard()) {
    Rng rng(seed);
    double worst = -std::numeric_limits<double>::infinity();
    for (int t = 0; t < trials; ++t) {
        const DensityMatrix rho = random_density(n * m, 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n * m))),
                                                 rng.next_u64(), num);
        const DensityMatrix r1 = partial_trace(rho, n, m, Keep::First, num);
        const DensityMatrix r2 = partial_trace(rho, n, m, Keep::Second, num);
        const Context v = random_context(n, rng, num);
        const Context w = random_context(m, rng, num);
        const double lhs = contextual_entropy(rho, split_context(v, w, num), EntropyKind::shannon(), num);
        const double rhs = contextual_entropy(r1, v, EntropyKind::shannon(), num) +
                           contextual_entropy(r2, w, EntropyKind::shannon(), num);
        worst = std::max(worst, lhs - rhs);
    }
    return CheckReport{"split_subadditivity", worst, trials, worst <= 1e-9};
}

/// Search for a non-split context where subadditivity fails, i.e.
/// E(mu_rho)|_V > E(mu_{rho1 (x) rho2})|_V. Tries the Schur-Horn
/// construction (the context where the state's diagonal is maximally mixed)
/// and rank-biased two-outcome contexts; max_residual reports the best
/// violation margin found, pass means a violation exists.
inline CheckReport check_entangled_counterexample(const DensityMatrix& rho, int n, int m, int trials,
                                                  std::uint64_t seed,
                                                  const NumericPolicy& num = NumericPolicy::standard()) {
    const int d = n * m;
    if (rho.dim() != d) throw Error(errc::dimension_mismatch, "composite state dimension mismatch");
    const DensityMatrix r1 = partial_trace(rho, n, m, Keep::First, num);
    const DensityMatrix r2 = partial_trace(rho, n, m, Keep::Second, num);
    const DensityMatrix prod = validate_density(tensor(r1.matrix(), r2.matrix()), num);
    Rng rng(seed);
    double best = -std::numeric_limits<double>::infinity();
    auto margin = [&](const Context& v) {
        return contextual_entropy(rho, v, EntropyKind::shannon(), num) -
               contextual_entropy(prod, v, EntropyKind::shannon(), num);
    };
    {
        const Unitary u = uniformizing_unitary(rho, num);
        const Context v = conjugated(computational_context(d, num).context(),
                                     Unitary::validated(u.matrix().adjoint(), num), num);
        best = std::max(best, margin(v));
    }
    const auto profiles = rank_profiles(d);
    for (int t = 0; t < trials && best <= 1e-9; ++t) {
        const Context v = (t % 2 == 0)
                              ? random_context_with_ranks({d - 1, 1}, rng, num)
                              : random_context_with_ranks(profiles[static_cast<std::size_t>(t) % profiles.size()],
                                                          rng, num);
        best = std::max(best, margin(v));
    }
    return CheckReport{"entangled_counterexample", best, trials, best > 1e-9};
}

/// Continuity probe: |E(UVU^dag) - E(V)| stays bounded by a constant times
/// ||U - I||_max as the perturbation shrinks.
inline CheckReport check_continuity(int n, int trials, std::uint64_t seed,
                                    const NumericPolicy& num = NumericPolicy::standard()) {
    Rng rng(seed);
    double worst_ratio_growth = 0.0;
    for (int t = 0; t < trials; ++t) {
        const DensityMatrix rho = random_density(n, n, rng.next_u64(), num);
        const Context v = random_context(n, rng, num);
        Matrix h(n, n);
        for (int a = 0; a < n; ++a) {
            h(a, a) = Complex(rng.normal(), 0.0);
            for (int b = a + 1; b < n; ++b) {
                h(a, b) = Complex(rng.normal(), rng.normal()) * M_SQRT1_2;
                h(b, a) = std::conj(h(a, b));
            }
        }
        Eigen::SelfAdjointEigenSolver<Matrix> es(h);
        double base_ratio = 0.0;
        for (int p = 0; p < 5; ++p) {
            const double scale = std::pow(10.0, -2 - p);
            Matrix u = Matrix::Zero(n, n);
            for (int a = 0; a < n; ++a)
                u += std::polar(1.0, scale * es.eigenvalues()(a)) * es.eigenvectors().col(a) *
                     es.eigenvectors().col(a).adjoint();
            const double eps = max_abs(u - Matrix::Identity(n, n));
            if (eps <= 0.0) continue;
            const Context vu = conjugated(v, Unitary::validated(u, num), num);
            const double diff = std::abs(contextual_entropy(rho, vu, EntropyKind::shannon(), num) -
                                         contextual_entropy(rho, v, EntropyKind::shannon(), num));
            const double ratio = diff / eps;
            if (p == 0)
                base_ratio = ratio;
            else
                worst_ratio_growth = std::max(worst_ratio_growth, ratio - 3.0 * base_ratio - 1.0);
        }
    }
    return CheckReport{"continuity", worst_ratio_growth, trials, worst_ratio_growth <= 0.0};
}

/// R_t(p) <= R_q(p) for t > q on random probability vectors.
inline CheckReport check_renyi_q_monotonicity(int trials, std::uint64_t seed,
                                              const NumericPolicy& num = NumericPolicy::standard()) {
    Rng rng(seed);
    double worst = -std::numeric_limits<double>::infinity();
    for (int t = 0; t < trials; ++t) {
        const int k = 2 + static_cast<int>(rng.below(6));
        std::vector<double> p(static_cast<std::size_t>(k));
        double sum = 0.0;
        for (double& x : p) {
            double u = 0.0;
            while (u <= 0.0) u = rng.uniform();
            x = -std::log(u);
            sum += x;
        }
        for (double& x : p) x /= sum;
        const double q = 5.0 * rng.uniform();
        const double tq = q + 0.01 + 5.0 * rng.uniform();
        const double rq = (std::abs(q - 1.0) < 1e-6) ? shannon(p, num) : entropy_value(EntropyKind::renyi(q), p, num);
        const double rt = entropy_value(EntropyKind::renyi(tq), p, num);
        worst = std::max(worst, rt - rq);
    }
    return CheckReport{"renyi_q_monotonicity", worst, trials, worst <= 1e-9};
}

/// Entropy never increases under outcome coarse-graining.
inline CheckReport check_weak_recursivity_battery(const EntropyKind& kind, int trials, std::uint64_t seed,
                                                  const NumericPolicy& num = NumericPolicy::standard()) {
    Rng rng(seed);
    int failures = 0;
    for (int t = 0; t < trials; ++t) {
        const int k = 3 + static_cast<int>(rng.below(5));
        std::vector<double> p(static_cast<std::size_t>(k));
        double sum = 0.0;
        for (double& x : p) {
            double u = 0.0;
            while (u <= 0.0) u = rng.uniform();
            x = -std::log(u);
            sum += x;
        }
        for (double& x : p) x /= sum;
        const int groups = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(k - 1)));
        std::vector<std::vector<int>> partition(static_cast<std::size_t>(groups));
        for (int i = 0; i < k; ++i)
            partition[(i < groups) ? static_cast<std::size_t>(i)
                                   : static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(groups)))]
                .push_back(i);
        if (!check_weak_recursivity(kind, p, partition, num)) ++failures;
    }
    return CheckReport{"weak_recursivity[" + kind.name() + "]", static_cast<double>(failures), trials, failures == 0};
}

/// Partial-trace compatibility over random composite states and contexts.
inline CheckReport check_partial_trace_battery(int n, int m, int trials, std::uint64_t seed,
                                               const NumericPolicy& num = NumericPolicy::standard()) {
    Rng rng(seed);
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        const DensityMatrix rho = random_density(n * m, n * m, rng.next_u64(), num);
        const Context v = random_context(n, rng, num);
        const Context w = random_context(m, rng, num);
        worst = std::max(worst, check_partial_trace_compat(rho, n, m, v, w, num).max_residual);
    }
    return CheckReport{"partial_trace_compat", worst, trials, worst <= 1e-10};
}

}  // namespace ctxent

#endif  // CTXENT_PROPERTIES_HPP
