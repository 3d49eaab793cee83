#ifndef CTXENT_RECONSTRUCT_HPP
#define CTXENT_RECONSTRUCT_HPP

#include "ctxent/minimizer.hpp"

namespace ctxent {

struct ReconstructionConfig {
    MinimizerConfig minimizer;
    double tol_zero = 1e-8;  // threshold for reading a section value as zero
    double tol_sum = 1e-7;   // |sum(lambda) - 1| decision band
    double tie_tol = 1e-7;   // |p_j - S/2| equality band
    int verify_contexts = 64;
    double verify_tol = 1e-6;
    std::uint64_t seed = 0;

    static ReconstructionConfig defaults_for(int n) {
        ReconstructionConfig c;
        c.minimizer = MinimizerConfig::defaults_for(n);
        return c;
    }

    void validate() const {
        minimizer.validate();
        if (tol_zero <= 0 || tol_sum <= 0 || tie_tol <= 0 || verify_tol <= 0 || verify_contexts < 1)
            throw Error(errc::bad_input, "reconstruction tolerances must be positive");
    }
};

enum class InfeasibleReason {
    two_outcome_above_ln2,       // some gamma|_{W_i} exceeds ln 2
    eigenvalue_sum_exceeds_one,  // S > 1
    no_half_sum_match,           // S < 1 and no p_j = S/2
    ambiguous_tie,               // S/2 appears badly (3+ times, or 2 with leftover mass)
    tie_break_failed,            // rotated pass could not separate the pair
    verification_failed,         // candidate disagrees with the section elsewhere
    pure_no_zero_context,        // zero-entropy claim not confirmed on rotated bases
    pure_ambiguous_rotation,     // rotation retries exhausted in the pure branch
};

inline const char* infeasible_reason_name(InfeasibleReason r) {
    switch (r) {
        case InfeasibleReason::two_outcome_above_ln2: return "two_outcome_above_ln2";
        case InfeasibleReason::eigenvalue_sum_exceeds_one: return "eigenvalue_sum_exceeds_one";
        case InfeasibleReason::no_half_sum_match: return "no_half_sum_match";
        case InfeasibleReason::ambiguous_tie: return "ambiguous_tie";
        case InfeasibleReason::tie_break_failed: return "tie_break_failed";
        case InfeasibleReason::verification_failed: return "verification_failed";
        case InfeasibleReason::pure_no_zero_context: return "pure_no_zero_context";
        case InfeasibleReason::pure_ambiguous_rotation: return "pure_ambiguous_rotation";
    }
    return "unknown";
}

struct ReconstructionResult {
    enum class Outcome { unique, ambiguous_pair, infeasible };
    Outcome outcome = Outcome::infeasible;
    std::optional<DensityMatrix> state;      // unique result, or first of the pair
    std::optional<DensityMatrix> state_alt;  // second of the pair (dim 2 only; state_alt = I - state)
    std::optional<InfeasibleReason> reason;
    std::string detail;
    std::string branch;  // which case of the algorithm produced the outcome
    long long queries_used = 0;
};

namespace detail {

constexpr int kRotationRetryCap = 16;
constexpr double kNonPermutingGap = 1e-3;

/// Unitary fixing one basis vector exactly while applying a random O(1)
/// rotation to the orthogonal complement; rejected unless every rotated
/// projection stays kNonPermutingGap away from every original one.
inline std::optional<Unitary> rotation_fixing_axis(const MaximalContext& v, int axis, Rng& rng,
                                                   const NumericPolicy& num) {
    const int n = v.dim();
    const Matrix& u = v.generating_unitary().matrix();
    Matrix comp(n, n - 1);
    int out = 0;
    for (int j = 0; j < n; ++j)
        if (j != axis) comp.col(out++) = u.col(j);
    for (int attempt = 0; attempt < kRotationRetryCap; ++attempt) {
        Matrix h(n - 1, n - 1);
        for (int a = 0; a < n - 1; ++a) {
            h(a, a) = Complex(rng.normal(), 0.0);
            for (int b = a + 1; b < n - 1; ++b) {
                h(a, b) = Complex(rng.normal(), rng.normal()) * M_SQRT1_2;
                h(b, a) = std::conj(h(a, b));
            }
        }
        Eigen::SelfAdjointEigenSolver<Matrix> es(h);
        Matrix expo = Matrix::Zero(n - 1, n - 1);
        for (int a = 0; a < n - 1; ++a)
            expo += std::polar(1.0, es.eigenvalues()(a)) * es.eigenvectors().col(a) *
                    es.eigenvectors().col(a).adjoint();
        const Matrix axis_proj = u.col(axis) * u.col(axis).adjoint();
        const Matrix rot = axis_proj + comp * expo * comp.adjoint();
        bool ok = true;
        for (int i = 0; i < n && ok; ++i) {
            if (i == axis) continue;
            const Matrix q = rot * v.context().projection(i).matrix() * rot.adjoint();
            for (int l = 0; l < n && ok; ++l)
                if (max_abs(q - v.context().projection(l).matrix()) < kNonPermutingGap) ok = false;
        }
        if (ok) return Unitary::validated(rot, num);
    }
    return std::nullopt;
}

/// Extract p_i <= 1/2 from the two-outcome subalgebras of a maximal
/// context's projections (optionally conjugated); throws only on budget or
/// forged-negative targets, values above ln 2 are reported through `above`.
inline std::vector<double> two_outcome_solutions(const EntropyOracle& oracle, const MaximalContext& v,
                                                 const Unitary* rot, const EntropyKind& kind,
                                                 const NumericPolicy& num, int* above) {
    const int n = v.dim();
    const double ln2 = std::log(2.0);
    std::vector<double> p(static_cast<std::size_t>(n), 0.0);
    *above = -1;
    for (int i = 0; i < n; ++i) {
        Matrix pm = v.context().projection(i).matrix();
        if (rot) pm = rot->matrix() * pm * rot->matrix().adjoint();
        const Context wi = two_outcome_context(Projection::validated(pm, num), num);
        const double g = oracle.query(wi);
        if (g > ln2 + num.tol_inv) {
            *above = i;
            return p;
        }
        p[static_cast<std::size_t>(i)] = invert_two_outcome(kind, std::max(g, 0.0), num).first;
    }
    return p;
}

}  // namespace detail

/// Max deviation between the candidate's contextual entropy and the oracle
/// over sampled contexts spanning every rank profile at this dimension.
inline CheckReport verify_candidate(const DensityMatrix& rho, const EntropyOracle& oracle, int contexts,
                                    double tol, std::uint64_t seed,
                                    const EntropyKind& kind = EntropyKind::shannon(),
                                    const NumericPolicy& num = NumericPolicy::standard()) {
    if (rho.dim() != oracle.dim()) throw Error(errc::dimension_mismatch, "candidate and oracle dimensions differ");
    const auto profiles = rank_profiles(rho.dim());
    Rng rng(seed);
    double worst = 0.0;
    for (int t = 0; t < contexts; ++t) {
        const Context v = random_context_with_ranks(profiles[static_cast<std::size_t>(t) % profiles.size()], rng, num);
        worst = std::max(worst, std::abs(contextual_entropy(rho, v, kind, num) - oracle.query(v)));
    }
    return CheckReport{"verify_candidate", worst, contexts, worst <= tol};
}

/// Pure-state branch: a maximal context v0 with zero entropy pins the state
/// to one of its projections; rotated copies of v0 that keep exactly one
/// axis reveal which, since only the context still containing the state
/// reads zero.
inline DensityMatrix reconstruct_pure(const EntropyOracle& oracle, const MaximalContext& v0,
                                      const ReconstructionConfig& cfg,
                                      const NumericPolicy& num = NumericPolicy::standard()) {
    const int n = v0.dim();
    if (n < 3)
        throw Error(errc::bad_input, "pure-state branch needs dimension >= 3; dimension 2 is two-to-one");
    Rng rng = Rng(cfg.seed).stream(0x9d2c);
    for (int attempt = 0; attempt < detail::kRotationRetryCap; ++attempt) {
        std::vector<int> zeros;
        bool rotations_ok = true;
        for (int i = 0; i < n; ++i) {
            const auto rot = detail::rotation_fixing_axis(v0, i, rng, num);
            if (!rot) {
                rotations_ok = false;
                break;
            }
            const MaximalContext vi = maximal_context_from_unitary(
                Unitary::validated(rot->matrix() * v0.generating_unitary().matrix(), num), num);
            if (oracle.query(vi.context()) <= cfg.tol_zero) zeros.push_back(i);
        }
        if (!rotations_ok) continue;
        if (zeros.empty())
            throw Error(errc::no_zero_context, "no rotated context reads zero; the section is not pure-state");
        if (zeros.size() == 1) {
            return validate_density(v0.context().projection(zeros.front()).matrix(), num);
        }
        // More than one zero: the rotation draw was too close to a
        // permutation for some axis; try again with fresh rotations.
    }
    throw Error(errc::multiple_zero_contexts, "rotation retries exhausted with multiple zero readings");
}

/// Two-dimensional branch: the section is two-to-one, so return both
/// eigenvalue assignments; the fixed point lambda = 1/2 collapses to the
/// maximally mixed state.
inline ReconstructionResult reconstruct_dim2(const EntropyOracle& oracle, const ReconstructionConfig& cfg,
                                             const EntropyKind& kind = EntropyKind::shannon(),
                                             const NumericPolicy& num = NumericPolicy::standard()) {
    cfg.validate();
    const long long used_before = oracle.queries_used();
    const MinimizerResult mr = minimize_over_maximal_contexts(oracle, 2, cfg.minimizer, num);
    const auto [plow, phigh] = invert_two_outcome(kind, std::max(mr.best_value, 0.0), num);
    const Matrix p0 = mr.best_context.context().projection(0).matrix();
    const Matrix p1 = mr.best_context.context().projection(1).matrix();
    ReconstructionResult out;
    out.queries_used = oracle.queries_used() - used_before;
    if (phigh - plow <= cfg.tie_tol) {
        out.outcome = ReconstructionResult::Outcome::unique;
        out.state = validate_density(0.5 * Matrix::Identity(2, 2), num);
        out.branch = "dim2_center";
        return out;
    }
    out.outcome = ReconstructionResult::Outcome::ambiguous_pair;
    out.state = validate_density(plow * p0 + phigh * p1, num);
    out.state_alt = validate_density(phigh * p0 + plow * p1, num);
    out.branch = "dim2_pair";
    return out;
}

/// Full reconstruction from a contextual-entropy section. Minimizes over
/// maximal contexts, handles the dimension-2 ambiguity and pure states,
/// inverts the two-outcome subalgebras, decides the S > 1 / S = 1 / S < 1
/// cases (with the rotated tie-break for the doubled S/2 solution), then
/// verifies the candidate against freshly sampled contexts. Infeasibility
/// is reported in the result; only oracle budget exhaustion throws.
inline ReconstructionResult reconstruct(const EntropyOracle& oracle, int n, const ReconstructionConfig& cfg,
                                        const EntropyKind& kind = EntropyKind::shannon(),
                                        const NumericPolicy& num = NumericPolicy::standard()) {
    cfg.validate();
    if (n < 2) throw Error(errc::bad_input, "reconstruction needs dimension >= 2");
    if (oracle.dim() != n) throw Error(errc::dimension_mismatch, "oracle dimension differs from n");
    if (kind.family == EntropyKind::Family::hartley)
        throw Error(errc::unsupported_kind,
                    "Hartley sections are not invertible on two outcomes; reconstruction excludes them");

    if (n == 2) return reconstruct_dim2(oracle, cfg, kind, num);

    const long long used_before = oracle.queries_used();
    ReconstructionResult out;
    auto infeasible = [&](InfeasibleReason why, const std::string& detail) {
        out.outcome = ReconstructionResult::Outcome::infeasible;
        out.reason = why;
        out.detail = detail;
        out.queries_used = oracle.queries_used() - used_before;
        return out;
    };

    const MinimizerResult mr = minimize_over_maximal_contexts(oracle, n, cfg.minimizer, num);
    const MaximalContext& v = mr.best_context;

    std::vector<double> lambda(static_cast<std::size_t>(n), 0.0);
    if (mr.best_value <= cfg.tol_zero) {
        out.branch = "pure";
        try {
            out.state = reconstruct_pure(oracle, v, cfg, num);
        } catch (const Error& e) {
            if (e.code() == errc::no_zero_context)
                return infeasible(InfeasibleReason::pure_no_zero_context, e.what());
            if (e.code() == errc::multiple_zero_contexts)
                return infeasible(InfeasibleReason::pure_ambiguous_rotation, e.what());
            throw;
        }
    } else {
        int above = -1;
        const std::vector<double> p = detail::two_outcome_solutions(oracle, v, nullptr, kind, num, &above);
        if (above >= 0)
            return infeasible(InfeasibleReason::two_outcome_above_ln2,
                              "gamma at the two-outcome subalgebra of projection " + std::to_string(above) +
                                  " exceeds ln 2; the section is not in the image");
        double s = 0.0;
        for (double x : p) s += x;

        if (s > 1.0 + cfg.tol_sum) {
            return infeasible(InfeasibleReason::eigenvalue_sum_exceeds_one,
                              "S = " + std::to_string(s) + " > 1");
        } else if (std::abs(s - 1.0) <= cfg.tol_sum) {
            out.branch = "sum_one";
            for (int i = 0; i < n; ++i) lambda[static_cast<std::size_t>(i)] = p[static_cast<std::size_t>(i)];
        } else {
            std::vector<int> matches;
            for (int j = 0; j < n; ++j)
                if (std::abs(p[static_cast<std::size_t>(j)] - s / 2.0) <= cfg.tie_tol) matches.push_back(j);
            if (matches.empty())
                return infeasible(InfeasibleReason::no_half_sum_match,
                                  "S = " + std::to_string(s) + " < 1 and no p_j equals S/2");
            if (matches.size() == 1) {
                out.branch = "single_match";
                const int j = matches.front();
                for (int i = 0; i < n; ++i) lambda[static_cast<std::size_t>(i)] = p[static_cast<std::size_t>(i)];
                lambda[static_cast<std::size_t>(j)] = 1.0 - p[static_cast<std::size_t>(j)];
            } else if (matches.size() == 2) {
                double leftover = 0.0;
                for (int i = 0; i < n; ++i)
                    if (i != matches[0] && i != matches[1]) leftover = std::max(leftover, p[static_cast<std::size_t>(i)]);
                if (leftover > cfg.tol_zero)
                    return infeasible(InfeasibleReason::ambiguous_tie,
                                      "S/2 appears twice but other p_i are nonzero (max " +
                                          std::to_string(leftover) + ")");
                // Rotated pass: fix the first tied axis, rotate the rest, and
                // read off that diagonal entry of the state in the rotated
                // frame; it equals the tied eigenvalue and separates the two
                // assignments.
                out.branch = "tie_break";
                const int j1 = matches[0], j2 = matches[1];
                const double plow = p[static_cast<std::size_t>(j1)];
                const double phigh = 1.0 - plow;
                Rng rng = Rng(cfg.seed).stream(0x7ae5);
                bool resolved = false;
                for (int attempt = 0; attempt < detail::kRotationRetryCap && !resolved; ++attempt) {
                    const auto rot = detail::rotation_fixing_axis(v, j1, rng, num);
                    if (!rot) continue;
                    int above2 = -1;
                    const std::vector<double> pt =
                        detail::two_outcome_solutions(oracle, v, &*rot, kind, num, &above2);
                    if (above2 >= 0)
                        return infeasible(InfeasibleReason::two_outcome_above_ln2,
                                          "rotated two-outcome value exceeds ln 2 at projection " +
                                              std::to_string(above2));
                    double st = 0.0;
                    for (double x : pt) st += x;
                    std::vector<double> diag = pt;
                    if (std::abs(st - 1.0) <= cfg.tol_sum) {
                        // all rotated diagonal entries <= 1/2 already
                    } else if (st < 1.0 - cfg.tol_sum) {
                        std::vector<int> m2;
                        for (int j = 0; j < n; ++j)
                            if (std::abs(pt[static_cast<std::size_t>(j)] - st / 2.0) <= cfg.tie_tol) m2.push_back(j);
                        if (m2.size() != 1) continue;  // rotation still degenerate, redraw
                        diag[static_cast<std::size_t>(m2.front())] = 1.0 - pt[static_cast<std::size_t>(m2.front())];
                    } else {
                        continue;  // inconsistent sum, redraw
                    }
                    const double dj1 = diag[static_cast<std::size_t>(j1)];
                    // The fixed axis keeps its eigenvalue exactly; pick the
                    // assignment it sits next to, requiring clear margin.
                    const double gap = phigh - plow;
                    if (std::abs(dj1 - plow) <= 0.25 * gap) {
                        lambda[static_cast<std::size_t>(j1)] = plow;
                        lambda[static_cast<std::size_t>(j2)] = phigh;
                        resolved = true;
                    } else if (std::abs(dj1 - phigh) <= 0.25 * gap) {
                        lambda[static_cast<std::size_t>(j1)] = phigh;
                        lambda[static_cast<std::size_t>(j2)] = plow;
                        resolved = true;
                    }
                }
                if (!resolved)
                    return infeasible(InfeasibleReason::tie_break_failed,
                                      "rotated readings never separated the tied assignments");
            } else {
                return infeasible(InfeasibleReason::ambiguous_tie,
                                  "S/2 appears " + std::to_string(matches.size()) + " times");
            }
        }

        double total = 0.0;
        for (double x : lambda) total += x;
        Matrix rho_hat = Matrix::Zero(n, n);
        for (int i = 0; i < n; ++i)
            rho_hat += (lambda[static_cast<std::size_t>(i)] / total) * v.context().projection(i).matrix();
        out.state = validate_density(rho_hat, num);
    }

    const CheckReport check = verify_candidate(*out.state, oracle, cfg.verify_contexts, cfg.verify_tol,
                                               Rng(cfg.seed).stream(0x5eed).next_u64(), kind, num);
    if (!check.pass)
        return infeasible(InfeasibleReason::verification_failed,
                          "candidate deviates from the section by " + std::to_string(check.max_residual));
    out.outcome = ReconstructionResult::Outcome::unique;
    out.queries_used = oracle.queries_used() - used_before;
    return out;
}

}  // namespace ctxent

#endif  // CTXENT_RECONSTRUCT_HPP
