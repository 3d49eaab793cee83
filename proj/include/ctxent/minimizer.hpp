#ifndef CTXENT_MINIMIZER_HPP
#define CTXENT_MINIMIZER_HPP

#include "ctxent/entropy.hpp"

namespace ctxent {

struct MinimizerConfig {
    int restarts = 16;
    int max_iters = 600;
    double eta0 = 0.5;        // initial rotation angle
    double shrink = 0.5;      // step shrink factor on a failed sweep
    double value_tol = 1e-13; // value-change convergence threshold
    std::uint64_t seed = 0;

    static MinimizerConfig defaults_for(int n) {
        MinimizerConfig c;
        c.restarts = 8 * n;  // heuristic against plateaus from degenerate spectra
        return c;
    }

    void validate() const {
        if (restarts < 1 || max_iters < 1 || eta0 <= 0.0 || value_tol <= 0.0 || shrink <= 0.0 || shrink >= 1.0)
            throw Error(errc::bad_input, "minimizer config fields must be positive, shrink in (0,1)");
    }
};

struct MinimizerResult {
    MaximalContext best_context;
    double best_value = 0.0;
    std::vector<double> value_trace;  // accepted values of the winning restart
    long long queries_used = 0;
    bool converged = false;
    int best_restart = -1;
};

namespace detail {

/// Left-multiply U by the closed-form exponential of a Givens-type
/// generator: variant 0 rotates the (i, j) plane, variant 1 is the phased
/// rotation from i(E_ij + E_ji).
inline void apply_givens_step(Matrix& u, int i, int j, double theta, int variant) {
    const Eigen::RowVectorXcd ri = u.row(i), rj = u.row(j);
    const double c = std::cos(theta), s = std::sin(theta);
    if (variant == 0) {
        u.row(i) = c * ri + s * rj;
        u.row(j) = -s * ri + c * rj;
    } else {
        const Complex is(0.0, s);
        u.row(i) = c * ri - is * rj;
        u.row(j) = -is * ri + c * rj;
    }
}

inline void reorthonormalize(Matrix& u) {
    Eigen::HouseholderQR<Matrix> qr(u);
    Matrix q = qr.householderQ() * Matrix::Identity(u.rows(), u.cols());
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
        const Complex d = r(j, j);
        if (std::abs(d) > 0.0) q.col(j) *= d / std::abs(d);
    }
    u = q;
}

/// exp(i theta H) U for a random Hermitian direction H of unit scale.
inline Matrix random_rotation_step(const Matrix& u, double theta, Rng& rng) {
    const int n = static_cast<int>(u.rows());
    Matrix h(n, n);
    for (int a = 0; a < n; ++a) {
        h(a, a) = Complex(rng.normal(), 0.0);
        for (int b = a + 1; b < n; ++b) {
            h(a, b) = Complex(rng.normal(), rng.normal()) * M_SQRT1_2;
            h(b, a) = std::conj(h(a, b));
        }
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    Matrix expo = Matrix::Zero(n, n);
    for (int a = 0; a < n; ++a)
        expo += std::polar(1.0, theta * es.eigenvalues()(a) / scale) * es.eigenvectors().col(a) *
                es.eigenvectors().col(a).adjoint();
    return expo * u;
}

}  // namespace detail

/// Multi-start pattern descent on the unitary group. At the current frame U
/// every Givens plane is tried with both phase variants and both signs, plus
/// one randomized rotation; the first strict decrease is accepted, a failed
/// sweep shrinks the step. Deterministic given the config; restart ties go
/// to the lowest restart index.
inline MinimizerResult minimize_over_maximal_contexts(const EntropyOracle& oracle, int n,
                                                      const MinimizerConfig& cfg,
                                                      const NumericPolicy& num = NumericPolicy::standard()) {
    cfg.validate();
    if (oracle.dim() != n) throw Error(errc::dimension_mismatch, "oracle dimension differs from n");
    if (n < 2) throw Error(errc::bad_input, "minimization needs dimension >= 2");

    const long long used_before = oracle.queries_used();
    const double eta_floor = 1e-9;

    struct Best {
        Matrix u;
        double value = std::numeric_limits<double>::infinity();
        std::vector<double> trace;
        bool converged = false;
        int restart = -1;
    } best;

    Rng root(cfg.seed);
    bool any_converged = false;
    bool budget_hit = false;
    std::string budget_msg;

    for (int r = 0; r < cfg.restarts && !budget_hit; ++r) {
        Rng rng = root.stream(static_cast<std::uint64_t>(r) + 1);
        Matrix u = (r == 0) ? Matrix(Matrix::Identity(n, n)) : haar_random_unitary(n, rng, num).matrix();
        std::vector<double> trace;
        bool converged = false;
        double value;
        try {
            value = oracle.query_maximal_unitary(Unitary::validated(u, num), num);
            trace.push_back(value);
            double eta = cfg.eta0;
            int accepts = 0;
            int quiet_sweeps = 0;
            for (int iter = 0; iter < cfg.max_iters; ++iter) {
                bool improved = false;
                double old_value = value;
                for (int i = 0; i < n && !improved; ++i)
                    for (int j = i + 1; j < n && !improved; ++j)
                        for (int variant = 0; variant < 2 && !improved; ++variant)
                            for (int sign = 0; sign < 2 && !improved; ++sign) {
                                Matrix trial = u;
                                detail::apply_givens_step(trial, i, j, sign ? -eta : eta, variant);
                                const double v = oracle.query_maximal_unitary(Unitary::validated(trial, num), num);
                                if (v < value) {
                                    u = std::move(trial);
                                    value = v;
                                    improved = true;
                                }
                            }
                if (!improved) {
                    Matrix trial = detail::random_rotation_step(u, eta, rng);
                    const double v = oracle.query_maximal_unitary(Unitary::validated(trial, num), num);
                    if (v < value) {
                        u = std::move(trial);
                        value = v;
                        improved = true;
                    }
                }
                if (improved) {
                    trace.push_back(value);
                    if (++accepts % 64 == 0) detail::reorthonormalize(u);
                } else {
                    eta *= cfg.shrink;
                }
                if (old_value - value < cfg.value_tol) {
                    if (++quiet_sweeps >= 3 && eta < cfg.eta0 * 0.25) {
                        converged = true;
                        break;
                    }
                } else {
                    quiet_sweeps = 0;
                }
                if (eta < eta_floor) {
                    converged = true;
                    break;
                }
            }
        } catch (const Error& e) {
            if (e.code() != errc::budget_exhausted) throw;
            budget_hit = true;
            budget_msg = e.what();
            if (trace.empty()) break;
            value = trace.back();
        }
        any_converged = any_converged || converged;
        if (value < best.value) {
            detail::reorthonormalize(u);
            best = Best{std::move(u), value, std::move(trace), converged, r};
        }
    }

    if (budget_hit && !any_converged)
        throw Error(errc::budget_exhausted, budget_msg.empty() ? "oracle budget exhausted" : budget_msg);
    if (best.restart < 0) throw Error(errc::budget_exhausted, "oracle budget exhausted before any evaluation");

    MinimizerResult out{maximal_context_from_unitary(Unitary::validated(best.u, num), num),
                        best.value,
                        std::move(best.trace),
                        oracle.queries_used() - used_before,
                        best.converged,
                        best.restart};
    return out;
}

/// Quantum entropy of a state through the oracle route: wrap the state,
/// minimize over maximal contexts. Shannon yields the von Neumann entropy,
/// Renyi kinds their quantum counterparts on the spectrum.
inline double extract_quantum_entropy(const DensityMatrix& rho, const EntropyKind& kind,
                                      const MinimizerConfig& cfg,
                                      const NumericPolicy& num = NumericPolicy::standard()) {
    const EntropyOracle oracle = make_state_oracle(rho, kind, num);
    return minimize_over_maximal_contexts(oracle, rho.dim(), cfg, num).best_value;
}

}  // namespace ctxent

#endif  // CTXENT_MINIMIZER_HPP
