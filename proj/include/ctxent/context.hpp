#ifndef CTXENT_CONTEXT_HPP
#define CTXENT_CONTEXT_HPP

#include <algorithm>
#include <optional>
#include <utility>
#include <vector>

#include "ctxent/matrixcore.hpp"

namespace ctxent {

/// A classical perspective: pairwise-orthogonal nonzero projections summing
/// to the identity, k >= 2, stored in canonical order (descending rank,
/// lexicographic tiebreak on entries rounded to 1e-8).
class Context {
  public:
    static Context from_projections(std::vector<Projection> ps,
                                    const NumericPolicy& num = NumericPolicy::standard()) {
        if (ps.empty()) throw Error(errc::bad_input, "context needs at least one projection");
        const int n = ps.front().dim();
        for (const auto& p : ps)
            if (p.dim() != n) throw Error(errc::dimension_mismatch, "projections of mixed dimension");
        for (std::size_t i = 0; i < ps.size(); ++i)
            for (std::size_t j = i + 1; j < ps.size(); ++j) {
                const double res = max_abs(ps[i].matrix() * ps[j].matrix());
                if (res > num.tol_proj)
                    throw Error(errc::not_orthogonal,
                                "projections " + std::to_string(i) + "," + std::to_string(j) +
                                    " overlap, residual " + std::to_string(res),
                                res);
            }
        Matrix sum = Matrix::Zero(n, n);
        for (const auto& p : ps) sum += p.matrix();
        const double comp = max_abs(sum - Matrix::Identity(n, n));
        if (comp > num.tol_proj)
            throw Error(errc::not_complete, "projections sum residual " + std::to_string(comp), comp);
        if (ps.size() < 2)
            throw Error(errc::trivial_context, "single-projection (trivial) context excluded");
        std::sort(ps.begin(), ps.end(), [](const Projection& a, const Projection& b) {
            if (a.rank() != b.rank()) return a.rank() > b.rank();
            return detail::lex_less(a.matrix(), b.matrix());
        });
        Context v;
        v.dim_ = n;
        v.ps_ = std::move(ps);
        return v;
    }

    int dim() const { return dim_; }
    int size() const { return static_cast<int>(ps_.size()); }
    const Projection& projection(int i) const { return ps_[static_cast<std::size_t>(i)]; }
    const std::vector<Projection>& projections() const { return ps_; }

    std::vector<int> ranks() const {
        std::vector<int> r;
        r.reserve(ps_.size());
        for (const auto& p : ps_) r.push_back(p.rank());
        return r;
    }

    bool is_maximal() const { return size() == dim_; }

  private:
    Context() = default;
    int dim_ = 0;
    std::vector<Projection> ps_;
};

inline Context context_from_projections(std::vector<Projection> ps,
                                        const NumericPolicy& num = NumericPolicy::standard()) {
    return Context::from_projections(std::move(ps), num);
}

/// Raw-matrix entry point; zero matrices surface as ZeroProjection here.
inline Context context_from_projections(const std::vector<Matrix>& ms,
                                        const NumericPolicy& num = NumericPolicy::standard()) {
    std::vector<Projection> ps;
    ps.reserve(ms.size());
    for (const auto& m : ms) ps.push_back(Projection::validated(m, num));
    return Context::from_projections(std::move(ps), num);
}

/// Maximal context (all ranks 1) together with a unitary whose i-th column
/// spans the i-th canonical projection.
class MaximalContext {
  public:
    static MaximalContext from_unitary(const Unitary& u,
                                       const NumericPolicy& num = NumericPolicy::standard()) {
        const int n = u.dim();
        if (n < 2) throw Error(errc::bad_input, "maximal context needs dimension >= 2");
        std::vector<Projection> ps;
        ps.reserve(n);
        for (int i = 0; i < n; ++i) {
            const Vector c = u.column(i);
            ps.push_back(Projection::validated(c * c.adjoint(), num));
        }
        Context ctx = Context::from_projections(std::move(ps), num);
        // Reorder the generating columns to follow the canonical listing.
        Matrix g(n, n);
        std::vector<bool> used(n, false);
        for (int i = 0; i < n; ++i) {
            int pick = -1;
            double best = -1.0;
            for (int j = 0; j < n; ++j) {
                if (used[j]) continue;
                const double overlap = std::real(
                    (u.column(j).adjoint() * ctx.projection(i).matrix() * u.column(j))(0, 0));
                if (overlap > best) {
                    best = overlap;
                    pick = j;
                }
            }
            used[pick] = true;
            g.col(i) = detail::phase_fixed(u.column(pick));
        }
        MaximalContext mc;
        mc.ctx_ = std::move(ctx);
        mc.u_ = Unitary::validated(g, num);
        return mc;
    }

    const Context& context() const { return ctx_; }
    const Unitary& generating_unitary() const { return u_; }
    int dim() const { return ctx_.dim(); }

  private:
    MaximalContext() : u_(Unitary::validated(Matrix::Identity(2, 2))) {}
    Context ctx_ = Context::from_projections(
        std::vector<Matrix>{(Matrix(2, 2) << 1, 0, 0, 0).finished(), (Matrix(2, 2) << 0, 0, 0, 1).finished()});
    Unitary u_;
};

inline MaximalContext maximal_context_from_unitary(const Unitary& u,
                                                   const NumericPolicy& num = NumericPolicy::standard()) {
    return MaximalContext::from_unitary(u, num);
}

/// The computational-basis context D_n.
inline MaximalContext computational_context(int n, const NumericPolicy& num = NumericPolicy::standard()) {
    return MaximalContext::from_unitary(Unitary::validated(Matrix::Identity(n, n), num), num);
}

/// The two-outcome subalgebra {P, I - P}.
inline Context two_outcome_context(const Projection& p, const NumericPolicy& num = NumericPolicy::standard()) {
    const Matrix comp = Matrix::Identity(p.dim(), p.dim()) - p.matrix();
    return context_from_projections(std::vector<Matrix>{p.matrix(), comp}, num);
}

inline Context conjugated(const Context& v, const Unitary& u,
                          const NumericPolicy& num = NumericPolicy::standard()) {
    if (u.dim() != v.dim()) throw Error(errc::dimension_mismatch, "conjugating unitary has wrong dimension");
    std::vector<Matrix> ms;
    ms.reserve(v.size());
    for (const auto& p : v.projections()) ms.push_back(u.matrix() * p.matrix() * u.matrix().adjoint());
    return context_from_projections(ms, num);
}

inline bool contexts_equal(const Context& a, const Context& b, double tol = 1e-8) {
    if (a.dim() != b.dim() || a.size() != b.size()) return false;
    for (int i = 0; i < a.size(); ++i) {
        if (a.projection(i).rank() != b.projection(i).rank()) return false;
        if (max_abs(a.projection(i).matrix() - b.projection(i).matrix()) > tol) return false;
    }
    return true;
}

/// Partition of fine indices realizing each coarse projection, or nullopt
/// when the coarse context is not a coarse-graining of the fine one.
inline std::optional<std::vector<std::vector<int>>> refines(const Context& fine, const Context& coarse,
                                                            const NumericPolicy& num = NumericPolicy::standard()) {
    if (fine.dim() != coarse.dim()) throw Error(errc::dimension_mismatch, "contexts of different dimension");
    std::vector<std::vector<int>> groups(static_cast<std::size_t>(coarse.size()));
    for (int i = 0; i < fine.size(); ++i) {
        int owner = -1;
        for (int j = 0; j < coarse.size(); ++j) {
            // Q <= P exactly when P Q = Q.
            const double res = max_abs(coarse.projection(j).matrix() * fine.projection(i).matrix() -
                                       fine.projection(i).matrix());
            if (res <= num.tol_proj) {
                owner = j;
                break;
            }
        }
        if (owner < 0) return std::nullopt;
        groups[static_cast<std::size_t>(owner)].push_back(i);
    }
    for (int j = 0; j < coarse.size(); ++j) {
        Matrix sum = Matrix::Zero(fine.dim(), fine.dim());
        for (int i : groups[static_cast<std::size_t>(j)]) sum += fine.projection(i).matrix();
        if (max_abs(sum - coarse.projection(j).matrix()) > num.tol_proj) return std::nullopt;
    }
    return groups;
}

/// Coarse-grain a context by summing the listed groups of its projections.
inline Context coarsened(const Context& v, const std::vector<std::vector<int>>& groups,
                         const NumericPolicy& num = NumericPolicy::standard()) {
    std::vector<Matrix> ms;
    ms.reserve(groups.size());
    std::vector<bool> seen(static_cast<std::size_t>(v.size()), false);
    for (const auto& g : groups) {
        Matrix sum = Matrix::Zero(v.dim(), v.dim());
        for (int i : g) {
            if (i < 0 || i >= v.size() || seen[static_cast<std::size_t>(i)])
                throw Error(errc::bad_partition, "groups must partition the projection indices");
            seen[static_cast<std::size_t>(i)] = true;
            sum += v.projection(i).matrix();
        }
        ms.push_back(sum);
    }
    for (bool s : seen)
        if (!s) throw Error(errc::bad_partition, "groups must cover all projection indices");
    return context_from_projections(ms, num);
}

/// Context of the composite system: all pairwise tensor products.
inline Context split_context(const Context& v, const Context& w,
                             const NumericPolicy& num = NumericPolicy::standard()) {
    std::vector<Matrix> ms;
    ms.reserve(static_cast<std::size_t>(v.size()) * w.size());
    for (const auto& p : v.projections())
        for (const auto& q : w.projections()) ms.push_back(tensor(p.matrix(), q.matrix()));
    return context_from_projections(ms, num);
}

// ---------------------------------------------------------------------------
// Random contexts (test and verification sampling).
// ---------------------------------------------------------------------------

/// All rank profiles (partitions of n into >= 2 parts), descending parts.
inline std::vector<std::vector<int>> rank_profiles(int n) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    auto rec = [&](auto&& self, int rem, int maxpart) -> void {
        if (rem == 0) {
            if (cur.size() >= 2) out.push_back(cur);
            return;
        }
        for (int p = std::min(rem, maxpart); p >= 1; --p) {
            cur.push_back(p);
            self(self, rem - p, p);
            cur.pop_back();
        }
    };
    rec(rec, n, n - 1);  // largest part n-1 keeps k >= 2
    return out;
}

inline Context random_context_with_ranks(const std::vector<int>& ranks, Rng& rng,
                                         const NumericPolicy& num = NumericPolicy::standard()) {
    int n = 0;
    for (int r : ranks) n += r;
    const Unitary u = haar_random_unitary(n, rng, num);
    std::vector<Matrix> ms;
    int col = 0;
    for (int r : ranks) {
        Matrix p = Matrix::Zero(n, n);
        for (int c = 0; c < r; ++c, ++col) p += u.column(col) * u.column(col).adjoint();
        ms.push_back(p);
    }
    return context_from_projections(ms, num);
}

/// Haar-rotated context with a random rank profile.
inline Context random_context(int n, Rng& rng, const NumericPolicy& num = NumericPolicy::standard()) {
    const int k = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - 1)));
    std::vector<int> ranks(static_cast<std::size_t>(k), 1);
    for (int extra = 0; extra < n - k; ++extra) ranks[rng.below(static_cast<std::uint64_t>(k))] += 1;
    return random_context_with_ranks(ranks, rng, num);
}

// ---------------------------------------------------------------------------
// Distance between unitarily equivalent contexts:
//   d(V, W) = min | U~ - I |_max over unitaries carrying V's projections onto
// W's, quotiented by permutations and per-column phases. Permutations are
// enumerated exactly; phases are optimized by exact 1-D line searches; the
// residual block gauge (equal-rank blocks of rank >= 2) gets local
// refinement. Best-effort numerical approximation of the exact group
// minimum.
// ---------------------------------------------------------------------------

namespace detail {

/// Orthonormal basis of range(P) as an n x rank matrix, deterministic.
inline Matrix range_basis(const Projection& p) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(p.matrix());
    const int n = p.dim();
    Matrix basis(n, p.rank());
    int out = 0;
    for (int i = 0; i < n; ++i)
        if (es.eigenvalues()(i) > 0.5) basis.col(out++) = phase_fixed(es.eigenvectors().col(i));
    return basis;
}

inline double conjugator_objective(const std::vector<Matrix>& blocks, const std::vector<double>& phi,
                                   const std::vector<Complex>& colphase) {
    const Eigen::Index n = blocks.front().rows();
    Matrix t = Matrix::Zero(n, n);
    for (std::size_t b = 0; b < blocks.size(); ++b) t += std::polar(1.0, phi[b]) * blocks[b];
    double worst = 0.0;
    for (Eigen::Index q = 0; q < n; ++q)
        for (Eigen::Index p = 0; p < n; ++p) {
            const Complex u = t(p, q) * colphase[static_cast<std::size_t>(q)];
            worst = std::max(worst, std::abs(u - ((p == q) ? Complex(1, 0) : Complex(0, 0))));
        }
    return worst;
}

/// Exact-ish 1-D minimization over an angle: coarse grid then golden-section
/// refinement around the best cell.
template <class F>
double minimize_angle(F&& f, int grid = 240) {
    double best_a = 0.0, best_v = f(0.0);
    for (int i = 1; i < grid; ++i) {
        const double a = 2.0 * M_PI * i / grid;
        const double v = f(a);
        if (v < best_v) {
            best_v = v;
            best_a = a;
        }
    }
    const double step = 2.0 * M_PI / grid;
    double lo = best_a - step, hi = best_a + step;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < 60; ++it) {
        if (fc < fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - gr * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + gr * (hi - lo);
            fd = f(d);
        }
    }
    return (fc < fd) ? c : d;
}

/// Coordinate descent over block phases and column phases.
inline double descend_phases(const std::vector<Matrix>& blocks, std::vector<double>& phi,
                             std::vector<Complex>& colphase, int sweeps = 4) {
    const std::size_t k = blocks.size();
    const std::size_t n = static_cast<std::size_t>(blocks.front().rows());
    // Trace-aligned start.
    for (std::size_t b = 0; b < k; ++b) {
        const Complex tr = blocks[b].trace();
        phi[b] = (std::abs(tr) > 0) ? -std::arg(tr) : 0.0;
    }
    double value = conjugator_objective(blocks, phi, colphase);
    for (int s = 0; s < sweeps; ++s) {
        for (std::size_t b = 0; b < k; ++b) {
            const double a = minimize_angle([&](double ang) {
                std::vector<double> trial = phi;
                trial[b] = ang;
                return conjugator_objective(blocks, trial, colphase);
            });
            phi[b] = a;
        }
        for (std::size_t q = 0; q < n; ++q) {
            const double a = minimize_angle([&](double ang) {
                std::vector<Complex> trial = colphase;
                trial[q] = std::polar(1.0, ang);
                return conjugator_objective(blocks, phi, trial);
            });
            colphase[q] = std::polar(1.0, a);
        }
        value = conjugator_objective(blocks, phi, colphase);
    }
    return value;
}

}  // namespace detail

/// Minimal max-abs deviation from the identity over per-column phase
/// adjustments of a fixed unitary; the quotient norm used by the metric.
inline double phase_minimized_deviation(const Unitary& u) {
    std::vector<Matrix> blocks{u.matrix()};
    std::vector<double> phi{0.0};
    std::vector<Complex> colphase(static_cast<std::size_t>(u.dim()), Complex(1, 0));
    return detail::descend_phases(blocks, phi, colphase);
}

/// d(V, W); nullopt when the rank profiles differ (no conjugating unitary
/// exists and the metric is undefined).
inline std::optional<double> context_distance(const Context& v, const Context& w,
                                              const NumericPolicy& num = NumericPolicy::standard(),
                                              std::uint64_t seed = 12345) {
    if (v.dim() != w.dim()) throw Error(errc::dimension_mismatch, "contexts of different dimension");
    std::vector<int> rv = v.ranks(), rw = w.ranks();
    {
        std::vector<int> a = rv, b = rw;
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        if (a != b) return std::nullopt;
    }
    const int k = v.size();
    if (k > 8) throw Error(errc::bad_input, "distance enumeration limited to contexts with k <= 8");

    std::vector<Matrix> xb, yb;
    for (int i = 0; i < k; ++i) {
        xb.push_back(detail::range_basis(v.projection(i)));
        yb.push_back(detail::range_basis(w.projection(i)));
    }

    // Enumerate rank-matching permutations, score cheaply, refine the best.
    std::vector<int> perm(static_cast<std::size_t>(k));
    std::iota(perm.begin(), perm.end(), 0);
    struct Cand {
        double proxy;
        std::vector<int> sigma;
    };
    std::vector<Cand> cands;
    do {
        bool ok = true;
        for (int i = 0; i < k && ok; ++i) ok = (rw[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] == rv[static_cast<std::size_t>(i)]);
        if (!ok) continue;
        std::vector<Matrix> blocks;
        blocks.reserve(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i) {
            const Matrix& y = yb[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
            const Matrix& x = xb[static_cast<std::size_t>(i)];
            // Frobenius-optimal block gauge (Procrustes polar factor).
            const Matrix target = y.adjoint() * x;
            Eigen::JacobiSVD<Matrix> svd(target, Eigen::ComputeFullU | Eigen::ComputeFullV);
            const Matrix g = svd.matrixU() * svd.matrixV().adjoint();
            blocks.push_back(y * g * x.adjoint());
        }
        std::vector<double> phi(static_cast<std::size_t>(k), 0.0);
        for (std::size_t b = 0; b < blocks.size(); ++b) {
            const Complex tr = blocks[b].trace();
            phi[b] = (std::abs(tr) > 0) ? -std::arg(tr) : 0.0;
        }
        std::vector<Complex> ones(static_cast<std::size_t>(v.dim()), Complex(1, 0));
        cands.push_back(Cand{detail::conjugator_objective(blocks, phi, ones), perm});
    } while (std::next_permutation(perm.begin(), perm.end()));
    if (cands.empty()) return std::nullopt;
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.proxy < b.proxy; });
    const std::size_t refine = std::min<std::size_t>(cands.size(), 12);

    Rng rng(seed);
    double best = cands.front().proxy;
    for (std::size_t c = 0; c < refine; ++c) {
        const auto& sigma = cands[c].sigma;
        std::vector<Matrix> gauges;
        auto rebuild = [&](std::vector<Matrix>& blocks) {
            blocks.clear();
            for (int i = 0; i < k; ++i)
                blocks.push_back(yb[static_cast<std::size_t>(sigma[static_cast<std::size_t>(i)])] *
                                 gauges[static_cast<std::size_t>(i)] * xb[static_cast<std::size_t>(i)].adjoint());
        };
        for (int i = 0; i < k; ++i) {
            const Matrix target = yb[static_cast<std::size_t>(sigma[static_cast<std::size_t>(i)])].adjoint() *
                                  xb[static_cast<std::size_t>(i)];
            Eigen::JacobiSVD<Matrix> svd(target, Eigen::ComputeFullU | Eigen::ComputeFullV);
            gauges.push_back(svd.matrixU() * svd.matrixV().adjoint());
        }
        std::vector<Matrix> blocks;
        rebuild(blocks);
        std::vector<double> phi(static_cast<std::size_t>(k), 0.0);
        std::vector<Complex> colphase(static_cast<std::size_t>(v.dim()), Complex(1, 0));
        double value = detail::descend_phases(blocks, phi, colphase);

        // Local refinement of rank >= 2 block gauges.
        for (double scale : {0.3, 0.1, 0.03, 0.01}) {
            bool any_big = false;
            for (int i = 0; i < k; ++i) {
                const int r = rv[static_cast<std::size_t>(i)];
                if (r < 2) continue;
                any_big = true;
                for (int trial = 0; trial < 20; ++trial) {
                    Matrix h(r, r);
                    for (int a = 0; a < r; ++a) {
                        h(a, a) = Complex(rng.normal(), 0.0);
                        for (int b2 = a + 1; b2 < r; ++b2) {
                            h(a, b2) = Complex(rng.normal(), rng.normal()) * M_SQRT1_2;
                            h(b2, a) = std::conj(h(a, b2));
                        }
                    }
                    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
                    Matrix expo = Matrix::Zero(r, r);
                    for (int a = 0; a < r; ++a)
                        expo += std::polar(1.0, scale * es.eigenvalues()(a)) * es.eigenvectors().col(a) *
                                es.eigenvectors().col(a).adjoint();
                    const Matrix save = gauges[static_cast<std::size_t>(i)];
                    gauges[static_cast<std::size_t>(i)] = save * expo;
                    rebuild(blocks);
                    std::vector<double> phi2 = phi;
                    std::vector<Complex> col2 = colphase;
                    const double v2 = detail::descend_phases(blocks, phi2, col2, 2);
                    if (v2 < value) {
                        value = v2;
                        phi = phi2;
                        colphase = col2;
                    } else {
                        gauges[static_cast<std::size_t>(i)] = save;
                    }
                }
            }
            if (!any_big) break;
        }
        rebuild(blocks);
        value = detail::descend_phases(blocks, phi, colphase);
        best = std::min(best, value);
    }
    return best;
}

}  // namespace ctxent

#endif  // CTXENT_CONTEXT_HPP
