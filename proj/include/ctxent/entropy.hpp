#ifndef CTXENT_ENTROPY_HPP
#define CTXENT_ENTROPY_HPP

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <span>
#include <sstream>

#include "ctxent/measure.hpp"

namespace ctxent {

/// Entropy functional selector. Natural logarithm throughout; all bounds are
/// ln n. Renyi(0) normalizes to Hartley, q near 1 dispatches to Shannon,
/// Chebyshev is the q -> infinity limit -ln p_max.
struct EntropyKind {
    enum class Family { shannon, renyi, hartley, chebyshev };
    Family family = Family::shannon;
    double q = 1.0;

    static EntropyKind shannon() { return {Family::shannon, 1.0}; }
    static EntropyKind hartley() { return {Family::hartley, 0.0}; }
    static EntropyKind chebyshev() { return {Family::chebyshev, std::numeric_limits<double>::infinity()}; }
    static EntropyKind renyi(double q) {
        if (q < 0.0 || !std::isfinite(q)) throw Error(errc::unsupported_kind, "Renyi parameter must be finite and >= 0");
        if (q == 0.0) return hartley();
        return {Family::renyi, q};
    }

    std::string name() const {
        switch (family) {
            case Family::shannon: return "shannon";
            case Family::hartley: return "hartley";
            case Family::chebyshev: return "chebyshev";
            case Family::renyi: {
                std::ostringstream os;
                os << "renyi:" << q;
                return os.str();
            }
        }
        return "?";
    }
};

namespace detail {

inline void require_probability_vector(std::span<const double> p, const NumericPolicy& num) {
    if (p.empty()) throw Error(errc::not_a_probability_vector, "empty vector");
    double sum = 0.0;
    for (double x : p) {
        if (!std::isfinite(x) || x < -num.tol_prob)
            throw Error(errc::not_a_probability_vector, "entry " + std::to_string(x) + " negative");
        sum += x;
    }
    if (std::abs(sum - 1.0) > num.tol_prob)
        throw Error(errc::not_a_probability_vector, "sum " + std::to_string(sum) + " differs from 1",
                    std::abs(sum - 1.0));
}

inline double xlnx(double x) { return (x > 0.0) ? x * std::log(x) : 0.0; }

}  // namespace detail

/// Shannon entropy in nats with the 0 ln 0 = 0 convention.
inline double shannon(std::span<const double> p, const NumericPolicy& num = NumericPolicy::standard()) {
    detail::require_probability_vector(p, num);
    double h = 0.0;
    for (double x : p) h -= detail::xlnx(std::max(x, 0.0));
    return std::max(h, 0.0);
}

inline double shannon(std::initializer_list<double> p, const NumericPolicy& num = NumericPolicy::standard()) {
    return shannon(std::span<const double>(p.begin(), p.size()), num);
}

/// Entropy of `kind` on a probability vector. Entries below tol_prob count
/// as exact zeros for Hartley.
inline double entropy_value(const EntropyKind& kind, std::span<const double> p,
                            const NumericPolicy& num = NumericPolicy::standard()) {
    detail::require_probability_vector(p, num);
    switch (kind.family) {
        case EntropyKind::Family::shannon:
            return shannon(p, num);
        case EntropyKind::Family::hartley: {
            int nonzero = 0;
            for (double x : p)
                if (x > num.tol_prob) ++nonzero;
            return std::log(std::max(nonzero, 1));
        }
        case EntropyKind::Family::chebyshev: {
            double pmax = 0.0;
            for (double x : p) pmax = std::max(pmax, x);
            return -std::log(pmax);
        }
        case EntropyKind::Family::renyi: {
            if (std::abs(kind.q - 1.0) < 1e-6) return shannon(p, num);
            double s = 0.0;
            for (double x : p)
                if (x > 0.0) s += std::pow(x, kind.q);
            return std::log(s) / (1.0 - kind.q);
        }
    }
    throw Error(errc::unsupported_kind, "unknown entropy family");
}

inline double entropy_value(const EntropyKind& kind, std::initializer_list<double> p,
                            const NumericPolicy& num = NumericPolicy::standard()) {
    return entropy_value(kind, std::span<const double>(p.begin(), p.size()), num);
}

/// E(mu_rho)|_V, the entropy the state induces at the context.
inline double contextual_entropy(const DensityMatrix& rho, const Context& v,
                                 const EntropyKind& kind = EntropyKind::shannon(),
                                 const NumericPolicy& num = NumericPolicy::standard()) {
    return entropy_value(kind, measure_probs(rho, v, num), num);
}

/// Groupwise sums of a probability vector.
inline std::vector<double> coarse_grain(std::span<const double> p,
                                        const std::vector<std::vector<int>>& partition) {
    std::vector<bool> seen(p.size(), false);
    std::vector<double> out;
    out.reserve(partition.size());
    for (const auto& group : partition) {
        double s = 0.0;
        for (int i : group) {
            if (i < 0 || static_cast<std::size_t>(i) >= p.size() || seen[static_cast<std::size_t>(i)])
                throw Error(errc::bad_partition, "partition must cover indices disjointly");
            seen[static_cast<std::size_t>(i)] = true;
            s += p[static_cast<std::size_t>(i)];
        }
        out.push_back(s);
    }
    for (bool s : seen)
        if (!s) throw Error(errc::bad_partition, "partition must cover all indices");
    return out;
}

/// |LHS - RHS| of the Shannon recursion identity across a refinement pair:
/// Sh(V') = Sh(V) + sum_i mu(P_i) Sh(mu(Q^i_j)/mu(P_i)). Groups with
/// mu(P_i) <= tol_prob contribute nothing.
inline double check_recursion(const DensityMatrix& rho, const Context& v_coarse, const Context& v_fine,
                              const NumericPolicy& num = NumericPolicy::standard()) {
    const auto partition = refines(v_fine, v_coarse, num);
    if (!partition) throw Error(errc::not_a_refinement, "fine context does not refine the coarse one");
    const std::vector<double> fine = measure_probs(rho, v_fine, num);
    const std::vector<double> coarse = measure_probs(rho, v_coarse, num);
    const double lhs = shannon(fine, num);
    double rhs = shannon(coarse, num);
    for (std::size_t i = 0; i < partition->size(); ++i) {
        const double mass = coarse[i];
        if (mass <= num.tol_prob) continue;
        std::vector<double> inner;
        inner.reserve((*partition)[i].size());
        double isum = 0.0;
        for (int j : (*partition)[i]) {
            inner.push_back(std::clamp(fine[static_cast<std::size_t>(j)] / mass, 0.0, 1.0));
            isum += inner.back();
        }
        // Renormalize the conditional vector against accumulated rounding.
        for (double& x : inner) x /= isum;
        rhs += mass * shannon(inner, num);
    }
    return std::abs(lhs - rhs);
}

/// True when entropy does not increase under the coarse-graining.
inline bool check_weak_recursivity(const EntropyKind& kind, std::span<const double> p,
                                   const std::vector<std::vector<int>>& partition,
                                   const NumericPolicy& num = NumericPolicy::standard()) {
    const std::vector<double> q = coarse_grain(p, partition);
    return entropy_value(kind, p, num) >= entropy_value(kind, q, num) - num.tol_prob;
}

// ---------------------------------------------------------------------------
// Two-outcome inversion
// ---------------------------------------------------------------------------

/// Entropy of (x, 1-x) for the given kind.
inline double two_outcome_entropy(const EntropyKind& kind, double x,
                                  const NumericPolicy& num = NumericPolicy::standard()) {
    const double p[2] = {x, 1.0 - x};
    return entropy_value(kind, std::span<const double>(p, 2), num);
}

/// Solve entropy(x, 1-x) = target for the pair of symmetric roots,
/// p_low <= 1/2 <= p_high = 1 - p_low. The equation is transcendental;
/// bisection runs on the exponent of x, which keeps the re-evaluation
/// residual below tol_inv even where the curve has infinite slope.
inline std::pair<double, double> invert_two_outcome(const EntropyKind& kind, double target,
                                                    const NumericPolicy& num = NumericPolicy::standard()) {
    if (kind.family == EntropyKind::Family::hartley)
        throw Error(errc::unsupported_kind, "Hartley entropy is not invertible on two outcomes");
    if (kind.family == EntropyKind::Family::renyi && kind.q <= 0.0)
        throw Error(errc::unsupported_kind, "inversion requires Renyi parameter q > 0");
    const double ln2 = std::log(2.0);
    if (target < -num.tol_inv)
        throw Error(errc::target_negative, "target " + std::to_string(target) + " below 0");
    if (target > ln2 + num.tol_inv)
        throw Error(errc::target_out_of_range,
                    "target " + std::to_string(target) + " above ln 2; no two-outcome context attains it",
                    target - ln2);
    if (target <= 0.0) return {0.0, 1.0};
    if (target >= ln2) return {0.5, 0.5};

    // x = 2^e, e in [-1074, -1]; the two-outcome entropy is strictly
    // increasing in x on (0, 1/2].
    double lo = -1074.0, hi = -1.0;
    double best_x = 0.5, best_res = std::abs(two_outcome_entropy(kind, 0.5, num) - target);
    if (target < best_res) {
        best_x = 0.0;
        best_res = target;
    }
    for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double x = std::exp2(mid);
        const double val = two_outcome_entropy(kind, x, num);
        if (std::abs(val - target) < best_res) {
            best_res = std::abs(val - target);
            best_x = x;
        }
        if (val < target)
            lo = mid;
        else
            hi = mid;
    }
    return {best_x, 1.0 - best_x};
}

// ---------------------------------------------------------------------------
// Entropy oracles and recorded sections
// ---------------------------------------------------------------------------

/// Black-box global section: one entropy value per context, within
/// [0, ln n]. Query counting is shared across copies so an optional budget
/// survives pass-by-value; queries are safe from concurrent workers.
class EntropyOracle {
  public:
    EntropyOracle(int dim, std::function<double(const Context&)> query_context,
                  std::function<double(const Matrix&)> query_maximal_columns = nullptr,
                  std::optional<long long> budget = std::nullopt)
        : dim_(dim),
          query_(std::move(query_context)),
          query_maximal_(std::move(query_maximal_columns)),
          budget_(budget),
          used_(std::make_shared<std::atomic<long long>>(0)) {}

    int dim() const { return dim_; }

    double query(const Context& v) const {
        count_one();
        return query_(v);
    }

    /// Maximal-context query by generating unitary; falls back to building
    /// the context when no direct route was provided.
    double query_maximal_unitary(const Unitary& u, const NumericPolicy& num = NumericPolicy::standard()) const {
        count_one();
        if (query_maximal_) return query_maximal_(u.matrix());
        return query_(maximal_context_from_unitary(u, num).context());
    }

    long long queries_used() const { return used_->load(); }
    std::optional<long long> budget() const { return budget_; }

  private:
    void count_one() const {
        const long long n = ++(*used_);
        if (budget_ && n > *budget_)
            throw Error(errc::budget_exhausted, "oracle budget of " + std::to_string(*budget_) + " queries spent");
    }

    int dim_;
    std::function<double(const Context&)> query_;
    std::function<double(const Matrix&)> query_maximal_;
    std::optional<long long> budget_;
    std::shared_ptr<std::atomic<long long>> used_;
};

/// Oracle evaluating the contextual entropy of a stored state; the direct
/// maximal-context route skips projection assembly inside optimization
/// loops.
inline EntropyOracle make_state_oracle(const DensityMatrix& rho,
                                       const EntropyKind& kind = EntropyKind::shannon(),
                                       const NumericPolicy& num = NumericPolicy::standard(),
                                       std::optional<long long> budget = std::nullopt) {
    auto state = std::make_shared<DensityMatrix>(rho);
    auto by_context = [state, kind, num](const Context& v) { return contextual_entropy(*state, v, kind, num); };
    auto by_columns = [state, kind, num](const Matrix& u) {
        const int n = state->dim();
        std::vector<double> probs(static_cast<std::size_t>(n));
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
            const double x = std::real((u.col(i).adjoint() * state->matrix() * u.col(i))(0, 0));
            probs[static_cast<std::size_t>(i)] = std::clamp(x, 0.0, 1.0);
            sum += probs[static_cast<std::size_t>(i)];
        }
        for (double& x : probs) x /= sum;
        return entropy_value(kind, probs, num);
    };
    return EntropyOracle(rho.dim(), by_context, by_columns, budget);
}

/// Finite sample of a global section: (context, value) pairs with a rounded
/// fingerprint index for exact replay lookup.
class EntropySectionSample {
  public:
    explicit EntropySectionSample(int dim = 0) : dim_(dim) {}

    int dim() const { return dim_; }
    std::size_t size() const { return entries_.size(); }
    const std::vector<std::pair<Context, double>>& entries() const { return entries_; }
    std::vector<std::pair<Context, double>>& entries() { return entries_; }

    void add(const Context& v, double value) {
        const std::string key = fingerprint(v);
        auto it = index_.find(key);
        if (it == index_.end()) {
            index_.emplace(key, entries_.size());
            entries_.emplace_back(v, value);
        }
    }

    std::optional<double> find(const Context& v) const {
        auto it = index_.find(fingerprint(v));
        if (it == index_.end()) return std::nullopt;
        return entries_[it->second].second;
    }

    void rebuild_index() {
        index_.clear();
        for (std::size_t i = 0; i < entries_.size(); ++i) index_.emplace(fingerprint(entries_[i].first), i);
    }

    static std::string fingerprint(const Context& v) {
        std::ostringstream os;
        os << v.dim() << '|' << v.size();
        for (const auto& p : v.projections()) {
            os << '#' << p.rank();
            const Matrix& m = p.matrix();
            for (Eigen::Index i = 0; i < m.rows(); ++i)
                for (Eigen::Index j = 0; j < m.cols(); ++j)
                    os << ',' << detail::round8(m(i, j).real()) << ',' << detail::round8(m(i, j).imag());
        }
        return os.str();
    }

  private:
    int dim_;
    std::vector<std::pair<Context, double>> entries_;
    std::map<std::string, std::size_t> index_;
};

/// Replay oracle backed by a recorded sample; unknown contexts are an error
/// so silent fabrication cannot happen.
inline EntropyOracle make_section_oracle(std::shared_ptr<const EntropySectionSample> sample) {
    const int dim = sample->dim();
    auto fn = [sample](const Context& v) {
        const auto hit = sample->find(v);
        if (!hit)
            throw Error(errc::missing_context,
                        "section sample does not cover a queried context; replay with the recording's flags");
        return *hit;
    };
    return EntropyOracle(dim, fn);
}

/// Wrap an oracle so every query lands in `sink`; the direct maximal route
/// is disabled so recorded and replayed query streams coincide.
inline EntropyOracle make_recording_oracle(const EntropyOracle& inner,
                                           std::shared_ptr<EntropySectionSample> sink) {
    auto fn = [inner, sink](const Context& v) {
        const double value = inner.query(v);
        sink->add(v, value);
        return value;
    };
    return EntropyOracle(inner.dim(), fn);
}

// ---------------------------------------------------------------------------
// Curve data (two-outcome entropy graphs)
// ---------------------------------------------------------------------------

/// CSV `x,value` for Sh(x, 1-x) on a uniform grid.
inline void write_shannon_curve(std::ostream& os, int grid_points = 1001) {
    os << "x,value\n";
    for (int i = 0; i < grid_points; ++i) {
        const double x = static_cast<double>(i) / (grid_points - 1);
        os << x << ',' << shannon({x, 1.0 - x}) << '\n';
    }
}

/// CSV `x,q,value` for R_q(x, 1-x); Shannon rows carry q=1, Chebyshev q=inf.
inline void write_renyi_curves(std::ostream& os, const std::vector<EntropyKind>& kinds, int grid_points = 1001) {
    os << "x,q,value\n";
    for (const auto& kind : kinds) {
        std::string q;
        switch (kind.family) {
            case EntropyKind::Family::shannon: q = "1"; break;
            case EntropyKind::Family::hartley: q = "0"; break;
            case EntropyKind::Family::chebyshev: q = "inf"; break;
            case EntropyKind::Family::renyi: {
                std::ostringstream tmp;
                tmp << kind.q;
                q = tmp.str();
                break;
            }
        }
        for (int i = 0; i < grid_points; ++i) {
            const double x = static_cast<double>(i) / (grid_points - 1);
            os << x << ',' << q << ',' << entropy_value(kind, {x, 1.0 - x}) << '\n';
        }
    }
}

}  // namespace ctxent

#endif  // CTXENT_ENTROPY_HPP
