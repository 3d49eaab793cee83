#ifndef CTXENT_MATRIXCORE_HPP
#define CTXENT_MATRIXCORE_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <complex>
#include <numeric>
#include <vector>

#include "ctxent/numeric.hpp"

namespace ctxent {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

/// Max-abs entry norm, the norm used for every residual in this library.
inline double max_abs(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    return m.cwiseAbs().maxCoeff();
}

inline bool all_finite(const Matrix& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag())) return false;
    return true;
}

inline double hermiticity_residual(const Matrix& m) { return max_abs(m - m.adjoint()); }

// ---------------------------------------------------------------------------
// Strong domain types. Each is an immutable validated wrapper; construction
// goes through the checked factories below.
// ---------------------------------------------------------------------------

/// n x n positive-semidefinite unit-trace Hermitian matrix.
class DensityMatrix {
  public:
    const Matrix& matrix() const { return m_; }
    int dim() const { return static_cast<int>(m_.rows()); }

  private:
    friend DensityMatrix validate_density(const Matrix&, const NumericPolicy&);
    explicit DensityMatrix(Matrix m) : m_(std::move(m)) {}
    Matrix m_;
};

/// Orthogonal projection with its (integer) rank.
class Projection {
  public:
    const Matrix& matrix() const { return m_; }
    int dim() const { return static_cast<int>(m_.rows()); }
    int rank() const { return rank_; }

    static Projection validated(const Matrix& m, const NumericPolicy& num = NumericPolicy::standard()) {
        if (m.rows() != m.cols())
            throw Error(errc::bad_input, "projection must be square");
        if (!all_finite(m)) throw Error(errc::bad_input, "projection has non-finite entries");
        const double herm = hermiticity_residual(m);
        if (herm > num.tol_herm)
            throw Error(errc::not_hermitian, "projection Hermiticity residual " + std::to_string(herm), herm);
        const double idem = max_abs(m * m - m);
        if (idem > num.tol_proj)
            throw Error(errc::not_hermitian, "projection idempotency residual " + std::to_string(idem), idem);
        const double tr = m.trace().real();
        const int rank = static_cast<int>(std::lround(tr));
        const double trres = std::abs(tr - rank);
        if (trres > num.tol_trace)
            throw Error(errc::bad_rank, "projection trace " + std::to_string(tr) + " is not near an integer", trres);
        return Projection(m, rank);
    }

  private:
    Projection(Matrix m, int rank) : m_(std::move(m)), rank_(rank) {}
    Matrix m_;
    int rank_;
};

/// Matrix with U U^dag = I within tolerance.
class Unitary {
  public:
    const Matrix& matrix() const { return m_; }
    int dim() const { return static_cast<int>(m_.rows()); }
    Vector column(int i) const { return m_.col(i); }

    static Unitary validated(const Matrix& m, const NumericPolicy& num = NumericPolicy::standard()) {
        if (m.rows() != m.cols()) throw Error(errc::bad_input, "unitary must be square");
        if (!all_finite(m)) throw Error(errc::bad_input, "unitary has non-finite entries");
        const Matrix id = Matrix::Identity(m.rows(), m.cols());
        const double res = max_abs(m * m.adjoint() - id);
        if (res > num.tol_unitary)
            throw Error(errc::not_hermitian, "unitarity residual " + std::to_string(res), res);
        return Unitary(m);
    }

  private:
    explicit Unitary(Matrix m) : m_(std::move(m)) {}
    Matrix m_;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Validate all three state invariants; throws naming the violated one
/// together with the measured residual.
inline DensityMatrix validate_density(const Matrix& m, const NumericPolicy& num = NumericPolicy::standard()) {
    if (m.rows() != m.cols()) throw Error(errc::bad_input, "state must be square");
    if (!all_finite(m)) throw Error(errc::bad_input, "state has non-finite entries");
    const double herm = hermiticity_residual(m);
    if (herm > num.tol_herm)
        throw Error(errc::not_hermitian, "Hermiticity residual " + std::to_string(herm), herm);
    const double trres = std::abs(m.trace().real() - 1.0) + std::abs(m.trace().imag());
    if (trres > num.tol_trace)
        throw Error(errc::not_unit_trace, "trace residual " + std::to_string(trres), trres);
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    const double min_eig = es.eigenvalues().minCoeff();
    if (min_eig < -num.tol_psd)
        throw Error(errc::not_positive, "minimal eigenvalue " + std::to_string(min_eig), -min_eig);
    return DensityMatrix(m);
}

/// Kronecker product: (a (x) b)[(i*p+k),(j*q+l)] = a[i,j] * b[k,l] with b p x q.
inline Matrix tensor(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

enum class Keep { First, Second };

/// Partial trace of a state on an n*m-dimensional composite. The defining
/// property Tr(rho (P (x) I)) = Tr(rho1 P) holds entrywise by construction.
inline Matrix partial_trace_matrix(const Matrix& rho, int n, int m, Keep keep) {
    if (rho.rows() != rho.cols() || rho.rows() != static_cast<Eigen::Index>(n) * m)
        throw Error(errc::dimension_mismatch,
                    "state dimension " + std::to_string(rho.rows()) + " is not " + std::to_string(n) + "*" +
                        std::to_string(m));
    if (keep == Keep::First) {
        Matrix out = Matrix::Zero(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < m; ++k) out(i, j) += rho(i * m + k, j * m + k);
        return out;
    }
    Matrix out = Matrix::Zero(m, m);
    for (int k = 0; k < m; ++k)
        for (int l = 0; l < m; ++l)
            for (int i = 0; i < n; ++i) out(k, l) += rho(i * m + k, i * m + l);
    return out;
}

inline DensityMatrix partial_trace(const DensityMatrix& rho, int n, int m, Keep keep,
                                   const NumericPolicy& num = NumericPolicy::standard()) {
    return validate_density(partial_trace_matrix(rho.matrix(), n, m, keep), num);
}

struct EigResult {
    RealVector eigenvalues;  // descending
    Unitary eigenvectors;    // columns match eigenvalue order
};

namespace detail {

/// Fix the phase of a vector so its first component above threshold is real
/// positive; makes eigenvector listings reproducible.
inline Vector phase_fixed(Vector v, double thresh = 1e-8) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) > thresh) {
            v *= std::conj(v(i)) / std::abs(v(i));
            break;
        }
    }
    return v;
}

inline double round8(double x) { return std::round(x * 1e8) / 1e8; }

/// Lexicographic comparison of rounded (re, im) entry pairs.
inline bool lex_less(const Matrix& a, const Matrix& b) {
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            const double ar = round8(a(i, j).real()), br = round8(b(i, j).real());
            if (ar != br) return ar < br;
            const double ai = round8(a(i, j).imag()), bi = round8(b(i, j).imag());
            if (ai != bi) return ai < bi;
        }
    return false;
}

}  // namespace detail

/// Hermitian eigendecomposition with a deterministic ordering: eigenvalues
/// descending, degenerate groups ordered by phase-fixed eigenvector entries.
/// This is the independent spectral oracle the optimization tests compare
/// against.
inline EigResult eig_hermitian(const Matrix& m, const NumericPolicy& num = NumericPolicy::standard()) {
    if (m.rows() != m.cols()) throw Error(errc::bad_input, "matrix must be square");
    const double herm = hermiticity_residual(m);
    if (herm > num.tol_herm)
        throw Error(errc::not_hermitian, "Hermiticity residual " + std::to_string(herm), herm);
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    const int n = static_cast<int>(m.rows());
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<Vector> cols(n);
    for (int i = 0; i < n; ++i) cols[i] = detail::phase_fixed(es.eigenvectors().col(i));
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double la = es.eigenvalues()(a), lb = es.eigenvalues()(b);
        if (la != lb) return la > lb;
        return detail::lex_less(cols[a], cols[b]);
    });
    RealVector vals(n);
    Matrix vecs(n, n);
    for (int i = 0; i < n; ++i) {
        vals(i) = es.eigenvalues()(order[i]);
        vecs.col(i) = cols[order[i]];
    }
    const double rec = max_abs(vecs * vals.asDiagonal().toDenseMatrix().cast<Complex>() * vecs.adjoint() - m);
    if (rec > num.tol_eig)
        throw Error(errc::numerical_breakdown, "eigendecomposition residual " + std::to_string(rec), rec);
    return EigResult{std::move(vals), Unitary::validated(vecs, num)};
}

/// QR of a complex Gaussian matrix, R-diagonal phases absorbed into Q so the
/// distribution is Haar.
inline Unitary haar_random_unitary(int n, Rng& rng, const NumericPolicy& num = NumericPolicy::standard()) {
    if (n < 1) throw Error(errc::bad_input, "dimension must be positive");
    Matrix g(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) g(i, j) = Complex(rng.normal(), rng.normal()) * M_SQRT1_2;
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(n, n);
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < n; ++j) {
        const Complex d = r(j, j);
        q.col(j) *= (std::abs(d) > 0.0) ? d / std::abs(d) : Complex(1.0, 0.0);
    }
    return Unitary::validated(q, num);
}

inline Unitary haar_random_unitary(int n, std::uint64_t seed,
                                   const NumericPolicy& num = NumericPolicy::standard()) {
    Rng rng(seed);
    return haar_random_unitary(n, rng, num);
}

/// rho = U diag(p) U^dag with p a flat-Dirichlet vector on `rank` entries
/// and U Haar.
inline DensityMatrix random_density(int n, int rank, std::uint64_t seed,
                                    const NumericPolicy& num = NumericPolicy::standard()) {
    if (rank < 1 || rank > n)
        throw Error(errc::bad_rank, "rank " + std::to_string(rank) + " out of [1, " + std::to_string(n) + "]");
    Rng rng(seed);
    RealVector p = RealVector::Zero(n);
    double total = 0.0;
    for (int i = 0; i < rank; ++i) {
        double u = 0.0;
        while (u <= 0.0) u = rng.uniform();
        p(i) = -std::log(u);
        total += p(i);
    }
    p /= total;
    const Unitary u = haar_random_unitary(n, rng, num);
    const Matrix rho = u.matrix() * p.asDiagonal().toDenseMatrix().cast<Complex>() * u.matrix().adjoint();
    return validate_density(rho, num);
}

/// 1/2 ||a - b||_1, the reconstruction accuracy metric.
inline double trace_distance(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw Error(errc::dimension_mismatch, "trace distance needs equal shapes");
    Eigen::SelfAdjointEigenSolver<Matrix> es(a - b, Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

inline double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
    return trace_distance(a.matrix(), b.matrix());
}

}  // namespace ctxent

#endif  // CTXENT_MATRIXCORE_HPP
