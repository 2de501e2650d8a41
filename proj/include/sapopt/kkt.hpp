#ifndef SAPOPT_KKT_HPP
#define SAPOPT_KKT_HPP

/**
 * @file
 * @brief Cached factorization of [[I, A^T], [A, 0]] for repeated Euclidean
 * projections onto {z | A z = b}.
 */

#include <Eigen/Dense>
#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <memory>
#include <vector>

#include "sapopt/errors.hpp"

namespace sapopt {

struct KktOptions
{
  /// Static regularization: the (2,2) block becomes -eps I. Zero disables it.
  double regularization = 1e-9;
  /// Force the dense or sparse path; by default small dense matrices go dense.
  enum class Path { Auto, Dense, Sparse } path = Path::Auto;
  int max_refinement = 2;
  /// Refine while the unregularized residual exceeds this times (1 + ||v|| + ||b||).
  double refinement_tolerance = 1e-12;
};

template<typename Scalar>
class KktFactor
{
public:
  using SparseMatrix = Eigen::SparseMatrix<Scalar>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  /**
   * @throws Error(SingularKkt) if a pivot vanishes relative to the largest one.
   */
  explicit KktFactor(const SparseMatrix& A, KktOptions opts = {})
      : A_(A), opts_(opts)
  {
    const Eigen::Index n = A.cols(), m = A.rows();
    const Eigen::Index dim = n + m;
    const double density = (n * m == 0) ? 0.0 : double(A.nonZeros()) / double(n * m);
    dense_ = opts.path == KktOptions::Path::Dense
             || (opts.path == KktOptions::Path::Auto && dim <= 400 && density > 0.3);
    if (m == 0) { return; }

    std::vector<Eigen::Triplet<Scalar>> trip;
    trip.reserve(static_cast<std::size_t>(n + m + 2 * A.nonZeros()));
    for (Eigen::Index i = 0; i < n; ++i) { trip.emplace_back(i, i, Scalar(1)); }
    for (Eigen::Index i = 0; i < m; ++i) { trip.emplace_back(n + i, n + i, -Scalar(opts.regularization)); }
    for (Eigen::Index j = 0; j < A.outerSize(); ++j) {
      for (typename SparseMatrix::InnerIterator it(A, j); it; ++it) {
        trip.emplace_back(n + it.row(), it.col(), it.value());
        trip.emplace_back(it.col(), n + it.row(), it.value());
      }
    }
    SparseMatrix K(dim, dim);
    K.setFromTriplets(trip.begin(), trip.end());

    Vector diag;
    if (dense_) {
      dense_ldlt_ = std::make_shared<Eigen::LDLT<DenseMatrix>>(DenseMatrix(K));
      if (dense_ldlt_->info() != Eigen::Success) {
        throw Error(ErrorCode::SingularKkt, "dense KKT factorization failed");
      }
      diag = dense_ldlt_->vectorD();
    } else {
      sparse_ldlt_ = std::make_shared<Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>>();
      sparse_ldlt_->compute(K);
      if (sparse_ldlt_->info() != Eigen::Success) {
        throw Error(ErrorCode::SingularKkt, "sparse KKT factorization failed");
      }
      diag = sparse_ldlt_->vectorD();
    }
    const Scalar dmax = diag.cwiseAbs().maxCoeff();
    const Scalar dmin = diag.cwiseAbs().minCoeff();
    if (!(dmin > Scalar(1e-12) * dmax)) {
      throw Error(ErrorCode::SingularKkt, "KKT matrix is numerically singular");
    }
  }

  Eigen::Index rows() const { return A_.rows(); }
  Eigen::Index cols() const { return A_.cols(); }
  double regularization() const { return opts_.regularization; }
  bool dense() const { return dense_; }
  const SparseMatrix& matrix() const { return A_; }

  /**
   * @brief argmin ||z - v|| subject to A z = b.
   *
   * Refinement passes target the unregularized system and run only while its
   * residual exceeds refinement_tolerance (1 + ||v|| + ||b||).
   */
  Vector project(const Vector& v, const Vector& b) const
  {
    const Eigen::Index n = A_.cols(), m = A_.rows();
    if (v.size() != n || b.size() != m) {
      throw Error(ErrorCode::DimensionMismatch, "projection vector sizes do not match the factored matrix");
    }
    if (m == 0) { return v; }
    Vector rhs(n + m);
    rhs << v, b;
    Vector sol = solve(rhs);
    const Scalar threshold = Scalar(opts_.refinement_tolerance) * (Scalar(1) + v.norm() + b.norm());
    for (int pass = 0; pass < opts_.max_refinement; ++pass) {
      Vector res = rhs - apply_unregularized(sol);
      if (res.norm() <= threshold) { break; }
      sol += solve(res);
    }
    return sol.head(n);
  }

private:
  Vector solve(const Vector& rhs) const
  {
    return dense_ ? Vector(dense_ldlt_->solve(rhs)) : Vector(sparse_ldlt_->solve(rhs));
  }

  Vector apply_unregularized(const Vector& sol) const
  {
    const Eigen::Index n = A_.cols(), m = A_.rows();
    Vector out(n + m);
    out.head(n) = sol.head(n) + A_.transpose() * sol.tail(m);
    out.tail(m) = A_ * sol.head(n);
    return out;
  }

  SparseMatrix A_;
  KktOptions opts_;
  bool dense_ = false;
  std::shared_ptr<Eigen::LDLT<DenseMatrix>> dense_ldlt_;
  std::shared_ptr<Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>> sparse_ldlt_;
};

template<typename Scalar>
KktFactor<Scalar> factor(const Eigen::SparseMatrix<Scalar>& A, KktOptions opts = {})
{
  return KktFactor<Scalar>(A, opts);
}

template<typename Scalar>
typename KktFactor<Scalar>::Vector project_affine(const KktFactor<Scalar>& F,
                                                  const typename KktFactor<Scalar>::Vector& v,
                                                  const typename KktFactor<Scalar>::Vector& b)
{
  return F.project(v, b);
}

}  // namespace sapopt

#endif  // SAPOPT_KKT_HPP
