#ifndef SAPOPT_PROBLEM_HPP
#define SAPOPT_PROBLEM_HPP

/**
 * @file
 * @brief Separable-affine problems: minimize sum_i f_i(x_i) subject to A x = b.
 */

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <optional>
#include <vector>

#include "sapopt/pwq.hpp"

namespace sapopt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Pwq = PiecewiseQuadratic<double>;
using Piece = QuadPiece<double>;

/// Diagonal scalings: d over constraint rows, e over variables. Entries must be positive.
struct Scaling
{
  Vector d;
  Vector e;

  static Scaling identity(Eigen::Index m, Eigen::Index n)
  {
    return {Vector::Ones(m), Vector::Ones(n)};
  }

  /// @throws Error(DimensionMismatch) or Error(InvalidInput).
  void validate(Eigen::Index m, Eigen::Index n) const;
};

class SapProblem
{
public:
  /// @throws Error(DimensionMismatch), Error(EmptyDomain) with the component index.
  SapProblem(SparseMatrix A, Vector b, std::vector<Pwq> f);

  const SparseMatrix& A() const { return A_; }
  const Vector& b() const { return b_; }
  const std::vector<Pwq>& f() const { return f_; }
  const Pwq& f(Eigen::Index i) const { return f_[static_cast<std::size_t>(i)]; }

  /// m, the number of equality constraints.
  Eigen::Index rows() const { return A_.rows(); }
  /// n, the number of variables.
  Eigen::Index cols() const { return A_.cols(); }

private:
  SparseMatrix A_;
  Vector b_;
  std::vector<Pwq> f_;
};

SapProblem new_problem(SparseMatrix A, Vector b, std::vector<Pwq> f);
SapProblem new_problem(const Matrix& A, Vector b, std::vector<Pwq> f);

/// sum_i f_i(x_i); +inf if some x_i lies outside dom f_i.
double objective(const SapProblem& p, const Vector& x);

/// ||A x - b||_2.
double residual_norm(const SapProblem& p, const Vector& x);

/// Problem in x~ = E^{-1} x with data D A E, D b and f_i(e_i x~_i).
SapProblem scale(const SapProblem& p, const Scaling& s);

/// x = E x~.
Vector unscale_solution(const Scaling& s, const Vector& x_scaled);

/// x~ = E^{-1} x.
Vector scale_point(const Scaling& s, const Vector& x);

/// Same constraints with every f_i replaced by its convex envelope.
/// @throws Error(Unbounded) with the component index.
SapProblem relax(const SapProblem& p);

/// minimize c^T x subject to A x = b, x >= 0.
SapProblem lp_adapter(const Vector& c, const Matrix& A, const Vector& b);

/**
 * @brief minimize x^T P x + q^T x subject to A x = b, x >= 0 (optionally x <= upper),
 * lifted to variables (x, z) with z = F^T x and P = F diag(lambda) F^T.
 *
 * Eigenvalues with |lambda| <= 1e-10 max|lambda| are dropped. When an upper
 * bound is given the z components are restricted to the interval implied by
 * the box, which keeps concave terms bounded below.
 */
SapProblem iqp_adapter(const Matrix& P, const Vector& q, const Matrix& A, const Vector& b,
                       std::optional<double> upper = std::nullopt);

/// Ruiz equilibration of A; returns the resulting row and column scales.
Scaling equilibrate(const SapProblem& p, int iterations = 15);

}  // namespace sapopt

#endif  // SAPOPT_PROBLEM_HPP
