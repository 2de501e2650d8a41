#include "sapopt/problem.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

namespace sapopt {

void Scaling::validate(Eigen::Index m, Eigen::Index n) const
{
  if (d.size() != m || e.size() != n) {
    throw Error(ErrorCode::DimensionMismatch,
                "scaling has " + std::to_string(d.size()) + " row and " + std::to_string(e.size())
                    + " column entries, problem is " + std::to_string(m) + "x" + std::to_string(n));
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!(d[i] > 0) || !std::isfinite(d[i])) { throw Error(ErrorCode::InvalidInput, "row scale must be positive", i); }
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!(e[j] > 0) || !std::isfinite(e[j])) {
      throw Error(ErrorCode::InvalidInput, "variable scale must be positive", j);
    }
  }
}

SapProblem::SapProblem(SparseMatrix A, Vector b, std::vector<Pwq> f)
    : A_(std::move(A)), b_(std::move(b)), f_(std::move(f))
{
  if (A_.cols() != static_cast<Eigen::Index>(f_.size())) {
    throw Error(ErrorCode::DimensionMismatch, "A has " + std::to_string(A_.cols()) + " columns but "
                                                  + std::to_string(f_.size()) + " functions were given");
  }
  if (A_.rows() != b_.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "A has " + std::to_string(A_.rows()) + " rows but b has " + std::to_string(b_.size()) + " entries");
  }
  for (std::size_t i = 0; i < f_.size(); ++i) {
    if (f_[i].empty()) { throw Error(ErrorCode::EmptyDomain, "function has an empty domain", long(i)); }
  }
  A_.makeCompressed();
}

SapProblem new_problem(SparseMatrix A, Vector b, std::vector<Pwq> f)
{
  return SapProblem(std::move(A), std::move(b), std::move(f));
}

SapProblem new_problem(const Matrix& A, Vector b, std::vector<Pwq> f)
{
  return SapProblem(A.sparseView(), std::move(b), std::move(f));
}

double objective(const SapProblem& p, const Vector& x)
{
  if (x.size() != p.cols()) { throw Error(ErrorCode::DimensionMismatch, "point has the wrong length"); }
  double total = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    total += p.f(i)(x[i]);
    if (total == infinity<double>()) { break; }
  }
  return total;
}

double residual_norm(const SapProblem& p, const Vector& x)
{
  if (x.size() != p.cols()) { throw Error(ErrorCode::DimensionMismatch, "point has the wrong length"); }
  return (p.A() * x - p.b()).norm();
}

SapProblem scale(const SapProblem& p, const Scaling& s)
{
  s.validate(p.rows(), p.cols());
  SparseMatrix As = s.d.asDiagonal() * p.A() * s.e.asDiagonal();
  Vector bs = s.d.cwiseProduct(p.b());
  std::vector<Pwq> fs;
  fs.reserve(p.f().size());
  for (Eigen::Index i = 0; i < p.cols(); ++i) { fs.push_back(shift_scale_arg(p.f(i), s.e[i], 0.0)); }
  return SapProblem(std::move(As), std::move(bs), std::move(fs));
}

Vector unscale_solution(const Scaling& s, const Vector& x_scaled)
{
  return s.e.cwiseProduct(x_scaled);
}

Vector scale_point(const Scaling& s, const Vector& x)
{
  return x.cwiseQuotient(s.e);
}

SapProblem relax(const SapProblem& p)
{
  std::vector<Pwq> env;
  env.reserve(p.f().size());
  for (std::size_t i = 0; i < p.f().size(); ++i) {
    try {
      env.push_back(envelope(p.f()[i]));
    } catch (const Error& err) {
      throw Error(err.code(), "envelope of component failed", long(i));
    }
  }
  return SapProblem(p.A(), p.b(), std::move(env));
}

SapProblem lp_adapter(const Vector& c, const Matrix& A, const Vector& b)
{
  std::vector<Pwq> f;
  f.reserve(static_cast<std::size_t>(c.size()));
  for (Eigen::Index i = 0; i < c.size(); ++i) { f.push_back(Pwq::quadratic(0, c[i], 0, 0, infinity<double>())); }
  return new_problem(A, b, std::move(f));
}

SapProblem iqp_adapter(const Matrix& P, const Vector& q, const Matrix& A, const Vector& b,
                       std::optional<double> upper)
{
  const Eigen::Index n = P.rows();
  if (P.cols() != n || q.size() != n || A.cols() != n) {
    throw Error(ErrorCode::DimensionMismatch, "P, q and A must agree in the variable dimension");
  }
  if (upper && !(*upper >= 0)) { throw Error(ErrorCode::InvalidInput, "upper bound must be nonnegative"); }

  Eigen::SelfAdjointEigenSolver<Matrix> eig(P);
  const Vector& lambda = eig.eigenvalues();
  const double lmax = n > 0 ? lambda.cwiseAbs().maxCoeff() : 0.0;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (std::abs(lambda[j]) > 1e-10 * lmax) { keep.push_back(j); }
  }
  const Eigen::Index r = static_cast<Eigen::Index>(keep.size());
  Matrix F(n, r);
  for (Eigen::Index j = 0; j < r; ++j) { F.col(j) = eig.eigenvectors().col(keep[std::size_t(j)]); }

  const Eigen::Index m = A.rows();
  Matrix L = Matrix::Zero(m + r, n + r);
  L.topLeftCorner(m, n) = A;
  L.bottomLeftCorner(r, n) = F.transpose();
  L.bottomRightCorner(r, r) = -Matrix::Identity(r, r);
  Vector bl = Vector::Zero(m + r);
  bl.head(m) = b;

  const double hi = upper ? *upper : infinity<double>();
  std::vector<Pwq> f;
  f.reserve(std::size_t(n + r));
  for (Eigen::Index i = 0; i < n; ++i) { f.push_back(Pwq::quadratic(0, q[i], 0, 0, hi)); }
  for (Eigen::Index j = 0; j < r; ++j) {
    double zlo = -infinity<double>(), zhi = infinity<double>();
    if (upper) {
      zlo = zhi = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double v = F(i, j) * *upper;
        zlo += std::min(0.0, v);
        zhi += std::max(0.0, v);
      }
    }
    f.push_back(Pwq::quadratic(lambda[keep[std::size_t(j)]], 0, 0, zlo, zhi));
  }
  return new_problem(L, bl, std::move(f));
}

Scaling equilibrate(const SapProblem& p, int iterations)
{
  const Eigen::Index m = p.rows(), n = p.cols();
  Scaling s = Scaling::identity(m, n);
  Matrix M = Matrix(p.A());
  for (int it = 0; it < iterations; ++it) {
    Vector dr(m), dc(n);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double norm = M.row(i).cwiseAbs().maxCoeff();
      dr[i] = norm > 0 ? 1.0 / std::sqrt(norm) : 1.0;
    }
    M = dr.asDiagonal() * M;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double norm = m > 0 ? M.col(j).cwiseAbs().maxCoeff() : 0.0;
      dc[j] = norm > 0 ? 1.0 / std::sqrt(norm) : 1.0;
    }
    M = M * dc.asDiagonal();
    s.d = s.d.cwiseProduct(dr);
    s.e = s.e.cwiseProduct(dc);
  }
  return s;
}

}  // namespace sapopt
