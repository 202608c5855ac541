#include "qmt/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace qmt {
namespace {

// Eigenvalues below this are numerical noise regardless of scale; all
// quantities here are normalized so that D(Omega, Omega) = 1.
constexpr double kNoiseFloor = 1e-15;

double threshold(double lmax, double rel) { return std::max(rel * std::max(lmax, 0.0), kNoiseFloor); }

}  // namespace

Spectrum hermitian_eig(const Mat& h) {
  Spectrum s;
  if (h.rows() == 0) return s;
  Mat herm = (h + h.adjoint()) * 0.5;
  Eigen::SelfAdjointEigenSolver<Mat> es(herm);
  s.values = es.eigenvalues();
  s.vectors = es.eigenvectors();
  return s;
}

double max_eigenvalue(const Mat& h) {
  if (h.rows() == 0) return 0.0;
  Mat herm = (h + h.adjoint()) * 0.5;
  Eigen::SelfAdjointEigenSolver<Mat> es(herm, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

std::size_t numerical_rank(const RVec& eigenvalues, double rel) {
  if (eigenvalues.size() == 0) return 0;
  double thr = threshold(eigenvalues.maxCoeff(), rel);
  std::size_t r = 0;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i)
    if (eigenvalues(i) > thr) ++r;
  return r;
}

Mat range_basis(const Mat& v, double rel) {
  const Eigen::Index d = v.rows(), n = v.cols();
  if (d == 0 || n == 0) return Mat(d, 0);
  if (d <= n) {
    Spectrum s = hermitian_eig(v * v.adjoint());
    double thr = threshold(s.values(d - 1), rel);
    Eigen::Index first = 0;
    while (first < d && s.values(first) <= thr) ++first;
    return s.vectors.rightCols(d - first);
  }
  Spectrum s = hermitian_eig(v.adjoint() * v);
  double thr = threshold(s.values(n - 1), rel);
  Eigen::Index first = 0;
  while (first < n && s.values(first) <= thr) ++first;
  Eigen::Index r = n - first;
  Mat u = v * s.vectors.rightCols(r);
  for (Eigen::Index j = 0; j < r; ++j) u.col(j) /= std::sqrt(s.values(first + j));
  // Re-orthonormalize to wash out the division by small eigenvalues.
  Eigen::HouseholderQR<Mat> qr(u);
  return qr.householderQ() * Mat::Identity(d, r);
}

Mat kernel_basis(const Mat& gram, double rel) {
  const Eigen::Index n = gram.rows();
  if (n == 0) return Mat(0, 0);
  Spectrum s = hermitian_eig(gram);
  double thr = threshold(s.values(n - 1), rel);
  Eigen::Index k = 0;
  while (k < n && s.values(k) <= thr) ++k;
  return s.vectors.leftCols(k);
}

double inf_norm(const Mat& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

double max_abs(const Mat& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().maxCoeff();
}

}  // namespace qmt
