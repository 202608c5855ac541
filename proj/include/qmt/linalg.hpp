#pragma once

#include <complex>
#include <cstdint>

#include <Eigen/Dense>

namespace qmt {

using cd = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

inline constexpr const char* kLibraryVersion = "0.1.0";

struct Tolerance {
  double rel = 1e-9;        // relative threshold for hermiticity, PSD, rank, kernels
  double abs = 1e-9;        // absolute threshold for residual-style checks
  double zero_rule = 1e-12; // classical patching: mu(k) at or below this is zero
  double feasibility_gap = 1e-6;
};

// Eigen-decomposition of the Hermitian part of `h`, eigenvalues ascending.
struct Spectrum {
  RVec values;
  Mat vectors;
};
Spectrum hermitian_eig(const Mat& h);

double max_eigenvalue(const Mat& h);

// Count of eigenvalues above rel * max(largest, 0).
std::size_t numerical_rank(const RVec& eigenvalues, double rel);

// Orthonormal basis (d x r) of the column span of v (d x n).
// Columns with Gram eigenvalue <= rel * lambda_max are treated as noise.
Mat range_basis(const Mat& v, double rel);

// Columns spanning {x : G x = 0} for a PSD Gram G, same threshold as rank.
Mat kernel_basis(const Mat& gram, double rel);

// Max-row-sum norm.
double inf_norm(const Mat& m);

double max_abs(const Mat& m);

}  // namespace qmt
