#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>

namespace qc {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline constexpr cplx I_unit{0.0, 1.0};

// Port layout of a doubled-up matrix. The library works in the interleaved
// layout (a_1, a_1^*, a_2, a_2^*, ...); block layout is (a_1..a_n, a_1^*..a_n^*).
enum class Layout { interleaved, block };

struct Residual {
    bool ok = false;
    double value = 0.0;
};

// J = diag(+1, -1, +1, -1, ...) of size dim (interleaved layout).
Mat signature(int dim);
// Sigma: swaps each annihilation/creation pair (interleaved layout).
Mat sigma(int dim);
// Block-layout counterparts.
Mat signature_block(int dim);
Mat sigma_block(int dim);

// Permutation taking block layout to interleaved layout: x_int = P x_block.
Mat port_permutation(int dim);
Mat to_interleaved(const Mat& block_form);
Mat to_block(const Mat& interleaved_form);

// Delta(M-, M+) in the requested layout. Rectangular blocks allowed.
Mat doubled(const Mat& minus, const Mat& plus, Layout layout = Layout::interleaved);

// J-adjoint J_c M^dagger J_r; rows/cols must be even.
Mat flat(const Mat& m);

Residual is_j_unitary(const Mat& m, double tol = 1e-10);
// Residual of M Sigma - Sigma M^# (M may be rectangular with even sides).
Residual is_doubled_up(const Mat& m, double tol = 1e-10, Layout layout = Layout::interleaved);

// Doubled-up residual of a matrix function sampled at z and at conj(z):
// |T(z) Sigma - Sigma conj(T(conj z))|. Interleaved layout.
double doubled_up_pair_residual(const Mat& at_z, const Mat& at_conj_z);

// Doubled-up matrix that remembers its layout; products refuse mixed layouts.
class DoubledUpMatrix {
public:
    DoubledUpMatrix() = default;
    DoubledUpMatrix(Mat data, Layout layout);

    const Mat& data() const { return data_; }
    Layout layout() const { return layout_; }
    DoubledUpMatrix in(Layout target) const;
    Residual check(double tol = 1e-10) const;

    friend DoubledUpMatrix operator*(const DoubledUpMatrix& a, const DoubledUpMatrix& b);

private:
    Mat data_;
    Layout layout_ = Layout::interleaved;
};

// exp(X) with X = i J H, H a random Hermitian doubled-up matrix (n modes).
Mat random_j_unitary_doubled_up(int n, std::uint64_t seed, double scale = 0.5);

// Extend W (2n x k, W^dagger J W = J_k) to a J-unitary 2n x 2n matrix whose
// first k columns are W.
Mat indefinite_complete(const Mat& w, double tol = 1e-10);

// Spectral-norm helpers used throughout.
double norm2(const Mat& m);
double sigma_min(const Mat& m);

}  // namespace qc
