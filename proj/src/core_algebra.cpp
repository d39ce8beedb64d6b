#include "qcascade/core_algebra.hpp"

#include "qcascade/errors.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <random>
#include <vector>

namespace qc {

namespace {

void require_even(int dim, const char* op) {
    if (dim <= 0 || dim % 2 != 0) {
        throw DimensionError("core_algebra", op, "dimension must be even and positive, got " + std::to_string(dim));
    }
}

}  // namespace

Mat signature(int dim) {
    require_even(dim, "signature");
    Mat j = Mat::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) j(i, i) = (i % 2 == 0) ? 1.0 : -1.0;
    return j;
}

Mat sigma(int dim) {
    require_even(dim, "sigma");
    Mat s = Mat::Zero(dim, dim);
    for (int i = 0; i < dim; i += 2) {
        s(i, i + 1) = 1.0;
        s(i + 1, i) = 1.0;
    }
    return s;
}

Mat signature_block(int dim) {
    require_even(dim, "signature_block");
    Mat j = Mat::Identity(dim, dim);
    j.bottomRightCorner(dim / 2, dim / 2) *= -1.0;
    return j;
}

Mat sigma_block(int dim) {
    require_even(dim, "sigma_block");
    const int n = dim / 2;
    Mat s = Mat::Zero(dim, dim);
    s.topRightCorner(n, n).setIdentity();
    s.bottomLeftCorner(n, n).setIdentity();
    return s;
}

Mat port_permutation(int dim) {
    require_even(dim, "port_permutation");
    const int n = dim / 2;
    Mat p = Mat::Zero(dim, dim);
    for (int i = 0; i < n; ++i) {
        p(2 * i, i) = 1.0;
        p(2 * i + 1, n + i) = 1.0;
    }
    return p;
}

Mat to_interleaved(const Mat& block_form) {
    return port_permutation(static_cast<int>(block_form.rows())) * block_form *
           port_permutation(static_cast<int>(block_form.cols())).transpose();
}

Mat to_block(const Mat& interleaved_form) {
    return port_permutation(static_cast<int>(interleaved_form.rows())).transpose() * interleaved_form *
           port_permutation(static_cast<int>(interleaved_form.cols()));
}

Mat doubled(const Mat& minus, const Mat& plus, Layout layout) {
    if (minus.rows() != plus.rows() || minus.cols() != plus.cols()) {
        throw DimensionError("core_algebra", "doubled", "M- and M+ shapes differ");
    }
    const Eigen::Index r = minus.rows(), c = minus.cols();
    Mat out(2 * r, 2 * c);
    if (layout == Layout::block) {
        out << minus, plus, plus.conjugate(), minus.conjugate();
        return out;
    }
    for (Eigen::Index i = 0; i < r; ++i) {
        for (Eigen::Index j = 0; j < c; ++j) {
            out(2 * i, 2 * j) = minus(i, j);
            out(2 * i, 2 * j + 1) = plus(i, j);
            out(2 * i + 1, 2 * j) = std::conj(plus(i, j));
            out(2 * i + 1, 2 * j + 1) = std::conj(minus(i, j));
        }
    }
    return out;
}

Mat flat(const Mat& m) {
    require_even(static_cast<int>(m.rows()), "flat");
    require_even(static_cast<int>(m.cols()), "flat");
    return signature(static_cast<int>(m.cols())) * m.adjoint() * signature(static_cast<int>(m.rows()));
}

double norm2(const Mat& m) {
    if (m.size() == 0) return 0.0;
    return Eigen::JacobiSVD<Mat>(m).singularValues()(0);
}

double sigma_min(const Mat& m) {
    if (m.size() == 0) return 0.0;
    auto sv = Eigen::JacobiSVD<Mat>(m).singularValues();
    return sv(sv.size() - 1);
}

Residual is_j_unitary(const Mat& m, double tol) {
    if (m.rows() != m.cols()) {
        throw DimensionError("core_algebra", "is_j_unitary", "matrix must be square");
    }
    const Mat j = signature(static_cast<int>(m.rows()));
    const double r = std::max(norm2(m * j * m.adjoint() - j), norm2(m.adjoint() * j * m - j));
    return {r <= tol, r};
}

Residual is_doubled_up(const Mat& m, double tol, Layout layout) {
    require_even(static_cast<int>(m.rows()), "is_doubled_up");
    require_even(static_cast<int>(m.cols()), "is_doubled_up");
    const int r = static_cast<int>(m.rows()), c = static_cast<int>(m.cols());
    const Mat sr = layout == Layout::block ? sigma_block(r) : sigma(r);
    const Mat sc = layout == Layout::block ? sigma_block(c) : sigma(c);
    const double res = norm2(m * sc - sr * m.conjugate());
    return {res <= tol, res};
}

DoubledUpMatrix::DoubledUpMatrix(Mat data, Layout layout) : data_(std::move(data)), layout_(layout) {
    require_even(static_cast<int>(data_.rows()), "DoubledUpMatrix");
    require_even(static_cast<int>(data_.cols()), "DoubledUpMatrix");
}

DoubledUpMatrix DoubledUpMatrix::in(Layout target) const {
    if (target == layout_) return *this;
    return {target == Layout::block ? to_block(data_) : to_interleaved(data_), target};
}

Residual DoubledUpMatrix::check(double tol) const { return is_doubled_up(data_, tol, layout_); }

DoubledUpMatrix operator*(const DoubledUpMatrix& a, const DoubledUpMatrix& b) {
    if (a.layout_ != b.layout_) {
        throw DimensionError("core_algebra", "multiply", "operands use different port layouts");
    }
    if (a.data_.cols() != b.data_.rows()) {
        throw DimensionError("core_algebra", "multiply", "inner dimensions differ");
    }
    return {a.data_ * b.data_, a.layout_};
}

Mat random_j_unitary_doubled_up(int n, std::uint64_t seed, double scale) {
    if (n < 1) throw DimensionError("core_algebra", "random_j_unitary_doubled_up", "n must be >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, scale);
    auto draw = [&] { return cplx(nd(rng), nd(rng)); };
    Mat hm(n, n), hp(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            hm(i, j) = draw();
            hp(i, j) = draw();
        }
    }
    hm = 0.5 * (hm + hm.adjoint()).eval();
    hp = 0.5 * (hp + hp.transpose()).eval();
    const Mat h = doubled(hm, hp);
    const Mat x = I_unit * signature(2 * n) * h;
    return x.exp();
}

Mat indefinite_complete(const Mat& w, double tol) {
    const int dim = static_cast<int>(w.rows());
    const int k = static_cast<int>(w.cols());
    require_even(dim, "indefinite_complete");
    if (k > dim || k < 1) {
        throw DimensionError("core_algebra", "indefinite_complete", "need 1 <= k <= 2n columns");
    }
    const Mat j = signature(dim);
    Mat jk = Mat::Zero(k, k);
    for (int i = 0; i < k; ++i) jk(i, i) = (i % 2 == 0) ? 1.0 : -1.0;
    const double gram_res = norm2(w.adjoint() * j * w - jk);
    if (gram_res > std::max(tol, 1e-8)) {
        throw DegeneracyError("core_algebra", "indefinite_complete",
                              "columns are not J-orthonormal (residual " + std::to_string(gram_res) +
                                  "); the span is degenerate or unnormalized");
    }
    if (k == dim) return w;

    // J-orthogonal complement: null space of W^dagger J.
    Eigen::JacobiSVD<Mat> svd(w.adjoint() * j, Eigen::ComputeFullV);
    const Mat comp = svd.matrixV().rightCols(dim - k);
    Eigen::SelfAdjointEigenSolver<Mat> es(comp.adjoint() * j * comp);
    const auto& lam = es.eigenvalues();
    std::vector<Vec> pos, neg;
    for (int i = 0; i < dim - k; ++i) {
        if (std::abs(lam(i)) < 1e-12) {
            throw DegeneracyError("core_algebra", "indefinite_complete", "complement contains a J-null direction");
        }
        Vec x = comp * es.eigenvectors().col(i) / std::sqrt(std::abs(lam(i)));
        (lam(i) > 0 ? pos : neg).push_back(x);
    }
    Mat m(dim, dim);
    m.leftCols(k) = w;
    for (int c = k; c < dim; ++c) {
        auto& pool = (c % 2 == 0) ? pos : neg;
        if (pool.empty()) {
            throw DegeneracyError("core_algebra", "indefinite_complete", "signature of W incompatible with J");
        }
        m.col(c) = pool.back();
        pool.pop_back();
    }
    return m;
}

double doubled_up_pair_residual(const Mat& at_z, const Mat& at_conj_z) {
    if (at_z.rows() != at_conj_z.rows() || at_z.cols() != at_conj_z.cols()) {
        throw DimensionError("core_algebra", "doubled_up_pair_residual", "samples differ in shape");
    }
    return norm2(at_z * sigma(static_cast<int>(at_z.cols())) - sigma(static_cast<int>(at_z.rows())) * at_conj_z.conjugate());
}

}  // namespace qc
