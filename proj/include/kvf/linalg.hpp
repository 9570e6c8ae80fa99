#pragma once

// Numerical rank and kernels of tall stacked systems.

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <limits>

namespace kvf {

/// Default rank-threshold scale: singular values below tol * max(sigma_max, 1) count as zero.
inline constexpr double kDefaultRankTol = 1e-8;

struct RankDecision {
    std::size_t rank = 0;
    double threshold = 0.0;
    double sigma_max = 0.0;
    double smallest_retained = 0.0;                                     // 0 when rank == 0
    double largest_discarded = 0.0;                                     // 0 when the kernel is empty
    Eigen::VectorXd singular_values;
    Eigen::MatrixXd row_basis;     // cols x rank, orthonormal
    Eigen::MatrixXd kernel_basis;  // cols x (cols - rank), orthonormal

    std::size_t nullity() const { return static_cast<std::size_t>(kernel_basis.cols()); }
};

/// Accumulates rows of a matrix with a fixed column count, keeping only a
/// cols x cols triangular factor with the same singular values as the full stack.
class RowSpace {
public:
    explicit RowSpace(std::size_t cols) : cols_(cols), r_(0, static_cast<Eigen::Index>(cols)) {}

    std::size_t cols() const noexcept { return cols_; }

    void add_rows(const Eigen::MatrixXd& block) {
        const Eigen::Index chunk = 4096;
        for (Eigen::Index start = 0; start < block.rows(); start += chunk) {
            const Eigen::Index len = std::min(chunk, block.rows() - start);
            Eigen::MatrixXd stacked(r_.rows() + len, static_cast<Eigen::Index>(cols_));
            stacked << r_, block.middleRows(start, len);
            compress(std::move(stacked));
        }
    }

    RankDecision decide(double tol) const {
        RankDecision d;
        const auto c = static_cast<Eigen::Index>(cols_);
        Eigen::MatrixXd square = Eigen::MatrixXd::Zero(c, c);
        square.topRows(r_.rows()) = r_;
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(square, Eigen::ComputeFullV);
        d.singular_values = svd.singularValues();
        d.sigma_max = c > 0 ? d.singular_values(0) : 0.0;
        d.threshold = tol * std::max(d.sigma_max, 1.0);
        while (d.rank < cols_ && d.singular_values(static_cast<Eigen::Index>(d.rank)) > d.threshold) ++d.rank;
        const auto rk = static_cast<Eigen::Index>(d.rank);
        if (rk > 0) d.smallest_retained = d.singular_values(rk - 1);
        if (rk < c) d.largest_discarded = d.singular_values(rk);
        d.row_basis = svd.matrixV().leftCols(rk);
        d.kernel_basis = svd.matrixV().rightCols(c - rk);
        return d;
    }

private:
    void compress(Eigen::MatrixXd stacked) {
        if (stacked.rows() <= static_cast<Eigen::Index>(cols_)) {
            r_ = std::move(stacked);
            return;
        }
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(stacked);
        const auto c = static_cast<Eigen::Index>(cols_);
        r_ = qr.matrixQR().topRows(c).triangularView<Eigen::Upper>();
    }

    std::size_t cols_;
    Eigen::MatrixXd r_;
};

inline RankDecision numerical_rank(const Eigen::MatrixXd& m, double tol) {
    RowSpace rs(static_cast<std::size_t>(m.cols()));
    rs.add_rows(m);
    return rs.decide(tol);
}

}  // namespace kvf
