#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <memory>

namespace jdr {

enum class EigenOrdering { by_value_desc, by_abs_desc };

/// Abstract symmetric linear operator y = M x. Implementations must be
/// symmetric; the solver does not verify this.
class SymOp {
public:
    virtual ~SymOp() = default;
    virtual int dim() const = 0;
    virtual void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const = 0;
};

class SparseSymOp final : public SymOp {
public:
    explicit SparseSymOp(const Eigen::SparseMatrix<double>& m) : m_(m) {}
    int dim() const override { return static_cast<int>(m_.rows()); }
    void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const override {
        y.resize(m_.rows());
        y.noalias() = m_ * x;
    }

private:
    const Eigen::SparseMatrix<double>& m_;
};

class DenseSymOp final : public SymOp {
public:
    explicit DenseSymOp(const Eigen::MatrixXd& m) : m_(m) {}
    int dim() const override { return static_cast<int>(m_.rows()); }
    void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const override {
        y.resize(m_.rows());
        y.noalias() = m_ * x;
    }

private:
    const Eigen::MatrixXd& m_;
};

/// Abstract rectangular operator with apply (X w) and apply_t (X^T u).
class RectOp {
public:
    virtual ~RectOp() = default;
    virtual int rows() const = 0;
    virtual int cols() const = 0;
    virtual void apply(const Eigen::VectorXd& w, Eigen::VectorXd& u) const = 0;
    virtual void apply_t(const Eigen::VectorXd& u, Eigen::VectorXd& w) const = 0;
};

class DenseRectOp final : public RectOp {
public:
    explicit DenseRectOp(const Eigen::MatrixXd& m) : m_(m) {}
    int rows() const override { return static_cast<int>(m_.rows()); }
    int cols() const override { return static_cast<int>(m_.cols()); }
    void apply(const Eigen::VectorXd& w, Eigen::VectorXd& u) const override {
        u.resize(m_.rows());
        u.noalias() = m_ * w;
    }
    void apply_t(const Eigen::VectorXd& u, Eigen::VectorXd& w) const override {
        w.resize(m_.cols());
        w.noalias() = m_.transpose() * u;
    }

private:
    const Eigen::MatrixXd& m_;
};

struct SolverConfig {
    double tol = 1e-8;
    int max_iter = 0; // 0 = 10 * L * ceil(sqrt(N)), capped at N
    std::uint64_t seed = 0;
};

/// Truncated eigenpairs of a symmetric matrix.
///
/// `vectors` columns are unit norm with the entry of largest magnitude made
/// nonnegative; `values` are sorted per `ordering`.
struct SpectralBasis {
    Eigen::MatrixXd vectors;  // N x L
    Eigen::VectorXd values;   // L
    EigenOrdering ordering = EigenOrdering::by_value_desc;
};

/// Truncated singular triplets, singular values descending.
struct SvdBasis {
    Eigen::MatrixXd left_vectors;    // N x L
    Eigen::VectorXd singular_values; // L, nonnegative
    Eigen::MatrixXd right_vectors;   // F x L
    bool degenerate = false;         // some requested triplet had sigma ~ 0
};

/// Leading L eigenpairs of a symmetric operator by Lanczos iteration with
/// full reorthogonalization. Under by_abs_desc the L pairs of largest
/// magnitude are returned (both spectrum ends are resolved and merged).
/// Residuals satisfy ||M v - lambda v|| <= tol * max(1, |lambda|).
SpectralBasis eigs_top(const SymOp& m, int L, EigenOrdering ordering,
                       const SolverConfig& cfg = {});

SpectralBasis eigs_top(const Eigen::SparseMatrix<double>& m, int L,
                       EigenOrdering ordering, const SolverConfig& cfg = {});
SpectralBasis eigs_top(const Eigen::MatrixXd& m, int L, EigenOrdering ordering,
                       const SolverConfig& cfg = {});

/// Top-L singular triplets via Lanczos on the Gram operator of the smaller
/// side. Residuals satisfy ||X w - s u|| and ||X^T u - s w|| <= tol * s_1.
SvdBasis svd_top(const RectOp& x, int L, const SolverConfig& cfg = {});
SvdBasis svd_top(const Eigen::MatrixXd& x, int L, const SolverConfig& cfg = {});

/// Low-rank synthesis sum_i values[i] * v_i v_i^T, exactly symmetric.
/// Callers combine this with whatever spectral remainder they carry.
Eigen::MatrixXd synthesize(const Eigen::MatrixXd& vectors,
                           const Eigen::VectorXd& values);

// Dense reference paths (used as oracles in tests and for small problems).
SpectralBasis dense_eig_full(const Eigen::MatrixXd& m, EigenOrdering ordering);
SvdBasis dense_svd_full(const Eigen::MatrixXd& x);

/// Flip columns so each one's entry of largest magnitude is nonnegative.
/// For paired factors (SVD), pass `paired` to flip in lockstep.
void canonicalize_signs(Eigen::MatrixXd& vectors, Eigen::MatrixXd* paired = nullptr);

} // namespace jdr
