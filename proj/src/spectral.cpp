#include "jdr/spectral.hpp"
#include "jdr/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace jdr {

namespace {

Eigen::VectorXd random_unit_vector(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = normal(rng);
    double norm = v.norm();
    if (norm == 0.0) {
        v.setZero();
        v[0] = 1.0;
        return v;
    }
    return v / norm;
}

/// Indices of the L wanted Ritz values under the ordering mode.
std::vector<int> select_wanted(const Eigen::VectorXd& theta, int L,
                               EigenOrdering ordering) {
    std::vector<int> idx(theta.size());
    std::iota(idx.begin(), idx.end(), 0);
    auto by_value = [&](int a, int b) { return theta[a] > theta[b]; };
    auto by_abs = [&](int a, int b) {
        double aa = std::abs(theta[a]), ab = std::abs(theta[b]);
        if (aa != ab) return aa > ab;
        return theta[a] > theta[b];
    };
    if (ordering == EigenOrdering::by_value_desc)
        std::sort(idx.begin(), idx.end(), by_value);
    else
        std::sort(idx.begin(), idx.end(), by_abs);
    idx.resize(L);
    return idx;
}

struct TridiagEigen {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
};

TridiagEigen tridiag_eigen(const Eigen::VectorXd& alpha,
                           const Eigen::VectorXd& beta, int m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    Eigen::VectorXd diag = alpha.head(m);
    Eigen::VectorXd sub = m > 1 ? Eigen::VectorXd(beta.head(m - 1))
                                : Eigen::VectorXd();
    es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("eigs_top: tridiagonal eigensolver failed");
    return {es.eigenvalues(), es.eigenvectors()};
}

} // namespace

void canonicalize_signs(Eigen::MatrixXd& vectors, Eigen::MatrixXd* paired) {
    for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
        Eigen::Index imax = 0;
        vectors.col(c).cwiseAbs().maxCoeff(&imax);
        if (vectors(imax, c) < 0.0) {
            vectors.col(c) = -vectors.col(c);
            if (paired) paired->col(c) = -paired->col(c);
        }
    }
}

SpectralBasis eigs_top(const SymOp& m, int L, EigenOrdering ordering,
                       const SolverConfig& cfg) {
    const int n = m.dim();
    if (n < 1) throw std::invalid_argument("eigs_top: empty operator");
    if (L < 1 || L > n)
        throw std::invalid_argument("eigs_top: need 1 <= L <= " + std::to_string(n));

    int max_steps;
    if (cfg.max_iter > 0) {
        max_steps = std::min(cfg.max_iter, n);
    } else {
        max_steps = 10 * L * static_cast<int>(std::ceil(std::sqrt(double(n))));
        max_steps = std::min(std::max(max_steps, 2 * L + 30), n);
    }

    auto rng = make_rng(cfg.seed, "lanczos");
    Eigen::MatrixXd basis(n, max_steps);
    Eigen::VectorXd alpha(max_steps), beta(max_steps);
    beta.setZero();
    basis.col(0) = random_unit_vector(n, rng);

    Eigen::VectorXd w(n);
    double scale_est = 1.0;
    int m_cur = 0;

    // A converged wanted set is only accepted after a confirmation restart:
    // a fresh random direction is injected and the set must survive a few
    // more steps unchanged. This is what surfaces repeated eigenvalues,
    // which a single Krylov sequence cannot represent twice.
    Eigen::VectorXd snapshot;
    int snapshot_step = -1;
    bool restart_next = false;

    for (int step = 0; step < max_steps; ++step) {
        m.apply(basis.col(step), w);
        alpha[step] = basis.col(step).dot(w);
        scale_est = std::max(scale_est, std::abs(alpha[step]));
        m_cur = step + 1;

        w.noalias() -= alpha[step] * basis.col(step);
        if (step > 0 && beta[step - 1] != 0.0)
            w.noalias() -= beta[step - 1] * basis.col(step - 1);
        // Full reorthogonalization, two passes.
        for (int pass = 0; pass < 2; ++pass)
            w.noalias() -= basis.leftCols(m_cur) *
                           (basis.leftCols(m_cur).transpose() * w);

        double b = w.norm();
        const bool invariant = b <= 1e-12 * scale_est;

        bool check_now = invariant || m_cur == max_steps || m_cur == n ||
                         (m_cur >= L && m_cur % 5 == 0);
        if (check_now && m_cur >= L) {
            auto te = tridiag_eigen(alpha, beta, m_cur);
            auto wanted = select_wanted(te.values, L, ordering);
            bool all_ok = true;
            for (int i : wanted) {
                double est = b * std::abs(te.vectors(m_cur - 1, i));
                if (est > cfg.tol * std::max(1.0, std::abs(te.values[i]))) {
                    all_ok = false;
                    break;
                }
            }
            if (all_ok) {
                if (m_cur >= n || m_cur == max_steps) break;
                Eigen::VectorXd current(L);
                for (int i = 0; i < L; ++i) current[i] = te.values[wanted[i]];
                bool same = snapshot.size() == L;
                for (int i = 0; same && i < L; ++i)
                    if (std::abs(current[i] - snapshot[i]) >
                        10.0 * cfg.tol * std::max(1.0, std::abs(current[i])))
                        same = false;
                const int dwell = std::min(L + 2, n - snapshot_step);
                if (same) {
                    if (m_cur >= snapshot_step + dwell) break; // confirmed
                } else {
                    snapshot = current;
                    snapshot_step = m_cur;
                    restart_next = true;
                }
            }
        }
        if (m_cur == max_steps) break;

        if (invariant || restart_next) {
            restart_next = false;
            if (invariant && m_cur >= n) break;
            // Continue from a fresh direction orthogonal to the basis so the
            // unexplored complement (and any repeated eigenvalue) is reached.
            int tries = 0;
            do {
                w = random_unit_vector(n, rng);
                for (int pass = 0; pass < 2; ++pass)
                    w.noalias() -= basis.leftCols(m_cur) *
                                   (basis.leftCols(m_cur).transpose() * w);
                b = w.norm();
            } while (b <= 1e-8 && ++tries < 8);
            if (b <= 1e-8)
                throw std::runtime_error("eigs_top: failed to extend Lanczos basis");
            beta[step] = 0.0;
            basis.col(step + 1) = w / b;
        } else {
            beta[step] = b;
            basis.col(step + 1) = w / b;
        }
    }

    auto te = tridiag_eigen(alpha, beta, m_cur);
    auto wanted = select_wanted(te.values, std::min(L, m_cur), ordering);
    if (static_cast<int>(wanted.size()) < L)
        throw std::runtime_error("eigs_top: basis too small for requested L");

    SpectralBasis out;
    out.ordering = ordering;
    out.values.resize(L);
    out.vectors.resize(n, L);
    for (int i = 0; i < L; ++i) {
        out.values[i] = te.values[wanted[i]];
        out.vectors.col(i) = basis.leftCols(m_cur) * te.vectors.col(wanted[i]);
        double norm = out.vectors.col(i).norm();
        if (norm > 0) out.vectors.col(i) /= norm;
    }
    canonicalize_signs(out.vectors);

    // Verify true residuals; the estimate above is only a bound.
    double worst = 0.0;
    for (int i = 0; i < L; ++i) {
        m.apply(out.vectors.col(i), w);
        double r = (w - out.values[i] * out.vectors.col(i)).norm() /
                   std::max(1.0, std::abs(out.values[i]));
        worst = std::max(worst, r);
    }
    if (worst > cfg.tol) {
        std::ostringstream msg;
        msg << "eigs_top: no convergence within " << m_cur
            << " steps; worst residual " << worst << " (tol " << cfg.tol << ")";
        throw std::runtime_error(msg.str());
    }
    return out;
}

SpectralBasis eigs_top(const Eigen::SparseMatrix<double>& m, int L,
                       EigenOrdering ordering, const SolverConfig& cfg) {
    Eigen::SparseMatrix<double> diff =
        m - Eigen::SparseMatrix<double>(m.transpose());
    double worst = 0.0;
    for (int k = 0; k < diff.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(diff, k); it; ++it)
            worst = std::max(worst, std::abs(it.value()));
    if (worst > 1e-12)
        throw std::invalid_argument("eigs_top: matrix not symmetric");
    SparseSymOp op(m);
    return eigs_top(op, L, ordering, cfg);
}

SpectralBasis eigs_top(const Eigen::MatrixXd& m, int L, EigenOrdering ordering,
                       const SolverConfig& cfg) {
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw std::invalid_argument("eigs_top: matrix not symmetric");
    DenseSymOp op(m);
    return eigs_top(op, L, ordering, cfg);
}

namespace {

/// Gram operator of a rectangular operator, on rows (X X^T) or columns
/// (X^T X), whichever side is requested.
class GramOp final : public SymOp {
public:
    GramOp(const RectOp& x, bool on_cols)
        : x_(x), on_cols_(on_cols), tmp_(on_cols ? x.rows() : x.cols()) {}
    int dim() const override { return on_cols_ ? x_.cols() : x_.rows(); }
    void apply(const Eigen::VectorXd& v, Eigen::VectorXd& y) const override {
        y.resize(dim());
        if (on_cols_) {
            x_.apply(v, tmp_);
            x_.apply_t(tmp_, y);
        } else {
            x_.apply_t(v, tmp_);
            x_.apply(tmp_, y);
        }
    }

private:
    const RectOp& x_;
    bool on_cols_;
    mutable Eigen::VectorXd tmp_;
};

} // namespace

SvdBasis svd_top(const RectOp& x, int L, const SolverConfig& cfg) {
    const int n = x.rows(), f = x.cols();
    const int max_L = std::min(n, f);
    if (L < 1 || L > max_L)
        throw std::invalid_argument("svd_top: need 1 <= L <= min(rows, cols)");

    const bool on_cols = f <= n;
    GramOp gram(x, on_cols);

    SvdBasis out;
    double gram_tol = std::max(cfg.tol * 1e-2, 1e-15);
    for (int attempt = 0;; ++attempt) {
        SolverConfig gram_cfg = cfg;
        gram_cfg.tol = gram_tol;
        SpectralBasis eig =
            eigs_top(gram, L, EigenOrdering::by_value_desc, gram_cfg);

        out.singular_values.resize(L);
        out.left_vectors.resize(n, L);
        out.right_vectors.resize(f, L);
        out.degenerate = false;

        Eigen::VectorXd other;
        for (int i = 0; i < L; ++i) {
            double sigma = std::sqrt(std::max(0.0, eig.values[i]));
            out.singular_values[i] = sigma;
            if (on_cols) {
                out.right_vectors.col(i) = eig.vectors.col(i);
                x.apply(eig.vectors.col(i), other);
            } else {
                out.left_vectors.col(i) = eig.vectors.col(i);
                x.apply_t(eig.vectors.col(i), other);
            }
            double norm = other.norm();
            if (sigma <= 1e-12 * std::max(1.0, std::sqrt(std::max(
                                                    0.0, eig.values[0]))) ||
                norm == 0.0) {
                // Numerically zero singular value: the paired vector is not
                // determined; emit a unit basis vector and flag it.
                out.degenerate = true;
                out.singular_values[i] = std::max(0.0, out.singular_values[i]);
                Eigen::VectorXd e = Eigen::VectorXd::Zero(on_cols ? n : f);
                e[i % e.size()] = 1.0;
                if (on_cols)
                    out.left_vectors.col(i) = e;
                else
                    out.right_vectors.col(i) = e;
            } else {
                if (on_cols)
                    out.left_vectors.col(i) = other / norm;
                else
                    out.right_vectors.col(i) = other / norm;
            }
        }
        canonicalize_signs(out.left_vectors, &out.right_vectors);

        // Verify triplet residuals against the documented contract.
        const double s1 = std::max(out.singular_values[0], 0.0);
        double worst = 0.0;
        Eigen::VectorXd xu, xw;
        for (int i = 0; i < L; ++i) {
            x.apply(out.right_vectors.col(i), xu);
            xu -= out.singular_values[i] * out.left_vectors.col(i);
            x.apply_t(out.left_vectors.col(i), xw);
            xw -= out.singular_values[i] * out.right_vectors.col(i);
            worst = std::max(worst, std::max(xu.norm(), xw.norm()));
        }
        if (worst <= cfg.tol * std::max(s1, 1e-300) || out.degenerate ||
            s1 == 0.0)
            return out;
        if (attempt >= 2) {
            std::ostringstream msg;
            msg << "svd_top: no convergence; worst residual " << worst
                << " (target " << cfg.tol * s1 << ")";
            throw std::runtime_error(msg.str());
        }
        // Small singular values lose accuracy through the Gram operator;
        // tighten and retry.
        double smin = out.singular_values.minCoeff();
        gram_tol = std::max(cfg.tol * smin * s1 * 0.1, 1e-15);
    }
}

SvdBasis svd_top(const Eigen::MatrixXd& x, int L, const SolverConfig& cfg) {
    DenseRectOp op(x);
    return svd_top(op, L, cfg);
}

Eigen::MatrixXd synthesize(const Eigen::MatrixXd& vectors,
                           const Eigen::VectorXd& values) {
    if (vectors.cols() != values.size())
        throw std::invalid_argument("synthesize: shape mismatch");
    const int n = static_cast<int>(vectors.rows());
    // Column-major transposes make the inner dots contiguous; filling only
    // the upper triangle and mirroring keeps the result exactly symmetric.
    Eigen::MatrixXd vt = vectors.transpose();
    Eigen::MatrixXd wt = (vectors * values.asDiagonal()).transpose();
    Eigen::MatrixXd out(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i <= j; ++i) {
            double s = wt.col(i).dot(vt.col(j));
            out(i, j) = s;
            out(j, i) = s;
        }
    return out;
}

SpectralBasis dense_eig_full(const Eigen::MatrixXd& m, EigenOrdering ordering) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("dense_eig_full: eigensolver failed");
    const int n = static_cast<int>(m.rows());
    auto wanted = select_wanted(es.eigenvalues(), n, ordering);
    SpectralBasis out;
    out.ordering = ordering;
    out.values.resize(n);
    out.vectors.resize(n, n);
    for (int i = 0; i < n; ++i) {
        out.values[i] = es.eigenvalues()[wanted[i]];
        out.vectors.col(i) = es.eigenvectors().col(wanted[i]);
    }
    canonicalize_signs(out.vectors);
    return out;
}

SvdBasis dense_svd_full(const Eigen::MatrixXd& x) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    SvdBasis out;
    out.singular_values = svd.singularValues();
    out.left_vectors = svd.matrixU();
    out.right_vectors = svd.matrixV();
    canonicalize_signs(out.left_vectors, &out.right_vectors);
    return out;
}

} // namespace jdr
