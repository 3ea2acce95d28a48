#include "delayscale/linalg.hpp"

#include "delayscale/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace delayscale::linalg {

Mat solve_lyapunov(const Mat& A, const Mat& Q) {
    const auto m = A.rows();
    if (A.cols() != m || Q.rows() != m || Q.cols() != m) {
        throw InvalidSpec("solve_lyapunov: dimension mismatch");
    }
    // vec(P A) = (A^T kron I) vec(P), vec(A^T P) = (I kron A^T) vec(P)
    const Mat I = Mat::Identity(m, m);
    Mat K = Mat::Zero(m * m, m * m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            K.block(i * m, j * m, m, m) += A(j, i) * I;
            K.block(i * m, j * m, m, m) += (i == j ? 1.0 : 0.0) * A.transpose();
        }
    }
    const Vec rhs = -Eigen::Map<const Vec>(Q.data(), m * m);
    Eigen::FullPivLU<Mat> lu(K);
    if (!lu.isInvertible()) {
        throw NumericFailure("Lyapunov operator is singular (A has eigenvalues summing to zero)", "lyapunov");
    }
    const Vec p = lu.solve(rhs);
    Mat P = Eigen::Map<const Mat>(p.data(), m, m);
    return 0.5 * (P + P.transpose());
}

Vec monic_coefficients(const std::vector<double>& roots) {
    std::vector<double> c{1.0};
    for (double r : roots) {
        std::vector<double> next(c.size() + 1, 0.0);
        for (std::size_t k = 0; k < c.size(); ++k) {
            next[k] += c[k];
            next[k + 1] -= r * c[k];
        }
        c = std::move(next);
    }
    Vec out(static_cast<Eigen::Index>(roots.size()));
    for (std::size_t k = 1; k < c.size(); ++k) {
        out[static_cast<Eigen::Index>(k - 1)] = c[k];
    }
    return out;
}

double lambda_max_sym(const Mat& M) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

double lambda_min_sym(const Mat& M) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

NelderMeadResult nelder_mead(const std::function<double(const Vec&)>& f, const Vec& start, double initial_step,
                             int max_iterations, double f_tol) {
    const auto dim = start.size();
    std::vector<Vec> pts(static_cast<std::size_t>(dim + 1), start);
    std::vector<double> vals(static_cast<std::size_t>(dim + 1));
    for (Eigen::Index i = 0; i < dim; ++i) {
        const double step = initial_step * std::max(1.0, std::abs(start[i]));
        pts[static_cast<std::size_t>(i + 1)][i] += step;
    }
    for (std::size_t i = 0; i < pts.size(); ++i) {
        vals[i] = f(pts[i]);
    }
    std::vector<std::size_t> order(pts.size());
    int it = 0;
    for (; it < max_iterations; ++it) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second = order[order.size() - 2];
        if (std::abs(vals[worst] - vals[best]) <= f_tol * (1.0 + std::abs(vals[best]))) {
            break;
        }
        Vec centroid = Vec::Zero(dim);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (i != worst) {
                centroid += pts[i];
            }
        }
        centroid /= static_cast<double>(dim);

        const Vec reflected = centroid + (centroid - pts[worst]);
        const double fr = f(reflected);
        if (fr < vals[best]) {
            const Vec expanded = centroid + 2.0 * (centroid - pts[worst]);
            const double fe = f(expanded);
            if (fe < fr) {
                pts[worst] = expanded;
                vals[worst] = fe;
            } else {
                pts[worst] = reflected;
                vals[worst] = fr;
            }
            continue;
        }
        if (fr < vals[second]) {
            pts[worst] = reflected;
            vals[worst] = fr;
            continue;
        }
        const bool outside = fr < vals[worst];
        const Vec contracted =
            outside ? Vec(centroid + 0.5 * (reflected - centroid)) : Vec(centroid + 0.5 * (pts[worst] - centroid));
        const double fc = f(contracted);
        if (fc < std::min(fr, vals[worst])) {
            pts[worst] = contracted;
            vals[worst] = fc;
            continue;
        }
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (i != best) {
                pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
                vals[i] = f(pts[i]);
            }
        }
    }
    const auto best = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
    return {pts[best], vals[best], it};
}

} // namespace delayscale::linalg
