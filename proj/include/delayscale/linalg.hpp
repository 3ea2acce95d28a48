#pragma once

#include "delayscale/model.hpp"

#include <functional>
#include <vector>

namespace delayscale::linalg {

// Solves P A + A^T P = -Q by the vectorized (Kronecker) linear system.
[[nodiscard]] Mat solve_lyapunov(const Mat& A, const Mat& Q);

// Coefficients c_1..c_m of the monic polynomial prod (s - r_i) = s^m + c_1 s^{m-1} + ... + c_m.
[[nodiscard]] Vec monic_coefficients(const std::vector<double>& roots);

[[nodiscard]] double lambda_max_sym(const Mat& M);
[[nodiscard]] double lambda_min_sym(const Mat& M);

// Frobenius norm, i.e. the Euclidean norm of the stacked columns.
[[nodiscard]] inline double stacked_norm(const Mat& M) { return M.norm(); }

struct NelderMeadResult {
    Vec x;
    double value = 0.0;
    int iterations = 0;
};

// Deterministic Nelder-Mead minimization.
[[nodiscard]] NelderMeadResult nelder_mead(const std::function<double(const Vec&)>& f, const Vec& start,
                                           double initial_step, int max_iterations, double f_tol = 1e-12);

} // namespace delayscale::linalg
