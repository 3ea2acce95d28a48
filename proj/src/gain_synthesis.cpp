#include "delayscale/gain_synthesis.hpp"

#include "delayscale/errors.hpp"
#include "delayscale/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace delayscale {

using linalg::lambda_max_sym;
using linalg::lambda_min_sym;

double GainSet::lambda_max_Po() const { return lambda_max_sym(P_o); }
double GainSet::lambda_max_Pc() const { return lambda_max_sym(P_c); }

GainSet GainSet::scaled(double s) const {
    GainSet out = *this;
    out.g_tilde *= s;
    out.k_tilde *= s;
    return out;
}

Mat scaling_weight(int m) {
    Mat D = Mat::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        D(i, i) = (i + 1) - 0.5;
    }
    return D;
}

namespace {

Mat superdiagonal(int m, const std::vector<double>& rho) {
    Mat N = Mat::Zero(m, m);
    for (int i = 0; i + 1 < m; ++i) {
        N(i, i + 1) = i == 0 ? 1.0 : rho.at(static_cast<std::size_t>(i - 1));
    }
    return N;
}

} // namespace

Mat observer_family_matrix(const Vec& g_tilde, const std::vector<double>& rho) {
    const auto m = static_cast<int>(g_tilde.size());
    Mat A = superdiagonal(m, rho);
    A.col(0) -= g_tilde;
    return A;
}

Mat controller_family_matrix(const Vec& k_tilde, const std::vector<double>& rho) {
    const auto m = static_cast<int>(k_tilde.size());
    Mat A = superdiagonal(m, rho);
    A.row(m - 1) -= k_tilde.transpose();
    return A;
}

std::vector<std::pair<double, double>> rho_box(const BoundEnvelope& env, int n) {
    // Entry j (j = 2..n-2 of the superdiagonal) is phi_(j+1,j+2)/phi_(2,3), a
    // product of consecutive ratios i = 3..j+1.
    std::vector<std::pair<double, double>> box;
    double lo = 1.0;
    double hi = 1.0;
    for (int i = 3; i <= n - 1; ++i) {
        const auto k = static_cast<std::size_t>(i - 3);
        if (k >= env.ratio_min.size() || k >= env.ratio_max.size()) {
            throw InvalidSpec("envelope lacks ratio bounds for i = " + std::to_string(i));
        }
        if (!(env.ratio_min[k] > 0.0 && env.ratio_min[k] <= env.ratio_max[k])) {
            throw InvalidSpec("ratio bounds must satisfy 0 < min <= max");
        }
        lo *= env.ratio_min[k];
        hi *= env.ratio_max[k];
        box.emplace_back(lo, hi);
    }
    return box;
}

namespace {

// Grid over the rho box (all vertices are grid points). When the full tensor
// grid is too large only the vertices are used; the swept quantity is convex in
// rho, so the vertices already carry the extreme value.
std::vector<std::vector<double>> box_points(const std::vector<std::pair<double, double>>& box, int per_dim,
                                            long max_points) {
    const auto dims = box.size();
    std::vector<std::vector<double>> pts;
    if (dims == 0) {
        pts.emplace_back();
        return pts;
    }
    per_dim = std::max(per_dim, 2);
    double total = std::pow(static_cast<double>(per_dim), static_cast<double>(dims));
    if (total > static_cast<double>(max_points)) {
        per_dim = 2;
        total = std::pow(2.0, static_cast<double>(dims));
    }
    std::vector<int> idx(dims, 0);
    for (long k = 0; k < static_cast<long>(total); ++k) {
        std::vector<double> p(dims);
        for (std::size_t d = 0; d < dims; ++d) {
            const auto [lo, hi] = box[d];
            p[d] = lo + (hi - lo) * idx[d] / (per_dim - 1);
        }
        pts.push_back(std::move(p));
        for (std::size_t d = 0; d < dims; ++d) {
            if (++idx[d] < per_dim) {
                break;
            }
            idx[d] = 0;
        }
    }
    return pts;
}

using FamilyFn = Mat (*)(const Vec&, const std::vector<double>&);

struct FamilyMargin {
    double margin = std::numeric_limits<double>::infinity();
    std::vector<double> worst;
};

// min over the points of -lambda_max(P A(rho) + A(rho)^T P)
FamilyMargin family_margin(FamilyFn family, const Vec& gain, const Mat& P,
                           const std::vector<std::vector<double>>& points) {
    FamilyMargin out;
    for (const auto& rho : points) {
        const Mat A = family(gain, rho);
        const double v = -lambda_max_sym(P * A + A.transpose() * P);
        if (v < out.margin) {
            out.margin = v;
            out.worst = rho;
        }
    }
    return out;
}

Mat normalized(const Mat& P) { return P / lambda_max_sym(P); }

Mat from_cholesky_params(const Vec& p, int m) {
    Mat L = Mat::Zero(m, m);
    int k = 0;
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j <= i; ++j) {
            L(i, j) = p[k++];
        }
    }
    return L * L.transpose();
}

Vec to_cholesky_params(const Mat& P) {
    const auto m = static_cast<int>(P.rows());
    const Mat L = Eigen::LLT<Mat>(P).matrixL();
    Vec p(m * (m + 1) / 2);
    int k = 0;
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j <= i; ++j) {
            p[k++] = L(i, j);
        }
    }
    return p;
}

struct MatrixSearch {
    Mat P;
    double score = 0.0;
};

// Score of a candidate P: the smaller of the family margin over the box
// vertices and lambda_min(P D~ + D~ P), with P scaled to lambda_max(P) = 1.
// Both pieces are concave in P, so a local search finds the global optimum.
MatrixSearch improve_lyapunov_matrix(FamilyFn family, const Vec& gain, const Mat& start,
                                     const std::vector<std::vector<double>>& vertices) {
    const auto m = static_cast<int>(start.rows());
    const Mat D = scaling_weight(m);
    const auto score = [&](const Mat& P) {
        const double lmin = lambda_min_sym(P);
        if (!(lmin > 0.0)) {
            return -1e6 + lmin;
        }
        const Mat Pn = normalized(P);
        const double fam = family_margin(family, gain, Pn, vertices).margin;
        const double cpl = lambda_min_sym(Pn * D + D * Pn);
        return std::min(fam, cpl);
    };
    MatrixSearch best{normalized(start), score(start)};
    const auto objective = [&](const Vec& p) { return -score(from_cholesky_params(p, m)); };
    Vec x = to_cholesky_params(best.P);
    for (int pass = 0; pass < 6; ++pass) {
        const auto res = linalg::nelder_mead(objective, x, pass == 0 ? 0.5 : 0.1, 4000 * m, 1e-14);
        x = res.x;
        const Mat P = from_cholesky_params(x, m);
        const double s = score(P);
        if (s > best.score) {
            best = {normalized(P), s};
        }
        x = to_cholesky_params(best.P);
    }
    return best;
}

std::vector<double> default_poles(int m, double first, double spacing) {
    std::vector<double> p;
    for (int i = 0; i < m; ++i) {
        p.push_back(-(first + spacing * i));
    }
    return p;
}

struct FamilyResult {
    Vec gain;
    Mat P;
    FamilyMargin cert;
    std::vector<double> poles;
    int attempts = 0;
};

FamilyResult synthesize_family(FamilyFn family, const BoundEnvelope& env, int n, const SynthesisOptions& opts,
                               std::vector<double> poles, bool controller_form, const char* label) {
    if (n < 2) {
        throw InvalidSpec("gain synthesis needs n >= 2");
    }
    const int m = n - 1;
    if (static_cast<int>(poles.size()) != m) {
        throw InvalidSpec(std::string(label) + ": need exactly n-1 poles");
    }
    for (double p : poles) {
        if (!(p < 0.0)) {
            throw InvalidSpec(std::string(label) + ": poles must be negative reals");
        }
    }
    const auto box = rho_box(env, n);
    const auto grid = box_points(box, opts.rho_grid, opts.max_grid_points);
    const auto vertices = box_points(box, 2, opts.max_grid_points);
    const Mat D = scaling_weight(m);

    FamilyMargin last;
    for (int attempt = 0; attempt <= opts.max_retries; ++attempt) {
        std::vector<double> scaled = poles;
        for (double& p : scaled) {
            p *= std::pow(2.0, attempt);
        }
        Vec coeffs = linalg::monic_coefficients(scaled);
        // Observer form reads the coefficients top-down in the first column;
        // companion form reads them in reverse along the last row.
        Vec gain = controller_form ? Vec(coeffs.reverse()) : coeffs;
        const std::vector<double> nominal(box.size(), 1.0);
        const Mat A1 = family(gain, nominal);
        Mat P = normalized(linalg::solve_lyapunov(A1, Mat::Identity(m, m)));

        auto cert = family_margin(family, gain, P, grid);
        double coupling = lambda_min_sym(P * D + D * P);
        if (!(cert.margin > 0.0 && coupling > 0.0)) {
            const auto better = improve_lyapunov_matrix(family, gain, P, vertices);
            P = better.P;
            cert = family_margin(family, gain, P, grid);
            coupling = lambda_min_sym(P * D + D * P);
        }
        if (cert.margin > 0.0 && coupling > 0.0) {
            return {gain, P, cert, scaled, attempt + 1};
        }
        last = cert;
    }
    throw SynthesisFailure(std::string(label) + ": no certified gains after the retry ladder", last.worst);
}

} // namespace

ObserverGains synthesize_observer_gains(const BoundEnvelope& env, int n, const SynthesisOptions& opts) {
    auto poles = opts.observer_poles.empty() ? default_poles(n - 1, 2.0, 1.0) : opts.observer_poles;
    const auto r = synthesize_family(&observer_family_matrix, env, n, opts, poles, false, "observer");
    const Mat D = scaling_weight(n - 1);
    const Mat S = r.P * D + D * r.P;
    ObserverGains out;
    out.g_tilde = r.gain;
    out.P_o = r.P;
    out.nu_tilde = r.cert.margin;
    out.nu_o = env.sigma * r.cert.margin / 2.0;
    out.nu_tilde_o = r.cert.margin / 2.0;
    out.nu_o_lower = lambda_min_sym(S);
    out.nu_o_upper = lambda_max_sym(S);
    out.g_bar = r.gain.norm();
    out.poles = r.poles;
    out.worst_rho = r.cert.worst;
    out.attempts = r.attempts;
    return out;
}

ControllerGains synthesize_controller_gains(const BoundEnvelope& env, int n, const SynthesisOptions& opts) {
    auto poles = opts.controller_poles.empty() ? default_poles(n - 1, 1.0, 0.5) : opts.controller_poles;
    const auto r = synthesize_family(&controller_family_matrix, env, n, opts, poles, true, "controller");
    const Mat D = scaling_weight(n - 1);
    const Mat S = r.P * D + D * r.P;
    ControllerGains out;
    out.k_tilde = r.gain;
    out.P_c = r.P;
    out.nu_c = r.cert.margin;
    out.nu_c_lower = lambda_min_sym(S);
    out.nu_c_upper = lambda_max_sym(S);
    out.poles = r.poles;
    out.worst_rho = r.cert.worst;
    out.attempts = r.attempts;
    return out;
}

GainSet synthesize_gains(const BoundEnvelope& env, int n, const SynthesisOptions& opts) {
    const auto o = synthesize_observer_gains(env, n, opts);
    const auto c = synthesize_controller_gains(env, n, opts);
    GainSet g;
    g.n = n;
    g.g_tilde = o.g_tilde;
    g.k_tilde = c.k_tilde;
    g.P_o = o.P_o;
    g.P_c = c.P_c;
    g.nu_o = o.nu_o;
    g.nu_tilde_o = o.nu_tilde_o;
    g.nu_o_lower = o.nu_o_lower;
    g.nu_o_upper = o.nu_o_upper;
    g.nu_c = c.nu_c;
    g.nu_c_lower = c.nu_c_lower;
    g.nu_c_upper = c.nu_c_upper;
    g.g_bar = o.g_bar;
    return g;
}

namespace {

Mat unfactored_superdiagonal(const PlantModel& model, double x1) {
    const int m = model.n - 1;
    Mat A = Mat::Zero(m, m);
    for (int i = 1; i <= m - 1; ++i) {
        A(i - 1, i) = model.phi(i + 1, x1);
    }
    return A;
}

} // namespace

Mat observer_matrix(const GainSet& gains, const PlantModel& model, double x1) {
    Mat A = unfactored_superdiagonal(model, x1);
    A.col(0) -= gains.g_tilde * model.phi23(x1);
    return A;
}

Mat controller_matrix(const GainSet& gains, const PlantModel& model, double x1) {
    Mat A = unfactored_superdiagonal(model, x1);
    const auto m = A.rows();
    A.row(m - 1) -= gains.k_tilde.transpose() * model.phi23(x1);
    return A;
}

CoupledMargins verify_coupled_lyapunov(const GainSet& gains, const PlantModel& model, double x1_lo, double x1_hi,
                                       int grid) {
    if (grid < 1 || !(x1_hi >= x1_lo)) {
        throw InvalidSpec("verify_coupled_lyapunov: empty x1 range");
    }
    const int m = model.n - 1;
    if (gains.g_tilde.size() != m || gains.k_tilde.size() != m) {
        throw InvalidSpec("verify_coupled_lyapunov: gain dimensions do not match the plant");
    }
    CoupledMargins out;
    out.observer_lyapunov = std::numeric_limits<double>::infinity();
    out.controller_lyapunov = std::numeric_limits<double>::infinity();
    out.gain_bound = std::numeric_limits<double>::infinity();
    const Mat I = Mat::Identity(m, m);
    Mat CtC = Mat::Zero(m, m);
    CtC(0, 0) = 1.0;
    for (int k = 0; k < grid; ++k) {
        const double x1 = grid == 1 ? x1_lo : x1_lo + (x1_hi - x1_lo) * k / (grid - 1);
        const double p23 = model.phi23(x1);
        const Mat Ao = observer_matrix(gains, model, x1);
        const Mat Ac = controller_matrix(gains, model, x1);
        const Mat So = -(gains.P_o * Ao + Ao.transpose() * gains.P_o) - gains.nu_o * I - gains.nu_tilde_o * p23 * CtC;
        const Mat Sc = -(gains.P_c * Ac + Ac.transpose() * gains.P_c) - gains.nu_c * p23 * I;
        const double mo = lambda_min_sym(So);
        const double mc = lambda_min_sym(Sc);
        if (mo < out.observer_lyapunov) {
            out.observer_lyapunov = mo;
            out.worst_x1_observer = x1;
        }
        if (mc < out.controller_lyapunov) {
            out.controller_lyapunov = mc;
            out.worst_x1_controller = x1;
        }
        out.gain_bound = std::min(out.gain_bound, gains.g_bar * p23 - (gains.g_tilde * p23).norm());
    }
    // Coupling pairs: the stored bounds must bracket the spectrum of P D~ + D~ P,
    // and the lower bound must be positive. The reported margin is the lower
    // bound when bracketing holds, otherwise the (negative) bracketing violation.
    const Mat D = scaling_weight(m);
    const auto coupling = [&](const Mat& P, double lower, double upper) {
        const Mat S = P * D + D * P;
        const double lo = lambda_min_sym(S);
        const double hi = lambda_max_sym(S);
        const double slack = 1e-12 * std::max(1.0, std::abs(hi));
        const double bracket = std::min(lo - lower, upper - hi);
        return bracket >= -slack ? lower : bracket;
    };
    out.observer_coupling = coupling(gains.P_o, gains.nu_o_lower, gains.nu_o_upper);
    out.controller_coupling = coupling(gains.P_c, gains.nu_c_lower, gains.nu_c_upper);
    return out;
}

} // namespace delayscale
