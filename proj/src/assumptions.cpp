#include "delayscale/assumptions.hpp"

#include "delayscale/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

namespace delayscale {

bool AssumptionReport::passed() const {
    return std::all_of(checks.begin(), checks.end(), [&](const AssumptionCheck& c) { return c.margin >= -tolerance; });
}

double AssumptionReport::margin(const std::string& assumption) const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& c : checks) {
        if (c.assumption == assumption) {
            m = std::min(m, c.margin);
        }
    }
    return m;
}

const AssumptionCheck& AssumptionReport::find(const std::string& name) const {
    for (const auto& c : checks) {
        if (c.name == name) {
            return c;
        }
    }
    throw InvalidSpec("no assumption check named '" + name + "'");
}

std::vector<const AssumptionCheck*> AssumptionReport::failures() const {
    std::vector<const AssumptionCheck*> out;
    for (const auto& c : checks) {
        if (c.margin < -tolerance) {
            out.push_back(&c);
        }
    }
    return out;
}

namespace {

struct Sample {
    double t = 0.0;
    Vec x, psi;
    double u = 0.0;
    DelayedSample d;
};

// Uniform draw from the closed ball of the given radius.
Vec draw_ball(std::mt19937_64& rng, int dim, double radius) {
    if (dim == 0) {
        return Vec(0);
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Vec v(dim);
    for (int i = 0; i < dim; ++i) {
        v[i] = normal(rng);
    }
    const double nrm = v.norm();
    if (nrm == 0.0) {
        return Vec::Zero(dim);
    }
    const double rad = radius * std::pow(unit(rng), 1.0 / dim);
    return v * (rad / nrm);
}

double fd_step(double v) { return 1e-6 * std::max(1.0, std::abs(v)); }

// Per-sample checks, in a fixed order.
enum SampleCheck : int {
    kA2 = 0,
    kA4a,
    kA4b,
    kA4c,
    kA4d,
    kA4e,
    kA4growth,
    kA5diss,
    kA5alpha,
    kA5kpsi,
    kA5gamma,
    kEnv,
    kSampleCheckCount
};

struct Accum {
    std::array<double, kSampleCheckCount> margin{};
    std::array<double, kSampleCheckCount> value{};
    std::array<std::size_t, kSampleCheckCount> where{};
    Accum() {
        margin.fill(std::numeric_limits<double>::infinity());
        value.fill(0.0);
        where.fill(0);
    }
    void update(int k, double m, double v, std::size_t idx) {
        const auto i = static_cast<std::size_t>(k);
        // Ties keep the lower sample index so any partition merges identically.
        if (m < margin[i] || (m == margin[i] && idx < where[i])) {
            margin[i] = m;
            value[i] = v;
            where[i] = idx;
        }
    }
    void merge(const Accum& o) {
        for (int k = 0; k < kSampleCheckCount; ++k) {
            const auto i = static_cast<std::size_t>(k);
            update(k, o.margin[i], o.value[i], o.where[i]);
        }
    }
};

class SampleEvaluator {
  public:
    SampleEvaluator(const PlantModel& m, const BoundEnvelope& e, double u_radius) : m_(m), e_(e), u_radius_(u_radius) {}

    void evaluate(const Sample& s, std::size_t idx, Accum& acc) const {
        const int n = m_.n;
        const double theta = m_.true_theta;
        const Vec& x = s.x;
        const double x1 = x[0];
        const double xn = x[n - 1];
        const double u = s.u;

        // A2
        {
            const Vec pert = m_.phi_pert(s.t, x);
            const double g = e_.Gamma(x1);
            double worst = std::numeric_limits<double>::infinity();
            for (int i = 1; i <= n - 1; ++i) {
                double sum = theta * std::abs(x1);
                for (int j = 2; j <= std::min(i + 1, n); ++j) {
                    sum += std::abs(x[j - 1]);
                }
                worst = std::min(worst, g * sum - std::abs(pert[i - 1]));
            }
            acc.update(kA2, worst, worst, idx);
        }

        const auto mu_of_u = [&](double v) { return m_.mu(s.t, x, s.psi, v); };
        const double mu = mu_of_u(u);

        // A4(a): slope in u
        {
            const double h = fd_step(u);
            const double slope = (mu_of_u(u + h) - mu_of_u(u - h)) / (2.0 * h);
            acc.update(kA4a, slope - e_.mu_lower, slope, idx);
        }
        // A4(b)
        {
            const double bound = e_.mu_bar(x1, xn, u);
            acc.update(kA4b, bound - std::abs(mu), std::abs(mu), idx);
        }
        // A4(c): |d mu/d psi . q_psi|
        if (m_.n_psi > 0) {
            Vec grad(m_.n_psi);
            for (int j = 0; j < m_.n_psi; ++j) {
                const double h = fd_step(s.psi[j]);
                Vec p1 = s.psi;
                Vec p2 = s.psi;
                p1[j] += h;
                p2[j] -= h;
                grad[j] = (m_.mu(s.t, x, p1, u) - m_.mu(s.t, x, p2, u)) / (2.0 * h);
            }
            const Vec q = m_.q_psi(s.t, x, s.psi, u, s.d);
            const double lhs = std::abs(grad.dot(q));
            const auto bracket = [&](const Vec& xx, const Vec& pp) {
                double sum = theta * std::abs(xx[0]);
                for (int j = 1; j < n; ++j) {
                    sum += std::abs(xx[j]);
                }
                return e_.mu_bar1a(xx[0]) * sum + e_.mu_bar1_psi(pp);
            };
            const double rhs = e_.mu_bar1(x1, xn, u) * (bracket(x, s.psi) + bracket(s.d.x, s.d.psi));
            acc.update(kA4c, rhs - lhs, lhs, idx);
        } else {
            acc.update(kA4c, 0.0, 0.0, idx);
        }
        // A4(d): time derivative
        {
            const double h = fd_step(s.t);
            const double dmu_dt = (m_.mu(s.t + h, x, s.psi, u) - m_.mu(s.t - h, x, s.psi, u)) / (2.0 * h);
            double sum = theta * std::abs(x1);
            for (int j = 1; j < n; ++j) {
                sum += std::abs(x[j]);
            }
            const double rhs = e_.mu_tilde1(x1, xn, u) * (sum + e_.mu_tilde1_psi(s.psi));
            acc.update(kA4d, rhs - std::abs(dmu_dt), std::abs(dmu_dt), idx);
        }
        // A4(e): state gradient
        {
            Vec grad(n);
            for (int j = 0; j < n; ++j) {
                const double h = fd_step(x[j]);
                Vec xp = x;
                Vec xm = x;
                xp[j] += h;
                xm[j] -= h;
                grad[j] = (m_.mu(s.t, xp, s.psi, u) - m_.mu(s.t, xm, s.psi, u)) / (2.0 * h);
            }
            const double rhs = e_.mu_bar2(x1, xn, u) + e_.mu_bar2_psi(s.psi);
            acc.update(kA4e, rhs - grad.norm(), grad.norm(), idx);
        }
        // A4 radial growth, only up to the sampled |u| range.
        {
            const double big = u_radius_;
            const double up = std::abs(mu_of_u(big)) - std::abs(mu_of_u(0.5 * big));
            const double dn = std::abs(mu_of_u(-big)) - std::abs(mu_of_u(-0.5 * big));
            acc.update(kA4growth, std::min(up, dn), std::min(up, dn), idx);
        }
        // A5
        if (m_.n_psi > 0) {
            const Vec q = m_.q_psi(s.t, x, s.psi, u, s.d);
            Vec grad;
            if (e_.V_psi_grad) {
                grad = e_.V_psi_grad(s.psi);
            } else {
                grad.resize(m_.n_psi);
                for (int j = 0; j < m_.n_psi; ++j) {
                    const double h = fd_step(s.psi[j]);
                    Vec p1 = s.psi;
                    Vec p2 = s.psi;
                    p1[j] += h;
                    p2[j] -= h;
                    grad[j] = (e_.V_psi(p1) - e_.V_psi(p2)) / (2.0 * h);
                }
            }
            const double lhs = grad.dot(q);
            const auto gain_term = [&](const Vec& xx, double uu) {
                double sq = theta * xx[0] * xx[0];
                for (int j = 1; j < n; ++j) {
                    sq += xx[j] * xx[j];
                }
                return e_.Gamma2(xx[0]) * (sq + e_.gamma_s(xx[0], xx[n - 1], uu));
            };
            const double psi_norm = s.psi.norm();
            const double alpha = e_.alpha_psi(psi_norm);
            const double rhs = -alpha + gain_term(x, u) + gain_term(s.d.x, s.d.u);
            acc.update(kA5diss, rhs - lhs, lhs, idx);

            const double vpsi = e_.V_psi(s.psi);
            acc.update(kA5alpha, alpha - e_.V_psi_lower * vpsi, alpha, idx);

            const double m1 = e_.mu_bar1_psi(s.psi);
            const double m2 = e_.mu_tilde1_psi(s.psi);
            const double m3 = e_.mu_bar2_psi(s.psi);
            const double lhs_k = m1 * m1 + m2 * m2 + m3 * m3;
            acc.update(kA5kpsi, e_.k_psi_bar * alpha - lhs_k, lhs_k, idx);
        } else {
            acc.update(kA5diss, 0.0, 0.0, idx);
            acc.update(kA5alpha, 0.0, 0.0, idx);
            acc.update(kA5kpsi, 0.0, 0.0, idx);
        }
        {
            const double gs = e_.gamma_s(x1, xn, u);
            acc.update(kA5gamma, e_.gamma_s_bar(x1) * mu * mu - gs, gs, idx);
        }
        // Envelope functions must be nonnegative wherever they are sampled.
        {
            double lo = std::min({e_.Gamma(x1), e_.mu_bar(x1, xn, u), e_.mu_bar1(x1, xn, u), e_.mu_bar1a(x1),
                                  e_.mu_tilde1(x1, xn, u), e_.mu_bar2(x1, xn, u), e_.Gamma2(x1),
                                  e_.gamma_s(x1, xn, u), e_.gamma_s_bar(x1)});
            if (m_.n_psi > 0) {
                lo = std::min({lo, e_.alpha_psi(s.psi.norm()), e_.V_psi(s.psi), e_.mu_bar1_psi(s.psi),
                               e_.mu_tilde1_psi(s.psi), e_.mu_bar2_psi(s.psi)});
            }
            acc.update(kEnv, lo, lo, idx);
        }
    }

  private:
    const PlantModel& m_;
    const BoundEnvelope& e_;
    double u_radius_;
};

std::vector<double> sample_point(const Sample& s) {
    std::vector<double> p{s.t};
    p.insert(p.end(), s.x.data(), s.x.data() + s.x.size());
    p.insert(p.end(), s.psi.data(), s.psi.data() + s.psi.size());
    p.push_back(s.u);
    return p;
}

// Golden-section refinement of a local minimum inside [lo, hi].
double golden_min(const std::function<double(double)>& f, double lo, double hi) {
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo;
    double b = hi;
    double c = b - g * (b - a);
    double d = a + g * (b - a);
    double fc = f(c);
    double fd = f(d);
    for (int it = 0; it < 200 && (b - a) > 1e-14 * std::max(1.0, std::abs(a)); ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

struct SweepExtreme {
    double arg = 0.0;
    double val = 0.0;
};

// Minimum of f over the sweep grid, refined by golden section on the bracketing cells.
SweepExtreme sweep_min(const std::function<double(double)>& f, double lo, double hi, int count) {
    const double step = count > 1 ? (hi - lo) / (count - 1) : 0.0;
    int best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    for (int k = 0; k < count; ++k) {
        const double v = f(lo + step * k);
        if (v < best_val) {
            best_val = v;
            best = k;
        }
    }
    SweepExtreme out{lo + step * best, best_val};
    if (count > 2) {
        const double a = lo + step * std::max(0, best - 1);
        const double b = lo + step * std::min(count - 1, best + 1);
        const double arg = golden_min(f, a, b);
        const double v = f(arg);
        if (v < out.val) {
            out = {arg, v};
        }
    }
    return out;
}

} // namespace

AssumptionReport check_assumptions(const PlantModel& model, const BoundEnvelope& env, const SamplerSpec& sampler) {
    if (sampler.samples <= 0 || sampler.x1_count <= 0 || sampler.delay_count <= 0) {
        throw InvalidSpec("assumption sampler needs a positive number of samples in every sweep");
    }
    if (!(sampler.x1_hi >= sampler.x1_lo)) {
        throw InvalidSpec("assumption sampler: empty x1 range");
    }
    const int n = model.n;
    AssumptionReport report;
    report.tolerance = sampler.tolerance;

    // A1: phi_(i,i+1) >= sigma over the x1 sweep.
    {
        double worst = std::numeric_limits<double>::infinity();
        double at = 0.0;
        for (int i = 1; i <= n - 1; ++i) {
            const auto f = [&](double x1) { return model.phi(i, x1); };
            const auto ext = sweep_min(f, sampler.x1_lo, sampler.x1_hi, sampler.x1_count);
            if (ext.val - env.sigma < worst) {
                worst = ext.val - env.sigma;
                at = ext.arg;
            }
        }
        report.checks.push_back({"A1", "A1 lower bound", worst, worst + env.sigma, {at}, false});
    }

    // A3: ratio containment.
    for (int i = 3; i <= n - 1; ++i) {
        const auto k = static_cast<std::size_t>(i - 3);
        if (k >= env.ratio_min.size() || k >= env.ratio_max.size()) {
            throw InvalidSpec("envelope lacks ratio bounds for i = " + std::to_string(i));
        }
        const auto ratio = [&](double x1) { return model.phi(i, x1) / model.phi(i - 1, x1); };
        const auto lo = sweep_min(ratio, sampler.x1_lo, sampler.x1_hi, sampler.x1_count);
        const auto hi = sweep_min([&](double x1) { return -ratio(x1); }, sampler.x1_lo, sampler.x1_hi,
                                  sampler.x1_count);
        const std::string tag = " (i=" + std::to_string(i) + ")";
        report.checks.push_back({"A3", "A3 ratio min" + tag, lo.val - env.ratio_min[k], lo.val, {lo.arg}, false});
        report.checks.push_back({"A3", "A3 ratio max" + tag, env.ratio_max[k] + hi.val, -hi.val, {hi.arg}, false});
    }

    // A6: delay profile sweep.
    {
        const double step = sampler.delay_count > 1 ? sampler.delay_t_max / (sampler.delay_count - 1) : 0.0;
        double max_rate = 0.0;
        double rate_at = 0.0;
        double min_delay = std::numeric_limits<double>::infinity();
        double delay_at = 0.0;
        for (int k = 0; k < sampler.delay_count; ++k) {
            const double t = step * k;
            const double r = std::abs(model.delay.rate(t));
            if (r > max_rate) {
                max_rate = r;
                rate_at = t;
            }
            const double d = model.delay.value(t);
            if (d < min_delay) {
                min_delay = d;
                delay_at = t;
            }
        }
        report.checks.push_back({"A6", "A6 delay rate", env.Delta_bar - max_rate, max_rate, {rate_at}, false});
        report.checks.push_back({"A6", "A6 delay nonnegative", min_delay, min_delay, {delay_at}, false});
        report.checks.push_back({"A6", "A6 rate bound below one", 1.0 - env.Delta_bar, env.Delta_bar, {}, false});
    }

    // Random draws, generated sequentially so the partition does not change them.
    std::mt19937_64 rng(sampler.seed);
    std::uniform_real_distribution<double> time_dist(0.0, sampler.t_max);
    std::uniform_real_distribution<double> u_dist(-sampler.u_radius, sampler.u_radius);
    std::vector<Sample> samples(static_cast<std::size_t>(sampler.samples));
    for (auto& s : samples) {
        s.t = time_dist(rng);
        s.x = draw_ball(rng, n, sampler.x_radius);
        s.psi = draw_ball(rng, model.n_psi, sampler.psi_radius);
        s.u = u_dist(rng);
        s.d.x = draw_ball(rng, n, sampler.x_radius);
        s.d.psi = draw_ball(rng, model.n_psi, sampler.psi_radius);
        s.d.u = u_dist(rng);
    }

    const SampleEvaluator eval(model, env, sampler.u_radius);
    const int workers = std::max(1, std::min(sampler.workers, sampler.samples));
    std::vector<Accum> partial(static_cast<std::size_t>(workers));
    const std::size_t total = samples.size();
    const auto run_chunk = [&](int w) {
        const std::size_t lo = total * static_cast<std::size_t>(w) / static_cast<std::size_t>(workers);
        const std::size_t hi = total * static_cast<std::size_t>(w + 1) / static_cast<std::size_t>(workers);
        for (std::size_t i = lo; i < hi; ++i) {
            eval.evaluate(samples[i], i, partial[static_cast<std::size_t>(w)]);
        }
    };
    if (workers == 1) {
        run_chunk(0);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back(run_chunk, w);
        }
        for (auto& th : pool) {
            th.join();
        }
    }
    Accum acc;
    for (const auto& p : partial) {
        acc.merge(p);
    }

    const auto add = [&](int k, const char* id, const char* name, bool is_partial = false) {
        const auto i = static_cast<std::size_t>(k);
        report.checks.push_back({id, name, acc.margin[i], acc.value[i], sample_point(samples[acc.where[i]]), is_partial});
    };
    add(kA2, "A2", "A2 phi_i bound");
    add(kA4a, "A4", "A4a input slope");
    add(kA4b, "A4", "A4b magnitude bound");
    add(kA4c, "A4", "A4c psi-rate bound");
    add(kA4d, "A4", "A4d time-rate bound");
    add(kA4e, "A4", "A4e state-gradient bound");
    add(kA4growth, "A4", "A4 radial growth", true);
    add(kA5diss, "A5", "A5 dissipation");
    add(kA5alpha, "A5", "A5 alpha vs V_psi");
    add(kA5kpsi, "A5", "A5 k_psi constant");
    add(kA5gamma, "A5", "A5 gamma_s bound");
    add(kEnv, "ENV", "envelope nonnegativity");
    return report;
}

} // namespace delayscale
