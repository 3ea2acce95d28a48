#include "support.hpp"

#include "delayscale/assumptions.hpp"
#include "delayscale/errors.hpp"

#include <doctest.h>

#include <random>

using namespace delayscale;
using namespace testing_support;

namespace {

DelayedSample zero_delayed() { return {Vec::Zero(4), Vec::Zero(2), 0.0}; }

} // namespace

TEST_CASE("plant vanishes at the origin for all t") {
    const auto sys = benchmark_system();
    for (double t : {0.0, 0.7, 3.0, 19.5}) {
        const auto d = eval_plant_rhs(sys.model, t, Vec::Zero(4), Vec::Zero(2), 0.0, zero_delayed());
        CHECK(d.x_dot.norm() == 0.0);
        CHECK(d.psi_dot.norm() == 0.0);
    }
}

TEST_CASE("first state derivative at x = (1,0,0,0) with theta1 = 1") {
    auto p = default_example_params();
    p.theta = {1.0, 0.0, 0.0};
    const auto sys = benchmark_system(p);
    Vec x = Vec::Zero(4);
    x[0] = 1.0;
    const auto d = eval_plant_rhs(sys.model, 0.0, x, Vec::Zero(2), 0.0, zero_delayed());
    CHECK(d.x_dot[0] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("plant matches the duplicate transcription at random points") {
    const auto p = default_example_params();
    const auto sys = benchmark_system(p);
    const auto T = truth_of(p);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    for (int k = 0; k < 200; ++k) {
        const double t = 10.0 * (U(rng) + 2.0);
        std::array<double, 4> x{}, xd{};
        std::array<double, 2> s{}, sd{};
        for (auto& v : x) v = U(rng);
        for (auto& v : xd) v = U(rng);
        for (auto& v : s) v = U(rng);
        for (auto& v : sd) v = U(rng);
        const double u = U(rng), ud = U(rng);
        const auto o = oracle::plant(T, t, x, s, u, xd, sd, ud);
        const Vec X = Eigen::Map<const Vec>(x.data(), 4), S = Eigen::Map<const Vec>(s.data(), 2);
        DelayedSample D{Eigen::Map<const Vec>(xd.data(), 4), Eigen::Map<const Vec>(sd.data(), 2), ud};
        const auto d = eval_plant_rhs(sys.model, t, X, S, u, D);
        for (int i = 0; i < 4; ++i) CHECK(rel_err(d.x_dot[i], o[static_cast<std::size_t>(i)]) <= 1e-12);
        for (int i = 0; i < 2; ++i) CHECK(rel_err(d.psi_dot[i], o[static_cast<std::size_t>(4 + i)]) <= 1e-12);
    }
}

TEST_CASE("non-finite plant output names the component") {
    const auto sys = benchmark_system();
    Vec x = Vec::Zero(4);
    x[3] = 1e200;
    try {
        (void)eval_plant_rhs(sys.model, 0.0, x, Vec::Zero(2), 1e200, zero_delayed());
        FAIL("expected blow-up");
    } catch (const IntegrationBlowUp& e) {
        CHECK(e.component() == 3);
    }
}

TEST_CASE("example envelope constants") {
    const auto sys = build_example(default_example_params());
    CHECK(sys.envelope.sigma == 0.75);
    CHECK(sys.envelope.k_psi_bar == 36.0);
    CHECK(sys.envelope.V_psi_lower == 0.5);
    CHECK(sys.envelope.gamma_s(0.0, 0.0, 1.0) == doctest::Approx(1.0));
    CHECK(sys.envelope.ratio_min == std::vector<double>{0.8});
    CHECK(sys.envelope.ratio_max == std::vector<double>{4.0});
    const auto T = truth_of(default_example_params());
    const oracle::Envelope E{T};
    for (double x1 : {-3.0, -0.5, 0.0, 0.4, 2.5}) {
        CHECK(rel_err(sys.envelope.Gamma(x1), E.Gamma(x1)) <= 1e-14);
        CHECK(rel_err(sys.envelope.Gamma2(x1), E.Gamma2(x1)) <= 1e-14);
        CHECK(rel_err(sys.envelope.gamma_s_bar(x1), E.gamma_s_bar(x1)) <= 1e-14);
        CHECK(rel_err(sys.envelope.mu_bar1a(x1), E.mu_bar1a(x1)) <= 1e-14);
        for (double u : {-1.3, 0.2, 2.0}) {
            CHECK(rel_err(sys.envelope.mu_bar(x1, 0.7, u), E.mu_bar(x1, 0.7, u)) <= 1e-14);
            CHECK(rel_err(sys.envelope.mu_bar1(x1, 0.7, u), E.mu_bar1(x1, 0.7, u)) <= 1e-14);
            CHECK(rel_err(sys.envelope.mu_bar2(x1, 0.7, u), E.mu_bar2(x1, 0.7, u)) <= 1e-14);
            CHECK(rel_err(sys.envelope.mu_tilde1(x1, 0.7, u), E.mu_tilde1(x1, 0.7, u)) <= 1e-14);
        }
    }
    CHECK(sys.envelope.mu_lower == doctest::Approx(E.mu_lower()));
}

TEST_CASE("inconsistent example bounds are rejected") {
    auto p = default_example_params();
    p.a = {2.0, 1.0};
    CHECK_THROWS_AS((void)build_example(p), InvalidSpec);
    p = default_example_params();
    p.b[0] = 0.5;
    CHECK_THROWS_AS((void)build_example(p), InvalidSpec);
}

TEST_CASE("delay profiles") {
    const auto c = DelayProfile::constant(0.3);
    CHECK(c.value(5.0) == 0.3);
    CHECK(c.rate(5.0) == 0.0);
    const auto s = DelayProfile::sinusoidal(0.3, 0.1, 1.0);
    CHECK(s.value(0.5) == doctest::Approx(0.3 + 0.1 * std::sin(0.5)));
    CHECK(s.rate(0.5) == doctest::Approx(0.1 * std::cos(0.5)));
    CHECK(s.max_delay() == doctest::Approx(0.4));
    CHECK_THROWS_AS((void)DelayProfile::sinusoidal(0.05, 0.1, 1.0), InvalidSpec);
}

TEST_CASE("assumption sweep margins against closed forms") {
    const auto sys = benchmark_system();
    SamplerSpec sp;
    sp.samples = 2000;
    const auto rep = check_assumptions(sys.model, sys.envelope, sp);
    const auto& a1 = rep.find("A1 lower bound");
    CHECK(std::abs(a1.margin) <= 1e-9);
    CHECK(a1.worst.at(0) == doctest::Approx(-0.5).epsilon(1e-6));
    const auto& a3 = rep.find("A3 ratio min (i=3)");
    // argmin of (1+2x^2)/(1+x+x^2) solves x^2 + x - 1/2 = 0
    const double xs = (std::sqrt(3.0) - 1.0) / 2.0;
    const double vs = (1 + 2 * xs * xs) / (1 + xs + xs * xs);
    CHECK(a3.value == doctest::Approx(vs).epsilon(1e-9));
    CHECK(a3.worst.at(0) == doctest::Approx(xs).epsilon(1e-5));
    CHECK(vs == doctest::Approx(0.845).epsilon(1e-3));
}

TEST_CASE("zero-rate delay leaves the full A6 margin") {
    auto p = default_example_params();
    p.delay = DelayProfile::constant(0.2);
    const auto sys = benchmark_system(p);
    SamplerSpec sp;
    sp.samples = 10;
    const auto rep = check_assumptions(sys.model, sys.envelope, sp);
    CHECK(rep.find("A6 delay rate").margin == sys.envelope.Delta_bar);
}

TEST_CASE("misdeclared sigma fails A1") {
    auto sys = benchmark_system();
    sys.envelope.sigma = 2.0;
    SamplerSpec sp;
    sp.samples = 10;
    const auto rep = check_assumptions(sys.model, sys.envelope, sp);
    CHECK(rep.find("A1 lower bound").margin < -1.0);
    CHECK_FALSE(rep.passed());
}

TEST_CASE("sampler determinism and validation") {
    const auto sys = benchmark_system();
    SamplerSpec sp;
    sp.samples = 500;
    sp.seed = 42;
    const auto a = check_assumptions(sys.model, sys.envelope, sp);
    sp.workers = 3;
    const auto b = check_assumptions(sys.model, sys.envelope, sp);
    REQUIRE(a.checks.size() == b.checks.size());
    for (std::size_t i = 0; i < a.checks.size(); ++i) {
        CHECK(a.checks[i].margin == b.checks[i].margin);
    }
    sp.samples = 0;
    CHECK_THROWS_AS((void)check_assumptions(sys.model, sys.envelope, sp), InvalidSpec);
}

TEST_CASE("envelope soundness on random draws, except the published A5 constant") {
    const auto sys = benchmark_system();
    SamplerSpec sp;
    sp.samples = 10000;
    const auto rep = check_assumptions(sys.model, sys.envelope, sp);
    for (const auto& c : rep.checks) {
        if (c.name == "A5 k_psi constant") {
            continue;
        }
        CAPTURE(c.name);
        CHECK(c.margin >= -rep.tolerance);
    }
    // 36 is short of the 40 needed at psi ~ (1, 3); 40 passes.
    CHECK(rep.find("A5 k_psi constant").margin < 0.0);
    auto p = default_example_params();
    p.k_psi_bar = 40.0;
    const auto fixed = benchmark_system(p);
    CHECK(check_assumptions(fixed.model, fixed.envelope, sp).passed());
}
