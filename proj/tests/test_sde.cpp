#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "fbmtk/fbm.hpp"
#include "fbmtk/sde.hpp"
#include "fbmtk/wiener.hpp"
#include "oracles.hpp"

using namespace fbmtk;

namespace {

std::shared_ptr<FbmEnsemble> zero_driving(const TimeGrid& grid, int dim = 1) {
    auto ens = std::make_shared<FbmEnsemble>();
    ens->grid = grid;
    ens->H = 0.7;
    ens->dim = dim;
    ens->replicates = 1;
    ens->paths.assign(1, std::vector<double>(grid.size() *
                                             static_cast<std::size_t>(dim), 0.0));
    return ens;
}

} // namespace

TEST_CASE("catalog metadata and contraction ratios") {
    CHECK(catalog_names().size() == 5);
    for (const auto& name : {"example1", "example2", "example3", "example4"}) {
        auto d = catalog_drift(name);
        CHECK(contraction_ratio(d) == 0.5);
        CHECK(d.theta == 1.0);
    }
    CHECK(contraction_ratio(catalog_drift("fou")) == 0.0);
    CHECK(catalog_drift("example4").periodicity == Periodicity::Periodic);
    CHECK(catalog_drift("example4").period ==
          doctest::Approx(2 * 3.141592653589793).epsilon(1e-15));
    CHECK(catalog_drift("fou").periodicity == Periodicity::Autonomous);
    CHECK_THROWS_AS(catalog_drift("examples5"), ConfigInvalid);
    CHECK_THROWS_AS(catalog_drift("example1", -1.0), ConfigInvalid);

    SemilinearModel m;
    m.c_S = 2.0;
    m.c_b = 0.3;
    m.m_S = 1.5;
    CHECK(contraction_ratio(m) == doctest::Approx(0.4).epsilon(1e-15));
}

TEST_CASE("catalog drifts pass the probe-based assumption checks") {
    for (const auto& name : catalog_names()) {
        auto d = catalog_drift(name, 1.3, 0.8);
        auto rep = verify_assumptions(d, 777, 2000);
        CAPTURE(name);
        CHECK(rep.all());
        CHECK(rep.sigma_sup == doctest::Approx(0.8));
    }
    // violating the declared slope box is caught
    auto bad = catalog_drift("example1");
    bad.b0 = [](double, double x) { return 2.0 * x; };
    bad.db0_dx = nullptr;
    auto rep = verify_assumptions(bad, 777, 500);
    CHECK(!rep.slope_ok);
    CHECK(!rep.lipschitz_ok);
}

TEST_CASE("semilinear probe checks accept a contractive matrix model") {
    SemilinearModel m;
    m.dim = 2;
    m.A = -Eigen::MatrixXd::Identity(2, 2);
    m.b = [](double t, const Eigen::VectorXd& x) {
        return (0.25 * std::cos(t) * x).eval();
    };
    m.sigma = [](double) { return Eigen::MatrixXd::Identity(2, 2).eval(); };
    m.c_S = 1.0;
    m.m_S = 1.0;
    m.c_b = 0.25;
    m.m_b = 0.25;
    auto rep = verify_assumptions(m, 99, 1500);
    CHECK(rep.semigroup_ok);
    CHECK(rep.lipschitz_ok);
    CHECK(rep.growth_ok);
    CHECK(rep.sigma_bounded);
    CHECK(rep.sigma_sup == doctest::Approx(1.0));
}

TEST_CASE("linear flow is integrated exactly") {
    auto grid = TimeGrid::two_sided(0.1, 0, 50);
    auto driving = zero_driving(grid, 2);
    SemilinearModel m;
    m.dim = 2;
    m.A = -Eigen::MatrixXd::Identity(2, 2);
    m.b = [](double, const Eigen::VectorXd& x) {
        return Eigen::VectorXd::Zero(x.size()).eval();
    };
    m.sigma = [](double) { return Eigen::MatrixXd::Zero(2, 2).eval(); };
    m.c_b = 0.0;
    auto ens = integrate(m, driving, Eigen::VectorXd::Ones(2));
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double want = std::exp(-grid.t(k));
        CHECK(ens.state(0, k, 0) == doctest::Approx(want).epsilon(1e-10));
        CHECK(ens.state(0, k, 1) == doctest::Approx(want).epsilon(1e-10));
    }
}

TEST_CASE("deterministic drift path matches a fine RK4 oracle") {
    // sigma = 0 reduces the scheme to a stiff-friendly ODE integrator
    auto drift = catalog_drift("example4");
    drift.sigma = 0.0;
    const double dt = 1e-5;
    const std::size_t n = 1000000;
    auto grid = TimeGrid::two_sided(dt, 0, n);
    auto ens = integrate(drift, zero_driving(grid), 1.0);

    auto rhs = [&](double t, double x) {
        return -drift.theta * (x - drift.b0(t, x));
    };
    auto oracle = oracles::rk4(rhs, 1.0, 0.0, 1e-3, 10000);
    CHECK(std::abs(ens.state(0, n, 0) - oracle.back()) < 1e-6);
    // halfway too, against the same oracle
    CHECK(std::abs(ens.state(0, n / 2, 0) - oracle[5000]) < 1e-6);
}

TEST_CASE("ou variance at the end of burn-in matches the improper oracle") {
    TwoSidedOptions opt;
    opt.T = 40.0;
    opt.dt = 0.05;
    opt.replicates = 3000;
    opt.seed = 2025;
    opt.H = 0.7;
    auto ens = integrate_two_sided(catalog_drift("fou"), opt);
    CHECK(ens.burn_in == doctest::Approx(40.0));
    CHECK(ens.grid.index_of_zero() == 800);

    const std::size_t iT = ens.grid.index_at(40.0);
    std::vector<double> sq(opt.replicates), val(opt.replicates);
    for (std::size_t r = 0; r < opt.replicates; ++r) {
        const double x = ens.state(r, iT, 0);
        sq[r] = x * x;
        val[r] = x;
    }
    auto kernel = make_decaying_integrand([](double u) { return std::exp(u); },
                                          "exp", 1.0);
    const double oracle = improper_wiener_second_moment(kernel, 0.0, opt.H);
    CHECK(oracle == doctest::Approx(oracles::frozen::ou_variance_h07).epsilon(2e-4));
    const double se = std::sqrt(pairwise_variance(sq) / opt.replicates);
    CHECK(std::abs(pairwise_mean(sq) - oracle) < 4.0 * se + 0.02);
    const double se_mean = std::sqrt(pairwise_variance(val) / opt.replicates);
    CHECK(std::abs(pairwise_mean(val)) < 4.0 * se_mean);
}

TEST_CASE("burn-in start is forgotten") {
    // integrate the same driving increments from -80 and from -40; the
    // difference at t = 0 is bounded by exponential forgetting
    FbmOptions fo;
    fo.grid = TimeGrid::two_sided(0.05, 1600, 20);
    fo.H = 0.7;
    fo.replicates = 200;
    fo.seed = 11;
    auto full = std::make_shared<FbmEnsemble>(sample_ensemble(fo));

    auto sliced = std::make_shared<FbmEnsemble>();
    sliced->grid = TimeGrid::two_sided(0.05, 800, 20);
    sliced->H = fo.H;
    sliced->dim = 1;
    sliced->replicates = fo.replicates;
    sliced->seed = fo.seed;
    sliced->paths.assign(fo.replicates, {});
    for (std::size_t r = 0; r < fo.replicates; ++r)
        sliced->paths[r] = std::vector<double>(full->paths[r].begin() + 800,
                                               full->paths[r].end());

    auto drift = catalog_drift("example1");
    auto a = integrate(drift, full, 0.0);
    auto b = integrate(drift, sliced, 0.0);
    const std::size_t ia = a.grid.index_of_zero();
    const std::size_t ib = b.grid.index_of_zero();
    std::vector<double> sa(fo.replicates), sb(fo.replicates);
    for (std::size_t r = 0; r < fo.replicates; ++r) {
        sa[r] = sqr(a.state(r, ia, 0));
        sb[r] = sqr(b.state(r, ib, 0));
        // pathwise: the two runs agree far below any statistical scale
        CHECK(std::abs(a.state(r, ia, 0) - b.state(r, ib, 0)) < 1e-6);
    }
    const double ma = pairwise_mean(sa);
    CHECK(std::abs(ma - pairwise_mean(sb)) < 1e-6 * std::max(1.0, ma));
}

TEST_CASE("exponential forgetting rate of initial conditions") {
    FbmOptions fo;
    fo.grid = TimeGrid::two_sided(0.01, 0, 2000);
    fo.H = 0.7;
    fo.replicates = 50;
    fo.seed = 123;
    auto driving = std::make_shared<FbmEnsemble>(sample_ensemble(fo));
    auto drift = catalog_drift("example1");
    auto lo = integrate(drift, driving, 0.0);
    auto hi = integrate(drift, driving, 10.0);
    const double t = 20.0;
    const std::size_t it = lo.grid.index_at(t);
    // continuous-time rate m_S (1 - ratio) = 1/2; the discrete scheme adds a
    // per-step defect of order dt^2, negligible at dt = 0.01
    const double bound = 10.0 * std::exp(-0.5 * t) * 1.05;
    for (std::size_t r = 0; r < fo.replicates; ++r)
        CHECK(std::abs(lo.state(r, it, 0) - hi.state(r, it, 0)) <= bound);
}

TEST_CASE("periodic drift gives a periodic variance profile") {
    TwoSidedOptions opt;
    opt.T = 4.0 * 3.141592653589793;
    opt.dt = 3.141592653589793 / 50.0;
    opt.replicates = 2000;
    opt.seed = 77;
    opt.H = 0.7;
    auto ens = integrate_two_sided(catalog_drift("example4"), opt);
    const double tp = 3.141592653589793 / 2.0;
    const std::size_t i1 = ens.grid.index_at(tp);
    const std::size_t i2 = ens.grid.index_at(tp + 2.0 * 3.141592653589793);
    std::vector<double> s1(opt.replicates), s2(opt.replicates);
    for (std::size_t r = 0; r < opt.replicates; ++r) {
        s1[r] = sqr(ens.state(r, i1, 0));
        s2[r] = sqr(ens.state(r, i2, 0));
    }
    const double se1 = std::sqrt(pairwise_variance(s1) / opt.replicates);
    const double se2 = std::sqrt(pairwise_variance(s2) / opt.replicates);
    CHECK(std::abs(pairwise_mean(s1) - pairwise_mean(s2)) < 4.0 * (se1 + se2));
}

TEST_CASE("scheme variance converges first order on refinement") {
    // E X_N^2 for the discrete OU recursion is an explicit Gaussian double
    // sum, so refinement bias is measured with no Monte Carlo noise.
    auto scheme_variance = [](double dt, double H) {
        const double T0 = 40.0, T = 1.0;
        const std::size_t n = static_cast<std::size_t>(std::llround((T0 + T) / dt));
        const double rho = std::exp(-dt);
        const double dt2h = std::pow(dt, 2.0 * H);
        std::vector<double> pw(n);
        for (std::size_t k = 0; k < n; ++k)
            pw[k] = std::pow(rho, static_cast<double>(n - 1 - k));
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t k = 0; k < n; ++k)
                acc += pw[j] * pw[k] *
                       fgn_autocovariance(static_cast<long>(j) - static_cast<long>(k), H) *
                       dt2h;
        }
        return acc;
    };
    const double H = 0.7;
    const double limit = oracles::frozen::ou_variance_h07;
    const double g1 = std::abs(scheme_variance(0.2, H) - limit);
    const double g2 = std::abs(scheme_variance(0.1, H) - limit);
    const double g3 = std::abs(scheme_variance(0.05, H) - limit);
    CHECK(g2 < g1);
    CHECK(g3 < g2);
    CHECK(g2 < 0.75 * g1);
}

TEST_CASE("translation by zero is the identity and stays replicate-paired") {
    TwoSidedOptions opt;
    opt.T = 2.0;
    opt.dt = 0.05;
    opt.replicates = 4;
    opt.seed = 5;
    auto ens = integrate_two_sided(catalog_drift("example1"), opt);
    auto same = translate_solution(ens, 0.0);
    for (std::size_t r = 0; r < opt.replicates; ++r)
        for (std::size_t k = 0; k < ens.grid.size(); ++k)
            CHECK(same.state(r, k, 0) == ens.state(r, k, 0));
    CHECK_THROWS_AS(translate_solution(ens, 0.03), TauOffGrid);
}

TEST_CASE("autonomous dynamics translate to themselves bitwise") {
    TwoSidedOptions opt;
    opt.T = 5.0;
    opt.dt = 0.05;
    opt.replicates = 8;
    opt.seed = 6;
    auto ens = integrate_two_sided(catalog_drift("fou"), opt);
    for (double tau : {0.25, 5.0, -1.5}) {
        auto moved = translate_solution(ens, tau);
        for (std::size_t r = 0; r < opt.replicates; ++r)
            for (std::size_t k = 0; k < ens.grid.size(); ++k)
                CHECK(moved.state(r, k, 0) == ens.state(r, k, 0));
    }
}

TEST_CASE("period translation of the periodic model is near-exact") {
    TwoSidedOptions opt;
    opt.T = 4.0 * 3.141592653589793;
    opt.dt = 3.141592653589793 / 50.0;
    opt.replicates = 300;
    opt.seed = 9;
    opt.H = 0.7;
    auto ens = integrate_two_sided(catalog_drift("example4"), opt);
    auto moved = translate_solution(ens, 2.0 * 3.141592653589793);
    std::vector<double> var(opt.replicates), dev(opt.replicates);
    const std::size_t i0 = ens.grid.index_of_zero();
    double worst = 0.0;
    for (std::size_t k = i0; k < ens.grid.size(); k += 25) {
        for (std::size_t r = 0; r < opt.replicates; ++r) {
            var[r] = sqr(ens.state(r, k, 0));
            dev[r] = sqr(moved.state(r, k, 0) - ens.state(r, k, 0));
        }
        worst = std::max(worst, pairwise_mean(dev) / std::max(pairwise_mean(var), 1e-30));
    }
    CHECK(worst < 1e-3);
}

TEST_CASE("two-sided integration refuses expanding models") {
    SemilinearModel m;
    m.dim = 1;
    m.A = Eigen::MatrixXd::Constant(1, 1, -1.0);
    m.b = [](double, const Eigen::VectorXd& x) { return (2.0 * x).eval(); };
    m.sigma = [](double) { return Eigen::MatrixXd::Identity(1, 1).eval(); };
    m.c_S = 1.0;
    m.m_S = 1.0;
    m.c_b = 2.0;
    TwoSidedOptions opt;
    CHECK_THROWS_AS(integrate_two_sided(m, opt), ContractionViolated);

    auto flat = catalog_drift("example1");
    flat.m_lower = 0.0; // ratio 1
    CHECK_THROWS_AS(integrate_two_sided(flat, opt), ContractionViolated);
}

TEST_CASE("state overflow guard") {
    auto grid = TimeGrid::two_sided(0.1, 0, 100);
    SemilinearModel m;
    m.dim = 1;
    m.A = Eigen::MatrixXd::Constant(1, 1, 5.0);
    m.b = [](double, const Eigen::VectorXd& x) {
        return Eigen::VectorXd::Zero(x.size()).eval();
    };
    m.sigma = [](double) { return Eigen::MatrixXd::Zero(1, 1).eval(); };
    CHECK_THROWS_AS(integrate(m, zero_driving(grid), Eigen::VectorXd::Ones(1)),
                    StepDiverged);
}

TEST_CASE("integration is deterministic and dimension-checked") {
    TwoSidedOptions opt;
    opt.T = 1.0;
    opt.dt = 0.05;
    opt.replicates = 3;
    opt.seed = 404;
    auto a = integrate_two_sided(catalog_drift("example2"), opt);
    auto b = integrate_two_sided(catalog_drift("example2"), opt);
    for (std::size_t r = 0; r < opt.replicates; ++r)
        for (std::size_t k = 0; k < a.grid.size(); ++k)
            CHECK(a.state(r, k, 0) == b.state(r, k, 0));

    FbmOptions fo;
    fo.grid = TimeGrid::two_sided(0.25, 0, 8);
    fo.dim = 2;
    fo.replicates = 1;
    auto driving2 = std::make_shared<FbmEnsemble>(sample_ensemble(fo));
    CHECK_THROWS_AS(integrate(catalog_drift("example1"), driving2, 0.0),
                    DimensionUnsupported);
}
