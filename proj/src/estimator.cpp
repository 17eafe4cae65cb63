#include "fbmtk/estimator.hpp"

#include <cmath>
#include <exception>
#include <mutex>

#include "fbmtk/ap.hpp"

namespace fbmtk {

namespace {

constexpr double kDegenerateVt = 1e-12;
constexpr double kSpectrumLambdaMax = 6.0;
constexpr double kPi = 3.141592653589793;

void require_scalar_drift(const PathEnsemble& paths) {
    if (paths.dim != 1)
        throw DimensionUnsupported("estimation is scalar only");
    if (!paths.drift)
        throw ConfigInvalid("estimation needs a drift-spec ensemble");
}

// phi(t, x) = x - b0(., x) on the ensemble's coefficient clock; its slope
// is 1 - d_x b0 when the drift declares one.
Observable divergence_observable(const PathEnsemble& paths) {
    auto b0 = paths.drift->b0;
    auto db = paths.drift->db0_dx;
    const double shift = paths.coeff_shift;
    Observable phi;
    phi.value = [b0, shift](double t, double x) {
        return x - b0(t + shift, x);
    };
    if (db)
        phi.slope = [db, shift](double t, double x) {
            return 1.0 - db(t + shift, x);
        };
    return phi;
}

void require_horizons(const TimeGrid& grid, const std::vector<double>& hs) {
    if (hs.empty()) throw ConfigInvalid("horizon grid is empty");
    double prev = 0.0;
    for (double h : hs) {
        if (!(h > prev))
            throw ConfigInvalid("horizons must be positive and increasing");
        grid.index_at(h); // WindowOffGrid unless h is a grid point
        prev = h;
    }
}

// Trapezoid of values[a..k] relative to node a, divided by the elapsed time.
double window_average(const std::vector<double>& values, std::size_t a,
                      std::size_t k, double dt) {
    std::vector<double> terms(k - a + 1, 0.0);
    for (std::size_t q = a; q <= k; ++q)
        terms[q - a] = (q == a || q == k) ? 0.5 * values[q] : values[q];
    return pairwise_sum(terms.data(), terms.size()) * dt /
           (static_cast<double>(k - a) * dt);
}

} // namespace

std::vector<double> v_T(const PathEnsemble& paths, double T) {
    require_scalar_drift(paths);
    if (!(T > 0.0)) throw ConfigInvalid("estimation horizon must be positive");
    const std::size_t a = paths.grid.index_at(0.0);
    const std::size_t b = paths.grid.index_at(T);
    const double dt = paths.grid.dt();
    const double shift = paths.coeff_shift;
    const auto& b0 = paths.drift->b0;

    std::vector<double> out(paths.replicates, 0.0);
    parallel_for(paths.replicates, [&](std::size_t r) {
        std::vector<double> terms(b - a + 1, 0.0);
        for (std::size_t k = a; k <= b; ++k) {
            const double t = paths.grid.t(k);
            const double x = paths.state(r, k, 0);
            const double w = (k == a || k == b) ? 0.5 : 1.0;
            terms[k - a] = w * sqr(x - b0(t + shift, x));
        }
        out[r] = pairwise_sum(terms.data(), terms.size()) * dt / T;
    });
    return out;
}

std::vector<double> u_T(const PathEnsemble& paths, double theta_true,
                        double T) {
    require_scalar_drift(paths);
    if (!(T > 0.0)) throw ConfigInvalid("estimation horizon must be positive");
    const MalliavinKernel kernel = malliavin_kernel(paths, theta_true);
    const Observable phi = divergence_observable(paths);
    const auto parts = skorokhod_integral(phi, paths, kernel, 0.0, T);
    std::vector<double> out(paths.replicates, 0.0);
    for (std::size_t r = 0; r < paths.replicates; ++r)
        out[r] = parts[r].skorokhod_value / T;
    return out;
}

std::vector<EstimatorResult> estimate_oracle(const PathEnsemble& paths,
                                             double theta_true, double T) {
    const auto v = v_T(paths, T);
    for (double val : v)
        if (val < kDegenerateVt)
            throw DegenerateVt("squared divergence average vanishes");
    const auto u = u_T(paths, theta_true, T);

    std::vector<EstimatorResult> out(paths.replicates);
    for (std::size_t r = 0; r < paths.replicates; ++r) {
        EstimatorResult& res = out[r];
        res.theta_hat = theta_true - u[r] / v[r];
        res.u_T = u[r];
        res.v_T = v[r];
        res.horizon_T = T;
        res.mode = EstimatorMode::OracleDecomposition;
        res.fixed_point_iterations = 0;
        res.converged = true;
    }
    return out;
}

std::vector<EstimatorResult> estimate_fixed_point(const PathEnsemble& paths,
                                                  double theta_init, double T,
                                                  int max_iter, double tol) {
    const auto v = v_T(paths, T);
    for (double val : v)
        if (val < kDegenerateVt)
            throw DegenerateVt("squared divergence average vanishes");
    if (max_iter < 1) throw ConfigInvalid("max_iter must be at least 1");
    if (!(tol > 0.0)) throw ConfigInvalid("tolerance must be positive");
    if (!paths.driving)
        throw KernelMismatch("ensemble carries no driving noise");

    const std::size_t a = paths.grid.index_at(0.0);
    const std::size_t b = paths.grid.index_at(T);
    const std::size_t m = b - a;
    const double dt = paths.grid.dt();
    const double shift = paths.coeff_shift;
    const auto& b0 = paths.drift->b0;
    const Observable phi = divergence_observable(paths);
    const auto masses = fractional_cell_masses(paths.driving->H, dt, b);

    // One integrator step contracts deviations by e^{-theta dt}, so the raw
    // ratio of path sums estimates (1 - e^{-theta dt}) / dt; inverting that
    // map removes the step-size bias entirely (a noise-free path returns
    // theta to rounding).
    const auto invert = [dt](double raw) {
        const double arg = 1.0 - raw * dt;
        return arg > 0.0 ? -std::log(arg) / dt : raw;
    };

    std::vector<EstimatorResult> out(paths.replicates);
    std::exception_ptr failure;
    std::mutex guard;
    parallel_for(paths.replicates, [&](std::size_t r) {
        try {
            std::vector<double> phv(m + 1, 0.0);
            std::vector<double> xv(m + 1, 0.0);
            for (std::size_t k = a; k <= b; ++k) {
                const double t = paths.grid.t(k);
                const double x = paths.state(r, k, 0);
                phv[k - a] = x - b0(t + shift, x);
                xv[k - a] = x;
            }
            const double young_x = young_integral(phv, xv, 0, m);
            std::vector<double> sq(m, 0.0);
            for (std::size_t k = 0; k < m; ++k) sq[k] = sqr(phv[k]);
            const double S = pairwise_sum(sq.data(), sq.size()) * dt;
            if (!(S > 0.0))
                throw DegenerateVt("squared divergence sum vanishes");

            double th = std::isnan(theta_init) ? invert(-young_x / S)
                                               : theta_init;
            double tr = 0.0;
            int it = 0;
            bool conv = false;
            while (it < max_iter) {
                tr = trace_correction_one(phi, paths, th, r, 0.0, T, masses);
                const double next = invert(-(young_x - tr) / S);
                ++it;
                if (std::abs(next - th) < tol) {
                    th = next;
                    conv = true;
                    break;
                }
                th = next;
            }

            EstimatorResult& res = out[r];
            res.theta_hat = th;
            res.u_T = (young_x - tr) / T + th * v[r];
            res.v_T = v[r];
            res.horizon_T = T;
            res.mode = EstimatorMode::FixedPoint;
            res.fixed_point_iterations = it;
            res.converged = conv;
        } catch (...) {
            std::lock_guard<std::mutex> lock(guard);
            if (!failure) failure = std::current_exception();
        }
    });
    if (failure) std::rethrow_exception(failure);
    return out;
}

BirkhoffSeries birkhoff_average(
    const PathEnsemble& paths,
    const std::function<double(double, double)>& f,
    const std::vector<double>& horizons) {
    if (paths.dim != 1)
        throw DimensionUnsupported("pathwise averages are scalar only");
    if (!f) throw ConfigInvalid("pathwise functional is empty");
    require_horizons(paths.grid, horizons);

    const std::size_t a = paths.grid.index_at(0.0);
    const double dt = paths.grid.dt();
    const double shift = paths.coeff_shift;

    BirkhoffSeries series;
    series.horizons = horizons;
    series.per_replicate.assign(horizons.size(),
                                std::vector<double>(paths.replicates, 0.0));
    parallel_for(paths.replicates, [&](std::size_t r) {
        const std::size_t last = paths.grid.index_at(horizons.back());
        std::vector<double> y(last - a + 1, 0.0);
        for (std::size_t k = a; k <= last; ++k)
            y[k - a] = f(paths.grid.t(k) + shift, paths.state(r, k, 0));
        for (std::size_t i = 0; i < horizons.size(); ++i) {
            const std::size_t ki = paths.grid.index_at(horizons[i]);
            series.per_replicate[i][r] = window_average(y, 0, ki - a, dt);
        }
    });
    for (std::size_t i = 0; i < horizons.size(); ++i) {
        series.mean.push_back(pairwise_mean(series.per_replicate[i]));
        series.variance.push_back(pairwise_variance(series.per_replicate[i]));
    }
    return series;
}

MeanValueEstimate mean_value_ap(
    const PathEnsemble& paths,
    const std::function<double(double, double)>& f,
    const std::vector<double>& horizons) {
    if (paths.dim != 1)
        throw DimensionUnsupported("pathwise averages are scalar only");
    if (!f) throw ConfigInvalid("pathwise functional is empty");
    require_horizons(paths.grid, horizons);
    if (paths.replicates == 0) throw ConfigInvalid("ensemble is empty");

    const std::size_t a = paths.grid.index_at(0.0);
    const std::size_t bN = paths.grid.index_at(horizons.back());
    const double dt = paths.grid.dt();
    const double shift = paths.coeff_shift;

    // Ensemble-mean functional on the window nodes.
    std::vector<double> mean_fn(bN - a + 1, 0.0);
    parallel_for(bN - a + 1, [&](std::size_t q) {
        const std::size_t k = a + q;
        const double t = paths.grid.t(k) + shift;
        std::vector<double> vals(paths.replicates, 0.0);
        for (std::size_t r = 0; r < paths.replicates; ++r)
            vals[r] = f(t, paths.state(r, k, 0));
        mean_fn[q] = pairwise_mean(vals);
    });

    MeanValueEstimate est;
    est.horizons = horizons;
    for (double h : horizons) {
        const std::size_t kh = paths.grid.index_at(h);
        est.values.push_back(window_average(mean_fn, 0, kh - a, dt));
    }
    est.mean_value = est.values.back();

    // Spectral positivity diagnostic: energy of the lines that survive the
    // default amplitude threshold, the zero frequency included.
    const double horizon = horizons.back();
    const TimeGrid sgrid = TimeGrid::from_origin(0.0, dt, bN - a + 1);
    const SampledSignal signal = make_signal(sgrid, mean_fn);
    const double pitch = kPi / horizon;
    std::vector<double> lambda_grid;
    for (double lam = 0.0; lam <= kSpectrumLambdaMax; lam += pitch)
        lambda_grid.push_back(lam);
    const SpectrumEstimate spec =
        spectrum_scan(signal, lambda_grid, 0.0, horizon);
    double energy = 0.0;
    for (const auto& c : spec.coefficients) energy += std::norm(c);
    est.spectral_energy = energy;
    return est;
}

ConsistencySeries consistency_experiment(const PathEnsemble& paths,
                                         double theta_true,
                                         const std::vector<double>& horizons) {
    require_horizons(paths.grid, horizons);
    if (horizons.size() < 2)
        throw ConfigInvalid("slope fit needs at least two horizons");

    ConsistencySeries series;
    series.theta_true = theta_true;
    series.horizons = horizons;
    for (double T : horizons) {
        const auto est = estimate_oracle(paths, theta_true, T);
        std::vector<double> th(est.size()), err(est.size()), u2(est.size()),
            vv(est.size());
        for (std::size_t r = 0; r < est.size(); ++r) {
            th[r] = est[r].theta_hat;
            err[r] = std::abs(est[r].theta_hat - theta_true);
            u2[r] = sqr(est[r].u_T);
            vv[r] = est[r].v_T;
        }
        series.median_theta_hat.push_back(quantile(th, 0.5));
        series.iq_spread.push_back(quantile(th, 0.75) - quantile(th, 0.25));
        series.median_abs_error.push_back(quantile(err, 0.5));
        series.mean_u_sq.push_back(pairwise_mean(u2));
        series.mean_v.push_back(pairwise_mean(vv));
    }

    // Least-squares slope of log mean(U_T^2) against log T.
    bool positive = true;
    for (double m : series.mean_u_sq) positive = positive && m > 0.0;
    if (positive) {
        const double n = static_cast<double>(horizons.size());
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        for (std::size_t i = 0; i < horizons.size(); ++i) {
            const double x = std::log(horizons[i]);
            const double y = std::log(series.mean_u_sq[i]);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        series.u_sq_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    }
    return series;
}

} // namespace fbmtk
