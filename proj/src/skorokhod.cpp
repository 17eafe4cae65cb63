#include "fbmtk/skorokhod.hpp"

#include <cmath>
#include <exception>
#include <mutex>

#include "fbmtk/fbm.hpp"

namespace fbmtk {

namespace {

constexpr double kSlopeFdStep = 1e-6;
// Rows stop once the realized state derivative falls below this relative
// level; the certified exponential envelope makes the dropped tail the same
// order.
constexpr double kRowCutoff = 1e-12;

std::function<double(double, double)>
drift_slope(const std::shared_ptr<const DriftSpec>& drift) {
    if (drift->db0_dx) return drift->db0_dx;
    auto b0 = drift->b0;
    return [b0](double t, double x) {
        return (b0(t, x + kSlopeFdStep) - b0(t, x - kSlopeFdStep)) /
               (2.0 * kSlopeFdStep);
    };
}

std::function<double(double, double)> observable_slope(const Observable& phi) {
    if (phi.slope) return phi.slope;
    auto value = phi.value;
    return [value](double t, double x) {
        return (value(t, x + kSlopeFdStep) - value(t, x - kSlopeFdStep)) /
               (2.0 * kSlopeFdStep);
    };
}

// Trace of one replicate over window cells [a, b): each t-cell k is paired
// with every s-cell strictly left of it on the whole grid, weighted by the
// exact pair mass, with the integrator's own damping factors as the state
// derivative.  Every term carries sigma^2, so sigma = 0 short-circuits.
double replicate_trace(const PathEnsemble& paths,
                       const std::function<double(double, double)>& pslope,
                       const std::function<double(double, double)>& bslope,
                       double efac, double sig, const std::vector<double>& gam,
                       std::size_t r, std::size_t a, std::size_t b) {
    if (sig == 0.0 || b <= a) return 0.0;
    const double shift = paths.coeff_shift;
    std::vector<double> damp(b, 0.0);
    for (std::size_t q = 0; q < b; ++q)
        damp[q] = efac + (1.0 - efac) * bslope(paths.grid.t(q) + shift,
                                               paths.state(r, q, 0));
    std::vector<double> rows(b - a, 0.0);
    for (std::size_t k = a; k < b; ++k) {
        double cell = 0.0;
        double g = sig; // state derivative w.r.t. the adjacent cell
        for (std::size_t j = k; j-- > 0;) {
            cell += gam[k - j] * g;
            g *= damp[j];
            if (std::abs(g) < sig * kRowCutoff) break;
        }
        rows[k - a] = cell * sig * pslope(paths.grid.t(k), paths.state(r, k, 0));
    }
    return pairwise_sum(rows.data(), rows.size());
}

} // namespace

double MalliavinKernel::value(std::size_t replicate, std::size_t j,
                              std::size_t k) const {
    if (j > k) return 0.0;
    const auto& e = prefix[replicate];
    return sigma * std::exp(-theta * (e[k - w0] - e[j - w0]));
}

double MalliavinKernel::step(std::size_t replicate, std::size_t j) const {
    const auto& e = prefix[replicate];
    return std::exp(-theta * (e[j + 1 - w0] - e[j - w0]));
}

MalliavinKernel malliavin_kernel(const PathEnsemble& paths, double theta_used) {
    if (paths.dim != 1)
        throw DimensionUnsupported("first-variation kernel is scalar only");
    if (!paths.drift || !paths.driving)
        throw ConfigInvalid("kernel needs a drift-spec ensemble with its noise");

    // The kernel covers the whole simulated range, burn-in included: the
    // state inside any estimation window is a functional of every earlier
    // increment, and the trace must see that full dependency support.
    MalliavinKernel ker;
    ker.grid = paths.grid;
    ker.w0 = 0;
    ker.w1 = paths.grid.size() - 1;
    ker.theta = theta_used;
    ker.sigma = paths.drift->sigma;
    ker.slope_floor = paths.drift->m_lower;
    ker.replicates = paths.replicates;
    ker.prefix.assign(paths.replicates, {});

    const double dt = paths.grid.dt();
    const double shift = paths.coeff_shift;
    auto slope = drift_slope(paths.drift);
    const std::size_t m = ker.w1 - ker.w0 + 1;
    parallel_for(paths.replicates, [&](std::size_t r) {
        auto& e = ker.prefix[r];
        e.resize(m);
        e[0] = 0.0;
        double gprev = 1.0 - slope(paths.grid.t(ker.w0) + shift,
                                   paths.state(r, ker.w0, 0));
        for (std::size_t q = 1; q < m; ++q) {
            const double g = 1.0 - slope(paths.grid.t(ker.w0 + q) + shift,
                                         paths.state(r, ker.w0 + q, 0));
            e[q] = e[q - 1] + 0.5 * (gprev + g) * dt;
            gprev = g;
        }
    });
    return ker;
}

std::vector<double> fractional_cell_masses(double H, double dt,
                                           std::size_t count) {
    std::vector<double> gam(count > 0 ? count : 1, 0.0);
    const double dt2h = std::pow(dt, 2.0 * H);
    for (std::size_t l = 0; l < gam.size(); ++l)
        gam[l] = fgn_autocovariance(static_cast<long>(l), H) * dt2h;
    return gam;
}

double trace_correction_one(const Observable& phi, const PathEnsemble& paths,
                            double theta_used, std::size_t replicate,
                            double t_lo, double t_hi,
                            const std::vector<double>& masses) {
    if (!phi.value) throw ConfigInvalid("observable has no value function");
    if (paths.dim != 1)
        throw DimensionUnsupported("trace correction is scalar only");
    if (!paths.driving || !paths.drift)
        throw KernelMismatch("ensemble carries no driving noise");
    if (replicate >= paths.replicates)
        throw ConfigInvalid("replicate index out of range");
    const std::size_t a = paths.grid.index_at(t_lo);
    const std::size_t b = paths.grid.index_at(t_hi);
    if (a > b) throw WindowOffGrid("window is reversed");
    const double dt = paths.grid.dt();
    std::vector<double> local;
    if (masses.empty()) {
        local = fractional_cell_masses(paths.driving->H, dt, b);
    } else if (masses.size() < b) {
        throw ConfigInvalid("cell-mass table shorter than the grid");
    }
    return replicate_trace(paths, observable_slope(phi),
                           drift_slope(paths.drift),
                           std::exp(-theta_used * dt), paths.drift->sigma,
                           masses.empty() ? local : masses, replicate, a, b);
}

double young_integral(const std::vector<double>& y,
                      const std::vector<double>& x, std::size_t a,
                      std::size_t b) {
    if (b >= x.size() || b >= y.size() || a > b)
        throw WindowOffGrid("sum window leaves the sampled range");
    std::vector<double> terms(b - a, 0.0);
    for (std::size_t k = a; k < b; ++k)
        terms[k - a] = y[k] * (x[k + 1] - x[k]);
    return pairwise_sum(terms.data(), terms.size());
}

double young_integral(const std::vector<double>& y,
                      const std::vector<double>& x, const TimeGrid& grid,
                      double t_lo, double t_hi) {
    return young_integral(y, x, grid.index_at(t_lo), grid.index_at(t_hi));
}

std::vector<SkorokhodResult> skorokhod_integral(const Observable& phi,
                                                const PathEnsemble& paths,
                                                const MalliavinKernel& kernel,
                                                double t_lo, double t_hi) {
    if (!phi.value) throw ConfigInvalid("observable has no value function");
    if (!(kernel.grid == paths.grid) || kernel.replicates != paths.replicates)
        throw KernelMismatch("kernel was built for a different ensemble");
    if (!paths.driving || !paths.drift)
        throw KernelMismatch("ensemble carries no driving noise");
    if (kernel.sigma != paths.drift->sigma)
        throw KernelMismatch("kernel diffusion does not match the ensemble");
    const std::size_t a = paths.grid.index_at(t_lo);
    const std::size_t b = paths.grid.index_at(t_hi);
    if (a < kernel.w0 || b > kernel.w1 || a > b)
        throw KernelMismatch("window leaves the kernel domain");

    const double H = paths.driving->H;
    const double dt = paths.grid.dt();
    const double alpha = H * (2.0 * H - 1.0);
    const double sig = kernel.sigma;
    auto pslope = observable_slope(phi);
    auto bslope = drift_slope(paths.drift);
    // Per-step damping of the integrator's state derivative. Using the
    // scheme's own factors (not the continuum exponential) keeps the
    // discrete duality E[sum u dB] = E[trace] exact for every drift; for
    // constant-slope drifts the two coincide.
    const double efac = std::exp(-kernel.theta * dt);

    const std::vector<double> gam = fractional_cell_masses(H, dt, b);

    std::vector<SkorokhodResult> out(paths.replicates);
    std::exception_ptr failure;
    std::mutex guard;
    parallel_for(paths.replicates, [&](std::size_t r) {
        try {
            std::vector<double> u(b > a ? b - a : 0);
            std::vector<double> db(u.size());
            for (std::size_t k = a; k < b; ++k) {
                u[k - a] = phi.value(paths.grid.t(k), paths.state(r, k, 0)) * sig;
                db[k - a] = paths.driving->value(r, k + 1, 0) -
                            paths.driving->value(r, k, 0);
            }
            SkorokhodResult& res = out[r];
            res.alpha_H = alpha;
            std::vector<double> terms(u.size(), 0.0);
            for (std::size_t i = 0; i < u.size(); ++i) terms[i] = u[i] * db[i];
            res.young_integral = pairwise_sum(terms.data(), terms.size());
            res.trace_correction = replicate_trace(paths, pslope, bslope, efac,
                                                   sig, gam, r, a, b);
            res.skorokhod_value = res.young_integral - res.trace_correction;
        } catch (...) {
            std::lock_guard<std::mutex> lock(guard);
            if (!failure) failure = std::current_exception();
        }
    });
    if (failure) std::rethrow_exception(failure);
    return out;
}

std::vector<double> skorokhod_wrt_X(const Observable& phi,
                                    const PathEnsemble& paths,
                                    const MalliavinKernel& kernel,
                                    double theta_used, double t_lo,
                                    double t_hi) {
    auto noise_part = skorokhod_integral(phi, paths, kernel, t_lo, t_hi);
    const std::size_t a = paths.grid.index_at(t_lo);
    const std::size_t b = paths.grid.index_at(t_hi);
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
            terms[k - a] = w * phi.value(t, x) * (x - b0(t + shift, x));
        }
        const double leb = pairwise_sum(terms.data(), terms.size()) * dt;
        out[r] = -theta_used * leb + noise_part[r].skorokhod_value;
    });
    return out;
}

} // namespace fbmtk
