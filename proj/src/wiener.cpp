#include "fbmtk/wiener.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace fbmtk {

Integrand make_integrand(std::function<double(double)> f, std::string name) {
    Integrand h;
    h.f = std::move(f);
    h.name = std::move(name);
    return h;
}

Integrand make_decaying_integrand(std::function<double(double)> f, std::string name,
                                  double decay_rate) {
    if (!(decay_rate > 0.0))
        throw NoDecayHint("decay rate must be positive for " + name);
    Integrand h;
    h.f = std::move(f);
    h.name = std::move(name);
    h.decay_rate = decay_rate;

    // Fit the envelope constant on [-60/m, 0]; beyond that the declared
    // envelope itself is below 1e-26 * C.
    const int probes = 2400;
    const double lo = -60.0 / decay_rate;
    double c = 0.0;
    for (int i = 0; i <= probes; ++i) {
        const double t = lo + (0.0 - lo) * static_cast<double>(i) / probes;
        const double ratio = std::abs(h.f(t)) * std::exp(-decay_rate * t);
        c = std::max(c, ratio);
    }
    if (!std::isfinite(c) || c > 1e12)
        throw NoDecayHint("envelope fit failed for " + name);
    h.decay_scale = c;
    return h;
}

double singular_cell_mass(long lag, double dt, double H) {
    return fgn_autocovariance(lag, H) * std::pow(dt, 2.0 * H);
}

double riemann_sum(const std::vector<double>& y, const std::vector<double>& w,
                   std::size_t a, std::size_t b) {
    double acc = 0.0;
    for (std::size_t k = a; k < b; ++k) acc += y[k] * (w[k + 1] - w[k]);
    return acc;
}

double riemann_sum(const std::function<double(double)>& y,
                   const std::vector<double>& w, const TimeGrid& grid,
                   std::size_t a, std::size_t b) {
    double acc = 0.0;
    for (std::size_t k = a; k < b; ++k) acc += y(grid.t(k)) * (w[k + 1] - w[k]);
    return acc;
}

namespace {

// Lag-correlation form of the double sum: all cell pairs at the same |i-j|
// share one kernel mass.
double cell_quadrature(const std::vector<double>& g, double dt, double H) {
    const std::size_t n = g.size();
    double self = 0.0;
    for (std::size_t i = 0; i < n; ++i) self += g[i] * g[i];
    double total = singular_cell_mass(0, dt, H) * self;
    for (std::size_t k = 1; k < n; ++k) {
        double corr = 0.0;
        for (std::size_t i = 0; i + k < n; ++i) corr += g[i] * g[i + k];
        total += 2.0 * singular_cell_mass(static_cast<long>(k), dt, H) * corr;
    }
    if (!std::isfinite(total))
        throw QuadratureDiverged("cell quadrature produced a non-finite value");
    return total;
}

std::vector<double> midpoint_samples(const std::function<double(double)>& f,
                                     double s, double t, std::size_t n,
                                     bool absolute) {
    std::vector<double> g(n);
    const double dt = (t - s) / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double v = f(s + (static_cast<double>(i) + 0.5) * dt);
        g[i] = absolute ? std::abs(v) : v;
    }
    return g;
}

double windowed_second_moment(const Integrand& h, double s, double t, double H,
                              std::size_t n_cells, bool absolute) {
    if (!(t > s)) throw ConfigInvalid("quadrature window is empty");
    if (n_cells == 0) throw ConfigInvalid("quadrature needs at least one cell");
    const double dt = (t - s) / static_cast<double>(n_cells);
    return cell_quadrature(midpoint_samples(h.f, s, t, n_cells, absolute), dt, H);
}

} // namespace

double wiener_second_moment(const Integrand& h, double s, double t, double H,
                            std::size_t n_cells) {
    return windowed_second_moment(h, s, t, H, n_cells, false);
}

double hnorm(const Integrand& h, double s, double t, double H, std::size_t n_cells) {
    return windowed_second_moment(h, s, t, H, n_cells, true);
}

double memin_bound(const Integrand& h, double s, double t, double H,
                   double constant, std::size_t n_points) {
    if (!(t > s)) throw ConfigInvalid("norm window is empty");
    std::size_t n = n_points + (n_points % 2); // Simpson needs an even count
    const double step = (t - s) / static_cast<double>(n);
    const double p = 1.0 / H;
    auto ip = [&](std::size_t i) {
        return std::pow(std::abs(h.f(s + step * static_cast<double>(i))), p);
    };
    double acc = ip(0) + ip(n);
    for (std::size_t i = 1; i < n; ++i) acc += ip(i) * (i % 2 ? 4.0 : 2.0);
    const double integral = acc * step / 3.0;
    return constant * std::pow(integral, 2.0 * H);
}

double improper_wiener_second_moment(const Integrand& h, double t, double H,
                                     double rel_tol, std::size_t n_cells) {
    const double m = h.decay_rate;
    if (!(m > 0.0))
        throw NoDecayHint("improper integral needs a decay hint on " + h.name);
    const double C = h.decay_scale;

    // Second moment of the envelope's own improper integral: an exponential
    // integrand e^{m u} over (-inf, 0] has second moment m^{-2H} H Gamma(2H).
    const double envelope_var = std::pow(m, -2.0 * H) * H * std::tgamma(2.0 * H);

    const double head = std::min(t, 0.0);
    double window = std::max(10.0 * H / m, 4.0 / m);
    double coarse = windowed_second_moment(h, head - window, t, H,
                                           std::min<std::size_t>(n_cells, 2048), false);
    if (coarse > 0.0) {
        // Cross-term bound: relative error <= 2 |tail| / |head-part| with
        // |tail|^2 <= C^2 e^{2 m a} envelope_var at truncation point a.
        const double target = 0.25 * rel_tol * std::sqrt(coarse) / (C * std::sqrt(envelope_var));
        if (target < 1.0) window = std::max(window, -std::log(target) / m);
    }

    double a = head - window;
    double prev = windowed_second_moment(h, a, t, H, n_cells, false);
    for (int round = 0; round < 3; ++round) {
        const double a2 = head - 2.0 * (head - a);
        const std::size_t cells = std::min<std::size_t>(2 * n_cells, 16384);
        const double next = windowed_second_moment(h, a2, t, H, cells, false);
        const double scale = std::max(std::abs(next), 1e-300);
        if (std::abs(next - prev) <= std::max(rel_tol, 1e-12) * scale) return next;
        a = a2;
        prev = next;
    }
    throw QuadratureDiverged("improper integral failed to stabilise under window doubling for " + h.name);
}

IsometryReport wiener_integral_mc(const FbmEnsemble& ensemble, const Integrand& h,
                                  double t_lo, double t_hi, std::size_t n_quad_cells) {
    if (ensemble.dim != 1)
        throw DimensionUnsupported("isometry check expects scalar driving noise");
    const TimeGrid& grid = ensemble.grid;
    const std::size_t a = grid.index_at(t_lo);
    const std::size_t b = grid.index_at(t_hi);
    if (b <= a) throw ConfigInvalid("isometry window is empty");

    const std::size_t reps = ensemble.replicates;
    std::vector<double> squares(reps);
    for (std::size_t r = 0; r < reps; ++r) {
        const double j = riemann_sum(h.f, ensemble.paths[r], grid, a, b);
        squares[r] = j * j;
    }

    IsometryReport rep;
    rep.empirical_second_moment = pairwise_mean(squares);
    rep.analytic_second_moment =
        wiener_second_moment(h, t_lo, t_hi, ensemble.H, n_quad_cells);
    rep.std_error = std::sqrt(pairwise_variance(squares) / static_cast<double>(reps));
    rep.z_score = (rep.empirical_second_moment - rep.analytic_second_moment) /
                  (rep.std_error > 0.0 ? rep.std_error : 1.0);
    rep.replicates = reps;
    rep.t_lo = t_lo;
    rep.t_hi = t_hi;
    rep.integrand = h.name;
    return rep;
}

} // namespace fbmtk
