#pragma once
// Wiener integrals of deterministic integrands against fBm with H > 1/2:
// pathwise left Riemann sums, the weighted-kernel second moment computed by
// an exact-cell singular quadrature, upper bounds via 1/H-norms, improper
// integrals over (-inf, t] with certified tail truncation, and a Monte Carlo
// isometry check against sampled ensembles.
//
// The quadrature rests on the identity
//   H(2H-1) * Int_{cell(i) x cell(j)} |u-v|^{2H-2} du dv
//     = gamma(i-j) * dt^{2H},
// where gamma is the fractional Gaussian noise autocovariance: the cell
// integral is a second difference of |x|^{2H} / (2H(2H-1)) in the lag, so
// the kernel mass per cell is exact and only the integrand is sampled
// (at cell midpoints).

#include <functional>
#include <string>
#include <vector>

#include "fbmtk/common.hpp"
#include "fbmtk/fbm.hpp"

namespace fbmtk {

struct Integrand {
    std::function<double(double)> f;
    std::string name;
    // decay_rate m > 0 declares |f(t)| <= decay_scale * e^{m t} for t <= 0;
    // decay_scale is fitted on a probe grid at registration.
    double decay_rate = 0.0;
    double decay_scale = 0.0;

    double operator()(double t) const { return f(t); }
};

Integrand make_integrand(std::function<double(double)> f, std::string name);
// Registers an exponential decay hint. The envelope constant is fitted as
// sup |f(t)| e^{-m t} over a probe grid on [-60/m, 0]; a non-finite or
// absurdly large fit rejects the hint.
Integrand make_decaying_integrand(std::function<double(double)> f, std::string name,
                                  double decay_rate);

// Exact kernel mass H(2H-1) * Int over a lag-k cell pair of |u-v|^{2H-2}.
double singular_cell_mass(long lag, double dt, double H);

// Left Riemann sum  sum_k y[k] (w[k+1] - w[k])  over indices [a, b).
double riemann_sum(const std::vector<double>& y, const std::vector<double>& w,
                   std::size_t a, std::size_t b);
double riemann_sum(const std::function<double(double)>& y,
                   const std::vector<double>& w, const TimeGrid& grid,
                   std::size_t a, std::size_t b);

// H(2H-1) * IntInt_{[s,t]^2} h(u) h(v) |u-v|^{2H-2} du dv  by exact-cell
// quadrature with h sampled at the n_cells midpoints.  Equals E(J^2) for the
// Wiener integral J of h over [s, t].
double wiener_second_moment(const Integrand& h, double s, double t, double H,
                            std::size_t n_cells = 2048);

// Kernel mass of the rectified integrand: the same double integral taken
// with |h(u)| |h(v)|.  Degree-2 homogeneous in h and an upper bound for
// wiener_second_moment.
double hnorm(const Integrand& h, double s, double t, double H,
             std::size_t n_cells = 2048);

// Upper bound c * ( Int_s^t |h(u)|^{1/H} du )^{2H}.  The constant is caller
// supplied; the default 1 covers the scalar diagnostics used in tests.
double memin_bound(const Integrand& h, double s, double t, double H,
                   double constant = 1.0, std::size_t n_points = 4096);

// Second moment of the improper integral over (-inf, t].  Requires a decay
// hint; the truncation point is chosen from the exponential-envelope tail
// bound so the neglected relative mass stays below rel_tol.
double improper_wiener_second_moment(const Integrand& h, double t, double H,
                                     double rel_tol = 1e-6,
                                     std::size_t n_cells = 8192);

struct IsometryReport {
    double empirical_second_moment = 0.0;
    double analytic_second_moment = 0.0;
    double std_error = 0.0; // Monte Carlo standard error of the empirical mean
    double z_score = 0.0;
    std::size_t replicates = 0;
    double t_lo = 0.0;
    double t_hi = 0.0;
    std::string integrand;
};

// Monte Carlo isometry check: mean of squared pathwise Riemann sums against
// the analytic second moment.  Scalar driving noise only.
IsometryReport wiener_integral_mc(const FbmEnsemble& ensemble, const Integrand& h,
                                  double t_lo, double t_hi,
                                  std::size_t n_quad_cells = 2048);

} // namespace fbmtk
