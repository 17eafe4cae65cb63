#pragma once

// Almost-periodicity toolkit: Bohr means and coefficients of sampled
// signals, frequency-spectrum recovery, epsilon-almost-period scans, and
// the two path-ensemble deviation diagnostics (measure-shifted vs plain).
//
// Conventions, fixed project-wide:
//   - bohr_coefficient(f, lambda) = M(f(t) e^{+i lambda t}), M the Bohr
//     mean over [0, horizon] by trapezoid rule.
//   - Suprema over time are evaluated on the finite sample grid; finite
//     horizons carry an O(1/horizon) bias which tolerances must absorb.
//   - Spectrum lines closer than a few main-lobe widths (2*pi/horizon)
//     are not resolved; the scan keeps the strongest of such a cluster.

#include <complex>
#include <functional>
#include <vector>

#include "fbmtk/common.hpp"
#include "fbmtk/sde.hpp"

namespace fbmtk {

struct SampledSignal {
    TimeGrid grid;
    std::vector<std::complex<double>> values;
};

SampledSignal make_signal(const TimeGrid& grid,
                          const std::function<double(double)>& f);
SampledSignal make_signal(const TimeGrid& grid, const std::vector<double>& values);

// Accepted translation candidates for one epsilon level.
struct APReport {
    double epsilon = 0.0;
    std::vector<double> candidate_periods; // sorted ascending
    double max_gap = 0.0;            // widest gap between consecutive candidates
    double relatively_dense_at_l = 0.0; // smallest window length covering every gap
    double scan_lo = 0.0;
    double scan_hi = 0.0;
};

struct SpectrumEstimate {
    std::vector<double> frequencies;
    std::vector<std::complex<double>> coefficients;
    double parseval_defect = 0.0; // M(|f|^2) - sum |c|^2, >= -tolerance
};

// Mean value (1/horizon) * integral_0^horizon f, trapezoid on the sample
// grid. Requires 0 and horizon to be grid points.
std::complex<double> bohr_mean(const SampledSignal& f, double horizon);

std::complex<double> bohr_coefficient(const SampledSignal& f, double lambda,
                                      double horizon);

// Scans lambda_grid, keeps |c| > amplitude_threshold, sharpens each kept
// frequency by golden-section maximization of |c| within its grid cell,
// and drops sidelobe duplicates closer than min_separation to a stronger
// line. Non-positive threshold selects 0.05 * sqrt(M(|f|^2)); non-positive
// min_separation selects 3 * (2*pi) / horizon.
SpectrumEstimate spectrum_scan(const SampledSignal& f,
                               const std::vector<double>& lambda_grid,
                               double amplitude_threshold, double horizon,
                               double min_separation = 0.0);

// Accepts every tau in tau_grid with sup_t |f(t+tau) - f(t)| <= epsilon,
// the sup taken over the overlap of the grid with its translate.
APReport epsilon_almost_periods(const SampledSignal& f, double epsilon,
                                const std::vector<double>& tau_grid);

// Max over probe times of the empirical L2 distance between the
// measure-shifted translate of the ensemble and the ensemble itself:
//   max_t sqrt( mean_r |(T_tau X)(t, r) - X(t, r)|^2 ).
double theta_ap_deviation(const PathEnsemble& base, double tau,
                          const std::vector<double>& probe_times);

// Same-path diagnostic, no measure shift:
//   max_t sqrt( mean_r |X(t + tau, r) - X(t, r)|^2 ).
double plain_ap_deviation(const PathEnsemble& base, double tau,
                          const std::vector<double>& probe_times);

} // namespace fbmtk
