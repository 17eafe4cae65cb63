#pragma once
// Least-squares estimation of the drift strength theta from sampled paths.
// V_T is the time-averaged squared divergence (X - b0(.,X))^2, U_T the
// normalized Skorokhod noise functional, and theta_hat = theta - U_T/V_T
// the proof identity behind the oracle mode.  The fixed-point mode solves
// the same defining ratio from data alone: the numerator's trace correction
// depends on the unknown theta through the first-variation kernel, so the
// estimate is iterated to a fixed point.  Birkhoff and almost-periodic mean
// values feed the ergodic consistency experiments.

#include <cstddef>
#include <functional>
#include <vector>

#include "fbmtk/common.hpp"
#include "fbmtk/sde.hpp"
#include "fbmtk/skorokhod.hpp"

namespace fbmtk {

enum class EstimatorMode { OracleDecomposition, FixedPoint };

struct EstimatorResult {
    double theta_hat = 0.0;
    // Noise functional (1/T) int (X - b0) sigma dB.  In fixed-point mode it
    // is the value implied by the final iterate.
    double u_T = 0.0;
    double v_T = 0.0; // trapezoid time average of (X - b0)^2, > 0
    double horizon_T = 0.0;
    EstimatorMode mode = EstimatorMode::OracleDecomposition;
    int fixed_point_iterations = 0; // 0 in oracle mode
    bool converged = true;
};

// Per-replicate trapezoid time average of (X - b0(.,X))^2 over [0, T].
// Coefficients follow the ensemble's accumulated clock shift.
std::vector<double> v_T(const PathEnsemble& paths, double T);

// Per-replicate (1/T) Skorokhod integral of (X - b0(.,X)) sigma dB over
// [0, T] with the first-variation kernel built at theta_true.  Scalar
// ensembles only.
std::vector<double> u_T(const PathEnsemble& paths, double theta_true,
                        double T);

// theta_true - u_T/v_T per replicate (validation mode; needs the simulated
// truth).  DegenerateVt when any replicate's v_T falls below 1e-12.
std::vector<EstimatorResult> estimate_oracle(const PathEnsemble& paths,
                                             double theta_true, double T);

// Data-only mode: no theta_true anywhere.  Iterates
//   theta_{k+1} = G(-(young((X-b0), X) - trace(theta_k)) / int (X-b0)^2 ds)
// per replicate, where the Young part integrates against the observed state
// path, trace(theta) is the kernel-weighted correction of skorokhod_integral
// at the current iterate, and G inverts the integrator's one-step map
// (G(r) = -log(1 - r dt)/dt) so a noise-free path returns theta exactly at
// any step size.  Stops when successive iterates differ by less than tol;
// hitting max_iter leaves converged = false with the last iterate.  A NaN
// theta_init starts from the trace-free value.
std::vector<EstimatorResult> estimate_fixed_point(const PathEnsemble& paths,
                                                  double theta_init, double T,
                                                  int max_iter = 50,
                                                  double tol = 1e-8);

struct BirkhoffSeries {
    std::vector<double> horizons;
    std::vector<std::vector<double>> per_replicate; // [horizon][replicate]
    std::vector<double> mean;
    std::vector<double> variance; // unbiased, across replicates
};

// Per-replicate running averages (1/t) int_0^t Y(s) ds of the pathwise
// functional Y(s) = f(s, X(s)) at each horizon (strictly increasing, all on
// the grid).  f is evaluated on the coefficient clock t + coeff_shift.
BirkhoffSeries birkhoff_average(
    const PathEnsemble& paths,
    const std::function<double(double, double)>& f,
    const std::vector<double>& horizons);

struct MeanValueEstimate {
    std::vector<double> horizons;
    std::vector<double> values; // ensemble-mean Birkhoff average per horizon
    double mean_value = 0.0;    // value at the longest horizon
    // Energy sum_j |M(m_Y e^{-i lambda_j .})|^2 over the scanned spectrum of
    // the estimated mean function; positive when the mean function does not
    // vanish identically.
    double spectral_energy = 0.0;
};

// Long-horizon mean value of the ensemble-mean function m_Y(t) = E(Y(t))
// together with the spectral positivity diagnostic.
MeanValueEstimate mean_value_ap(
    const PathEnsemble& paths,
    const std::function<double(double, double)>& f,
    const std::vector<double>& horizons);

struct ConsistencySeries {
    double theta_true = 0.0;
    std::vector<double> horizons; // strictly increasing
    std::vector<double> median_theta_hat;
    std::vector<double> iq_spread;        // 75% - 25% quantile of theta_hat
    std::vector<double> median_abs_error; // median |theta_hat - theta_true|
    std::vector<double> mean_u_sq;
    std::vector<double> mean_v;
    double u_sq_slope = 0.0; // least-squares slope of log mean_u_sq vs log T
};

// Oracle-mode estimates over nested windows of one simulated ensemble (the
// windows share every path prefix, which couples the horizons the way the
// theory expects).
ConsistencySeries consistency_experiment(const PathEnsemble& paths,
                                         double theta_true,
                                         const std::vector<double>& horizons);

} // namespace fbmtk
