#pragma once
// Semilinear SDE integration: dX = (AX + b(t,X))dt + sigma(t)dB driven by
// sampled fBm paths.  The stepper is exponential Euler (exact linear flow),
// which is exact for the Ornstein-Uhlenbeck case and respects the semigroup
// envelope by construction.  Two-sided solutions are approximated by burn-in
// from a distant start, and translate_solution implements the process
// translation (time-shifted coefficients against the measure-shifted driving
// path) used by the almost-periodicity diagnostics.

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "fbmtk/common.hpp"
#include "fbmtk/fbm.hpp"

namespace fbmtk {

enum class Periodicity { AlmostPeriodic, Periodic, Autonomous };

struct SemilinearModel {
    int dim = 1;
    Eigen::MatrixXd A;
    std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)> b;
    std::function<Eigen::MatrixXd(double)> sigma;
    // envelope ||e^{At}||_op <= c_S e^{-m_S t}
    double c_S = 1.0;
    double m_S = 1.0;
    // ||b(t,x)-b(t,y)|| <= c_b ||x-y||,  ||b(t,x)|| <= m_b (1 + ||x||)
    double c_b = 0.0;
    double m_b = 0.0;
    Periodicity periodicity = Periodicity::AlmostPeriodic;
    double period = 0.0; // meaningful when periodicity == Periodic
    std::string name;
};

// Scalar estimation model dX = -theta (X - b0(t,X)) dt + sigma dB with the
// slope box -m_upper <= d/dx b0 <= 1 - m_lower.
struct DriftSpec {
    double theta = 1.0;
    std::function<double(double, double)> b0;
    std::function<double(double, double)> db0_dx; // analytic slope
    double m_lower = 0.0;
    double m_upper = 0.0;
    double sigma = 1.0;
    Periodicity periodicity = Periodicity::AlmostPeriodic;
    double period = 0.0;
    std::string name;
};

// c_S c_b / m_S; long-horizon constructions refuse ratios >= 1.
double contraction_ratio(const SemilinearModel& model);
// For the drift form the theta factors cancel: max(1 - m_lower, m_upper).
double contraction_ratio(const DriftSpec& drift);

SemilinearModel to_semilinear(const DriftSpec& drift);

// Catalog lookup: example1..example4, fou.  Throws ConfigInvalid on unknown
// names.
DriftSpec catalog_drift(const std::string& name, double theta = 1.0,
                        double sigma = 1.0);
std::vector<std::string> catalog_names();

// Probe-based verification of the model assumptions (fixed-seed randomized
// probes; analytic checks are out of reach for arbitrary drifts).
struct AssumptionReport {
    bool semigroup_ok = false;   // envelope on t in [0, 50/m_S]
    bool lipschitz_ok = false;   // c_b on probe pairs
    bool growth_ok = false;      // m_b linear growth
    bool sigma_bounded = false;  // finite sup on the probe grid
    double sigma_sup = 0.0;
    bool slope_ok = true;        // drift slope box (DriftSpec only)
    bool all() const {
        return semigroup_ok && lipschitz_ok && growth_ok && sigma_bounded && slope_ok;
    }
};
AssumptionReport verify_assumptions(const SemilinearModel& model,
                                    std::uint64_t probe_seed = 20240817,
                                    std::size_t probes = 10000);
AssumptionReport verify_assumptions(const DriftSpec& drift,
                                    std::uint64_t probe_seed = 20240817,
                                    std::size_t probes = 10000);

struct PathEnsemble {
    TimeGrid grid; // full integration grid, including any burn-in prefix
    int dim = 1;
    std::size_t replicates = 0;
    double burn_in = 0.0; // T0 >= 0; estimation windows start at t = 0
    std::vector<std::vector<double>> states; // [rep][k * dim + j]
    Eigen::VectorXd x_init; // state at grid.t_start()
    // Coefficients were evaluated at t + coeff_shift (accumulated by
    // translate_solution); consumers evaluating b or sigma along the path
    // must apply the same shift.
    double coeff_shift = 0.0;
    std::shared_ptr<const SemilinearModel> model;
    std::shared_ptr<const DriftSpec> drift; // set when built from a DriftSpec
    std::shared_ptr<const FbmEnsemble> driving;

    double state(std::size_t rep, std::size_t k, int j = 0) const {
        return states[rep][k * static_cast<std::size_t>(dim) + j];
    }
};

// Integrate over the driving ensemble's full grid from x_init at t_start.
PathEnsemble integrate(const SemilinearModel& model,
                       std::shared_ptr<const FbmEnsemble> driving,
                       const Eigen::VectorXd& x_init);
PathEnsemble integrate(const DriftSpec& drift,
                       std::shared_ptr<const FbmEnsemble> driving,
                       double x_init = 0.0);

struct TwoSidedOptions {
    double T = 10.0;    // estimation horizon; grid covers [-T0, T]
    double dt = 0.05;
    double burn_in_multiplier = 40.0; // T0 = multiplier / m_S
    std::size_t replicates = 1;
    std::uint64_t seed = 1;
    double H = 0.7;
    bool brownian_reference = false;
};

// Burn-in approximation of the unique bounded two-sided solution: start at
// X(-T0) = 0 and integrate forward; the restriction to [0, T] carries an
// O(e^{-m_S (1-ratio) T0}) bias.  Requires contraction_ratio < 1.
PathEnsemble integrate_two_sided(const SemilinearModel& model,
                                 const TwoSidedOptions& options);
PathEnsemble integrate_two_sided(const DriftSpec& drift,
                                 const TwoSidedOptions& options);

// The translated process evaluated on the same grid: coefficients shifted to
// t + tau, driven by the measure-shifted path.  At the increment level the
// shifted driving increments coincide with the original ones, so the result
// is exactly reproducible and replicate pairing is preserved.
PathEnsemble translate_solution(const PathEnsemble& ensemble, double tau);

} // namespace fbmtk
