#pragma once
// Fractional Brownian motion engine: two-sided path ensembles via circulant
// embedding of the fractional Gaussian noise autocovariance (FFT synthesis)
// with an exact Cholesky fallback, plus the measure-shift helpers built on
// the increment identity B(t + tau, shifted omega) = B(t) - B(-tau).

#include <complex>
#include <cstdint>
#include <vector>

#include "fbmtk/common.hpp"

namespace fbmtk {

// Autocovariance of unit-spacing fractional Gaussian noise at integer lag k:
//   gamma(k) = 1/2 (|k+1|^{2H} - 2|k|^{2H} + |k-1|^{2H}).
double fgn_autocovariance(long k, double H);

// Covariance of fBm: 1/2 (|s|^{2H} + |t|^{2H} - |t-s|^{2H}).
double fbm_covariance(double s, double t, double H);

enum class FbmMethod { Auto, Circulant, Cholesky };

struct FbmOptions {
    TimeGrid grid;                 // must span t = 0
    double H = 0.7;
    bool brownian_reference = false; // opt-in for H = 1/2 cross-checks
    std::size_t replicates = 1;
    // Streams are keyed by replicate_offset + local index, so an ensemble can
    // be produced in chunks without changing any draw.
    std::size_t replicate_offset = 0;
    int dim = 1;
    std::uint64_t seed = 1;
    FbmMethod method = FbmMethod::Auto;
    // Circulant eigenvalues in [-clamp_tol * max_eig, 0) are clamped to 0;
    // anything lower triggers the Cholesky fallback.
    double clamp_tol = 1e-8;
};

struct FbmEnsemble {
    TimeGrid grid;
    double H = 0.7;
    int dim = 1;
    std::size_t replicates = 0;
    std::size_t replicate_offset = 0;
    std::uint64_t seed = 0;
    FbmMethod method_used = FbmMethod::Circulant;
    // paths[rep][k * dim + j]; B is anchored so the value at t = 0 is +0.0.
    std::vector<std::vector<double>> paths;

    double value(std::size_t rep, std::size_t k, int j = 0) const {
        return paths[rep][k * static_cast<std::size_t>(dim) + j];
    }
    double increment(std::size_t rep, std::size_t k, int j = 0) const {
        return value(rep, k + 1, j) - value(rep, k, j);
    }
};

// Draw an ensemble of independent two-sided fBm paths.  Components of a
// d-dimensional path are independent, each from its own keyed stream.
FbmEnsemble sample_ensemble(const FbmOptions& options);

// Validate a circulant spectrum against the clamp rule.  Returns the
// (possibly clamped) eigenvalues; throws CirculantNotPsd when any eigenvalue
// sits below -clamp_tol * max_eig.  Exposed for direct testing.
std::vector<double> clamp_circulant_spectrum(std::vector<double> eigenvalues,
                                             double clamp_tol);

// Path of the time-shifted driving noise evaluated on the original grid:
//   W(t) = B(t + tau, theta_{-tau} omega) = B(t, omega) - B(-tau, omega).
// Requires tau grid-aligned and -tau on the grid (ShiftOutOfRange otherwise).
std::vector<double> wiener_shift_path(const FbmEnsemble& ensemble, double tau,
                                      std::size_t replicate, int component = 0);

// A Wiener shift is represented by its whole number of grid steps; composing
// two shifts adds step counts, which is what makes the group property exact.
struct WienerShift {
    long steps = 0;
};
WienerShift make_shift(const TimeGrid& grid, double s);
inline WienerShift compose(WienerShift a, WienerShift b) {
    return WienerShift{a.steps + b.steps};
}

// Materialised Wiener shift of the underlying path: omega'(u) = B(u + s) - B(s)
// for all u with u + s on the grid.  Returned on the sub-grid where defined,
// together with the index offset into the original grid.
struct ShiftedPath {
    TimeGrid grid;       // grid of the shifted path (same dt)
    long offset = 0;     // original index = shifted-storage index + offset
    std::vector<double> values;

    double at_time(double u) const { return values[grid.index_at(u)]; }
};
ShiftedPath materialize_shift(const FbmEnsemble& ensemble, WienerShift shift,
                              std::size_t replicate, int component = 0);
ShiftedPath apply_wiener_shift(const FbmEnsemble& ensemble, double s,
                               std::size_t replicate, int component = 0);

} // namespace fbmtk
