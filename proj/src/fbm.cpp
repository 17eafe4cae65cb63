#include "fbmtk/fbm.hpp"

#include <fftw3.h>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>

#include "fbmtk/rng.hpp"

namespace fbmtk {

double fgn_autocovariance(long k, double H) {
    double a = std::abs(static_cast<double>(k));
    double e = 2.0 * H;
    return 0.5 * (std::pow(a + 1.0, e) - 2.0 * std::pow(a, e) +
                  std::pow(std::abs(a - 1.0), e));
}

double fbm_covariance(double s, double t, double H) {
    double e = 2.0 * H;
    return 0.5 * (std::pow(std::abs(s), e) + std::pow(std::abs(t), e) -
                  std::pow(std::abs(t - s), e));
}

std::vector<double> clamp_circulant_spectrum(std::vector<double> eigenvalues,
                                             double clamp_tol) {
    double max_eig = 0.0;
    for (double v : eigenvalues) max_eig = std::max(max_eig, v);
    if (!(max_eig > 0.0))
        throw CirculantNotPsd("circulant spectrum has no positive mass");
    double floor = -clamp_tol * max_eig;
    for (double& v : eigenvalues) {
        if (v < floor)
            throw CirculantNotPsd("eigenvalue " + std::to_string(v) +
                                  " below clamp floor " + std::to_string(floor));
        if (v < 0.0) v = 0.0;
    }
    return eigenvalues;
}

namespace {

std::mutex& fftw_plan_mutex() {
    static std::mutex m;
    return m;
}

// One forward complex FFT of size m.  Plans are created under a lock with
// FFTW_ESTIMATE so results depend only on the input, never on timing.
class ForwardFft {
public:
    explicit ForwardFft(std::size_t m) : m_(m) {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex());
        buf_ = fftw_alloc_complex(m);
        plan_ = fftw_plan_dft_1d(static_cast<int>(m),
                                 buf_, buf_, FFTW_FORWARD,
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
    }
    ~ForwardFft() {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex());
        fftw_destroy_plan(plan_);
        fftw_free(buf_);
    }
    ForwardFft(const ForwardFft&) = delete;
    ForwardFft& operator=(const ForwardFft&) = delete;

    // Thread-safe new-array execution on caller-owned storage.
    void run(std::complex<double>* data) const {
        fftw_execute_dft(plan_, reinterpret_cast<fftw_complex*>(data),
                         reinterpret_cast<fftw_complex*>(data));
    }

    std::size_t size() const { return m_; }

private:
    std::size_t m_;
    fftw_complex* buf_;
    fftw_plan plan_;
};

constexpr std::size_t kCholeskyMaxSteps = 4096;

void cumulate_and_anchor(const std::vector<double>& increments, double scale,
                         std::size_t n_points, std::size_t i0, int dim, int j,
                         std::vector<double>& out) {
    double acc = 0.0;
    out[static_cast<std::size_t>(j)] = 0.0;
    for (std::size_t k = 0; k + 1 < n_points; ++k) {
        acc += scale * increments[k];
        out[(k + 1) * static_cast<std::size_t>(dim) + static_cast<std::size_t>(j)] = acc;
    }
    double anchor = out[i0 * static_cast<std::size_t>(dim) + static_cast<std::size_t>(j)];
    for (std::size_t k = 0; k < n_points; ++k)
        out[k * static_cast<std::size_t>(dim) + static_cast<std::size_t>(j)] -= anchor;
}

} // namespace

FbmEnsemble sample_ensemble(const FbmOptions& options) {
    const TimeGrid& grid = options.grid;
    if (grid.size() < 2) throw ConfigInvalid("fBm grid needs at least two points");
    if (!grid.spans_zero())
        throw ConfigInvalid("fBm grid must span t = 0 so paths can be anchored");
    if (options.dim < 1) throw DimensionUnsupported("dim must be >= 1");
    HurstIndex H(options.H, options.brownian_reference);

    const std::size_t n_points = grid.size();
    const std::size_t n_inc = n_points - 1;
    const std::size_t i0 = static_cast<std::size_t>(grid.index_of_zero());
    const double scale = std::pow(grid.dt(), H.value());
    const int dim = options.dim;

    FbmEnsemble ens;
    ens.grid = grid;
    ens.H = H.value();
    ens.dim = dim;
    ens.replicates = options.replicates;
    ens.replicate_offset = options.replicate_offset;
    ens.seed = options.seed;
    ens.paths.assign(options.replicates,
                     std::vector<double>(n_points * static_cast<std::size_t>(dim)));

    bool use_circulant = options.method != FbmMethod::Cholesky;
    std::vector<double> sqrt_eig;
    std::unique_ptr<ForwardFft> fft;

    if (use_circulant) {
        const std::size_t m = 2 * n_inc;
        fft = std::make_unique<ForwardFft>(m);
        std::vector<std::complex<double>> c(m);
        for (std::size_t j = 0; j < m; ++j) {
            std::size_t lag = std::min(j, m - j);
            c[j] = fgn_autocovariance(static_cast<long>(lag), H.value());
        }
        fft->run(c.data());
        std::vector<double> eig(m);
        for (std::size_t j = 0; j < m; ++j) eig[j] = c[j].real();
        try {
            eig = clamp_circulant_spectrum(std::move(eig), options.clamp_tol);
        } catch (const CirculantNotPsd&) {
            if (options.method == FbmMethod::Circulant) throw;
            use_circulant = false;
        }
        if (use_circulant) {
            sqrt_eig.resize(m);
            for (std::size_t j = 0; j < m; ++j) sqrt_eig[j] = std::sqrt(eig[j]);
        }
    }

    if (use_circulant) {
        const std::size_t m = 2 * n_inc;
        const double inv_root_m = 1.0 / std::sqrt(static_cast<double>(m));
        const double inv_root_2 = 1.0 / std::sqrt(2.0);
        parallel_for(options.replicates, [&](std::size_t rep) {
            thread_local std::vector<std::complex<double>> v;
            thread_local std::vector<double> inc;
            v.assign(m, {0.0, 0.0});
            inc.resize(n_inc);
            for (int j = 0; j < dim; ++j) {
                NormalStream stream(options.seed, rep + options.replicate_offset,
                                    static_cast<std::uint64_t>(j));
                // Draw order is fixed: mean mode, paired modes, Nyquist mode.
                v[0] = sqrt_eig[0] * stream.normal();
                for (std::size_t q = 1; q < n_inc; ++q) {
                    double a = stream.normal();
                    double b = stream.normal();
                    std::complex<double> z(a * inv_root_2, b * inv_root_2);
                    v[q] = sqrt_eig[q] * z;
                    v[m - q] = std::conj(v[q]);
                }
                v[n_inc] = sqrt_eig[n_inc] * stream.normal();
                fft->run(v.data());
                for (std::size_t k = 0; k < n_inc; ++k)
                    inc[k] = v[k].real() * inv_root_m;
                cumulate_and_anchor(inc, scale, n_points, i0, dim, j,
                                    ens.paths[rep]);
            }
        });
        ens.method_used = FbmMethod::Circulant;
        return ens;
    }

    // Exact dense fallback; memory is O(n^2), so it is capped.
    if (n_inc > kCholeskyMaxSteps)
        throw CirculantNotPsd(
            "circulant embedding rejected and the grid exceeds the dense "
            "Cholesky cap of " + std::to_string(kCholeskyMaxSteps) + " steps");
    Eigen::MatrixXd cov(n_inc, n_inc);
    for (std::size_t r = 0; r < n_inc; ++r)
        for (std::size_t c = 0; c < n_inc; ++c)
            cov(r, c) = fgn_autocovariance(
                static_cast<long>(r) - static_cast<long>(c), H.value());
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
        throw CirculantNotPsd("dense noise covariance is not positive definite");
    Eigen::MatrixXd L = llt.matrixL();

    parallel_for(options.replicates, [&](std::size_t rep) {
        thread_local std::vector<double> z;
        thread_local std::vector<double> inc;
        z.resize(n_inc);
        inc.resize(n_inc);
        for (int j = 0; j < dim; ++j) {
            NormalStream stream(options.seed, rep + options.replicate_offset,
                                    static_cast<std::uint64_t>(j));
            for (std::size_t k = 0; k < n_inc; ++k) z[k] = stream.normal();
            for (std::size_t r = 0; r < n_inc; ++r) {
                double acc = 0.0;
                for (std::size_t c = 0; c <= r; ++c) acc += L(r, c) * z[c];
                inc[r] = acc;
            }
            cumulate_and_anchor(inc, scale, n_points, i0, dim, j, ens.paths[rep]);
        }
    });
    ens.method_used = FbmMethod::Cholesky;
    return ens;
}

WienerShift make_shift(const TimeGrid& grid, double s) {
    return WienerShift{grid.steps_for(s)};
}

std::vector<double> wiener_shift_path(const FbmEnsemble& ensemble, double tau,
                                      std::size_t replicate, int component) {
    const TimeGrid& grid = ensemble.grid;
    long steps = grid.steps_for(tau);
    long anchor = grid.index_of_zero() - steps; // index of -tau
    if (anchor < 0 || anchor >= static_cast<long>(grid.size()))
        throw ShiftOutOfRange("-tau = " + std::to_string(-tau) +
                              " falls outside the sampled grid");
    const auto& path = ensemble.paths[replicate];
    const std::size_t d = static_cast<std::size_t>(ensemble.dim);
    const double b_anchor =
        path[static_cast<std::size_t>(anchor) * d + static_cast<std::size_t>(component)];
    std::vector<double> out(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k)
        out[k] = path[k * d + static_cast<std::size_t>(component)] - b_anchor;
    return out;
}

ShiftedPath materialize_shift(const FbmEnsemble& ensemble, WienerShift shift,
                              std::size_t replicate, int component) {
    const TimeGrid& grid = ensemble.grid;
    const long n = static_cast<long>(grid.size());
    const long steps = shift.steps;
    long anchor = grid.index_of_zero() + steps; // index of time s
    if (anchor < 0 || anchor >= n)
        throw ShiftOutOfRange("shift time falls outside the sampled grid");
    long a = std::max<long>(0, -steps);
    long b = std::min<long>(n, n - steps); // exclusive
    if (b <= a) throw ShiftOutOfRange("shift leaves no overlap with the grid");
    const auto& path = ensemble.paths[replicate];
    const std::size_t d = static_cast<std::size_t>(ensemble.dim);
    const double b_anchor =
        path[static_cast<std::size_t>(anchor) * d + static_cast<std::size_t>(component)];

    ShiftedPath out;
    out.offset = a;
    out.grid = TimeGrid::from_origin(grid.t(static_cast<std::size_t>(a)), grid.dt(),
                                     static_cast<std::size_t>(b - a));
    out.values.resize(static_cast<std::size_t>(b - a));
    for (long q = a; q < b; ++q)
        out.values[static_cast<std::size_t>(q - a)] =
            path[static_cast<std::size_t>(q + steps) * d +
                 static_cast<std::size_t>(component)] - b_anchor;
    return out;
}

ShiftedPath apply_wiener_shift(const FbmEnsemble& ensemble, double s,
                               std::size_t replicate, int component) {
    return materialize_shift(ensemble, make_shift(ensemble.grid, s), replicate,
                             component);
}

} // namespace fbmtk
