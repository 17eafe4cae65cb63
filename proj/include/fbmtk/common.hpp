#pragma once
// Shared basics: error types, time grids, Hurst index validation and
// deterministic reduction / parallel-loop helpers used across the toolkit.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fbmtk {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define FBMTK_DEFINE_ERROR(NAME)                                   \
    class NAME : public Error {                                    \
    public:                                                        \
        explicit NAME(const std::string& msg) : Error(#NAME ": " + msg) {} \
    }

FBMTK_DEFINE_ERROR(CirculantNotPsd);
FBMTK_DEFINE_ERROR(TauOffGrid);
FBMTK_DEFINE_ERROR(ShiftOutOfRange);
FBMTK_DEFINE_ERROR(WindowOffGrid);
FBMTK_DEFINE_ERROR(QuadratureDiverged);
FBMTK_DEFINE_ERROR(NoDecayHint);
FBMTK_DEFINE_ERROR(StepDiverged);
FBMTK_DEFINE_ERROR(ContractionViolated);
FBMTK_DEFINE_ERROR(EmptyOverlap);
FBMTK_DEFINE_ERROR(HorizonExceedsGrid);
FBMTK_DEFINE_ERROR(DimensionUnsupported);
FBMTK_DEFINE_ERROR(KernelMismatch);
FBMTK_DEFINE_ERROR(DegenerateVt);
FBMTK_DEFINE_ERROR(NoConvergence);
FBMTK_DEFINE_ERROR(ConfigInvalid);

#undef FBMTK_DEFINE_ERROR

// Uniform grid t_k = (k - index_of_zero) * dt.  When the grid does not span
// t = 0 the origin offset is kept separately (signals may start anywhere).
class TimeGrid {
public:
    TimeGrid() = default;
    // Grid spanning zero: n_neg points before 0, n_pos after, t_0 exact.
    static TimeGrid two_sided(double dt, std::size_t n_neg, std::size_t n_pos);
    // Grid starting at an arbitrary origin (used for sampled signals).
    static TimeGrid from_origin(double origin, double dt, std::size_t n);

    double dt() const { return dt_; }
    std::size_t size() const { return n_; }
    long index_of_zero() const { return i0_; }
    bool spans_zero() const { return i0_ >= 0 && static_cast<std::size_t>(i0_) < n_; }

    double t(std::size_t k) const {
        if (i0_ >= 0) return (static_cast<double>(k) - static_cast<double>(i0_)) * dt_;
        return origin_ + static_cast<double>(k) * dt_;
    }
    double t_start() const { return t(0); }
    double t_end() const { return t(n_ - 1); }
    double span() const { return t_end() - t_start(); }

    // Number of grid steps equivalent to tau; TauOffGrid unless tau is a
    // whole multiple of dt within a 1e-9 absolute-relative tolerance.
    long steps_for(double tau) const;
    // Index holding time value t; WindowOffGrid if t is off the grid.
    std::size_t index_at(double time) const;

    bool operator==(const TimeGrid& o) const {
        return dt_ == o.dt_ && n_ == o.n_ && i0_ == o.i0_ && origin_ == o.origin_;
    }

private:
    double dt_ = 0.0;
    std::size_t n_ = 0;
    long i0_ = -1;       // index of t = 0, or -1 when not spanned
    double origin_ = 0.0; // used only when i0_ < 0
};

// Hurst index restricted to (1/2, 1).  H = 1/2 is accepted only when the
// caller explicitly opts into the Brownian reference mode used by
// cross-checks; the singular-kernel quadratures reject it regardless.
class HurstIndex {
public:
    explicit HurstIndex(double value, bool allow_brownian_reference = false);
    double value() const { return h_; }
    bool is_brownian_reference() const { return h_ == 0.5; }
    operator double() const { return h_; }

private:
    double h_;
};

// Fixed-order pairwise (cascade) summation.  Used for every cross-replicate
// reduction so results do not depend on thread scheduling.
double pairwise_sum(const double* data, std::size_t n);
double pairwise_sum(const std::vector<double>& v);
double pairwise_mean(const std::vector<double>& v);

// Sample variance (unbiased) with pairwise sums.
double pairwise_variance(const std::vector<double>& v);

// Chunked parallel loop over [0, n).  Each index must write only its own
// slots; with FBMTK_THREADS=1 (or a single hardware thread) it runs inline.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

// Quantile of a copy of v (linear interpolation between order statistics).
double quantile(std::vector<double> v, double q);

inline double sqr(double x) { return x * x; }

} // namespace fbmtk
