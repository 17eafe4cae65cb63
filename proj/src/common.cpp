#include "fbmtk/common.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace fbmtk {

TimeGrid TimeGrid::two_sided(double dt, std::size_t n_neg, std::size_t n_pos) {
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw ConfigInvalid("grid dt must be positive and finite");
    TimeGrid g;
    g.dt_ = dt;
    g.n_ = n_neg + n_pos + 1;
    g.i0_ = static_cast<long>(n_neg);
    g.origin_ = -static_cast<double>(n_neg) * dt;
    return g;
}

TimeGrid TimeGrid::from_origin(double origin, double dt, std::size_t n) {
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw ConfigInvalid("grid dt must be positive and finite");
    if (n < 2) throw ConfigInvalid("grid needs at least two points");
    TimeGrid g;
    g.dt_ = dt;
    g.n_ = n;
    g.origin_ = origin;
    // Adopt an exact zero index when the origin is a whole step below 0.
    double k = -origin / dt;
    double kr = std::round(k);
    if (kr >= 0.0 && kr < static_cast<double>(n) &&
        std::abs(k - kr) <= 1e-9 * std::max(1.0, std::abs(k))) {
        g.i0_ = static_cast<long>(kr);
        g.origin_ = -kr * dt;
    } else {
        g.i0_ = -1;
    }
    return g;
}

long TimeGrid::steps_for(double tau) const {
    double m = tau / dt_;
    double mr = std::round(m);
    if (std::abs(m - mr) > 1e-9 * std::max(1.0, std::abs(m)))
        throw TauOffGrid("tau = " + std::to_string(tau) +
                         " is not a whole number of grid steps (dt = " +
                         std::to_string(dt_) + ")");
    return static_cast<long>(mr);
}

std::size_t TimeGrid::index_at(double time) const {
    double k = (time - t_start()) / dt_;
    double kr = std::round(k);
    if (std::abs(k - kr) > 1e-9 * std::max(1.0, std::abs(k)) || kr < 0.0 ||
        kr >= static_cast<double>(n_))
        throw WindowOffGrid("time " + std::to_string(time) + " is not on the grid");
    return static_cast<std::size_t>(kr);
}

HurstIndex::HurstIndex(double value, bool allow_brownian_reference) : h_(value) {
    bool ok = (value > 0.5 && value < 1.0) ||
              (allow_brownian_reference && value == 0.5);
    if (!ok)
        throw std::invalid_argument(
            "Hurst index must lie in (1/2, 1); H = 1/2 requires the explicit "
            "Brownian reference flag");
}

double pairwise_sum(const double* data, std::size_t n) {
    if (n == 0) return 0.0;
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += data[i];
        return s;
    }
    std::size_t half = n / 2;
    return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}

double pairwise_sum(const std::vector<double>& v) {
    return pairwise_sum(v.data(), v.size());
}

double pairwise_mean(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    return pairwise_sum(v) / static_cast<double>(v.size());
}

double pairwise_variance(const std::vector<double>& v) {
    std::size_t n = v.size();
    if (n < 2) return 0.0;
    double m = pairwise_mean(v);
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = sqr(v[i] - m);
    return pairwise_sum(d) / static_cast<double>(n - 1);
}

namespace {

unsigned thread_budget() {
    if (const char* env = std::getenv("FBMTK_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

} // namespace

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
    unsigned workers = thread_budget();
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    workers = std::min<std::size_t>(workers, n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            // Static partition: replicate i belongs to thread i % workers.
            for (std::size_t i = w; i < n; i += workers) body(i);
        });
    }
    for (auto& th : pool) th.join();
}

double quantile(std::vector<double> v, double q) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    if (q <= 0.0) return v.front();
    if (q >= 1.0) return v.back();
    double pos = q * static_cast<double>(v.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= v.size()) return v.back();
    return v[lo] * (1.0 - frac) + v[lo + 1] * frac;
}

} // namespace fbmtk
