#include "fbmtk/ap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fbmtk {

namespace {

constexpr double kTwoPi = 6.283185307179586;
constexpr double kInvGolden = 0.6180339887498949;

void require_signal(const SampledSignal& f) {
    if (f.values.size() != f.grid.size())
        throw ConfigInvalid("signal length does not match its grid");
    if (f.values.empty())
        throw ConfigInvalid("signal is empty");
}

// Trapezoid integral of values[a..b] times dt.
std::complex<double> trapezoid(const std::vector<std::complex<double>>& v,
                               std::size_t a, std::size_t b, double dt) {
    std::vector<double> re(b - a + 1), im(b - a + 1);
    for (std::size_t k = a; k <= b; ++k) {
        const double w = (k == a || k == b) ? 0.5 : 1.0;
        re[k - a] = w * v[k].real();
        im[k - a] = w * v[k].imag();
    }
    return {pairwise_sum(re.data(), re.size()) * dt,
            pairwise_sum(im.data(), im.size()) * dt};
}

double mean_square(const SampledSignal& f, double horizon) {
    SampledSignal sq;
    sq.grid = f.grid;
    sq.values.resize(f.values.size());
    for (std::size_t k = 0; k < f.values.size(); ++k)
        sq.values[k] = std::norm(f.values[k]);
    return bohr_mean(sq, horizon).real();
}

} // namespace

SampledSignal make_signal(const TimeGrid& grid,
                          const std::function<double(double)>& f) {
    SampledSignal s;
    s.grid = grid;
    s.values.resize(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k)
        s.values[k] = f(grid.t(k));
    return s;
}

SampledSignal make_signal(const TimeGrid& grid, const std::vector<double>& values) {
    SampledSignal s;
    s.grid = grid;
    s.values.assign(values.begin(), values.end());
    require_signal(s);
    return s;
}

std::complex<double> bohr_mean(const SampledSignal& f, double horizon) {
    require_signal(f);
    if (!(horizon > 0.0))
        throw HorizonExceedsGrid("horizon must be positive");
    if (horizon > f.grid.span() * (1.0 + 1e-12))
        throw HorizonExceedsGrid("horizon longer than the sampled span");
    const std::size_t a = f.grid.index_at(0.0);
    const std::size_t b = f.grid.index_at(horizon);
    return trapezoid(f.values, a, b, f.grid.dt()) / horizon;
}

std::complex<double> bohr_coefficient(const SampledSignal& f, double lambda,
                                      double horizon) {
    require_signal(f);
    SampledSignal rot;
    rot.grid = f.grid;
    rot.values.resize(f.values.size());
    for (std::size_t k = 0; k < f.values.size(); ++k) {
        const double t = f.grid.t(k);
        rot.values[k] = f.values[k] *
                        std::complex<double>(std::cos(lambda * t), std::sin(lambda * t));
    }
    return bohr_mean(rot, horizon);
}

SpectrumEstimate spectrum_scan(const SampledSignal& f,
                               const std::vector<double>& lambda_grid,
                               double amplitude_threshold, double horizon,
                               double min_separation) {
    require_signal(f);
    if (lambda_grid.empty())
        throw ConfigInvalid("empty frequency grid");
    const double msq = mean_square(f, horizon);
    const double threshold =
        amplitude_threshold > 0.0 ? amplitude_threshold : 0.05 * std::sqrt(msq);
    const double min_sep =
        min_separation > 0.0 ? min_separation : 3.0 * kTwoPi / horizon;

    std::vector<std::complex<double>> coarse(lambda_grid.size());
    parallel_for(lambda_grid.size(), [&](std::size_t i) {
        coarse[i] = bohr_coefficient(f, lambda_grid[i], horizon);
    });

    struct Line {
        double lambda;
        std::complex<double> c;
    };
    std::vector<Line> kept;
    for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
        if (std::abs(coarse[i]) <= threshold) continue;
        // bracket one grid cell to each side and sharpen by golden section
        const double left = i > 0 ? lambda_grid[i - 1]
                                  : 2.0 * lambda_grid[0] - lambda_grid[1];
        const double right = i + 1 < lambda_grid.size()
                                 ? lambda_grid[i + 1]
                                 : 2.0 * lambda_grid.back() -
                                       lambda_grid[lambda_grid.size() - 2];
        double a = left, b = right;
        double x1 = b - kInvGolden * (b - a);
        double x2 = a + kInvGolden * (b - a);
        double g1 = std::abs(bohr_coefficient(f, x1, horizon));
        double g2 = std::abs(bohr_coefficient(f, x2, horizon));
        for (int it = 0; it < 80 && (b - a) > 1e-12; ++it) {
            if (g1 < g2) {
                a = x1;
                x1 = x2;
                g1 = g2;
                x2 = a + kInvGolden * (b - a);
                g2 = std::abs(bohr_coefficient(f, x2, horizon));
            } else {
                b = x2;
                x2 = x1;
                g2 = g1;
                x1 = b - kInvGolden * (b - a);
                g1 = std::abs(bohr_coefficient(f, x1, horizon));
            }
        }
        const double peak = 0.5 * (a + b);
        kept.push_back({peak, bohr_coefficient(f, peak, horizon)});
    }

    // strongest-first pruning of near-duplicate refinements and sidelobes
    std::sort(kept.begin(), kept.end(), [](const Line& x, const Line& y) {
        return std::abs(x.c) > std::abs(y.c);
    });
    std::vector<Line> lines;
    for (const auto& cand : kept) {
        bool clashes = false;
        for (const auto& acc : lines)
            if (std::abs(cand.lambda - acc.lambda) < min_sep) clashes = true;
        if (!clashes && std::abs(cand.c) > threshold) lines.push_back(cand);
    }
    std::sort(lines.begin(), lines.end(),
              [](const Line& x, const Line& y) { return x.lambda < y.lambda; });

    SpectrumEstimate est;
    double energy = 0.0;
    for (const auto& line : lines) {
        est.frequencies.push_back(line.lambda);
        est.coefficients.push_back(line.c);
        energy += std::norm(line.c);
    }
    est.parseval_defect = msq - energy;
    return est;
}

APReport epsilon_almost_periods(const SampledSignal& f, double epsilon,
                                const std::vector<double>& tau_grid) {
    require_signal(f);
    if (!(epsilon > 0.0)) throw ConfigInvalid("epsilon must be positive");
    if (tau_grid.empty()) throw ConfigInvalid("empty tau grid");
    const std::size_t n = f.grid.size();

    std::vector<char> accepted(tau_grid.size(), 0);
    std::vector<int> bad(tau_grid.size(), 0);
    parallel_for(tau_grid.size(), [&](std::size_t i) {
        long steps = 0;
        try {
            steps = f.grid.steps_for(tau_grid[i]);
        } catch (const TauOffGrid&) {
            bad[i] = 1;
            return;
        }
        const std::size_t shift = static_cast<std::size_t>(std::labs(steps));
        if (shift >= n) {
            bad[i] = 2;
            return;
        }
        double sup = 0.0;
        for (std::size_t k = 0; k + shift < n; ++k)
            sup = std::max(sup, std::abs(f.values[k + shift] - f.values[k]));
        accepted[i] = sup <= epsilon ? 1 : 0;
    });
    for (std::size_t i = 0; i < tau_grid.size(); ++i) {
        if (bad[i] == 1) throw TauOffGrid("tau grid entry not grid-aligned");
        if (bad[i] == 2) throw EmptyOverlap("tau shifts the signal off its support");
    }

    APReport rep;
    rep.epsilon = epsilon;
    rep.scan_lo = *std::min_element(tau_grid.begin(), tau_grid.end());
    rep.scan_hi = *std::max_element(tau_grid.begin(), tau_grid.end());
    for (std::size_t i = 0; i < tau_grid.size(); ++i)
        if (accepted[i]) rep.candidate_periods.push_back(tau_grid[i]);
    std::sort(rep.candidate_periods.begin(), rep.candidate_periods.end());
    if (rep.candidate_periods.empty()) {
        rep.max_gap = 0.0;
        rep.relatively_dense_at_l = std::numeric_limits<double>::infinity();
        return rep;
    }
    for (std::size_t i = 1; i < rep.candidate_periods.size(); ++i)
        rep.max_gap = std::max(rep.max_gap, rep.candidate_periods[i] -
                                                rep.candidate_periods[i - 1]);
    rep.relatively_dense_at_l =
        std::max({rep.max_gap, rep.candidate_periods.front() - rep.scan_lo,
                  rep.scan_hi - rep.candidate_periods.back()});
    return rep;
}

namespace {

double ensemble_probe_deviation(const PathEnsemble& base,
                                const PathEnsemble& other, long step_offset,
                                const std::vector<double>& probe_times) {
    if (probe_times.empty()) throw ConfigInvalid("no probe times");
    const std::size_t d = static_cast<std::size_t>(base.dim);
    double worst = 0.0;
    std::vector<double> sq(base.replicates);
    for (double tp : probe_times) {
        const std::size_t k = base.grid.index_at(tp);
        const std::size_t ko = static_cast<std::size_t>(
            static_cast<long>(k) + step_offset);
        if (ko >= base.grid.size())
            throw WindowOffGrid("probe time plus tau leaves the grid");
        for (std::size_t r = 0; r < base.replicates; ++r) {
            double acc = 0.0;
            for (std::size_t j = 0; j < d; ++j)
                acc += sqr(other.state(r, ko, j) - base.state(r, k, j));
            sq[r] = acc;
        }
        worst = std::max(worst, pairwise_mean(sq));
    }
    return std::sqrt(worst);
}

} // namespace

double theta_ap_deviation(const PathEnsemble& base, double tau,
                          const std::vector<double>& probe_times) {
    const PathEnsemble moved = translate_solution(base, tau);
    return ensemble_probe_deviation(base, moved, 0, probe_times);
}

double plain_ap_deviation(const PathEnsemble& base, double tau,
                          const std::vector<double>& probe_times) {
    const long steps = base.grid.steps_for(tau);
    return ensemble_probe_deviation(base, base, steps, probe_times);
}

} // namespace fbmtk
