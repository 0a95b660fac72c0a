#pragma once
/**
 * @file noise_analysis.hpp
 * @brief Velocity-noise filtering by velocity alignment, computed three independent ways.
 *
 * With a zero velocity command every robot runs a linear loop driven by white velocity
 * measurement noise of PSD sigma_v per axis:
 *
 *   plain tracking:    dv_i/dt = -k_v (v_i + n_i)
 *   aligned tracking:  dv_i/dt = -k_v (v_i + n_i) - k_v k5 sum_j (v_i - v_j)
 *
 * For a complete relative-localization graph of N robots the steady-state per-axis
 * velocity variances are k_v sigma_v / 2 and k_v sigma_v (k5 + 1) / (2 (k5 N + 1)).
 * This header provides the closed forms, a quadrature of the transfer-function
 * spectra, and a Monte Carlo simulation of the discretized loops.
 */

#include <tubeswarm/errors.hpp>
#include <tubeswarm/sensing.hpp>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace tubeswarm {

enum class VarianceMethod { ClosedForm, SpectralIntegral, MonteCarlo };

/// Which tracking law the noise passes through.
enum class TrackingLaw {
    Plain,    ///< a = k_v (v_c - v_hat) + dv_c/dt
    Aligned,  ///< a = k_v (v_c - v_hat - u5) + dv_c/dt
};

struct NoiseVarianceResult {
    double sigma_prime{0.0};         ///< per-axis velocity variance, plain law
    double sigma_double_prime{0.0};  ///< per-axis velocity variance, aligned law
    double ratio{1.0};               ///< sigma_double_prime / sigma_prime
    VarianceMethod method{VarianceMethod::ClosedForm};
};

/// Thrown when a discretized loop would be or became unstable.
class DiscretizationUnstable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

[[nodiscard]] inline NoiseVarianceResult closedFormVariances(int N, double k_v, double k5, double sigma_v) {
    require(N >= 1, "N must be at least 1");
    require(k_v > 0.0 && k5 > 0.0, "k_v and k5 must be positive");
    require(sigma_v >= 0.0, "sigma_v must be non-negative");
    NoiseVarianceResult r;
    r.ratio = (k5 + 1.0) / (k5 * N + 1.0);
    r.sigma_prime = 0.5 * k_v * sigma_v;
    r.sigma_double_prime = r.sigma_prime * r.ratio;
    r.method = VarianceMethod::ClosedForm;
    return r;
}

/// Laplacian of the complete graph on N vertices.
[[nodiscard]] inline Eigen::MatrixXd completeGraphLaplacian(int N) {
    require(N >= 1, "N must be at least 1");
    Eigen::MatrixXd L = Eigen::MatrixXd::Constant(N, N, -1.0);
    L.diagonal().setConstant(N - 1.0);
    return L;
}

/// Laplacian D - W of an undirected graph given by a symmetric 0/1 (or weighted) adjacency.
[[nodiscard]] inline Eigen::MatrixXd laplacianFromAdjacency(const Eigen::MatrixXd& adjacency) {
    require(adjacency.rows() == adjacency.cols(), "adjacency must be square");
    require(adjacency.isApprox(adjacency.transpose()), "adjacency must be symmetric");
    Eigen::MatrixXd L = -adjacency;
    L.diagonal().setZero();
    for (Eigen::Index i = 0; i < L.rows(); ++i) L(i, i) = -L.row(i).sum();
    return L;
}

/// State-space form dv/dt = A v + B u, y = C v of the aligned loop for 2-D robots.
struct AlignmentLoopModel {
    int N{1};
    double k_v{1.0};
    double k5{1.0};
    Eigen::MatrixXd laplacian;
    Eigen::MatrixXd A, B, C;

    static AlignmentLoopModel fromLaplacian(Eigen::MatrixXd L, double k_v, double k5) {
        require(k_v > 0.0 && k5 > 0.0, "k_v and k5 must be positive");
        AlignmentLoopModel m;
        m.N = static_cast<int>(L.rows());
        m.k_v = k_v;
        m.k5 = k5;
        const Eigen::Index n2 = 2 * L.rows();
        Eigen::MatrixXd LI = Eigen::MatrixXd::Zero(n2, n2);
        for (Eigen::Index i = 0; i < L.rows(); ++i)
            for (Eigen::Index j = 0; j < L.cols(); ++j) LI.block<2, 2>(2 * i, 2 * j) = L(i, j) * Eigen::Matrix2d::Identity();
        m.A = -k_v * k5 * (LI + (1.0 / k5) * Eigen::MatrixXd::Identity(n2, n2));
        m.B = k_v * Eigen::MatrixXd::Identity(n2, n2);
        m.C = Eigen::MatrixXd::Identity(n2, n2);
        m.laplacian = std::move(L);
        return m;
    }

    static AlignmentLoopModel completeGraph(int N, double k_v, double k5) {
        return fromLaplacian(completeGraphLaplacian(N), k_v, k5);
    }
};

inline std::complex<double> plainTransfer(std::complex<double> s, double k_v) { return k_v / (s + k_v); }

/// Diagonal entry of the aligned loop's transfer matrix (own noise to own velocity).
inline std::complex<double> alignedTransferSelf(std::complex<double> s, int N, double k_v, double k5) {
    return k_v * (s + k_v + k_v * k5) / ((s + k_v) * (s + k_v + N * k_v * k5));
}

/// Off-diagonal entry (another robot's noise to own velocity).
inline std::complex<double> alignedTransferCross(std::complex<double> s, int N, double k_v, double k5) {
    return k_v * k_v * k5 / ((s + k_v) * (s + k_v + N * k_v * k5));
}

struct SpectralResult {
    double value{0.0};
    double error_estimate{0.0};
    /// False when the quadrature error estimate exceeds the requested tolerance.
    bool reliable{true};
};

/**
 * (1/2pi) * integral over the real line of an even, non-negative integrand f.
 * The interval [0, omega_max] is split into n_points panels (one linear panel at the
 * origin, geometric above) each integrated by 31-point Gauss-Kronrod; the remainder
 * beyond omega_max is approximated from the 1/omega^2 asymptote c/omega_max with
 * c = omega_max^2 f(omega_max).
 */
[[nodiscard]] inline SpectralResult integrateEvenSpectrum(const std::function<double(double)>& f, double omega_max,
                                                          int n_points, double omega_scale,
                                                          double rel_tolerance = 1e-9) {
    require(omega_max > 0.0 && n_points >= 2 && omega_scale > 0.0, "invalid quadrature parameters");
    using boost::math::quadrature::gauss_kronrod;

    const double first = std::min(0.01 * omega_scale, omega_max / 2.0);
    std::vector<double> edges{0.0, first};
    const double growth = std::pow(omega_max / first, 1.0 / (n_points - 1));
    for (int k = 1; k < n_points; ++k) edges.push_back(first * std::pow(growth, k));
    edges.back() = omega_max;

    double sum = 0.0;
    double err = 0.0;
    for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
        double panel_err = 0.0;
        sum += gauss_kronrod<double, 31>::integrate(f, edges[k], edges[k + 1], 0, 0.0, &panel_err);
        err += panel_err * (edges[k + 1] - edges[k]);
    }
    const double fm = f(omega_max);
    const double tail = omega_max * fm;
    // Next asymptotic order of a rational 1/omega^2 tail relative to the leading term.
    err += tail * std::pow(omega_scale / omega_max, 2);

    SpectralResult r;
    r.value = (sum + tail) / std::numbers::pi;  // 2 * (1/2pi) for the even extension
    r.error_estimate = err / std::numbers::pi;
    r.reliable = r.error_estimate <= rel_tolerance * std::abs(r.value) + 1e-300;
    return r;
}

/// Default upper cut-off for the spectral integrals: 10^3 times the fastest loop pole.
[[nodiscard]] inline double defaultOmegaMax(int N, double k_v, double k5) { return 1e3 * k_v * (1.0 + N * k5); }

[[nodiscard]] inline SpectralResult spectralVarianceSingle(double k_v, double sigma_v, double omega_max,
                                                           int n_points = 64) {
    require(k_v > 0.0 && sigma_v >= 0.0, "invalid loop parameters");
    auto f = [k_v](double w) { return std::norm(plainTransfer({0.0, w}, k_v)); };
    SpectralResult r = integrateEvenSpectrum(f, omega_max, n_points, k_v);
    r.value *= sigma_v;
    r.error_estimate *= sigma_v;
    return r;
}

[[nodiscard]] inline SpectralResult spectralVarianceAligned(int N, double k_v, double k5, double sigma_v,
                                                            double omega_max, int n_points = 64) {
    require(N >= 1 && k_v > 0.0 && k5 > 0.0 && sigma_v >= 0.0, "invalid loop parameters");
    auto self = [=](double w) { return std::norm(alignedTransferSelf({0.0, w}, N, k_v, k5)); };
    SpectralResult r = integrateEvenSpectrum(self, omega_max, n_points, k_v);
    if (N > 1) {
        auto cross = [=](double w) { return std::norm(alignedTransferCross({0.0, w}, N, k_v, k5)); };
        const SpectralResult c = integrateEvenSpectrum(cross, omega_max, n_points, k_v);
        r.value += (N - 1) * c.value;
        r.error_estimate += (N - 1) * c.error_estimate;
        r.reliable = r.reliable && c.reliable;
    }
    r.value *= sigma_v;
    r.error_estimate *= sigma_v;
    return r;
}

[[nodiscard]] inline NoiseVarianceResult spectralVariances(int N, double k_v, double k5, double sigma_v) {
    const double wmax = defaultOmegaMax(N, k_v, k5);
    NoiseVarianceResult r;
    r.sigma_prime = spectralVarianceSingle(k_v, sigma_v, wmax).value;
    r.sigma_double_prime = spectralVarianceAligned(N, k_v, k5, sigma_v, wmax).value;
    r.ratio = r.sigma_prime > 0.0 ? r.sigma_double_prime / r.sigma_prime : 1.0;
    r.method = VarianceMethod::SpectralIntegral;
    return r;
}

struct MonteCarloConfig {
    int N{1};
    double k_v{1.0};
    double k5{1.0};
    double sigma_v{1.0};
    TrackingLaw law{TrackingLaw::Plain};
    double dt{1e-3};
    double duration{20.0};
    double burn_in{5.0};
    int trials{100};
    std::uint64_t seed{1};
};

struct MonteCarloResult {
    /// Pooled per-axis sample variance over robots, axes, trials and post-burn-in steps.
    double variance{0.0};
    long samples{0};
    /// Pooled variance of each quarter of the post-burn-in window.
    std::vector<double> window_variances;
};

/**
 * Simulate the Euler-discretized loop v_{k+1} = v_k + dt a_k with zero velocity command.
 * White noise of PSD sigma_v is sampled as N(0, sigma_v / dt) per step and axis.
 */
[[nodiscard]] inline MonteCarloResult monteCarloVariance(const MonteCarloConfig& cfg) {
    require(cfg.N >= 1 && cfg.k_v > 0.0 && cfg.k5 > 0.0 && cfg.sigma_v >= 0.0, "invalid loop parameters");
    require(cfg.dt > 0.0 && cfg.trials >= 1, "dt and trials must be positive");
    require(cfg.burn_in >= 0.0 && cfg.duration > cfg.burn_in, "duration must exceed burn-in");

    const double fastest = cfg.law == TrackingLaw::Aligned ? cfg.k_v * (1.0 + cfg.N * cfg.k5) : cfg.k_v;
    if (cfg.dt * fastest >= 2.0) {
        std::ostringstream os;
        os << "Euler step unstable: dt * k_v * (1 + N k5) = " << cfg.dt * fastest << " >= 2 (N=" << cfg.N
           << ", k_v=" << cfg.k_v << ", k5=" << cfg.k5 << ", dt=" << cfg.dt << ")";
        throw DiscretizationUnstable(os.str());
    }
    if (cfg.dt * cfg.k_v > 1e-3 * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "dt must satisfy dt <= 0.001 / k_v for the discrete loop to match the continuous spectrum (dt="
           << cfg.dt << ", k_v=" << cfg.k_v << ")";
        throw ContractViolation(os.str());
    }

    const auto steps = static_cast<long>(std::llround(cfg.duration / cfg.dt));
    const auto burn = static_cast<long>(std::llround(cfg.burn_in / cfg.dt));
    const long kept = steps - burn;
    constexpr int kWindows = 4;
    const double noise_sd = std::sqrt(cfg.sigma_v / cfg.dt);
    const bool aligned = cfg.law == TrackingLaw::Aligned;

    std::vector<double> win_sum(kWindows, 0.0), win_sq(kWindows, 0.0);
    std::vector<long> win_n(kWindows, 0);
    std::vector<double> vx(cfg.N), vy(cfg.N);

    for (int trial = 0; trial < cfg.trials; ++trial) {
        std::mt19937_64 engine(substreamSeed(cfg.seed, static_cast<std::uint64_t>(trial)));
        std::normal_distribution<double> normal(0.0, 1.0);
        std::fill(vx.begin(), vx.end(), 0.0);
        std::fill(vy.begin(), vy.end(), 0.0);
        for (long k = 0; k < steps; ++k) {
            double sx = 0.0, sy = 0.0;
            if (aligned)
                for (int i = 0; i < cfg.N; ++i) { sx += vx[i]; sy += vy[i]; }
            for (int i = 0; i < cfg.N; ++i) {
                const double nx = noise_sd * normal(engine);
                const double ny = noise_sd * normal(engine);
                double ax = -cfg.k_v * (vx[i] + nx);
                double ay = -cfg.k_v * (vy[i] + ny);
                if (aligned) {
                    // sum_j (v_i - v_j) = N v_i - sum_j v_j
                    ax -= cfg.k_v * cfg.k5 * (cfg.N * vx[i] - sx);
                    ay -= cfg.k_v * cfg.k5 * (cfg.N * vy[i] - sy);
                }
                vx[i] += cfg.dt * ax;
                vy[i] += cfg.dt * ay;
            }
            if (k >= burn) {
                const auto w = static_cast<std::size_t>((k - burn) * kWindows / kept);
                for (int i = 0; i < cfg.N; ++i) {
                    win_sum[w] += vx[i] + vy[i];
                    win_sq[w] += vx[i] * vx[i] + vy[i] * vy[i];
                }
                win_n[w] += 2L * cfg.N;
            }
        }
    }

    MonteCarloResult r;
    double tot_sum = 0.0, tot_sq = 0.0;
    long tot_n = 0;
    for (int w = 0; w < kWindows; ++w) {
        const double mean = win_sum[w] / win_n[w];
        r.window_variances.push_back(win_sq[w] / win_n[w] - mean * mean);
        tot_sum += win_sum[w];
        tot_sq += win_sq[w];
        tot_n += win_n[w];
    }
    const double mean = tot_sum / tot_n;
    r.variance = tot_sq / tot_n - mean * mean;
    r.samples = tot_n;

    const bool finite = std::isfinite(r.variance);
    const double first = r.window_variances.front();
    const double last = r.window_variances.back();
    if (!finite || (first > 0.0 && last > 4.0 * first)) {
        std::ostringstream os;
        os << "variance grows across windows (" << first << " -> " << last
           << "); reduce dt below 1 / (k_v (1 + N k5)) = " << 1.0 / fastest;
        throw DiscretizationUnstable(os.str());
    }
    return r;
}

/// Runs both tracking laws with the same seed and packages them like the other methods.
[[nodiscard]] inline NoiseVarianceResult monteCarloVariances(MonteCarloConfig cfg) {
    NoiseVarianceResult r;
    cfg.law = TrackingLaw::Plain;
    r.sigma_prime = monteCarloVariance(cfg).variance;
    cfg.law = TrackingLaw::Aligned;
    r.sigma_double_prime = monteCarloVariance(cfg).variance;
    r.ratio = r.sigma_prime > 0.0 ? r.sigma_double_prime / r.sigma_prime : 1.0;
    r.method = VarianceMethod::MonteCarlo;
    return r;
}

}  // namespace tubeswarm
