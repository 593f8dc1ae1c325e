#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "phase/tensor.hpp"

namespace phase {

using TimeSeries = std::vector<double>;

// 1D damped wave equation p_tt + alpha p_t = c^2 p_xx on a fixed grid.
struct WaveParams {
    double alpha;   // damping, 1/s
    double c;       // wave speed, m/s
    double dx;      // spatial step, m
    double dt;      // time step, s
    std::size_t n_points;

    WaveParams(double alpha, double c, double dx, double dt, std::size_t n_points);
};

// Forced damped harmonic oscillator z'' + alpha z' + omega^2 z = u.
struct OscillatorParams {
    double alpha;   // damping, 1/s
    double omega;   // natural angular frequency, rad/s
    double dt;      // time step, s

    OscillatorParams(double alpha, double omega, double dt);
};

// Discrete LTI system x_t = A x_{t-1} + B a_t, z_t = C x_t.
struct StateMatrices {
    std::array<std::array<double, 2>, 2> A;
    std::array<double, 2> B;
    std::array<double, 2> C;

    double spectral_radius() const;
    double a_norm2() const;   // spectral norm of A
    double b_norm2() const;
    double c_norm2() const;
};

struct FirKernel {
    std::vector<double> g;   // g[m] = C A^m B, m = 0..R-1
    double rho;              // decay rate used in the tail bound
    double tail_bound;       // U rho^R / (1 - rho), bounds sum_{m>=R} |g[m]|
};

// Constants of the generalization machinery. U and L are derived, never set.
struct BoundParams {
    double K = 1.0;       // ||A^m|| <= K rho^m
    double rho = 0.5;
    double C0 = 1.0;      // ||C|| bound
    double B0 = 1.0;      // ||B|| bound
    double M_in = 1.0;    // input amplitude bound
    double epsilon = 1e-2;
    std::size_t n = 1000;  // sample count
    std::size_t R = 8;     // filter length
    double L_ell = 1.0;    // loss Lipschitz constant
    double delta = 0.05;

    double U() const { return C0 * K * B0; }
    double L() const { return U() / (1.0 - rho); }
    double Gamma() const { return U() * M_in / (1.0 - rho); }

    void validate() const;
};

StateMatrices discretize(const OscillatorParams& p);

// z_t = C x_t for t = 1..T under the recursion, forcing indexed from t = 1.
TimeSeries ssm_rollout(const StateMatrices& m, const TimeSeries& forcing,
                       const std::array<double, 2>& x0 = {0.0, 0.0});

FirKernel impulse_response(const StateMatrices& m, std::size_t R);

// Smallest R with K M_in ||C|| ||B|| rho^R / (1-rho) <= eps; at least 1.
std::size_t fir_length_for_eps(const BoundParams& b);

TimeSeries fir_convolve(const FirKernel& k, const TimeSeries& forcing);

// Explicit central differences, Dirichlet-zero boundaries. Returns the field
// as [steps+1][n_points] (row 0 is the initial profile).
Tensor simulate_damped_wave_1d(const WaveParams& w, const std::vector<double>& p0,
                               const std::vector<double>& v0, std::size_t steps);

// Fit K as max_m ||A^m|| / rho^m over m <= m_max, rho = spectral radius.
double fit_norm_constant(const StateMatrices& m, std::size_t m_max = 256);

double rademacher_bound(const BoundParams& b);

// Monte-Carlo estimate of (L/n) E_sigma || sum_i sigma_i phi_i ||_inf over
// sign vectors; inputs is n x R row-major.
double empirical_rademacher(Rng& rng, const Tensor& inputs, double L, std::size_t draws);

double target_risk_bound(const BoundParams& b, double src_risk, double w1);

// Exact empirical 1-Wasserstein distance for equal-size 1D samples.
double wasserstein1_empirical(std::vector<double> xs, std::vector<double> ys);

// ceil(2 log n / log(1/rho))
std::size_t recommended_R(double n, double rho);

}  // namespace phase
