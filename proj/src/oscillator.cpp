#include "phase/oscillator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace phase {

namespace {

using Mat2 = std::array<std::array<double, 2>, 2>;

Mat2 matmul(const Mat2& a, const Mat2& b) {
    Mat2 r{};
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    return r;
}

std::array<double, 2> matvec(const Mat2& a, const std::array<double, 2>& v) {
    return {a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]};
}

double spectral_norm2(const Mat2& a) {
    // Largest singular value via eigenvalues of A^T A.
    const double p = a[0][0] * a[0][0] + a[1][0] * a[1][0];
    const double q = a[0][0] * a[0][1] + a[1][0] * a[1][1];
    const double r = a[0][1] * a[0][1] + a[1][1] * a[1][1];
    const double tr = p + r;
    const double det = p * r - q * q;
    const double disc = std::max(0.0, tr * tr / 4.0 - det);
    return std::sqrt(std::max(0.0, tr / 2.0 + std::sqrt(disc)));
}

}  // namespace

WaveParams::WaveParams(double alpha_, double c_, double dx_, double dt_, std::size_t n_points_)
    : alpha(alpha_), c(c_), dx(dx_), dt(dt_), n_points(n_points_) {
    if (alpha < 0.0 || c <= 0.0 || dx <= 0.0 || dt <= 0.0 || n_points < 3) {
        throw std::invalid_argument("WaveParams: invalid parameters");
    }
    if (c * dt / dx > 1.0) {
        throw std::invalid_argument("WaveParams: CFL condition c*dt/dx <= 1 violated");
    }
}

OscillatorParams::OscillatorParams(double alpha_, double omega_, double dt_)
    : alpha(alpha_), omega(omega_), dt(dt_) {
    if (alpha < 0.0 || omega <= 0.0 || dt <= 0.0) {
        throw std::invalid_argument("OscillatorParams: require alpha >= 0, omega > 0, dt > 0");
    }
}

double StateMatrices::spectral_radius() const {
    const double tr = A[0][0] + A[1][1];
    const double det = A[0][0] * A[1][1] - A[0][1] * A[1][0];
    const double disc = tr * tr / 4.0 - det;
    if (disc >= 0.0) {
        const double s = std::sqrt(disc);
        return std::max(std::abs(tr / 2.0 + s), std::abs(tr / 2.0 - s));
    }
    return std::sqrt(det);  // complex pair, |lambda|^2 = det
}

double StateMatrices::a_norm2() const { return spectral_norm2(A); }
double StateMatrices::b_norm2() const { return std::hypot(B[0], B[1]); }
double StateMatrices::c_norm2() const { return std::hypot(C[0], C[1]); }

void BoundParams::validate() const {
    if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("BoundParams: rho must be in (0,1)");
    if (K <= 0.0 || C0 <= 0.0 || B0 <= 0.0 || M_in <= 0.0) {
        throw std::invalid_argument("BoundParams: norms must be positive");
    }
    if (epsilon <= 0.0) throw std::invalid_argument("BoundParams: epsilon must be positive");
    if (L_ell < 0.0) throw std::invalid_argument("BoundParams: L_ell must be nonnegative");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("BoundParams: delta in (0,1)");
}

StateMatrices discretize(const OscillatorParams& p) {
    const double d = 1.0 + p.alpha * p.dt;
    const double w2 = p.omega * p.omega;
    StateMatrices m;
    m.A = {{{1.0 - w2 * p.dt * p.dt / d, p.dt / d},
            {-w2 * p.dt / d, 1.0 / d}}};
    m.B = {p.dt * p.dt / d, p.dt / d};
    m.C = {1.0, 0.0};
    return m;
}

TimeSeries ssm_rollout(const StateMatrices& m, const TimeSeries& forcing,
                       const std::array<double, 2>& x0) {
    TimeSeries z(forcing.size());
    std::array<double, 2> x = x0;
    for (std::size_t t = 0; t < forcing.size(); ++t) {
        const std::array<double, 2> ax = matvec(m.A, x);
        x[0] = ax[0] + m.B[0] * forcing[t];
        x[1] = ax[1] + m.B[1] * forcing[t];
        z[t] = m.C[0] * x[0] + m.C[1] * x[1];
    }
    return z;
}

FirKernel impulse_response(const StateMatrices& m, std::size_t R) {
    if (R < 1) throw std::invalid_argument("impulse_response: R >= 1 required");
    const double rho = m.spectral_radius();
    if (rho >= 1.0) {
        throw std::runtime_error("impulse_response: unstable system, spectral radius >= 1");
    }
    FirKernel k;
    k.g.resize(R);
    k.rho = rho;
    // g[m] = C A^m B, computed by propagating A^m B.
    std::array<double, 2> v = m.B;
    for (std::size_t i = 0; i < R; ++i) {
        k.g[i] = m.C[0] * v[0] + m.C[1] * v[1];
        v = matvec(m.A, v);
    }
    const double K = fit_norm_constant(m);
    const double U = m.c_norm2() * K * m.b_norm2();
    k.tail_bound = U * std::pow(rho, static_cast<double>(R)) / (1.0 - rho);
    return k;
}

std::size_t fir_length_for_eps(const BoundParams& b) {
    b.validate();
    const double num = b.K * b.M_in * b.C0 * b.B0;
    const double target = b.epsilon * (1.0 - b.rho) / num;
    if (target >= 1.0) return 1;  // bound already satisfied at the minimum length
    const double r = std::log(1.0 / target) / std::log(1.0 / b.rho);
    const auto R = static_cast<std::size_t>(std::ceil(r));
    return std::max<std::size_t>(R, 1);
}

TimeSeries fir_convolve(const FirKernel& k, const TimeSeries& forcing) {
    const std::size_t T = forcing.size();
    const std::size_t R = k.g.size();
    TimeSeries z(T, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
        double acc = 0.0;
        const std::size_t m_max = std::min(R, t + 1);
        for (std::size_t m = 0; m < m_max; ++m) acc += k.g[m] * forcing[t - m];
        z[t] = acc;
    }
    return z;
}

Tensor simulate_damped_wave_1d(const WaveParams& w, const std::vector<double>& p0,
                               const std::vector<double>& v0, std::size_t steps) {
    const std::size_t n = w.n_points;
    if (p0.size() != n || v0.size() != n) {
        throw std::invalid_argument("simulate_damped_wave_1d: profile length mismatch");
    }
    Tensor field({steps + 1, n});
    const double r2 = (w.c * w.dt / w.dx) * (w.c * w.dt / w.dx);
    const double ad2 = w.alpha * w.dt / 2.0;

    std::vector<double> prev(p0), cur(n), next(n);
    // First step from a Taylor expansion using the initial velocity.
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double lap = p0[i + 1] - 2.0 * p0[i] + p0[i - 1];
        cur[i] = p0[i] + w.dt * v0[i] +
                 0.5 * w.dt * w.dt *
                     ((w.c * w.c) * lap / (w.dx * w.dx) - w.alpha * v0[i]);
    }
    cur[0] = cur[n - 1] = 0.0;

    for (std::size_t i = 0; i < n; ++i) field[0 * n + i] = prev[i];
    if (steps >= 1) {
        for (std::size_t i = 0; i < n; ++i) field[1 * n + i] = cur[i];
    }

    // (p^{n+1} - 2p^n + p^{n-1})/dt^2 + alpha (p^{n+1} - p^{n-1})/(2dt) = c^2 p_xx
    for (std::size_t s = 2; s <= steps; ++s) {
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double lap = cur[i + 1] - 2.0 * cur[i] + cur[i - 1];
            next[i] = (2.0 * cur[i] - (1.0 - ad2) * prev[i] + r2 * lap) / (1.0 + ad2);
        }
        next[0] = next[n - 1] = 0.0;
        for (std::size_t i = 0; i < n; ++i) field[s * n + i] = next[i];
        std::swap(prev, cur);
        std::swap(cur, next);
    }
    return field;
}

double fit_norm_constant(const StateMatrices& m, std::size_t m_max) {
    const double rho = m.spectral_radius();
    if (rho <= 0.0 || rho >= 1.0) {
        throw std::runtime_error("fit_norm_constant: need 0 < spectral radius < 1");
    }
    Mat2 am = {{{1.0, 0.0}, {0.0, 1.0}}};
    double best = 1.0;  // m = 0 term: ||I|| / rho^0 = 1
    double rp = 1.0;
    for (std::size_t i = 1; i <= m_max; ++i) {
        am = matmul(m.A, am);
        rp *= rho;
        best = std::max(best, spectral_norm2(am) / rp);
    }
    return best;
}

double rademacher_bound(const BoundParams& b) {
    b.validate();
    if (b.R < 1 || b.n < 1) throw std::invalid_argument("rademacher_bound: R, n >= 1");
    return b.L() * b.M_in *
           std::sqrt(2.0 * std::log(2.0 * static_cast<double>(b.R)) / static_cast<double>(b.n));
}

double empirical_rademacher(Rng& rng, const Tensor& inputs, double L, std::size_t draws) {
    if (inputs.rank() != 2) throw std::invalid_argument("empirical_rademacher: inputs must be n x R");
    if (draws < 1) throw std::invalid_argument("empirical_rademacher: draws >= 1");
    const std::size_t n = inputs.dim(0);
    const std::size_t R = inputs.dim(1);
    double acc = 0.0;
    std::vector<double> col(R);
    for (std::size_t d = 0; d < draws; ++d) {
        std::fill(col.begin(), col.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double sigma = (rng.next_u64() & 1u) ? 1.0 : -1.0;
            const double* row = inputs.data() + i * R;
            for (std::size_t j = 0; j < R; ++j) col[j] += sigma * row[j];
        }
        double sup = 0.0;
        for (double v : col) sup = std::max(sup, std::abs(v));
        acc += sup;
    }
    return (L / static_cast<double>(n)) * (acc / static_cast<double>(draws));
}

double target_risk_bound(const BoundParams& b, double src_risk, double w1) {
    b.validate();
    if (w1 < 0.0) throw std::invalid_argument("target_risk_bound: w1 >= 0 required");
    const double n = static_cast<double>(b.n);
    const double stat = 3.0 * std::sqrt(std::log(2.0 / b.delta) / (2.0 * n));
    const double trunc = b.Gamma() * std::pow(b.rho, static_cast<double>(b.R));
    const double disc = b.L_ell * b.L() * w1;
    return src_risk + 2.0 * b.L_ell * rademacher_bound(b) + stat + trunc + disc;
}

double wasserstein1_empirical(std::vector<double> xs, std::vector<double> ys) {
    if (xs.size() != ys.size() || xs.empty()) {
        throw std::invalid_argument("wasserstein1_empirical: equal nonzero lengths required");
    }
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    double acc = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) acc += std::abs(xs[i] - ys[i]);
    return acc / static_cast<double>(xs.size());
}

std::size_t recommended_R(double n, double rho) {
    if (n < 2.0) throw std::invalid_argument("recommended_R: n >= 2 required");
    if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("recommended_R: rho in (0,1)");
    const double r = 2.0 * std::log(n) / std::log(1.0 / rho);
    return static_cast<std::size_t>(std::ceil(r));
}

}  // namespace phase
