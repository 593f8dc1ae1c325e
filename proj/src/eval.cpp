#include "phase/eval.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <stdexcept>

namespace phase {

namespace {

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// Iterative radix-2 FFT, n must be a power of two.
void fft_pow2(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * M_PI / static_cast<double>(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

}  // namespace

Spectrum psd_welch(const TimeSeries& signal, double fps, std::size_t seg_len, std::size_t nfft) {
    const std::size_t T = signal.size();
    if (T < 32) throw std::invalid_argument("psd_welch: signal too short (need T >= 32)");
    const std::size_t L = std::min(seg_len, T);
    if (nfft == 0) nfft = next_pow2(L);
    if (nfft < L) throw std::invalid_argument("psd_welch: nfft < segment length");
    nfft = next_pow2(nfft);
    const std::size_t hop = std::max<std::size_t>(1, L / 2);

    double mean = 0.0;
    for (double v : signal) mean += v;
    mean /= static_cast<double>(T);

    std::vector<double> window(L);
    double wsum2 = 0.0;
    for (std::size_t i = 0; i < L; ++i) {
        window[i] = L == 1 ? 1.0 : 0.5 * (1.0 - std::cos(2.0 * M_PI * i / (L - 1)));
        wsum2 += window[i] * window[i];
    }

    const std::size_t n_bins = nfft / 2 + 1;
    Spectrum sp;
    sp.freq_hz.resize(n_bins);
    sp.power.assign(n_bins, 0.0);
    for (std::size_t k = 0; k < n_bins; ++k) sp.freq_hz[k] = fps * k / static_cast<double>(nfft);

    std::size_t n_segments = 0;
    std::vector<std::complex<double>> buf(nfft);
    for (std::size_t start = 0; start + L <= T; start += hop) {
        std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
        for (std::size_t i = 0; i < L; ++i) {
            buf[i] = (signal[start + i] - mean) * window[i];
        }
        fft_pow2(buf);
        for (std::size_t k = 0; k < n_bins; ++k) {
            double p = std::norm(buf[k]) / (fps * wsum2);
            if (k != 0 && k != nfft / 2) p *= 2.0;  // one-sided
            sp.power[k] += p;
        }
        ++n_segments;
        if (start + L == T) break;
    }
    for (double& p : sp.power) p /= static_cast<double>(n_segments);
    return sp;
}

Spectrum psd_single_rect(const TimeSeries& signal, double fps) {
    const std::size_t T = signal.size();
    if (T < 32) throw std::invalid_argument("psd_single_rect: signal too short");
    double mean = 0.0;
    for (double v : signal) mean += v;
    mean /= static_cast<double>(T);

    // Naive DFT, arbitrary length; used only for calibration-size signals.
    const std::size_t n_bins = T / 2 + 1;
    Spectrum sp;
    sp.freq_hz.resize(n_bins);
    sp.power.resize(n_bins);
    for (std::size_t k = 0; k < n_bins; ++k) {
        double re = 0.0, im = 0.0;
        for (std::size_t n = 0; n < T; ++n) {
            const double ang = -2.0 * M_PI * k * n / static_cast<double>(T);
            const double v = signal[n] - mean;
            re += v * std::cos(ang);
            im += v * std::sin(ang);
        }
        double p = (re * re + im * im) / (fps * static_cast<double>(T));
        if (k != 0 && !(T % 2 == 0 && k == T / 2)) p *= 2.0;
        sp.freq_hz[k] = fps * k / static_cast<double>(T);
        sp.power[k] = p;
    }
    return sp;
}

std::size_t peak_in_band(const Spectrum& sp, double band_lo_hz, double band_hi_hz) {
    double best = -1.0;
    std::size_t k_best = sp.freq_hz.size();
    for (std::size_t k = 0; k < sp.freq_hz.size(); ++k) {
        const double f = sp.freq_hz[k];
        if (f < band_lo_hz || f > band_hi_hz) continue;
        // strict > keeps the lower-frequency bin on ties
        if (sp.power[k] > best) {
            best = sp.power[k];
            k_best = k;
        }
    }
    if (k_best == sp.freq_hz.size()) throw std::invalid_argument("peak_in_band: empty band");
    return k_best;
}

HrEstimate estimate_hr(const TimeSeries& signal, double fps, double band_lo_hz,
                       double band_hi_hz) {
    if (!(band_lo_hz > 0.0 && band_lo_hz < band_hi_hz && band_hi_hz < fps / 2.0)) {
        throw std::invalid_argument("estimate_hr: band must lie within (0, fps/2)");
    }
    HrEstimate est;
    est.band_lo_hz = band_lo_hz;
    est.band_hi_hz = band_hi_hz;
    // Zero-pad for a frequency grid finer than 0.5 bpm.
    const std::size_t nfft = std::max<std::size_t>(4096, next_pow2(signal.size()));
    est.psd = psd_welch(signal, fps, 256, nfft);

    const std::size_t k_band = peak_in_band(est.psd, band_lo_hz, band_hi_hz);
    double best_global = -1.0;
    std::size_t k_global = 0;
    for (std::size_t k = 0; k < est.psd.freq_hz.size(); ++k) {
        if (est.psd.freq_hz[k] <= 0.0) continue;
        if (est.psd.power[k] > best_global) {
            best_global = est.psd.power[k];
            k_global = k;
        }
    }
    est.hr_bpm = 60.0 * est.psd.freq_hz[k_band];
    est.low_confidence = k_global != k_band;
    return est;
}

MetricsReport metrics(const std::vector<double>& preds, const std::vector<double>& gts) {
    if (preds.size() != gts.size() || preds.empty()) {
        throw std::invalid_argument("metrics: equal nonzero lengths required");
    }
    MetricsReport r;
    double abs_sum = 0.0, sq_sum = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double d = preds[i] - gts[i];
        abs_sum += std::abs(d);
        sq_sum += d * d;
    }
    const double n = static_cast<double>(preds.size());
    r.mae_bpm = abs_sum / n;
    r.rmse_bpm = std::sqrt(sq_sum / n);
    if (preds.size() >= 2) {
        double mp = 0.0, mg = 0.0;
        for (std::size_t i = 0; i < preds.size(); ++i) {
            mp += preds[i];
            mg += gts[i];
        }
        mp /= n;
        mg /= n;
        double spg = 0.0, sp = 0.0, sg = 0.0;
        for (std::size_t i = 0; i < preds.size(); ++i) {
            spg += (preds[i] - mp) * (gts[i] - mg);
            sp += (preds[i] - mp) * (preds[i] - mp);
            sg += (gts[i] - mg) * (gts[i] - mg);
        }
        if (sp > 0.0 && sg > 0.0) r.pearson_r = spg / std::sqrt(sp * sg);
    }
    return r;
}

double pearson_corr(const TimeSeries& a, const TimeSeries& b) {
    if (a.size() != b.size() || a.size() < 2) {
        throw std::invalid_argument("pearson_corr: equal lengths >= 2 required");
    }
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, sa = 0.0, sb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        sa += (a[i] - ma) * (a[i] - ma);
        sb += (b[i] - mb) * (b[i] - mb);
    }
    if (sa <= 0.0 || sb <= 0.0) throw std::invalid_argument("pearson_corr: zero-variance signal");
    return sab / std::sqrt(sa * sb);
}

void export_csv(const std::string& path, const std::string& axis_name,
                const std::vector<double>& axis, const std::vector<double>& pred,
                const std::vector<double>& gt) {
    if (axis.size() != pred.size() || axis.size() != gt.size()) {
        throw std::invalid_argument("export_csv: column length mismatch");
    }
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("export_csv: cannot open " + path);
    os << axis_name << ",prediction,ground_truth\n";
    os.precision(12);
    for (std::size_t i = 0; i < axis.size(); ++i) {
        os << axis[i] << "," << pred[i] << "," << gt[i] << "\n";
    }
}

}  // namespace phase
