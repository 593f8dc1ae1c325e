#pragma once

#include <optional>
#include <string>
#include <vector>

#include "phase/oscillator.hpp"
#include "phase/tensor.hpp"

namespace phase {

struct Spectrum {
    std::vector<double> freq_hz;
    std::vector<double> power;
};

// Welch estimate: Hann-windowed segments of length min(seg_len, T), 50%
// overlap, averaged periodograms. nfft = 0 picks the next power of two >=
// the segment length; larger values zero-pad for a finer frequency grid.
Spectrum psd_welch(const TimeSeries& signal, double fps, std::size_t seg_len = 256,
                   std::size_t nfft = 0);

// Single-segment rectangular-window mode; sum(power) * df recovers the
// signal variance (Parseval check).
Spectrum psd_single_rect(const TimeSeries& signal, double fps);

struct HrEstimate {
    double hr_bpm = 0.0;
    Spectrum psd;
    double band_lo_hz = 0.7;
    double band_hi_hz = 3.0;
    bool low_confidence = false;  // global peak fell outside the band
};

HrEstimate estimate_hr(const TimeSeries& signal, double fps, double band_lo_hz = 0.7,
                       double band_hi_hz = 3.0);

// Index of the largest in-band power value; exact ties go to the lower
// frequency. Shared by estimate_hr and the tests that pin the tie-break.
std::size_t peak_in_band(const Spectrum& sp, double band_lo_hz, double band_hi_hz);

struct MetricsReport {
    double mae_bpm = 0.0;
    double rmse_bpm = 0.0;
    std::optional<double> pearson_r;  // null when ground truth is constant
};

MetricsReport metrics(const std::vector<double>& preds, const std::vector<double>& gts);

// Pearson correlation of two equal-length series; throws on zero variance.
double pearson_corr(const TimeSeries& a, const TimeSeries& b);

// CSV with columns axis,prediction,ground_truth.
void export_csv(const std::string& path, const std::string& axis_name,
                const std::vector<double>& axis, const std::vector<double>& pred,
                const std::vector<double>& gt);

}  // namespace phase
