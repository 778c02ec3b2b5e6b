#pragma once

#include <unsupported/Eigen/FFT>
#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "integrate.hpp"

namespace nrdicke {

enum class Observable { Beta, SxPlus, SyPlus, SzPlus, SxMinus, SyMinus, SzMinus };

inline const char* observable_name(Observable o) {
    switch (o) {
        case Observable::Beta: return "beta";
        case Observable::SxPlus: return "sx_plus";
        case Observable::SyPlus: return "sy_plus";
        case Observable::SzPlus: return "sz_plus";
        case Observable::SxMinus: return "sx_minus";
        case Observable::SyMinus: return "sy_minus";
        case Observable::SzMinus: return "sz_minus";
    }
    return "?";
}

inline Observable parse_observable(const std::string& s) {
    for (Observable o : {Observable::Beta, Observable::SxPlus, Observable::SyPlus,
                         Observable::SzPlus, Observable::SxMinus, Observable::SyMinus,
                         Observable::SzMinus})
        if (s == observable_name(o)) return o;
    throw std::invalid_argument("unknown observable: " + s);
}

inline bool observable_is_complex(Observable o) { return o == Observable::Beta; }

inline std::complex<double> observable_value(const SystemState& s, Observable o) {
    switch (o) {
        case Observable::Beta: return s.field;
        case Observable::SxPlus: return {s.plus.x, 0.0};
        case Observable::SyPlus: return {s.plus.y, 0.0};
        case Observable::SzPlus: return {s.plus.z, 0.0};
        case Observable::SxMinus: return {s.minus.x, 0.0};
        case Observable::SyMinus: return {s.minus.y, 0.0};
        case Observable::SzMinus: return {s.minus.z, 0.0};
    }
    return {0.0, 0.0};
}

struct Peak {
    double frequency = 0.0;  // angular
    double amplitude = 0.0;
};

struct FrequencySpectrum {
    std::string observable;
    bool two_sided = true;
    double dt = 0.0;
    double resolution = 0.0;           // angular bin width 2*pi/(M*dt)
    std::size_t window = 0;            // M, samples actually transformed
    std::vector<double> frequencies;   // ascending
    std::vector<double> amplitudes;    // |X_k| / sum(w)
    double window_sum = 0.0;           // sum w
    double signal_power = 0.0;         // sum |w_n x_n|^2 over the window
};

inline constexpr std::size_t kMinFftSamples = 4096;

namespace detail {

inline std::size_t pow2_floor(std::size_t n) {
    std::size_t m = 1;
    while (m * 2 <= n) m *= 2;
    return m;
}

} // namespace detail

// Windowed DFT amplitudes. The tail of the series is truncated to a power of
// two; a periodic Hann window keeps leakage local so tone amplitudes read off
// directly (a unit complex tone reports amplitude 1, a real cosine 0.5).
inline FrequencySpectrum spectrum_of_series(const std::vector<std::complex<double>>& series,
                                            double dt, bool two_sided,
                                            const std::string& name = "series") {
    if (series.size() < 16)
        throw std::invalid_argument("spectrum_of_series: series too short");
    if (!(dt > 0.0)) throw std::invalid_argument("spectrum_of_series: dt must be > 0");

    const std::size_t m = detail::pow2_floor(series.size());
    const std::size_t off = series.size() - m;

    std::vector<std::complex<double>> in(m);
    double wsum = 0.0, power = 0.0;
    for (std::size_t n = 0; n < m; ++n) {
        const double w = 0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<double>(n) / m));
        in[n] = w * series[off + n];
        wsum += w;
        power += std::norm(in[n]);
    }

    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> out;
    fft.fwd(out, in);

    FrequencySpectrum sp;
    sp.observable = name;
    sp.two_sided = two_sided;
    sp.dt = dt;
    sp.window = m;
    sp.resolution = 2.0 * M_PI / (static_cast<double>(m) * dt);
    sp.window_sum = wsum;
    sp.signal_power = power;

    if (two_sided) {
        sp.frequencies.resize(m);
        sp.amplitudes.resize(m);
        // negative half first so frequencies ascend
        const std::size_t half = m / 2;
        for (std::size_t k = 0; k < m; ++k) {
            const std::size_t src = (k + half) % m;
            const double fidx = static_cast<double>(k) - static_cast<double>(half);
            sp.frequencies[k] = fidx * sp.resolution;
            sp.amplitudes[k] = std::abs(out[src]) / wsum;
        }
    } else {
        const std::size_t half = m / 2;
        sp.frequencies.resize(half + 1);
        sp.amplitudes.resize(half + 1);
        for (std::size_t k = 0; k <= half; ++k) {
            sp.frequencies[k] = static_cast<double>(k) * sp.resolution;
            sp.amplitudes[k] = std::abs(out[k]) / wsum;
        }
    }
    return sp;
}

inline FrequencySpectrum fft_spectrum(const Trajectory& traj, Observable obs) {
    if (traj.size() < kMinFftSamples)
        throw std::invalid_argument("fft_spectrum: need at least 4096 samples");
    std::vector<std::complex<double>> series(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i)
        series[i] = observable_value(traj.states[i], obs);
    return spectrum_of_series(series, traj.config.sample_dt,
                              observable_is_complex(obs), observable_name(obs));
}

// Local maxima above rel_threshold * max, refined on log amplitude by a
// three-point parabola; strongest first.
inline std::vector<Peak> dominant_peaks(const FrequencySpectrum& sp, int max_peaks = 8,
                                        double rel_threshold = 1e-3,
                                        double min_abs_freq = 0.0) {
    const auto& a = sp.amplitudes;
    const std::size_t n = a.size();
    std::vector<Peak> peaks;
    if (n < 3) return peaks;

    double amax = 0.0;
    for (std::size_t k = 0; k < n; ++k)
        if (std::abs(sp.frequencies[k]) >= min_abs_freq) amax = std::max(amax, a[k]);
    if (amax <= 0.0) return peaks;
    const double floor_amp = rel_threshold * amax;

    for (std::size_t k = 1; k + 1 < n; ++k) {
        if (std::abs(sp.frequencies[k]) < min_abs_freq) continue;
        if (a[k] < floor_amp) continue;
        if (!(a[k] >= a[k - 1] && a[k] > a[k + 1])) continue;
        Peak p{sp.frequencies[k], a[k]};
        if (a[k - 1] > 0.0 && a[k + 1] > 0.0 && a[k] > a[k - 1]) {
            const double d1 = std::log(a[k - 1]), d2 = std::log(a[k]), d3 = std::log(a[k + 1]);
            const double denom = d1 - 2.0 * d2 + d3;
            if (denom < 0.0) {
                const double shift = std::clamp(0.5 * (d1 - d3) / denom, -0.5, 0.5);
                p.frequency += shift * sp.resolution;
                p.amplitude = std::exp(d2 - 0.25 * (d1 - d3) * shift);
            }
        }
        peaks.push_back(p);
    }
    std::sort(peaks.begin(), peaks.end(),
              [](const Peak& x, const Peak& y) { return x.amplitude > y.amplitude; });
    if (static_cast<int>(peaks.size()) > max_peaks) peaks.resize(max_peaks);
    return peaks;
}

inline double mean_intensity(const Trajectory& traj) {
    if (traj.states.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& s : traj.states) acc += std::norm(s.field);
    return acc / static_cast<double>(traj.states.size());
}

// ---- light-phase locking ----

struct LockingReport {
    bool locked = false;
    double angle = 0.0;      // principal axis of the (Re,Im) cloud about the origin, in [0, pi)
    double residual = 1.0;   // minor/major axis ratio; ~0 for a clean locked line
    double rms = 0.0;        // cloud size
};

inline constexpr double kLockResidualMax = 0.5;
inline constexpr double kLockMinRms = 1e-9;

inline LockingReport phase_locking_angle(const std::vector<std::complex<double>>& cloud) {
    LockingReport r;
    if (cloud.empty()) return r;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (const auto& b : cloud) {
        sxx += b.real() * b.real();
        syy += b.imag() * b.imag();
        sxy += b.real() * b.imag();
    }
    const double n = static_cast<double>(cloud.size());
    sxx /= n; syy /= n; sxy /= n;
    r.rms = std::sqrt(sxx + syy);
    if (r.rms < kLockMinRms) return r;

    const double tr = sxx + syy;
    const double det = std::sqrt(std::max(0.0, (sxx - syy) * (sxx - syy) + 4.0 * sxy * sxy));
    const double mu_max = 0.5 * (tr + det), mu_min = 0.5 * (tr - det);
    double angle = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
    if (angle < 0.0) angle += M_PI;
    if (angle >= M_PI) angle -= M_PI;
    r.angle = angle;
    r.residual = (mu_max > 0.0) ? std::sqrt(std::max(0.0, mu_min) / mu_max) : 1.0;
    r.locked = r.residual < kLockResidualMax;
    return r;
}

inline LockingReport phase_locking_angle(const Trajectory& traj) {
    std::vector<std::complex<double>> cloud;
    cloud.reserve(traj.states.size());
    for (const auto& s : traj.states) cloud.push_back(s.field);
    return phase_locking_angle(cloud);
}

// ---- long-time regime labels ----

enum class RegimeLabel { Stationary, LimitCycle, DSR, Broadband, Marginal };

inline const char* regime_name(RegimeLabel l) {
    switch (l) {
        case RegimeLabel::Stationary: return "STATIONARY";
        case RegimeLabel::LimitCycle: return "LIMIT_CYCLE";
        case RegimeLabel::DSR: return "DSR";
        case RegimeLabel::Broadband: return "BROADBAND";
        case RegimeLabel::Marginal: return "MARGINAL";
    }
    return "?";
}

struct RegimeOptions {
    double eps_osc = 1e-6;    // below this swing the orbit counts as stationary
    double eps_sr = 1e-3;     // relative DC level separating DSR from a plain cycle
    int max_peaks = 8;
    double capture = 0.95;    // fraction of AC power the peaks must hold
    int guard_bins = 4;       // DC leakage exclusion around zero frequency
    int peak_halfwidth = 3;   // bins credited to each peak
    double dc_drift = 0.05;   // window-mean drift (relative) that flags an unsettled cycle
    double amp_drift = 0.05;  // half-window rms growth (relative) that flags an unsettled cycle
};

struct RegimeReport {
    RegimeLabel label = RegimeLabel::Stationary;
    double osc_amplitude = 0.0;   // largest half swing across coordinates
    double dc_amplitude = 0.0;    // |mean| / max|obs| of the analysis observable
    double captured = 0.0;        // peak share of AC power
    std::string observable;
    std::vector<Peak> peaks;
};

inline RegimeReport classify_regime(const Trajectory& traj, const RegimeOptions& opt = {}) {
    RegimeReport rep;
    const std::size_t n = traj.states.size();
    if (n < 16) throw std::invalid_argument("classify_regime: trajectory too short");

    double lo[8], hi[8], lo2[8], hi2[8];
    for (int c = 0; c < 8; ++c) {
        lo[c] = lo2[c] = std::numeric_limits<double>::infinity();
        hi[c] = hi2[c] = -std::numeric_limits<double>::infinity();
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto a = traj.states[i].to_array();
        for (int c = 0; c < 8; ++c) {
            lo[c] = std::min(lo[c], a[c]);
            hi[c] = std::max(hi[c], a[c]);
            if (i >= n / 2) {
                lo2[c] = std::min(lo2[c], a[c]);
                hi2[c] = std::max(hi2[c], a[c]);
            }
        }
    }
    double amp = 0.0, amp_tail = 0.0;
    for (int c = 0; c < 8; ++c) {
        amp = std::max(amp, 0.5 * (hi[c] - lo[c]));
        amp_tail = std::max(amp_tail, 0.5 * (hi2[c] - lo2[c]));
    }
    rep.osc_amplitude = amp;

    // field cloud if the field carries signal, otherwise the + coherence
    const double field_reach = std::max(std::max(std::abs(lo[6]), std::abs(hi[6])),
                                        std::max(std::abs(lo[7]), std::abs(hi[7])));
    const Observable obs = (field_reach >= opt.eps_osc) ? Observable::Beta : Observable::SxPlus;
    rep.observable = observable_name(obs);

    std::vector<std::complex<double>> series(n);
    std::complex<double> mean(0.0, 0.0);
    double vmax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        series[i] = observable_value(traj.states[i], obs);
        mean += series[i];
        vmax = std::max(vmax, std::abs(series[i]));
    }
    mean /= static_cast<double>(n);
    rep.dc_amplitude = (vmax > 0.0) ? std::abs(mean) / vmax : 0.0;

    if (amp < opt.eps_osc) {
        rep.label = RegimeLabel::Stationary;
        return rep;
    }
    // swing still draining away: the run has not settled
    if (amp_tail < 0.5 * amp && amp_tail < opt.eps_osc * 1e3) {
        rep.label = RegimeLabel::Marginal;
        return rep;
    }

    const FrequencySpectrum sp =
        spectrum_of_series(series, traj.config.sample_dt, observable_is_complex(obs),
                           observable_name(obs));
    const double guard = opt.guard_bins * sp.resolution;
    rep.peaks = dominant_peaks(sp, opt.max_peaks, 1e-3, guard);

    double ac_power = 0.0;
    std::vector<char> credited(sp.amplitudes.size(), 0);
    for (std::size_t k = 0; k < sp.amplitudes.size(); ++k)
        if (std::abs(sp.frequencies[k]) > guard)
            ac_power += sp.amplitudes[k] * sp.amplitudes[k];
    double peak_power = 0.0;
    for (const auto& p : rep.peaks) {
        const auto it = std::lower_bound(sp.frequencies.begin(), sp.frequencies.end(), p.frequency);
        std::ptrdiff_t kc = std::distance(sp.frequencies.begin(), it);
        if (kc >= static_cast<std::ptrdiff_t>(sp.frequencies.size())) kc = sp.frequencies.size() - 1;
        for (std::ptrdiff_t k = kc - opt.peak_halfwidth; k <= kc + opt.peak_halfwidth; ++k) {
            if (k < 0 || k >= static_cast<std::ptrdiff_t>(sp.amplitudes.size())) continue;
            if (credited[k] || std::abs(sp.frequencies[k]) <= guard) continue;
            credited[k] = 1;
            peak_power += sp.amplitudes[k] * sp.amplitudes[k];
        }
    }
    rep.captured = (ac_power > 0.0) ? peak_power / ac_power : 1.0;

    if (rep.captured >= opt.capture) {
        // a spiral still approaching its cycle carries a drifting mean that
        // would masquerade as a DC component; flag it instead of mislabelling
        std::complex<double> m1(0.0, 0.0), m2(0.0, 0.0);
        const std::size_t half = n / 2;
        for (std::size_t i = 0; i < half; ++i) m1 += series[i];
        for (std::size_t i = half; i < n; ++i) m2 += series[i];
        m1 /= static_cast<double>(half);
        m2 /= static_cast<double>(n - half);
        if (vmax > 0.0 && std::abs(m2 - m1) / vmax > opt.dc_drift) {
            rep.label = RegimeLabel::Marginal;
            return rep;
        }
        // an orbit still emerging from an unstable state keeps growing across
        // the window and its leftover exponential tail biases the DC estimate;
        // compare the halves' swing about their own means and flag growth.
        // Decay is left alone: a slow spiral onto a settled structure should
        // be read as that structure at this observation window.
        double r1 = 0.0, r2 = 0.0;
        for (std::size_t i = 0; i < half; ++i) r1 += std::norm(series[i] - m1);
        for (std::size_t i = half; i < n; ++i) r2 += std::norm(series[i] - m2);
        r1 = std::sqrt(r1 / static_cast<double>(half));
        r2 = std::sqrt(r2 / static_cast<double>(n - half));
        if (r2 - r1 > opt.amp_drift * std::max(r1, r2)) {
            rep.label = RegimeLabel::Marginal;
            return rep;
        }
        // estimate the DC level over a whole number of cycle periods so the
        // partial-period bias cannot push a centered cycle over eps_sr
        if (!rep.peaks.empty()) {
            const double period = 2.0 * M_PI / std::abs(rep.peaks[0].frequency);
            const double span_t = static_cast<double>(n) * traj.config.sample_dt;
            const double whole = std::floor(span_t / period) * period;
            const auto span =
                static_cast<std::size_t>(std::llround(whole / traj.config.sample_dt));
            if (span >= 16 && span <= n) {
                std::complex<double> mt(0.0, 0.0);
                for (std::size_t i = n - span; i < n; ++i) mt += series[i];
                mt /= static_cast<double>(span);
                rep.dc_amplitude = (vmax > 0.0) ? std::abs(mt) / vmax : 0.0;
            }
        }
        rep.label = (rep.dc_amplitude < opt.eps_sr) ? RegimeLabel::LimitCycle : RegimeLabel::DSR;
    } else {
        rep.label = RegimeLabel::Broadband;
    }
    return rep;
}

} // namespace nrdicke
