#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include "util.hpp"

namespace nrdicke {

// Two spin ensembles (+/-) coupled to one lossy cavity mode with couplings
// lambda*e^{+i phi} and lambda*e^{-i phi}. Everything is expressed in units
// of the bare spin frequency omega0, and the field is the rescaled
// per-emitter amplitude beta = alpha / sqrt(N).

enum class ModelVariant { Full, Adiabatic, ReducedPlus };

inline constexpr int state_dim(ModelVariant v) {
    switch (v) {
        case ModelVariant::Full: return 8;
        case ModelVariant::Adiabatic: return 6;
        case ModelVariant::ReducedPlus: return 3;
    }
    return 8;
}

inline const char* variant_name(ModelVariant v) {
    switch (v) {
        case ModelVariant::Full: return "full";
        case ModelVariant::Adiabatic: return "adiabatic";
        case ModelVariant::ReducedPlus: return "reduced_plus";
    }
    return "full";
}

struct BlochVector {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    double norm2() const { return x * x + y * y + z * z; }
    double norm() const { return std::sqrt(norm2()); }
};

inline BlochVector operator+(BlochVector a, BlochVector b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline BlochVector operator-(BlochVector a, BlochVector b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline BlochVector operator*(double c, BlochVector a) { return {c * a.x, c * a.y, c * a.z}; }

struct ModelParams {
    double omega0 = 1.0;       // spin splitting, fixed unit
    double omega_l = 20.0;     // cavity detuning
    double kappa = 12.5;       // cavity loss rate
    double lambda = 1.0;       // coupling strength
    double phi = 0.0;          // coupling phase, folded to [-pi, pi)
    double delta = 0.0;        // splitting asymmetry: omega_{+/-} = omega0 +/- delta
    double gamma_down = 0.0;   // single-spin decay

    double omega_plus() const { return omega0 + delta; }
    double omega_minus() const { return omega0 - delta; }

    // Folds phi into [-pi, pi) and rejects out-of-domain fields. Call after
    // any direct field assignment; all factory paths do.
    void normalize() {
        auto bad = [](const char* name) {
            throw std::invalid_argument(std::string("ModelParams: invalid ") + name);
        };
        if (!std::isfinite(omega0) || omega0 != 1.0) bad("omega0 (must be 1)");
        if (!std::isfinite(omega_l) || omega_l < 0.0) bad("omega_l");
        if (!std::isfinite(kappa) || kappa < 0.0) bad("kappa");
        if (!std::isfinite(lambda) || lambda < 0.0) bad("lambda");
        if (!std::isfinite(phi)) bad("phi");
        if (!std::isfinite(delta)) bad("delta");
        if (!std::isfinite(gamma_down) || gamma_down < 0.0) bad("gamma_down");
        constexpr double two_pi = 2.0 * M_PI;
        phi -= two_pi * std::floor((phi + M_PI) / two_pi);
        if (phi >= M_PI) phi -= two_pi;
    }

    ModelParams with(double new_lambda, double new_phi) const {
        ModelParams q = *this;
        q.lambda = new_lambda;
        q.phi = new_phi;
        q.normalize();
        return q;
    }
};

// Parameter map that makes the parity-time swap an exact symmetry of the flow.
inline ModelParams pt_param_map(ModelParams p) {
    p.phi = -p.phi;
    p.delta = -p.delta;
    p.normalize();
    return p;
}

struct SystemState {
    BlochVector plus;
    BlochVector minus;
    std::complex<double> field;

    std::array<double, 8> to_array() const {
        return {plus.x, plus.y, plus.z, minus.x, minus.y, minus.z,
                field.real(), field.imag()};
    }

    static SystemState from_array(const std::array<double, 8>& a) {
        return {{a[0], a[1], a[2]}, {a[3], a[4], a[5]}, {a[6], a[7]}};
    }
};

inline SystemState np_state() {
    return {{0.0, 0.0, -1.0}, {0.0, 0.0, -1.0}, {0.0, 0.0}};
}

// Both transmitters down, all coherences flipped: the Z2 image of a state.
inline SystemState parity_transform(SystemState s) {
    s.plus.x = -s.plus.x;
    s.plus.y = -s.plus.y;
    s.minus.x = -s.minus.x;
    s.minus.y = -s.minus.y;
    s.field = -s.field;
    return s;
}

// Species swap; the field is shared and stays put. Combined with
// pt_param_map this commutes with the flow.
inline SystemState pt_transform(SystemState s) {
    std::swap(s.plus, s.minus);
    return s;
}

inline double max_norm_distance(const SystemState& a, const SystemState& b) {
    auto xa = a.to_array(), xb = b.to_array();
    double d = 0.0;
    for (int i = 0; i < 8; ++i) d = std::max(d, std::abs(xa[i] - xb[i]));
    return d;
}

// ---- full equations of motion ----

inline SystemState full_rhs(const SystemState& s, const ModelParams& p) {
    const double cphi = std::cos(p.phi), sphi = std::sin(p.phi);
    const double u = s.field.real(), v = s.field.imag();
    const double f_plus = 2.0 * (u * cphi + v * sphi);    // 2 Re(beta e^{-i phi})
    const double f_minus = 2.0 * (u * cphi - v * sphi);   // 2 Re(beta e^{+i phi})
    const double hg = 0.5 * p.gamma_down;

    SystemState d;
    d.plus.x = -p.omega_plus() * s.plus.y - hg * s.plus.x;
    d.plus.y = p.omega_plus() * s.plus.x - hg * s.plus.y - p.lambda * s.plus.z * f_plus;
    d.plus.z = -p.gamma_down * (s.plus.z + 1.0) + p.lambda * s.plus.y * f_plus;

    d.minus.x = -p.omega_minus() * s.minus.y - hg * s.minus.x;
    d.minus.y = p.omega_minus() * s.minus.x - hg * s.minus.y - p.lambda * s.minus.z * f_minus;
    d.minus.z = -p.gamma_down * (s.minus.z + 1.0) + p.lambda * s.minus.y * f_minus;

    const std::complex<double> i_unit(0.0, 1.0);
    const std::complex<double> drive =
        s.plus.x * std::complex<double>(cphi, sphi) +
        s.minus.x * std::complex<double>(cphi, -sphi);
    d.field = -(i_unit * p.omega_l + 0.5 * p.kappa) * s.field -
              i_unit * (0.5 * p.lambda) * drive;
    return d;
}

// ---- adiabatic elimination of the field ----

struct CouplingConstants {
    std::complex<double> response;  // 1 / (i omega_l + kappa/2)
    double phi_l;                   // response phase, atan2(2 omega_l, kappa)
    double xi;                      // intra-species shift
    double chi_plus;                // + species feels chi_plus * sx_minus
    double chi_minus;
};

inline double field_denominator(const ModelParams& p) {
    return p.omega_l * p.omega_l + 0.25 * p.kappa * p.kappa;
}

inline CouplingConstants adiabatic_coefficients(const ModelParams& p) {
    const double dnm = field_denominator(p);
    if (dnm <= 0.0)
        throw std::domain_error("adiabatic_coefficients: omega_l = kappa = 0 has no field steady state");
    CouplingConstants c;
    c.response = 1.0 / std::complex<double>(0.5 * p.kappa, p.omega_l);
    c.phi_l = std::atan2(2.0 * p.omega_l, p.kappa);
    const double l2 = p.lambda * p.lambda;
    const double c2 = std::cos(2.0 * p.phi), s2 = std::sin(2.0 * p.phi);
    c.xi = l2 * p.omega_l / dnm;
    c.chi_plus = -l2 * (p.omega_l * c2 + 0.5 * p.kappa * s2) / dnm;
    c.chi_minus = -l2 * (p.omega_l * c2 - 0.5 * p.kappa * s2) / dnm;
    return c;
}

inline std::complex<double> enslaved_field(const BlochVector& plus, const BlochVector& minus,
                                           const ModelParams& p) {
    if (field_denominator(p) <= 0.0)
        throw std::domain_error("enslaved_field: omega_l = kappa = 0 has no field steady state");
    const std::complex<double> i_unit(0.0, 1.0);
    const std::complex<double> drive =
        plus.x * std::exp(i_unit * p.phi) + minus.x * std::exp(-i_unit * p.phi);
    return -i_unit * (0.5 * p.lambda) * drive / std::complex<double>(0.5 * p.kappa, p.omega_l);
}

// Spin-only flow with the field pinned to its steady value. Matches
// full_rhs evaluated at enslaved_field exactly (not just to leading order).
inline std::pair<BlochVector, BlochVector> adiabatic_rhs(const BlochVector& sp, const BlochVector& sm,
                                                         const ModelParams& p) {
    const CouplingConstants c = adiabatic_coefficients(p);
    const double q_plus = c.xi * sp.x - c.chi_plus * sm.x;
    const double q_minus = c.xi * sm.x - c.chi_minus * sp.x;
    const double hg = 0.5 * p.gamma_down;

    BlochVector dp, dm;
    dp.x = -p.omega_plus() * sp.y - hg * sp.x;
    dp.y = p.omega_plus() * sp.x - hg * sp.y + q_plus * sp.z;
    dp.z = -p.gamma_down * (sp.z + 1.0) - q_plus * sp.y;

    dm.x = -p.omega_minus() * sm.y - hg * sm.x;
    dm.y = p.omega_minus() * sm.x - hg * sm.y + q_minus * sm.z;
    dm.z = -p.gamma_down * (sm.z + 1.0) - q_minus * sm.y;
    return {dp, dm};
}

// ---- single-species reduction on the balanced line delta = gamma_down = 0 ----

// Effective nonlinear precession constant; the cross coupling cancels the
// self coupling up to this term.
inline double reduced_plus_constant(const ModelParams& p) {
    if (p.omega_l <= 0.0)
        throw std::domain_error("reduced_plus_constant: needs omega_l > 0");
    const double s2 = std::sin(2.0 * p.phi);
    return p.lambda * p.lambda * s2 * s2 / (2.0 * p.omega_l);
}

inline BlochVector reduced_plus_rhs(const BlochVector& s, const ModelParams& p) {
    const double k = reduced_plus_constant(p);
    BlochVector d;
    d.x = -p.omega0 * s.y;
    d.y = p.omega0 * s.x + k * s.x * s.z;
    d.z = -k * s.x * s.y;
    return d;
}

// |beta| / |sx_plus| for the reduced flow's implied field.
inline double reduced_field_ratio(const ModelParams& p) {
    if (p.omega_l <= 0.0)
        throw std::domain_error("reduced_field_ratio: needs omega_l > 0");
    return p.lambda * std::abs(std::sin(2.0 * p.phi)) / (2.0 * p.omega_l);
}

// ---- variant-agnostic packing for the integrator ----

inline void pack_state(ModelVariant v, const SystemState& s, double* x) {
    switch (v) {
        case ModelVariant::Full:
            x[0] = s.plus.x; x[1] = s.plus.y; x[2] = s.plus.z;
            x[3] = s.minus.x; x[4] = s.minus.y; x[5] = s.minus.z;
            x[6] = s.field.real(); x[7] = s.field.imag();
            break;
        case ModelVariant::Adiabatic:
            x[0] = s.plus.x; x[1] = s.plus.y; x[2] = s.plus.z;
            x[3] = s.minus.x; x[4] = s.minus.y; x[5] = s.minus.z;
            break;
        case ModelVariant::ReducedPlus:
            x[0] = s.plus.x; x[1] = s.plus.y; x[2] = s.plus.z;
            break;
    }
}

// Spin-only variants carry no field of their own; they unpack with beta = 0,
// and the reduced variant parks the untracked species at its down state.
inline SystemState unpack_state(ModelVariant v, const double* x) {
    SystemState s;
    switch (v) {
        case ModelVariant::Full:
            s.plus = {x[0], x[1], x[2]};
            s.minus = {x[3], x[4], x[5]};
            s.field = {x[6], x[7]};
            break;
        case ModelVariant::Adiabatic:
            s.plus = {x[0], x[1], x[2]};
            s.minus = {x[3], x[4], x[5]};
            s.field = {0.0, 0.0};
            break;
        case ModelVariant::ReducedPlus:
            s.plus = {x[0], x[1], x[2]};
            s.minus = {0.0, 0.0, -1.0};
            s.field = {0.0, 0.0};
            break;
    }
    return s;
}

inline void variant_rhs(ModelVariant v, const ModelParams& p, const double* x, double* dx) {
    switch (v) {
        case ModelVariant::Full: {
            SystemState d = full_rhs(SystemState::from_array(
                {x[0], x[1], x[2], x[3], x[4], x[5], x[6], x[7]}), p);
            auto a = d.to_array();
            for (int i = 0; i < 8; ++i) dx[i] = a[i];
            break;
        }
        case ModelVariant::Adiabatic: {
            auto [dp, dm] = adiabatic_rhs({x[0], x[1], x[2]}, {x[3], x[4], x[5]}, p);
            dx[0] = dp.x; dx[1] = dp.y; dx[2] = dp.z;
            dx[3] = dm.x; dx[4] = dm.y; dx[5] = dm.z;
            break;
        }
        case ModelVariant::ReducedPlus: {
            BlochVector d = reduced_plus_rhs({x[0], x[1], x[2]}, p);
            dx[0] = d.x; dx[1] = d.y; dx[2] = d.z;
            break;
        }
    }
}

inline BlochVector random_bloch(SplitMix64& rng) {
    const double z = rng.uniform(-1.0, 1.0);
    const double th = rng.uniform(0.0, 2.0 * M_PI);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {r * std::cos(th), r * std::sin(th), z};
}

} // namespace nrdicke
