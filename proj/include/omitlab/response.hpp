#pragma once

// First-order probe response of the driven cavity: sideband amplitudes a+ / a-
// at omega_p and 2 omega_c - omega_p, the output-field quadratures and the
// transmitted field.

#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Dense>

#include "omitlab/errors.hpp"
#include "omitlab/model.hpp"

namespace omitlab {

using cplx = std::complex<double>;

/// Mechanical susceptibility denominator omega^2 - Delta^2 - i gamma Delta.
inline cplx lambda_j(double delta, double omega_phi, double gamma) {
    return {omega_phi * omega_phi - delta * delta, -gamma * delta};
}

/// Pieces of the closed form, generic over the scalar so the same expression
/// can be evaluated at complex (or hypercomplex) probe detuning.
template <class T>
struct ClosedFormTerms {
    T A;         // kappa - i (Delta' + Delta)
    T A_prime;   // kappa + i (Delta' - Delta)
    T lambda1;
    T lambda2;
    T coupling;  // G1^2 w1 Lambda2 + G2^2 w2 Lambda1
    T numerator; // A Lambda1 Lambda2 + i coupling
    T d;         // A A' Lambda1 Lambda2 - 2 Delta' coupling
};

template <class T>
ClosedFormTerms<T> closed_form_terms(const EffectiveParams& ep, const T& delta) {
    const T i{cplx(0.0, 1.0)};
    ClosedFormTerms<T> t;
    t.A = T{cplx(ep.kappa)} - i * (T{cplx(ep.delta_prime)} + delta);
    t.A_prime = T{cplx(ep.kappa)} + i * (T{cplx(ep.delta_prime)} - delta);
    t.lambda1 = T{cplx(ep.omega_phi1 * ep.omega_phi1)} - delta * delta
              - i * T{cplx(ep.gamma1)} * delta;
    t.lambda2 = T{cplx(ep.omega_phi2 * ep.omega_phi2)} - delta * delta
              - i * T{cplx(ep.gamma2)} * delta;
    t.coupling = T{cplx(ep.G1 * ep.G1 * ep.omega_phi1)} * t.lambda2
               + T{cplx(ep.G2 * ep.G2 * ep.omega_phi2)} * t.lambda1;
    t.numerator = t.A * t.lambda1 * t.lambda2 + i * t.coupling;
    t.d = t.A * t.A_prime * t.lambda1 * t.lambda2 - T{cplx(2.0 * ep.delta_prime)} * t.coupling;
    return t;
}

/// a+ as a holomorphic function of the probe detuning.
template <class T>
T a_plus_closed_form(const EffectiveParams& ep, const T& delta) {
    const auto t = closed_form_terms(ep, delta);
    return t.numerator / t.d;
}

struct SidebandAmplitudes {
    cplx a_plus;
    cplx a_minus;
    cplx d_delta;
    Flag flag = Flag::Ok;
};

/// Phase factor a0^2 / |a0|^2, defined as 1 for an empty cavity.
inline cplx pump_phase_factor(cplx a0) {
    const double n = std::norm(a0);
    return n == 0.0 ? cplx(1.0) : a0 * a0 / n;
}

/// Closed-form sideband amplitudes. The Stokes amplitude carries the complex
/// conjugate of the coupling term: a- = i (a0^2/|a0|^2) conj(coupling) / conj(d).
inline SidebandAmplitudes sideband_amplitudes(const EffectiveParams& ep, cplx a0, double delta) {
    const auto t = closed_form_terms(ep, cplx(delta));
    SidebandAmplitudes s;
    s.d_delta = t.d;
    const double scale = std::abs(t.A * t.A_prime * t.lambda1 * t.lambda2);
    if (!(std::abs(t.d) >= 1e-30 * scale) || t.d == cplx(0.0)) {
        s.flag = Flag::DegenerateDenominator;
        s.a_plus = s.a_minus = cplx(std::nan(""), std::nan(""));
        return s;
    }
    s.a_plus = t.numerator / t.d;
    const cplx i(0.0, 1.0);
    s.a_minus = pump_phase_factor(a0) * i * std::conj(t.coupling) / std::conj(t.d);
    return s;
}

/// d a+ / d Delta by exact differentiation of the closed form.
inline cplx a_plus_derivative(const EffectiveParams& ep, double delta) {
    const auto t = closed_form_terms(ep, cplx(delta));
    const cplx i(0.0, 1.0);
    const cplx dA(0.0, -1.0);
    const cplx dA_prime(0.0, -1.0);
    const cplx dL1(-2.0 * delta, -ep.gamma1);
    const cplx dL2(-2.0 * delta, -ep.gamma2);
    const cplx dcoupling = ep.G1 * ep.G1 * ep.omega_phi1 * dL2 + ep.G2 * ep.G2 * ep.omega_phi2 * dL1;
    const cplx dnum = dA * t.lambda1 * t.lambda2 + t.A * (dL1 * t.lambda2 + t.lambda1 * dL2)
                    + i * dcoupling;
    const cplx dd = (dA * t.A_prime + t.A * dA_prime) * t.lambda1 * t.lambda2
                  + t.A * t.A_prime * (dL1 * t.lambda2 + t.lambda1 * dL2)
                  - 2.0 * ep.delta_prime * dcoupling;
    return (dnum * t.d - t.numerator * dd) / (t.d * t.d);
}

/// Sideband amplitudes from a dense solve of the linearised equations of
/// motion. Unknowns: [phi1+, phi2+, Lz1+, Lz2+, a+, phi1-*, phi2-*, Lz1-*,
/// Lz2-*, a-*]; rows match the e^{-i Delta t} terms and the conjugated
/// e^{+i Delta t} terms. Couplings enter as g_j a0 = G_j e^{i theta}.
inline SidebandAmplitudes sideband_linear_solve(const EffectiveParams& ep, cplx a0, double delta) {
    using Mat = Eigen::Matrix<cplx, 10, 10>;
    using Vec = Eigen::Matrix<cplx, 10, 1>;
    const cplx i(0.0, 1.0);
    const cplx phase = std::abs(a0) == 0.0 ? cplx(1.0) : a0 / std::abs(a0);
    const double omega[2] = {ep.omega_phi1, ep.omega_phi2};
    const double gamma[2] = {ep.gamma1, ep.gamma2};
    const double G[2] = {ep.G1, ep.G2};
    const double sign[2] = {-1.0, 1.0}; // g_alpha1 = -g1, g_alpha2 = +g2

    Mat M = Mat::Zero();
    Vec rhs = Vec::Zero();
    for (int j = 0; j < 2; ++j) {
        // -i Delta phi+ = omega Lz+
        M(j, j) = -i * delta;
        M(j, 2 + j) = -omega[j];
        // -i Delta Lz+ = -omega phi+ + g_alpha (a0* a+ + a0 a-*) - gamma Lz+
        M(2 + j, 2 + j) = -i * delta + gamma[j];
        M(2 + j, j) = omega[j];
        M(2 + j, 4) = -sign[j] * G[j] * std::conj(phase);
        M(2 + j, 9) = -sign[j] * G[j] * phase;
        // conjugated lower-sideband rows, same structure
        M(5 + j, 5 + j) = -i * delta;
        M(5 + j, 7 + j) = -omega[j];
        M(7 + j, 7 + j) = -i * delta + gamma[j];
        M(7 + j, 5 + j) = omega[j];
        M(7 + j, 9) = -sign[j] * G[j] * phase;
        M(7 + j, 4) = -sign[j] * G[j] * std::conj(phase);
    }
    // -i Delta a+ = -i Delta' a+ - kappa a+ - i a0 (g1 phi1+ - g2 phi2+) + 1
    M(4, 4) = -i * delta + i * ep.delta_prime + ep.kappa;
    M(4, 0) = i * phase * G[0];
    M(4, 1) = -i * phase * G[1];
    rhs(4) = 1.0;
    // -i Delta a-* = i Delta' a-* - kappa a-* + i a0* (g1 phi1-* - g2 phi2-*)
    M(9, 9) = -i * delta - i * ep.delta_prime + ep.kappa;
    M(9, 5) = -i * std::conj(phase) * G[0];
    M(9, 6) = i * std::conj(phase) * G[1];

    SidebandAmplitudes s;
    const Eigen::FullPivLU<Mat> lu(M);
    if (!lu.isInvertible()) {
        s.flag = Flag::SingularSystem;
        s.a_plus = s.a_minus = cplx(std::nan(""), std::nan(""));
        return s;
    }
    const Vec x = lu.solve(rhs);
    s.a_plus = x(4);
    s.a_minus = std::conj(x(9));
    s.d_delta = closed_form_terms(ep, cplx(delta)).d;
    return s;
}

struct ProbeResponse {
    cplx eps_T;         // 2 kappa a+ = nu_p + i u_p
    double nu_p = 0.0;  // absorption
    double u_p = 0.0;   // dispersion
    cplx eps_out_plus;  // eps_T - 1
    cplx eps_out_minus; // 2 kappa a- (Stokes)
    cplx t_p;           // 1 - eps_T
    double phase = 0.0; // arg t_p in (-pi, pi]
    Flag flag = Flag::Ok;
};

/// arg z mapped to (-pi, pi].
inline double principal_arg(cplx z) {
    const double a = std::arg(z);
    return a <= -std::numbers::pi ? std::numbers::pi : a;
}

inline ProbeResponse probe_response(const EffectiveParams& ep, cplx a0, double delta) {
    const SidebandAmplitudes s = sideband_amplitudes(ep, a0, delta);
    ProbeResponse r;
    r.flag = s.flag;
    r.eps_T = 2.0 * ep.kappa * s.a_plus;
    r.nu_p = r.eps_T.real();
    r.u_p = r.eps_T.imag();
    r.eps_out_plus = r.eps_T - 1.0;
    r.eps_out_minus = 2.0 * ep.kappa * s.a_minus;
    r.t_p = 1.0 - r.eps_T;
    r.phase = principal_arg(r.t_p);
    return r;
}

/// Output-field component at omega_c: 2 kappa a0 - eps_c.
inline cplx output_carrier(double kappa, cplx a0, double eps_c) {
    return 2.0 * kappa * a0 - eps_c;
}

} // namespace omitlab
