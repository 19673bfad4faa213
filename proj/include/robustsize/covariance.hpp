#pragma once

#include <functional>
#include <vector>

#include "robustsize/numeric.hpp"

namespace robustsize {

/// Stationary AR(1) correlation parameter, |rho| < 1.
struct Ar1Param {
    explicit Ar1Param(double rho_in);
    double rho;
};

/// AR(2) with complex roots r e^{+-i nu}: 0 < r < 1, 0 < nu < pi.
struct Ar2Param {
    Ar2Param(double r_in, double nu_in);
    double r;
    double nu;
};

/// Positive variances tau_i^2 summing to one.
struct HetWeights {
    explicit HetWeights(Vector tau2_in, double tol = 1e-8);
    Vector tau2;
};

/// Basis of the harmonic direction at angular frequency nu: rows
/// (cos(t nu), sin(t nu)) for t = 1..n; collapses to the single column
/// e+ at nu = 0 and e- = (-1, 1, ..., (-1)^n)' at nu = pi.
struct HarmonicSpace {
    double nu;
    Matrix basis;
};

Vector e_plus(Eigen::Index n);
Vector e_minus(Eigen::Index n);

/// Entries rho^|i-j|. Defined for every rho; singular exactly at |rho| = 1
/// (values |rho| > 1 arise from plugged-in AR(1) coefficient estimates).
Matrix ar1_matrix(Eigen::Index n, double rho);

/// Closed-form tridiagonal inverse of ar1_matrix: diagonal
/// (1, 1+b^2, ..., 1+b^2, 1)/(1-b^2), off-diagonal -b/(1-b^2). Valid for
/// every |rho| != 1, including |rho| > 1.
Matrix ar1_inverse(Eigen::Index n, double rho);

/// Correlation matrix of the stationary AR(2) with phi1 = 2 r cos(nu),
/// phi2 = -r^2, by the order-2 Yule-Walker equations and the lag recursion.
Matrix ar2_matrix(Eigen::Index n, const Ar2Param& param);

HarmonicSpace harmonic_basis(Eigen::Index n, double nu);

Matrix het_matrix(const HetWeights& weights);

/// Limit of P Lambda(rho) P / trace(P Lambda(rho) P) as rho -> endpoint,
/// where P projects off e+ (endpoint +1) or e- (endpoint -1). Closed form:
/// at +1 the core matrix has entries -n|i-j| / sum_{i,j} |i-j|, at -1
/// n (-1)^{|i-j|+1} |i-j| / sum_{i,j} |i-j|, pre- and postmultiplied by P.
Matrix ar1_limit_d(Eigen::Index n, int endpoint);

/// One step of a singular-approach diagnostic: the trace normalization s,
/// the normalized projected matrix, and the cross term toward span(Z).
struct ProbePoint {
    double rho = 0;
    double s = 0;
    Matrix d;
    Matrix cross;
};

/// For each rho: Sigma = sigma_at(rho), P = projector onto span(z_basis)^perp,
/// s = trace(P Sigma P), d = P Sigma P / s, cross = P Sigma P_Z / sqrt(s).
/// Throws exceptional_set_error("degenerate-probe") when s vanishes.
std::vector<ProbePoint> singular_approach_probe(const std::function<Matrix(double)>& sigma_at,
                                                const Matrix& z_basis,
                                                const std::vector<double>& rho_seq,
                                                Tolerances tol = {});

}  // namespace robustsize
