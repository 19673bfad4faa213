#pragma once

#include <cmath>

#include "robustsize/covariance.hpp"
#include "robustsize/model.hpp"
#include "robustsize/rng.hpp"

namespace testutil {

using namespace robustsize;

inline LinearModel location_model(Eigen::Index n) { return LinearModel(e_plus(n)); }

inline Restriction location_restriction(double beta0 = 0.0) {
    return Restriction(Matrix::Ones(1, 1), Vector::Constant(1, beta0));
}

/// Intercept plus a step that switches on after t0 (one-based).
inline Matrix change_in_mean_design(Eigen::Index n, Eigen::Index t0) {
    Matrix x(n, 2);
    x.col(0) = e_plus(n);
    for (Eigen::Index t = 0; t < n; ++t) x(t, 1) = (t + 1 > t0) ? 1.0 : 0.0;
    return x;
}

inline Restriction second_coefficient_zero() {
    Matrix r(1, 2);
    r << 0, 1;
    return Restriction(r, Vector::Zero(1));
}

inline Matrix random_design(Eigen::Index n, Eigen::Index k, std::uint64_t seed) {
    auto engine = substream(seed, 0xde51u, 0);
    Matrix x(n, k);
    for (Eigen::Index j = 0; j < k; ++j) {
        Vector col(n);
        fill_standard_normal(engine, col);
        x.col(j) = col;
    }
    return x;
}

inline Vector random_vector(Eigen::Index n, std::uint64_t seed, std::uint64_t index = 0) {
    auto engine = substream(seed, 0x7ec5u, index);
    Vector v(n);
    fill_standard_normal(engine, v);
    return v;
}

}  // namespace testutil
