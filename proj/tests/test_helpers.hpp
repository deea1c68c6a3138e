#pragma once

#include <vector>

#include "aois/rng.hpp"
#include "aois/types.hpp"

namespace aois::testing {

inline CMat random_cmat(int rows, int cols, Rng& rng) {
    CMat m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = rng.cgaussian();
    return m;
}

inline CVec random_cvec(int n, Rng& rng) {
    CVec v(n);
    for (int i = 0; i < n; ++i) v[i] = rng.cgaussian();
    return v;
}

inline Vec random_vec(int n, Rng& rng) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = rng.gaussian();
    return v;
}

/// Random Hermitian positive definite matrix A A^H + eps I.
inline CMat random_hpd(int n, Rng& rng, double eps = 0.5) {
    const CMat a = random_cmat(n, n, rng);
    return a * a.adjoint() + eps * CMat::Identity(n, n);
}

}  // namespace aois::testing
