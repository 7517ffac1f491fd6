#include "cocoa/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace cocoa::spectral {

Matrix normalized_laplacian(const SimilarityMatrix& g) {
    const std::size_t n = g.size();
    std::vector<double> inv_sqrt_deg(n);
    for (std::size_t i = 0; i < n; ++i) {
        double d = 0.0;
        for (std::size_t j = 0; j < n; ++j) d += g(i, j);
        inv_sqrt_deg[i] = 1.0 / std::sqrt(d);
    }
    Matrix l(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            const double v = (i == j ? 1.0 : 0.0) - inv_sqrt_deg[i] * g(i, j) * inv_sqrt_deg[j];
            l(i, j) = v;
            l(j, i) = v;
        }
    }
    return l;
}

std::vector<double> sym_eigenvalues(const Matrix& input) {
    const std::size_t n = input.size();
    if (n > kMaxDimension)
        throw std::invalid_argument("sym_eigenvalues: dimension " + std::to_string(n) + " exceeds " +
                                    std::to_string(kMaxDimension));
    double scale = 1.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) scale = std::max(scale, std::abs(input(i, j)));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(input(i, j) - input(j, i)) > kSymmetryTolerance * scale)
                throw std::invalid_argument("sym_eigenvalues: matrix is not symmetric");

    Matrix a = input;
    auto max_off = [&] {
        double m = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) m = std::max(m, std::abs(a(i, j)));
        return m;
    };

    bool converged = max_off() < kOffDiagonalThreshold;
    for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                // Rotation angle from the stable tangent formula.
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
            }
        }
        converged = max_off() < kOffDiagonalThreshold * scale;
    }
    if (!converged)
        throw std::runtime_error("sym_eigenvalues: no convergence after " + std::to_string(kMaxSweeps) + " sweeps");

    std::vector<double> eig(n);
    for (std::size_t i = 0; i < n; ++i) eig[i] = a(i, i);
    std::sort(eig.begin(), eig.end());
    return eig;
}

LaplacianResult laplacian_spectrum(const SimilarityMatrix& g) {
    LaplacianResult r{normalized_laplacian(g), {}};
    r.eigenvalues = sym_eigenvalues(r.matrix);
    return r;
}

} // namespace cocoa::spectral
