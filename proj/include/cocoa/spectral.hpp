#pragma once

#include <cstddef>
#include <vector>

#include "cocoa/record.hpp"
#include "cocoa/similarity.hpp"

namespace cocoa::spectral {

constexpr std::size_t kMaxDimension = 256;
constexpr double kSymmetryTolerance = 1e-9;
constexpr double kOffDiagonalThreshold = 1e-12;
constexpr int kMaxSweeps = 100;

struct LaplacianResult {
    Matrix matrix;
    std::vector<double> eigenvalues;  // ascending
};

// I - D^{-1/2} G D^{-1/2} with D_ii = sum_j g_ij.
Matrix normalized_laplacian(const SimilarityMatrix& g);

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
// Throws std::invalid_argument for non-symmetric or oversized input and
// std::runtime_error if the sweeps fail to converge.
std::vector<double> sym_eigenvalues(const Matrix& a);

LaplacianResult laplacian_spectrum(const SimilarityMatrix& g);

} // namespace cocoa::spectral
