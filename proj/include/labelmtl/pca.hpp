#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace labelmtl::pca {

struct Result {
  std::size_t rows = 0;
  std::size_t dims = 0;
  std::size_t components = 0;
  std::vector<double> directions;  // components x dims, unit rows
  std::vector<double> variances;   // per component, descending
  std::vector<double> projections; // rows x components, of the mean-centred data
};

// Top principal components of a row-major [rows x dims] matrix. The
// eigenproblem is solved on whichever of the covariance or the Gram matrix is
// smaller. Each direction's largest-magnitude coordinate is made positive.
Result fit(std::span<const double> data, std::size_t rows, std::size_t dims, std::size_t components = 2);

}  // namespace labelmtl::pca
