#include "labelmtl/pca.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace labelmtl::pca {

namespace {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace

Result fit(std::span<const double> data, std::size_t rows, std::size_t dims, std::size_t components) {
  if (rows == 0 || dims == 0) throw std::invalid_argument("pca needs a non-empty matrix");
  if (data.size() != rows * dims) throw std::invalid_argument("pca data size does not match rows x dims");
  if (components == 0) throw std::invalid_argument("pca needs at least one component");

  const Eigen::Map<const Matrix> raw(data.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dims));
  const Matrix centred = raw.rowwise() - raw.colwise().mean();
  const double denom = rows > 1 ? static_cast<double>(rows - 1) : 1.0;

  // Eigenvectors come out in ascending order of eigenvalue.
  Matrix dirs;        // dims x rank, columns are directions
  Eigen::VectorXd vals;
  if (dims <= rows) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es((centred.transpose() * centred) / denom);
    dirs = es.eigenvectors();
    vals = es.eigenvalues();
  } else {
    // Gram trick: X^T u / |X^T u| shares the nonzero spectrum of X^T X.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es((centred * centred.transpose()) / denom);
    vals = es.eigenvalues();
    dirs = centred.transpose() * es.eigenvectors();
    for (Eigen::Index k = 0; k < dirs.cols(); ++k) {
      const double n = dirs.col(k).norm();
      if (n > 1e-12) dirs.col(k) /= n;
      else dirs.col(k).setZero();
    }
  }

  Result r;
  r.rows = rows;
  r.dims = dims;
  r.components = std::min<std::size_t>(components, static_cast<std::size_t>(vals.size()));
  r.directions.assign(r.components * dims, 0.0);
  r.variances.assign(r.components, 0.0);
  r.projections.assign(rows * components, 0.0);
  for (std::size_t k = 0; k < r.components; ++k) {
    const Eigen::Index src = vals.size() - 1 - static_cast<Eigen::Index>(k);
    Eigen::VectorXd v = dirs.col(src);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    r.variances[k] = std::max(0.0, vals(src));
    for (std::size_t d = 0; d < dims; ++d) r.directions[k * dims + d] = v(static_cast<Eigen::Index>(d));
    const Eigen::VectorXd proj = centred * v;
    for (std::size_t i = 0; i < rows; ++i) r.projections[i * components + k] = proj(static_cast<Eigen::Index>(i));
  }
  // Any components past the rank stay at zero so callers always get `components` columns.
  r.components = components;
  r.directions.resize(components * dims, 0.0);
  r.variances.resize(components, 0.0);
  return r;
}

}  // namespace labelmtl::pca
