#pragma once

#include <complex>
#include <Eigen/Dense>

namespace foldylax {

using Real = double;
using Complex = std::complex<double>;

using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;
using Mat3 = Eigen::Matrix3d;
using CMat3 = Eigen::Matrix3cd;

using VecX = Eigen::VectorXd;
using CVecX = Eigen::VectorXcd;
using MatX = Eigen::MatrixXd;
using CMatX = Eigen::MatrixXcd;

inline constexpr double pi = 3.14159265358979323846264338327950288;
inline constexpr Complex iu{0.0, 1.0};

/// Cross-product matrix [v]_x so that [v]_x w = v x w.
inline Mat3 cross_matrix(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
      -v.y(), v.x(), 0.0;
  return m;
}

inline CMat3 cross_matrix(const CVec3& v) {
  CMat3 m;
  m << Complex(0), -v.z(), v.y(),
       v.z(), Complex(0), -v.x(),
      -v.y(), v.x(), Complex(0);
  return m;
}

}  // namespace foldylax
