// Minimal 3-D geometry used across the library: SO(3) exp/log, rigid
// transforms, and symmetric eigendecomposition for 3x3 and 4x4 matrices.

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace limoco {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat32 = Eigen::Matrix<double, 3, 2>;

/// Skew-symmetric matrix such that skew(a) * b = a x b.
inline Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
      -v.y(), v.x(), 0.0;
  return s;
}

/// Rotation matrix of an axis-angle vector (Rodrigues' formula).
/// Small-angle series below 1e-8 rad.
Mat3 so3_exp(const Vec3& omega);

/// Axis-angle vector of a rotation matrix, with norm <= pi.
/// Throws std::invalid_argument if the input is not orthonormal with
/// determinant +1 (tolerance 1e-9).
Vec3 so3_log(const Mat3& r);

/// Right Jacobian of SO(3): Exp(theta + d) ~= Exp(theta) * Exp(Jr(theta) d).
Mat3 so3_right_jacobian(const Vec3& theta);

/// True when r is orthonormal with det +1 within tol.
bool is_rotation(const Mat3& r, double tol = 1e-9);

struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 operator*(const Vec3& p) const { return rotation * p + translation; }

  RigidTransform operator*(const RigidTransform& other) const {
    return {rotation * other.rotation, rotation * other.translation + translation};
  }

  RigidTransform inverse() const {
    Mat3 rt = rotation.transpose();
    return {rt, -(rt * translation)};
  }
};

inline Vec3 transform_point(const RigidTransform& t, const Vec3& p) { return t * p; }

struct SymEig3 {
  Vec3 eigenvalues;   // ascending
  Mat3 eigenvectors;  // unit columns, matching order
};

struct SymEig4 {
  Vec4 eigenvalues;
  Mat4 eigenvectors;
};

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi sweeps.
/// Eigenvalues ascending; each eigenvector's largest-magnitude component is
/// made positive so results are reproducible. Throws std::invalid_argument
/// if the input is not symmetric (1e-12 relative).
SymEig3 eig_sym(const Mat3& m);
SymEig4 eig_sym(const Mat4& m);

}  // namespace limoco
