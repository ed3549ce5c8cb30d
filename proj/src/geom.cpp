#include "limoco/geom.hpp"

#include <cmath>
#include <stdexcept>

namespace limoco {

Mat3 so3_exp(const Vec3& omega) {
  const double theta = omega.norm();
  const Mat3 w = skew(omega);
  if (theta < 1e-8) {
    return Mat3::Identity() + w + 0.5 * w * w;
  }
  const double s = std::sin(theta) / theta;
  const double c = (1.0 - std::cos(theta)) / (theta * theta);
  return Mat3::Identity() + s * w + c * w * w;
}

bool is_rotation(const Mat3& r, double tol) {
  const double ortho = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

Vec3 so3_log(const Mat3& r) {
  if (!is_rotation(r)) {
    throw std::invalid_argument("so3_log: input is not a rotation matrix");
  }
  const double cos_theta = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
  const double theta = std::acos(cos_theta);
  const Vec3 axis_raw(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));

  if (theta < 1e-8) {
    // log(R) ~= vee(R - R^T)/2 * (1 + theta^2/6)
    return 0.5 * axis_raw * (1.0 + theta * theta / 6.0);
  }
  if (theta > M_PI - 1e-5) {
    // Near pi the skew part vanishes; recover the axis from R + I, whose
    // columns are all parallel to it.
    const Mat3 b = r + Mat3::Identity();
    int col = 0;
    b.colwise().norm().maxCoeff(&col);
    Vec3 axis = b.col(col).normalized();
    // Fix the sign: prefer agreement with the (possibly tiny) skew part,
    // fall back to making the largest-magnitude component positive.
    if (axis_raw.norm() > 1e-12) {
      if (axis.dot(axis_raw) < 0.0) axis = -axis;
    } else {
      int imax = 0;
      axis.cwiseAbs().maxCoeff(&imax);
      if (axis[imax] < 0.0) axis = -axis;
    }
    return theta * axis;
  }
  return (0.5 * theta / std::sin(theta)) * axis_raw;
}

Mat3 so3_right_jacobian(const Vec3& theta) {
  const double t = theta.norm();
  const Mat3 w = skew(theta);
  if (t < 1e-8) {
    return Mat3::Identity() - 0.5 * w + (1.0 / 6.0) * w * w;
  }
  const double a = (1.0 - std::cos(t)) / (t * t);
  const double b = (t - std::sin(t)) / (t * t * t);
  return Mat3::Identity() - a * w + b * w * w;
}

namespace {

// Cyclic Jacobi sweeps on a symmetric NxN matrix. Converges when the
// off-diagonal Frobenius norm drops below 1e-13 * ||M||_F.
template <int N>
void jacobi_eig(Eigen::Matrix<double, N, N> a,
                Eigen::Matrix<double, N, 1>& values,
                Eigen::Matrix<double, N, N>& vectors) {
  const double scale = a.norm();
  const double tol = 1e-13 * (scale > 0.0 ? scale : 1.0);
  vectors.setIdentity();

  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < N; ++p)
      for (int q = p + 1; q < N; ++q) off += 2.0 * a(p, q) * a(p, q);
    if (std::sqrt(off) < tol) break;

    for (int p = 0; p < N; ++p) {
      for (int q = p + 1; q < N; ++q) {
        if (std::abs(a(p, q)) == 0.0) continue;
        const double app = a(p, p), aqq = a(q, q), apq = a(p, q);
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (int k = 0; k < N; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < N; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < N; ++k) {
          const double vkp = vectors(k, p), vkq = vectors(k, q);
          vectors(k, p) = c * vkp - s * vkq;
          vectors(k, q) = s * vkp + c * vkq;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
      }
    }
  }

  for (int i = 0; i < N; ++i) values[i] = a(i, i);

  // Sort ascending (stable insertion keeps repeated eigenvalues in place).
  for (int i = 1; i < N; ++i) {
    const double v = values[i];
    const Eigen::Matrix<double, N, 1> col = vectors.col(i);
    int j = i - 1;
    while (j >= 0 && values[j] > v) {
      values[j + 1] = values[j];
      vectors.col(j + 1) = vectors.col(j);
      --j;
    }
    values[j + 1] = v;
    vectors.col(j + 1) = col;
  }

  // Sign convention: largest-magnitude component positive.
  for (int i = 0; i < N; ++i) {
    vectors.col(i).normalize();
    int imax = 0;
    vectors.col(i).cwiseAbs().maxCoeff(&imax);
    if (vectors(imax, i) < 0.0) vectors.col(i) = -vectors.col(i);
  }
}

template <int N>
void check_symmetric(const Eigen::Matrix<double, N, N>& m) {
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  const double scale = m.cwiseAbs().maxCoeff();
  if (asym > 1e-12 * (scale > 1.0 ? scale : 1.0)) {
    throw std::invalid_argument("eig_sym: input matrix is not symmetric");
  }
}

}  // namespace

SymEig3 eig_sym(const Mat3& m) {
  check_symmetric<3>(m);
  SymEig3 out;
  jacobi_eig<3>(0.5 * (m + m.transpose()), out.eigenvalues, out.eigenvectors);
  return out;
}

SymEig4 eig_sym(const Mat4& m) {
  check_symmetric<4>(m);
  SymEig4 out;
  jacobi_eig<4>(0.5 * (m + m.transpose()), out.eigenvalues, out.eigenvectors);
  return out;
}

}  // namespace limoco
