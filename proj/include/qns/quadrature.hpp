#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>

#include "qns/errors.hpp"

namespace qns {

// Order-fixed pairwise summation: deterministic and accurate independent of
// the caller's accumulation habits. Used by the radial quadratures so that
// reruns are bitwise identical.
template <typename Scalar>
Scalar pairwise_sum(const Scalar* data, Eigen::Index n) {
  if (n == 0) return Scalar(0);
  if (n <= 8) {
    Scalar s = data[0];
    for (Eigen::Index i = 1; i < n; ++i) s += data[i];
    return s;
  }
  const Eigen::Index half = n / 2;
  return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}

template <typename Derived>
typename Derived::Scalar pairwise_sum(const Eigen::ArrayBase<Derived>& a) {
  Eigen::Array<typename Derived::Scalar, Eigen::Dynamic, 1> tmp = a;
  return pairwise_sum(tmp.data(), tmp.size());
}

namespace detail {
template <typename Scalar, typename F>
Scalar adaptive_simpson(const F& f, Scalar a, Scalar b, Scalar fa, Scalar fm, Scalar fb,
                        Scalar whole, Scalar tol, int depth) {
  const Scalar m = (a + b) / 2;
  const Scalar lm = (a + m) / 2, rm = (m + b) / 2;
  const Scalar flm = f(lm), frm = f(rm);
  const Scalar left = (m - a) / 6 * (fa + 4 * flm + fm);
  const Scalar right = (b - m) / 6 * (fm + 4 * frm + fb);
  const Scalar delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15 * tol)
    return left + right + delta / 15;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}
}  // namespace detail

// Adaptive Simpson quadrature of f over [a, b] to absolute tolerance tol.
template <typename Scalar, typename F>
Scalar integrate(const F& f, Scalar a, Scalar b, Scalar tol = Scalar(1e-10),
                 int max_depth = 40) {
  if (!(b >= a)) throw DomainError("integration interval must have b >= a");
  if (a == b) return Scalar(0);
  const Scalar fa = f(a), fb = f(b), fm = f((a + b) / 2);
  const Scalar whole = (b - a) / 6 * (fa + 4 * fm + fb);
  return detail::adaptive_simpson<Scalar, F>(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

}  // namespace qns
