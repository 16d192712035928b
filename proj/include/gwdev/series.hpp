#pragma once

#include <cstddef>
#include <vector>

namespace gwdev {

// Truncated power series with nonnegative coefficients (probability
// generating functions).  Extended-precision accumulators: all coefficients
// are >= 0, so truncation is the only error source.
using Series = std::vector<long double>;  // s[k] = coefficient of x^k

inline std::size_t valuation(const Series& a) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != 0.0L) return i;
  return a.size();
}

// c = a*b truncated to degree K.
inline Series mul_trunc(const Series& a, const Series& b, std::size_t K) {
  Series c(K + 1, 0.0L);
  const std::size_t va = valuation(a), vb = valuation(b);
  for (std::size_t i = va; i < a.size() && i <= K; ++i) {
    if (a[i] == 0.0L) continue;
    const long double ai = a[i];
    const std::size_t jmax = std::min(b.size() - 1, K - i);
    for (std::size_t j = vb; j <= jmax; ++j) c[i + j] += ai * b[j];
  }
  return c;
}

// Composition f(g) where f is a polynomial with coefficients f_coeff[0..D]
// and g has zero constant term.  Horner in g.
inline Series compose_poly(const Series& f_coeff, const Series& g,
                           std::size_t K) {
  Series r(K + 1, 0.0L);
  if (f_coeff.empty()) return r;
  r[0] = f_coeff.back();
  for (std::size_t idx = f_coeff.size() - 1; idx-- > 0;) {
    r = mul_trunc(r, g, K);
    r[0] += f_coeff[idx];
  }
  return r;
}

// Composition of the fractional-linear pgf f(s) = (1-a) s / (1 - a s) with a
// series g (zero constant term): solve h = (1-a) g + a h g by forward
// substitution.
inline Series compose_geometric(long double a, const Series& g, std::size_t K) {
  Series h(K + 1, 0.0L);
  for (std::size_t k = 1; k <= K; ++k) {
    long double v = (k < g.size()) ? (1.0L - a) * g[k] : 0.0L;
    for (std::size_t j = 1; j < k; ++j) {
      const std::size_t gi = k - j;
      if (gi < g.size()) v += a * h[j] * g[gi];
    }
    h[k] = v;
  }
  return h;
}

}  // namespace gwdev
