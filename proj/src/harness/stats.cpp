#include "spmpc/harness.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <numeric>

namespace spmpc::harness {

Summary summarize(const std::vector<double>& x) {
  Summary s;
  s.n = static_cast<int>(x.size());
  if (x.empty()) return s;
  s.mean = std::accumulate(x.begin(), x.end(), 0.0) / s.n;
  if (s.n < 2) {
    s.ci_low = s.ci_high = s.mean;
    return s;
  }
  double ss = 0.0;
  for (double v : x) ss += (v - s.mean) * (v - s.mean);
  s.sd = std::sqrt(ss / (s.n - 1));
  const boost::math::students_t dist(s.n - 1);
  const double half = boost::math::quantile(dist, 0.975) * s.sd / std::sqrt(static_cast<double>(s.n));
  s.ci_low = s.mean - half;
  s.ci_high = s.mean + half;
  return s;
}

TTest welch_t_test_less(const std::vector<double>& a, const std::vector<double>& b) {
  const Summary sa = summarize(a);
  const Summary sb = summarize(b);
  TTest r;
  if (sa.n < 2 || sb.n < 2) return r;
  const double va = sa.sd * sa.sd / sa.n;
  const double vb = sb.sd * sb.sd / sb.n;
  const double se2 = va + vb;
  if (se2 == 0.0) {
    r.t = sa.mean < sb.mean ? -INFINITY : (sa.mean > sb.mean ? INFINITY : 0.0);
    r.p_value = sa.mean < sb.mean ? 0.0 : (sa.mean > sb.mean ? 1.0 : 0.5);
    r.df = sa.n + sb.n - 2;
    return r;
  }
  r.t = (sa.mean - sb.mean) / std::sqrt(se2);
  r.df = se2 * se2 / (va * va / (sa.n - 1) + vb * vb / (sb.n - 1));
  const boost::math::students_t dist(r.df);
  r.p_value = boost::math::cdf(dist, r.t);
  return r;
}

}  // namespace spmpc::harness
