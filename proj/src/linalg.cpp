#include "trinorm/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace trinorm {

Sym3 covariance3(std::span<const Vec3> pts) {
  Vec3 mean{0, 0, 0};
  for (const Vec3& p : pts) mean = mean + p;
  mean = mean / static_cast<double>(pts.size());
  Sym3 c{0, 0, 0, 0, 0, 0};
  for (const Vec3& p : pts) {
    const Vec3 d = p - mean;
    c[0] += d.x * d.x;
    c[1] += d.x * d.y;
    c[2] += d.x * d.z;
    c[3] += d.y * d.y;
    c[4] += d.y * d.z;
    c[5] += d.z * d.z;
  }
  const double inv = 1.0 / static_cast<double>(pts.size());
  for (double& v : c) v *= inv;
  return c;
}

SymEig3 eig33_sym(const Sym3& packed) {
  double a[3][3] = {{packed[0], packed[1], packed[2]},
                    {packed[1], packed[3], packed[4]},
                    {packed[2], packed[4], packed[5]}};
  double v[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};

  for (int sweep = 0; sweep < 64; ++sweep) {
    const double off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
    if (off == 0.0) break;
    static constexpr int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
    for (const auto& pq : pairs) {
      const int p = pq[0], q = pq[1];
      const double apq = a[p][q];
      if (apq == 0.0) continue;
      const double theta = (a[q][q] - a[p][p]) / (2.0 * apq);
      const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
      const double c = 1.0 / std::sqrt(t * t + 1.0);
      const double s = t * c;
      const double tau = s / (1.0 + c);
      const double app = a[p][p], aqq = a[q][q];
      a[p][p] = app - t * apq;
      a[q][q] = aqq + t * apq;
      a[p][q] = 0.0;
      a[q][p] = 0.0;
      for (int r = 0; r < 3; ++r) {
        if (r == p || r == q) continue;
        const double arp = a[r][p], arq = a[r][q];
        a[r][p] = arp - s * (arq + tau * arp);
        a[p][r] = a[r][p];
        a[r][q] = arq + s * (arp - tau * arq);
        a[q][r] = a[r][q];
      }
      for (int r = 0; r < 3; ++r) {
        const double vrp = v[r][p], vrq = v[r][q];
        v[r][p] = vrp - s * (vrq + tau * vrp);
        v[r][q] = vrq + s * (vrp - tau * vrq);
      }
    }
  }

  int order[3] = {0, 1, 2};
  const double eig[3] = {a[0][0], a[1][1], a[2][2]};
  std::sort(order, order + 3, [&](int i, int j) {
    if (eig[i] != eig[j]) return eig[i] > eig[j];
    return i < j;
  });

  SymEig3 out;
  for (int k = 0; k < 3; ++k) {
    const int c = order[k];
    out.values[k] = eig[c];
    out.vectors[k] = {v[0][c], v[1][c], v[2][c]};
  }
  return out;
}

}  // namespace trinorm
