#include "trinorm/geometry.hpp"

#include <algorithm>

namespace trinorm {

double bbox_diagonal(const PointCloud& cloud) {
  cloud.validate();
  Vec3 lo = cloud.points.front();
  Vec3 hi = lo;
  for (const Vec3& p : cloud.points) {
    lo.x = std::min(lo.x, p.x);
    lo.y = std::min(lo.y, p.y);
    lo.z = std::min(lo.z, p.z);
    hi.x = std::max(hi.x, p.x);
    hi.y = std::max(hi.y, p.y);
    hi.z = std::max(hi.z, p.z);
  }
  return norm(hi - lo);
}

}  // namespace trinorm
