#include "trinorm/spatial_index.hpp"

#include <algorithm>
#include <numeric>
#include <queue>

#include "trinorm/kernels.hpp"

namespace trinorm {
namespace {

constexpr std::uint32_t kLeafSize = 16;

struct HeapEntry {
  double d2;
  std::uint32_t idx;
  bool operator<(const HeapEntry& o) const {
    if (d2 != o.d2) return d2 < o.d2;
    return idx < o.idx;
  }
};

}  // namespace

SpatialIndex::SpatialIndex(const PointCloud& cloud) {
  cloud.validate();
  const std::size_t n = cloud.points.size();
  std::vector<std::uint32_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0u);

  // Build over a temporary AoS view, then freeze into tree-order SoA.
  struct Builder {
    const PointCloud& cloud;
    std::vector<std::uint32_t>& perm;
    std::vector<Node>& nodes;

    double coord(std::uint32_t i, int axis) const {
      const Vec3& p = cloud.points[perm[i]];
      return axis == 0 ? p.x : axis == 1 ? p.y : p.z;
    }

    std::int32_t build(std::uint32_t begin, std::uint32_t end) {
      Node node;
      node.begin = begin;
      node.end = end;
      if (end - begin <= kLeafSize) {
        nodes.push_back(node);
        return static_cast<std::int32_t>(nodes.size() - 1);
      }
      Vec3 lo = cloud.points[perm[begin]], hi = lo;
      for (std::uint32_t i = begin; i < end; ++i) {
        const Vec3& p = cloud.points[perm[i]];
        lo.x = std::min(lo.x, p.x); hi.x = std::max(hi.x, p.x);
        lo.y = std::min(lo.y, p.y); hi.y = std::max(hi.y, p.y);
        lo.z = std::min(lo.z, p.z); hi.z = std::max(hi.z, p.z);
      }
      const Vec3 ext = hi - lo;
      int axis = 0;
      if (ext.y > ext.x) axis = 1;
      if (ext.z > (axis == 0 ? ext.x : ext.y)) axis = 2;
      const std::uint32_t mid = begin + (end - begin) / 2;
      std::nth_element(perm.begin() + begin, perm.begin() + mid, perm.begin() + end,
                       [&](std::uint32_t a, std::uint32_t b) {
                         const double ca = axis == 0 ? cloud.points[a].x : axis == 1 ? cloud.points[a].y : cloud.points[a].z;
                         const double cb = axis == 0 ? cloud.points[b].x : axis == 1 ? cloud.points[b].y : cloud.points[b].z;
                         if (ca != cb) return ca < cb;
                         return a < b;
                       });
      node.axis = axis;
      node.split = coord(mid, axis);
      const std::size_t self = nodes.size();
      nodes.push_back(node);
      const std::int32_t left = build(begin, mid);
      const std::int32_t right = build(mid, end);
      nodes[self].left = left;
      nodes[self].right = right;
      return static_cast<std::int32_t>(self);
    }
  };

  nodes_.reserve(2 * n / kLeafSize + 2);
  Builder b{cloud, perm, nodes_};
  root_ = b.build(0, static_cast<std::uint32_t>(n));

  xs_.resize(n);
  ys_.resize(n);
  zs_.resize(n);
  idx_ = std::move(perm);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& p = cloud.points[idx_[i]];
    xs_[i] = p.x;
    ys_[i] = p.y;
    zs_[i] = p.z;
  }
}

std::vector<std::uint32_t> SpatialIndex::ball_query(const Vec3& center, double radius) const {
  if (!(radius > 0.0)) throw DataError("ball_query radius must be positive");
  const double r2 = radius * radius;
  const auto& k = kernels::ops();
  std::vector<std::uint32_t> out;
  std::vector<std::int32_t> stack{root_};
  double buf[kLeafSize];
  while (!stack.empty()) {
    const Node& node = nodes_[static_cast<std::size_t>(stack.back())];
    stack.pop_back();
    if (node.axis < 0) {
      const std::uint32_t count = node.end - node.begin;
      k.sq_dist_batch(xs_.data() + node.begin, ys_.data() + node.begin, zs_.data() + node.begin,
                      count, center.x, center.y, center.z, buf);
      for (std::uint32_t j = 0; j < count; ++j) {
        if (buf[j] < r2) out.push_back(idx_[node.begin + j]);
      }
      continue;
    }
    const double c = node.axis == 0 ? center.x : node.axis == 1 ? center.y : center.z;
    if (c <= node.split || (c - node.split) * (c - node.split) < r2) stack.push_back(node.left);
    if (c >= node.split || (node.split - c) * (node.split - c) < r2) stack.push_back(node.right);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::uint32_t> SpatialIndex::knn_query(const Vec3& center, std::size_t k) const {
  if (k < 1 || k > idx_.size()) {
    throw DataError("knn_query: k=" + std::to_string(k) + " out of range for cloud of " +
                    std::to_string(idx_.size()) + " points");
  }
  const auto& ops = kernels::ops();
  std::priority_queue<HeapEntry> heap;
  double buf[kLeafSize];

  // Recursive near-side-first descent with worst-distance pruning.
  auto visit = [&](auto&& self, std::int32_t id) -> void {
    const Node& node = nodes_[static_cast<std::size_t>(id)];
    if (node.axis < 0) {
      const std::uint32_t count = node.end - node.begin;
      ops.sq_dist_batch(xs_.data() + node.begin, ys_.data() + node.begin, zs_.data() + node.begin,
                        count, center.x, center.y, center.z, buf);
      for (std::uint32_t j = 0; j < count; ++j) {
        const HeapEntry e{buf[j], idx_[node.begin + j]};
        if (heap.size() < k) {
          heap.push(e);
        } else if (e < heap.top()) {
          heap.pop();
          heap.push(e);
        }
      }
      return;
    }
    const double c = node.axis == 0 ? center.x : node.axis == 1 ? center.y : center.z;
    const std::int32_t near = c <= node.split ? node.left : node.right;
    const std::int32_t far = c <= node.split ? node.right : node.left;
    self(self, near);
    const double gap = c - node.split;
    const double gap2 = gap * gap;
    if (heap.size() < k || gap2 <= heap.top().d2) self(self, far);
  };
  visit(visit, root_);

  std::vector<HeapEntry> entries;
  entries.reserve(heap.size());
  while (!heap.empty()) {
    entries.push_back(heap.top());
    heap.pop();
  }
  std::sort(entries.begin(), entries.end());
  std::vector<std::uint32_t> out;
  out.reserve(entries.size());
  for (const HeapEntry& e : entries) out.push_back(e.idx);
  return out;
}

}  // namespace trinorm
