#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace pcfc::classifier {

struct Neighbor {
    std::size_t index = 0;
    double distance = 0.0;  // Euclidean, not squared

    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Static kd-tree over N points of dimension d stored row-major.
///
/// Each internal node splits its points at the median of the coordinate with
/// the widest spread and records the largest coordinate on the low side and
/// the smallest on the high side, so box distances are updated one axis at a
/// time during the descent. With eps > 0 a subtree is skipped once its box
/// distance times (1 + eps) exceeds the current k-th distance, which bounds
/// every reported i-th distance by (1 + eps) times the true i-th distance.
class KdTree {
public:
    static constexpr std::size_t kDefaultBucket = 8;

    KdTree() = default;
    KdTree(std::vector<double> points, std::size_t dim, std::size_t bucket = kDefaultBucket);

    std::size_t size() const { return dim_ ? points_.size() / dim_ : 0; }
    std::size_t dim() const { return dim_; }
    std::span<const double> point(std::size_t i) const { return {points_.data() + i * dim_, dim_}; }
    std::span<const double> data() const { return points_; }

    /// The k nearest points in ascending (distance, index) order.
    /// Requires 1 <= k <= size() and q.size() == dim(); checked by the caller.
    std::vector<Neighbor> knn(std::span<const double> q, std::size_t k, double eps) const;

    /// All points with distance <= radius, in ascending (distance, index) order.
    std::vector<Neighbor> within(std::span<const double> q, double radius) const;

private:
    struct Node {
        // leaf when left == 0: points perm_[begin, end)
        std::uint32_t begin = 0;
        std::uint32_t end = 0;
        std::uint32_t left = 0;
        std::uint32_t right = 0;
        std::uint32_t axis = 0;
        double low_max = 0.0;   // largest coordinate in the low child
        double high_min = 0.0;  // smallest coordinate in the high child
    };

    std::uint32_t build(std::uint32_t begin, std::uint32_t end, std::size_t bucket);

    template <class Result>
    void search(std::uint32_t node, const double* q, double min_dist_sq, std::vector<double>& offsets,
                double eps_factor, Result& result) const;

    double dist_sq(const double* q, std::size_t i) const {
        const double* p = points_.data() + i * dim_;
        double s = 0.0;
        for (std::size_t d = 0; d < dim_; ++d) {
            const double t = q[d] - p[d];
            s += t * t;
        }
        return s;
    }

    std::vector<double> points_;
    std::size_t dim_ = 0;
    std::vector<std::uint32_t> perm_;
    std::vector<Node> nodes_;
    std::vector<double> box_lo_;
    std::vector<double> box_hi_;
};

}  // namespace pcfc::classifier
