#include "pcfc/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <utility>

namespace pcfc::classifier {

namespace {

// Relative slack on pruning so that rounding in the incremental box distance
// never discards a subtree holding an exact tie.
constexpr double kPruneSlack = 1.0 + 1e-12;

struct Entry {
    double dist_sq;
    std::size_t index;
    bool operator<(const Entry& o) const {
        return dist_sq < o.dist_sq || (dist_sq == o.dist_sq && index < o.index);
    }
};

class KnnResult {
public:
    explicit KnnResult(std::size_t k) : k_(k) {}

    double worst() const { return heap_.size() < k_ ? std::numeric_limits<double>::infinity() : heap_.top().dist_sq; }

    void add(double d, std::size_t i) {
        const Entry e{d, i};
        if (heap_.size() < k_) {
            heap_.push(e);
        } else if (e < heap_.top()) {
            heap_.pop();
            heap_.push(e);
        }
    }

    std::vector<Neighbor> take() {
        std::vector<Neighbor> out(heap_.size());
        for (std::size_t i = out.size(); i-- > 0;) {
            out[i] = {heap_.top().index, std::sqrt(heap_.top().dist_sq)};
            heap_.pop();
        }
        return out;
    }

private:
    std::size_t k_;
    std::priority_queue<Entry> heap_;
};

class RadiusResult {
public:
    explicit RadiusResult(double radius) : limit_(radius * radius) {}

    double worst() const { return limit_; }
    void add(double d, std::size_t i) {
        if (d <= limit_) found_.push_back({d, i});
    }
    std::vector<Neighbor> take() {
        std::sort(found_.begin(), found_.end());
        std::vector<Neighbor> out;
        out.reserve(found_.size());
        for (const auto& e : found_) out.push_back({e.index, std::sqrt(e.dist_sq)});
        return out;
    }

private:
    double limit_;
    std::vector<Entry> found_;
};

}  // namespace

KdTree::KdTree(std::vector<double> points, std::size_t dim, std::size_t bucket)
    : points_(std::move(points)), dim_(dim) {
    if (dim_ == 0) throw std::invalid_argument("kd-tree dimension must be positive");
    if (points_.size() % dim_ != 0) throw std::invalid_argument("point buffer is not a multiple of the dimension");
    const std::size_t n = points_.size() / dim_;
    if (n == 0) throw std::invalid_argument("kd-tree needs at least one point");
    if (n > std::numeric_limits<std::uint32_t>::max()) throw std::invalid_argument("too many points");
    perm_.resize(n);
    std::iota(perm_.begin(), perm_.end(), 0u);

    box_lo_.assign(dim_, std::numeric_limits<double>::infinity());
    box_hi_.assign(dim_, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t d = 0; d < dim_; ++d) {
            box_lo_[d] = std::min(box_lo_[d], points_[i * dim_ + d]);
            box_hi_[d] = std::max(box_hi_[d], points_[i * dim_ + d]);
        }

    nodes_.reserve(2 * (n / std::max<std::size_t>(bucket, 1) + 1));
    nodes_.emplace_back();  // root placeholder so that index 0 never names a child
    const std::uint32_t root = build(0, std::uint32_t(n), std::max<std::size_t>(bucket, 1));
    nodes_[0] = nodes_[root];
}

std::uint32_t KdTree::build(std::uint32_t begin, std::uint32_t end, std::size_t bucket) {
    Node node;
    node.begin = begin;
    node.end = end;

    if (end - begin > bucket) {
        std::size_t axis = 0;
        double spread = -1.0;
        for (std::size_t d = 0; d < dim_; ++d) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -lo;
            for (std::uint32_t i = begin; i < end; ++i) {
                const double v = points_[perm_[i] * dim_ + d];
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            if (hi - lo > spread) {
                spread = hi - lo;
                axis = d;
            }
        }
        if (spread > 0.0) {
            const std::uint32_t mid = begin + (end - begin) / 2;
            auto coord_less = [&](std::uint32_t a, std::uint32_t b) {
                const double va = points_[a * dim_ + axis];
                const double vb = points_[b * dim_ + axis];
                return va < vb || (va == vb && a < b);
            };
            std::nth_element(perm_.begin() + begin, perm_.begin() + mid, perm_.begin() + end, coord_less);
            double low_max = -std::numeric_limits<double>::infinity();
            double high_min = std::numeric_limits<double>::infinity();
            for (std::uint32_t i = begin; i < mid; ++i) low_max = std::max(low_max, points_[perm_[i] * dim_ + axis]);
            for (std::uint32_t i = mid; i < end; ++i) high_min = std::min(high_min, points_[perm_[i] * dim_ + axis]);
            node.axis = std::uint32_t(axis);
            node.low_max = low_max;
            node.high_min = high_min;
            node.left = build(begin, mid, bucket);
            node.right = build(mid, end, bucket);
        }
    }
    nodes_.push_back(node);
    return std::uint32_t(nodes_.size() - 1);
}

template <class Result>
void KdTree::search(std::uint32_t ni, const double* q, double min_dist_sq, std::vector<double>& offsets,
                    double eps_factor, Result& result) const {
    const Node& node = nodes_[ni];
    if (node.left == 0) {
        for (std::uint32_t i = node.begin; i < node.end; ++i) result.add(dist_sq(q, perm_[i]), perm_[i]);
        return;
    }
    const std::size_t axis = node.axis;
    const double to_low = q[axis] - node.low_max;
    const double to_high = q[axis] - node.high_min;
    std::uint32_t near_child, far_child;
    double cut_sq;
    if (to_low + to_high < 0.0) {
        near_child = node.left;
        far_child = node.right;
        cut_sq = to_high * to_high;
    } else {
        near_child = node.right;
        far_child = node.left;
        cut_sq = to_low * to_low;
    }
    search(near_child, q, min_dist_sq, offsets, eps_factor, result);

    const double saved = offsets[axis];
    const double far_dist_sq = min_dist_sq + cut_sq - saved;
    if (far_dist_sq * eps_factor <= result.worst() * kPruneSlack) {
        offsets[axis] = cut_sq;
        search(far_child, q, far_dist_sq, offsets, eps_factor, result);
        offsets[axis] = saved;
    }
}

std::vector<Neighbor> KdTree::knn(std::span<const double> q, std::size_t k, double eps) const {
    std::vector<double> offsets(dim_, 0.0);
    double min_dist_sq = 0.0;
    for (std::size_t d = 0; d < dim_; ++d) {
        double t = 0.0;
        if (q[d] < box_lo_[d]) t = box_lo_[d] - q[d];
        else if (q[d] > box_hi_[d]) t = q[d] - box_hi_[d];
        offsets[d] = t * t;
        min_dist_sq += offsets[d];
    }
    KnnResult result(k);
    const double eps_factor = (1.0 + eps) * (1.0 + eps);
    search(0, q.data(), min_dist_sq, offsets, eps_factor, result);
    return result.take();
}

std::vector<Neighbor> KdTree::within(std::span<const double> q, double radius) const {
    std::vector<double> offsets(dim_, 0.0);
    double min_dist_sq = 0.0;
    for (std::size_t d = 0; d < dim_; ++d) {
        double t = 0.0;
        if (q[d] < box_lo_[d]) t = box_lo_[d] - q[d];
        else if (q[d] > box_hi_[d]) t = q[d] - box_hi_[d];
        offsets[d] = t * t;
        min_dist_sq += offsets[d];
    }
    RadiusResult result(radius);
    search(0, q.data(), min_dist_sq, offsets, 1.0, result);
    return result.take();
}

}  // namespace pcfc::classifier
