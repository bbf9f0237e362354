#pragma once

#include "pcfc/kdtree.hpp"

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace pcfc::classifier {

/// (sum |v_i|^r)^(1/r), r >= 1.
double minkowski_norm(std::span<const double> v, double r = 2.0);

/// Immutable failure-surface database: kd-tree over the points, their L2
/// norms, and the global stress extent used to scale the safety margin.
///
/// sigma_max / sigma_min are taken over every component of every point.
/// After construction all queries are const and safe to run concurrently.
class PointCloudDB {
public:
    /// Row-major buffer of N x dim values. Throws EmptyCloud when N == 0.
    static PointCloudDB build(std::vector<double> flat, std::size_t dim);
    /// Throws EmptyCloud for no points, DimensionMismatch for ragged rows.
    static PointCloudDB build(std::span<const std::vector<double>> points);

    template <std::size_t D>
    static PointCloudDB build(std::span<const std::array<double, D>> points) {
        std::vector<double> flat;
        flat.reserve(points.size() * D);
        for (const auto& p : points) flat.insert(flat.end(), p.begin(), p.end());
        return build(std::move(flat), D);
    }

    std::size_t size() const { return tree_.size(); }
    std::size_t dim() const { return tree_.dim(); }
    std::span<const double> point(std::size_t i) const { return tree_.point(i); }
    double norm(std::size_t i) const { return norms_[i]; }
    double sigma_max() const { return sigma_max_; }
    double sigma_min() const { return sigma_min_; }
    double sigma_range() const { return sigma_max_ - sigma_min_; }
    const KdTree& tree() const { return tree_; }

    /// k nearest points by Euclidean distance, ascending, ties to the lower
    /// index. With epsilon > 0 each reported i-th distance is within a factor
    /// (1 + epsilon) of the true i-th distance.
    /// Throws KTooLarge when k > size(), DimensionMismatch for a wrong-sized query.
    std::vector<Neighbor> knn(std::span<const double> q, std::size_t k, double epsilon = 0.0) const;

    /// Versioned, checksummed binary snapshot (native little-endian doubles):
    ///   magic "PCFCDB01", u32 version, u32 dim, u64 count, count*dim f64,
    ///   u64 FNV-1a over every byte after the magic.
    void save(const std::filesystem::path& path) const;
    /// Throws ParseError on a bad magic, version or checksum.
    static PointCloudDB load(const std::filesystem::path& path);

private:
    KdTree tree_;
    std::vector<double> norms_;
    double sigma_max_ = 0.0;
    double sigma_min_ = 0.0;
};

/// How the neighbor norms are reduced to the reference norm.
enum class Aggregation {
    Mean,             // unweighted mean of the k neighbor norms
    InverseDistance,  // 1/distance weights; an exact hit takes the hit's norm
    Radius,           // mean over every point within `radius`, else the k nearest
};

struct QueryParams {
    std::size_t k = 4;
    double epsilon = 0.0;
    double alpha = 0.1;  // safety factor, in (0, 1)
    double r = 2.0;      // Minkowski order of the norm comparison; search stays Euclidean
    Aggregation aggregation = Aggregation::Mean;
    double radius = 0.0;  // only for Aggregation::Radius

    /// Throws std::invalid_argument.
    void validate() const;
};

enum class Decision { Inside, Outside };

const char* to_string(Decision d);

struct Verdict {
    Decision decision = Decision::Inside;
    double query_norm = 0.0;     // ||q||_r
    double neighbor_norm = 0.0;  // aggregated ||p||_r of the neighbors
    double threshold = 0.0;      // neighbor_norm - alpha * sigma_range
    std::vector<Neighbor> neighbors;
};

/// Outside iff ||q|| >= (aggregated neighbor norm) - alpha * sigma_range.
Verdict classify(const PointCloudDB& db, std::span<const double> q, const QueryParams& params);

}  // namespace pcfc::classifier
