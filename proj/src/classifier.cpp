#include "pcfc/classifier.hpp"

#include "pcfc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>

namespace pcfc::classifier {

namespace {

constexpr char kMagic[8] = {'P', 'C', 'F', 'C', 'D', 'B', '0', '1'};
constexpr std::uint32_t kSnapshotVersion = 1;

std::uint64_t fnv1a(const unsigned char* data, std::size_t n, std::uint64_t h = 1469598103934665603ull) {
    for (std::size_t i = 0; i < n; ++i) {
        h ^= data[i];
        h *= 1099511628211ull;
    }
    return h;
}

template <class T>
void append_bytes(std::vector<unsigned char>& buf, const T& v) {
    const auto* p = reinterpret_cast<const unsigned char*>(&v);
    buf.insert(buf.end(), p, p + sizeof(T));
}

template <class T>
T read_bytes(const std::vector<unsigned char>& buf, std::size_t& pos) {
    if (pos + sizeof(T) > buf.size()) throw ParseError("truncated snapshot", 0);
    T v;
    std::memcpy(&v, buf.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
}

}  // namespace

double minkowski_norm(std::span<const double> v, double r) {
    if (!(r >= 1.0)) throw std::invalid_argument("Minkowski order must be >= 1");
    if (r == 2.0) {
        double s = 0.0;
        for (double x : v) s += x * x;
        return std::sqrt(s);
    }
    if (r == 1.0) {
        double s = 0.0;
        for (double x : v) s += std::abs(x);
        return s;
    }
    if (std::isinf(r)) {
        double m = 0.0;
        for (double x : v) m = std::max(m, std::abs(x));
        return m;
    }
    double s = 0.0;
    for (double x : v) s += std::pow(std::abs(x), r);
    return std::pow(s, 1.0 / r);
}

PointCloudDB PointCloudDB::build(std::vector<double> flat, std::size_t dim) {
    if (dim == 0) throw DimensionMismatch("point dimension must be positive");
    if (flat.empty()) throw EmptyCloud("cannot build a database from an empty point cloud");
    if (flat.size() % dim != 0) throw DimensionMismatch("point buffer is not a multiple of the dimension");
    for (double v : flat)
        if (!std::isfinite(v)) throw std::invalid_argument("point cloud contains a non-finite value");

    PointCloudDB db;
    db.sigma_max_ = *std::max_element(flat.begin(), flat.end());
    db.sigma_min_ = *std::min_element(flat.begin(), flat.end());
    db.tree_ = KdTree(std::move(flat), dim);
    db.norms_.resize(db.size());
    for (std::size_t i = 0; i < db.size(); ++i) db.norms_[i] = minkowski_norm(db.point(i), 2.0);
    return db;
}

PointCloudDB PointCloudDB::build(std::span<const std::vector<double>> points) {
    if (points.empty()) throw EmptyCloud("cannot build a database from an empty point cloud");
    const std::size_t dim = points.front().size();
    std::vector<double> flat;
    flat.reserve(points.size() * dim);
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].size() != dim)
            throw DimensionMismatch("point " + std::to_string(i) + " has dimension " +
                                    std::to_string(points[i].size()) + ", expected " + std::to_string(dim));
        flat.insert(flat.end(), points[i].begin(), points[i].end());
    }
    return build(std::move(flat), dim);
}

std::vector<Neighbor> PointCloudDB::knn(std::span<const double> q, std::size_t k, double epsilon) const {
    if (q.size() != dim())
        throw DimensionMismatch("query has dimension " + std::to_string(q.size()) + ", database has " +
                                std::to_string(dim()));
    if (k == 0) throw std::invalid_argument("k must be positive");
    if (k > size())
        throw KTooLarge("k = " + std::to_string(k) + " exceeds the " + std::to_string(size()) + " stored points");
    if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be >= 0");
    return tree_.knn(q, k, epsilon);
}

void PointCloudDB::save(const std::filesystem::path& path) const {
    std::vector<unsigned char> body;
    append_bytes(body, kSnapshotVersion);
    append_bytes(body, static_cast<std::uint32_t>(dim()));
    append_bytes(body, static_cast<std::uint64_t>(size()));
    for (double v : tree_.data()) append_bytes(body, v);
    const std::uint64_t checksum = fnv1a(body.data(), body.size());

    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out.write(kMagic, sizeof kMagic);
    out.write(reinterpret_cast<const char*>(body.data()), std::streamsize(body.size()));
    out.write(reinterpret_cast<const char*>(&checksum), sizeof checksum);
}

PointCloudDB PointCloudDB::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (buf.size() < sizeof kMagic + sizeof(std::uint64_t) || std::memcmp(buf.data(), kMagic, sizeof kMagic) != 0)
        throw ParseError(path.string() + ": not a point-cloud snapshot", 0);

    const std::size_t body_begin = sizeof kMagic;
    const std::size_t body_end = buf.size() - sizeof(std::uint64_t);
    std::uint64_t stored;
    std::memcpy(&stored, buf.data() + body_end, sizeof stored);
    if (fnv1a(buf.data() + body_begin, body_end - body_begin) != stored)
        throw ParseError(path.string() + ": snapshot checksum mismatch", 0);

    std::vector<unsigned char> body(buf.begin() + std::ptrdiff_t(body_begin), buf.begin() + std::ptrdiff_t(body_end));
    std::size_t pos = 0;
    const auto version = read_bytes<std::uint32_t>(body, pos);
    if (version != kSnapshotVersion)
        throw ParseError(path.string() + ": unsupported snapshot version " + std::to_string(version), 0);
    const auto dim = read_bytes<std::uint32_t>(body, pos);
    const auto count = read_bytes<std::uint64_t>(body, pos);
    if (body.size() - pos != count * dim * sizeof(double))
        throw ParseError(path.string() + ": snapshot payload size mismatch", 0);
    std::vector<double> flat(count * dim);
    std::memcpy(flat.data(), body.data() + pos, flat.size() * sizeof(double));
    return build(std::move(flat), dim);
}

void QueryParams::validate() const {
    if (k == 0) throw std::invalid_argument("k must be positive");
    if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be >= 0");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
    if (!(r >= 1.0)) throw std::invalid_argument("Minkowski order r must be >= 1");
    if (aggregation == Aggregation::Radius && !(radius > 0.0))
        throw std::invalid_argument("radius aggregation needs a positive radius");
}

const char* to_string(Decision d) { return d == Decision::Outside ? "Outside" : "Inside"; }

Verdict classify(const PointCloudDB& db, std::span<const double> q, const QueryParams& params) {
    params.validate();
    Verdict v;
    v.neighbors = db.knn(q, params.k, params.epsilon);
    if (params.aggregation == Aggregation::Radius) {
        auto near = db.tree().within(q, params.radius);
        if (!near.empty()) v.neighbors = std::move(near);
    }

    auto point_norm = [&](std::size_t i) {
        return params.r == 2.0 ? db.norm(i) : minkowski_norm(db.point(i), params.r);
    };

    if (params.aggregation == Aggregation::InverseDistance) {
        double wsum = 0.0, acc = 0.0;
        std::size_t hits = 0;
        double hit_acc = 0.0;
        for (const auto& n : v.neighbors) {
            if (n.distance == 0.0) {
                ++hits;
                hit_acc += point_norm(n.index);
            } else {
                wsum += 1.0 / n.distance;
                acc += point_norm(n.index) / n.distance;
            }
        }
        v.neighbor_norm = hits ? hit_acc / double(hits) : acc / wsum;
    } else {
        double acc = 0.0;
        for (const auto& n : v.neighbors) acc += point_norm(n.index);
        v.neighbor_norm = acc / double(v.neighbors.size());
    }

    v.query_norm = minkowski_norm(q, params.r);
    v.threshold = v.neighbor_norm - params.alpha * db.sigma_range();
    v.decision = v.query_norm >= v.threshold ? Decision::Outside : Decision::Inside;
    return v;
}

}  // namespace pcfc::classifier
