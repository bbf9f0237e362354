// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include "pcfc/classifier.hpp"
#include "pcfc/config.hpp"
#include "pcfc/fea.hpp"
#include "pcfc/harness.hpp"
#include "pcfc/homogenize.hpp"
#include "pcfc/mesh.hpp"
#include "pcfc/microgen.hpp"
#include "pcfc/surface.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace pcfc;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& why) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << why << "]";
        }
    }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int digits = 3) {
    std::ostringstream s;
    s << std::setprecision(digits) << v;
    return s.str();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

constexpr int kDivisions = 100;
constexpr std::uint64_t kDbSeeds[] = {139, 176};
constexpr std::uint64_t kHeldOutSeed = 160;

surface::RveInput rve(std::uint64_t seed) {
    return {harness::rve_id(seed), microgen::generate({200, 0.6, microgen::kDefaultRadiusPx, 1.0, seed}), kDivisions};
}

// Surfaces shared by criteria 6 to 8, built on first use.
struct LargeSurfaces {
    std::vector<harness::Point4> cloud;     // two database RVEs, m = 11
    std::vector<harness::Point4> held_out;  // third RVE, m = 11
    double build_s = 0.0;
};

const LargeSurfaces& large_surfaces() {
    static const LargeSurfaces s = [] {
        LargeSurfaces out;
        const auto t0 = Clock::now();
        const surface::LoadGrid grid{11, 1000.0};
        const std::vector<surface::RveInput> db_rves{rve(kDbSeeds[0]), rve(kDbSeeds[1])};
        const std::vector<surface::RveInput> test_rves{rve(kHeldOutSeed)};
        out.cloud = surface::build_surface(db_rves, grid, {}).coordinates();
        out.held_out = surface::build_surface(test_rves, grid, {}).coordinates();
        out.build_s = seconds_since(t0);
        return out;
    }();
    return s;
}

classifier::QueryParams params(std::size_t k, double alpha) {
    classifier::QueryParams p;
    p.k = k;
    p.alpha = alpha;
    p.epsilon = 0.0;
    return p;
}

void check_uniform(Outcome& o, const fea::SolveResult& r, const fea::StressTensor4& expect, const char* name) {
    const double scale =
        std::max({std::abs(expect.sx), std::abs(expect.sy), std::abs(expect.sz), std::abs(expect.txy)});
    double worst = 0.0;
    for (const auto& s : r.element_stress) {
        const auto a = s.as_array(), b = expect.as_array();
        for (int i = 0; i < 4; ++i) worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
    }
    o.detail << ' ' << name << " max rel err " << fmt(worst, 2) << ';';
    o.require(worst <= 1e-6, std::string(name) + " deviates from the uniform state");
}

// 1. Patch tests on a homogeneous matrix plate.
void criterion_1(Outcome& o) {
    const auto t0 = Clock::now();
    const auto m = mesh::structured_grid(200.0, kDivisions);
    const fea::PhaseMaterials mats;
    const double nu = mats.matrix.nu;
    const fea::PlaneStrainModel model(m, mats, fea::LoadKind::Traction);
    check_uniform(o, model.solve({fea::TractionLoad{1000, 0, 0}}), {1000, 0, 387, 0}, "uniaxial");
    check_uniform(o, model.solve({fea::TractionLoad{0, 0, 500}}), {0, 0, 0, 500}, "shear");
    check_uniform(o, model.solve({fea::TractionLoad{1000, -600, 0}}), {1000, -600, nu * 400, 0}, "biaxial");
    const double t = seconds_since(t0);
    o.detail << " runtime " << fmt(t) << " s";
    o.require(t < 1.0, "runtime >= 1 s");
}

// 2. Effective modulus of homogeneous controls and of a composite RVE.
void criterion_2(Outcome& o) {
    const auto plate = mesh::structured_grid(200.0, kDivisions);
    for (bool fiber : {false, true}) {
        fea::PhaseMaterials mats;
        if (fiber) mats.matrix = mats.fiber;
        const double expected = mats.matrix.E / (1 - mats.matrix.nu * mats.matrix.nu);
        const double e = fea::effective_modulus(plate, mats).e22;
        const double pct = (e - expected) / expected * 100;
        o.detail << (fiber ? " fiber" : " matrix") << " control " << fmt(e, 6) << " psi (" << fmt(pct, 2) << "%);";
        o.require(std::abs(pct) <= 0.5, "homogeneous control off by more than 0.5%");
    }
    const auto t0 = Clock::now();
    const auto m = mesh::pixelate(rve(kDbSeeds[0]).microstructure, kDivisions);
    const auto em = fea::effective_modulus(m, {});
    const double t = seconds_since(t0);
    const double pct = (em.e22 - harness::kE22Experimental) / harness::kE22Experimental * 100;
    o.detail << " composite E22 " << fmt(em.e22, 6) << " psi (" << fmt(pct, 3) << "% vs 1.07e6), " << fmt(t)
             << " s";
    o.require(std::abs(pct) <= 15.0, "composite E22 outside 15%");
    o.require(t < 120.0, "composite solve slower than 2 min");
}

// 3. kNN against brute force.
void criterion_3(Outcome& o) {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> size_dist(1, 5000);
    std::uniform_real_distribution<double> coord(-5e4, 5e4);
    const std::size_t instances = 120;
    std::size_t exact_mismatch = 0, bound_violations = 0, queries = 0;
    for (std::size_t inst = 0; inst < instances; ++inst) {
        const std::size_t n = size_dist(rng);
        std::vector<double> flat(n * 4);
        for (auto& v : flat) v = std::round(coord(rng) * (inst % 3 == 0 ? 1e-3 : 1.0));  // some instances with ties
        const auto db = classifier::PointCloudDB::build(flat, 4);
        const std::size_t k = std::uniform_int_distribution<std::size_t>(1, std::min<std::size_t>(n, 16))(rng);
        for (int qi = 0; qi < 20; ++qi) {
            std::array<double, 4> q;
            for (auto& v : q) v = coord(rng) * (inst % 3 == 0 ? 1e-3 : 1.0);
            std::vector<std::pair<double, std::size_t>> all(n);
            for (std::size_t i = 0; i < n; ++i) {
                double s = 0;
                for (int d = 0; d < 4; ++d) s += (flat[i * 4 + d] - q[d]) * (flat[i * 4 + d] - q[d]);
                all[i] = {s, i};
            }
            std::partial_sort(all.begin(), all.begin() + std::ptrdiff_t(k), all.end());
            const auto exact = db.knn(q, k, 0.0);
            const auto approx = db.knn(q, k, 0.5);
            for (std::size_t j = 0; j < k; ++j) {
                const double want = std::sqrt(all[j].first);
                if (exact[j].index != all[j].second || std::abs(exact[j].distance - want) > 1e-12 * (1 + want))
                    ++exact_mismatch;
                if (approx[j].distance > 1.5 * want * (1 + 1e-12) + 1e-12) ++bound_violations;
            }
            ++queries;
        }
    }
    o.detail << ' ' << instances << " instances, " << queries << " queries; eps=0 mismatches " << exact_mismatch
             << ", eps=0.5 bound violations " << bound_violations;
    o.require(exact_mismatch == 0, "exact search differs from brute force");
    o.require(bound_violations == 0, "approximate search violates the (1+eps) bound");
}

// 4. Load-grid counts.
void criterion_4(Outcome& o) {
    const auto m5 = surface::enumerate_load_cases({5, 1000}).size();
    const auto m11 = surface::enumerate_load_cases({11, 1000}).size();
    o.detail << " m=5 -> " << m5 << ", m=11 -> " << m11;
    o.require(m5 == 124, "m=5 count");
    o.require(m11 == 1330, "m=11 count");
}

// 5. Every failure point rescales to s_f = 1; amplitude invariance.
void criterion_5(Outcome& o) {
    const std::vector<surface::RveInput> rves{rve(kDbSeeds[0])};
    const auto a = surface::build_surface(rves, {5, 1000.0}, {});
    const auto b = surface::build_surface(rves, {5, 2500.0}, {});
    const fea::PhaseMaterials mats;
    double worst_sf = 0.0, worst_amp = 0.0;
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        const auto again = surface::scale_to_failure(a.phase_stress_at_failure[i], mats);
        worst_sf = std::max(worst_sf, std::abs(again.s_f - 1.0));
        const auto pa = a.points[i].stress.as_array(), pb = b.points[i].stress.as_array();
        double diff = 0, norm = 0;
        for (int k = 0; k < 4; ++k) diff = std::max(diff, std::abs(pa[k] - pb[k])), norm = std::max(norm, std::abs(pa[k]));
        worst_amp = std::max(worst_amp, diff / norm);
    }
    o.detail << ' ' << a.points.size() << " points; max |s_f - 1| " << fmt(worst_sf, 2)
             << ", max amplitude drift " << fmt(worst_amp, 2);
    o.require(a.points.size() == 124 && b.points.size() == 124, "point count");
    o.require(worst_sf <= 1e-9, "re-scaled s_f differs from 1");
    o.require(worst_amp <= 1e-8, "failure point depends on the traction amplitude");
}

// 6. On-surface accuracy with an 80/20 split of the 2660-point cloud.
void criterion_6(Outcome& o) {
    const auto& s = large_surfaces();
    const auto parts = harness::split(s.cloud.size(), 0.8, 1);
    const auto train = harness::gather<harness::Point4>(s.cloud, parts.train);
    const auto test = harness::gather<harness::Point4>(s.cloud, parts.test);
    const auto db = classifier::PointCloudDB::build<4>(std::span<const harness::Point4>(train));
    o.detail << ' ' << s.cloud.size() << " points (" << train.size() << " train / " << test.size()
             << " test), surfaces built in " << fmt(s.build_s) << " s;";
    o.require(s.cloud.size() == 2660, "cloud size");
    for (std::size_t k : {3u, 4u}) {
        double prev = -1.0;
        o.detail << " k=" << k << ':';
        for (double alpha : {0.001, 0.01, 0.1}) {
            const double acc = harness::validate_onsurface(db, test, params(k, alpha)).accuracy_pct;
            o.detail << ' ' << fmt(acc, 4) << '%';
            o.require(acc > prev, "accuracy not strictly increasing in alpha (k=" + std::to_string(k) + ")");
            prev = acc;
        }
        o.require(prev >= 95.0, "accuracy below 95% at alpha=0.1 (k=" + std::to_string(k) + ")");
        o.detail << ';';
    }
    o.require(s.build_s <= 7200.0, "surface generation longer than 2 h");
}

// 7. Perturbed points from a held-out RVE.
void criterion_7(Outcome& o) {
    const auto& s = large_surfaces();
    const auto db = classifier::PointCloudDB::build<4>(std::span<const harness::Point4>(s.cloud));
    harness::PerturbationSpec spec;
    spec.rng_seed = 2;
    const auto labeled = harness::perturb(s.held_out, spec);
    o.detail << ' ' << labeled.size() << " tests;";
    for (std::size_t k : {3u, 4u}) {
        std::optional<harness::ReportB> prev;
        o.detail << " k=" << k << " FP/FN:";
        for (double alpha : {0.001, 0.01, 0.05, 0.1}) {
            const auto r = harness::evaluate(db, labeled, params(k, alpha));
            o.detail << ' ' << r.false_positives << '/' << r.false_negatives;
            if (prev) {
                o.require(r.false_negatives <= prev->false_negatives, "FN increased with alpha");
                o.require(r.false_positives >= prev->false_positives, "FP decreased with alpha");
            }
            if (k == 4 && alpha == 0.1) o.require(r.false_negatives == 0, "FN > 0 at alpha=0.1, k=4");
            prev = r;
        }
        o.detail << ';';
    }
}

// 8. Query throughput on the 2660-point database.
void criterion_8(Outcome& o) {
    const auto& s = large_surfaces();
    const auto db = classifier::PointCloudDB::build<4>(std::span<const harness::Point4>(s.cloud));
    const auto p = params(4, 0.1);

    const auto t0 = Clock::now();
    const auto part_a = harness::validate_onsurface(db, s.held_out, p);
    const double pass_s = seconds_since(t0);

    std::size_t queries = 0, outside = 0;
    const auto t1 = Clock::now();
    double elapsed = 0.0;
    while (elapsed < 1.0) {
        for (const auto& q : s.held_out) outside += classifier::classify(db, q, p).decision == classifier::Decision::Outside;
        queries += s.held_out.size();
        elapsed = seconds_since(t1);
    }
    const double rate = double(queries) / elapsed;
    o.detail << ' ' << part_a.tests << "-query pass " << fmt(pass_s * 1e3) << " ms (accuracy "
             << fmt(part_a.accuracy_pct, 4) << "%); " << fmt(rate, 3) << " queries/s";
    o.require(part_a.tests == 1330, "Part-A pass size");
    o.require(pass_s <= 1.0, "Part-A pass slower than 1 s");
    o.require(rate >= 1e5, "fewer than 1e5 queries/s");
    o.require(outside > 0, "no query classified");
}

// 9. Two pipeline runs with identical configuration produce identical artifacts.
void criterion_9(Outcome& o, const fs::path& work) {
    Config c;
    c.divisions = kDivisions;
    const auto a = work / "run_a", b = work / "run_b";
    fs::remove_all(a);
    fs::remove_all(b);
    c.threads = 0;
    harness::run_pipeline(c, a);
    c.threads = 1;
    harness::run_pipeline(c, b);
    std::size_t compared = 0;
    for (const char* f : {"surface.csv", "validation_surface.csv", "db.bin", "report.json", "report.txt"}) {
        const auto x = slurp(a / f), y = slurp(b / f);
        o.require(!x.empty(), std::string(f) + " missing");
        o.require(x == y, std::string(f) + " differs between runs");
        ++compared;
    }
    o.detail << ' ' << compared << " artifacts compared byte for byte";
}

}  // namespace

int main(int argc, char** argv) {
    const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "pcfc_acceptance";
    fs::create_directories(work);

    const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria{
        {"patch tests", criterion_1},
        {"effective modulus", criterion_2},
        {"kNN oracle equivalence", criterion_3},
        {"load-grid counts", criterion_4},
        {"on-surface scaling identity", criterion_5},
        {"on-surface accuracy (80/20 split, 2660 points)", criterion_6},
        {"perturbed held-out RVE", criterion_7},
        {"throughput", criterion_8},
        {"determinism", [&](Outcome& o) { criterion_9(o, work); }},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        const auto t0 = Clock::now();
        try {
            criteria[i].second(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << " [exception: " << e.what() << "]";
        }
        failures += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " (" << criteria[i].first << "):"
                  << o.detail.str() << " {" << fmt(seconds_since(t0)) << " s}" << std::endl;
    }
    std::cout << (failures ? "FAIL" : "PASS") << " acceptance: " << criteria.size() - failures << '/'
              << criteria.size() << " criteria met" << std::endl;
    return failures ? 1 : 0;
}
