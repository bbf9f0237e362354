#pragma once

#include "pcfc/classifier.hpp"
#include "pcfc/config.hpp"
#include "pcfc/errors.hpp"
#include "pcfc/fea.hpp"
#include "pcfc/surface.hpp"

#include <json.hpp>

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pcfc::harness {

using Point4 = std::array<double, 4>;

// ---------------------------------------------------------------------------
// Train/test split

struct SplitIndices {
    std::vector<std::size_t> train;  // ascending
    std::vector<std::size_t> test;   // ascending
};

/// Random partition of [0, n) with round(fraction * n) training indices.
SplitIndices split(std::size_t n, double fraction, std::uint64_t seed);

template <class T>
std::vector<T> gather(std::span<const T> items, std::span<const std::size_t> idx) {
    std::vector<T> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(items[i]);
    return out;
}

// ---------------------------------------------------------------------------
// Sign-orthant bins

/// Bin b counts the points whose component i is >= 0 exactly when bit i of b
/// is set (zero components bin as non-negative).
struct BinHistogram {
    std::vector<std::size_t> counts;
    std::size_t min = 0;
    std::size_t max = 0;
    double avg = 0.0;
    std::size_t zero_bins = 0;
};

std::size_t bin_index(std::span<const double> p);
BinHistogram bin_distribution(std::span<const Point4> points);

// ---------------------------------------------------------------------------
// Validation on genuine surface points (ground truth: Outside)

struct OnSurfaceReport {
    std::size_t tests = 0;
    std::size_t outside = 0;
    double accuracy_pct = 0.0;
};

/// Throws EmptyTestSet for an empty test set.
OnSurfaceReport validate_onsurface(const classifier::PointCloudDB& db, std::span<const Point4> test,
                                   const classifier::QueryParams& params);

// ---------------------------------------------------------------------------
// Perturbed test set

struct PerturbationSpec {
    double intact_fraction = 1.0 / 3.0;
    double scale_min = 0.5;
    double scale_max = 1.2;
    std::uint64_t rng_seed = 0;

    void validate() const;
};

struct LabeledPoint {
    Point4 stress{};
    double factor = 1.0;  // 1 for intact points
    bool intact = false;
    classifier::Decision label = classifier::Decision::Outside;
};

/// Scales a point by f and labels it Inside iff f < 1.
LabeledPoint scale_point(const Point4& p, double f);

/// round(intact_fraction * N) randomly chosen points stay intact (Outside);
/// the rest are scaled by f ~ U[scale_min, scale_max]. Output keeps input order.
std::vector<LabeledPoint> perturb(std::span<const Point4> points, const PerturbationSpec& spec);

struct ReportB {
    std::size_t tests = 0;
    std::size_t correct = 0;
    double correct_pct = 0.0;
    std::size_t false_positives = 0;  // predicted Outside, labelled Inside
    std::size_t false_negatives = 0;  // predicted Inside, labelled Outside
    std::optional<double> fp_error_min, fp_error_max;  // percent, raw signed
    std::optional<double> fn_error_min, fn_error_max;
};

/// (||q|| - aggregated neighbor norm) / sigma_range * 100.
double distance_error_pct(const classifier::PointCloudDB& db, const classifier::Verdict& v);

ReportB evaluate(const classifier::PointCloudDB& db, std::span<const LabeledPoint> labeled,
                 const classifier::QueryParams& params);

// ---------------------------------------------------------------------------
// Effective-modulus convergence study

/// Transverse modulus the RVEs are compared against, psi.
inline constexpr double kE22Experimental = 1.07e6;

struct ConvergenceRow {
    int window = 0;
    int models = 0;
    std::uint64_t best_seed = 0;
    int divisions = 0;
    std::size_t nodes = 0;
    std::size_t elements = 0;
    double e22 = 0.0;
    double nu23 = 0.0;
    double pct_error = 0.0;          // (E_exp - E_fea) / E_exp * 100
    double refinement_change_pct = 0.0;  // best model, finest vs next-finest divisions
    std::vector<double> e22_by_divisions;  // best model, in `divisions` order
};

struct ConvergenceControl {
    double e22 = 0.0;
    double expected = 0.0;  // E / (1 - nu^2), matrix
    double pct_diff = 0.0;
};

struct ConvergenceStudy {
    std::vector<ConvergenceRow> rows;
    ConvergenceControl control;
};

struct ConvergenceSpec {
    std::vector<std::uint64_t> seeds;
    std::vector<int> windows;
    std::vector<int> divisions;  // ascending; the finest decides the best model
    double vf = 0.6;
    double radius_px = microgen::kDefaultRadiusPx;
    double min_gap_px = 1.0;
    fea::PhaseMaterials materials;
    unsigned threads = 0;
};

ConvergenceStudy convergence_study(const ConvergenceSpec& spec);

// ---------------------------------------------------------------------------
// Pipeline

/// An error raised inside a named pipeline stage.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what, int exit_code)
        : Error("[" + stage + "] " + what), stage_(std::move(stage)), exit_code_(exit_code) {}
    const std::string& stage() const { return stage_; }
    int exit_code() const { return exit_code_; }

private:
    std::string stage_;
    int exit_code_;
};

struct Timing {
    double surface_s = 0.0;
    double db_build_s = 0.0;
    double query_s = 0.0;
    double validation_surface_s = 0.0;
};

struct PipelineResult {
    surface::FailureSurface surface;             // database RVEs
    surface::FailureSurface validation_surface;  // held-out RVE
    nlohmann::json report;                       // deterministic content only
    Timing timing;
    bool thresholds_met = true;
};

std::string rve_id(std::uint64_t seed);

/// microgen -> mesh -> FEA batch -> surface -> database -> validations.
/// Writes into `out_dir` (created if needed):
///   microstructure_<seed>.txt, surface.csv, validation_surface.csv, db.bin,
///   report.json, report.txt, timing.json
/// Throws StageError tagged with the failing stage.
PipelineResult run_pipeline(const Config& config, const std::filesystem::path& out_dir);

/// JSON blocks shared by the CLI subcommands and the pipeline report.
nlohmann::json to_json(const BinHistogram& h);
nlohmann::json to_json(const OnSurfaceReport& r);
nlohmann::json to_json(const ReportB& r);
nlohmann::json to_json(const ConvergenceStudy& s);
std::string render_text(const nlohmann::json& report);

}  // namespace pcfc::harness
