#pragma once

#include "pcfc/fea.hpp"
#include "pcfc/homogenize.hpp"
#include "pcfc/microgen.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pcfc::surface {

enum class FailureMode { FiberTension, FiberCompression, MatrixTension, MatrixCompression };

/// Two-letter CSV code: FT, FC, MT, MC.
const char* code(FailureMode m);
/// Human-readable label, e.g. "Matrix compression".
const char* describe(FailureMode m);
/// Inverse of `code`; throws std::invalid_argument on anything else.
FailureMode parse_mode(std::string_view s);

/// m equally spaced traction levels per component, from -a to +a.
struct LoadGrid {
    int levels_m = 5;
    double amplitude_a = 1000.0;

    /// Throws std::invalid_argument unless m is odd and >= 3 and a > 0.
    void validate() const;
    std::vector<double> levels() const;
    std::size_t case_count() const { return std::size_t(levels_m) * levels_m * levels_m - 1; }

    friend bool operator==(const LoadGrid&, const LoadGrid&) = default;
};

/// All (sx, sy, txy) combinations of the grid levels except the all-zero one,
/// sx varying slowest and txy fastest.
std::vector<fea::TractionLoad> enumerate_load_cases(const LoadGrid& grid);

/// Zero-padded identifier of the 0-based load case index ("run0001" for 0), so
/// lexicographic order matches enumeration order.
std::string run_id(std::size_t case_index);

struct Scaling {
    double s_f = 0.0;
    FailureMode mode = FailureMode::MatrixTension;
};

/// Smallest factor that brings a phase's principal stress to its limit.
///
/// For each phase present, with principal stresses s1 <= s2 <= s3 of the
/// phase-homogenized tensor, the tension candidate is sigma_f_t / s3 (valid
/// when s3 > 0) and the compression candidate is sigma_f_c / (-s1) (valid when
/// s1 < 0). Ties keep the earlier candidate in the order fiber-tension,
/// fiber-compression, matrix-tension, matrix-compression.
/// Throws NoValidCandidate when no candidate is valid.
Scaling scale_to_failure(const fea::PhaseStresses& phase_stress, const fea::PhaseMaterials& materials);

/// Diagnostic: the same candidates evaluated element by element, minimized over
/// all elements instead of over phase averages.
Scaling scale_to_failure_per_element(const fea::SolveResult& result, const mesh::QuadMesh& mesh,
                                     const fea::PhaseMaterials& materials);

struct FailurePoint {
    fea::StressTensor4 stress;  // RVE-homogenized stress scaled to failure, psi
    FailureMode mode = FailureMode::MatrixTension;
    double s_f = 0.0;
    std::string rve_id;
    std::string run_id;

    friend bool operator==(const FailurePoint&, const FailurePoint&) = default;
};

struct Provenance {
    LoadGrid grid;
    std::vector<std::string> rve_ids;
    fea::PhaseMaterials materials;
};

struct FailureSurface {
    static constexpr int kDimension = 4;

    std::vector<FailurePoint> points;
    Provenance provenance;
    /// Per-phase homogenized stresses at failure, parallel to `points`.
    /// Filled by build_surface; empty after import_csv.
    std::vector<fea::PhaseStresses> phase_stress_at_failure;

    std::vector<std::array<double, 4>> coordinates() const;
};

/// Point for one load case on an already factorized traction model.
struct CaseResult {
    FailurePoint point;
    fea::PhaseStresses phase_stress_at_failure;
};
CaseResult evaluate_case(const fea::PlaneStrainModel& model, const fea::ElementGroups& groups,
                         const fea::TractionLoad& traction);

struct RveInput {
    std::string id;
    microgen::Microstructure microstructure;
    int divisions = 100;
};

struct BuildOptions {
    unsigned threads = 0;  // 0: one per logical core
};

/// One failure point per (RVE, load case), sorted by (rve_id, run_id).
/// FEA errors are rethrown with the offending rve_id/run_id in the message.
FailureSurface build_surface(std::span<const RveInput> rves, const LoadGrid& grid,
                             const fea::PhaseMaterials& materials, const BuildOptions& options = {});

// CSV schema: rve_id,run_id,sx,sy,sz,txy,mode,s_f
inline constexpr std::string_view kCsvHeader = "rve_id,run_id,sx,sy,sz,txy,mode,s_f";

void export_csv(const FailureSurface& surface, std::ostream& out);
void export_csv(const FailureSurface& surface, const std::filesystem::path& path);
/// Throws EmptySurface (no data rows), SchemaError (header mismatch) or
/// ParseError (with the 1-based line number of the bad row).
FailureSurface import_csv(std::istream& in);
FailureSurface import_csv(const std::filesystem::path& path);

}  // namespace pcfc::surface
