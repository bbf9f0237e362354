#include "pcfc/surface.hpp"

#include "pcfc/errors.hpp"
#include "pcfc/mesh.hpp"
#include "pcfc/parallel.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <tuple>
#include <stdexcept>

namespace pcfc::surface {

namespace {

struct Candidate {
    double s = 0.0;
    FailureMode mode{};
};

void consider(const fea::StressTensor4& s, const fea::Material& mat, FailureMode tension, FailureMode compression,
              std::optional<Candidate>& best) {
    const auto p = fea::principal_stresses(s);
    if (p[2] > 0.0) {
        const double c = mat.sigma_f_t / p[2];
        if (!best || c < best->s) best = Candidate{c, tension};
    }
    if (p[0] < 0.0) {
        const double c = mat.sigma_f_c / -p[0];
        if (!best || c < best->s) best = Candidate{c, compression};
    }
}

std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

double parse_double(const std::string& s, std::size_t lineno, const char* column) {
    double v = 0.0;
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
        throw ParseError(std::string("invalid number '") + s + "' in column " + column, lineno);
    return v;
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

}  // namespace

const char* code(FailureMode m) {
    switch (m) {
        case FailureMode::FiberTension: return "FT";
        case FailureMode::FiberCompression: return "FC";
        case FailureMode::MatrixTension: return "MT";
        case FailureMode::MatrixCompression: return "MC";
    }
    return "??";
}

const char* describe(FailureMode m) {
    switch (m) {
        case FailureMode::FiberTension: return "Fiber tension";
        case FailureMode::FiberCompression: return "Fiber compression";
        case FailureMode::MatrixTension: return "Matrix tension";
        case FailureMode::MatrixCompression: return "Matrix compression";
    }
    return "unknown";
}

FailureMode parse_mode(std::string_view s) {
    if (s == "FT") return FailureMode::FiberTension;
    if (s == "FC") return FailureMode::FiberCompression;
    if (s == "MT") return FailureMode::MatrixTension;
    if (s == "MC") return FailureMode::MatrixCompression;
    throw std::invalid_argument("unknown failure mode '" + std::string(s) + "'");
}

void LoadGrid::validate() const {
    if (levels_m < 3 || levels_m % 2 == 0) throw std::invalid_argument("grid levels must be an odd integer >= 3");
    if (!(amplitude_a > 0.0)) throw std::invalid_argument("grid amplitude must be positive");
}

std::vector<double> LoadGrid::levels() const {
    validate();
    const int half = (levels_m - 1) / 2;
    std::vector<double> out(levels_m);
    for (int i = 0; i < levels_m; ++i) out[i] = amplitude_a * double(i - half) / half;
    return out;
}

std::vector<fea::TractionLoad> enumerate_load_cases(const LoadGrid& grid) {
    const auto lv = grid.levels();
    std::vector<fea::TractionLoad> cases;
    cases.reserve(grid.case_count());
    for (double sx : lv)
        for (double sy : lv)
            for (double txy : lv)
                if (sx != 0.0 || sy != 0.0 || txy != 0.0) cases.push_back({sx, sy, txy});
    return cases;
}

std::string run_id(std::size_t case_index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "run%04zu", case_index + 1);
    return buf;
}

Scaling scale_to_failure(const fea::PhaseStresses& phase_stress, const fea::PhaseMaterials& materials) {
    std::optional<Candidate> best;
    if (const auto& s = phase_stress[static_cast<int>(microgen::Phase::Fiber)])
        consider(*s, materials.fiber, FailureMode::FiberTension, FailureMode::FiberCompression, best);
    if (const auto& s = phase_stress[static_cast<int>(microgen::Phase::Matrix)])
        consider(*s, materials.matrix, FailureMode::MatrixTension, FailureMode::MatrixCompression, best);
    if (!best) throw NoValidCandidate("no phase carries a nonzero principal stress");
    return {best->s, best->mode};
}

Scaling scale_to_failure_per_element(const fea::SolveResult& result, const mesh::QuadMesh& mesh,
                                     const fea::PhaseMaterials& materials) {
    std::optional<Candidate> best;
    for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
        if (mesh.phase[e] == microgen::Phase::Fiber)
            consider(result.element_stress[e], materials.fiber, FailureMode::FiberTension,
                     FailureMode::FiberCompression, best);
        else
            consider(result.element_stress[e], materials.matrix, FailureMode::MatrixTension,
                     FailureMode::MatrixCompression, best);
    }
    if (!best) throw NoValidCandidate("no element carries a nonzero principal stress");
    return {best->s, best->mode};
}

std::vector<std::array<double, 4>> FailureSurface::coordinates() const {
    std::vector<std::array<double, 4>> out;
    out.reserve(points.size());
    for (const auto& p : points) out.push_back(p.stress.as_array());
    return out;
}

CaseResult evaluate_case(const fea::PlaneStrainModel& model, const fea::ElementGroups& groups,
                         const fea::TractionLoad& traction) {
    const fea::SolveResult r = model.solve(fea::BoundaryConditions{traction});
    fea::PhaseStresses phase = fea::phase_stresses(r, groups);
    const Scaling sc = scale_to_failure(phase, model.materials());
    CaseResult out;
    out.point.stress = sc.s_f * fea::rve_stress(r, groups);
    out.point.mode = sc.mode;
    out.point.s_f = sc.s_f;
    for (std::size_t p = 0; p < phase.size(); ++p)
        if (phase[p]) out.phase_stress_at_failure[p] = sc.s_f * *phase[p];
    return out;
}

FailureSurface build_surface(std::span<const RveInput> rves, const LoadGrid& grid,
                             const fea::PhaseMaterials& materials, const BuildOptions& options) {
    const auto cases = enumerate_load_cases(grid);
    std::vector<CaseResult> results;
    results.reserve(rves.size() * cases.size());

    FailureSurface out;
    out.provenance.grid = grid;
    out.provenance.materials = materials;

    for (const auto& rve : rves) {
        out.provenance.rve_ids.push_back(rve.id);
        const mesh::QuadMesh m = mesh::pixelate(rve.microstructure, rve.divisions);
        const fea::ElementGroups groups = fea::phase_groups(m);
        std::optional<fea::PlaneStrainModel> model;
        try {
            model.emplace(m, materials, fea::LoadKind::Traction);
        } catch (const Error& e) {
            throw SolverFailure("rve " + rve.id + ": " + e.what());
        }

        std::vector<CaseResult> batch(cases.size());
        parallel_for(cases.size(), options.threads, [&](std::size_t i) {
            try {
                batch[i] = evaluate_case(*model, groups, cases[i]);
            } catch (const NoValidCandidate& e) {
                throw NoValidCandidate("rve " + rve.id + " " + run_id(i) + ": " + e.what());
            } catch (const SolverFailure& e) {
                throw SolverFailure("rve " + rve.id + " " + run_id(i) + ": " + e.what());
            } catch (const Error& e) {
                throw Error("rve " + rve.id + " " + run_id(i) + ": " + e.what());
            }
            batch[i].point.rve_id = rve.id;
            batch[i].point.run_id = run_id(i);
        });
        for (auto& b : batch) results.push_back(std::move(b));
    }

    std::vector<std::size_t> order(results.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& pa = results[a].point;
        const auto& pb = results[b].point;
        return std::tie(pa.rve_id, pa.run_id) < std::tie(pb.rve_id, pb.run_id);
    });
    out.points.reserve(results.size());
    out.phase_stress_at_failure.reserve(results.size());
    for (std::size_t i : order) {
        out.points.push_back(std::move(results[i].point));
        out.phase_stress_at_failure.push_back(results[i].phase_stress_at_failure);
    }
    return out;
}

void export_csv(const FailureSurface& surface, std::ostream& out) {
    out << kCsvHeader << '\n';
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const auto& p : surface.points) {
        out << p.rve_id << ',' << p.run_id << ',' << p.stress.sx << ',' << p.stress.sy << ',' << p.stress.sz << ','
            << p.stress.txy << ',' << code(p.mode) << ',' << p.s_f << '\n';
    }
}

void export_csv(const FailureSurface& surface, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    export_csv(surface, out);
}

FailureSurface import_csv(std::istream& in) {
    FailureSurface s;
    std::string line;
    if (!std::getline(in, line)) throw EmptySurface("point-cloud csv is empty");
    line = strip_cr(line);
    if (line != kCsvHeader)
        throw SchemaError("expected header '" + std::string(kCsvHeader) + "', found '" + line + "'");

    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto f = split_csv_row(line);
        if (f.size() != 8) throw ParseError("expected 8 fields, found " + std::to_string(f.size()), lineno);
        FailurePoint p;
        p.rve_id = f[0];
        p.run_id = f[1];
        p.stress = {parse_double(f[2], lineno, "sx"), parse_double(f[3], lineno, "sy"),
                    parse_double(f[4], lineno, "sz"), parse_double(f[5], lineno, "txy")};
        try {
            p.mode = parse_mode(f[6]);
        } catch (const std::invalid_argument& e) {
            throw ParseError(e.what(), lineno);
        }
        p.s_f = parse_double(f[7], lineno, "s_f");
        if (!(p.s_f > 0.0)) throw ParseError("s_f must be positive", lineno);
        if (std::find(s.provenance.rve_ids.begin(), s.provenance.rve_ids.end(), p.rve_id) ==
            s.provenance.rve_ids.end())
            s.provenance.rve_ids.push_back(p.rve_id);
        s.points.push_back(std::move(p));
    }
    if (s.points.empty()) throw EmptySurface("point-cloud csv has no data rows");
    return s;
}

FailureSurface import_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    return import_csv(in);
}

}  // namespace pcfc::surface
