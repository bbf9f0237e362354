#include "pcfc/classifier.hpp"
#include "pcfc/config.hpp"
#include "pcfc/errors.hpp"
#include "pcfc/fea.hpp"
#include "pcfc/harness.hpp"
#include "pcfc/homogenize.hpp"
#include "pcfc/mesh.hpp"
#include "pcfc/microgen.hpp"
#include "pcfc/surface.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pcfc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitThreshold = 4;

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::string out = "out";
};

Config load(const Globals& g) {
    Config c = g.config_path.empty() ? Config{} : load_config(g.config_path);
    if (g.threads) c.threads = *g.threads;
    c.validate();
    return c;
}

fs::path out_dir(const Globals& g) {
    fs::create_directories(g.out);
    return g.out;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
}

std::vector<harness::Point4> read_points(const std::string& csv) {
    return surface::import_csv(fs::path(csv)).coordinates();
}

std::vector<classifier::QueryParams> sweep(const Config& c) {
    std::vector<classifier::QueryParams> out;
    for (auto k : c.k)
        for (double a : c.alpha) {
            classifier::QueryParams p;
            p.k = k;
            p.alpha = a;
            p.epsilon = c.epsilon;
            out.push_back(p);
        }
    return out;
}

json params_json(const classifier::QueryParams& p) { return {{"alpha", p.alpha}, {"epsilon", p.epsilon}, {"k", p.k}}; }

harness::Point4 parse_point(const std::string& text) {
    harness::Point4 p{};
    std::istringstream in(text);
    std::string item;
    std::size_t i = 0;
    while (std::getline(in, item, ',')) {
        if (i == 4) throw ConfigError("point '" + text + "' has more than 4 components");
        std::size_t used = 0;
        p[i] = std::stod(item, &used);
        if (used != item.size()) throw ConfigError("bad number '" + item + "' in point '" + text + "'");
        ++i;
    }
    if (i != 4) throw ConfigError("point '" + text + "' needs 4 components sx,sy,sz,txy");
    return p;
}

int run_microgen(const Globals& g) {
    const Config c = load(g);
    const std::uint64_t seed = g.seed.value_or(c.seeds.front());
    const auto ms = microgen::generate({c.window_px, c.vf, c.radius_px, c.min_gap_px, seed});
    const auto path = out_dir(g) / ("microstructure_" + std::to_string(seed) + ".txt");
    microgen::write_text(ms, path);
    std::cout << "wrote " << path.string() << ": " << ms.inclusions.size() << " inclusions, vf "
              << ms.achieved_vf << '\n';
    return kExitOk;
}

microgen::Microstructure load_or_generate(const Globals& g, const Config& c, const std::string& micro) {
    if (!micro.empty()) return microgen::read_text(fs::path(micro));
    return microgen::generate({c.window_px, c.vf, c.radius_px, c.min_gap_px, g.seed.value_or(c.seeds.front())});
}

int run_mesh(const Globals& g, const std::string& micro) {
    const Config c = load(g);
    const auto ms = load_or_generate(g, c, micro);
    const auto m = mesh::pixelate(ms, c.divisions);
    const auto stem = out_dir(g) / ("mesh_" + std::to_string(ms.seed));
    mesh::write_csv(m, stem);
    std::cout << "wrote " << stem.string() << "_{nodes,elements}.csv: " << m.nodes.size() << " nodes, "
              << m.elements.size() << " elements, mesh vf " << mesh::mesh_volume_fraction(m) << '\n';
    return kExitOk;
}

int run_solve(const Globals& g, const std::string& micro, double sx, double sy, double txy,
              std::optional<double> strain) {
    const Config c = load(g);
    const auto ms = load_or_generate(g, c, micro);
    const auto m = mesh::pixelate(ms, c.divisions);
    const fea::PhaseMaterials mats;
    const auto groups = fea::phase_groups(m);
    json j;
    if (strain) {
        const auto r = fea::solve(m, mats, {fea::DisplacementLoad{*strain}});
        const auto s = fea::rve_stress(r, groups);
        const auto e = fea::homogenize<fea::Strain3>(r.element_strain, r.element_volume, groups);
        j = {{"load", {{"strain", *strain}}},
             {"stress", s.as_array()},
             {"strain", {e.ex, e.ey, e.gxy}},
             {"e22_psi", s.sx / *strain},
             {"nu23", -e.ey / *strain},
             {"relative_residual", r.relative_residual}};
    } else {
        const fea::PlaneStrainModel model(m, mats, fea::LoadKind::Traction);
        const auto r = model.solve({fea::TractionLoad{sx, sy, txy}});
        const auto cr = surface::evaluate_case(model, groups, {sx, sy, txy});
        j = {{"load", {{"sx", sx}, {"sy", sy}, {"txy", txy}}},
             {"stress", fea::rve_stress(r, groups).as_array()},
             {"relative_residual", r.relative_residual},
             {"s_f", cr.point.s_f},
             {"mode", surface::code(cr.point.mode)},
             {"failure_stress", cr.point.stress.as_array()}};
    }
    std::cout << j.dump(2) << '\n';
    return kExitOk;
}

int run_surface(const Globals& g) {
    const Config c = load(g);
    std::vector<std::uint64_t> seeds = c.seeds;
    if (g.seed) seeds = {*g.seed};
    std::vector<surface::RveInput> rves;
    for (auto s : seeds)
        rves.push_back({harness::rve_id(s), microgen::generate({c.window_px, c.vf, c.radius_px, c.min_gap_px, s}),
                        c.divisions});
    const auto surf = surface::build_surface(rves, {c.grid_m, c.amplitude_psi}, {}, {c.threads});
    const auto path = out_dir(g) / "surface.csv";
    surface::export_csv(surf, path);
    std::cout << "wrote " << path.string() << ": " << surf.points.size() << " failure points\n";
    return kExitOk;
}

int run_build_db(const Globals& g, const std::string& csv) {
    const auto pts = read_points(csv);
    const auto db = classifier::PointCloudDB::build<4>(std::span<const harness::Point4>(pts));
    const auto path = out_dir(g) / "db.bin";
    db.save(path);
    std::cout << "wrote " << path.string() << ": " << db.size() << " points, sigma_range " << db.sigma_range()
              << " psi\n";
    return kExitOk;
}

int run_query(const Globals& g, const std::string& db_path, const std::vector<std::string>& points,
              const std::optional<double>& alpha, const std::optional<std::size_t>& k) {
    const Config c = load(g);
    const auto db = classifier::PointCloudDB::load(db_path);
    classifier::QueryParams p;
    p.k = k.value_or(c.k.back());
    p.alpha = alpha.value_or(c.alpha.back());
    p.epsilon = c.epsilon;
    p.validate();
    json out = json::array();
    for (const auto& text : points) {
        const auto q = parse_point(text);
        const auto v = classifier::classify(db, q, p);
        json nb = json::array();
        for (const auto& n : v.neighbors) nb.push_back({{"index", n.index}, {"distance", n.distance}});
        out.push_back({{"point", q},
                       {"decision", classifier::to_string(v.decision)},
                       {"query_norm", v.query_norm},
                       {"neighbor_norm", v.neighbor_norm},
                       {"threshold", v.threshold},
                       {"neighbors", nb}});
    }
    std::cout << out.dump(2) << '\n';
    return kExitOk;
}

int run_validate_a(const Globals& g, const std::string& db_path, const std::string& test_csv) {
    const Config c = load(g);
    const auto db = classifier::PointCloudDB::load(db_path);
    const auto test = read_points(test_csv);
    json runs = json::array();
    bool met = true;
    const double max_alpha = *std::max_element(c.alpha.begin(), c.alpha.end());
    for (const auto& p : sweep(c)) {
        const auto r = harness::validate_onsurface(db, test, p);
        if (p.alpha == max_alpha && r.accuracy_pct < c.min_accuracy) met = false;
        runs.push_back({{"params", params_json(p)}, {"result", harness::to_json(r)}});
    }
    const json report = {{"validation_2a", {{"data_space", db.size()}, {"tests", test.size()}, {"runs", runs}}},
                         {"thresholds", {{"min_accuracy_pct", c.min_accuracy}, {"alpha", max_alpha}, {"met", met}}}};
    write_json(out_dir(g) / "validate_a.json", report);
    std::cout << harness::render_text(report);
    return met ? kExitOk : kExitThreshold;
}

int run_validate_b(const Globals& g, const std::string& db_path, const std::string& test_csv) {
    const Config c = load(g);
    const auto db = classifier::PointCloudDB::load(db_path);
    const auto test = read_points(test_csv);
    harness::PerturbationSpec ps;
    ps.rng_seed = g.seed.value_or(c.perturb_seed);
    const auto labeled = harness::perturb(test, ps);
    json runs = json::array();
    for (const auto& p : sweep(c))
        runs.push_back({{"params", params_json(p)}, {"result", harness::to_json(harness::evaluate(db, labeled, p))}});
    const json report = {{"validation_2b", {{"data_space", db.size()}, {"tests", labeled.size()}, {"runs", runs}}}};
    write_json(out_dir(g) / "validate_b.json", report);
    std::cout << harness::render_text(report);
    return kExitOk;
}

int run_converge(const Globals& g) {
    const Config c = load(g);
    harness::ConvergenceSpec spec;
    const std::uint64_t base = g.seed.value_or(1);
    for (int i = 0; i < c.converge_models; ++i) spec.seeds.push_back(base + std::uint64_t(i));
    spec.windows = c.converge_windows;
    spec.divisions = c.converge_divisions;
    std::sort(spec.divisions.begin(), spec.divisions.end());
    spec.vf = c.vf;
    spec.radius_px = c.radius_px;
    spec.min_gap_px = c.min_gap_px;
    spec.threads = c.threads;
    const json report = {{"convergence", harness::to_json(harness::convergence_study(spec))}};
    write_json(out_dir(g) / "convergence.json", report);
    std::cout << harness::render_text(report);
    return kExitOk;
}

int run_pipeline(const Globals& g) {
    Config c = load(g);
    if (g.seed) {
        c.split_seed = *g.seed;
        c.perturb_seed = *g.seed + 1;
    }
    const auto result = harness::run_pipeline(c, out_dir(g));
    std::cout << harness::render_text(result.report);
    std::cout << "surface generation " << result.timing.surface_s + result.timing.validation_surface_s
              << " s, database build " << result.timing.db_build_s << " s, queries " << result.timing.query_s
              << " s\n";
    return result.thresholds_met ? kExitOk : kExitThreshold;
}

int exit_code(const std::exception& e) {
    if (const auto* s = dynamic_cast<const harness::StageError*>(&e)) return s->exit_code();
    if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
    if (dynamic_cast<const SolverFailure*>(&e) || dynamic_cast<const SingularJacobian*>(&e) ||
        dynamic_cast<const NoValidCandidate*>(&e) || dynamic_cast<const VfUnreachable*>(&e))
        return kExitNumeric;
    return kExitOther;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Composite failure-surface generation and point-cloud failure classification"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config_path, "key = value configuration file")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "seed for the subcommand's random stream");
    app.add_option("--threads", g.threads, "worker threads, 0 = logical cores");
    app.add_option("--out", g.out, "output directory")->capture_default_str();

    std::string micro, csv, db_path, test_csv;
    double sx = 0.0, sy = 0.0, txy = 0.0;
    std::optional<double> strain, alpha;
    std::optional<std::size_t> k;
    std::vector<std::string> points;

    auto* microgen_cmd = app.add_subcommand("microgen", "generate one periodic microstructure");
    auto* mesh_cmd = app.add_subcommand("mesh", "pixelate a microstructure into a quad mesh");
    mesh_cmd->add_option("--micro", micro, "microstructure text file (generated from --seed if omitted)");
    auto* solve_cmd = app.add_subcommand("solve", "solve one load case and print homogenized results");
    solve_cmd->add_option("--micro", micro, "microstructure text file (generated from --seed if omitted)");
    solve_cmd->add_option("--sx", sx, "boundary traction sx, psi");
    solve_cmd->add_option("--sy", sy, "boundary traction sy, psi");
    solve_cmd->add_option("--txy", txy, "boundary shear traction, psi");
    solve_cmd->add_option("--strain", strain, "uniaxial edge strain instead of tractions");
    auto* surface_cmd = app.add_subcommand("surface", "build the failure surface of the configured RVEs");
    auto* build_cmd = app.add_subcommand("build-db", "build the point-cloud database from a surface CSV");
    build_cmd->add_option("--surface", csv, "failure-surface CSV")->required()->check(CLI::ExistingFile);
    auto* query_cmd = app.add_subcommand("query", "classify stress points against a database");
    query_cmd->add_option("--db", db_path, "database snapshot")->required()->check(CLI::ExistingFile);
    query_cmd->add_option("--point", points, "sx,sy,sz,txy in psi (repeatable)")->required();
    query_cmd->add_option("--alpha", alpha, "safety factor (default: largest configured)");
    query_cmd->add_option("-k", k, "neighbor count (default: largest configured)");
    auto* va_cmd = app.add_subcommand("validate-a", "on-surface accuracy sweep on held-out points");
    va_cmd->add_option("--db", db_path, "database snapshot")->required()->check(CLI::ExistingFile);
    va_cmd->add_option("--test", test_csv, "failure-surface CSV of test points")->required()->check(CLI::ExistingFile);
    auto* vb_cmd = app.add_subcommand("validate-b", "perturbed-point FP/FN sweep");
    vb_cmd->add_option("--db", db_path, "database snapshot")->required()->check(CLI::ExistingFile);
    vb_cmd->add_option("--test", test_csv, "failure-surface CSV of points to perturb")->required()->check(CLI::ExistingFile);
    auto* converge_cmd = app.add_subcommand("converge", "effective-modulus convergence study");
    auto* pipeline_cmd = app.add_subcommand("pipeline", "full run: surfaces, database, validations, reports");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*microgen_cmd) return run_microgen(g);
        if (*mesh_cmd) return run_mesh(g, micro);
        if (*solve_cmd) return run_solve(g, micro, sx, sy, txy, strain);
        if (*surface_cmd) return run_surface(g);
        if (*build_cmd) return run_build_db(g, csv);
        if (*query_cmd) return run_query(g, db_path, points, alpha, k);
        if (*va_cmd) return run_validate_a(g, db_path, test_csv);
        if (*vb_cmd) return run_validate_b(g, db_path, test_csv);
        if (*converge_cmd) return run_converge(g);
        if (*pipeline_cmd) return run_pipeline(g);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e);
    }
    return kExitOther;
}
