#include "pcfc/harness.hpp"

#include "pcfc/mesh.hpp"
#include "pcfc/microgen.hpp"
#include "pcfc/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace pcfc::harness {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return 2;
    if (dynamic_cast<const SolverFailure*>(&e) || dynamic_cast<const SingularJacobian*>(&e) ||
        dynamic_cast<const NoValidCandidate*>(&e) || dynamic_cast<const VfUnreachable*>(&e))
        return 3;
    return 1;
}

template <class Fn>
auto stage(const char* name, Fn&& fn) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what(), exit_code_for(e));
    }
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << text;
}

nlohmann::json optional_json(const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::string fmt_fixed(double v, int digits) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

std::string bracket(const nlohmann::json& lo, const nlohmann::json& hi) {
    if (lo.is_null() || hi.is_null()) return "[NA, NA]";
    return "[" + fmt_fixed(lo.get<double>(), 1) + ", " + fmt_fixed(hi.get<double>(), 1) + "]";
}

}  // namespace

// ---------------------------------------------------------------------------

SplitIndices split(std::size_t n, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw std::invalid_argument("split fraction must lie in (0, 1)");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_train = static_cast<std::size_t>(std::llround(fraction * double(n)));
    SplitIndices out;
    out.train.assign(idx.begin(), idx.begin() + std::ptrdiff_t(n_train));
    out.test.assign(idx.begin() + std::ptrdiff_t(n_train), idx.end());
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

std::size_t bin_index(std::span<const double> p) {
    std::size_t b = 0;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p[i] >= 0.0) b |= std::size_t{1} << i;
    return b;
}

BinHistogram bin_distribution(std::span<const Point4> points) {
    BinHistogram h;
    h.counts.assign(16, 0);
    for (const auto& p : points) ++h.counts[bin_index(p)];
    h.min = *std::min_element(h.counts.begin(), h.counts.end());
    h.max = *std::max_element(h.counts.begin(), h.counts.end());
    h.avg = double(points.size()) / double(h.counts.size());
    h.zero_bins = std::size_t(std::count(h.counts.begin(), h.counts.end(), 0));
    return h;
}

OnSurfaceReport validate_onsurface(const classifier::PointCloudDB& db, std::span<const Point4> test,
                                   const classifier::QueryParams& params) {
    if (test.empty()) throw EmptyTestSet("on-surface validation needs at least one test point");
    OnSurfaceReport r;
    r.tests = test.size();
    for (const auto& q : test)
        if (classifier::classify(db, q, params).decision == classifier::Decision::Outside) ++r.outside;
    r.accuracy_pct = 100.0 * double(r.outside) / double(r.tests);
    return r;
}

void PerturbationSpec::validate() const {
    if (!(intact_fraction >= 0.0 && intact_fraction <= 1.0))
        throw std::invalid_argument("intact fraction must lie in [0, 1]");
    if (!(scale_min > 0.0 && scale_min < scale_max)) throw std::invalid_argument("scale range must be 0 < min < max");
}

LabeledPoint scale_point(const Point4& p, double f) {
    LabeledPoint lp;
    for (std::size_t i = 0; i < 4; ++i) lp.stress[i] = f * p[i];
    lp.factor = f;
    lp.label = f < 1.0 ? classifier::Decision::Inside : classifier::Decision::Outside;
    return lp;
}

std::vector<LabeledPoint> perturb(std::span<const Point4> points, const PerturbationSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.rng_seed);
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const auto n_intact = static_cast<std::size_t>(std::llround(spec.intact_fraction * double(points.size())));
    std::vector<bool> intact(points.size(), false);
    for (std::size_t i = 0; i < n_intact; ++i) intact[order[i]] = true;

    std::uniform_real_distribution<double> factor(spec.scale_min, spec.scale_max);
    std::vector<LabeledPoint> out;
    out.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (intact[i]) {
            LabeledPoint lp;
            lp.stress = points[i];
            lp.intact = true;
            out.push_back(lp);
        } else {
            out.push_back(scale_point(points[i], factor(rng)));
        }
    }
    return out;
}

double distance_error_pct(const classifier::PointCloudDB& db, const classifier::Verdict& v) {
    return (v.query_norm - v.neighbor_norm) / db.sigma_range() * 100.0;
}

ReportB evaluate(const classifier::PointCloudDB& db, std::span<const LabeledPoint> labeled,
                 const classifier::QueryParams& params) {
    if (labeled.empty()) throw EmptyTestSet("perturbed validation needs at least one test point");
    ReportB r;
    r.tests = labeled.size();
    auto widen = [](std::optional<double>& lo, std::optional<double>& hi, double v) {
        lo = lo ? std::min(*lo, v) : v;
        hi = hi ? std::max(*hi, v) : v;
    };
    for (const auto& lp : labeled) {
        const auto v = classifier::classify(db, lp.stress, params);
        if (v.decision == lp.label) {
            ++r.correct;
        } else if (v.decision == classifier::Decision::Outside) {
            ++r.false_positives;
            widen(r.fp_error_min, r.fp_error_max, distance_error_pct(db, v));
        } else {
            ++r.false_negatives;
            widen(r.fn_error_min, r.fn_error_max, distance_error_pct(db, v));
        }
    }
    r.correct_pct = 100.0 * double(r.correct) / double(r.tests);
    return r;
}

// ---------------------------------------------------------------------------

ConvergenceStudy convergence_study(const ConvergenceSpec& spec) {
    if (spec.seeds.empty() || spec.windows.empty() || spec.divisions.empty())
        throw std::invalid_argument("convergence study needs seeds, windows and divisions");
    ConvergenceStudy study;

    // Homogeneous control: the window size does not matter for a uniform plate.
    {
        const mesh::QuadMesh control_mesh = mesh::structured_grid(spec.windows.front(), spec.divisions.front());
        const auto& m = spec.materials.matrix;
        study.control.e22 = fea::effective_modulus(control_mesh, spec.materials).e22;
        study.control.expected = m.E / (1.0 - m.nu * m.nu);
        study.control.pct_diff = (study.control.e22 - study.control.expected) / study.control.expected * 100.0;
    }

    struct Job {
        std::size_t w, s, d;
    };
    std::vector<Job> jobs;
    for (std::size_t w = 0; w < spec.windows.size(); ++w)
        for (std::size_t s = 0; s < spec.seeds.size(); ++s)
            for (std::size_t d = 0; d < spec.divisions.size(); ++d) jobs.push_back({w, s, d});

    // Microstructures first, sequentially, so that placement errors surface in order.
    std::vector<std::vector<microgen::Microstructure>> micro(spec.windows.size());
    for (std::size_t w = 0; w < spec.windows.size(); ++w)
        for (auto seed : spec.seeds)
            micro[w].push_back(microgen::generate(
                {spec.windows[w], spec.vf, spec.radius_px, spec.min_gap_px, seed}));

    std::vector<fea::EffectiveModulus> result(jobs.size());
    parallel_for(jobs.size(), spec.threads, [&](std::size_t j) {
        const auto& job = jobs[j];
        const auto m = mesh::pixelate(micro[job.w][job.s], spec.divisions[job.d]);
        result[j] = fea::effective_modulus(m, spec.materials);
    });

    auto at = [&](std::size_t w, std::size_t s, std::size_t d) -> const fea::EffectiveModulus& {
        return result[(w * spec.seeds.size() + s) * spec.divisions.size() + d];
    };
    const std::size_t finest = spec.divisions.size() - 1;
    for (std::size_t w = 0; w < spec.windows.size(); ++w) {
        std::size_t best = 0;
        for (std::size_t s = 1; s < spec.seeds.size(); ++s)
            if (std::abs(kE22Experimental - at(w, s, finest).e22) < std::abs(kE22Experimental - at(w, best, finest).e22))
                best = s;
        ConvergenceRow row;
        row.window = spec.windows[w];
        row.models = int(spec.seeds.size());
        row.best_seed = spec.seeds[best];
        row.divisions = spec.divisions[finest];
        row.nodes = std::size_t(row.divisions + 1) * (row.divisions + 1);
        row.elements = std::size_t(row.divisions) * row.divisions;
        row.e22 = at(w, best, finest).e22;
        row.nu23 = at(w, best, finest).nu23;
        row.pct_error = (kE22Experimental - row.e22) / kE22Experimental * 100.0;
        for (std::size_t d = 0; d < spec.divisions.size(); ++d) row.e22_by_divisions.push_back(at(w, best, d).e22);
        if (finest > 0) {
            const double prev = at(w, best, finest - 1).e22;
            row.refinement_change_pct = (row.e22 - prev) / prev * 100.0;
        }
        study.rows.push_back(std::move(row));
    }
    return study;
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const BinHistogram& h) {
    return {{"counts", h.counts}, {"min", h.min}, {"max", h.max}, {"avg", h.avg}, {"zero", h.zero_bins}};
}

nlohmann::json to_json(const OnSurfaceReport& r) {
    return {{"tests", r.tests}, {"outside", r.outside}, {"accuracy_pct", r.accuracy_pct}};
}

nlohmann::json to_json(const ReportB& r) {
    return {{"tests", r.tests},
            {"correct", r.correct},
            {"correct_pct", r.correct_pct},
            {"false_positives", r.false_positives},
            {"fp_error_pct", {optional_json(r.fp_error_min), optional_json(r.fp_error_max)}},
            {"false_negatives", r.false_negatives},
            {"fn_error_pct", {optional_json(r.fn_error_min), optional_json(r.fn_error_max)}}};
}

nlohmann::json to_json(const ConvergenceStudy& s) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : s.rows)
        rows.push_back({{"window", r.window},
                        {"models", r.models},
                        {"best_seed", r.best_seed},
                        {"divisions", r.divisions},
                        {"nodes", r.nodes},
                        {"elements", r.elements},
                        {"e22_psi", r.e22},
                        {"nu23", r.nu23},
                        {"pct_error", r.pct_error},
                        {"refinement_change_pct", r.refinement_change_pct},
                        {"e22_by_divisions", r.e22_by_divisions}});
    return {{"e22_experimental_psi", kE22Experimental},
            {"rows", rows},
            {"control", {{"e22_psi", s.control.e22}, {"expected_psi", s.control.expected}, {"pct_diff", s.control.pct_diff}}}};
}

std::string rve_id(std::uint64_t seed) { return "rve" + std::to_string(seed); }

namespace {

std::vector<classifier::QueryParams> parameter_sweep(const Config& c) {
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

nlohmann::json params_json(const classifier::QueryParams& p) {
    return {{"alpha", p.alpha}, {"epsilon", p.epsilon}, {"k", p.k}};
}

nlohmann::json config_json(const Config& c) {
    return {{"window_px", c.window_px},     {"divisions", c.divisions},   {"vf", c.vf},
            {"radius_px", c.radius_px},     {"min_gap_px", c.min_gap_px}, {"grid_m", c.grid_m},
            {"amplitude_psi", c.amplitude_psi}, {"alpha", c.alpha},       {"epsilon", c.epsilon},
            {"k", c.k},                     {"split", c.split},           {"seeds", c.seeds},
            {"validation_seed", c.validation_seed}, {"split_seed", c.split_seed},
            {"perturb_seed", c.perturb_seed}, {"min_accuracy", c.min_accuracy}};
}

nlohmann::json materials_json(const fea::PhaseMaterials& m) {
    auto one = [](const fea::Material& x) {
        return nlohmann::json{{"E_psi", x.E}, {"nu", x.nu}, {"sigma_f_t_psi", x.sigma_f_t}, {"sigma_f_c_psi", x.sigma_f_c}};
    };
    return {{"fiber", one(m.fiber)}, {"matrix", one(m.matrix)}};
}

}  // namespace

PipelineResult run_pipeline(const Config& config, const std::filesystem::path& out_dir) {
    stage("config", [&] {
        config.validate();
        if (std::find(config.seeds.begin(), config.seeds.end(), config.validation_seed) != config.seeds.end())
            throw ConfigError("key 'validation_seed': must differ from every database seed");
        return 0;
    });
    std::filesystem::create_directories(out_dir);

    PipelineResult result;
    const fea::PhaseMaterials materials;
    const surface::LoadGrid grid{config.grid_m, config.amplitude_psi};
    nlohmann::json& report = result.report;
    report["config"] = config_json(config);
    report["materials"] = materials_json(materials);

    // microgen
    auto make_rve = [&](std::uint64_t seed) {
        return stage("microgen", [&] {
            microgen::MicrostructureSpec spec{config.window_px, config.vf, config.radius_px, config.min_gap_px, seed};
            surface::RveInput rve{rve_id(seed), microgen::generate(spec), config.divisions};
            microgen::write_text(rve.microstructure, out_dir / ("microstructure_" + std::to_string(seed) + ".txt"));
            return rve;
        });
    };
    std::vector<surface::RveInput> db_rves;
    for (auto seed : config.seeds) db_rves.push_back(make_rve(seed));
    const std::vector<surface::RveInput> validation_rves{make_rve(config.validation_seed)};

    nlohmann::json rves = nlohmann::json::array();
    for (const auto* group : std::array<const std::vector<surface::RveInput>*, 2>{&db_rves, &validation_rves})
        for (const auto& r : *group)
            rves.push_back(nlohmann::json{{"id", r.id},
                            {"seed", r.microstructure.seed},
                            {"inclusions", r.microstructure.inclusions.size()},
                            {"achieved_vf", r.microstructure.achieved_vf},
                            {"mesh_vf", mesh::mesh_volume_fraction(mesh::pixelate(r.microstructure, r.divisions))},
                            {"role", group == &db_rves ? "database" : "validation"}});
    report["rves"] = rves;

    // FEA batch + surface
    const surface::BuildOptions build_opts{config.threads};
    auto t0 = Clock::now();
    result.surface = stage("surface", [&] { return surface::build_surface(db_rves, grid, materials, build_opts); });
    result.timing.surface_s = seconds_since(t0);
    t0 = Clock::now();
    result.validation_surface =
        stage("surface", [&] { return surface::build_surface(validation_rves, grid, materials, build_opts); });
    result.timing.validation_surface_s = seconds_since(t0);
    stage("surface", [&] {
        surface::export_csv(result.surface, out_dir / "surface.csv");
        surface::export_csv(result.validation_surface, out_dir / "validation_surface.csv");
        return 0;
    });

    const auto cloud = result.surface.coordinates();
    const auto held_out = result.validation_surface.coordinates();
    {
        std::array<std::size_t, 4> modes{};
        for (const auto& p : result.surface.points) ++modes[static_cast<std::size_t>(p.mode)];
        report["surface"] = {{"load_cases_per_rve", grid.case_count()},
                             {"points", cloud.size()},
                             {"modes", {{"FT", modes[0]}, {"FC", modes[1]}, {"MT", modes[2]}, {"MC", modes[3]}}},
                             {"bins", to_json(bin_distribution(cloud))}};
    }

    // database
    t0 = Clock::now();
    const auto db = stage("build-db", [&] {
        auto built = classifier::PointCloudDB::build<4>(std::span<const Point4>(cloud));
        built.save(out_dir / "db.bin");
        return built;
    });
    result.timing.db_build_s = seconds_since(t0);
    report["database"] = {{"points", db.size()},
                          {"sigma_max", db.sigma_max()},
                          {"sigma_min", db.sigma_min()},
                          {"sigma_range", db.sigma_range()}};

    const auto sweep = parameter_sweep(config);
    const double max_alpha = *std::max_element(config.alpha.begin(), config.alpha.end());

    // on-surface accuracy with a random train/test split of the database cloud
    stage("validate-1", [&] {
        const auto parts = split(cloud.size(), config.split, config.split_seed);
        const auto train = gather<Point4>(cloud, parts.train);
        const auto test = gather<Point4>(cloud, parts.test);
        const auto train_db = classifier::PointCloudDB::build<4>(std::span<const Point4>(train));
        nlohmann::json runs = nlohmann::json::array();
        for (const auto& p : sweep) {
            const auto r = validate_onsurface(train_db, test, p);
            if (p.alpha == max_alpha && r.accuracy_pct < config.min_accuracy) result.thresholds_met = false;
            runs.push_back({{"params", params_json(p)}, {"result", to_json(r)}});
        }
        report["validation_1"] = {{"data_space", cloud.size()},
                                  {"train", train.size()},
                                  {"tests", test.size()},
                                  {"bins", to_json(bin_distribution(cloud))},
                                  {"runs", runs}};
        return 0;
    });

    // held-out RVE: genuine surface points
    t0 = Clock::now();
    stage("validate-2a", [&] {
        nlohmann::json runs = nlohmann::json::array();
        for (const auto& p : sweep)
            runs.push_back({{"params", params_json(p)}, {"result", to_json(validate_onsurface(db, held_out, p))}});
        report["validation_2a"] = {{"data_space", db.size()}, {"tests", held_out.size()}, {"runs", runs}};
        return 0;
    });
    result.timing.query_s = seconds_since(t0);

    // held-out RVE: perturbed points
    stage("validate-2b", [&] {
        PerturbationSpec ps;
        ps.rng_seed = config.perturb_seed;
        const auto labeled = perturb(held_out, ps);
        nlohmann::json runs = nlohmann::json::array();
        for (const auto& p : sweep)
            runs.push_back({{"params", params_json(p)}, {"result", to_json(evaluate(db, labeled, p))}});
        std::size_t inside = 0;
        for (const auto& lp : labeled) inside += lp.label == classifier::Decision::Inside;
        report["validation_2b"] = {{"data_space", db.size()},
                                   {"tests", labeled.size()},
                                   {"labelled_inside", inside},
                                   {"runs", runs}};
        return 0;
    });

    report["thresholds"] = {{"min_accuracy_pct", config.min_accuracy}, {"alpha", max_alpha}, {"met", result.thresholds_met}};

    stage("report", [&] {
        write_file(out_dir / "report.json", report.dump(2) + "\n");
        write_file(out_dir / "report.txt", render_text(report));
        const double total = result.timing.surface_s + result.timing.validation_surface_s + result.timing.db_build_s +
                             result.timing.query_s;
        const nlohmann::json timing = {
            {"surface_generation_s", result.timing.surface_s + result.timing.validation_surface_s},
            {"db_build_s", result.timing.db_build_s},
            {"query_s", result.timing.query_s},
            {"surface_fraction", total > 0.0 ? (result.timing.surface_s + result.timing.validation_surface_s) / total : 0.0}};
        write_file(out_dir / "timing.json", timing.dump(2) + "\n");
        return 0;
    });
    return result;
}

std::string render_text(const nlohmann::json& report) {
    std::ostringstream out;
    auto line = [&](const std::string& s) { out << s << '\n'; };

    if (report.contains("surface")) {
        const auto& s = report["surface"];
        const auto& b = s["bins"];
        line("Failure surface: " + std::to_string(s["points"].get<std::size_t>()) + " points (" +
             std::to_string(s["load_cases_per_rve"].get<std::size_t>()) + " load cases per RVE)");
        line("  modes FT/FC/MT/MC: " + std::to_string(s["modes"]["FT"].get<std::size_t>()) + "/" +
             std::to_string(s["modes"]["FC"].get<std::size_t>()) + "/" +
             std::to_string(s["modes"]["MT"].get<std::size_t>()) + "/" +
             std::to_string(s["modes"]["MC"].get<std::size_t>()));
        line("  bins (min, max, avg, zero): (" + std::to_string(b["min"].get<std::size_t>()) + ", " +
             std::to_string(b["max"].get<std::size_t>()) + ", " + fmt_fixed(b["avg"].get<double>(), 1) + ", " +
             std::to_string(b["zero"].get<std::size_t>()) + ")");
    }
    if (report.contains("database"))
        line("Database: sigma_range = " + fmt_fixed(report["database"]["sigma_range"].get<double>(), 1) + " psi");

    auto accuracy_table = [&](const char* title, const nlohmann::json& v) {
        line("");
        line(std::string(title) + " (data space " + std::to_string(v["data_space"].get<std::size_t>()) + ")");
        line("  (alpha, eps, k)           tests   accuracy %");
        for (const auto& r : v["runs"]) {
            std::ostringstream row;
            row << "  (" << r["params"]["alpha"].get<double>() << ", " << r["params"]["epsilon"].get<double>() << ", "
                << r["params"]["k"].get<std::size_t>() << ")";
            std::string s = row.str();
            s.resize(std::max<std::size_t>(s.size(), 28), ' ');
            s += std::to_string(r["result"]["tests"].get<std::size_t>());
            s.resize(std::max<std::size_t>(s.size(), 36), ' ');
            s += fmt_fixed(r["result"]["accuracy_pct"].get<double>(), 1);
            line(s);
        }
    };
    if (report.contains("validation_1")) accuracy_table("Validation 1: on-surface split", report["validation_1"]);
    if (report.contains("validation_2a")) accuracy_table("Validation 2A: held-out RVE", report["validation_2a"]);
    if (report.contains("validation_2b")) {
        const auto& v = report["validation_2b"];
        line("");
        line("Validation 2B: perturbed held-out RVE (" + std::to_string(v["tests"].get<std::size_t>()) + " tests)");
        line("  (alpha, eps, k)           correct (%)      FP   FP error %        FN   FN error %");
        for (const auto& r : v["runs"]) {
            const auto& res = r["result"];
            std::ostringstream row;
            row << "  (" << r["params"]["alpha"].get<double>() << ", " << r["params"]["epsilon"].get<double>() << ", "
                << r["params"]["k"].get<std::size_t>() << ")";
            std::string s = row.str();
            s.resize(std::max<std::size_t>(s.size(), 28), ' ');
            s += std::to_string(res["correct"].get<std::size_t>()) + " (" + fmt_fixed(res["correct_pct"].get<double>(), 0) + ")";
            s.resize(std::max<std::size_t>(s.size(), 45), ' ');
            s += std::to_string(res["false_positives"].get<std::size_t>());
            s.resize(std::max<std::size_t>(s.size(), 50), ' ');
            s += bracket(res["fp_error_pct"][0], res["fp_error_pct"][1]);
            s.resize(std::max<std::size_t>(s.size(), 68), ' ');
            s += std::to_string(res["false_negatives"].get<std::size_t>());
            s.resize(std::max<std::size_t>(s.size(), 73), ' ');
            s += bracket(res["fn_error_pct"][0], res["fn_error_pct"][1]);
            line(s);
        }
    }
    if (report.contains("convergence")) {
        const auto& c = report["convergence"];
        line("");
        line("Convergence (E22 vs " + fmt_fixed(c["e22_experimental_psi"].get<double>(), 0) + " psi)");
        line("  W     models  divisions  nodes    elements  E22 (psi)     error %   refinement %");
        for (const auto& r : c["rows"]) {
            std::ostringstream row;
            row << "  " << std::left << std::setw(6) << r["window"].get<int>() << std::setw(8) << r["models"].get<int>()
                << std::setw(11) << r["divisions"].get<int>() << std::setw(9) << r["nodes"].get<std::size_t>()
                << std::setw(10) << r["elements"].get<std::size_t>() << std::setw(14)
                << fmt_fixed(r["e22_psi"].get<double>(), 0) << std::setw(10) << fmt_fixed(r["pct_error"].get<double>(), 2)
                << fmt_fixed(r["refinement_change_pct"].get<double>(), 2);
            line(row.str());
        }
        line("  homogeneous control: " + fmt_fixed(c["control"]["e22_psi"].get<double>(), 0) + " psi vs " +
             fmt_fixed(c["control"]["expected_psi"].get<double>(), 0) + " psi analytic");
    }
    if (report.contains("thresholds"))
        line(std::string("\nThresholds ") + (report["thresholds"]["met"].get<bool>() ? "met" : "NOT met"));
    return out.str();
}

}  // namespace pcfc::harness
