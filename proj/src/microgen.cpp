#include "pcfc/microgen.hpp"

#include "pcfc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

namespace pcfc::microgen {

namespace {

constexpr double kVfTolerance = 0.01;
constexpr std::size_t kRsaAttemptsPerInclusion = 20000;
constexpr int kShakeSweeps = 200;

double wrap(double v, double window) {
    double w = std::fmod(v, window);
    if (w < 0.0) w += window;
    // fmod of a tiny negative number can round up to exactly `window`
    return w >= window ? 0.0 : w;
}

bool fits(const std::vector<Inclusion>& placed, std::size_t skip, double x, double y, double r,
          double gap, double window) {
    for (std::size_t j = 0; j < placed.size(); ++j) {
        if (j == skip) continue;
        const auto& o = placed[j];
        if (torus_distance(x, y, o.cx, o.cy, window) < r + o.r + gap) return false;
    }
    return true;
}

std::size_t inclusion_count(const MicrostructureSpec& spec) {
    const double window_area = double(spec.window_px) * spec.window_px;
    const double disk = std::numbers::pi * spec.radius_px * spec.radius_px;
    const double ideal = spec.target_vf * window_area / disk;
    const auto lo = static_cast<std::size_t>(std::floor(ideal));
    std::size_t best = lo;
    double best_err = std::abs(lo * disk / window_area - spec.target_vf);
    const double hi_err = std::abs((lo + 1) * disk / window_area - spec.target_vf);
    if (hi_err < best_err) {
        best = lo + 1;
        best_err = hi_err;
    }
    if (best_err > kVfTolerance) {
        std::ostringstream msg;
        msg << "target vf " << spec.target_vf << " cannot be matched within " << kVfTolerance
            << " by whole inclusions of radius " << spec.radius_px << " px in a "
            << spec.window_px << " px window";
        throw VfUnreachable(msg.str());
    }
    return best;
}

bool random_sequential_addition(const MicrostructureSpec& spec, std::size_t n, std::mt19937_64& rng,
                                std::vector<Inclusion>& out) {
    const double w = spec.window_px;
    std::uniform_real_distribution<double> coord(0.0, w);
    const std::size_t budget = kRsaAttemptsPerInclusion * std::max<std::size_t>(n, 1);
    out.clear();
    for (std::size_t attempt = 0; attempt < budget && out.size() < n; ++attempt) {
        const double x = coord(rng);
        const double y = coord(rng);
        if (fits(out, out.size(), x, y, spec.radius_px, spec.min_gap_px, w))
            out.push_back({x, y, spec.radius_px});
    }
    return out.size() == n;
}

struct Lattice {
    int rows = 0;
    int cols = 0;
    double min_distance = 0.0;
};

// Sites of a staggered lattice that tiles the torus; rows is even so the
// half-spacing offset of odd rows wraps consistently.
std::vector<std::pair<double, double>> lattice_sites(const Lattice& lat, double w) {
    const double dx = w / lat.cols;
    const double dy = w / lat.rows;
    std::vector<std::pair<double, double>> sites;
    sites.reserve(std::size_t(lat.rows) * lat.cols);
    for (int j = 0; j < lat.rows; ++j) {
        const double offset = (j % 2) ? 0.5 * dx : 0.0;
        for (int i = 0; i < lat.cols; ++i) sites.emplace_back((i + 0.5) * dx + offset, (j + 0.5) * dy);
    }
    return sites;
}

Lattice best_lattice(std::size_t n, double w) {
    Lattice best;
    const int max_rows = 2 * static_cast<int>(std::ceil(std::sqrt(double(n)))) + 4;
    for (int rows = 2; rows <= max_rows; rows += 2) {
        Lattice lat{rows, static_cast<int>((n + rows - 1) / rows), 0.0};
        if (lat.cols < 1) lat.cols = 1;
        const auto sites = lattice_sites(lat, w);
        double dmin = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < sites.size(); ++a)
            for (std::size_t b = a + 1; b < sites.size(); ++b)
                dmin = std::min(dmin, torus_distance(sites[a].first, sites[a].second, sites[b].first,
                                                     sites[b].second, w));
        // A single site is only limited by its own periodic image.
        if (sites.size() == 1) dmin = w;
        lat.min_distance = dmin;
        const bool better = lat.min_distance > best.min_distance + 1e-12 ||
                            (std::abs(lat.min_distance - best.min_distance) <= 1e-12 &&
                             lat.rows * lat.cols < best.rows * best.cols);
        if (best.rows == 0 || better) best = lat;
    }
    return best;
}

std::vector<Inclusion> jittered_lattice(const MicrostructureSpec& spec, std::size_t n, std::mt19937_64& rng) {
    const double w = spec.window_px;
    const double r = spec.radius_px;
    const double contact = 2.0 * r + spec.min_gap_px;
    const Lattice lat = best_lattice(n, w);
    if (lat.min_distance < contact) {
        std::ostringstream msg;
        msg << "lattice spacing " << lat.min_distance << " px is below the contact distance " << contact
            << " px for " << n << " inclusions";
        throw VfUnreachable(msg.str());
    }

    auto sites = lattice_sites(lat, w);
    std::shuffle(sites.begin(), sites.end(), rng);
    sites.resize(n);

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double shift_x = unit(rng) * w;
    const double shift_y = unit(rng) * w;
    std::vector<Inclusion> out;
    out.reserve(n);
    for (const auto& [x, y] : sites) out.push_back({wrap(x + shift_x, w), wrap(y + shift_y, w), r});

    double step = r;
    for (int sweep = 0; sweep < kShakeSweeps; ++sweep) {
        std::size_t accepted = 0;
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double x = wrap(out[i].cx + (2.0 * unit(rng) - 1.0) * step, w);
            const double y = wrap(out[i].cy + (2.0 * unit(rng) - 1.0) * step, w);
            if (fits(out, i, x, y, r, spec.min_gap_px, w)) {
                out[i].cx = x;
                out[i].cy = y;
                ++accepted;
            }
        }
        const double rate = out.empty() ? 1.0 : double(accepted) / out.size();
        if (rate < 0.3)
            step *= 0.8;
        else if (rate > 0.5)
            step = std::min(step * 1.2, 0.5 * w);
    }
    return out;
}

}  // namespace

const char* to_string(Phase p) { return p == Phase::Fiber ? "Fiber" : "Matrix"; }

void MicrostructureSpec::validate() const {
    if (window_px <= 0) throw std::invalid_argument("window_px must be positive");
    if (!(target_vf >= 0.0 && target_vf < 1.0)) throw std::invalid_argument("target_vf must lie in [0, 1)");
    if (!(radius_px >= 1.0)) throw std::invalid_argument("radius_px must be >= 1");
    if (!(min_gap_px >= 0.0)) throw std::invalid_argument("min_gap_px must be >= 0");
}

double torus_distance(double x0, double y0, double x1, double y1, double window) {
    double dx = std::abs(x0 - x1);
    double dy = std::abs(y0 - y1);
    dx = std::fmod(dx, window);
    dy = std::fmod(dy, window);
    dx = std::min(dx, window - dx);
    dy = std::min(dy, window - dy);
    return std::hypot(dx, dy);
}

double analytic_volume_fraction(const Microstructure& ms) {
    double area = 0.0;
    for (const auto& inc : ms.inclusions) area += std::numbers::pi * inc.r * inc.r;
    return area / (double(ms.window_px) * ms.window_px);
}

double min_pair_gap(const Microstructure& ms) {
    double gap = std::numeric_limits<double>::infinity();
    const auto& inc = ms.inclusions;
    for (std::size_t i = 0; i < inc.size(); ++i)
        for (std::size_t j = i + 1; j < inc.size(); ++j)
            gap = std::min(gap, torus_distance(inc[i].cx, inc[i].cy, inc[j].cx, inc[j].cy, ms.window_px) -
                                    inc[i].r - inc[j].r);
    return gap;
}

Microstructure generate(const MicrostructureSpec& spec) {
    spec.validate();
    if (spec.target_vf >= kHexPackingLimit)
        throw VfUnreachable("target vf " + std::to_string(spec.target_vf) +
                            " is at or above the hexagonal packing limit");

    Microstructure ms;
    ms.window_px = spec.window_px;
    ms.seed = spec.rng_seed;

    const std::size_t n = inclusion_count(spec);
    if (n > 0) {
        if (2.0 * spec.radius_px + spec.min_gap_px > spec.window_px)
            throw VfUnreachable("inclusion diameter plus gap exceeds the window");
        std::mt19937_64 rng(spec.rng_seed);
        bool placed = false;
        if (spec.target_vf <= 0.5) placed = random_sequential_addition(spec, n, rng, ms.inclusions);
        if (!placed) ms.inclusions = jittered_lattice(spec, n, rng);
    }
    ms.achieved_vf = analytic_volume_fraction(ms);
    return ms;
}

Phase phase_at(const Microstructure& ms, double x, double y) {
    const double w = ms.window_px;
    x = wrap(x, w);
    y = wrap(y, w);
    for (const auto& inc : ms.inclusions)
        if (torus_distance(x, y, inc.cx, inc.cy, w) <= inc.r) return Phase::Fiber;
    return Phase::Matrix;
}

void validate(const Microstructure& ms) {
    if (ms.window_px <= 0) throw ValidationError("window must be positive");
    for (std::size_t i = 0; i < ms.inclusions.size(); ++i) {
        const auto& inc = ms.inclusions[i];
        if (!(inc.cx >= 0.0 && inc.cx < ms.window_px && inc.cy >= 0.0 && inc.cy < ms.window_px))
            throw ValidationError("inclusion " + std::to_string(i) + " centre lies outside the window");
        if (!(inc.r >= 1.0)) throw ValidationError("inclusion " + std::to_string(i) + " radius below 1 px");
    }
    const double gap = min_pair_gap(ms);
    if (gap < 0.0) {
        std::ostringstream msg;
        msg << "inclusions overlap (minimum gap " << gap << " px)";
        throw ValidationError(msg.str());
    }
    const double vf = analytic_volume_fraction(ms);
    if (std::abs(vf - ms.achieved_vf) > 1e-9 * std::max(1.0, vf)) {
        std::ostringstream msg;
        msg << "VF header " << ms.achieved_vf << " disagrees with inclusion area " << vf;
        throw ValidationError(msg.str());
    }
}

void write_text(const Microstructure& ms, std::ostream& out) {
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    out << "W " << ms.window_px << " VF " << ms.achieved_vf << " SEED " << ms.seed << '\n';
    for (const auto& inc : ms.inclusions) out << "C " << inc.cx << ' ' << inc.cy << ' ' << inc.r << '\n';
}

void write_text(const Microstructure& ms, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    write_text(ms, out);
}

Microstructure read_text(std::istream& in) {
    Microstructure ms;
    bool have_header = false;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag.front() == '#') continue;
        if (!have_header) {
            std::string vf_tag, seed_tag;
            if (tag != "W" || !(ls >> ms.window_px >> vf_tag >> ms.achieved_vf >> seed_tag >> ms.seed) ||
                vf_tag != "VF" || seed_tag != "SEED")
                throw ParseError("expected header 'W <int> VF <real> SEED <int>'", lineno);
            have_header = true;
        } else {
            Inclusion inc;
            if (tag != "C" || !(ls >> inc.cx >> inc.cy >> inc.r))
                throw ParseError("expected 'C <cx> <cy> <r>'", lineno);
            ms.inclusions.push_back(inc);
        }
        std::string extra;
        if (ls >> extra) throw ParseError("unexpected trailing token '" + extra + "'", lineno);
    }
    if (!have_header) throw ParseError("missing header", lineno);
    validate(ms);
    return ms;
}

Microstructure read_text(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    return read_text(in);
}

}  // namespace pcfc::microgen
