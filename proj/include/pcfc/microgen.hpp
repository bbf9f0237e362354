#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace pcfc::microgen {

/// Upper bound on the area fraction of equal circles (hexagonal packing, pi/sqrt(12)).
inline constexpr double kHexPackingLimit = 0.9069;

/// Fiber radius in pixels: a ~5 um filament diameter at ~0.16 um per pixel.
inline constexpr double kDefaultRadiusPx = 15.6;

enum class Phase : std::uint8_t { Matrix = 0, Fiber = 1 };

const char* to_string(Phase p);

struct MicrostructureSpec {
    int window_px = 200;
    double target_vf = 0.6;
    double radius_px = kDefaultRadiusPx;
    double min_gap_px = 1.0;
    std::uint64_t rng_seed = 0;

    /// Throws std::invalid_argument on a malformed spec.
    void validate() const;
};

struct Inclusion {
    double cx = 0.0;
    double cy = 0.0;
    double r = 0.0;

    friend bool operator==(const Inclusion&, const Inclusion&) = default;
};

/// Periodic (torus) arrangement of circular inclusions in a W x W window.
struct Microstructure {
    int window_px = 0;
    std::vector<Inclusion> inclusions;
    double achieved_vf = 0.0;
    std::uint64_t seed = 0;

    friend bool operator==(const Microstructure&, const Microstructure&) = default;
};

/// Shortest distance between two points on the W x W torus.
double torus_distance(double x0, double y0, double x1, double y1, double window);

/// Analytic inclusion area over W^2. Each inclusion counts its full area once,
/// however its pieces wrap around the window.
double analytic_volume_fraction(const Microstructure& ms);

/// Smallest value of (torus distance - r_i - r_j) over all inclusion pairs;
/// +infinity with fewer than two inclusions.
double min_pair_gap(const Microstructure& ms);

/// Places equal circles until `target_vf` is met (within 0.01).
///
/// Targets up to 0.5 use random sequential addition. Denser targets, or RSA
/// runs that exhaust their attempt budget, seed a periodic hexagonal lattice
/// sized for the inclusion count, drop surplus sites at random and then shake
/// every inclusion with gap-preserving Monte Carlo moves.
///
/// Throws VfUnreachable when the target is at or above the hexagonal bound,
/// cannot be matched within 0.01 by a whole number of inclusions, or the
/// lattice cannot host the inclusions with the requested gap.
Microstructure generate(const MicrostructureSpec& spec);

/// Fiber iff the torus distance to some inclusion centre is <= its radius.
/// Coordinates are wrapped into [0, W).
Phase phase_at(const Microstructure& ms, double x, double y);

/// Checks the structural invariants of a microstructure read from outside:
/// positive window, in-window centres, radius >= 1, no overlaps, and a VF
/// header that agrees with the analytic area. Throws ValidationError.
void validate(const Microstructure& ms);

// Text format:
//   W <int> VF <real> SEED <int>
//   C <cx> <cy> <r>          (one per inclusion, pixels)
void write_text(const Microstructure& ms, std::ostream& out);
void write_text(const Microstructure& ms, const std::filesystem::path& path);
Microstructure read_text(std::istream& in);
Microstructure read_text(const std::filesystem::path& path);

}  // namespace pcfc::microgen
