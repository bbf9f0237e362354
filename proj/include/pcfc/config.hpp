#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace pcfc {

/// Run configuration, read from a flat `key = value` file. Lists are
/// comma-separated; `#` starts a comment. Unknown keys are rejected.
///
///   window_px           RVE window, pixels                     (200)
///   divisions           mesh elements per side                 (100)
///   vf                  target fiber area fraction             (0.6)
///   radius_px           fiber radius, pixels                   (15.6)
///   min_gap_px          minimum fiber-to-fiber gap, pixels     (1)
///   grid_m              traction levels per component (odd)    (5)
///   amplitude_psi       traction amplitude a                   (1000)
///   alpha               safety factors                         (0.001, 0.01, 0.05, 0.1)
///   epsilon             kNN approximation bound                (0)
///   k                   neighbor counts                        (3, 4)
///   split               training fraction for the on-surface test (0.8)
///   seeds               microstructure seeds of the database RVEs (139, 176)
///   validation_seed     microstructure seed of the held-out RVE (160)
///   split_seed          RNG stream for the train/test split    (1)
///   perturb_seed        RNG stream for the perturbed test set  (2)
///   threads             worker threads, 0 = logical cores      (0)
///   min_accuracy        on-surface accuracy (%) required at the largest alpha (95)
///   converge_windows    window sizes for the convergence study (113, 200, 325)
///   converge_divisions  mesh divisions for the convergence study (50, 100, 200)
///   converge_models     microstructures per window             (3)
struct Config {
    int window_px = 200;
    int divisions = 100;
    double vf = 0.6;
    double radius_px = 15.6;
    double min_gap_px = 1.0;
    int grid_m = 5;
    double amplitude_psi = 1000.0;
    std::vector<double> alpha{0.001, 0.01, 0.05, 0.1};
    double epsilon = 0.0;
    std::vector<std::size_t> k{3, 4};
    double split = 0.8;
    std::vector<std::uint64_t> seeds{139, 176};
    std::uint64_t validation_seed = 160;
    std::uint64_t split_seed = 1;
    std::uint64_t perturb_seed = 2;
    unsigned threads = 0;
    double min_accuracy = 95.0;
    std::vector<int> converge_windows{113, 200, 325};
    std::vector<int> converge_divisions{50, 100, 200};
    int converge_models = 3;

    /// Throws ConfigError naming the offending key.
    void validate() const;
};

/// Throws ConfigError (unknown key, bad value, duplicate key) with the line number.
Config parse_config(std::istream& in);
Config load_config(const std::filesystem::path& path);

/// Canonical `key = value` rendering, readable by parse_config.
std::string to_text(const Config& c);

}  // namespace pcfc
