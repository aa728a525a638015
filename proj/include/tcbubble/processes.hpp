#pragma once

// Seeded path simulation for the continuous-time examples: geometric
// Brownian motion, the stopped fBm model, the 3-D inverse Bessel process and
// the bubble-birth SDE.
//
// Every path owns its own generator, seeded from (seed, stream, path), so a
// path's values never depend on how many other paths are simulated. Gaussian
// increments and the random bubble time use disjoint streams.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "tcbubble/errors.hpp"

namespace tcbubble {

struct TimeGrid {
    double t0 = 0.0;
    double t1 = 1.0;
    std::size_t steps = 1;

    double spacing() const { return (t1 - t0) / static_cast<double>(steps); }
    double time(std::size_t k) const { return t0 + static_cast<double>(k) * spacing(); }
    /// Throws BadConfig unless t1 > t0 and steps >= 1.
    void validate() const;
};

/// Which grid points are kept. stride = 0 keeps only the first and last
/// point; otherwise every stride-th point plus the last.
struct Recording {
    std::size_t stride = 1;
};

struct PathEnsemble {
    TimeGrid grid;
    std::vector<double> times;            // recorded times
    std::vector<std::size_t> steps;       // grid index of each recorded time
    std::size_t n_paths = 0;
    std::vector<double> values;           // path-major: values[p * times.size() + j]
    std::uint64_t seed = 0;
    std::map<std::string, std::vector<double>> aux;  // per-path marks

    double at(std::size_t path, std::size_t j) const { return values[path * times.size() + j]; }
    std::vector<double> path(std::size_t p) const;
    /// Values of every path at recorded time j.
    std::vector<double> column(std::size_t j) const;
    std::vector<double> terminal() const { return column(times.size() - 1); }
};

/// Per-path generator for (seed, stream, path).
std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t path);

inline constexpr std::uint64_t kGaussianStream = 1;
inline constexpr std::uint64_t kGammaStream = 2;

/// S_{k+1} = S_k exp((mu - sigma^2/2) dt + sigma sqrt(dt) xi). Throws BadConfig.
PathEnsemble simulate_gbm(double mu, double sigma, double s0, const TimeGrid& grid, std::size_t n_paths,
                          std::uint64_t seed, const Recording& rec = {});

/// Fractional Gaussian noise increments with exact covariance on a uniform
/// grid starting at 0: circulant embedding, or a Cholesky factor of the
/// covariance when the embedding is not positive semi-definite.
class FgnGenerator {
public:
    FgnGenerator(double hurst, double dt, std::size_t n, bool force_cholesky = false);
    ~FgnGenerator();
    FgnGenerator(const FgnGenerator&) = delete;
    FgnGenerator& operator=(const FgnGenerator&) = delete;

    /// n increments driven by `rng`.
    void draw(std::mt19937_64& rng, std::vector<double>& out);
    bool uses_circulant() const { return circulant_; }

    /// Autocovariance of the increments at lag k.
    static double autocovariance(double hurst, double dt, std::size_t k);

private:
    double hurst_;
    std::size_t n_;
    bool circulant_ = false;
    std::vector<double> scale_;     // sqrt of circulant eigenvalues / normalisation
    std::vector<double> cholesky_;  // lower-triangular, row-major
    struct Fft;
    Fft* fft_ = nullptr;
};

/// Circulant embedding eigenvalues for n increments; throws EmbeddingFailure
/// when one is negative beyond rounding.
std::vector<double> circulant_eigenvalues(double hurst, double dt, std::size_t n);

/// X_t = exp(W^H_t + mu t) on a grid with t0 = 0. aux["hit_index"] holds the
/// first grid index with X <= 1/2, or -1. aux["circulant"] is 1 when the
/// circulant embedding was used.
PathEnsemble simulate_fbm_model(double hurst, double mu, const TimeGrid& grid, std::size_t n_paths,
                                std::uint64_t seed, const Recording& rec = {});

/// Reparameterises an fBm-model ensemble (recorded at every step) by
/// u = atan(t), freezes it at 1/2 from the hitting index on and appends the
/// point u = pi/2 with value 1/2. aux["hit"] marks paths whose hitting was
/// observed on the grid.
PathEnsemble time_change(const PathEnsemble& fbm);

/// 1/|B_t| for a 3-D Brownian motion started at (1,0,0). Paths where |B|
/// drops below 1e-12 at a grid point are capped at 1e12 and marked in
/// aux["flagged"].
PathEnsemble simulate_inverse_bessel(const TimeGrid& grid, std::size_t n_paths, std::uint64_t seed,
                                     const Recording& rec = {});

/// Terminal values of the paths not marked in aux["flagged"], and how many
/// were dropped.
std::pair<std::vector<double>, std::size_t> unflagged_terminal(const PathEnsemble& e);

/// Distribution of the bubble time gamma on (0,1].
struct GammaSampler {
    enum class Kind { Constant, Uniform };
    Kind kind = Kind::Uniform;
    double a = 0.0;  // Constant: the value; Uniform: lower end
    double b = 1.0;  // Uniform: upper end

    static GammaSampler constant(double c) { return {Kind::Constant, c, c}; }
    static GammaSampler uniform(double lo = 0.0, double hi = 1.0) { return {Kind::Uniform, lo, hi}; }
    void validate() const;
    double draw(std::mt19937_64& rng) const;
};

/// v(t, gamma) = v0 (1 + 1{gamma <= t < 1} / (1 - t)).
double bubble_volatility(double v0, double t, double gamma);

/// dS = S (mu dt + v(t, gamma) dW) by log-Euler with left-point volatility.
/// When the grid ends at 1 the last step is not simulated: the value at t = 1
/// is 0 for gamma < 1 and the value at 1 - dt otherwise. aux["gamma"] holds
/// the draws.
PathEnsemble simulate_bubble_birth(double mu, double v0, const GammaSampler& gamma, const TimeGrid& grid,
                                   std::size_t n_paths, std::uint64_t seed, double s0 = 1.0,
                                   const Recording& rec = {});

/// Columnar text: "# key: value" provenance lines, a header "t,p0,p1,...",
/// then one row per recorded time.
void write_columns(std::ostream& out, const PathEnsemble& e, const std::map<std::string, std::string>& provenance);
/// One row per path: "path,<aux keys...>".
void write_aux(std::ostream& out, const PathEnsemble& e);

}  // namespace tcbubble
