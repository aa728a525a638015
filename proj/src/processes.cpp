#include "tcbubble/processes.hpp"

#include <fftw3.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <ostream>

namespace tcbubble {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::vector<std::size_t> recorded_steps(std::size_t steps, const Recording& rec) {
    std::vector<std::size_t> out;
    if (rec.stride == 0) {
        out = {0, steps};
    } else {
        for (std::size_t k = 0; k <= steps; k += rec.stride) out.push_back(k);
        if (out.back() != steps) out.push_back(steps);
    }
    return out;
}

PathEnsemble make_ensemble(const TimeGrid& grid, std::size_t n_paths, std::uint64_t seed, const Recording& rec) {
    grid.validate();
    if (n_paths == 0) throw BadConfig("n_paths must be positive");
    PathEnsemble e;
    e.grid = grid;
    e.steps = recorded_steps(grid.steps, rec);
    for (std::size_t k : e.steps) e.times.push_back(grid.time(k));
    e.n_paths = n_paths;
    e.seed = seed;
    e.values.resize(n_paths * e.steps.size());
    return e;
}

// Writes grid values of one path into the recorded slots.
class PathWriter {
public:
    PathWriter(PathEnsemble& e, std::size_t path) : e_(e), row_(&e.values[path * e.steps.size()]) {}
    void put(std::size_t k, double v) {
        if (next_ < e_.steps.size() && e_.steps[next_] == k) row_[next_++] = v;
    }

private:
    const PathEnsemble& e_;
    double* row_;
    std::size_t next_ = 0;
};

// Shared by the GBM and bubble-birth recursions so that equal volatilities
// give bit-identical paths.
inline double log_step(double x, double mu, double v, double dt, double sqdt, double xi) {
    return x + (mu - 0.5 * v * v) * dt + v * sqdt * xi;
}

void append_number(std::ostream& out, double x) {
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof buf, x);
    out.write(buf, r.ptr - buf);
}

}  // namespace

void TimeGrid::validate() const {
    if (!(t1 > t0)) throw BadConfig("time grid needs t1 > t0");
    if (steps < 1) throw BadConfig("time grid needs at least one step");
    if (!std::isfinite(t0) || !std::isfinite(t1)) throw BadConfig("time grid endpoints must be finite");
}

std::vector<double> PathEnsemble::path(std::size_t p) const {
    const std::size_t m = times.size();
    return {values.begin() + p * m, values.begin() + (p + 1) * m};
}

std::vector<double> PathEnsemble::column(std::size_t j) const {
    std::vector<double> out(n_paths);
    for (std::size_t p = 0; p < n_paths; ++p) out[p] = at(p, j);
    return out;
}

std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t path) {
    std::uint64_t s = splitmix64(seed);
    s = splitmix64(s ^ (stream * 0xd1b54a32d192ed03ULL));
    s = splitmix64(s ^ (path * 0x8cb92ba72f3d8dd7ULL));
    return std::mt19937_64(s);
}

PathEnsemble simulate_gbm(double mu, double sigma, double s0, const TimeGrid& grid, std::size_t n_paths,
                          std::uint64_t seed, const Recording& rec) {
    if (!(sigma >= 0)) throw BadConfig("sigma must be nonnegative");
    if (!(s0 > 0)) throw BadConfig("s0 must be positive");
    auto e = make_ensemble(grid, n_paths, seed, rec);
    const double dt = grid.spacing(), sqdt = std::sqrt(dt);
    for (std::size_t p = 0; p < n_paths; ++p) {
        auto rng = path_rng(seed, kGaussianStream, p);
        std::normal_distribution<double> normal;
        PathWriter w(e, p);
        double x = std::log(s0);
        w.put(0, s0);
        for (std::size_t k = 0; k < grid.steps; ++k) {
            x = log_step(x, mu, sigma, dt, sqdt, normal(rng));
            w.put(k + 1, std::exp(x));
        }
    }
    return e;
}

double FgnGenerator::autocovariance(double hurst, double dt, std::size_t k) {
    const double h2 = 2 * hurst;
    const double kk = static_cast<double>(k);
    const double c = 0.5 * (std::pow(kk + 1, h2) - 2 * std::pow(kk, h2) + std::pow(std::fabs(kk - 1), h2));
    return c * std::pow(dt, h2);
}

std::vector<double> circulant_eigenvalues(double hurst, double dt, std::size_t n) {
    const std::size_t m = 2 * n;
    std::vector<double> c(m);
    for (std::size_t j = 0; j <= n; ++j) c[j] = FgnGenerator::autocovariance(hurst, dt, j);
    for (std::size_t j = n + 1; j < m; ++j) c[j] = c[m - j];
    auto* spec = fftw_alloc_complex(n + 1);
    fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(m), c.data(), spec, FFTW_ESTIMATE);
    fftw_execute(plan);
    std::vector<double> lambda(n + 1);
    double largest = 0;
    for (std::size_t k = 0; k <= n; ++k) {
        lambda[k] = spec[k][0];
        largest = std::max(largest, std::fabs(lambda[k]));
    }
    fftw_destroy_plan(plan);
    fftw_free(spec);
    for (std::size_t k = 0; k <= n; ++k) {
        if (lambda[k] < -1e-10 * largest) {
            throw EmbeddingFailure("circulant embedding has a negative eigenvalue at frequency " + std::to_string(k));
        }
        lambda[k] = std::max(lambda[k], 0.0);
    }
    return lambda;
}

struct FgnGenerator::Fft {
    fftw_complex* in = nullptr;
    double* out = nullptr;
    fftw_plan plan = nullptr;
};

FgnGenerator::FgnGenerator(double hurst, double dt, std::size_t n, bool force_cholesky) : hurst_(hurst), n_(n) {
    if (!(hurst > 0 && hurst < 1)) throw BadConfig("hurst index must lie in (0,1)");
    if (n == 0) throw BadConfig("need at least one increment");
    if (!force_cholesky) {
        try {
            const auto lambda = circulant_eigenvalues(hurst, dt, n);
            const double m = static_cast<double>(2 * n);
            scale_.resize(n + 1);
            for (std::size_t k = 0; k <= n; ++k) {
                const bool real_mode = k == 0 || k == n;
                scale_[k] = std::sqrt(lambda[k] / (real_mode ? m : 2 * m));
            }
            fft_ = new Fft;
            fft_->in = fftw_alloc_complex(n + 1);
            fft_->out = fftw_alloc_real(2 * n);
            fft_->plan = fftw_plan_dft_c2r_1d(static_cast<int>(2 * n), fft_->in, fft_->out, FFTW_ESTIMATE);
            circulant_ = true;
            return;
        } catch (const EmbeddingFailure&) {
            // fall through to the Cholesky factor
        }
    }
    cholesky_.assign(n * n, 0.0);
    std::vector<double> gamma(n);
    for (std::size_t k = 0; k < n; ++k) gamma[k] = autocovariance(hurst, dt, k);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = gamma[i - j];
            for (std::size_t k = 0; k < j; ++k) s -= cholesky_[i * n + k] * cholesky_[j * n + k];
            if (i == j) {
                if (s <= 0) throw NumericalFailure("fGn covariance is not positive definite");
                cholesky_[i * n + i] = std::sqrt(s);
            } else {
                cholesky_[i * n + j] = s / cholesky_[j * n + j];
            }
        }
    }
}

FgnGenerator::~FgnGenerator() {
    if (fft_) {
        fftw_destroy_plan(fft_->plan);
        fftw_free(fft_->in);
        fftw_free(fft_->out);
        delete fft_;
    }
}

void FgnGenerator::draw(std::mt19937_64& rng, std::vector<double>& out) {
    std::normal_distribution<double> normal;
    out.resize(n_);
    if (circulant_) {
        for (std::size_t k = 0; k <= n_; ++k) {
            const bool real_mode = k == 0 || k == n_;
            fft_->in[k][0] = scale_[k] * normal(rng);
            fft_->in[k][1] = real_mode ? 0.0 : scale_[k] * normal(rng);
        }
        fftw_execute(fft_->plan);
        std::copy(fft_->out, fft_->out + n_, out.begin());
        return;
    }
    std::vector<double> xi(n_);
    for (auto& x : xi) x = normal(rng);
    for (std::size_t i = 0; i < n_; ++i) {
        double s = 0;
        for (std::size_t k = 0; k <= i; ++k) s += cholesky_[i * n_ + k] * xi[k];
        out[i] = s;
    }
}

PathEnsemble simulate_fbm_model(double hurst, double mu, const TimeGrid& grid, std::size_t n_paths,
                                std::uint64_t seed, const Recording& rec) {
    if (grid.t0 != 0.0) throw BadConfig("the fBm model starts at t = 0");
    auto e = make_ensemble(grid, n_paths, seed, rec);
    FgnGenerator fgn(hurst, grid.spacing(), grid.steps);
    auto& hit = e.aux["hit_index"];
    hit.assign(n_paths, -1.0);
    e.aux["circulant"].assign(n_paths, fgn.uses_circulant() ? 1.0 : 0.0);
    std::vector<double> inc;
    for (std::size_t p = 0; p < n_paths; ++p) {
        auto rng = path_rng(seed, kGaussianStream, p);
        fgn.draw(rng, inc);
        PathWriter w(e, p);
        double wh = 0;
        w.put(0, 1.0);
        for (std::size_t k = 1; k <= grid.steps; ++k) {
            wh += inc[k - 1];
            const double x = std::exp(wh + mu * grid.time(k));
            if (hit[p] < 0 && x <= 0.5) hit[p] = static_cast<double>(k);
            w.put(k, x);
        }
    }
    return e;
}

PathEnsemble time_change(const PathEnsemble& fbm) {
    const std::size_t n = fbm.grid.steps;
    if (fbm.steps.size() != n + 1) throw BadConfig("time change needs every grid point recorded");
    const auto hit_it = fbm.aux.find("hit_index");
    if (hit_it == fbm.aux.end()) throw BadConfig("ensemble carries no hitting indices");
    PathEnsemble out;
    out.grid = fbm.grid;
    out.n_paths = fbm.n_paths;
    out.seed = fbm.seed;
    for (std::size_t k = 0; k <= n; ++k) {
        out.times.push_back(std::atan(fbm.times[k]));
        out.steps.push_back(k);
    }
    out.times.push_back(std::numbers::pi / 2);
    out.steps.push_back(n + 1);
    const std::size_t m = out.times.size();
    out.values.resize(fbm.n_paths * m);
    auto& hit = out.aux["hit"];
    hit.resize(fbm.n_paths);
    for (std::size_t p = 0; p < fbm.n_paths; ++p) {
        const double h = hit_it->second[p];
        hit[p] = h >= 0 ? 1.0 : 0.0;
        const std::size_t freeze = h >= 0 ? static_cast<std::size_t>(h) : n + 1;
        for (std::size_t k = 0; k <= n; ++k) out.values[p * m + k] = k < freeze ? fbm.at(p, k) : 0.5;
        out.values[p * m + n + 1] = 0.5;
    }
    out.aux["hit_index"] = hit_it->second;
    return out;
}

std::pair<std::vector<double>, std::size_t> unflagged_terminal(const PathEnsemble& e) {
    auto all = e.terminal();
    const auto it = e.aux.find("flagged");
    if (it == e.aux.end()) return {all, 0};
    std::vector<double> kept;
    for (std::size_t p = 0; p < all.size(); ++p)
        if (it->second[p] == 0.0) kept.push_back(all[p]);
    const std::size_t dropped = all.size() - kept.size();
    return {kept, dropped};
}

PathEnsemble simulate_inverse_bessel(const TimeGrid& grid, std::size_t n_paths, std::uint64_t seed,
                                     const Recording& rec) {
    if (grid.t0 != 0.0) throw BadConfig("the inverse Bessel process starts at t = 0");
    auto e = make_ensemble(grid, n_paths, seed, rec);
    constexpr double kFloor = 1e-12;
    auto& flagged = e.aux["flagged"];
    flagged.assign(n_paths, 0.0);
    const double sqdt = std::sqrt(grid.spacing());
    for (std::size_t p = 0; p < n_paths; ++p) {
        auto rng = path_rng(seed, kGaussianStream, p);
        std::normal_distribution<double> normal;
        PathWriter w(e, p);
        double b1 = 1, b2 = 0, b3 = 0;
        w.put(0, 1.0);
        for (std::size_t k = 1; k <= grid.steps; ++k) {
            b1 += sqdt * normal(rng);
            b2 += sqdt * normal(rng);
            b3 += sqdt * normal(rng);
            const double r = std::sqrt(b1 * b1 + b2 * b2 + b3 * b3);
            if (r < kFloor) flagged[p] = 1.0;
            w.put(k, r < kFloor ? 1.0 / kFloor : 1.0 / r);
        }
    }
    return e;
}

void GammaSampler::validate() const {
    if (kind == Kind::Constant) {
        if (!(a > 0 && a <= 1)) throw BadConfig("constant gamma must lie in (0,1]");
    } else if (!(a >= 0 && b <= 1 && a < b)) {
        throw BadConfig("uniform gamma needs 0 <= lo < hi <= 1");
    }
}

double GammaSampler::draw(std::mt19937_64& rng) const {
    if (kind == Kind::Constant) return a;
    // (a, b]: a uniform draw on [0,1) reflected away from the lower end
    double u = std::generate_canonical<double, 53>(rng);
    if (u >= 1.0) u = std::nextafter(1.0, 0.0);
    return b - (b - a) * u;
}

double bubble_volatility(double v0, double t, double gamma) {
    const bool after = gamma <= t && t < 1.0;
    return after ? v0 * (1.0 + 1.0 / (1.0 - t)) : v0;
}

PathEnsemble simulate_bubble_birth(double mu, double v0, const GammaSampler& gamma, const TimeGrid& grid,
                                   std::size_t n_paths, std::uint64_t seed, double s0, const Recording& rec) {
    if (!(v0 > 0)) throw BadConfig("v0 must be positive");
    if (!(s0 > 0)) throw BadConfig("s0 must be positive");
    if (grid.t0 < 0 || grid.t1 > 1) throw BadConfig("bubble-birth grid must lie in [0,1]");
    gamma.validate();
    auto e = make_ensemble(grid, n_paths, seed, rec);
    auto& g = e.aux["gamma"];
    g.resize(n_paths);
    const bool singular_end = grid.t1 == 1.0;
    const std::size_t simulated = singular_end ? grid.steps - 1 : grid.steps;
    const double dt = grid.spacing(), sqdt = std::sqrt(dt);
    for (std::size_t p = 0; p < n_paths; ++p) {
        auto grng = path_rng(seed, kGammaStream, p);
        g[p] = gamma.draw(grng);
        auto rng = path_rng(seed, kGaussianStream, p);
        std::normal_distribution<double> normal;
        PathWriter w(e, p);
        double x = std::log(s0), s = s0;
        w.put(0, s0);
        for (std::size_t k = 0; k < simulated; ++k) {
            x = log_step(x, mu, bubble_volatility(v0, grid.time(k), g[p]), dt, sqdt, normal(rng));
            s = std::exp(x);
            w.put(k + 1, s);
        }
        if (singular_end) w.put(grid.steps, g[p] < 1.0 ? 0.0 : s);
    }
    return e;
}

void write_columns(std::ostream& out, const PathEnsemble& e, const std::map<std::string, std::string>& provenance) {
    for (const auto& [k, v] : provenance) out << "# " << k << ": " << v << '\n';
    out << "# seed: " << e.seed << '\n';
    out << 't';
    for (std::size_t p = 0; p < e.n_paths; ++p) out << ",p" << p;
    out << '\n';
    for (std::size_t j = 0; j < e.times.size(); ++j) {
        append_number(out, e.times[j]);
        for (std::size_t p = 0; p < e.n_paths; ++p) {
            out << ',';
            append_number(out, e.at(p, j));
        }
        out << '\n';
    }
}

void write_aux(std::ostream& out, const PathEnsemble& e) {
    out << "path";
    for (const auto& [k, v] : e.aux) out << ',' << k;
    out << '\n';
    for (std::size_t p = 0; p < e.n_paths; ++p) {
        out << p;
        for (const auto& [k, v] : e.aux) {
            out << ',';
            append_number(out, v[p]);
        }
        out << '\n';
    }
}

}  // namespace tcbubble
