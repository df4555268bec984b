#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "thinfilm/assembly.hpp"
#include "thinfilm/errors.hpp"
#include "thinfilm/physics.hpp"
#include "thinfilm/state.hpp"
#include "thinfilm/time_stepper.hpp"

namespace thinfilm {

struct ScalarRow {
    int step = 0;
    double t = 0.0;
    double energy = 0.0;
    double volume = 0.0;
    double min_h = 0.0;
    double max_h = 0.0;
    double contact_length = 0.0;
    std::optional<double> ridge_width;
};

class ScalarSeries {
public:
    void push_back(const ScalarRow& row)
    {
        if (!rows_.empty() && !(row.t > rows_.back().t))
            throw AssemblyError("ScalarSeries: time must increase strictly");
        rows_.push_back(row);
    }
    const std::vector<ScalarRow>& rows() const { return rows_; }
    bool empty() const { return rows_.empty(); }
    std::size_t size() const { return rows_.size(); }
    bool has_width() const { return !rows_.empty() && rows_.front().ridge_width.has_value(); }

private:
    std::vector<ScalarRow> rows_;
};

/// Values of a scalar field at the reference point `xi` of `cell`.
inline double evaluate_in_cell(const FeSpace& space, const Eigen::VectorXd& u, int cell, const Vec2& xi,
                               int component = 0)
{
    const auto dofs = space.cell_dofs(cell);
    const int offset = component * space.n_dofs();
    double v = 0.0;
    for (int l = 0; l < space.dofs_per_cell(); ++l)
        v += u[offset + dofs[l]] * space.basis().value(l, xi[0], xi[1]);
    return v;
}

struct RidgeWidth {
    double width = 0.0;
    double y_ref = 0.0;  // reference ȳ of the narrowest sample
    double y_phys = 0.0; // mean deformed height of the two contact points there
    bool crossed = false;
};

/// Smallest horizontal gap between the two deformed contact lines of a
/// ridge, sampled at n_samples equispaced reference heights.
inline RidgeWidth ridge_width(const AleState& state, int n_samples = 64)
{
    const FeSpace& space = state.fe();
    const ReferenceMesh& mesh = space.mesh();
    double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
    double y_min = x_min, y_max = -x_min;
    for (const Vec2& v : mesh.vertices) {
        x_min = std::min(x_min, v[0]);
        x_max = std::max(x_max, v[0]);
        y_min = std::min(y_min, v[1]);
        y_max = std::max(y_max, v[1]);
    }
    if (n_samples < 2)
        throw ConfigError("ridge_width needs at least two samples");

    // Locate (cell, local coordinates) of a point on a vertical FreeBoundary facet.
    auto locate = [&](bool right, double y) -> std::pair<int, Vec2> {
        for (const BoundaryFacet& f : mesh.boundary_facets) {
            if (f.tag != BoundaryTag::FreeBoundary)
                continue;
            const auto& c = mesh.cells[f.cell];
            const Vec2& a = mesh.vertices[c[kFacetVertices[f.local_facet][0]]];
            const Vec2& b = mesh.vertices[c[kFacetVertices[f.local_facet][1]]];
            const bool on_right = 0.5 * (a[0] + b[0]) > 0.5 * (x_min + x_max);
            if (on_right != right)
                continue;
            const double lo = std::min(a[1], b[1]), hi = std::max(a[1], b[1]);
            if (y < lo - 1e-12 || y > hi + 1e-12)
                continue;
            const double s = std::clamp((y - a[1]) / (b[1] - a[1]), 0.0, 1.0);
            return {f.cell, facet_to_cell(f.local_facet, s)};
        }
        throw AssemblyError("ridge_width: mesh is not a ridge");
    };

    RidgeWidth r;
    r.width = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n_samples; ++j) {
        const double y = y_min + (y_max - y_min) * j / (n_samples - 1);
        const auto [cl, xl] = locate(false, y);
        const auto [cr, xr] = locate(true, y);
        const double left = evaluate_in_cell(space, state.psi, cl, xl, 0);
        const double right = evaluate_in_cell(space, state.psi, cr, xr, 0);
        if (right - left < r.width) {
            r.width = right - left;
            r.y_ref = y;
            r.y_phys = 0.5 * (evaluate_in_cell(space, state.psi, cl, xl, 1) + evaluate_in_cell(space, state.psi, cr, xr, 1));
        }
    }
    if (r.width < 0.0) {
        r.width = 0.0;
        r.crossed = true;
    }
    return r;
}

/// Scalar monitors of a state. Energy and volume come from physics::energy.
inline ScalarRow monitor(const AleState& state, const PhysicsParams& p, int step = 0, bool ridge = false,
                         int width_samples = 64)
{
    const EnergyReport e = energy(state, p);
    ScalarRow row;
    row.step = step;
    row.t = state.t;
    row.energy = e.total;
    row.volume = e.volume;
    row.min_h = state.h.minCoeff();
    row.max_h = state.h.maxCoeff();
    row.contact_length = e.contact_length;
    if (ridge)
        row.ridge_width = ridge_width(state, width_samples).width;
    return row;
}

enum class FitModel { Power, Exponential };

struct FitResult {
    bool ok = false;
    double exponent = 0.0; // power: w ~ (t_c − t)^exponent; exponential: w ~ e^{exponent t}
    double t_c = 0.0;
    double r2 = 0.0;
    std::string reason;
};

namespace detail {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

inline LineFit least_squares_line(const std::vector<double>& x, const std::vector<double>& y)
{
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LineFit f;
    f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    f.intercept = my - f.slope * mx;
    f.r2 = (sxx > 0.0 && syy > 0.0) ? (sxy * sxy) / (sxx * syy) : 0.0;
    return f;
}

} // namespace detail

/// Fits w(t) by a power law in (t_c − t) or by an exponential in t. For the
/// power law t_c > max t is chosen to maximise R² of the log-log fit: a
/// logarithmic scan of the offset t_c − t_last followed by golden-section
/// refinement.
inline FitResult fit_power_exponent(const std::vector<double>& t, const std::vector<double>& w, FitModel model)
{
    FitResult out;
    if (t.size() != w.size() || t.size() < 8) {
        out.reason = "need at least 8 samples";
        return out;
    }
    for (std::size_t i = 1; i < t.size(); ++i)
        if (!(t[i] > t[i - 1])) {
            out.reason = "times must increase";
            return out;
        }
    for (double v : w)
        if (!(v > 0.0)) {
            out.reason = "widths must be positive";
            return out;
        }
    const std::size_t tail = std::max<std::size_t>(3, t.size() / 4);
    for (std::size_t i = t.size() - tail; i < t.size(); ++i)
        if (w[i] > w[i - 1]) {
            out.reason = "non-monotone tail";
            return out;
        }

    std::vector<double> logw(w.size());
    for (std::size_t i = 0; i < w.size(); ++i)
        logw[i] = std::log(w[i]);

    if (model == FitModel::Exponential) {
        const auto f = detail::least_squares_line(t, logw);
        out.ok = true;
        out.exponent = f.slope;
        out.r2 = f.r2;
        return out;
    }

    const double span = t.back() - t.front();
    auto fit_at = [&](double log_offset) {
        const double tc = t.back() + std::exp(log_offset);
        std::vector<double> x(t.size());
        for (std::size_t i = 0; i < t.size(); ++i)
            x[i] = std::log(tc - t[i]);
        return detail::least_squares_line(x, logw);
    };
    const double lo = std::log(1e-8 * span), hi = std::log(10.0 * span);
    const int n_scan = 200;
    int best = 0;
    double best_r2 = -1.0;
    for (int i = 0; i <= n_scan; ++i) {
        const double r2 = fit_at(lo + (hi - lo) * i / n_scan).r2;
        if (r2 > best_r2) {
            best_r2 = r2;
            best = i;
        }
    }
    double a = lo + (hi - lo) * std::max(0, best - 1) / n_scan;
    double b = lo + (hi - lo) * std::min(n_scan, best + 1) / n_scan;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = fit_at(c).r2, fd = fit_at(d).r2;
    for (int it = 0; it < 100 && b - a > 1e-12; ++it) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = fit_at(c).r2;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = fit_at(d).r2;
        }
    }
    const double x = 0.5 * (a + b);
    const auto f = fit_at(x);
    out.ok = true;
    out.exponent = f.slope;
    out.r2 = f.r2;
    out.t_c = t.back() + std::exp(x);
    return out;
}

/// ‖Δh‖_L² + ‖Δψ‖_L² on the reference configuration of a shared space.
inline double state_distance_l2(const AleState& a, const AleState& b)
{
    const FeSpace& space = a.fe();
    const Eigen::VectorXd dh = a.h - b.h;
    const Eigen::VectorXd dpsi = a.psi - b.psi;
    const Eigen::VectorXd id = space.identity_map();
    double eh = 0.0, ep = 0.0;
    for_each_cell(space, id, [&](const CellValues& cv) {
        for (int q = 0; q < cv.n_points(); ++q) {
            eh += std::pow(cv.value(dh, q), 2) * cv.JxW(q);
            ep += cv.vector_value(dpsi, q).squaredNorm() * cv.JxW(q);
        }
    });
    return std::sqrt(eh) + std::sqrt(ep);
}

/// ‖Δh‖∞ + ‖Δψ‖∞ over the nodes of a shared space.
inline double state_distance_max(const AleState& a, const AleState& b)
{
    return (a.h - b.h).lpNorm<Eigen::Infinity>() + (a.psi - b.psi).lpNorm<Eigen::Infinity>();
}

enum class NormKind { L2, Max };

/// Evaluates a coarse state at the nodes of a finer mesh of the same
/// hierarchy: each fine cell is traced to its ancestor through the chain of
/// meshes, composing ξ ↦ (ξ + (child_x, child_y)) / 2.
class HierarchyTransfer {
public:
    /// `chain` holds the meshes from the coarse level (front) to the fine
    /// level (back), each obtained from its predecessor by refine_uniform.
    explicit HierarchyTransfer(std::vector<std::shared_ptr<const ReferenceMesh>> chain) : chain_(std::move(chain))
    {
        if (chain_.empty())
            throw AssemblyError("HierarchyTransfer needs at least one mesh");
        for (std::size_t i = 1; i < chain_.size(); ++i)
            if (chain_[i]->n_cells() != 4 * chain_[i - 1]->n_cells())
                throw AssemblyError("HierarchyTransfer: meshes are not successive uniform refinements");
    }

    std::pair<int, Vec2> ancestor(int fine_cell, Vec2 xi) const
    {
        int cell = fine_cell;
        for (std::size_t lvl = chain_.size() - 1; lvl > 0; --lvl) {
            const CellAncestry& a = chain_[lvl]->ancestry[cell];
            xi = 0.5 * (xi + Vec2(a.child_x, a.child_y));
            cell = a.parent;
        }
        return {cell, xi};
    }

    /// Interpolates the coarse state (ψ and h) into the fine space nodewise.
    AleState prolongate(const AleState& coarse, std::shared_ptr<const FeSpace> fine_space) const
    {
        AleState out(fine_space);
        const FeSpace& fs = *fine_space;
        const int n = fs.n_dofs();
        const int k = fs.degree();
        std::vector<char> done(n, 0);
        for (int c = 0; c < fs.mesh().n_cells(); ++c) {
            const auto dofs = fs.cell_dofs(c);
            for (int l = 0; l < fs.dofs_per_cell(); ++l) {
                const int d = dofs[l];
                if (done[d])
                    continue;
                done[d] = 1;
                const Vec2 xi{static_cast<double>(l % (k + 1)) / k, static_cast<double>(l / (k + 1)) / k};
                const auto [cc, cxi] = ancestor(c, xi);
                out.h[d] = evaluate_in_cell(coarse.fe(), coarse.h, cc, cxi);
                out.psi[d] = evaluate_in_cell(coarse.fe(), coarse.psi, cc, cxi, 0);
                out.psi[n + d] = evaluate_in_cell(coarse.fe(), coarse.psi, cc, cxi, 1);
            }
        }
        out.t = coarse.t;
        out.vol0 = coarse.vol0;
        out.pi_hat = coarse.pi_hat;
        return out;
    }

private:
    std::vector<std::shared_ptr<const ReferenceMesh>> chain_;
};

struct EocRow {
    std::string resolution;
    double error = 0.0;
    double eoc = std::numeric_limits<double>::quiet_NaN();
    bool valid = true;
};

struct EocTable {
    std::string title;
    std::vector<EocRow> rows;

    /// EOC_i = log₂(e_{i−1}/e_i) between consecutive valid rows (bisection).
    void compute_eoc()
    {
        for (std::size_t i = 0; i < rows.size(); ++i) {
            rows[i].eoc = std::numeric_limits<double>::quiet_NaN();
            if (i > 0 && rows[i].valid && rows[i - 1].valid && rows[i].error > 0.0 && rows[i - 1].error > 0.0)
                rows[i].eoc = std::log2(rows[i - 1].error / rows[i].error);
        }
    }

    /// Least-squares slope of log₂ error against bisection index.
    double mean_slope() const
    {
        std::vector<double> x, y;
        for (std::size_t i = 0; i < rows.size(); ++i)
            if (rows[i].valid && rows[i].error > 0.0) {
                x.push_back(static_cast<double>(i));
                y.push_back(-std::log2(rows[i].error));
            }
        if (x.size() < 2)
            return std::numeric_limits<double>::quiet_NaN();
        return detail::least_squares_line(x, y).slope;
    }
};

/// Number of worker threads for sweeps: THINFILM_THREADS if set, else the
/// hardware concurrency.
inline int sweep_threads()
{
    if (const char* env = std::getenv("THINFILM_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1)
            return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, n) on up to sweep_threads() threads.
template <class Fn>
void parallel_for(int n, Fn&& fn)
{
    const int threads = std::min(n, sweep_threads());
    if (threads <= 1) {
        for (int i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(n);
    std::atomic<int> next{0};
    for (int w = 0; w < threads; ++w)
        pool.emplace_back([&] {
            for (int i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    for (auto& th : pool)
        th.join();
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

/// Outcome of one member of a sweep.
struct SweepRun {
    AleState state;
    bool completed = false;
};

inline SweepRun run_to_end(const AleState& initial, const StepperConfig& cfg, const PhysicsParams& p,
                           const MobilityLaws& laws, const StepOptions& opt)
{
    RunSummary s = run(initial, cfg, p, laws, opt);
    return {std::move(s.final_state), s.reason == ExitReason::Completed};
}

/// Temporal self-convergence: runs with each τ in `taus` (coarse to fine),
/// compared at t_end with a reference run at `reference_tau` using
/// `reference_scheme`.
inline EocTable eoc_time(const AleState& initial, StepperConfig cfg, const PhysicsParams& p, const MobilityLaws& laws,
                         const StepOptions& opt, const std::vector<double>& taus, double reference_tau,
                         Scheme reference_scheme, NormKind norm = NormKind::L2)
{
    std::vector<SweepRun> runs(taus.size() + 1);
    parallel_for(static_cast<int>(runs.size()), [&](int i) {
        StepperConfig c = cfg;
        if (i == static_cast<int>(taus.size())) {
            c.tau = reference_tau;
            c.scheme = reference_scheme;
        } else {
            c.tau = taus[i];
        }
        runs[i] = run_to_end(initial, c, p, laws, opt);
    });
    const SweepRun& ref = runs.back();
    EocTable table;
    table.title = std::string("time ") + to_string(cfg.scheme);
    for (std::size_t i = 0; i < taus.size(); ++i) {
        EocRow row;
        row.resolution = "tau=" + std::to_string(taus[i]);
        row.valid = runs[i].completed && ref.completed;
        row.error = norm == NormKind::L2 ? state_distance_l2(runs[i].state, ref.state)
                                         : state_distance_max(runs[i].state, ref.state);
        table.rows.push_back(row);
    }
    table.compute_eoc();
    return table;
}

/// Spatial self-convergence over a mesh hierarchy. `make_initial(space)`
/// builds the initial state on a space; levels[i] indexes into `spaces`
/// (all of one hierarchy, coarse to fine) and the last space is the reference.
inline EocTable eoc_space(const std::vector<std::shared_ptr<const FeSpace>>& spaces,
                          const std::function<AleState(std::shared_ptr<const FeSpace>)>& make_initial,
                          const StepperConfig& cfg, const PhysicsParams& p, const MobilityLaws& laws,
                          const StepOptions& opt, NormKind norm)
{
    if (spaces.size() < 2)
        throw ConfigError("eoc_space needs at least two levels");
    std::vector<SweepRun> runs(spaces.size());
    parallel_for(static_cast<int>(spaces.size()),
                 [&](int i) { runs[i] = run_to_end(make_initial(spaces[i]), cfg, p, laws, opt); });
    std::vector<std::shared_ptr<const ReferenceMesh>> chain;
    for (const auto& s : spaces)
        chain.push_back(s->mesh_ptr());
    const SweepRun& ref = runs.back();
    EocTable table;
    table.title = "space Q" + std::to_string(spaces.front()->degree());
    for (std::size_t i = 0; i + 1 < spaces.size(); ++i) {
        std::vector<std::shared_ptr<const ReferenceMesh>> sub(chain.begin() + static_cast<long>(i), chain.end());
        const HierarchyTransfer transfer(sub);
        const AleState up = transfer.prolongate(runs[i].state, spaces.back());
        EocRow row;
        row.resolution = "level=" + std::to_string(spaces[i]->mesh().refinement_level) +
                         " dofs=" + std::to_string(spaces[i]->n_dofs());
        row.valid = runs[i].completed && ref.completed;
        row.error = norm == NormKind::L2 ? state_distance_l2(up, ref.state) : state_distance_max(up, ref.state);
        table.rows.push_back(row);
    }
    table.compute_eoc();
    return table;
}

} // namespace thinfilm
