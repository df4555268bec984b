#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "thinfilm/fe_space.hpp"

namespace thinfilm {

/// Model hierarchy: full dynamic contact angle, strong contact-line
/// dissipation (quasistatic height) and weak dissipation (equilibrium angle).
enum class ModelKind { Transient, Strong, Weak };

/// Tangential part of the boundary velocity used for the ALE extension.
enum class TangentialMode { Zero, TravelingWave };

struct StepOptions {
    ModelKind model = ModelKind::Transient;
    TangentialMode tangential = TangentialMode::Zero;
    double feasibility_tol = 1e-3;
};

/// Discrete ALE state: deformation psi (component-blocked vector field) and
/// height h on the fixed reference mesh. `pi_hat` is only meaningful for
/// quasistatic runs, where it holds the volume Lagrange multiplier.
struct AleState {
    std::shared_ptr<const FeSpace> space;
    Eigen::VectorXd psi;
    Eigen::VectorXd h;
    double t = 0.0;
    double vol0 = 0.0;
    double pi_hat = 0.0;

    AleState() = default;
    explicit AleState(std::shared_ptr<const FeSpace> s)
        : space(std::move(s)), psi(space->identity_map()), h(Eigen::VectorXd::Zero(space->n_dofs()))
    {
    }

    const FeSpace& fe() const { return *space; }
    const ReferenceMesh& mesh() const { return space->mesh(); }
    int degree() const { return space->degree(); }
    int n_dofs() const { return space->n_dofs(); }

    Field psi_field() const { return {space, 2, psi}; }
    Field h_field() const { return {space, 1, h}; }
};

using QuasistaticState = AleState;

/// Smallest nodal value of a scalar field.
inline double min_nodal(const Eigen::VectorXd& h) { return h.size() ? h.minCoeff() : 0.0; }

/// Everything solved for during one decoupled step.
struct KinematicRates {
    Eigen::VectorXd hdot_eulerian; // ḣ, scalar space
    Eigen::VectorXd pi;            // π̄, scalar space
    Eigen::VectorXd zeta;          // ζ̄, FreeBoundary trace space
    Eigen::VectorXd psidot;        // ψ̄̇, vector space
    Eigen::VectorXd lambda;        // λ̄, vector trace space [x-block, y-block]
    Eigen::VectorXd hdot_ale;      // h̄̇, scalar space
    Vec2 w = Vec2::Zero();         // estimated translation velocity
};

/// Outcome of one base step: the new state and the rates that produced it.
struct StepResult {
    AleState state;
    KinematicRates rates;
};

enum class EventKind { Warning, Degeneracy, Feasibility, MeshTangled, WidthBelowMinimum, Crossing };

inline const char* to_string(EventKind k)
{
    switch (k) {
    case EventKind::Warning: return "warning";
    case EventKind::Degeneracy: return "degeneracy";
    case EventKind::Feasibility: return "feasibility";
    case EventKind::MeshTangled: return "mesh_tangled";
    case EventKind::WidthBelowMinimum: return "width_below_minimum";
    case EventKind::Crossing: return "crossing";
    }
    return "unknown";
}

struct Event {
    EventKind kind;
    double t;
    std::string message;
};

/// Append-only record of non-fatal diagnostics raised during a run.
class EventLog {
public:
    void record(EventKind kind, double t, std::string message) { events_.push_back({kind, t, std::move(message)}); }

    const std::vector<Event>& events() const { return events_; }
    bool empty() const { return events_.empty(); }

    std::size_t count(EventKind kind) const
    {
        std::size_t n = 0;
        for (const auto& e : events_)
            n += e.kind == kind;
        return n;
    }

private:
    std::vector<Event> events_;
};

} // namespace thinfilm
