#pragma once

#include <stdexcept>
#include <string>

namespace thinfilm {

/// Invalid user input: configuration keys, parameter ranges, degrees.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Coefficient vectors that do not belong to the space they are assembled on.
class AssemblyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SolverSingular : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Base class of the terminal numerical events a run may end with.
/// A step that raises one of these leaves its input state untouched.
class NumericalEvent : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The deformation map lost orientation (J <= 0) inside `cell`.
class MeshTangled : public NumericalEvent {
public:
    MeshTangled(int cell, double jacobian)
        : NumericalEvent("mesh tangled in cell " + std::to_string(cell) +
                         " (J = " + std::to_string(jacobian) + ")"),
          cell_(cell) {}

    int cell() const noexcept { return cell_; }

private:
    int cell_;
};

/// The height field became negative beyond the feasibility tolerance.
class FeasibilityViolation : public NumericalEvent {
public:
    explicit FeasibilityViolation(double min_h)
        : NumericalEvent("height became negative: min h = " + std::to_string(min_h)),
          min_h_(min_h) {}

    double min_h() const noexcept { return min_h_; }

private:
    double min_h_;
};

} // namespace thinfilm
