#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>

#include <json.hpp>

#include "thinfilm/errors.hpp"
#include "thinfilm/fe_space.hpp"
#include "thinfilm/mesh.hpp"
#include "thinfilm/physics.hpp"
#include "thinfilm/quasistatic.hpp"
#include "thinfilm/state.hpp"
#include "thinfilm/time_stepper.hpp"

namespace thinfilm {

using Json = nlohmann::json;

struct DiscGeometry {
    int refinement = 2;
};

/// Rectangle [0,L]×[0,H] with free vertical sides, deformed by the cosine map.
struct RidgeGeometry {
    double L = 1.0;
    double H = 4.0;
    double delta = 0.1;
    int refinement = 2;
};

struct OutputConfig {
    std::string dir = "output";
    int snapshot_every = 10;
    bool csv = true;
    bool vtk = true;
};

struct RunConfig {
    ModelKind model = ModelKind::Transient;
    std::variant<DiscGeometry, RidgeGeometry> geometry = DiscGeometry{};
    int degree = 2;
    double volume = 1.0;
    PhysicsParams physics;
    MobilityLaws mobility;
    StepperConfig stepper;
    TangentialMode tangential = TangentialMode::Zero;
    double feasibility_tol = 1e-3;
    double w_min = 0.0;
    OutputConfig output;

    bool is_ridge() const { return std::holds_alternative<RidgeGeometry>(geometry); }

    StepOptions step_options() const { return {model, tangential, feasibility_tol}; }

    void validate() const
    {
        physics.validate();
        mobility.validate();
        stepper.validate();
        detail::check_degree(degree);
        if (!(volume > 0.0))
            throw ConfigError("volume must be positive");
        if (!(feasibility_tol >= 0.0))
            throw ConfigError("feasibility_tol must be nonnegative");
        if (!(w_min >= 0.0))
            throw ConfigError("w_min must be nonnegative");
        if (model == ModelKind::Weak && !(physics.s > 0.0))
            throw ConfigError("the weak model needs physics.s > 0");
        if (const auto* d = std::get_if<DiscGeometry>(&geometry); d && d->refinement < 0)
            throw ConfigError("geometry.disc.refinement must be nonnegative");
        if (const auto* r = std::get_if<RidgeGeometry>(&geometry)) {
            if (!(r->L > 0.0) || !(r->H > 0.0))
                throw ConfigError("geometry.ridge.L and geometry.ridge.H must be positive");
            if (!(std::abs(r->delta) < 1.0))
                throw ConfigError("geometry.ridge.delta must lie in (-1, 1)");
            if (r->refinement < 0)
                throw ConfigError("geometry.ridge.refinement must be nonnegative");
        }
    }
};

inline const char* to_string(ModelKind m)
{
    switch (m) {
    case ModelKind::Transient: return "transient";
    case ModelKind::Strong: return "strong";
    case ModelKind::Weak: return "weak";
    }
    return "?";
}

inline const char* to_string(TangentialMode m) { return m == TangentialMode::Zero ? "zero" : "traveling_wave"; }

namespace detail {

/// Typed access to one JSON object that remembers which keys were read, so
/// leftovers can be reported as unknown.
class ObjectReader {
public:
    ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object())
            throw ConfigError("config key '" + display() + "': expected object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    double number(const std::string& key, double fallback)
    {
        const Json* v = take(key);
        if (!v)
            return fallback;
        if (!v->is_number())
            fail(key, "number");
        return v->get<double>();
    }

    int integer(const std::string& key, int fallback)
    {
        const Json* v = take(key);
        if (!v)
            return fallback;
        if (!v->is_number_integer())
            fail(key, "integer");
        return v->get<int>();
    }

    bool boolean(const std::string& key, bool fallback)
    {
        const Json* v = take(key);
        if (!v)
            return fallback;
        if (!v->is_boolean())
            fail(key, "boolean");
        return v->get<bool>();
    }

    std::string string(const std::string& key, const std::string& fallback)
    {
        const Json* v = take(key);
        if (!v)
            return fallback;
        if (!v->is_string())
            fail(key, "string");
        return v->get<std::string>();
    }

    Vec2 vec2(const std::string& key, const Vec2& fallback)
    {
        const Json* v = take(key);
        if (!v)
            return fallback;
        if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number())
            fail(key, "array of two numbers");
        return {(*v)[0].get<double>(), (*v)[1].get<double>()};
    }

    /// Reader of a nested object, or nullopt when the key is absent.
    std::optional<ObjectReader> object(const std::string& key)
    {
        const Json* v = take(key);
        if (!v)
            return std::nullopt;
        return ObjectReader(*v, qualified(key));
    }

    /// Object with exactly one of `alternatives` as its single key.
    std::pair<std::string, ObjectReader> one_of(const std::set<std::string>& alternatives)
    {
        if (j_.size() != 1 || !alternatives.contains(j_.begin().key())) {
            std::string names;
            for (const auto& a : alternatives)
                names += (names.empty() ? "" : " | ") + a;
            throw ConfigError("config key '" + display() + "': expected object with exactly one of {" + names + "}");
        }
        const std::string key = j_.begin().key();
        return {key, *object(key)};
    }

    void finish() const
    {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!read_.contains(it.key()))
                throw ConfigError("unknown config key '" + qualified(it.key()) + "'");
    }

private:
    const Json* take(const std::string& key)
    {
        read_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    [[noreturn]] void fail(const std::string& key, const char* type) const
    {
        throw ConfigError("config key '" + qualified(key) + "': expected " + type);
    }

    std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    std::string display() const { return path_.empty() ? "<root>" : path_; }

    const Json& j_;
    std::string path_;
    std::set<std::string> read_;
};

inline ModelKind parse_model(const std::string& s)
{
    if (s == "transient")
        return ModelKind::Transient;
    if (s == "strong")
        return ModelKind::Strong;
    if (s == "weak")
        return ModelKind::Weak;
    throw ConfigError("config key 'model': expected one of transient | strong | weak, got '" + s + "'");
}

inline TangentialMode parse_tangential(const std::string& s)
{
    if (s == "zero")
        return TangentialMode::Zero;
    if (s == "traveling_wave")
        return TangentialMode::TravelingWave;
    throw ConfigError("config key 'tangential_mode': expected zero | traveling_wave, got '" + s + "'");
}

} // namespace detail

/// Parses and validates a JSON run configuration; absent keys take defaults.
inline RunConfig parse_config(const Json& root)
{
    RunConfig c;
    detail::ObjectReader r(root, "");
    c.model = detail::parse_model(r.string("model", "transient"));
    if (auto g = r.object("geometry")) {
        auto [kind, body] = g->one_of({"disc", "ridge"});
        if (kind == "disc") {
            DiscGeometry d;
            d.refinement = body.integer("refinement", d.refinement);
            body.finish();
            c.geometry = d;
        } else {
            RidgeGeometry rg;
            rg.L = body.number("L", rg.L);
            rg.H = body.number("H", rg.H);
            rg.delta = body.number("delta", rg.delta);
            rg.refinement = body.integer("refinement", rg.refinement);
            body.finish();
            c.geometry = rg;
        }
    }
    c.degree = r.integer("degree", c.degree);
    c.volume = r.number("volume", c.volume);
    if (auto ph = r.object("physics")) {
        c.physics.sigma = ph->number("sigma", c.physics.sigma);
        c.physics.s = ph->number("s", c.physics.s);
        c.physics.g_x = ph->vec2("g_x", c.physics.g_x);
        c.physics.g_z = ph->number("g_z", c.physics.g_z);
        c.physics.eps_line = ph->number("eps", c.physics.eps_line);
        ph->finish();
    }
    if (auto mob = r.object("mobility")) {
        if (auto m = mob->object("m")) {
            auto [kind, body] = m->one_of({"power", "slip"});
            if (kind == "power") {
                PowerLaw law;
                law.m0 = body.number("m0", law.m0);
                law.alpha = body.number("alpha", law.alpha);
                body.finish();
                c.mobility.bulk_law = law;
            } else {
                SlipLaw law;
                law.b = body.number("b", law.b);
                body.finish();
                c.mobility.bulk_law = law;
            }
        }
        if (auto n = mob->object("n")) {
            c.mobility.n0 = n->number("n0", c.mobility.n0);
            c.mobility.theta = n->number("theta", c.mobility.theta);
            n->finish();
        }
        mob->finish();
    }
    if (auto st = r.object("stepper")) {
        c.stepper.scheme = parse_scheme(st->string("scheme", to_string(c.stepper.scheme)));
        c.stepper.tau = st->number("tau", c.stepper.tau);
        c.stepper.t_end = st->number("t_end", c.stepper.t_end);
        st->finish();
    }
    c.tangential = detail::parse_tangential(r.string("tangential_mode", to_string(c.tangential)));
    c.physics.g_min = r.number("g_min", c.physics.g_min);
    c.feasibility_tol = r.number("feasibility_tol", c.feasibility_tol);
    c.w_min = r.number("w_min", c.w_min);
    if (auto out = r.object("output")) {
        c.output.dir = out->string("dir", c.output.dir);
        c.output.snapshot_every = out->integer("snapshot_every", c.output.snapshot_every);
        c.output.csv = out->boolean("csv", c.output.csv);
        c.output.vtk = out->boolean("vtk", c.output.vtk);
        out->finish();
    }
    r.finish();
    c.stepper.snapshot_every = c.output.snapshot_every;
    c.stepper.solver = c.model;
    c.validate();
    return c;
}

inline RunConfig parse_config(const std::string& text)
{
    Json root;
    try {
        root = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(root);
}

/// Canonical JSON form with every key present; parse_config(to_json(c)) == c.
inline Json to_json(const RunConfig& c)
{
    Json j;
    j["model"] = to_string(c.model);
    if (const auto* d = std::get_if<DiscGeometry>(&c.geometry))
        j["geometry"] = {{"disc", {{"refinement", d->refinement}}}};
    else {
        const auto& r = std::get<RidgeGeometry>(c.geometry);
        j["geometry"] = {{"ridge", {{"L", r.L}, {"H", r.H}, {"delta", r.delta}, {"refinement", r.refinement}}}};
    }
    j["degree"] = c.degree;
    j["volume"] = c.volume;
    j["physics"] = {{"sigma", c.physics.sigma},
                    {"s", c.physics.s},
                    {"g_x", {c.physics.g_x[0], c.physics.g_x[1]}},
                    {"g_z", c.physics.g_z},
                    {"eps", c.physics.eps_line}};
    Json m;
    if (const auto* p = std::get_if<PowerLaw>(&c.mobility.bulk_law))
        m = {{"power", {{"m0", p->m0}, {"alpha", p->alpha}}}};
    else
        m = {{"slip", {{"b", std::get<SlipLaw>(c.mobility.bulk_law).b}}}};
    j["mobility"] = {{"m", m}, {"n", {{"n0", c.mobility.n0}, {"theta", c.mobility.theta}}}};
    j["stepper"] = {{"scheme", to_string(c.stepper.scheme)}, {"tau", c.stepper.tau}, {"t_end", c.stepper.t_end}};
    j["tangential_mode"] = to_string(c.tangential);
    j["g_min"] = c.physics.g_min;
    j["feasibility_tol"] = c.feasibility_tol;
    j["w_min"] = c.w_min;
    j["output"] = {{"dir", c.output.dir},
                   {"snapshot_every", c.output.snapshot_every},
                   {"csv", c.output.csv},
                   {"vtk", c.output.vtk}};
    return j;
}

inline std::shared_ptr<const FeSpace> make_space(const RunConfig& c)
{
    ReferenceMesh mesh;
    if (const auto* d = std::get_if<DiscGeometry>(&c.geometry))
        mesh = build_disc_mesh(d->refinement, c.degree);
    else {
        const auto& r = std::get<RidgeGeometry>(c.geometry);
        mesh = build_ridge_mesh(r.L, r.H, r.refinement, c.degree);
    }
    return std::make_shared<const FeSpace>(std::make_shared<const ReferenceMesh>(std::move(mesh)), c.degree);
}

/// Initial state on `space`: the configured support with the stationary
/// volume-constrained height. The strong model uses the full physics so h is
/// slaved to ψ from the start; the other models start from the shape without
/// in-plane gravity.
inline AleState make_initial_state(const RunConfig& c, std::shared_ptr<const FeSpace> space)
{
    AleState st(std::move(space));
    if (const auto* r = std::get_if<RidgeGeometry>(&c.geometry))
        st.psi = ridge_initial_map(st.fe(), r->H, r->delta);
    st.vol0 = c.volume;
    PhysicsParams p = c.physics;
    if (c.model != ModelKind::Strong)
        p.g_x = Vec2::Zero();
    const StationaryShape shape = stationary_shape(st.fe(), st.psi, c.volume, p);
    st.h = shape.h;
    st.pi_hat = shape.pi_hat;
    return st;
}

inline AleState make_initial_state(const RunConfig& c) { return make_initial_state(c, make_space(c)); }

} // namespace thinfilm
