#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "thermnet/geometry.hpp"
#include "thermnet/material.hpp"
#include "thermnet/rad_matrix.hpp"

namespace thermnet {

class ModelError : public std::runtime_error {
  public:
    explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

enum class NodeKind { diffusion, boundary, arithmetic };

// Lumped node. Diffusion nodes carry heat capacity and evolve by the energy
// equation; boundary nodes hold a fixed temperature; arithmetic nodes have
// zero capacity and sit in instantaneous equilibrium.
struct ThermalNode {
    std::string id;
    NodeKind kind = NodeKind::diffusion;
    double capacity = 0.0;                 // m*c [J/K] when no material is set
    std::string capacity_material;         // specific-heat table reference
    double mass_kg = 0.0;                  // used with capacity_material
    double temperature = 293.15;           // initial (diffusion), fixed (boundary)
    std::string group;

    bool operator==(const ThermalNode&) const = default;
};

enum class ConductorKind { constant, geometric };

struct Conductor {
    std::string id;
    std::string node_a;
    std::string node_b;
    ConductorKind kind = ConductorKind::constant;
    double gl = 0.0;        // [W/K], constant kind
    double section = 0.0;   // S [m^2], geometric kind
    double length = 0.0;    // d [m], geometric kind
    std::string material;   // conductivity table reference, geometric kind

    bool operator==(const Conductor&) const = default;
};

enum class FaceSide { front, back };
enum class Reflection { diffuse, specular };

// One side of a geometric primitive, rigidly bound to a node. alpha is the
// absorptance used both for ray absorption and solar/albedo deposition;
// epsilon weights thermal emission (Kirchhoff models set alpha == epsilon).
struct SurfaceFace {
    std::string id;
    std::string node;
    Primitive primitive;
    FaceSide side = FaceSide::front;
    double alpha = 1.0;
    double epsilon = 1.0;
    Reflection reflection = Reflection::diffuse;
    bool active = true;
    bool high_accuracy = false;  // gets the large ray budget
    bool external = false;       // receives environmental fluxes

    bool operator==(const SurfaceFace&) const = default;

    double area() const { return primitive.area(); }
    int side_sign() const { return side == FaceSide::front ? 1 : -1; }
};

enum class LoadKind { constant, sinusoid, timeseries };

struct HeatLoad {
    std::string node;
    LoadKind kind = LoadKind::constant;
    double power = 0.0;       // [W], constant
    double mean = 0.0;        // [W], sinusoid
    double amplitude = 0.0;   // [W], sinusoid
    double frequency = 0.0;   // [Hz], sinusoid
    std::vector<std::pair<double, double>> samples;  // (t [s], W), timeseries

    bool operator==(const HeatLoad&) const = default;

    double power_at(double t) const {
        switch (kind) {
            case LoadKind::constant: return power;
            case LoadKind::sinusoid:
                return mean + amplitude * std::sin(2.0 * std::numbers::pi * frequency * t);
            case LoadKind::timeseries: return detail::interp_clamped(samples, t);
        }
        return 0.0;
    }
};

struct Constants {
    double sigma = 5.670374419e-8;       // Stefan-Boltzmann [W/(m^2 K^4)]
    double space_temperature = 3.0;      // deep-space sink [K]
    double solar_flux_1au = 1369.0;      // [W/m^2]
    double albedo = 0.3;
    double planet_ir_temperature = 257.0;  // uniform planetary emission [K]

    bool operator==(const Constants&) const = default;
};

enum class SunDirectionModel { fixed, circular_ecliptic };
enum class Attitude { sun_oriented, nadir, fixed_inertial };

struct OrbitSpec {
    // central body
    double mu = 398600.4418;        // [km^3/s^2]
    double body_radius = 6371.0;    // [km]
    double ir_temperature = 257.0;  // [K]
    double albedo = 0.3;
    // classical elements (altitudes above the body surface)
    double apogee_altitude = 0.0;       // [km]
    double perigee_altitude = 0.0;      // [km]
    double inclination = 0.0;           // [deg]
    double argument_of_periapsis = 0.0; // [deg]
    double raan = 0.0;                  // [deg]
    double true_anomaly_epoch = 0.0;    // [deg]
    // sun
    double solar_flux_1au = 1369.0;  // [W/m^2]
    SunDirectionModel sun_model = SunDirectionModel::fixed;
    Vec3 sun_direction{1.0, 0.0, 0.0};  // unit vector toward the sun (fixed model)
    Attitude attitude = Attitude::sun_oriented;

    bool operator==(const OrbitSpec&) const = default;
};

struct Model {
    Constants constants;
    std::vector<MaterialTable> materials;
    std::vector<ThermalNode> nodes;       // includes the implicit "space" boundary
    std::vector<SurfaceFace> faces;
    std::vector<Conductor> conductors;
    std::vector<HeatLoad> loads;
    std::optional<RadCouplingMatrix> rad_couplings;
    std::optional<OrbitSpec> orbit;

    bool operator==(const Model&) const = default;

    const ThermalNode* find_node(const std::string& id) const {
        for (const auto& n : nodes)
            if (n.id == id) return &n;
        return nullptr;
    }
    const MaterialTable* find_material(const std::string& name) const {
        for (const auto& m : materials)
            if (m.name == name) return &m;
        return nullptr;
    }
    const SurfaceFace* find_face(const std::string& id) const {
        for (const auto& f : faces)
            if (f.id == id) return &f;
        return nullptr;
    }

    bool node_has_capacity_table(const ThermalNode& n) const {
        return !n.capacity_material.empty();
    }

    // m*c [J/K] at temperature T
    double node_capacity(const ThermalNode& n, double T) const {
        if (n.capacity_material.empty()) return n.capacity;
        const MaterialTable* mt = find_material(n.capacity_material);
        if (!mt) throw ModelError("node '" + n.id + "': unknown material '" + n.capacity_material + "'");
        return n.mass_kg * eval_material(*mt, MaterialProperty::specific_heat, T);
    }
};

// Conductive coupling GL [W/K] of a conductor evaluated at the arithmetic
// mean of its endpoint temperatures.
inline double conductor_GL(const Model& model, const Conductor& c, double T_mean) {
    if (c.kind == ConductorKind::constant) return c.gl;
    const MaterialTable* mt = model.find_material(c.material);
    if (!mt) throw ModelError("conductor '" + c.id + "': unknown material '" + c.material + "'");
    return eval_material(*mt, MaterialProperty::conductivity, T_mean) * c.section / c.length;
}

// d(GL)/dT_mean for the Jacobian of geometric conductors.
inline double conductor_GL_slope(const Model& model, const Conductor& c, double T_mean) {
    if (c.kind == ConductorKind::constant) return 0.0;
    const MaterialTable* mt = model.find_material(c.material);
    if (!mt) throw ModelError("conductor '" + c.id + "': unknown material '" + c.material + "'");
    return eval_material_slope(*mt, MaterialProperty::conductivity, T_mean) * c.section / c.length;
}

// Validates cross-references and invariants; throws ModelError naming the
// offending field. Also ensures the reserved space node exists as a boundary
// node at the configured sink temperature.
inline void validate_model(Model& model) {
    std::set<std::string> node_ids;
    for (auto& n : model.nodes) {
        if (!node_ids.insert(n.id).second)
            throw ModelError("duplicate node id '" + n.id + "'");
        switch (n.kind) {
            case NodeKind::diffusion:
                if (n.capacity_material.empty()) {
                    if (!(n.capacity > 0.0))
                        throw ModelError("node '" + n.id + "': diffusion node needs capacity > 0");
                } else {
                    if (!(n.mass_kg > 0.0))
                        throw ModelError("node '" + n.id + "': diffusion node needs mass_kg > 0");
                    if (!model.find_material(n.capacity_material))
                        throw ModelError("node '" + n.id + "': unknown material '" +
                                         n.capacity_material + "'");
                }
                if (!(n.temperature > 0.0))
                    throw ModelError("node '" + n.id + "': initial temperature must be > 0 K");
                break;
            case NodeKind::boundary:
                if (!(n.temperature > 0.0))
                    throw ModelError("node '" + n.id + "': boundary temperature must be > 0 K");
                break;
            case NodeKind::arithmetic:
                if (n.capacity != 0.0 || !n.capacity_material.empty())
                    throw ModelError("node '" + n.id + "': arithmetic node must have zero capacity");
                break;
        }
    }
    if (!node_ids.count(space_node_id)) {
        ThermalNode space;
        space.id = space_node_id;
        space.kind = NodeKind::boundary;
        space.temperature = model.constants.space_temperature;
        model.nodes.push_back(space);
        node_ids.insert(space.id);
    } else {
        const ThermalNode* sp = model.find_node(space_node_id);
        if (sp->kind != NodeKind::boundary)
            throw ModelError("node 'space' is reserved for the deep-space sink and must be a boundary node");
    }

    std::set<std::string> material_names;
    for (const auto& m : model.materials) {
        if (!material_names.insert(m.name).second)
            throw ModelError("duplicate material '" + m.name + "'");
        for (const auto* tab : {&m.conductivity, &m.specific_heat}) {
            if (tab->empty())
                throw ModelError("material '" + m.name + "': each property table needs at least one entry");
            for (std::size_t i = 0; i < tab->size(); ++i) {
                if ((*tab)[i].second <= 0.0 || (*tab)[i].first <= 0.0)
                    throw ModelError("material '" + m.name + "': table values must be > 0");
                if (i > 0 && (*tab)[i].first <= (*tab)[i - 1].first)
                    throw ModelError("material '" + m.name + "': table temperatures must be strictly increasing");
            }
        }
    }

    std::set<std::string> conductor_ids;
    for (const auto& c : model.conductors) {
        if (!conductor_ids.insert(c.id).second)
            throw ModelError("duplicate conductor id '" + c.id + "'");
        if (!node_ids.count(c.node_a))
            throw ModelError("conductor '" + c.id + "': unknown node '" + c.node_a + "'");
        if (!node_ids.count(c.node_b))
            throw ModelError("conductor '" + c.id + "': unknown node '" + c.node_b + "'");
        if (c.node_a == c.node_b)
            throw ModelError("conductor '" + c.id + "': endpoints must differ");
        if (c.kind == ConductorKind::constant) {
            if (!(c.gl > 0.0)) throw ModelError("conductor '" + c.id + "': GL must be > 0");
        } else {
            if (!(c.section > 0.0) || !(c.length > 0.0))
                throw ModelError("conductor '" + c.id + "': section and length must be > 0");
            if (!model.find_material(c.material))
                throw ModelError("conductor '" + c.id + "': unknown material '" + c.material + "'");
        }
    }

    std::set<std::string> face_ids;
    for (const auto& f : model.faces) {
        if (!face_ids.insert(f.id).second)
            throw ModelError("duplicate face id '" + f.id + "'");
        if (node_ids.count(f.id))
            throw ModelError("face '" + f.id + "': id collides with a node id");
        if (!node_ids.count(f.node))
            throw ModelError("face '" + f.id + "': unknown node '" + f.node + "'");
        if (!(f.area() > 0.0))
            throw ModelError("face '" + f.id + "': area must be > 0");
        if (f.alpha < 0.0 || f.alpha > 1.0 || f.epsilon < 0.0 || f.epsilon > 1.0)
            throw ModelError("face '" + f.id + "': alpha and epsilon must lie in [0, 1]");
    }

    for (const auto& l : model.loads) {
        if (!node_ids.count(l.node))
            throw ModelError("load: unknown node '" + l.node + "'");
        if (l.kind == LoadKind::constant && l.power < 0.0)
            throw ModelError("load on '" + l.node + "': constant power must be >= 0");
        if (l.kind == LoadKind::sinusoid && l.mean < 0.0)
            throw ModelError("load on '" + l.node + "': mean power must be >= 0");
        if (l.kind == LoadKind::timeseries) {
            if (l.samples.empty())
                throw ModelError("load on '" + l.node + "': timeseries needs samples");
            for (std::size_t i = 1; i < l.samples.size(); ++i)
                if (l.samples[i].first <= l.samples[i - 1].first)
                    throw ModelError("load on '" + l.node + "': timeseries times must be strictly increasing");
        }
    }

    if (model.rad_couplings) {
        for (const auto& e : model.rad_couplings->entries) {
            for (const std::string* id : {&e.a, &e.b}) {
                if (*id == space_node_id) continue;
                if (!node_ids.count(*id) && !face_ids.count(*id))
                    throw ModelError("rad_couplings: unknown node or face '" + *id + "'");
            }
            if (e.gr < 0.0) throw ModelError("rad_couplings: GR must be >= 0 ('" + e.a + "','" + e.b + "')");
        }
    }

    if (model.orbit) {
        const OrbitSpec& o = *model.orbit;
        if (o.apogee_altitude < o.perigee_altitude || o.perigee_altitude < 0.0)
            throw ModelError("orbit: apogee altitude must be >= perigee altitude >= 0");
        if (!(o.solar_flux_1au > 0.0)) throw ModelError("orbit: solar flux must be > 0");
        if (o.albedo < 0.0 || o.albedo > 1.0) throw ModelError("orbit: albedo must lie in [0, 1]");
    }
}

struct ChainSegment {
    std::vector<ThermalNode> nodes;
    std::vector<Conductor> conductors;
};

// Splits a 1-D conductive element of given length and cross-section into n
// equal diffusion nodes joined by n+1 geometric conductors. End conductors
// span length/(2n) and interior ones length/n so the series resistance at
// uniform temperature equals the undivided element's.
inline ChainSegment subdivide_chain(double length, double section, const std::string& material,
                                    int n, const std::string& end_a, const std::string& end_b,
                                    double mass_total, const std::string& id_prefix,
                                    double initial_temperature = 293.15,
                                    const std::string& group = "") {
    if (n < 1) throw ModelError("subdivide_chain: n must be >= 1");
    if (!(length > 0.0) || !(section > 0.0))
        throw ModelError("subdivide_chain: length and section must be > 0");
    ChainSegment seg;
    for (int i = 0; i < n; ++i) {
        ThermalNode node;
        node.id = id_prefix + std::to_string(i + 1);
        node.kind = NodeKind::diffusion;
        node.capacity_material = material;
        node.mass_kg = mass_total / n;
        node.temperature = initial_temperature;
        node.group = group;
        seg.nodes.push_back(std::move(node));
    }
    auto link = [&](const std::string& a, const std::string& b, double span, int idx) {
        Conductor c;
        c.id = id_prefix + "gl" + std::to_string(idx);
        c.node_a = a;
        c.node_b = b;
        c.kind = ConductorKind::geometric;
        c.section = section;
        c.length = span;
        c.material = material;
        seg.conductors.push_back(std::move(c));
    };
    const double end_span = length / (2.0 * n);
    const double mid_span = length / n;
    link(end_a, seg.nodes.front().id, end_span, 0);
    for (int i = 0; i + 1 < n; ++i) link(seg.nodes[i].id, seg.nodes[i + 1].id, mid_span, i + 1);
    link(seg.nodes.back().id, end_b, end_span, n);
    return seg;
}

}  // namespace thermnet
