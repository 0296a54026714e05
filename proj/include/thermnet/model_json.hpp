#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "thermnet/model.hpp"

namespace thermnet {

// Declarative model-file format, documented in docs/model_format.md. Parsing
// is strict: unknown keys are rejected with their JSON path.
namespace model_json_detail {

using nlohmann::json;

inline void require_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& path) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) { ok = true; break; }
        if (!ok) throw ModelError("unknown key '" + it.key() + "' at " + path);
    }
}

inline double get_num(const json& obj, const char* key, const std::string& path,
                      bool required = true, double fallback = 0.0) {
    if (!obj.contains(key)) {
        if (required) throw ModelError("missing key '" + std::string(key) + "' at " + path);
        return fallback;
    }
    const json& v = obj.at(key);
    if (!v.is_number()) throw ModelError("expected number for '" + std::string(key) + "' at " + path);
    return v.get<double>();
}

inline std::string get_str(const json& obj, const char* key, const std::string& path,
                           bool required = true, const std::string& fallback = "") {
    if (!obj.contains(key)) {
        if (required) throw ModelError("missing key '" + std::string(key) + "' at " + path);
        return fallback;
    }
    const json& v = obj.at(key);
    if (!v.is_string()) throw ModelError("expected string for '" + std::string(key) + "' at " + path);
    return v.get<std::string>();
}

inline bool get_bool(const json& obj, const char* key, const std::string& path, bool fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_boolean()) throw ModelError("expected bool for '" + std::string(key) + "' at " + path);
    return v.get<bool>();
}

inline Vec3 get_vec3(const json& obj, const char* key, const std::string& path, bool required,
                     Vec3 fallback) {
    if (!obj.contains(key)) {
        if (required) throw ModelError("missing key '" + std::string(key) + "' at " + path);
        return fallback;
    }
    const json& v = obj.at(key);
    if (!v.is_array() || v.size() != 3)
        throw ModelError("expected [x, y, z] for '" + std::string(key) + "' at " + path);
    return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

inline std::vector<std::pair<double, double>> get_pairs(const json& arr, const std::string& path) {
    std::vector<std::pair<double, double>> out;
    if (!arr.is_array()) throw ModelError("expected array of [x, y] pairs at " + path);
    for (const auto& p : arr) {
        if (!p.is_array() || p.size() != 2)
            throw ModelError("expected [x, y] pair at " + path);
        out.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    return out;
}

inline Primitive parse_primitive(const json& j, const std::string& path) {
    require_keys(j, {"kind", "width", "height", "radius", "inner_radius", "outer_radius",
                     "base_radius", "top_radius", "origin", "axis", "ref"},
                 path);
    Primitive p;
    const std::string kind = get_str(j, "kind", path);
    if (kind == "rectangle") {
        p.kind = PrimitiveKind::rectangle;
        p.p0 = get_num(j, "width", path);
        p.p1 = get_num(j, "height", path);
    } else if (kind == "disc") {
        p.kind = PrimitiveKind::disc;
        p.p0 = get_num(j, "radius", path);
    } else if (kind == "annulus") {
        p.kind = PrimitiveKind::annulus;
        p.p0 = get_num(j, "inner_radius", path);
        p.p1 = get_num(j, "outer_radius", path);
    } else if (kind == "cylinder") {
        p.kind = PrimitiveKind::cylinder;
        p.p0 = get_num(j, "radius", path);
        p.p1 = get_num(j, "height", path);
    } else if (kind == "cone") {
        p.kind = PrimitiveKind::cone;
        p.p0 = get_num(j, "base_radius", path);
        p.p1 = get_num(j, "top_radius", path);
        p.p2 = get_num(j, "height", path);
    } else {
        throw ModelError("unknown primitive kind '" + kind + "' at " + path);
    }
    const Vec3 origin = get_vec3(j, "origin", path, false, {0, 0, 0});
    const Vec3 axis = get_vec3(j, "axis", path, false, {0, 0, 1});
    const Vec3 ref = get_vec3(j, "ref", path, false, {1, 0, 0});
    p.frame = make_frame(origin, axis, ref);
    return p;
}

inline json primitive_to_json(const Primitive& p) {
    json j;
    switch (p.kind) {
        case PrimitiveKind::rectangle:
            j["kind"] = "rectangle"; j["width"] = p.p0; j["height"] = p.p1; break;
        case PrimitiveKind::disc:
            j["kind"] = "disc"; j["radius"] = p.p0; break;
        case PrimitiveKind::annulus:
            j["kind"] = "annulus"; j["inner_radius"] = p.p0; j["outer_radius"] = p.p1; break;
        case PrimitiveKind::cylinder:
            j["kind"] = "cylinder"; j["radius"] = p.p0; j["height"] = p.p1; break;
        case PrimitiveKind::cone:
            j["kind"] = "cone"; j["base_radius"] = p.p0; j["top_radius"] = p.p1;
            j["height"] = p.p2; break;
    }
    j["origin"] = {p.frame.origin.x, p.frame.origin.y, p.frame.origin.z};
    j["axis"] = {p.frame.uz.x, p.frame.uz.y, p.frame.uz.z};
    j["ref"] = {p.frame.ux.x, p.frame.ux.y, p.frame.ux.z};
    return j;
}

inline RadCouplingMatrix parse_rad_couplings(const json& j, const std::string& path) {
    require_keys(j, {"entries", "rays_used", "area_epsilon", "seed", "symmetrized", "method",
                     "capped_rays"},
                 path);
    RadCouplingMatrix m;
    if (j.contains("entries")) {
        for (std::size_t i = 0; i < j["entries"].size(); ++i) {
            const json& e = j["entries"][i];
            const std::string p = path + ".entries[" + std::to_string(i) + "]";
            require_keys(e, {"a", "b", "gr", "stderr"}, p);
            RadEntry re;
            re.a = get_str(e, "a", p);
            re.b = get_str(e, "b", p);
            re.gr = get_num(e, "gr", p);
            re.stderr_est = get_num(e, "stderr", p, false, 0.0);
            m.entries.push_back(std::move(re));
        }
    }
    if (j.contains("rays_used"))
        for (auto it = j["rays_used"].begin(); it != j["rays_used"].end(); ++it)
            m.rays_used[it.key()] = it.value().get<std::int64_t>();
    if (j.contains("area_epsilon"))
        for (auto it = j["area_epsilon"].begin(); it != j["area_epsilon"].end(); ++it)
            m.area_epsilon[it.key()] = it.value().get<double>();
    if (j.contains("seed")) m.seed = j["seed"].get<std::uint64_t>();
    m.symmetrized = get_bool(j, "symmetrized", path, false);
    m.method = get_str(j, "method", path, false, "prescribed");
    if (j.contains("capped_rays")) m.capped_rays = j["capped_rays"].get<std::int64_t>();
    return m;
}

inline json rad_couplings_to_json(const RadCouplingMatrix& m) {
    json j;
    j["method"] = m.method;
    j["symmetrized"] = m.symmetrized;
    j["seed"] = m.seed;
    j["capped_rays"] = m.capped_rays;
    json entries = json::array();
    for (const auto& e : m.entries)
        entries.push_back({{"a", e.a}, {"b", e.b}, {"gr", e.gr}, {"stderr", e.stderr_est}});
    j["entries"] = std::move(entries);
    j["rays_used"] = m.rays_used;
    j["area_epsilon"] = m.area_epsilon;
    return j;
}

inline OrbitSpec parse_orbit(const json& j, const std::string& path) {
    require_keys(j, {"body", "elements", "sun", "attitude"}, path);
    OrbitSpec o;
    if (j.contains("body")) {
        const json& b = j["body"];
        require_keys(b, {"mu", "radius", "ir_temperature", "albedo"}, path + ".body");
        o.mu = get_num(b, "mu", path + ".body", false, o.mu);
        o.body_radius = get_num(b, "radius", path + ".body", false, o.body_radius);
        o.ir_temperature = get_num(b, "ir_temperature", path + ".body", false, o.ir_temperature);
        o.albedo = get_num(b, "albedo", path + ".body", false, o.albedo);
    }
    const json& e = j.at("elements");
    require_keys(e, {"apogee_altitude", "perigee_altitude", "inclination",
                     "argument_of_periapsis", "raan", "true_anomaly_epoch"},
                 path + ".elements");
    o.apogee_altitude = get_num(e, "apogee_altitude", path + ".elements");
    o.perigee_altitude = get_num(e, "perigee_altitude", path + ".elements");
    o.inclination = get_num(e, "inclination", path + ".elements", false, 0.0);
    o.argument_of_periapsis = get_num(e, "argument_of_periapsis", path + ".elements", false, 0.0);
    o.raan = get_num(e, "raan", path + ".elements", false, 0.0);
    o.true_anomaly_epoch = get_num(e, "true_anomaly_epoch", path + ".elements", false, 0.0);
    if (j.contains("sun")) {
        const json& s = j["sun"];
        require_keys(s, {"flux_1au", "direction"}, path + ".sun");
        o.solar_flux_1au = get_num(s, "flux_1au", path + ".sun", false, o.solar_flux_1au);
        if (s.contains("direction")) {
            if (s["direction"].is_string()) {
                if (s["direction"] != "ecliptic")
                    throw ModelError("sun direction must be a vector or \"ecliptic\" at " + path);
                o.sun_model = SunDirectionModel::circular_ecliptic;
            } else {
                o.sun_model = SunDirectionModel::fixed;
                o.sun_direction = normalized(get_vec3(s, "direction", path + ".sun", true, {}));
            }
        }
    }
    const std::string att = get_str(j, "attitude", path, false, "sun_oriented");
    if (att == "sun_oriented") o.attitude = Attitude::sun_oriented;
    else if (att == "nadir") o.attitude = Attitude::nadir;
    else if (att == "fixed_inertial") o.attitude = Attitude::fixed_inertial;
    else throw ModelError("unknown attitude '" + att + "' at " + path);
    return o;
}

inline json orbit_to_json(const OrbitSpec& o) {
    json j;
    j["body"] = {{"mu", o.mu}, {"radius", o.body_radius},
                 {"ir_temperature", o.ir_temperature}, {"albedo", o.albedo}};
    j["elements"] = {{"apogee_altitude", o.apogee_altitude},
                     {"perigee_altitude", o.perigee_altitude},
                     {"inclination", o.inclination},
                     {"argument_of_periapsis", o.argument_of_periapsis},
                     {"raan", o.raan},
                     {"true_anomaly_epoch", o.true_anomaly_epoch}};
    json sun;
    sun["flux_1au"] = o.solar_flux_1au;
    if (o.sun_model == SunDirectionModel::circular_ecliptic) sun["direction"] = "ecliptic";
    else sun["direction"] = {o.sun_direction.x, o.sun_direction.y, o.sun_direction.z};
    j["sun"] = std::move(sun);
    switch (o.attitude) {
        case Attitude::sun_oriented: j["attitude"] = "sun_oriented"; break;
        case Attitude::nadir: j["attitude"] = "nadir"; break;
        case Attitude::fixed_inertial: j["attitude"] = "fixed_inertial"; break;
    }
    return j;
}

}  // namespace model_json_detail

inline Model parse_model(const std::string& text) {
    using nlohmann::json;
    using namespace model_json_detail;

    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        // translate the byte offset into line/column
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') { ++line; col = 1; }
            else ++col;
        }
        throw ModelError("syntax error at line " + std::to_string(line) + ", column " +
                         std::to_string(col) + ": " + e.what());
    }
    if (!root.is_object()) throw ModelError("model file must be a JSON object");
    require_keys(root, {"constants", "materials", "nodes", "faces", "conductors", "loads",
                        "orbit", "rad_couplings"},
                 "$");

    Model m;
    if (root.contains("constants")) {
        const json& c = root["constants"];
        require_keys(c, {"sigma", "space_temperature", "solar_flux_1au", "albedo",
                         "planet_ir_temperature"},
                     "$.constants");
        m.constants.sigma = get_num(c, "sigma", "$.constants", false, m.constants.sigma);
        m.constants.space_temperature =
            get_num(c, "space_temperature", "$.constants", false, m.constants.space_temperature);
        m.constants.solar_flux_1au =
            get_num(c, "solar_flux_1au", "$.constants", false, m.constants.solar_flux_1au);
        m.constants.albedo = get_num(c, "albedo", "$.constants", false, m.constants.albedo);
        m.constants.planet_ir_temperature = get_num(c, "planet_ir_temperature", "$.constants",
                                                    false, m.constants.planet_ir_temperature);
    }

    if (root.contains("materials")) {
        for (std::size_t i = 0; i < root["materials"].size(); ++i) {
            const json& jm = root["materials"][i];
            const std::string path = "$.materials[" + std::to_string(i) + "]";
            require_keys(jm, {"name", "conductivity", "specific_heat"}, path);
            MaterialTable t;
            t.name = get_str(jm, "name", path);
            t.conductivity = get_pairs(jm.at("conductivity"), path + ".conductivity");
            t.specific_heat = get_pairs(jm.at("specific_heat"), path + ".specific_heat");
            m.materials.push_back(std::move(t));
        }
    }

    if (root.contains("nodes")) {
        for (std::size_t i = 0; i < root["nodes"].size(); ++i) {
            const json& jn = root["nodes"][i];
            const std::string path = "$.nodes[" + std::to_string(i) + "]";
            require_keys(jn, {"id", "kind", "capacity", "temperature", "group"}, path);
            ThermalNode n;
            n.id = get_str(jn, "id", path);
            const std::string kind = get_str(jn, "kind", path, false, "diffusion");
            if (kind == "diffusion") n.kind = NodeKind::diffusion;
            else if (kind == "boundary") n.kind = NodeKind::boundary;
            else if (kind == "arithmetic") n.kind = NodeKind::arithmetic;
            else throw ModelError("unknown node kind '" + kind + "' at " + path);
            if (jn.contains("capacity")) {
                const json& cap = jn["capacity"];
                if (cap.is_number()) {
                    n.capacity = cap.get<double>();
                } else if (cap.is_object()) {
                    require_keys(cap, {"material", "mass_kg"}, path + ".capacity");
                    n.capacity_material = get_str(cap, "material", path + ".capacity");
                    n.mass_kg = get_num(cap, "mass_kg", path + ".capacity");
                } else {
                    throw ModelError("capacity must be a number or {material, mass_kg} at " + path);
                }
            }
            n.temperature = get_num(jn, "temperature", path, n.kind != NodeKind::arithmetic,
                                    n.temperature);
            n.group = get_str(jn, "group", path, false, "");
            m.nodes.push_back(std::move(n));
        }
    }

    if (root.contains("faces")) {
        for (std::size_t i = 0; i < root["faces"].size(); ++i) {
            const json& jf = root["faces"][i];
            const std::string path = "$.faces[" + std::to_string(i) + "]";
            require_keys(jf, {"id", "node", "primitive", "side", "alpha", "epsilon",
                              "reflection", "active", "high_accuracy", "external"},
                         path);
            SurfaceFace f;
            f.id = get_str(jf, "id", path);
            f.node = get_str(jf, "node", path);
            if (!jf.contains("primitive")) throw ModelError("missing key 'primitive' at " + path);
            f.primitive = parse_primitive(jf["primitive"], path + ".primitive");
            const std::string side = get_str(jf, "side", path, false, "front");
            if (side == "front") f.side = FaceSide::front;
            else if (side == "back") f.side = FaceSide::back;
            else throw ModelError("unknown face side '" + side + "' at " + path);
            f.alpha = get_num(jf, "alpha", path);
            f.epsilon = get_num(jf, "epsilon", path);
            const std::string refl = get_str(jf, "reflection", path, false, "diffuse");
            if (refl == "diffuse") f.reflection = Reflection::diffuse;
            else if (refl == "specular") f.reflection = Reflection::specular;
            else throw ModelError("unknown reflection '" + refl + "' at " + path);
            f.active = get_bool(jf, "active", path, true);
            f.high_accuracy = get_bool(jf, "high_accuracy", path, false);
            f.external = get_bool(jf, "external", path, false);
            m.faces.push_back(std::move(f));
        }
    }

    if (root.contains("conductors")) {
        for (std::size_t i = 0; i < root["conductors"].size(); ++i) {
            const json& jc = root["conductors"][i];
            const std::string path = "$.conductors[" + std::to_string(i) + "]";
            require_keys(jc, {"id", "node_a", "node_b", "kind", "gl", "section", "length",
                              "material"},
                         path);
            Conductor c;
            c.id = get_str(jc, "id", path);
            c.node_a = get_str(jc, "node_a", path);
            c.node_b = get_str(jc, "node_b", path);
            const std::string kind = get_str(jc, "kind", path, false, "constant");
            if (kind == "constant") {
                c.kind = ConductorKind::constant;
                c.gl = get_num(jc, "gl", path);
            } else if (kind == "geometric") {
                c.kind = ConductorKind::geometric;
                c.section = get_num(jc, "section", path);
                c.length = get_num(jc, "length", path);
                c.material = get_str(jc, "material", path);
            } else {
                throw ModelError("unknown conductor kind '" + kind + "' at " + path);
            }
            m.conductors.push_back(std::move(c));
        }
    }

    if (root.contains("loads")) {
        for (std::size_t i = 0; i < root["loads"].size(); ++i) {
            const json& jl = root["loads"][i];
            const std::string path = "$.loads[" + std::to_string(i) + "]";
            require_keys(jl, {"node", "kind", "power", "mean", "amplitude", "frequency",
                              "samples"},
                         path);
            HeatLoad l;
            l.node = get_str(jl, "node", path);
            const std::string kind = get_str(jl, "kind", path, false, "constant");
            if (kind == "constant") {
                l.kind = LoadKind::constant;
                l.power = get_num(jl, "power", path);
            } else if (kind == "sinusoid") {
                l.kind = LoadKind::sinusoid;
                l.mean = get_num(jl, "mean", path);
                l.amplitude = get_num(jl, "amplitude", path);
                l.frequency = get_num(jl, "frequency", path);
            } else if (kind == "timeseries") {
                l.kind = LoadKind::timeseries;
                if (!jl.contains("samples"))
                    throw ModelError("missing key 'samples' at " + path);
                l.samples = get_pairs(jl["samples"], path + ".samples");
            } else if (kind == "environmental") {
                throw ModelError("environmental loads are produced by the orbit module and cannot be declared at " + path);
            } else {
                throw ModelError("unknown load kind '" + kind + "' at " + path);
            }
            m.loads.push_back(std::move(l));
        }
    }

    if (root.contains("rad_couplings"))
        m.rad_couplings = parse_rad_couplings(root["rad_couplings"], "$.rad_couplings");
    if (root.contains("orbit")) m.orbit = parse_orbit(root["orbit"], "$.orbit");

    validate_model(m);
    return m;
}

inline Model load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open model file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_model(ss.str());
}

inline nlohmann::json model_to_json(const Model& m) {
    using nlohmann::json;
    using namespace model_json_detail;
    json root;
    root["constants"] = {{"sigma", m.constants.sigma},
                         {"space_temperature", m.constants.space_temperature},
                         {"solar_flux_1au", m.constants.solar_flux_1au},
                         {"albedo", m.constants.albedo},
                         {"planet_ir_temperature", m.constants.planet_ir_temperature}};
    root["materials"] = json::array();
    for (const auto& t : m.materials) {
        json jm;
        jm["name"] = t.name;
        jm["conductivity"] = t.conductivity;
        jm["specific_heat"] = t.specific_heat;
        root["materials"].push_back(std::move(jm));
    }
    root["nodes"] = json::array();
    for (const auto& n : m.nodes) {
        json jn;
        jn["id"] = n.id;
        switch (n.kind) {
            case NodeKind::diffusion: jn["kind"] = "diffusion"; break;
            case NodeKind::boundary: jn["kind"] = "boundary"; break;
            case NodeKind::arithmetic: jn["kind"] = "arithmetic"; break;
        }
        if (!n.capacity_material.empty())
            jn["capacity"] = {{"material", n.capacity_material}, {"mass_kg", n.mass_kg}};
        else if (n.kind == NodeKind::diffusion)
            jn["capacity"] = n.capacity;
        jn["temperature"] = n.temperature;
        if (!n.group.empty()) jn["group"] = n.group;
        root["nodes"].push_back(std::move(jn));
    }
    root["faces"] = json::array();
    for (const auto& f : m.faces) {
        json jf;
        jf["id"] = f.id;
        jf["node"] = f.node;
        jf["primitive"] = primitive_to_json(f.primitive);
        jf["side"] = f.side == FaceSide::front ? "front" : "back";
        jf["alpha"] = f.alpha;
        jf["epsilon"] = f.epsilon;
        jf["reflection"] = f.reflection == Reflection::diffuse ? "diffuse" : "specular";
        jf["active"] = f.active;
        jf["high_accuracy"] = f.high_accuracy;
        jf["external"] = f.external;
        root["faces"].push_back(std::move(jf));
    }
    root["conductors"] = json::array();
    for (const auto& c : m.conductors) {
        json jc;
        jc["id"] = c.id;
        jc["node_a"] = c.node_a;
        jc["node_b"] = c.node_b;
        if (c.kind == ConductorKind::constant) {
            jc["kind"] = "constant";
            jc["gl"] = c.gl;
        } else {
            jc["kind"] = "geometric";
            jc["section"] = c.section;
            jc["length"] = c.length;
            jc["material"] = c.material;
        }
        root["conductors"].push_back(std::move(jc));
    }
    root["loads"] = json::array();
    for (const auto& l : m.loads) {
        json jl;
        jl["node"] = l.node;
        switch (l.kind) {
            case LoadKind::constant:
                jl["kind"] = "constant";
                jl["power"] = l.power;
                break;
            case LoadKind::sinusoid:
                jl["kind"] = "sinusoid";
                jl["mean"] = l.mean;
                jl["amplitude"] = l.amplitude;
                jl["frequency"] = l.frequency;
                break;
            case LoadKind::timeseries:
                jl["kind"] = "timeseries";
                jl["samples"] = l.samples;
                break;
        }
        root["loads"].push_back(std::move(jl));
    }
    if (m.rad_couplings) root["rad_couplings"] = rad_couplings_to_json(*m.rad_couplings);
    if (m.orbit) root["orbit"] = orbit_to_json(*m.orbit);
    return root;
}

inline std::string serialize_model(const Model& m) { return model_to_json(m).dump(2) + "\n"; }

}  // namespace thermnet
