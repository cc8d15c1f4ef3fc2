#ifndef VESICLE_IO_HPP
#define VESICLE_IO_HPP

#include "barrier.hpp"
#include "curve_mesh.hpp"
#include "orchestrator.hpp"
#include "shapes.hpp"
#include "stepper.hpp"

#include <json.hpp>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace vesicle {

using Json = nlohmann::json;

inline constexpr int config_version = 1;
inline constexpr int min_config_elements = 8;

struct OutputOptions {
    std::size_t frame_stride = 10;
    bool svg = false;
    std::uint64_t seed = 1;
    std::optional<std::array<double, 4>> viewbox; // xmin, ymin, width, height
};

struct ScenarioConfig {
    int version = config_version;
    Model model = Model::Model1;
    std::vector<ShapeSpec> shapes;
    double tau = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    double epsilon = 0.0;
    std::size_t max_iters = 20000;
    double newton_tol = 1e-9;
    int newton_max_iter = 25;
    double sharpness = 25.0;
    bool redistribute = false;
    bool lag_tangential = true;
    std::optional<BarrierSpec> barrier;
    std::optional<MovingBarrierRule> moving;
    OutputOptions output;

    FlowParameters flow() const
    {
        FlowParameters p;
        p.model = model;
        p.tau = tau;
        p.alpha = alpha;
        p.beta = beta;
        p.newton_tol = newton_tol;
        p.newton_max_iter = newton_max_iter;
        p.redistribute = redistribute;
        p.lag_tangential = lag_tangential;
        return p;
    }
};

namespace detail {

inline void check_keys(const Json& obj, const std::set<std::string>& allowed, const std::string& where)
{
    if (!obj.is_object()) {
        throw ConfigError(where + ": expected an object");
    }
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.contains(key)) {
            throw ConfigError(where + ": unknown key \"" + key + "\"");
        }
    }
}

inline const Json& require(const Json& obj, const std::string& key, const std::string& where)
{
    if (!obj.contains(key)) {
        throw ConfigError(where + ": missing required key \"" + key + "\"");
    }
    return obj.at(key);
}

inline double number(const Json& v, const std::string& where)
{
    if (!v.is_number()) {
        throw ConfigError(where + ": expected a number");
    }
    return v.get<double>();
}

inline long long integer(const Json& v, const std::string& where)
{
    if (!v.is_number_integer()) {
        throw ConfigError(where + ": expected an integer");
    }
    return v.get<long long>();
}

inline Vec2 point(const Json& v, const std::string& where)
{
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
        throw ConfigError(where + ": expected [x, y]");
    }
    return {v[0].get<double>(), v[1].get<double>()};
}

inline double number_or(const Json& obj, const std::string& key, double fallback,
                        const std::string& where)
{
    return obj.contains(key) ? number(obj.at(key), where + "." + key) : fallback;
}

inline ShapeSpec parse_shape(const Json& j, const std::string& where)
{
    if (!j.is_object()) {
        throw ConfigError(where + ": expected an object");
    }
    const Json& type = require(j, "type", where);
    if (!type.is_string()) {
        throw ConfigError(where + ".type: expected a string");
    }
    const std::string t = type.get<std::string>();
    ShapeSpec spec;
    if (j.contains("elements")) {
        spec.element_count = static_cast<int>(integer(j.at("elements"), where + ".elements"));
    }
    const Vec2 center = j.contains("center") ? point(j.at("center"), where + ".center") : Vec2::Zero();
    if (t == "circle") {
        check_keys(j, {"type", "elements", "center", "radius"}, where);
        spec.geometry = shape::Circle{center, number(require(j, "radius", where), where + ".radius")};
    } else if (t == "ellipse") {
        check_keys(j, {"type", "elements", "center", "semi_axes"}, where);
        const Vec2 ax = point(require(j, "semi_axes", where), where + ".semi_axes");
        spec.geometry = shape::Ellipse{center, ax.x(), ax.y()};
    } else if (t == "c-shape") {
        check_keys(j, {"type", "elements", "center", "radius", "thickness", "opening_angle"}, where);
        shape::CShape c;
        c.center = center;
        c.radius = number(require(j, "radius", where), where + ".radius");
        c.thickness = number(require(j, "thickness", where), where + ".thickness");
        c.opening_angle = number_or(j, "opening_angle", c.opening_angle, where);
        spec.geometry = c;
    } else if (t == "cisterna") {
        check_keys(j, {"type", "elements", "center", "half_length", "half_thickness"}, where);
        shape::Cisterna c;
        c.center = center;
        c.half_length = number(require(j, "half_length", where), where + ".half_length");
        c.half_thickness = number(require(j, "half_thickness", where), where + ".half_thickness");
        spec.geometry = c;
    } else if (t == "points") {
        check_keys(j, {"type", "points"}, where);
        const Json& pts = require(j, "points", where);
        if (!pts.is_array()) {
            throw ConfigError(where + ".points: expected an array");
        }
        shape::PointList pl;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            pl.points.push_back(point(pts[i], where + ".points[" + std::to_string(i) + "]"));
        }
        spec.element_count = static_cast<int>(pl.points.size());
        spec.geometry = std::move(pl);
    } else {
        throw ConfigError(where + ".type: unknown shape type \"" + t + "\"");
    }
    if (spec.element_count < min_config_elements) {
        throw ConfigError(where + ": at least " + std::to_string(min_config_elements)
                          + " elements are required");
    }
    return spec;
}

inline BarrierSpec parse_barrier_node(const Json& j, double sharpness, const std::string& where)
{
    if (!j.is_object() || j.size() != 1) {
        throw ConfigError(where + ": expected exactly one of \"heav\", \"product\", \"sum\"");
    }
    const auto& [kind, body] = *j.items().begin();
    if (kind == "heav") {
        check_keys(body, {"direction", "offset", "sharpness", "tag"}, where + ".heav");
        HalfPlane h;
        h.direction = point(require(body, "direction", where + ".heav"), where + ".heav.direction");
        h.offset = number(require(body, "offset", where + ".heav"), where + ".heav.offset");
        h.sharpness = number_or(body, "sharpness", sharpness, where + ".heav");
        if (body.contains("tag")) {
            if (!body.at("tag").is_string()) {
                throw ConfigError(where + ".heav.tag: expected a string");
            }
            h.tag = body.at("tag").get<std::string>();
        }
        if (!(h.sharpness > 0) || !(h.direction.norm() > 0)) {
            throw ConfigError(where + ".heav: sharpness and direction must be positive/nonzero");
        }
        return BarrierSpec::step(h);
    }
    if (kind == "product" || kind == "sum") {
        if (!body.is_array() || body.empty()) {
            throw ConfigError(where + "." + kind + ": expected a nonempty array");
        }
        std::vector<BarrierSpec> parts;
        for (std::size_t i = 0; i < body.size(); ++i) {
            parts.push_back(
                parse_barrier_node(body[i], sharpness, where + "." + kind + "[" + std::to_string(i) + "]"));
        }
        return kind == "product" ? BarrierSpec::product(std::move(parts))
                                 : BarrierSpec::sum(std::move(parts));
    }
    throw ConfigError(where + ": unknown key \"" + kind + "\"");
}

inline std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte)
{
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

inline Model parse_model(const Json& v)
{
    if (!v.is_string()) {
        throw ConfigError("model: expected a string");
    }
    const std::string m = v.get<std::string>();
    for (Model candidate : {Model::LengthFlow, Model::Model1, Model::Model2, Model::Model3}) {
        if (m == model_name(candidate)) {
            return candidate;
        }
    }
    throw ConfigError("model: unknown model \"" + m + "\"");
}

} // namespace detail

/// Checks the cross-field invariants of a config.
inline void validate_config(const ScenarioConfig& c)
{
    if (c.version != config_version) {
        throw ConfigError("version: unsupported config version " + std::to_string(c.version));
    }
    if (c.shapes.empty()) {
        throw ConfigError("shapes: at least one shape is required");
    }
    if (c.model == Model::Model3 && c.shapes.size() < 2) {
        throw ConfigError("model3 requires at least two shapes");
    }
    if ((c.model == Model::Model2 || c.model == Model::Model3) && c.alpha > 0 && !c.barrier) {
        throw ConfigError("model2/model3 with alpha > 0 require a barrier");
    }
    if (!(c.tau > 0) || !(c.epsilon > 0) || !(c.newton_tol > 0) || !(c.sharpness > 0)) {
        throw ConfigError("tau, epsilon, newton_tol and sharpness must be positive");
    }
    if (!(c.alpha >= 0) || !(c.beta >= 0)) {
        throw ConfigError("alpha and beta must be nonnegative");
    }
    if (c.newton_max_iter < 1) {
        throw ConfigError("newton_max_iter must be at least 1");
    }
    if (c.output.frame_stride < 1) {
        throw ConfigError("output.frame_stride must be at least 1");
    }
    if (c.moving) {
        if (!(c.moving->gap > 0)) {
            throw ConfigError("barrier.moving.gap must be positive");
        }
        bool tagged = false;
        c.barrier->for_each_plane([&](const HalfPlane& h) {
            tagged = tagged || h.tag == "top" || h.tag == "bottom";
        });
        if (!tagged) {
            throw ConfigError("barrier.moving needs planes tagged \"top\" or \"bottom\"");
        }
    }
    if (c.output.viewbox && !((*c.output.viewbox)[2] > 0 && (*c.output.viewbox)[3] > 0)) {
        throw ConfigError("output.viewbox width and height must be positive");
    }
}

/// Parses a JSON config text; unknown keys are rejected at every level.
inline ScenarioConfig parse_config_text(const std::string& text)
{
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        const auto [line, col] = detail::line_column(text, e.byte);
        throw ConfigError("parse error at line " + std::to_string(line) + ", column "
                          + std::to_string(col) + ": " + e.what());
    }
    using detail::number;
    const std::string root = "config";
    detail::check_keys(j,
                       {"version", "model", "shapes", "tau", "alpha", "beta", "epsilon", "max_iters",
                        "newton_tol", "newton_max_iter", "sharpness", "redistribute", "lag_tangential", "barrier", "output", "name",
                        "description"},
                       root);
    ScenarioConfig c;
    if (j.contains("version")) {
        c.version = static_cast<int>(detail::integer(j.at("version"), "version"));
    }
    c.model = detail::parse_model(detail::require(j, "model", root));
    c.tau = number(detail::require(j, "tau", root), "tau");
    c.epsilon = number(detail::require(j, "epsilon", root), "epsilon");
    c.alpha = detail::number_or(j, "alpha", c.alpha, root);
    c.beta = detail::number_or(j, "beta", c.beta, root);
    c.newton_tol = detail::number_or(j, "newton_tol", c.newton_tol, root);
    c.sharpness = detail::number_or(j, "sharpness", c.sharpness, root);
    if (j.contains("redistribute")) {
        if (!j.at("redistribute").is_boolean()) {
            throw ConfigError("redistribute: expected a boolean");
        }
        c.redistribute = j.at("redistribute").get<bool>();
    }
    if (j.contains("lag_tangential")) {
        if (!j.at("lag_tangential").is_boolean()) {
            throw ConfigError("lag_tangential: expected a boolean");
        }
        c.lag_tangential = j.at("lag_tangential").get<bool>();
    }
    if (j.contains("max_iters")) {
        const long long m = detail::integer(j.at("max_iters"), "max_iters");
        if (m < 0) {
            throw ConfigError("max_iters must be nonnegative");
        }
        c.max_iters = static_cast<std::size_t>(m);
    }
    if (j.contains("newton_max_iter")) {
        c.newton_max_iter = static_cast<int>(detail::integer(j.at("newton_max_iter"), "newton_max_iter"));
    }
    const Json& shapes = detail::require(j, "shapes", root);
    if (!shapes.is_array()) {
        throw ConfigError("shapes: expected an array");
    }
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        c.shapes.push_back(detail::parse_shape(shapes[i], "shapes[" + std::to_string(i) + "]"));
    }
    if (j.contains("barrier")) {
        const Json& b = j.at("barrier");
        detail::check_keys(b, {"tree", "moving"}, "barrier");
        c.barrier = detail::parse_barrier_node(detail::require(b, "tree", "barrier"), c.sharpness,
                                               "barrier.tree");
        if (b.contains("moving")) {
            const Json& mv = b.at("moving");
            detail::check_keys(mv, {"gap", "window", "axis"}, "barrier.moving");
            MovingBarrierRule rule;
            rule.gap = number(detail::require(mv, "gap", "barrier.moving"), "barrier.moving.gap");
            if (mv.contains("window")) {
                const Vec2 w = detail::point(mv.at("window"), "barrier.moving.window");
                if (!(w.x() < w.y())) {
                    throw ConfigError("barrier.moving.window must be increasing");
                }
                rule.window = std::array<double, 2>{w.x(), w.y()};
            }
            if (mv.contains("axis")) {
                rule.axis = detail::point(mv.at("axis"), "barrier.moving.axis");
                if (!(rule.axis.norm() > 0)) {
                    throw ConfigError("barrier.moving.axis must be nonzero");
                }
                rule.axis.normalize();
            }
            c.moving = rule;
        }
    }
    if (j.contains("output")) {
        const Json& o = j.at("output");
        detail::check_keys(o, {"frame_stride", "svg", "seed", "viewbox"}, "output");
        if (o.contains("frame_stride")) {
            const long long s = detail::integer(o.at("frame_stride"), "output.frame_stride");
            if (s < 1) {
                throw ConfigError("output.frame_stride must be at least 1");
            }
            c.output.frame_stride = static_cast<std::size_t>(s);
        }
        if (o.contains("svg")) {
            if (!o.at("svg").is_boolean()) {
                throw ConfigError("output.svg: expected a boolean");
            }
            c.output.svg = o.at("svg").get<bool>();
        }
        if (o.contains("seed")) {
            c.output.seed = static_cast<std::uint64_t>(detail::integer(o.at("seed"), "output.seed"));
        }
        if (o.contains("viewbox")) {
            const Json& v = o.at("viewbox");
            if (!v.is_array() || v.size() != 4) {
                throw ConfigError("output.viewbox: expected [xmin, ymin, width, height]");
            }
            std::array<double, 4> vb{};
            for (std::size_t i = 0; i < 4; ++i) {
                vb[i] = number(v[i], "output.viewbox");
            }
            c.output.viewbox = vb;
        }
    }
    validate_config(c);
    return c;
}

inline std::string read_text_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline ScenarioConfig parse_config(const std::string& path)
{
    try {
        return parse_config_text(read_text_file(path));
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

/// Meshes the shapes and builds the initial scenario state.
inline ScenarioState to_scenario(const ScenarioConfig& c)
{
    std::vector<CurveMesh> meshes;
    for (const ShapeSpec& s : c.shapes) {
        meshes.push_back(build_shape(s));
    }
    return make_scenario(std::move(meshes), c.flow(), c.barrier.value_or(BarrierSpec{}), c.moving,
                         c.epsilon, c.max_iters);
}

// ---- metrics -------------------------------------------------------------

inline const char* metrics_header = "step,t,vesicle,length,W,H_B,D,J,lambda,newton_iters";

inline std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string metrics_line(const MetricsRow& r)
{
    std::string s = std::to_string(r.step) + "," + format_double(r.t) + "," + std::to_string(r.vesicle);
    for (double v : {r.length, r.W, r.H_B, r.D, r.J, r.lambda}) {
        s += "," + format_double(v);
    }
    s += "," + std::to_string(r.newton_iters);
    return s;
}

inline void write_metrics(const std::vector<MetricsRow>& rows, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path);
    }
    out << metrics_header << '\n';
    for (const MetricsRow& r : rows) {
        out << metrics_line(r) << '\n';
    }
    if (!out) {
        throw Error("write failed: " + path);
    }
}

// ---- frames --------------------------------------------------------------

struct Frame {
    std::size_t step = 0;
    double t = 0.0;
    std::vector<CurveMesh> meshes;
    std::vector<HalfPlane> planes; // barrier primitives in tree order
};

inline Frame make_frame(const ScenarioState& s)
{
    Frame f;
    f.step = s.iteration;
    f.t = s.t;
    f.meshes = s.meshes();
    s.barrier.for_each_plane([&](const HalfPlane& h) { f.planes.push_back(h); });
    return f;
}

inline std::string sidecar_path(const std::string& csv_path)
{
    const std::string ext = ".csv";
    if (csv_path.size() > ext.size() && csv_path.ends_with(ext)) {
        return csv_path.substr(0, csv_path.size() - ext.size()) + ".barrier.json";
    }
    return csv_path + ".barrier.json";
}

/// Frame CSV `vesicle,node,x,y,is_midpoint` and a JSON sidecar with the
/// barrier half-planes of that frame.
inline void write_frame(const Frame& f, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path);
    }
    out << "vesicle,node,x,y,is_midpoint\n";
    for (std::size_t v = 0; v < f.meshes.size(); ++v) {
        const CurveMesh& m = f.meshes[v];
        for (std::size_t i = 0; i < m.node_count(); ++i) {
            out << v << ',' << i << ',' << format_double(m.node(i).x()) << ','
                << format_double(m.node(i).y()) << ',' << (m.is_midpoint(i) ? 1 : 0) << '\n';
        }
    }
    Json side;
    side["step"] = f.step;
    side["t"] = f.t;
    side["planes"] = Json::array();
    for (const HalfPlane& h : f.planes) {
        side["planes"].push_back({{"direction", {h.direction.x(), h.direction.y()}},
                                  {"offset", h.offset},
                                  {"sharpness", h.sharpness},
                                  {"tag", h.tag}});
    }
    std::ofstream sc(sidecar_path(path), std::ios::binary);
    sc << side.dump(2) << '\n';
    if (!out || !sc) {
        throw Error("write failed: " + path);
    }
}

inline void write_frame(const ScenarioState& s, const std::string& path)
{
    write_frame(make_frame(s), path);
}

inline Frame read_frame(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open " + path);
    }
    std::string line;
    std::getline(in, line);
    if (line != "vesicle,node,x,y,is_midpoint") {
        throw Error(path + ": unexpected frame header");
    }
    std::vector<std::vector<Vec2>> nodes;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::array<std::string, 5> cols;
        std::stringstream ss(line);
        for (std::string& c : cols) {
            if (!std::getline(ss, c, ',')) {
                throw Error(path + ": malformed row \"" + line + "\"");
            }
        }
        const std::size_t v = std::stoul(cols[0]);
        const std::size_t i = std::stoul(cols[1]);
        if (v >= nodes.size()) {
            nodes.resize(v + 1);
        }
        if (i != nodes[v].size()) {
            throw Error(path + ": nodes out of order");
        }
        nodes[v].emplace_back(std::strtod(cols[2].c_str(), nullptr), std::strtod(cols[3].c_str(), nullptr));
    }
    Frame f;
    for (std::vector<Vec2>& n : nodes) {
        f.meshes.push_back(CurveMesh::closed_loop(std::move(n)));
    }
    std::ifstream sc(sidecar_path(path), std::ios::binary);
    if (sc) {
        const Json side = Json::parse(sc);
        f.step = side.at("step").get<std::size_t>();
        f.t = side.at("t").get<double>();
        for (const Json& p : side.at("planes")) {
            HalfPlane h;
            h.direction = {p.at("direction")[0].get<double>(), p.at("direction")[1].get<double>()};
            h.offset = p.at("offset").get<double>();
            h.sharpness = p.at("sharpness").get<double>();
            h.tag = p.at("tag").get<std::string>();
            f.planes.push_back(h);
        }
    }
    return f;
}

// ---- svg -----------------------------------------------------------------

using Viewbox = std::array<double, 4>; // xmin, ymin, width, height (y up)

/// Bounding box of the meshes padded by `margin` times the larger extent.
inline Viewbox default_viewbox(const std::vector<CurveMesh>& meshes, double margin = 0.2)
{
    double x0 = std::numeric_limits<double>::infinity();
    double y0 = x0;
    double x1 = -x0;
    double y1 = -x0;
    for (const CurveMesh& m : meshes) {
        const BoundingBox b = bounding_box(m);
        x0 = std::min(x0, b.lo.x());
        y0 = std::min(y0, b.lo.y());
        x1 = std::max(x1, b.hi.x());
        y1 = std::max(y1, b.hi.y());
    }
    const double pad = margin * std::max(x1 - x0, y1 - y0);
    return {x0 - pad, y0 - pad, x1 - x0 + 2 * pad, y1 - y0 + 2 * pad};
}

namespace detail {

/// Clips the segment a-b to the half-planes d.p >= offset.
inline bool clip_segment(Vec2& a, Vec2& b, const std::vector<HalfPlane>& keep)
{
    double t0 = 0.0;
    double t1 = 1.0;
    for (const HalfPlane& h : keep) {
        const double fa = h.direction.dot(a) - h.offset;
        const double fb = h.direction.dot(b) - h.offset;
        if (fa < 0 && fb < 0) {
            return false;
        }
        if (fa < 0) {
            t0 = std::max(t0, fa / (fa - fb));
        } else if (fb < 0) {
            t1 = std::min(t1, fa / (fa - fb));
        }
    }
    if (t0 >= t1) {
        return false;
    }
    const Vec2 d = b - a;
    b = a + t1 * d;
    a = a + t0 * d;
    return true;
}

/// Boundary line of a half-plane across the viewbox, if it crosses it.
inline bool boundary_in_box(const HalfPlane& h, const Viewbox& vb, Vec2& a, Vec2& b)
{
    const Vec2 n = h.direction.normalized();
    const Vec2 along(-n.y(), n.x());
    const Vec2 base = h.offset / h.direction.norm() * n;
    const double big = 4.0 * (vb[2] + vb[3]) + base.norm() + std::abs(vb[0]) + std::abs(vb[1]);
    a = base - big * along;
    b = base + big * along;
    const std::vector<HalfPlane> box{{{1, 0}, vb[0], 1, ""},
                                     {{-1, 0}, -(vb[0] + vb[2]), 1, ""},
                                     {{0, 1}, vb[1], 1, ""},
                                     {{0, -1}, -(vb[1] + vb[3]), 1, ""}};
    return clip_segment(a, b, box);
}

struct BarrierBoundary {
    HalfPlane plane;
    std::vector<HalfPlane> siblings; // step factors of the enclosing product
};

inline void collect_boundaries(const BarrierSpec& b, std::vector<BarrierBoundary>& out)
{
    if (b.kind() == BarrierSpec::Kind::Step) {
        out.push_back({b.plane(), {}});
        return;
    }
    if (b.kind() == BarrierSpec::Kind::Product) {
        for (std::size_t i = 0; i < b.children().size(); ++i) {
            const BarrierSpec& c = b.children()[i];
            if (c.kind() != BarrierSpec::Kind::Step) {
                collect_boundaries(c, out);
                continue;
            }
            BarrierBoundary bb{c.plane(), {}};
            for (std::size_t k = 0; k < b.children().size(); ++k) {
                if (k != i && b.children()[k].kind() == BarrierSpec::Kind::Step) {
                    bb.siblings.push_back(b.children()[k].plane());
                }
            }
            out.push_back(bb);
        }
        return;
    }
    for (const BarrierSpec& c : b.children()) {
        collect_boundaries(c, out);
    }
}

} // namespace detail

inline std::string svg_point(const Vec2& p)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f,%.6f", p.x(), -p.y());
    return buf;
}

/// Curves as closed piecewise-quadratic paths (one per vesicle) and each
/// barrier boundary as a dashed group, drawn where the other factors of its
/// product are on.
inline std::string render_svg(const std::vector<CurveMesh>& meshes, const BarrierSpec& barrier,
                              const Viewbox& vb)
{
    std::ostringstream s;
    char head[256];
    const double stroke = 0.004 * std::max(vb[2], vb[3]);
    std::snprintf(head, sizeof head,
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"%.6f %.6f %.6f %.6f\">\n",
                  vb[0], -(vb[1] + vb[3]), vb[2], vb[3]);
    s << head;
    std::vector<detail::BarrierBoundary> bounds;
    detail::collect_boundaries(barrier, bounds);
    for (const detail::BarrierBoundary& bb : bounds) {
        s << "<g class=\"barrier\" stroke=\"#555\" stroke-width=\"" << stroke
          << "\" stroke-dasharray=\"" << 4 * stroke << ',' << 3 * stroke << "\" fill=\"none\">";
        Vec2 a;
        Vec2 b;
        if (detail::boundary_in_box(bb.plane, vb, a, b) && detail::clip_segment(a, b, bb.siblings)) {
            const std::string pa = svg_point(a);
            const std::string pb = svg_point(b);
            s << "<path d=\"M " << pa << " L " << pb << "\"/>";
        }
        s << "</g>\n";
    }
    for (const CurveMesh& m : meshes) {
        s << "<path class=\"vesicle\" fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"" << stroke
          << "\" d=\"M " << svg_point(m.node(0));
        for (std::size_t e = 0; e < m.element_count(); ++e) {
            const auto x = m.element_nodes(e);
            // Bezier control point of the quadratic through x0, x1 (at s = 1/2), x2.
            const Vec2 c = 2.0 * x[1] - 0.5 * (x[0] + x[2]);
            s << " Q " << svg_point(c) << ' ' << svg_point(x[2]);
        }
        s << " Z\"/>\n";
    }
    s << "</svg>\n";
    return s.str();
}

inline void render_svg(const Frame& f, const BarrierSpec& barrier, const Viewbox& vb,
                       const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    out << render_svg(f.meshes, barrier, vb);
    if (!out) {
        throw Error("write failed: " + path);
    }
}

} // namespace vesicle

#endif
