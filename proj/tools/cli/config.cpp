#include "config.hpp"

#include "parstab/report.hpp"

#include <algorithm>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace parstab::cli {

using nlohmann::json;
using Pointer = json::json_pointer;

namespace {

// Walks one JSON object; every key read is marked, the rest are rejected by finish().
class ObjectReader {
public:
    ObjectReader(const json& j, Pointer at) : j_(j), at_(std::move(at)) {
        if (!j_.is_object()) throw ConfigError(where(), "expected an object");
    }

    const json* get(const std::string& key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }
    const json& require(const std::string& key) {
        const json* v = get(key);
        if (!v) throw ConfigError((at_ / key).to_string(), "required key missing");
        return *v;
    }
    Pointer at(const std::string& key) const { return at_ / key; }
    std::string where() const { return at_.empty() ? "/" : at_.to_string(); }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError((at_ / it.key()).to_string(), "unknown key");
    }

private:
    const json& j_;
    Pointer at_;
    std::set<std::string> seen_;
};

double as_number(const json& v, const Pointer& at) {
    if (!v.is_number()) throw ConfigError(at.to_string(), "expected a number");
    return v.get<double>();
}

int as_int(const json& v, const Pointer& at) {
    if (!v.is_number_integer()) throw ConfigError(at.to_string(), "expected an integer");
    return v.get<int>();
}

bool as_bool(const json& v, const Pointer& at) {
    if (!v.is_boolean()) throw ConfigError(at.to_string(), "expected true or false");
    return v.get<bool>();
}

std::string as_string(const json& v, const Pointer& at) {
    if (!v.is_string()) throw ConfigError(at.to_string(), "expected a string");
    return v.get<std::string>();
}

std::vector<double> as_numbers(const json& v, const Pointer& at, std::optional<int> size = {}) {
    if (!v.is_array()) throw ConfigError(at.to_string(), "expected an array of numbers");
    if (size && static_cast<int>(v.size()) != *size)
        throw ConfigError(at.to_string(), "expected " + std::to_string(*size) + " entries");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], at / i));
    return out;
}

Point as_point(const json& v, const Pointer& at, int d) {
    const auto xs = as_numbers(v, at, d);
    Point p{};
    for (int i = 0; i < d; ++i) p[i] = xs[i];
    return p;
}

template <class T, class F>
void read_opt(ObjectReader& r, const std::string& key, T& field, F conv) {
    if (const json* v = r.get(key)) field = conv(*v, r.at(key));
}

void require_positive(double v, const Pointer& at) {
    if (!(v > 0.0)) throw ConfigError(at.to_string(), "must be positive");
}

PlantConfig read_plant(const json& j, const Pointer& at) {
    ObjectReader r(j, at);
    PlantConfig p;
    bool preset = false;
    if (const json* v = r.get("preset")) {
        if (as_string(*v, r.at("preset")) != "example") throw ConfigError(r.at("preset").to_string(), "unknown preset");
        p = PlantConfig::example();
        preset = true;
    }
    if (const json* v = r.get("d")) {
        p.d = as_int(*v, r.at("d"));
        if (p.d < 1 || p.d > 3) throw ConfigError(r.at("d").to_string(), "d must be 1, 2 or 3");
    } else if (!preset) {
        throw ConfigError(r.at("d").to_string(), "required key missing");
    }
    if (const json* v = r.get("lengths"))
        p.lengths = as_numbers(*v, r.at("lengths"), p.d);
    else if (static_cast<int>(p.lengths.size()) != p.d)
        p.lengths.assign(p.d, std::numbers::pi);
    if (const json* v = r.get("b"))
        p.b = as_numbers(*v, r.at("b"), p.d);
    else if (!preset)
        throw ConfigError(r.at("b").to_string(), "required key missing");
    if (const json* v = r.get("c"))
        p.c = as_number(*v, r.at("c"));
    else if (!preset)
        throw ConfigError(r.at("c").to_string(), "required key missing");
    if (const json* v = r.get("control_face")) {
        try {
            p.control_face = Face::parse(as_string(*v, r.at("control_face")), p.d);
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            throw ConfigError(r.at("control_face").to_string(), e.what());
        }
    } else if (!preset) {
        throw ConfigError(r.at("control_face").to_string(), "required key missing");
    }
    if (const json* v = r.get("nu")) p.nu = as_number(*v, r.at("nu"));
    read_opt(r, "delta", p.delta, as_number);
    read_opt(r, "allow_general_pattern", p.allow_general_pattern, as_bool);
    r.finish();
    try {
        p.validate();
    } catch (const Error& e) {
        throw ConfigError(at.to_string(), e.what());
    }
    return p;
}

void read_synthesis(const json& j, const Pointer& at, RunConfig& cfg) {
    ObjectReader r(j, at);
    SynthesisOptions& o = cfg.synthesis;
    if (const json* v = r.get("N")) {
        cfg.n = as_int(*v, r.at("N"));
        if (cfg.n < 1) throw ConfigError(r.at("N").to_string(), "must be at least 1");
    }
    read_opt(r, "c_ratio", o.c_ratio, as_number);
    if (!(o.c_ratio > 1.0)) throw ConfigError(r.at("c_ratio").to_string(), "must exceed 1");
    read_opt(r, "gamma_base", o.gamma_base, as_number);
    require_positive(o.gamma_base, r.at("gamma_base"));
    if (const json* v = r.get("spread")) {
        o.spread = as_number(*v, r.at("spread"));
        require_positive(*o.spread, r.at("spread"));
    }
    read_opt(r, "cond_limit", o.cond_limit, as_number);
    require_positive(o.cond_limit, r.at("cond_limit"));
    read_opt(r, "max_doublings", o.max_doublings, as_int);
    if (o.max_doublings < 0) throw ConfigError(r.at("max_doublings").to_string(), "must be non-negative");
    if (const json* v = r.get("placement")) {
        const std::string m = as_string(*v, r.at("placement"));
        if (m == "robust")
            o.placement = PlacementMethod::robust;
        else if (m == "two_stage")
            o.placement = PlacementMethod::two_stage;
        else
            throw ConfigError(r.at("placement").to_string(), "expected \"robust\" or \"two_stage\"");
    }
    r.finish();
}

void read_certification(const json& j, const Pointer& at, CertificationConfig& c) {
    ObjectReader r(j, at);
    read_opt(r, "enabled", c.enabled, as_bool);
    read_opt(r, "N_start", c.n_start, as_int);
    read_opt(r, "N_max", c.n_max, as_int);
    if (c.n_start < 1) throw ConfigError(r.at("N_start").to_string(), "must be at least 1");
    if (c.n_max < c.n_start) throw ConfigError(r.at("N_max").to_string(), "must be at least N_start");
    if (const json* v = r.get("tail")) {
        ObjectReader t(*v, r.at("tail"));
        read_opt(t, "factor", c.tail.factor, as_int);
        read_opt(t, "min_tail", c.tail.min_tail, as_int);
        read_opt(t, "cap_factor", c.tail.cap_factor, as_int);
        read_opt(t, "block_tol", c.tail.block_tol, as_number);
        if (c.tail.factor < 1) throw ConfigError(t.at("factor").to_string(), "must be at least 1");
        if (c.tail.min_tail < 1) throw ConfigError(t.at("min_tail").to_string(), "must be at least 1");
        if (c.tail.cap_factor < c.tail.factor)
            throw ConfigError(t.at("cap_factor").to_string(), "must be at least factor");
        require_positive(c.tail.block_tol, t.at("block_tol"));
        t.finish();
    }
    r.finish();
}

InitialCondition read_z0(const json& j, const Pointer& at, const PlantConfig& plant) {
    ObjectReader r(j, at);
    InitialCondition z;
    const json* modes = r.get("modes");
    const json* coeffs = r.get("coefficients");
    const json* bump = r.get("bump");
    r.finish();
    if (bump && (modes || coeffs)) throw ConfigError(at.to_string(), "bump excludes modes and coefficients");
    if (bump) {
        ObjectReader b(*bump, at / "bump");
        BumpSpec s;
        s.center = as_point(b.require("center"), b.at("center"), plant.d);
        if (!plant.interior(s.center)) throw ConfigError(b.at("center").to_string(), "must be an interior point");
        s.radius = as_number(b.require("radius"), b.at("radius"));
        require_positive(s.radius, b.at("radius"));
        read_opt(b, "amplitude", s.amplitude, as_number);
        b.finish();
        z.bump = s;
        return z;
    }
    if (!coeffs) throw ConfigError(at.to_string(), "expected coefficients (with optional modes) or bump");
    z.coefficients = as_numbers(*coeffs, at / "coefficients");
    if (z.coefficients.empty()) throw ConfigError((at / "coefficients").to_string(), "must not be empty");
    if (modes) {
        const Pointer mp = at / "modes";
        if (!modes->is_array()) throw ConfigError(mp.to_string(), "expected an array of multi-indices");
        if (modes->size() != z.coefficients.size())
            throw ConfigError(mp.to_string(), "must match coefficients in length");
        for (std::size_t m = 0; m < modes->size(); ++m) {
            const json& mi = (*modes)[m];
            if (!mi.is_array() || static_cast<int>(mi.size()) != plant.d)
                throw ConfigError((mp / m).to_string(), "expected " + std::to_string(plant.d) + " indices");
            std::array<int, 3> idx{0, 0, 0};
            for (int i = 0; i < plant.d; ++i) {
                idx[i] = as_int(mi[i], mp / m / i);
                if (idx[i] < 1) throw ConfigError((mp / m / i).to_string(), "indices start at 1");
            }
            z.modes.push_back(idx);
        }
    }
    return z;
}

void read_simulation(const json& j, const Pointer& at, RunConfig& cfg) {
    ObjectReader r(j, at);
    SimulationConfig& s = cfg.simulation;
    read_opt(r, "T", s.t_end, as_number);
    require_positive(s.t_end, r.at("T"));
    if (const json* v = r.get("h")) {
        s.h = as_number(*v, r.at("h"));
        require_positive(*s.h, r.at("h"));
    }
    if (const json* v = r.get("N_sim")) s.n_sim = as_int(*v, r.at("N_sim"));
    read_opt(r, "t_skip", s.t_skip, as_number);
    if (!(s.t_skip >= 0.0 && s.t_skip < s.t_end)) throw ConfigError(r.at("t_skip").to_string(), "must lie in [0, T)");
    read_opt(r, "projection_check_every", s.projection_check_every, as_int);
    if (s.projection_check_every < 0) throw ConfigError(r.at("projection_check_every").to_string(), "must be non-negative");
    s.z0 = read_z0(r.require("z0"), r.at("z0"), cfg.plant);
    r.finish();
}

void read_output(const json& j, const Pointer& at, OutputConfig& o) {
    ObjectReader r(j, at);
    for (auto [key, field] : {std::pair{"synthesis", &o.synthesis}, std::pair{"certificate", &o.certificate},
                              std::pair{"simulation", &o.simulation}, std::pair{"summary", &o.summary}}) {
        read_opt(r, key, *field, as_string);
        if (field->empty()) throw ConfigError(r.at(key).to_string(), "must not be empty");
    }
    r.finish();
}

}  // namespace

json parse_strict(const std::string& text) {
    // One frame per open container: the keys seen so far and the path token.
    struct Frame {
        bool object = false;
        std::set<std::string> keys;
        std::string token;
        long index = -1;
    };
    std::vector<Frame> stack;
    auto path = [&]() {
        Pointer p;
        for (const auto& f : stack) {
            if (f.object && !f.token.empty()) p /= f.token;
            if (!f.object && f.index >= 0) p /= static_cast<std::size_t>(f.index);
        }
        return p;
    };
    auto enter_value = [&]() {
        if (!stack.empty() && !stack.back().object) ++stack.back().index;
    };
    json::parser_callback_t cb = [&](int, json::parse_event_t event, json& parsed) {
        switch (event) {
        case json::parse_event_t::object_start:
        case json::parse_event_t::array_start:
            enter_value();
            stack.push_back(Frame{event == json::parse_event_t::object_start, {}, {}, -1});
            break;
        case json::parse_event_t::object_end:
        case json::parse_event_t::array_end:
            stack.pop_back();
            break;
        case json::parse_event_t::key: {
            Frame& f = stack.back();
            const std::string key = parsed.get<std::string>();
            f.token.clear();
            if (!f.keys.insert(key).second) throw ConfigError((path() / key).to_string(), "duplicate key");
            f.token = key;
            break;
        }
        case json::parse_event_t::value:
            enter_value();
            break;
        }
        return true;
    };
    try {
        return json::parse(text, cb);
    } catch (const json::parse_error& e) {
        throw ConfigError("/", std::string("invalid JSON: ") + e.what());
    }
}

RunConfig config_from_json(const json& doc) {
    ObjectReader r(doc, Pointer{});
    RunConfig cfg;
    if (const json* v = r.get("schema_version"))
        if (as_int(*v, r.at("schema_version")) != kSchemaVersion)
            throw ConfigError(r.at("schema_version").to_string(), "unsupported schema version");
    cfg.plant = read_plant(r.require("plant"), r.at("plant"));

    const json& sensors = r.require("sensors");
    const Pointer sp = r.at("sensors");
    if (!sensors.is_array() || sensors.size() != 2) throw ConfigError(sp.to_string(), "expected two sensor points");
    cfg.xi1 = as_point(sensors[0], sp / 0, cfg.plant.d);
    cfg.xi2 = as_point(sensors[1], sp / 1, cfg.plant.d);
    if (!cfg.plant.interior(cfg.xi1)) throw ConfigError((sp / 0).to_string(), "sensor must be an interior point");
    if (!cfg.plant.interior(cfg.xi2)) throw ConfigError((sp / 1).to_string(), "sensor must be an interior point");

    if (const json* v = r.get("synthesis")) read_synthesis(*v, r.at("synthesis"), cfg);
    if (const json* v = r.get("certification")) read_certification(*v, r.at("certification"), cfg.certification);
    read_simulation(r.require("simulation"), r.at("simulation"), cfg);
    if (cfg.simulation.n_sim && *cfg.simulation.n_sim < cfg.n)
        throw ConfigError("/simulation/N_sim", "must be at least synthesis N");
    // Multi-indices are matched against the basis at run time.
    const InitialCondition& z0 = cfg.simulation.z0;
    if (z0.modes.empty() && !z0.bump &&
        static_cast<int>(z0.coefficients.size()) > cfg.simulation.n_sim.value_or(std::max(4 * cfg.n, 200)))
        throw ConfigError("/simulation/z0/coefficients", "more coefficients than simulated modes");
    if (const json* v = r.get("output")) read_output(*v, r.at("output"), cfg.output);

    if (const json* v = r.get("sweep")) {
        if (!v->is_array()) throw ConfigError(r.at("sweep").to_string(), "expected an array of objects");
        for (std::size_t i = 0; i < v->size(); ++i) {
            const json& patch = (*v)[i];
            if (!patch.is_object()) throw ConfigError((r.at("sweep") / i).to_string(), "expected an object");
            if (patch.contains("sweep")) throw ConfigError((r.at("sweep") / i / "sweep").to_string(), "nested sweep");
            cfg.sweep.push_back(patch);
        }
    }
    r.finish();
    cfg.source = doc;
    cfg.source.erase("sweep");
    return cfg;
}

RunConfig parse_config_text(const std::string& text) { return config_from_json(parse_strict(text)); }

RunConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("/", "cannot read config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::vector<RunConfig> expand_sweep(const RunConfig& base) {
    std::vector<RunConfig> out;
    for (std::size_t i = 0; i < base.sweep.size(); ++i) {
        json doc = base.source;
        doc.merge_patch(base.sweep[i]);
        try {
            out.push_back(config_from_json(doc));
        } catch (const ConfigError& e) {
            throw ConfigError("/sweep/" + std::to_string(i) + e.pointer(), e.message());
        }
    }
    return out;
}

}  // namespace parstab::cli
