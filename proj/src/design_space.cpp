#include "nndse/design_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "nndse/errors.hpp"

namespace nndse {

namespace {

std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b) {
    if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a)
        return std::numeric_limits<std::uint64_t>::max();
    return a * b;
}

std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) {
    if (b > std::numeric_limits<std::uint64_t>::max() - a)
        return std::numeric_limits<std::uint64_t>::max();
    return a + b;
}

std::uint64_t sat_pow(std::uint64_t base, int exp) {
    std::uint64_t r = 1;
    for (int i = 0; i < exp; ++i) r = sat_mul(r, base);
    return r;
}

int clamp_index(long v, int steps) {
    if (v < 0) return 0;
    if (v >= steps) return steps - 1;
    return static_cast<int>(v);
}

} // namespace

void ParamSpec::validate() const {
    if (name.empty()) throw ValidationError("param has empty name");
    if (kind == ParamKind::numeric) {
        if (steps < 1) throw ValidationError("param '" + name + "': steps must be >= 1");
        if (min > max) throw ValidationError("param '" + name + "': min > max");
        if (scale == Scale::log && min <= 0.0)
            throw ValidationError("param '" + name + "': log scale requires min > 0");
    } else {
        if (options.empty()) throw ValidationError("param '" + name + "': no options");
        std::set<std::string> seen(options.begin(), options.end());
        if (seen.size() != options.size())
            throw ValidationError("param '" + name + "': duplicate option labels");
    }
}

double grid_value(const ParamSpec& spec, int index) {
    if (spec.kind != ParamKind::numeric)
        throw ValidationError("grid_value: param '" + spec.name + "' is categorical");
    if (index < 0 || index >= spec.steps)
        throw BoundsError("grid_value: index " + std::to_string(index) + " out of range for '" +
                          spec.name + "' (steps=" + std::to_string(spec.steps) + ")");
    if (spec.steps == 1 || index == 0) return spec.min;
    if (index == spec.steps - 1) return spec.max;
    double t = static_cast<double>(index) / static_cast<double>(spec.steps - 1);
    if (spec.scale == Scale::linear) return spec.min + t * (spec.max - spec.min);
    return std::exp(std::log(spec.min) + t * (std::log(spec.max) - std::log(spec.min)));
}

const ParamSpec* DesignSpace::find_param(std::string_view name) const {
    for (const auto& p : params)
        if (p.name == name) return &p;
    return nullptr;
}

bool DesignSpace::is_gate(std::string_view name) const {
    return std::any_of(groups.begin(), groups.end(),
                       [&](const LayerGroup& g) { return g.gate == name; });
}

void DesignSpace::validate() const {
    std::set<std::string> names;
    for (const auto& p : params) {
        p.validate();
        if (!names.insert(p.name).second)
            throw ValidationError("duplicate param name '" + p.name + "'");
    }
    for (const auto& g : groups) {
        const ParamSpec* gate = find_param(g.gate);
        if (!gate) throw ValidationError("layer group gate '" + g.gate + "' not found");
        if (gate->kind != ParamKind::numeric)
            throw ValidationError("layer group gate '" + g.gate + "' must be numeric");
        if (g.params.empty()) throw ValidationError("layer group with empty params");
        for (const auto& p : g.params) p.validate();
        for (int i = 0; i < gate->steps; ++i) {
            if (std::lround(grid_value(*gate, i)) < 0)
                throw ValidationError("gate '" + g.gate + "' yields negative depth");
        }
    }
}

SpaceLayout::SpaceLayout(DesignSpace space) : space_(std::move(space)) {
    space_.validate();

    group_max_depth_.resize(space_.groups.size(), 0);
    for (std::size_t g = 0; g < space_.groups.size(); ++g) {
        const ParamSpec& gate = *space_.find_param(space_.groups[g].gate);
        int md = 0;
        for (int i = 0; i < gate.steps; ++i)
            md = std::max(md, static_cast<int>(std::lround(grid_value(gate, i))));
        group_max_depth_[g] = md;
    }

    // Layer-group slots first, then globals.
    for (std::size_t g = 0; g < space_.groups.size(); ++g) {
        for (int layer = 1; layer <= group_max_depth_[g]; ++layer) {
            for (const auto& p : space_.groups[g].params) {
                SlotInfo s;
                s.name = p.name + "_" + std::to_string(layer);
                s.spec = &p;
                s.group = static_cast<int>(g);
                s.layer = layer;
                slots_.push_back(std::move(s));
            }
        }
    }
    for (const auto& p : space_.params) {
        SlotInfo s;
        s.name = p.name;
        s.spec = &p;
        s.is_gate = space_.is_gate(p.name);
        slots_.push_back(std::move(s));
    }

    std::set<std::string> names;
    for (const auto& s : slots_)
        if (!names.insert(s.name).second)
            throw ValidationError("materialized slot name collision: '" + s.name + "'");

    // Resolve gate slots now that globals are placed.
    for (auto& s : slots_) {
        if (s.group < 0) continue;
        const std::string& gate = space_.groups[s.group].gate;
        for (std::size_t i = 0; i < slots_.size(); ++i) {
            if (slots_[i].group < 0 && slots_[i].name == gate) {
                s.gate_slot = static_cast<int>(i);
                break;
            }
        }
    }

    std::size_t off = 0;
    for (auto& s : slots_) {
        if (s.is_gate) continue;
        s.encode_offset = static_cast<int>(off);
        off += s.spec->kind == ParamKind::numeric ? 1 : s.spec->options.size();
    }
    encoded_length_ = off;
}

int SpaceLayout::active_depth(const CandidateConfig& config, int group) const {
    const std::string& gate_name = space_.groups[group].gate;
    for (std::size_t i = 0; i < slots_.size(); ++i) {
        const SlotInfo& s = slots_[i];
        if (s.group < 0 && s.name == gate_name)
            return static_cast<int>(std::lround(grid_value(*s.spec, config.idx[i])));
    }
    throw ValidationError("gate '" + gate_name + "' has no slot");
}

bool SpaceLayout::valid(const CandidateConfig& config) const {
    if (config.idx.size() != slots_.size()) return false;
    for (std::size_t i = 0; i < slots_.size(); ++i) {
        const SlotInfo& s = slots_[i];
        int v = config.idx[i];
        if (s.group < 0) {
            if (v < 0 || v >= s.spec->cardinality()) return false;
        } else {
            int depth = active_depth(config, s.group);
            if (s.layer <= depth) {
                if (v < 0 || v >= s.spec->cardinality()) return false;
            } else if (v != CandidateConfig::kAbsent) {
                return false;
            }
        }
    }
    return true;
}

void SpaceLayout::require_valid(const CandidateConfig& config) const {
    if (!valid(config)) throw ValidationError("config does not match design space");
}

std::uint64_t SpaceLayout::size() const {
    std::uint64_t global_product = 1;
    std::vector<std::size_t> gate_slots;
    for (std::size_t i = 0; i < slots_.size(); ++i) {
        const SlotInfo& s = slots_[i];
        if (s.group >= 0) continue;
        if (s.is_gate)
            gate_slots.push_back(i);
        else
            global_product = sat_mul(global_product, s.spec->cardinality());
    }

    std::vector<std::uint64_t> per_layer(space_.groups.size(), 1);
    for (std::size_t g = 0; g < space_.groups.size(); ++g)
        for (const auto& p : space_.groups[g].params)
            per_layer[g] = sat_mul(per_layer[g], p.cardinality());

    // Sum group contributions over all gate index combinations.
    std::uint64_t total = 0;
    std::vector<int> combo(gate_slots.size(), 0);
    while (true) {
        std::uint64_t term = 1;
        for (std::size_t g = 0; g < space_.groups.size(); ++g) {
            const std::string& gate_name = space_.groups[g].gate;
            for (std::size_t k = 0; k < gate_slots.size(); ++k) {
                if (slots_[gate_slots[k]].name == gate_name) {
                    int depth = static_cast<int>(
                        std::lround(grid_value(*slots_[gate_slots[k]].spec, combo[k])));
                    term = sat_mul(term, sat_pow(per_layer[g], depth));
                    break;
                }
            }
        }
        total = sat_add(total, term);
        std::size_t pos = 0;
        for (; pos < combo.size(); ++pos) {
            if (++combo[pos] < slots_[gate_slots[pos]].spec->steps) break;
            combo[pos] = 0;
        }
        if (pos == combo.size()) break;
    }
    return sat_mul(global_product, total);
}

void SpaceLayout::encode_into(const CandidateConfig& config, std::span<double> out) const {
    if (out.size() != encoded_length_) throw ValidationError("encode: bad output length");
    for (std::size_t i = 0; i < slots_.size(); ++i) {
        const SlotInfo& s = slots_[i];
        if (s.is_gate) continue;
        double* dst = out.data() + s.encode_offset;
        int v = config.idx[i];
        if (s.spec->kind == ParamKind::numeric) {
            *dst = (v == CandidateConfig::kAbsent) ? 0.0 : grid_value(*s.spec, v) / s.spec->max;
        } else {
            std::size_t k = s.spec->options.size();
            for (std::size_t j = 0; j < k; ++j)
                dst[j] = (v >= 0 && j == static_cast<std::size_t>(v)) ? 1.0 : -1.0;
        }
    }
}

std::vector<double> SpaceLayout::encode(const CandidateConfig& config) const {
    require_valid(config);
    std::vector<double> out(encoded_length_);
    encode_into(config, out);
    return out;
}

CandidateConfig SpaceLayout::sample_uniform(Rng& rng) const {
    CandidateConfig c;
    c.idx.assign(slots_.size(), CandidateConfig::kAbsent);
    // Globals first so group depths are known.
    for (std::size_t i = 0; i < slots_.size(); ++i)
        if (slots_[i].group < 0)
            c.idx[i] = static_cast<int>(rng.uniform_index(slots_[i].spec->cardinality()));
    for (std::size_t i = 0; i < slots_.size(); ++i) {
        const SlotInfo& s = slots_[i];
        if (s.group < 0) continue;
        if (s.layer <= active_depth(c, s.group))
            c.idx[i] = static_cast<int>(rng.uniform_index(s.spec->cardinality()));
    }
    return c;
}

CandidateConfig SpaceLayout::propose(const CandidateConfig& current, double sigma, double p_cat,
                                     Rng& rng) const {
    require_valid(current);
    if (sigma <= 0.0) throw ValidationError("propose: sigma must be > 0");

    auto perturb_numeric = [&](const ParamSpec& spec, int idx) {
        if (spec.steps == 1) return 0;
        double step = rng.normal() * sigma * static_cast<double>(spec.steps - 1);
        return clamp_index(std::lround(static_cast<double>(idx) + step), spec.steps);
    };
    auto perturb_categorical = [&](const ParamSpec& spec, int idx) {
        if (rng.bernoulli(p_cat))
            return static_cast<int>(rng.uniform_index(spec.options.size()));
        return idx;
    };

    CandidateConfig next;
    next.idx.assign(slots_.size(), CandidateConfig::kAbsent);
    for (std::size_t i = 0; i < slots_.size(); ++i) {
        const SlotInfo& s = slots_[i];
        if (s.group >= 0) continue;
        next.idx[i] = s.spec->kind == ParamKind::numeric
                          ? perturb_numeric(*s.spec, current.idx[i])
                          : perturb_categorical(*s.spec, current.idx[i]);
    }
    for (std::size_t i = 0; i < slots_.size(); ++i) {
        const SlotInfo& s = slots_[i];
        if (s.group < 0) continue;
        int old_depth = active_depth(current, s.group);
        int new_depth = active_depth(next, s.group);
        if (s.layer > new_depth) continue;
        if (s.layer <= old_depth) {
            next.idx[i] = s.spec->kind == ParamKind::numeric
                              ? perturb_numeric(*s.spec, current.idx[i])
                              : perturb_categorical(*s.spec, current.idx[i]);
        } else {
            // Newly activated layer: no previous value to walk from.
            next.idx[i] = static_cast<int>(rng.uniform_index(s.spec->cardinality()));
        }
    }
    return next;
}

void SpaceLayout::enumerate(const std::function<void(const CandidateConfig&)>& visit) const {
    // Enumeration order: globals (slot order) outermost, then group slots.
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < slots_.size(); ++i)
        if (slots_[i].group < 0) order.push_back(i);
    for (std::size_t i = 0; i < slots_.size(); ++i)
        if (slots_[i].group >= 0) order.push_back(i);

    CandidateConfig c;
    c.idx.assign(slots_.size(), CandidateConfig::kAbsent);

    std::function<void(std::size_t)> rec = [&](std::size_t pos) {
        if (pos == order.size()) {
            visit(c);
            return;
        }
        std::size_t i = order[pos];
        const SlotInfo& s = slots_[i];
        if (s.group >= 0 && s.layer > active_depth(c, s.group)) {
            c.idx[i] = CandidateConfig::kAbsent;
            rec(pos + 1);
            return;
        }
        for (int v = 0; v < s.spec->cardinality(); ++v) {
            c.idx[i] = v;
            rec(pos + 1);
        }
        c.idx[i] = CandidateConfig::kAbsent;
    };
    rec(0);
}

std::string SpaceLayout::canonical_key(const CandidateConfig& config) const {
    require_valid(config);
    std::string key;
    for (std::size_t i = 0; i < slots_.size(); ++i) {
        const SlotInfo& s = slots_[i];
        if (i) key += ';';
        key += s.name;
        key += '=';
        int v = config.idx[i];
        if (v == CandidateConfig::kAbsent)
            key += '-';
        else if (s.spec->kind == ParamKind::numeric)
            key += std::to_string(v);
        else
            key += s.spec->options[v];
    }
    return key;
}

CandidateConfig SpaceLayout::config_from_key(std::string_view key) const {
    CandidateConfig c;
    c.idx.assign(slots_.size(), CandidateConfig::kAbsent);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < slots_.size(); ++i) {
        std::size_t end = key.find(';', pos);
        std::string_view item =
            key.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
        std::size_t eq = item.find('=');
        if (eq == std::string_view::npos)
            throw FormatError("config key: missing '=' in item " + std::to_string(i));
        std::string_view name = item.substr(0, eq);
        std::string_view val = item.substr(eq + 1);
        const SlotInfo& s = slots_[i];
        if (name != s.name)
            throw FormatError("config key: expected '" + s.name + "', got '" + std::string(name) +
                              "'");
        if (val == "-") {
            c.idx[i] = CandidateConfig::kAbsent;
        } else if (s.spec->kind == ParamKind::numeric) {
            c.idx[i] = std::stoi(std::string(val));
        } else {
            auto it = std::find(s.spec->options.begin(), s.spec->options.end(), val);
            if (it == s.spec->options.end())
                throw FormatError("config key: unknown option '" + std::string(val) + "' for '" +
                                  s.name + "'");
            c.idx[i] = static_cast<int>(it - s.spec->options.begin());
        }
        if (end == std::string_view::npos) {
            if (i + 1 != slots_.size()) throw FormatError("config key: too few items");
            break;
        }
        pos = end + 1;
    }
    require_valid(c);
    return c;
}

double SpaceLayout::value_at(const CandidateConfig& config, std::size_t slot) const {
    const SlotInfo& s = slots_[slot];
    int v = config.idx[slot];
    if (v == CandidateConfig::kAbsent)
        throw ValidationError("value_at: slot '" + s.name + "' inactive");
    return grid_value(*s.spec, v);
}

std::optional<std::size_t> SpaceLayout::slot_index(std::string_view materialized_name) const {
    for (std::size_t i = 0; i < slots_.size(); ++i)
        if (slots_[i].name == materialized_name) return i;
    return std::nullopt;
}

std::uint64_t space_size(const DesignSpace& space) { return SpaceLayout(space).size(); }

std::vector<double> encode(const CandidateConfig& config, const DesignSpace& space) {
    return SpaceLayout(space).encode(config);
}

namespace {

using nlohmann::json;

ParamSpec param_from_json(const json& j) {
    ParamSpec p;
    p.name = j.at("name").get<std::string>();
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "numeric") {
        p.kind = ParamKind::numeric;
        p.min = j.at("min").get<double>();
        p.max = j.at("max").get<double>();
        p.steps = j.at("steps").get<int>();
        std::string scale = j.value("scale", "linear");
        if (scale == "linear")
            p.scale = Scale::linear;
        else if (scale == "log")
            p.scale = Scale::log;
        else
            throw FormatError("param '" + p.name + "': unknown scale '" + scale + "'");
    } else if (kind == "categorical") {
        p.kind = ParamKind::categorical;
        p.options = j.at("options").get<std::vector<std::string>>();
    } else {
        throw FormatError("param '" + p.name + "': unknown kind '" + kind + "'");
    }
    return p;
}

json param_to_json(const ParamSpec& p) {
    json j;
    j["name"] = p.name;
    if (p.kind == ParamKind::numeric) {
        j["kind"] = "numeric";
        j["min"] = p.min;
        j["max"] = p.max;
        j["steps"] = p.steps;
        j["scale"] = p.scale == Scale::linear ? "linear" : "log";
    } else {
        j["kind"] = "categorical";
        j["options"] = p.options;
    }
    return j;
}

} // namespace

DesignSpace load_space_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("space file: ") + e.what());
    }
    DesignSpace s;
    for (const auto& pj : j.at("params")) s.params.push_back(param_from_json(pj));
    if (j.contains("groups")) {
        for (const auto& gj : j.at("groups")) {
            LayerGroup g;
            g.gate = gj.at("gate").get<std::string>();
            for (const auto& pj : gj.at("params")) g.params.push_back(param_from_json(pj));
            s.groups.push_back(std::move(g));
        }
    }
    s.validate();
    return s;
}

std::string space_to_json(const DesignSpace& space) {
    json j;
    j["params"] = json::array();
    for (const auto& p : space.params) j["params"].push_back(param_to_json(p));
    j["groups"] = json::array();
    for (const auto& g : space.groups) {
        json gj;
        gj["gate"] = g.gate;
        gj["params"] = json::array();
        for (const auto& p : g.params) gj["params"].push_back(param_to_json(p));
        j["groups"].push_back(gj);
    }
    return j.dump(2);
}

} // namespace nndse
