#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nndse/rng.hpp"

namespace nndse {

enum class ParamKind { numeric, categorical };
enum class Scale { linear, log };

// One hyper-parameter axis: a discretized numeric range or a label set.
struct ParamSpec {
    std::string name;
    ParamKind kind = ParamKind::numeric;
    double min = 0.0;
    double max = 0.0;
    int steps = 1;
    Scale scale = Scale::linear;
    std::vector<std::string> options; // categorical only

    int cardinality() const {
        return kind == ParamKind::numeric ? steps : static_cast<int>(options.size());
    }
    void validate() const;
};

// Maps a grid index to the concrete parameter value.
// linear: min + i*(max-min)/(steps-1); log: exp(ln min + i*(ln max-ln min)/(steps-1)).
double grid_value(const ParamSpec& spec, int index);

// Per-layer parameter templates gated by a numeric depth parameter: a config
// whose gate evaluates to depth d leaves instances beyond layer d inactive.
struct LayerGroup {
    std::string gate;              // name of a numeric param in DesignSpace::params
    std::vector<ParamSpec> params; // templates, instantiated once per layer
};

struct DesignSpace {
    std::vector<ParamSpec> params; // global params, gates included
    std::vector<LayerGroup> groups;

    const ParamSpec* find_param(std::string_view name) const;
    bool is_gate(std::string_view name) const;
    void validate() const;
};

// One point of the space. Slot order is defined by SpaceLayout; kAbsent marks
// inactive layer-group instances.
struct CandidateConfig {
    static constexpr int kAbsent = -1;
    std::vector<int> idx;

    bool operator==(const CandidateConfig&) const = default;
};

// Slot roles within the flattened index vector.
struct SlotInfo {
    std::string name;     // materialized name, e.g. "fc_nodes_2"
    const ParamSpec* spec = nullptr;
    int group = -1;       // -1 for global params
    int layer = 0;        // 1-based within a group
    int gate_slot = -1;   // slot of the gating param, -1 for globals
    bool is_gate = false;
    int encode_offset = -1; // first position in the encoded vector, -1 if skipped
};

// Validated, flattened view over a DesignSpace. Slot order: layer groups
// first (group order, then layer, then template order), then global params in
// declared order. Encoded order matches slot order; gate params are not
// encoded (depth shows up as inactive slots instead).
class SpaceLayout {
public:
    explicit SpaceLayout(DesignSpace space);

    // Slots hold pointers into the owned space; moving is fine, copying is not.
    SpaceLayout(const SpaceLayout&) = delete;
    SpaceLayout& operator=(const SpaceLayout&) = delete;
    SpaceLayout(SpaceLayout&&) = default;
    SpaceLayout& operator=(SpaceLayout&&) = default;

    const DesignSpace& space() const { return space_; }
    std::size_t slot_count() const { return slots_.size(); }
    const SlotInfo& slot(std::size_t i) const { return slots_[i]; }
    const std::vector<SlotInfo>& slots() const { return slots_; }
    std::size_t encoded_length() const { return encoded_length_; }

    int max_depth(int group) const { return group_max_depth_[group]; }
    // Active depth of a group under the given config.
    int active_depth(const CandidateConfig& config, int group) const;

    bool valid(const CandidateConfig& config) const;
    void require_valid(const CandidateConfig& config) const;

    // Exact number of distinct configs, saturating at uint64 max.
    std::uint64_t size() const;

    std::vector<double> encode(const CandidateConfig& config) const;
    void encode_into(const CandidateConfig& config, std::span<double> out) const;

    CandidateConfig sample_uniform(Rng& rng) const;

    // Gaussian random walk in grid-index coordinates; categorical params
    // resampled uniformly with probability p_cat. Result is always valid.
    CandidateConfig propose(const CandidateConfig& current, double sigma, double p_cat,
                            Rng& rng) const;

    // Visits every config exactly once, in a deterministic order.
    void enumerate(const std::function<void(const CandidateConfig&)>& visit) const;

    // Canonical textual key: "name=value;..." in slot order, numeric params as
    // grid indices, categoricals as option labels, inactive slots as "-".
    std::string canonical_key(const CandidateConfig& config) const;
    CandidateConfig config_from_key(std::string_view key) const;

    // Concrete grid value of a numeric slot (config must be valid, slot active).
    double value_at(const CandidateConfig& config, std::size_t slot) const;

    std::optional<std::size_t> slot_index(std::string_view materialized_name) const;

private:
    DesignSpace space_;
    std::vector<SlotInfo> slots_;
    std::vector<int> group_max_depth_;
    std::size_t encoded_length_ = 0;
};

// Spec-level convenience wrappers (build a layout per call; use SpaceLayout
// directly in hot paths).
std::uint64_t space_size(const DesignSpace& space);
std::vector<double> encode(const CandidateConfig& config, const DesignSpace& space);

// Plain-text structured space file (JSON).
DesignSpace load_space_json(const std::string& text);
std::string space_to_json(const DesignSpace& space);

} // namespace nndse
