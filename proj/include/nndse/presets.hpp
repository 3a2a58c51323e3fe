#pragma once

#include <string>
#include <vector>

#include "nndse/design_space.hpp"
#include "nndse/evaluator.hpp"

namespace nndse {

// A shipped design-space definition plus the target it was written for.
struct Preset {
    std::string name;
    DesignSpace space;
    EvalTarget target;
};

std::vector<std::string> preset_names();

// Built-in presets: restricted-mnist, mnist-mlp, mnist-cnn, cifar10-cnn.
Preset get_preset(const std::string& name);

// Space file with optional "target" section (input shape, classes, train
// constants); absent fields fall back to preset-style defaults.
Preset load_preset_json(const std::string& text, const std::string& name = "custom");
std::string preset_to_json(const Preset& preset);

} // namespace nndse
