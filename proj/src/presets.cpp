#include "nndse/presets.hpp"

#include <json.hpp>

#include "nndse/errors.hpp"

namespace nndse {

namespace {

ParamSpec numeric(std::string name, double min, double max, int steps, Scale scale) {
    ParamSpec p;
    p.name = std::move(name);
    p.kind = ParamKind::numeric;
    p.min = min;
    p.max = max;
    p.steps = steps;
    p.scale = scale;
    return p;
}

ParamSpec categorical(std::string name, std::vector<std::string> options) {
    ParamSpec p;
    p.name = std::move(name);
    p.kind = ParamKind::categorical;
    p.options = std::move(options);
    return p;
}

EvalTarget mnist_target(int epochs) {
    EvalTarget t;
    t.input = {1, 28, 28};
    t.num_classes = 10;
    t.train = {"relu", "sgd", 200, epochs};
    return t;
}

Preset restricted_mnist() {
    Preset p;
    p.name = "restricted-mnist";
    p.space.params = {numeric("fc_layers", 1, 3, 3, Scale::linear),
                      numeric("learning_rate", 0.01, 0.8, 9, Scale::log)};
    p.space.groups = {{"fc_layers", {numeric("fc_nodes", 10, 200, 10, Scale::log)}}};
    p.target = mnist_target(10);
    return p;
}

Preset mnist_mlp() {
    Preset p;
    p.name = "mnist-mlp";
    p.space.params = {numeric("fc_layers", 1, 3, 3, Scale::linear),
                      numeric("learning_rate", 0.001, 0.8, 16, Scale::log),
                      categorical("activation", {"relu", "tanh"})};
    p.space.groups = {{"fc_layers", {numeric("fc_nodes", 10, 500, 85, Scale::log)}}};
    p.target = mnist_target(10);
    return p;
}

Preset mnist_cnn() {
    Preset p;
    p.name = "mnist-cnn";
    p.space.params = {numeric("conv_layers", 1, 2, 2, Scale::linear),
                      numeric("fc_layers", 1, 2, 2, Scale::linear),
                      numeric("learning_rate", 0.01, 0.8, 12, Scale::log)};
    p.space.groups = {{"conv_layers",
                       {numeric("conv_filters", 8, 128, 8, Scale::log),
                        numeric("conv_kernel", 1, 5, 3, Scale::linear),
                        numeric("conv_pool", 2, 4, 3, Scale::linear)}},
                      {"fc_layers", {numeric("fc_nodes", 10, 250, 16, Scale::log)}}};
    p.target = mnist_target(10);
    return p;
}

Preset cifar10_cnn() {
    Preset p;
    p.name = "cifar10-cnn";
    p.space.params = {numeric("conv_layers", 1, 3, 3, Scale::linear),
                      numeric("fc_layers", 1, 2, 2, Scale::linear),
                      numeric("learning_rate", 0.001, 0.1, 16, Scale::log)};
    p.space.groups = {{"conv_layers",
                       {numeric("conv_filters", 16, 512, 20, Scale::log),
                        numeric("conv_kernel", 3, 9, 4, Scale::linear),
                        numeric("conv_pool", 2, 3, 2, Scale::linear)}},
                      {"fc_layers", {numeric("fc_nodes", 10, 500, 16, Scale::log)}}};
    p.target.input = {3, 32, 32};
    p.target.num_classes = 10;
    // The original experiment trained these with Adam; the built-in trainer
    // only implements SGD and flags the substitution in run metadata.
    p.target.train = {"relu", "adam", 200, 20};
    return p;
}

} // namespace

std::vector<std::string> preset_names() {
    return {"restricted-mnist", "mnist-mlp", "mnist-cnn", "cifar10-cnn"};
}

Preset get_preset(const std::string& name) {
    if (name == "restricted-mnist") return restricted_mnist();
    if (name == "mnist-mlp") return mnist_mlp();
    if (name == "mnist-cnn") return mnist_cnn();
    if (name == "cifar10-cnn") return cifar10_cnn();
    std::string known;
    for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
    throw ValidationError("unknown preset '" + name + "' (available: " + known + ")");
}

Preset load_preset_json(const std::string& text, const std::string& name) {
    using nlohmann::json;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("preset file: ") + e.what());
    }
    Preset p;
    p.name = j.value("name", name);
    p.space = load_space_json(j.dump());
    if (j.contains("target")) {
        const json& t = j.at("target");
        p.target.input = {t.value("channels", 1), t.value("height", 1), t.value("width", 1)};
        p.target.num_classes = t.value("classes", 10);
        if (t.contains("train")) {
            const json& tr = t.at("train");
            p.target.train.activation = tr.value("activation", "relu");
            p.target.train.algorithm = tr.value("algorithm", "sgd");
            p.target.train.batch_size = tr.value("batch_size", 200);
            p.target.train.epochs = tr.value("epochs", 10);
        }
    }
    return p;
}

std::string preset_to_json(const Preset& preset) {
    using nlohmann::json;
    json j = json::parse(space_to_json(preset.space));
    j["name"] = preset.name;
    j["target"] = {{"channels", preset.target.input.channels},
                   {"height", preset.target.input.height},
                   {"width", preset.target.input.width},
                   {"classes", preset.target.num_classes},
                   {"train",
                    {{"activation", preset.target.train.activation},
                     {"algorithm", preset.target.train.algorithm},
                     {"batch_size", preset.target.train.batch_size},
                     {"epochs", preset.target.train.epochs}}}};
    return j.dump(2);
}

} // namespace nndse
