#include "retina/checkpoint.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace retina {

using nlohmann::ordered_json;

ordered_json stage_to_json(const StageParams<float>& stage) {
    ordered_json kernels = ordered_json::array();
    for (const auto& k : stage.kernels) {
        ordered_json weights = ordered_json::array();
        for (float w : k.weights()) weights.push_back(static_cast<double>(w));
        kernels.push_back(std::move(weights));
    }
    ordered_json biases = ordered_json::array();
    for (float b : stage.biases) biases.push_back(static_cast<double>(b));

    ordered_json out = ordered_json::object();
    out["kernel_size"] = stage.kernel_size();
    out["kernels"] = std::move(kernels);
    out["biases"] = std::move(biases);
    return out;
}

std::string save_checkpoint(const RetinaModel& model, const ordered_json& metadata) {
    ordered_json doc = ordered_json::object();
    doc["format_version"] = kCheckpointFormatVersion;
    doc["padding"] = std::string(to_string(model.padding));
    doc["stage_g"] = stage_to_json(model.stage_g);
    doc["stage_f"] = stage_to_json(model.stage_f);
    ordered_json meta = metadata.is_object() ? metadata : ordered_json::object();
    meta["init_seed"] = model.init_seed;
    doc["metadata"] = std::move(meta);
    return doc.dump(2) + "\n";
}

namespace {

[[noreturn]] void format_error(const std::string& msg) {
    throw CheckpointFormatError("checkpoint: " + msg);
}

float read_real(const ordered_json& value, const std::string& where) {
    if (!value.is_number()) format_error(where + " is not a number");
    const double v = value.get<double>();
    if (!std::isfinite(v)) format_error(where + " is not finite");
    const auto f = static_cast<float>(v);
    if (!std::isfinite(f)) format_error(where + " overflows single precision");
    return f;
}

StageParams<float> stage_from_json(const ordered_json& doc, const char* name, std::size_t expected_size) {
    if (!doc.contains(name) || !doc[name].is_object()) format_error(std::string("missing object '") + name + "'");
    const ordered_json& stage = doc[name];
    const std::string prefix = name;

    if (!stage.contains("kernel_size") || !stage["kernel_size"].is_number_integer()) {
        format_error(prefix + ".kernel_size missing or not an integer");
    }
    if (stage["kernel_size"].get<long long>() != static_cast<long long>(expected_size)) {
        format_error(prefix + ".kernel_size must be " + std::to_string(expected_size));
    }
    const std::size_t taps = expected_size * expected_size;

    if (!stage.contains("kernels") || !stage["kernels"].is_array() || stage["kernels"].size() != kNumChannels) {
        format_error(prefix + ".kernels must be an array of 3 kernels");
    }
    if (!stage.contains("biases") || !stage["biases"].is_array() || stage["biases"].size() != kNumChannels) {
        format_error(prefix + ".biases must be an array of 3 reals");
    }

    StageParams<float> out = StageParams<float>::zeros(expected_size);
    for (std::size_t c = 0; c < kNumChannels; ++c) {
        const ordered_json& arr = stage["kernels"][c];
        const std::string where = prefix + ".kernels[" + std::to_string(c) + "]";
        if (!arr.is_array() || arr.size() != taps) {
            format_error(where + " must hold " + std::to_string(taps) + " reals, got " +
                         std::to_string(arr.is_array() ? arr.size() : 0));
        }
        for (std::size_t n = 0; n < taps; ++n) {
            out.kernels[c].weights()[n] = read_real(arr[n], where + "[" + std::to_string(n) + "]");
        }
        out.biases[c] = read_real(stage["biases"][c], prefix + ".biases[" + std::to_string(c) + "]");
    }
    return out;
}

}  // namespace

Checkpoint load_checkpoint(std::string_view text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        format_error(std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) format_error("top level must be an object");
    if (!doc.contains("format_version") || !doc["format_version"].is_number_integer()) {
        format_error("missing format_version");
    }
    if (doc["format_version"].get<long long>() != kCheckpointFormatVersion) {
        format_error("unsupported format_version " + doc["format_version"].dump() + " (expected " +
                     std::to_string(kCheckpointFormatVersion) + ")");
    }
    if (!doc.contains("padding") || !doc["padding"].is_string()) format_error("missing padding");

    Checkpoint ck;
    try {
        ck.model.padding = parse_padding(doc["padding"].get<std::string>());
    } catch (const InvalidParameterError& e) {
        format_error(e.what());
    }
    ck.model.stage_g = stage_from_json(doc, "stage_g", kStageGKernelSize);
    ck.model.stage_f = stage_from_json(doc, "stage_f", kStageFKernelSize);
    if (doc.contains("metadata")) {
        if (!doc["metadata"].is_object()) format_error("metadata must be an object");
        ck.metadata = doc["metadata"];
        if (ck.metadata.contains("init_seed")) {
            if (!ck.metadata["init_seed"].is_number_unsigned()) format_error("metadata.init_seed must be unsigned");
            ck.model.init_seed = ck.metadata["init_seed"].get<std::uint64_t>();
            ck.metadata.erase("init_seed");
        }
    }
    return ck;
}

void write_checkpoint(const std::filesystem::path& path, const RetinaModel& model, const ordered_json& metadata) {
    const std::string text = save_checkpoint(model, metadata);
    write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    return load_checkpoint(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

}  // namespace retina
