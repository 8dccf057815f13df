#include "retina/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace retina {

namespace fs = std::filesystem;

std::string_view to_string(Split split) {
    return split == Split::Train ? "train" : "test";
}

Split parse_split(std::string_view name) {
    if (name == "train") return Split::Train;
    if (name == "test") return Split::Test;
    throw InvalidParameterError("unknown split '" + std::string(name) + "'");
}

std::string_view split_directory(Split split) {
    return split == Split::Train ? "our485" : "eval15";
}

namespace {

bool is_png(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png";
}

std::set<std::string> list_pngs(const fs::path& dir) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) {
        throw LayoutError("missing directory: " + dir.string());
    }
    std::set<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && is_png(entry.path())) {
            names.insert(entry.path().filename().string());
        }
    }
    return names;
}

}  // namespace

PairedDataset discover(const fs::path& root, Split split, const std::optional<DirectoryOverride>& dirs) {
    PairedDataset ds;
    ds.root = root;
    ds.split = split;

    const fs::path base = root / split_directory(split);
    const fs::path low_dir = dirs ? dirs->low_dir : base / "low";
    const fs::path high_dir = dirs ? dirs->high_dir : base / "high";

    const std::set<std::string> low = list_pngs(low_dir);
    const std::set<std::string> high = list_pngs(high_dir);

    std::vector<std::string> orphans;
    for (const auto& name : low) {
        if (!high.contains(name)) orphans.push_back(name);
    }
    if (!orphans.empty()) {
        std::string msg = "low images without a high counterpart in " + high_dir.string() + ":";
        for (const auto& n : orphans) msg += " " + n;
        throw PairingError(msg);
    }
    for (const auto& name : high) {
        if (!low.contains(name)) {
            ds.warnings.push_back("unmatched high image " + (high_dir / name).string());
        }
    }

    // std::set iteration is already lexicographic
    for (const auto& name : low) {
        ds.pairs.push_back({name, low_dir / name, high_dir / name});
    }
    if (ds.pairs.empty()) {
        ds.warnings.push_back("zero pairs found for split '" + std::string(to_string(split)) + "' under " +
                              low_dir.string());
    }
    return ds;
}

ImagePair load_pair(const PairEntry& entry) {
    Image low = read_png(entry.low_path);
    Image high = read_png(entry.high_path);
    if (!low.same_shape(high)) {
        throw DataError("pair '" + entry.name + "': low is " + std::to_string(low.height()) + "x" +
                        std::to_string(low.width()) + "x" + std::to_string(low.channels()) + " but high is " +
                        std::to_string(high.height()) + "x" + std::to_string(high.width()) + "x" +
                        std::to_string(high.channels()));
    }
    return {std::move(low), std::move(high)};
}

}  // namespace retina
