#pragma once

// Paired low/normal-light dataset discovery and loading.
//
// Default layout (the published LOL structure):
//   <root>/our485/{low,high}/*.png   train
//   <root>/eval15/{low,high}/*.png   test

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "retina/image.hpp"

namespace retina {

enum class Split { Train, Test };

std::string_view to_string(Split split);
Split parse_split(std::string_view name);

/// "our485" or "eval15".
std::string_view split_directory(Split split);

struct PairEntry {
    std::string name;
    std::filesystem::path low_path;
    std::filesystem::path high_path;
};

struct ImagePair {
    Image low;
    Image high;
};

struct PairedDataset {
    std::vector<PairEntry> pairs;
    std::filesystem::path root;
    Split split = Split::Train;
    /// Non-fatal findings: high images without a low counterpart, empty splits.
    std::vector<std::string> warnings;
};

struct DirectoryOverride {
    std::filesystem::path low_dir;
    std::filesystem::path high_dir;
};

/// Pairs files with identical names under the low/high directories, sorted by
/// name. Throws LayoutError for missing directories and PairingError for low
/// images lacking a high counterpart.
PairedDataset discover(const std::filesystem::path& root, Split split,
                       const std::optional<DirectoryOverride>& dirs = std::nullopt);

/// Decodes both images at native resolution; throws DataError on size mismatch.
ImagePair load_pair(const PairEntry& entry);

}  // namespace retina
