#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "retina/dataset.hpp"
#include "support/fixtures.hpp"
#include "support/random.hpp"

using namespace retina;
namespace fs = std::filesystem;

TEST_CASE("discover finds both splits of a synthetic tree") {
    test::TempDir root;
    test::write_synthetic_lol(root.path(), 6, 3, 8, 10);
    const PairedDataset train = discover(root.path(), Split::Train);
    const PairedDataset eval = discover(root.path(), Split::Test);
    CHECK(train.pairs.size() == 6);
    CHECK(eval.pairs.size() == 3);
    CHECK(train.warnings.empty());
    CHECK(split_directory(Split::Train) == "our485");
    CHECK(split_directory(Split::Test) == "eval15");

    // lexicographic: "1.png" < "2.png" < ... < "6.png"
    for (std::size_t i = 1; i < train.pairs.size(); ++i) CHECK(train.pairs[i - 1].name < train.pairs[i].name);
    for (const auto& p : train.pairs) {
        CHECK(p.low_path.filename() == p.high_path.filename());
        CHECK(p.low_path.parent_path().filename() == "low");
    }

    const ImagePair pair = load_pair(eval.pairs[0]);
    CHECK(pair.low.height() == 8);
    CHECK(pair.high.width() == 10);
    CHECK(pair.low.channels() == 3);
}

TEST_CASE("non-png files are ignored and extensions match case-insensitively") {
    test::TempDir root;
    test::write_synthetic_lol(root.path(), 2, 0, 4, 4);
    std::ofstream(root / "our485/low/readme.txt") << "x";
    fs::copy_file(root / "our485/low/1.png", root / "our485/low/EXTRA.PNG");
    fs::copy_file(root / "our485/high/1.png", root / "our485/high/EXTRA.PNG");
    CHECK(discover(root.path(), Split::Train).pairs.size() == 3);
}

TEST_CASE("unmatched images") {
    test::TempDir root;
    test::write_synthetic_lol(root.path(), 3, 1, 4, 4);

    fs::copy_file(root / "our485/high/1.png", root / "our485/high/99.png");
    const PairedDataset ds = discover(root.path(), Split::Train);
    CHECK(ds.pairs.size() == 3);
    REQUIRE(ds.warnings.size() == 1);
    CHECK(ds.warnings[0].find("99.png") != std::string::npos);

    fs::copy_file(root / "our485/low/1.png", root / "our485/low/42.png");
    try {
        discover(root.path(), Split::Train);
        FAIL("expected PairingError");
    } catch (const PairingError& e) {
        CHECK(std::string(e.what()).find("42.png") != std::string::npos);
    }
}

TEST_CASE("layout errors and empty splits") {
    test::TempDir root;
    CHECK_THROWS_AS(discover(root.path(), Split::Train), LayoutError);
    CHECK_THROWS_AS(discover(root / "missing", Split::Test), LayoutError);

    fs::create_directories(root / "eval15/low");
    CHECK_THROWS_AS(discover(root.path(), Split::Test), LayoutError);
    fs::create_directories(root / "eval15/high");
    const PairedDataset empty = discover(root.path(), Split::Test);
    CHECK(empty.pairs.empty());
    CHECK(empty.warnings.size() == 1);
}

TEST_CASE("directory overrides") {
    test::TempDir root;
    fs::create_directories(root / "dark");
    fs::create_directories(root / "bright");
    write_png(root / "dark/a.png", test::random_image(5, 6, 3, 1));
    write_png(root / "bright/a.png", test::random_image(5, 6, 3, 2));
    const PairedDataset ds = discover(root / "ignored", Split::Test, DirectoryOverride{root / "dark", root / "bright"});
    REQUIRE(ds.pairs.size() == 1);
    CHECK(ds.pairs[0].name == "a.png");
}

TEST_CASE("load_pair rejects mismatched sizes") {
    test::TempDir root;
    write_png(root / "l.png", test::random_image(5, 6, 3, 1));
    write_png(root / "h.png", test::random_image(6, 5, 3, 2));
    CHECK_THROWS_AS(load_pair({"x", root / "l.png", root / "h.png"}), DataError);

    std::ofstream(root / "bad.png") << "not a png";
    CHECK_THROWS_AS(load_pair({"x", root / "bad.png", root / "h.png"}), DecodeError);
}
