#include "doctest.h"
#include "retina/checkpoint.hpp"
#include "support/fixtures.hpp"
#include "support/random.hpp"

using namespace retina;
using nlohmann::ordered_json;

namespace {

RetinaModel perturbed_model(std::uint64_t seed) {
    RetinaModel m = init_model({seed, 1.0, 0.5, 1.0});
    std::vector<float> p = flatten(m.stage_g, m.stage_f);
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> n(0.0f, 0.3f);
    for (float& v : p) v += n(rng);
    unflatten<float>(p, m.stage_g, m.stage_f);
    return m;
}

}  // namespace

TEST_CASE("save -> load reproduces the model exactly") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        RetinaModel m = perturbed_model(seed);
        m.padding = seed % 2 ? Padding::Zero : Padding::Replicate;
        ordered_json meta = {{"note", "x"}, {"epochs", 3}};
        const std::string first = save_checkpoint(m, meta);
        const Checkpoint ck = load_checkpoint(first);
        CHECK(ck.model == m);
        CHECK(ck.metadata["note"] == "x");
        CHECK(save_checkpoint(ck.model, ck.metadata) == first);

        const Image img = test::random_image(9, 9, 3, seed);
        CHECK(test::max_abs_diff(infer(ck.model, img), infer(m, img)) <= 1e-6);
    }
}

TEST_CASE("checkpoint layout") {
    const ordered_json doc = ordered_json::parse(save_checkpoint(init_model()));
    std::vector<std::string> keys;
    for (const auto& [k, v] : doc.items()) keys.push_back(k);
    CHECK(keys == std::vector<std::string>{"format_version", "padding", "stage_g", "stage_f", "metadata"});
    CHECK(doc["stage_g"]["kernel_size"] == 3);
    CHECK(doc["stage_g"]["kernels"].size() == 3);
    CHECK(doc["stage_g"]["kernels"][0].size() == 9);
    CHECK(doc["stage_f"]["kernels"][2].size() == 25);
    CHECK(doc["stage_f"]["biases"].size() == 3);
    CHECK(doc["metadata"]["init_seed"] == 42);
}

TEST_CASE("malformed checkpoints are rejected") {
    const ordered_json good = ordered_json::parse(save_checkpoint(init_model()));

    ordered_json short_kernel = good;
    short_kernel["stage_g"]["kernels"][1].erase(0);
    CHECK_THROWS_AS(load_checkpoint(short_kernel.dump()), CheckpointFormatError);

    ordered_json version = good;
    version["format_version"] = 2;
    CHECK_THROWS_AS(load_checkpoint(version.dump()), CheckpointFormatError);

    ordered_json bad_value = good;
    bad_value["stage_f"]["biases"][0] = "nan";
    CHECK_THROWS_AS(load_checkpoint(bad_value.dump()), CheckpointFormatError);

    ordered_json huge = good;
    huge["stage_f"]["kernels"][0][0] = 1e300;
    CHECK_THROWS_AS(load_checkpoint(huge.dump()), CheckpointFormatError);

    ordered_json size = good;
    size["stage_f"]["kernel_size"] = 3;
    CHECK_THROWS_AS(load_checkpoint(size.dump()), CheckpointFormatError);

    ordered_json padding = good;
    padding["padding"] = "mirror";
    CHECK_THROWS_AS(load_checkpoint(padding.dump()), CheckpointFormatError);

    CHECK_THROWS_AS(load_checkpoint("{not json"), CheckpointFormatError);
    CHECK_THROWS_AS(load_checkpoint("[]"), CheckpointFormatError);
}

TEST_CASE("checkpoint files") {
    test::TempDir dir;
    const RetinaModel m = perturbed_model(3);
    write_checkpoint(dir / "m.json", m);
    CHECK(read_checkpoint(dir / "m.json").model == m);
    CHECK_THROWS_AS(read_checkpoint(dir / "missing.json"), DataError);
}
