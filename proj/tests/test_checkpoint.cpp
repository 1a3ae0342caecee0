#include <catch_amalgamated.hpp>

#include "loadcast/checkpoint.hpp"

#include <filesystem>
#include <fstream>
#include <random>

#include "helpers.hpp"

using namespace loadcast;
namespace fs = std::filesystem;

namespace {

Checkpoint sample_checkpoint() {
    Checkpoint cp;
    cp.dims = testutil::tiny_dims();
    cp.features = FeatureMask{};
    cp.params = init_params(cp.dims, 1234);
    std::mt19937_64 rng(4321);
    for (int j = 0; j < 3; ++j) cp.clusters.centers.push_back(testutil::random_vec(168, rng, 0.1, 1.0));
    cp.clusters.final_objective = 12.5;
    cp.clusters.iterations_run = 4;
    cp.clusters.objective_history = {20.0, 15.0, 13.0, 12.5};
    cp.scaler = {431.25, 1962.875};
    cp.train_config.seed = 99;
    cp.train_config.lambda_perturb = 0.75;
    cp.history = {{1, 0.9123456789012345, 1.01}, {2, 0.5, 0.7}};
    return cp;
}

std::string file_text(const fs::path& p) {
    std::ifstream in(p);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

} // namespace

TEST_CASE("save then load is structurally and bitwise equal", "[checkpoint]") {
    Checkpoint cp = sample_checkpoint();
    fs::path p = fs::temp_directory_path() / "loadcast_cp_roundtrip.json";
    save_checkpoint(cp, p.string());
    Checkpoint back = load_checkpoint(p.string());

    CHECK(back.format_version == cp.format_version);
    CHECK(back.dims == cp.dims);
    CHECK(back.features.time_onehots == cp.features.time_onehots);
    CHECK(back.scaler.min_value == cp.scaler.min_value);
    CHECK(back.scaler.max_value == cp.scaler.max_value);
    CHECK(back.clusters.centers == cp.clusters.centers);
    CHECK(back.clusters.final_objective == cp.clusters.final_objective);
    CHECK(back.clusters.objective_history == cp.clusters.objective_history);
    for (auto [a, b] : {std::pair{&back.params.w_e, &cp.params.w_e},
                        std::pair{&back.params.w_gh, &cp.params.w_gh},
                        std::pair{&back.params.w_f2, &cp.params.w_f2},
                        std::pair{&back.params.b_o2, &cp.params.b_o2}})
        CHECK(*a == *b);
    CHECK(back.train_config.lambda_perturb == cp.train_config.lambda_perturb);
    CHECK(back.train_config.seed == cp.train_config.seed);
    REQUIRE(back.history.size() == cp.history.size());
    CHECK(back.history[0].train_loss == cp.history[0].train_loss);

    // a second save of the loaded checkpoint is byte-identical
    fs::path p2 = fs::temp_directory_path() / "loadcast_cp_roundtrip2.json";
    save_checkpoint(back, p2.string());
    CHECK(file_text(p) == file_text(p2));
}

TEST_CASE("one corrupted hex digit is caught and attributed", "[checkpoint]") {
    Checkpoint cp = sample_checkpoint();
    fs::path p = fs::temp_directory_path() / "loadcast_cp_corrupt.json";
    save_checkpoint(cp, p.string());

    std::string text = file_text(p);
    // flip one digit inside the w_gh data block
    const std::size_t field = text.find("\"w_gh\"");
    REQUIRE(field != std::string::npos);
    const std::size_t data = text.find("\"data\"", field);
    const std::size_t start = text.find(':', data) + 3;
    text[start + 40] = text[start + 40] == '7' ? '8' : '7';
    std::ofstream(p) << text;

    CHECK_THROWS_MATCHES(load_checkpoint(p.string()), FormatError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("w_gh")));
}

TEST_CASE("future format versions are rejected explicitly", "[checkpoint]") {
    Checkpoint cp = sample_checkpoint();
    fs::path p = fs::temp_directory_path() / "loadcast_cp_future.json";
    save_checkpoint(cp, p.string());
    std::string text = file_text(p);
    const std::size_t at = text.find("\"format_version\": 1");
    REQUIRE(at != std::string::npos);
    text.replace(at, std::string("\"format_version\": 1").size(), "\"format_version\": 2");
    std::ofstream(p) << text;
    CHECK_THROWS_MATCHES(load_checkpoint(p.string()), FormatError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("format_version")));
}

TEST_CASE("shape disagreements with dims are rejected", "[checkpoint]") {
    Checkpoint cp = sample_checkpoint();
    nlohmann::json j = checkpoint_to_json(cp);
    j["dims"]["hidden"] = 6; // arrays were written for hidden = 5
    CHECK_THROWS_AS(checkpoint_from_json(j), FormatError);
}

TEST_CASE("malformed documents and missing files fail cleanly", "[checkpoint]") {
    fs::path p = fs::temp_directory_path() / "loadcast_cp_bad.json";
    std::ofstream(p) << "{ not json";
    CHECK_THROWS_AS(load_checkpoint(p.string()), FormatError);
    CHECK_THROWS_AS(load_checkpoint("/nonexistent/cp.json"), DataError);
}

TEST_CASE("hex doubles survive extreme values", "[checkpoint]") {
    for (double v : {0.0, -0.0, 1e-308, -1.7976931348623157e308, 3.141592653589793,
                     std::numeric_limits<double>::denorm_min()}) {
        const std::string h = detail::hex_double(v);
        CHECK(h.size() == 16);
        const double back = detail::unhex_double(h, "t");
        CHECK(std::bit_cast<std::uint64_t>(back) == std::bit_cast<std::uint64_t>(v));
    }
    CHECK_THROWS_AS(detail::unhex_double("123", "t"), FormatError);
    CHECK_THROWS_AS(detail::unhex_double("123456789ABCDEFG", "t"), FormatError);
}
