#include "doctest.h"

#include "crt/errors.hpp"
#include "crt/excursion.hpp"
#include "crt/path_grid.hpp"

#include <sstream>

using namespace crt;

TEST_CASE("PathGrid enforces kind-specific boundary invariants") {
    Eigen::VectorXd ok(3);
    ok << 0.0, 0.5, 0.0;
    CHECK_NOTHROW(PathGrid(PathKind::excursion, 0.0, 0.5, ok));

    Eigen::VectorXd open_end(3);
    open_end << 0.0, 0.5, 0.2;
    CHECK_THROWS_AS(PathGrid(PathKind::excursion, 0.0, 0.5, open_end), InvalidArgument);
    CHECK_NOTHROW(PathGrid(PathKind::bes3_pair_half, 0.0, 0.5, open_end));

    Eigen::VectorXd touching(4);
    touching << 0.0, 0.5, 0.0, 0.0;
    CHECK_THROWS_AS(PathGrid(PathKind::excursion, 0.0, 0.5, touching), InvalidArgument);

    Eigen::VectorXd negative(3);
    negative << 0.0, -0.1, 0.0;
    CHECK_THROWS_AS(PathGrid(PathKind::bes3_pair_half, 0.0, 0.5, negative), InvalidArgument);
    CHECK_THROWS_AS(PathGrid(PathKind::excursion, 0.0, 0.0, ok), InvalidArgument);
}

TEST_CASE("PathGrid binary container layout") {
    Eigen::VectorXd v(3);
    v << 0.0, 1.5, 0.25;
    const PathGrid p(PathKind::bes3_pair_half, 2.0, 0.125, v);
    std::stringstream buf;
    write_path_grid(buf, p);
    const std::string bytes = buf.str();
    REQUIRE(bytes.size() == 4 + 4 + 1 + 8 + 8 + 8 + 3 * 8);
    CHECK(bytes.substr(0, 4) == "CRTC");
    CHECK(static_cast<unsigned char>(bytes[4]) == 1);
    CHECK(static_cast<unsigned char>(bytes[8]) == 1);  // kind
    CHECK(static_cast<unsigned char>(bytes[25]) == 3);  // count, low byte
}

TEST_CASE("PathGrid serialization round-trips sampled paths") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto exc = sample_normalized_excursion(17 * seed, seed);
        std::stringstream buf;
        write_path_grid(buf, exc);
        CHECK(read_path_grid(buf) == exc);
    }
    std::stringstream bad("CRTX");
    CHECK_THROWS_AS(read_path_grid(bad), InvalidArgument);
}
