#include <catch2/catch_amalgamated.hpp>

#include "gradcheck.hpp"

using testutil::gradcheck_suite;

TEST_CASE("analytic gradients match central finite differences") {
    int skipped = 0;
    const double worst = gradcheck_suite(5, 1000, &skipped);
    INFO("worst relative error " << worst << ", kink-invalidated cases " << skipped);
    REQUIRE(worst <= 1e-3);
}
