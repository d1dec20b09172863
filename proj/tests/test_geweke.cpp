#include <doctest.h>

#include <cmath>

#include "geweke.hpp"

using namespace bmfa;

namespace {

void check_pattern(const Parameterization &spec, const geweke::Setup &set) {
  for (const auto &c : geweke::run(spec, set)) {
    INFO(spec.code() << " q=" << set.q << " " << c.name << ": forward " << c.forward_mean
                     << ", chain " << c.chain_mean << ", z " << c.z);
    CHECK(std::abs(c.z) < set.threshold);
  }
}

} // namespace

TEST_CASE("joint distribution test, one factor") {
  for (const auto &spec : Parameterization::all()) check_pattern(spec, geweke::Setup{});
}

TEST_CASE("joint distribution test, two factors") {
  geweke::Setup set;
  set.p = 5;
  set.q = 2;
  set.seed = 2;
  for (const char *code : {"UUU", "CCC", "UCU", "CUC"})
    check_pattern(Parameterization::from_code(code), set);
}
