#include <gtest/gtest.h>

#include "manufactured.hpp"

class Manufactured : public ::testing::TestWithParam<int> {};

TEST_P(Manufactured, StokesVelocityConvergesAtOrderKPlusOne) {
  const int k = GetParam();
  const auto s = manufactured::stokes(k);
  EXPECT_NEAR(s.slope(), k + 1, 0.3);
  EXPECT_LT(s.error.back(), s.error.front());
}

TEST_P(Manufactured, DarcyPressureConvergesAtOrderKPlusOne) {
  const int k = GetParam();
  const auto s = manufactured::darcy(k);
  EXPECT_NEAR(s.slope(), k + 1, 0.3);
  EXPECT_LT(s.error.back(), s.error.front());
}

INSTANTIATE_TEST_SUITE_P(Orders, Manufactured, ::testing::Values(1, 2));
