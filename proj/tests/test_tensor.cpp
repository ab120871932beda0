#include <doctest.h>

#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "rgan/autodiff.hpp"
#include "rgan/errors.hpp"
#include "rgan/tensor.hpp"
#include "support.hpp"

using namespace rgan;

TEST_CASE("construction validates shape and entries") {
  CHECK_THROWS_AS(Tensor({2, 2}, {1, 2, 3}), DimensionError);
  CHECK_THROWS_AS(Tensor({0, 2}, {}), DimensionError);
  CHECK_THROWS_AS(Tensor({2}, {1.0, std::numeric_limits<double>::quiet_NaN()}), DomainError);
  CHECK_THROWS_AS(Tensor::filled({2}, std::numeric_limits<double>::infinity()), DomainError);
  CHECK_THROWS_AS(Tensor::matrix({{1, 2}, {3}}), DimensionError);

  auto s = Tensor::scalar(2.5);
  CHECK(s.rank() == 0);
  CHECK(s.item() == 2.5);
  CHECK_THROWS_AS(Tensor::vector({1, 2}).item(), ContractError);
  CHECK_THROWS_AS(Tensor::vector({1, 2}).rows(), DimensionError);

  auto m = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m.at(1, 2) == 6);
  CHECK(m.row(1)[0] == 4);
  CHECK(m == Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6}));
  CHECK(Tensor::zeros({3, 2}).is_zero());
  CHECK_FALSE(m.is_zero());
}

TEST_CASE("gather_rows and axpy") {
  auto m = Tensor::matrix({{1, 2}, {3, 4}, {5, 6}});
  std::vector<std::size_t> idx{2, 0, 2};
  CHECK(gather_rows(m, idx) == Tensor::matrix({{5, 6}, {1, 2}, {5, 6}}));
  std::vector<std::size_t> bad{3};
  CHECK_THROWS_AS(gather_rows(m, bad), DimensionError);

  auto b = Tensor::matrix({{1, 0}, {0, 1}, {1, 1}});
  CHECK(axpy(m, 2.0, b) == Tensor::matrix({{3, 2}, {3, 6}, {7, 8}}));
  CHECK_THROWS_AS(axpy(m, 1.0, Tensor::zeros({2, 2})), DimensionError);
}

TEST_CASE("matmul worked example") {
  auto a = Tensor::matrix({{1, 2}, {3, 4}});
  auto b = Tensor::matrix({{5, 6}, {7, 8}});
  CHECK(ad::kernel::matmul(a, b) == Tensor::matrix({{19, 22}, {43, 50}}));
  CHECK_THROWS_AS(ad::kernel::matmul(a, Tensor::zeros({3, 2})), DimensionError);
  CHECK_THROWS_AS(ad::kernel::matmul(a, Tensor::vector({1, 2})), DimensionError);
}

TEST_CASE("matmul agrees exactly with a triple loop across tile widths") {
  std::mt19937_64 rng(7);
  for (auto [m, k, n] : std::vector<std::array<std::size_t, 3>>{
           {1, 1, 1}, {3, 5, 7}, {4, 9, 8}, {2, 3, 32}, {5, 17, 41}, {6, 64, 73}, {1, 2, 100}}) {
    auto a = testing::random_tensor({m, k}, rng);
    auto b = testing::random_tensor({k, n}, rng);
    CHECK(ad::kernel::matmul(a, b) == testing::naive_matmul(a, b));
  }
}

TEST_CASE("transpose") {
  auto m = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
  CHECK(ad::kernel::transpose(m) == Tensor::matrix({{1, 4}, {2, 5}, {3, 6}}));
}

TEST_CASE("sigmoid stays strictly inside the unit interval") {
  for (double x : {-800.0, -40.0, -1.0, 0.0, 1.0, 40.0, 800.0}) {
    const double s = ad::kernel::sigmoid(x);
    CHECK(s > 0.0);
    CHECK(s < 1.0);
  }
  CHECK(ad::kernel::sigmoid(0.0) == 0.5);
  CHECK(ad::kernel::sigmoid(2.0) == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-15));
}

TEST_CASE("floored log") {
  CHECK(ad::kernel::log_floored(1.0) == 0.0);
  CHECK(ad::kernel::log_floored(0.0) == std::log(1e-12));
  CHECK(ad::kernel::log_floored(1e-20) == std::log(1e-12));
  CHECK(ad::kernel::log_floored(0.5) == std::log(0.5));
  CHECK_THROWS_AS(ad::kernel::log_floored(-1e-3), DomainError);
}
