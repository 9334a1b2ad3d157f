#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "folqr/model.hpp"

using namespace folqr;
using model::CompanionForm;
using model::FractionalTransferFunction;
using model::PseudoStateSpace;
using model::ResolventMode;
using Complex = std::complex<double>;

namespace {

const char* kSixStateTf = "(s^0.32 + 5) / (100*s^1.92 + 20*s^0.96 - 5*s^0.64 + 1)";
const char* kTwoStateTf = "1 / (2012.409*s^1.8063 + 107.2882*s^0.93529 + 1.0305)";

// Largest relative deviation between the realization's frequency response and
// the transfer function it came from, over a two-decade log grid.
double round_trip_error(const PseudoStateSpace& ss, const FractionalTransferFunction& tf) {
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double omega = std::pow(10.0, -2.0 + 4.0 * i / 19.0);
    const Complex direct = tf.evaluate(Complex(0.0, omega));
    const Complex realized = model::frequency_response(ss, omega, ResolventMode::fractional)(0, 0);
    worst = std::max(worst, std::abs(direct - realized) / std::abs(direct));
  }
  return worst;
}

}  // namespace

TEST_CASE("parser: term lists come back canonical and descending") {
  const auto tf = model::parse_fractional_tf(kSixStateTf);

  REQUIRE(tf.numerator.size() == 2);
  CHECK(tf.numerator[0].coefficient == 1.0);
  CHECK(tf.numerator[0].exponent == 0.32);
  CHECK(tf.numerator[1].coefficient == 5.0);
  CHECK(tf.numerator[1].exponent == 0.0);

  REQUIRE(tf.denominator.size() == 4);
  CHECK(tf.denominator[0].coefficient == 100.0);
  CHECK(tf.denominator[0].exponent == 1.92);
  CHECK(tf.denominator[1].coefficient == 20.0);
  CHECK(tf.denominator[1].exponent == 0.96);
  CHECK(tf.denominator[2].coefficient == -5.0);
  CHECK(tf.denominator[2].exponent == 0.64);
  CHECK(tf.denominator[3].coefficient == 1.0);
  CHECK(tf.denominator[3].exponent == 0.0);
}

TEST_CASE("parser: coefficient and exponent spellings") {
  const auto tf = model::parse_fractional_tf("2.5e-3*s^1.5 / (3s^2 + s - .5)");
  REQUIRE(tf.numerator.size() == 1);
  CHECK(tf.numerator[0].coefficient == 2.5e-3);
  CHECK(tf.numerator[0].exponent == 1.5);
  REQUIRE(tf.denominator.size() == 3);
  CHECK(tf.denominator[0].coefficient == 3.0);
  CHECK(tf.denominator[0].exponent == 2.0);
  CHECK(tf.denominator[1].coefficient == 1.0);
  CHECK(tf.denominator[1].exponent == 1.0);
  CHECK(tf.denominator[2].coefficient == -0.5);
  CHECK(tf.denominator[2].exponent == 0.0);

  // Parenthesised exponents and unsorted input terms are accepted.
  const auto tf2 = model::parse_fractional_tf("1 / (s + 4*s^(1.7) + 2)");
  REQUIRE(tf2.denominator.size() == 3);
  CHECK(tf2.denominator[0].exponent == 1.7);
  CHECK(tf2.denominator[0].coefficient == 4.0);
  CHECK(tf2.denominator[1].exponent == 1.0);
  CHECK(tf2.denominator[2].exponent == 0.0);

  // Zero coefficients are dropped.
  const auto tf3 = model::parse_fractional_tf("1 / (s^2 + 0*s + 1)");
  CHECK(tf3.denominator.size() == 2);
}

TEST_CASE("parser: syntax errors carry a position") {
  auto expect_parse_error = [](const std::string& text) {
    try {
      model::parse_fractional_tf(text);
      FAIL("expected ParseError for: " << text);
    } catch (const ParseError& error) {
      CHECK(error.position() <= text.size());
    }
  };
  expect_parse_error("");
  expect_parse_error("1 /");
  expect_parse_error("1 / (s^ + 1)");
  expect_parse_error("1 / (x + 1)");
  expect_parse_error("1 / (s + 1) trailing");
  expect_parse_error("(s^0.5 / (s + 1)");
}

TEST_CASE("parser: semantic violations throw invalid_argument") {
  CHECK_THROWS_AS(model::parse_fractional_tf("1 / (s^0.5 + s^0.5)"), std::invalid_argument);
  CHECK_THROWS_AS(model::parse_fractional_tf("s^2 / (s + 1)"), std::invalid_argument);
  CHECK_THROWS_AS(model::parse_fractional_tf("s / (s + 1)"), std::invalid_argument);
  CHECK_THROWS_AS(model::parse_fractional_tf("s^(-0.5) / (s + 1)"), std::invalid_argument);
}

TEST_CASE("transfer function: direct evaluation") {
  const auto tf = model::parse_fractional_tf(kSixStateTf);
  // At s = 0 only the constant terms survive.
  CHECK(std::abs(tf.evaluate(Complex(0.0, 0.0)) - Complex(5.0)) < 1e-15);
  // At s = 1 every power is 1.
  const Complex at_one = tf.evaluate(Complex(1.0, 0.0));
  CHECK(std::abs(at_one - Complex(6.0 / 116.0)) < 1e-15);
  // At s = j, compare against principal-branch powers computed here.
  const Complex j(0.0, 1.0);
  const Complex expected = (std::pow(j, 0.32) + 5.0) /
                           (100.0 * std::pow(j, 1.92) + 20.0 * std::pow(j, 0.96) -
                            5.0 * std::pow(j, 0.64) + 1.0);
  CHECK(std::abs(tf.evaluate(j) - expected) < 1e-15);
}

TEST_CASE("validate: direct construction is checked") {
  FractionalTransferFunction tf;
  tf.numerator = {{1.0, 0.0}};
  tf.denominator = {{1.0, 1.0}, {1.0, 0.0}};
  CHECK_NOTHROW(tf.validate());

  FractionalTransferFunction ascending = tf;
  ascending.denominator = {{1.0, 0.0}, {1.0, 1.0}};
  CHECK_THROWS_AS(ascending.validate(), std::invalid_argument);

  FractionalTransferFunction zero_lead = tf;
  zero_lead.denominator = {{0.0, 1.0}, {1.0, 0.0}};
  CHECK_THROWS_AS(zero_lead.validate(), std::invalid_argument);

  FractionalTransferFunction no_num = tf;
  no_num.numerator.clear();
  CHECK_THROWS_AS(no_num.validate(), std::invalid_argument);

  FractionalTransferFunction no_den = tf;
  no_den.denominator.clear();
  CHECK_THROWS_AS(no_den.validate(), std::invalid_argument);
}

TEST_CASE("commensurate base: worked examples") {
  using model::commensurate_base_order;

  const auto q1 = commensurate_base_order({1.92, 0.96, 0.64, 0.32});
  REQUIRE(q1.has_value());
  CHECK(*q1 == Rational(8, 25));

  // Largest base wins: both 1/4 and 1/2 fit {0.5, 1.0}; 1/2 is returned.
  const auto q2 = commensurate_base_order({0.5, 1.0});
  REQUIRE(q2.has_value());
  CHECK(*q2 == Rational(1, 2));

  CHECK(*commensurate_base_order({0.5, 0.25}) == Rational(1, 4));
  CHECK(*commensurate_base_order({0.5}) == Rational(1, 2));

  // Bases above one are reported as-is by the detector.
  CHECK(*commensurate_base_order({2.0, 4.0}) == Rational(2, 1));

  // Tolerance absorbs sub-1e-9 jitter on the exponents.
  CHECK(*commensurate_base_order({0.5 + 5e-13, 0.25}) == Rational(1, 4));

  // No base with denominator <= 1000 relates these two five-decimal orders.
  CHECK_FALSE(commensurate_base_order({0.93529, 0.87101}).has_value());
  CHECK_FALSE(commensurate_base_order({0.5, 0.30103}).has_value());

  // With the bound raised a base exists: b = 100000 matches both decimals
  // exactly, so the maximum base is at least 1e-5. The scan's |e*b - a| <=
  // 1e-9*b acceptance additionally admits the continued-fraction convergent
  // b = 24466 of 0.30103 (paired with an exact half), which wins as the
  // larger base. Both facts are deterministic under IEEE arithmetic.
  const auto q3 = commensurate_base_order({0.5, 0.30103}, 100000);
  REQUIRE(q3.has_value());
  CHECK(q3->value() >= 1e-5);
  CHECK(*q3 == Rational(1, 24466));
}

TEST_CASE("commensurate base: error paths") {
  using model::commensurate_base_order;
  CHECK_THROWS_AS(commensurate_base_order({0.0, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(commensurate_base_order({-1.0}), std::invalid_argument);
  CHECK_THROWS_AS(commensurate_base_order({0.5}, 0), std::invalid_argument);
}

TEST_CASE("commensurate base: randomized constructed multiples") {
  using model::commensurate_base_order;
  std::mt19937 rng(20240817);
  std::uniform_int_distribution<std::int64_t> den_dist(1, 50);
  std::uniform_int_distribution<std::int64_t> mult_dist(1, 12);

  for (int trial = 0; trial < 50; ++trial) {
    const std::int64_t b = den_dist(rng);
    std::uniform_int_distribution<std::int64_t> num_dist(1, b);
    const std::int64_t a = num_dist(rng);
    std::vector<std::int64_t> k(3);
    std::vector<double> exponents;
    std::int64_t g = 0;
    for (auto& ki : k) {
      ki = mult_dist(rng);
      g = std::gcd(g, ki);
      exponents.push_back(static_cast<double>(ki) * static_cast<double>(a) /
                          static_cast<double>(b));
    }
    // The largest base for multiples k_i * (a/b) is gcd(k_i) * a/b exactly.
    const Rational expected(a * g, b);
    const auto detected = commensurate_base_order(exponents);
    REQUIRE(detected.has_value());
    CHECK(*detected == expected);
  }
}

TEST_CASE("converter: six-state top-row realization matches the stored preset") {
  const auto tf = model::parse_fractional_tf(kSixStateTf);
  const auto ss = model::to_pseudo_state_space(tf, CompanionForm::top_row);
  const auto ref = model::preset("example2_eq9");

  REQUIRE(ss.state_count() == 6);
  CHECK((ss.A - ref.A).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((ss.B - ref.B).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((ss.C - ref.C).cwiseAbs().maxCoeff() <= 1e-12);
  REQUIRE(ss.orders.size() == 6);
  for (double n : ss.orders) CHECK(n == doctest::Approx(0.32).epsilon(1e-12));
  REQUIRE(ss.base_order.has_value());
  CHECK(*ss.base_order == Rational(8, 25));
}

TEST_CASE("converter: two-state bottom-row realization carries normalization in C") {
  const auto tf = model::parse_fractional_tf(kTwoStateTf);
  const auto ss = model::to_pseudo_state_space(tf, CompanionForm::bottom_row);

  REQUIRE(ss.state_count() == 2);
  CHECK(ss.A(0, 0) == 0.0);
  CHECK(ss.A(0, 1) == 1.0);
  CHECK(ss.A(1, 0) == doctest::Approx(-1.0305 / 2012.409).epsilon(1e-15));
  CHECK(ss.A(1, 1) == doctest::Approx(-107.2882 / 2012.409).epsilon(1e-15));
  CHECK(ss.B(0, 0) == 0.0);
  CHECK(ss.B(1, 0) == 1.0);  // raw unit vector, no scaling
  CHECK(ss.C(0, 0) == doctest::Approx(1.0 / 2012.409).epsilon(1e-15));
  CHECK(ss.C(0, 1) == 0.0);
  CHECK(ss.orders[0] == doctest::Approx(0.93529).epsilon(1e-12));
  CHECK(ss.orders[1] == doctest::Approx(0.87101).epsilon(1e-9));
  CHECK_FALSE(ss.base_order.has_value());
}

TEST_CASE("converter: realizations reproduce the transfer function on a log grid") {
  const auto two_state = model::parse_fractional_tf(kTwoStateTf);
  const auto six_state = model::parse_fractional_tf(kSixStateTf);

  CHECK(round_trip_error(model::to_pseudo_state_space(two_state, CompanionForm::bottom_row),
                         two_state) <= 1e-9);
  CHECK(round_trip_error(model::to_pseudo_state_space(two_state, CompanionForm::top_row),
                         two_state) <= 1e-9);
  CHECK(round_trip_error(model::to_pseudo_state_space(six_state, CompanionForm::bottom_row),
                         six_state) <= 1e-9);
  CHECK(round_trip_error(model::to_pseudo_state_space(six_state, CompanionForm::top_row),
                         six_state) <= 1e-9);
}

TEST_CASE("converter: chain and commensurate paths realize the same dynamics") {
  // Commensurate detection would produce 17 states of order 0.1 here; the
  // forced chain uses two states of orders 0.9 and 0.8. Both must round-trip.
  const auto tf = model::parse_fractional_tf("(s^0.9 + 1) / (s^1.7 + 2*s^0.9 + 1)");

  const auto fine = model::to_pseudo_state_space(tf, CompanionForm::bottom_row);
  REQUIRE(fine.state_count() == 17);
  REQUIRE(fine.base_order.has_value());
  CHECK(*fine.base_order == Rational(1, 10));
  CHECK(round_trip_error(fine, tf) <= 1e-9);

  const auto chain = model::to_pseudo_state_space(tf, CompanionForm::bottom_row, true);
  REQUIRE(chain.state_count() == 2);
  CHECK(chain.orders[0] == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(chain.orders[1] == doctest::Approx(0.8).epsilon(1e-9));
  CHECK(round_trip_error(chain, tf) <= 1e-9);
}

TEST_CASE("converter: order bookkeeping invariants") {
  const auto tf = model::parse_fractional_tf(kTwoStateTf);

  for (bool force : {false, true}) {
    const auto ss = model::to_pseudo_state_space(tf, CompanionForm::bottom_row, force);
    double sum = 0.0;
    for (double n : ss.orders) {
      CHECK(n > 0.0);
      CHECK(n <= 1.0);
      sum += n;
    }
    CHECK(sum == doctest::Approx(1.8063).epsilon(1e-12));
  }

  const auto six = model::to_pseudo_state_space(model::parse_fractional_tf(kSixStateTf),
                                                CompanionForm::top_row);
  double sum = 0.0;
  for (double n : six.orders) sum += n;
  CHECK(sum == doctest::Approx(1.92).epsilon(1e-12));
}

TEST_CASE("converter: ladder violations throw") {
  // The chain ladder for this function has rungs {0, 0.64, 0.96}; the
  // numerator power 0.32 lands on none of them.
  const auto six = model::parse_fractional_tf(kSixStateTf);
  CHECK_THROWS_AS(model::to_pseudo_state_space(six, CompanionForm::top_row, true),
                  std::invalid_argument);

  // A chain increment above one is rejected rather than split automatically.
  const auto wide = model::parse_fractional_tf("1 / (s^2.41 + s^0.9 + 1)");
  CHECK_THROWS_AS(model::to_pseudo_state_space(wide, CompanionForm::bottom_row, true),
                  std::invalid_argument);
}

TEST_CASE("presets: stored digit-for-digit") {
  const auto one = model::preset("example1_eq7");
  REQUIRE(one.state_count() == 3);
  CHECK(one.A(0, 1) == 1.0);
  CHECK(one.A(1, 2) == 1.0);
  CHECK(one.A(2, 0) == -0.0005121);
  CHECK(one.A(2, 1) == -0.05331);
  CHECK(one.A(2, 2) == 0.0);
  CHECK(one.B(2, 0) == 1.0 / 107.2882);
  CHECK(one.C(0, 0) == 1.0);
  CHECK(one.orders == std::vector<double>{0.93529, 0.87101, 0.93529});
  CHECK_FALSE(one.base_order.has_value());

  const auto two = model::preset("example2_eq9");
  REQUIRE(two.state_count() == 6);
  CHECK(two.A(0, 2) == -0.2);
  CHECK(two.A(0, 3) == 0.05);
  CHECK(two.A(0, 5) == -0.01);
  for (Eigen::Index i = 1; i < 6; ++i) CHECK(two.A(i, i - 1) == 1.0);
  CHECK(two.B(0, 0) == 1.0);
  CHECK(two.C(0, 4) == 0.01);
  CHECK(two.C(0, 5) == 0.05);
  CHECK(two.orders == std::vector<double>(6, 0.32));
  REQUIRE(two.base_order.has_value());
  CHECK(*two.base_order == Rational(8, 25));

  CHECK_THROWS_AS(model::preset("unknown"), std::invalid_argument);
}

TEST_CASE("frequency response: DC limit and a fixed complex point") {
  const auto two = model::preset("example2_eq9");

  // The six-state benchmark has DC gain 5 (constant numerator term over
  // constant denominator term after normalization: 0.05 / 0.01).
  const auto dc = model::frequency_response(two, 0.0, ResolventMode::fractional);
  CHECK(std::abs(dc(0, 0) - Complex(5.0)) <= 1e-9);

  // At omega = 1 the realization must agree with scalar evaluation.
  const auto tf = model::parse_fractional_tf(kSixStateTf);
  const auto at_one = model::frequency_response(two, 1.0, ResolventMode::fractional);
  CHECK(std::abs(at_one(0, 0) - tf.evaluate(Complex(0.0, 1.0))) <= 1e-12);

  CHECK_THROWS_AS(model::frequency_response(two, -1.0, ResolventMode::fractional),
                  std::invalid_argument);
}

TEST_CASE("frequency response: singular DC resolvent is reported") {
  // A pure fractional integrator chain: the constant denominator term is
  // zero, so A is singular and the DC limit does not exist.
  const auto tf = model::parse_fractional_tf("1 / (s^1.5 + s^0.5)");
  const auto ss = model::to_pseudo_state_space(tf, CompanionForm::bottom_row);
  CHECK_THROWS_AS(model::frequency_response(ss, 0.0, ResolventMode::fractional),
                  SingularMatrixError);
  // Away from DC the response exists.
  CHECK_NOTHROW(model::frequency_response(ss, 1.0, ResolventMode::fractional));
}

TEST_CASE("resolvent modes: literal equals fractional for unit orders") {
  const auto tf = model::parse_fractional_tf("1 / (s^2 + 3*s + 2)");
  const auto ss = model::to_pseudo_state_space(tf, CompanionForm::bottom_row);
  REQUIRE(ss.orders == std::vector<double>{1.0, 1.0});

  for (double omega : {0.1, 0.7, 3.0}) {
    const auto frac = model::frequency_response(ss, omega, ResolventMode::fractional);
    const auto lit = model::frequency_response(ss, omega, ResolventMode::literal);
    CHECK(std::abs(frac(0, 0) - lit(0, 0)) <= 1e-14);
  }

  // And the literal response of the two-pole system is the classical one.
  const double omega = 0.7;
  const Complex jw(0.0, omega);
  const Complex expected = 1.0 / (jw * jw + 3.0 * jw + 2.0);
  CHECK(std::abs(model::frequency_response(ss, omega, ResolventMode::literal)(0, 0) - expected) <=
        1e-14);
}
