#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "qma/expression.hpp"

namespace {

using qma::Expression;
using qma::ExpressionError;

double eval(const std::string& text, std::vector<double> x = {0, 0, 0, 0}, double t = 0.0) {
    return Expression::parse(text)(x, t);
}

std::size_t error_column(const std::string& text, qma::ExpressionContext ctx = {}) {
    try {
        Expression::parse(text, ctx);
    } catch (const ExpressionError& e) {
        return e.column();
    }
    return 0;
}

TEST(Expression, Examples) {
    EXPECT_EQ(eval("8"), 8.0);
    EXPECT_EQ(eval("normq", {1, 2, 3, 4}), 30.0);
    EXPECT_EQ(eval("8*exp(t - normq)"), 8.0);
}

TEST(Expression, Precedence) {
    EXPECT_EQ(eval("1 + 2 * 3"), 7.0);
    EXPECT_EQ(eval("-2^2"), -4.0);
    EXPECT_EQ(eval("2^3^2"), 512.0);
    EXPECT_EQ(eval("2^-1"), 0.5);
    EXPECT_EQ(eval("8 - 3 - 2"), 3.0);
    EXPECT_EQ(eval("16 / 4 / 2"), 2.0);
    EXPECT_EQ(eval("(1 + 2) * 3"), 9.0);
    EXPECT_EQ(eval("--3"), 3.0);
    EXPECT_EQ(eval("2 * -3"), -6.0);
    EXPECT_EQ(eval("1e-3 * 1E3"), 1.0);
    EXPECT_EQ(eval("\xE2\x88\x92" "1"), -1.0);
}

TEST(Expression, FunctionsAndVariables) {
    const std::vector<double> x{1, -2, 0.5, 4};
    EXPECT_DOUBLE_EQ(eval("exp(x0) * log(x3)", x), std::exp(1.0) * std::log(4.0));
    EXPECT_EQ(eval("abs(x1) + sqrt(x3)", x), 4.0);
    EXPECT_EQ(eval("min(x0, x1) + max(x2, x3)", x), 2.0);
    EXPECT_EQ(eval("t * x2", x, 6.0), 3.0);
    const auto two = Expression::parse("x7 - x4", {2, false});
    const std::vector<double> y{0, 0, 0, 0, 1, 0, 0, 5};
    EXPECT_EQ(two(y), 4.0);
    EXPECT_FALSE(two.uses_t());
    EXPECT_TRUE(Expression::parse("t").uses_t());
}

TEST(Expression, ErrorsCarryColumns) {
    EXPECT_EQ(error_column("1 + * 2"), 5u);
    EXPECT_EQ(error_column("foo + 1"), 1u);
    EXPECT_EQ(error_column("2 * x4"), 5u);
    EXPECT_EQ(error_column("exp(1, 2)"), 1u);
    EXPECT_EQ(error_column("max(1)"), 1u);
    EXPECT_EQ(error_column("(1 + 2"), 7u);
    EXPECT_EQ(error_column("1 + 2)"), 6u);
    EXPECT_EQ(error_column("3 $ 4"), 3u);
    EXPECT_EQ(error_column(""), 1u);
    EXPECT_EQ(error_column("t + 1", {1, false}), 1u);
    EXPECT_EQ(error_column("normq(1)"), 6u);
    EXPECT_EQ(error_column("exp"), 1u);
    EXPECT_EQ(error_column("x01"), 1u);
    EXPECT_THROW(Expression::parse("1 2"), qma::InputError);
}

TEST(Expression, WrongCoordinateCount) {
    const std::vector<double> x{1, 2};
    EXPECT_THROW(Expression::parse("x0")(x), qma::InputError);
}

TEST(Expression, PrintParseRoundTrip) {
    for (const char* text : {"8", "-2^2", "2^3^2", "1 - (2 - 3) * 4 / x1", "8*exp(t - normq)",
                             "max(min(x0, x1), -abs(x2)) + sqrt(log(0.1 + normq))", "0.1 + 1e-300 * 3.14159",
                             "--x3 ^ -t"}) {
        const auto e = Expression::parse(text);
        const auto again = Expression::parse(e.to_string());
        EXPECT_TRUE(e.ast() == again.ast()) << text << " -> " << e.to_string();
        EXPECT_EQ(again.to_string(), e.to_string());
    }
}

TEST(Expression, RandomTreesRoundTrip) {
    std::mt19937_64 rng(99);
    std::function<std::string(int)> gen = [&](int depth) -> std::string {
        std::uniform_int_distribution<int> pick(0, depth <= 0 ? 2 : 9);
        switch (pick(rng)) {
            case 0: return std::to_string(std::uniform_real_distribution<double>(0, 10)(rng));
            case 1: return "x" + std::to_string(rng() % 4);
            case 2: return rng() % 2 ? "t" : "normq";
            case 3: return "-" + gen(depth - 1);
            case 4: return gen(depth - 1) + " + " + gen(depth - 1);
            case 5: return gen(depth - 1) + " * " + gen(depth - 1);
            case 6: return gen(depth - 1) + " ^ " + gen(depth - 1);
            case 7: return "(" + gen(depth - 1) + " - " + gen(depth - 1) + ")";
            case 8: return "max(" + gen(depth - 1) + ", " + gen(depth - 1) + ")";
            default: return "exp(" + gen(depth - 1) + ") / " + gen(depth - 1);
        }
    };
    for (int i = 0; i < 200; ++i) {
        const std::string text = gen(4);
        const auto e = Expression::parse(text);
        EXPECT_TRUE(e.ast() == Expression::parse(e.to_string()).ast()) << text;
        const std::vector<double> x{0.3, -0.1, 0.7, 0.2};
        const double a = e(x, 0.4), b = Expression::parse(e.to_string())(x, 0.4);
        EXPECT_TRUE(a == b || (std::isnan(a) && std::isnan(b))) << text;
    }
}

}  // namespace
