#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "l0sparse/features.hpp"
#include "l0sparse/rng.hpp"
#include "feature_oracle.hpp"

using namespace l0sparse;
using testutil::binomial;
using testutil::oracle_eval;
using testutil::oracle_monomials;

TEST(Library, PolynomialCounts) {
    EXPECT_EQ(library_dim_and_names(LibrarySpec::polynomial_lib(3), 4).n_features, 35u);
    EXPECT_EQ(library_dim_and_names(LibrarySpec::fourier_lib(1), 4).n_features, 8u);
}

TEST(Library, PolynomialNamesDegree2Dim2) {
    const FeatureMap map = library_dim_and_names(LibrarySpec::polynomial_lib(2), 2);
    const std::vector<std::string> expected = {"1", "x0", "x1", "x0^2", "x0*x1", "x1^2"};
    EXPECT_EQ(map.names, expected);
}

TEST(Library, NoInteractionNames) {
    LibrarySpec spec = LibrarySpec::polynomial_lib(3, true, /*interactions=*/false);
    const FeatureMap map = library_dim_and_names(spec, 2);
    const std::vector<std::string> expected = {"1", "x0", "x1", "x0^2", "x1^2", "x0^3", "x1^3"};
    EXPECT_EQ(map.names, expected);
}

TEST(Library, FourierNamesFrequencyMajor) {
    const FeatureMap map = library_dim_and_names(LibrarySpec::fourier_lib(2), 2);
    const std::vector<std::string> expected = {"sin(1*x0)", "cos(1*x0)", "sin(1*x1)", "cos(1*x1)",
                                               "sin(2*x0)", "cos(2*x0)", "sin(2*x1)", "cos(2*x1)"};
    EXPECT_EQ(map.names, expected);
}

TEST(Library, GeneralizedConcatenatesInOrder) {
    LibrarySpec spec = LibrarySpec::generalized_lib(
        {LibrarySpec::polynomial_lib(1), LibrarySpec::fourier_lib(1)});
    const FeatureMap map = library_dim_and_names(spec, 2);
    const std::vector<std::string> expected = {"1", "x0", "x1", "sin(1*x0)", "cos(1*x0)",
                                               "sin(1*x1)", "cos(1*x1)"};
    EXPECT_EQ(map.names, expected);
}

TEST(Library, DimensionFormula) {
    for (std::size_t dim = 1; dim <= 6; ++dim)
        for (int degree = 1; degree <= 4; ++degree) {
            const FeatureMap map = library_dim_and_names(LibrarySpec::polynomial_lib(degree), dim);
            EXPECT_EQ(map.n_features, binomial(dim + degree, degree))
                << "dim=" << dim << " degree=" << degree;
        }
}

TEST(Library, RejectsInvalidSpecs) {
    EXPECT_THROW(library_dim_and_names(LibrarySpec::polynomial_lib(0), 2), std::invalid_argument);
    EXPECT_THROW(library_dim_and_names(LibrarySpec::fourier_lib(0), 2), std::invalid_argument);
    EXPECT_THROW(library_dim_and_names(LibrarySpec::generalized_lib({}), 2), std::invalid_argument);
    EXPECT_THROW(library_dim_and_names(LibrarySpec::polynomial_lib(2), 0), std::invalid_argument);
}

TEST(Transform, PowersOfOne) {
    Matrix x(1, 3, {1.0, 1.0, 1.0});
    Matrix phi = transform(LibrarySpec::polynomial_lib(3), x);
    for (std::size_t f = 0; f < phi.cols(); ++f) EXPECT_DOUBLE_EQ(phi(0, f), 1.0);
}

TEST(Transform, HandExampleDegree2) {
    Matrix x(1, 2, {2.0, 3.0});
    Matrix phi = transform(LibrarySpec::polynomial_lib(2), x);
    const std::vector<double> expected = {1, 2, 3, 4, 6, 9};
    ASSERT_EQ(phi.cols(), expected.size());
    for (std::size_t f = 0; f < expected.size(); ++f) EXPECT_DOUBLE_EQ(phi(0, f), expected[f]);
}

TEST(Transform, FourierAtZero) {
    Matrix x(1, 4);
    Matrix phi = transform(LibrarySpec::fourier_lib(1), x);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_DOUBLE_EQ(phi(0, 2 * i), 0.0);      // sin
        EXPECT_DOUBLE_EQ(phi(0, 2 * i + 1), 1.0);  // cos
    }
}

TEST(Transform, MatchesBruteForceOracle) {
    Rng rng(13);
    for (std::size_t dim : {1u, 2u, 3u, 4u}) {
        for (int degree : {1, 2, 3}) {
            for (bool interactions : {true, false}) {
                for (bool bias : {true, false}) {
                    LibrarySpec spec = LibrarySpec::polynomial_lib(degree, bias, interactions);
                    const auto oracle = oracle_monomials(dim, degree, bias, interactions);
                    Matrix x(5, dim);
                    for (double& v : x.span()) v = rng.uniform(-2.0, 2.0);
                    Matrix phi = transform(spec, x);
                    ASSERT_EQ(phi.cols(), oracle.size());
                    for (std::size_t r = 0; r < x.rows(); ++r)
                        for (std::size_t f = 0; f < oracle.size(); ++f)
                            EXPECT_NEAR(phi(r, f), oracle_eval(oracle[f], x.row(r)), 1e-12);
                }
            }
        }
    }
}

TEST(Transform, FourierMatchesDirectEvaluation) {
    Rng rng(29);
    Matrix x(4, 3);
    for (double& v : x.span()) v = rng.uniform(-3.0, 3.0);
    Matrix phi = transform(LibrarySpec::fourier_lib(2), x);
    ASSERT_EQ(phi.cols(), 12u);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        std::size_t f = 0;
        for (int k = 1; k <= 2; ++k)
            for (std::size_t i = 0; i < 3; ++i) {
                EXPECT_NEAR(phi(r, f++), std::sin(k * x(r, i)), 1e-15);
                EXPECT_NEAR(phi(r, f++), std::cos(k * x(r, i)), 1e-15);
            }
    }
}

TEST(Transform, OrderingIsStableAcrossCalls) {
    const LibrarySpec spec = LibrarySpec::generalized_lib(
        {LibrarySpec::polynomial_lib(3), LibrarySpec::fourier_lib(2)});
    const FeatureMap a = library_dim_and_names(spec, 4);
    const FeatureMap b = library_dim_and_names(spec, 4);
    EXPECT_EQ(a.names, b.names);
    Matrix x(1, 4, {0.3, -1.2, 0.7, 2.2});
    EXPECT_TRUE(transform(spec, x) == transform(spec, x));
}
