#include <gtest/gtest.h>

#include <cstring>
#include <random>

#include "scef/linalg.hpp"
#include "test_util.hpp"

using namespace scef;

namespace {

Matrix reconstruct(const SvdResult& svd) {
    Matrix s(svd.singular.size(), svd.singular.size());
    for (std::size_t k = 0; k < svd.singular.size(); ++k) s(k, k) = svd.singular[k];
    return matmul(matmul(svd.left, s), transpose(svd.right));
}

void expect_orthonormal_columns(const Matrix& m, double tol) {
    const Matrix gram = matmul(transpose(m), m);
    for (std::size_t a = 0; a < gram.rows; ++a)
        for (std::size_t b = 0; b < gram.cols; ++b)
            EXPECT_NEAR(gram(a, b), a == b ? 1.0 : 0.0, tol);
}

} // namespace

TEST(Vectorize, ColumnMajorDefinition) {
    Matrix w(2, 2);
    w(0, 0) = 1;
    w(0, 1) = 2;
    w(1, 0) = 3;
    w(1, 1) = 4;
    const std::vector<double> v = vectorize_filter(w);
    ASSERT_EQ(v.size(), 4u);
    EXPECT_DOUBLE_EQ(v[0], 1);
    EXPECT_DOUBLE_EQ(v[1], 3);
    EXPECT_DOUBLE_EQ(v[2], 2);
    EXPECT_DOUBLE_EQ(v[3], 4);
}

TEST(Vectorize, ZeroMatrixAndRoundTrip) {
    Matrix z(3, 3);
    for (double v : vectorize_filter(z)) EXPECT_DOUBLE_EQ(v, 0.0);

    std::mt19937_64 rng(5);
    const Matrix w = test::random_matrix(3, 3, rng);
    const std::vector<double> v = vectorize_filter(w);
    double back[9];
    devectorize_filter(v.data(), 3, back);
    for (std::size_t t = 0; t < 9; ++t) EXPECT_DOUBLE_EQ(back[t], w.a[t]);
}

TEST(Vectorize, InnerProductsEqualFrobenius) {
    std::mt19937_64 rng(9);
    const Matrix a = test::random_matrix(3, 3, rng);
    const Matrix b = test::random_matrix(3, 3, rng);
    const std::vector<double> va = vectorize_filter(a);
    const std::vector<double> vb = vectorize_filter(b);
    double dot = 0.0, frob = 0.0;
    for (std::size_t t = 0; t < 9; ++t) dot += va[t] * vb[t];
    for (std::size_t t = 0; t < 9; ++t) frob += a.a[t] * b.a[t];
    EXPECT_NEAR(dot, frob, 1e-12);
}

TEST(SmallSvd, DiagonalMatrix) {
    Matrix m(2, 2);
    m(0, 0) = 3.0;
    m(1, 1) = 2.0;
    const SvdResult svd = small_svd(m);
    ASSERT_EQ(svd.singular.size(), 2u);
    EXPECT_NEAR(svd.singular[0], 3.0, 1e-12);
    EXPECT_NEAR(svd.singular[1], 2.0, 1e-12);
}

TEST(SmallSvd, OrthonormalColumnsGiveUnitSingulars) {
    std::mt19937_64 rng(13);
    // Orthonormalize a random 9x4 by running it through small_svd once.
    const SvdResult basis = small_svd(test::random_matrix(9, 4, rng));
    const SvdResult svd = small_svd(basis.left);
    for (double s : svd.singular) EXPECT_NEAR(s, 1.0, 1e-12);
}

TEST(SmallSvd, MatchesGramEigenOracle) {
    std::mt19937_64 rng(17);
    const Matrix m = test::random_matrix(9, 16, rng);
    const SvdResult svd = small_svd(m);
    const std::vector<double> eig = test::symmetric_eigenvalues(matmul(transpose(m), m));
    ASSERT_GE(eig.size(), svd.singular.size());
    for (std::size_t k = 0; k < svd.singular.size(); ++k) {
        const double want = std::sqrt(std::max(0.0, eig[k]));
        EXPECT_NEAR(svd.singular[k], want, 1e-9 * std::max(1.0, want));
    }
}

TEST(SmallSvd, FactorsSatisfyInvariants) {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t K = std::vector<std::size_t>{1, 4, 9, 25}[rng() % 4];
        const std::size_t c = 1 + rng() % 32;
        const Matrix m = test::random_matrix(K, c, rng);
        const SvdResult svd = small_svd(m);
        const std::size_t p = std::min(K, c);
        ASSERT_EQ(svd.singular.size(), p);
        ASSERT_EQ(svd.left.rows, K);
        ASSERT_EQ(svd.left.cols, p);
        ASSERT_EQ(svd.right.rows, c);
        ASSERT_EQ(svd.right.cols, p);
        for (std::size_t k = 0; k + 1 < p; ++k) ASSERT_GE(svd.singular[k], svd.singular[k + 1]);
        ASSERT_GE(svd.singular.back(), 0.0);
        expect_orthonormal_columns(svd.left, 1e-10);
        expect_orthonormal_columns(svd.right, 1e-10);
        const Matrix rec = reconstruct(svd);
        double err = 0.0, norm = 0.0;
        for (std::size_t t = 0; t < m.a.size(); ++t) {
            const double d = rec.a[t] - m.a[t];
            err += d * d;
            norm += m.a[t] * m.a[t];
        }
        ASSERT_LE(std::sqrt(err), 1e-9 * std::sqrt(norm));
    }
}

TEST(SmallSvd, ReconstructionOnThousandRandomMatrices) {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t K = std::vector<std::size_t>{1, 4, 9, 25}[rng() % 4];
        const std::size_t c = 1 + rng() % 32;
        const Matrix m = test::random_matrix(K, c, rng);
        const SvdResult svd = small_svd(m);
        const Matrix rec = reconstruct(svd);
        double err = 0.0, norm = 0.0;
        for (std::size_t t = 0; t < m.a.size(); ++t) {
            const double d = rec.a[t] - m.a[t];
            err += d * d;
            norm += m.a[t] * m.a[t];
        }
        ASSERT_LE(std::sqrt(err), 1e-9 * std::sqrt(norm)) << "trial " << trial;
    }
}

TEST(SmallSvd, DeterministicBytes) {
    std::mt19937_64 rng(29);
    const Matrix m = test::random_matrix(9, 7, rng);
    const SvdResult a = small_svd(m);
    const SvdResult b = small_svd(m);
    ASSERT_EQ(a.left.a.size(), b.left.a.size());
    EXPECT_EQ(std::memcmp(a.left.a.data(), b.left.a.data(), a.left.a.size() * 8), 0);
    EXPECT_EQ(std::memcmp(a.right.a.data(), b.right.a.data(), a.right.a.size() * 8), 0);
    EXPECT_EQ(std::memcmp(a.singular.data(), b.singular.data(), a.singular.size() * 8), 0);
}

TEST(SmallSvd, SignConventionLargestEntryNonNegative) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix m = test::random_matrix(9, 5, rng);
        const SvdResult svd = small_svd(m);
        for (std::size_t k = 0; k < svd.left.cols; ++k) {
            std::size_t pivot = 0;
            double best = -1.0;
            for (std::size_t r = 0; r < svd.left.rows; ++r)
                if (std::fabs(svd.left(r, k)) > best) {
                    best = std::fabs(svd.left(r, k));
                    pivot = r;
                }
            EXPECT_GE(svd.left(pivot, k), 0.0);
        }
    }
}

TEST(SmallSvd, RankDeficientStillOrthonormal) {
    // Rank-1 9x4: three singular values are zero; fill must stay orthonormal.
    std::mt19937_64 rng(37);
    Matrix m(9, 4);
    std::normal_distribution<double> normal;
    std::vector<double> u(9), v(4);
    for (double& x : u) x = normal(rng);
    for (double& x : v) x = normal(rng);
    for (std::size_t r = 0; r < 9; ++r)
        for (std::size_t c = 0; c < 4; ++c) m(r, c) = u[r] * v[c];
    const SvdResult svd = small_svd(m);
    expect_orthonormal_columns(svd.left, 1e-10);
    EXPECT_GT(svd.singular[0], 0.0);
    for (std::size_t k = 1; k < 4; ++k) EXPECT_NEAR(svd.singular[k], 0.0, 1e-12);
}

TEST(SmallSvd, Errors) {
    Matrix nan_m(2, 2);
    nan_m(0, 0) = std::nan("");
    EXPECT_THROW(small_svd(nan_m), numeric_error);
    EXPECT_THROW(small_svd(Matrix()), dimension_error);
    EXPECT_THROW(small_svd(Matrix(65, 2)), parameter_error);
}

TEST(SpectralNorm, IdentityAndRankOne) {
    EXPECT_NEAR(spectral_norm(Matrix::identity(5)), 1.0, 1e-12);
    std::mt19937_64 rng(41);
    std::vector<double> u(6), v(4);
    std::normal_distribution<double> normal;
    double un = 0, vn = 0;
    for (double& x : u) {
        x = normal(rng);
        un += x * x;
    }
    for (double& x : v) {
        x = normal(rng);
        vn += x * x;
    }
    Matrix m(6, 4);
    for (std::size_t r = 0; r < 6; ++r)
        for (std::size_t c = 0; c < 4; ++c)
            m(r, c) = u[r] / std::sqrt(un) * v[c] / std::sqrt(vn);
    EXPECT_NEAR(spectral_norm(m), 1.0, 1e-10);
}

TEST(SpectralNorm, MatchesSmallSvd) {
    std::mt19937_64 rng(43);
    const Matrix m = test::random_matrix(8, 8, rng);
    EXPECT_NEAR(spectral_norm(m), small_svd(m).singular[0], 1e-12);
}

TEST(SpectralNorm, TallMatrixViaTransposeAndPowerIteration) {
    std::mt19937_64 rng(47);
    const Matrix tall = test::random_matrix(100, 8, rng);
    const double via_transpose = spectral_norm(tall);
    const std::vector<double> eig = test::symmetric_eigenvalues(matmul(transpose(tall), tall));
    EXPECT_NEAR(via_transpose, std::sqrt(eig[0]), 1e-8 * std::sqrt(eig[0]));

    const Matrix big = test::random_matrix(70, 70, rng);
    const std::vector<double> eig_big = test::symmetric_eigenvalues(matmul(transpose(big), big));
    EXPECT_NEAR(spectral_norm(big), std::sqrt(eig_big[0]), 1e-6 * std::sqrt(eig_big[0]));
}
