#include <gtest/gtest.h>

#include <random>

#include "scef/compressor.hpp"
#include "test_util.hpp"

using namespace scef;

TEST(Compressor, FullRankReproducesBank) {
    std::mt19937_64 rng(3);
    const FilterBank bank = test::random_bank(6, 3, 3, rng);
    const auto [params, report] = compress_conv_to_scef(bank, std::min<std::size_t>(9, 6));
    const FilterBank rebuilt = compose_filters(params);
    for (std::size_t t = 0; t < bank.weights.size(); ++t)
        EXPECT_NEAR(rebuilt.weights[t], bank.weights[t], 1e-10);
    EXPECT_LE(report.total_error, 1e-10);
}

TEST(Compressor, ExactSubspaceIsLossless) {
    // Bank built from exactly 2 basis vectors per channel: r = 2 is exact.
    std::mt19937_64 rng(5);
    FilterBank bank(5, 2, 3);
    for (std::size_t i = 0; i < 2; ++i) {
        const Matrix u = small_svd(test::random_matrix(9, 2, rng)).left;
        for (std::size_t j = 0; j < 5; ++j) {
            std::normal_distribution<double> normal;
            const double a0 = normal(rng), a1 = normal(rng);
            std::vector<double> w(9);
            for (std::size_t row = 0; row < 9; ++row)
                w[row] = a0 * u(row, 0) + a1 * u(row, 1);
            devectorize_filter(w.data(), 3, bank.filter(j, i));
        }
    }
    const auto [params, report] = compress_conv_to_scef(bank, 2);
    EXPECT_LE(report.total_error, 1e-10);
    for (double e : report.per_channel_error) EXPECT_LE(e, 1e-10);
}

TEST(Compressor, EckartYoungTailOracle) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t c_in = 1 + rng() % 3;
        const std::size_t c_out = 2 + rng() % 14;
        const std::size_t h = (rng() % 2) ? 3 : 5;
        const FilterBank bank = test::random_bank(c_out, c_in, h, rng);
        const std::size_t p = std::min(h * h, c_out);
        const std::size_t r = 1 + rng() % p;
        const auto [params, report] = compress_conv_to_scef(bank, r);
        for (std::size_t i = 0; i < c_in; ++i) {
            const Matrix m = channel_matrix(bank, i);
            const std::vector<double> eig = test::symmetric_eigenvalues(matmul(transpose(m), m));
            double tail = 0.0;
            for (std::size_t k = r; k < std::min(p, eig.size()); ++k)
                tail += std::max(0.0, eig[k]);
            EXPECT_NEAR(report.per_channel_error[i], std::sqrt(tail), 1e-10)
                << "trial " << trial << " channel " << i;
        }
    }
}

TEST(Compressor, ErrorNonIncreasingInRank) {
    std::mt19937_64 rng(11);
    const FilterBank bank = test::random_bank(12, 2, 3, rng);
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t r = 1; r <= 9; ++r) {
        const auto [params, report] = compress_conv_to_scef(bank, r);
        ASSERT_LE(report.total_error, prev + 1e-12);
        prev = report.total_error;
    }
}

TEST(Compressor, SvdBasisBeatsRandomBases) {
    std::mt19937_64 rng(13);
    const FilterBank bank = test::random_bank(8, 2, 3, rng);
    const std::size_t r = 3;
    const auto [best, report] = compress_conv_to_scef(bank, r);
    for (int alt = 0; alt < 25; ++alt) {
        // Random orthonormal basis with least-squares-optimal coefficients:
        // the projection residual per channel must not beat the SVD basis.
        for (std::size_t i = 0; i < bank.c_in; ++i) {
            const Matrix u = small_svd(test::random_matrix(9, r, rng)).left;
            const Matrix m = channel_matrix(bank, i);
            double err_sq = 0.0;
            for (std::size_t j = 0; j < bank.c_out; ++j) {
                std::vector<double> w(9), proj(9, 0.0);
                for (std::size_t row = 0; row < 9; ++row) w[row] = m(row, j);
                for (std::size_t k = 0; k < r; ++k) {
                    double dot = 0.0;
                    for (std::size_t row = 0; row < 9; ++row) dot += u(row, k) * w[row];
                    for (std::size_t row = 0; row < 9; ++row) proj[row] += dot * u(row, k);
                }
                for (std::size_t row = 0; row < 9; ++row) {
                    const double d = w[row] - proj[row];
                    err_sq += d * d;
                }
            }
            ASSERT_GE(std::sqrt(err_sq) + 1e-12, report.per_channel_error[i]);
        }
    }
}

TEST(Compressor, ReportConsistencyAndCounts) {
    std::mt19937_64 rng(17);
    const FilterBank bank = test::random_bank(16, 4, 3, rng);
    const auto [params, report] = compress_conv_to_scef(bank, 4);
    const CompressionReport direct = reconstruction_error(bank, params);
    ASSERT_EQ(report.per_channel_error.size(), direct.per_channel_error.size());
    for (std::size_t i = 0; i < direct.per_channel_error.size(); ++i)
        EXPECT_DOUBLE_EQ(report.per_channel_error[i], direct.per_channel_error[i]);
    EXPECT_DOUBLE_EQ(report.total_error, direct.total_error);
    double total_sq = 0.0;
    for (double e : report.per_channel_error) total_sq += e * e;
    EXPECT_NEAR(report.total_error * report.total_error, total_sq, 1e-12);
    EXPECT_EQ(report.params_before, 16 * 4 * 9);
    EXPECT_EQ(report.params_after, 4 * 9 * 4 + 4 * 16 * 4);
    EXPECT_EQ(report.flops_before, 9 * 4 * 16);
    EXPECT_EQ(report.flops_after, 4 * 4 * (9 + 16));
}

TEST(Compressor, IdenticalBanksHaveZeroError) {
    std::mt19937_64 rng(19);
    const FilterBank bank = test::random_bank(6, 2, 3, rng);
    const auto [params, report] = compress_conv_to_scef(bank, 6);
    const CompressionReport again = reconstruction_error(bank, params);
    EXPECT_LE(again.total_error, 1e-10);

    FilterBank other = test::random_bank(6, 3, 3, rng); // c_in mismatch
    EXPECT_THROW(reconstruction_error(other, params), dimension_error);
}

TEST(Compressor, RandomPairMatchesDirectNorm) {
    std::mt19937_64 rng(23);
    const FilterBank bank = test::random_bank(5, 2, 3, rng);
    const ScefParams params = init_scef(2, 5, 3, 3, 99);
    const CompressionReport report = reconstruction_error(bank, params);
    const FilterBank composed = compose_filters(params);
    for (std::size_t i = 0; i < 2; ++i) {
        double sq = 0.0;
        for (std::size_t j = 0; j < 5; ++j)
            for (std::size_t t = 0; t < 9; ++t) {
                const double d = bank.filter(j, i)[t] - composed.filter(j, i)[t];
                sq += d * d;
            }
        EXPECT_NEAR(report.per_channel_error[i], std::sqrt(sq), 1e-12);
    }
}

TEST(Compressor, RankValidationAndBudget) {
    std::mt19937_64 rng(29);
    const FilterBank bank = test::random_bank(4, 2, 3, rng); // p = min(9, 4) = 4
    EXPECT_THROW(compress_conv_to_scef(bank, 0), parameter_error);
    EXPECT_THROW(compress_conv_to_scef(bank, 5), parameter_error);

    // Budget selection: relative error at the returned rank is within budget
    // and the next-smaller rank (if any) would exceed it.
    for (double budget : {0.0, 0.05, 0.2, 0.5}) {
        const std::size_t r = smallest_rank_within_budget(bank, budget);
        const auto [params, report] = compress_conv_to_scef(bank, r);
        EXPECT_LE(report.relative_error, budget + 1e-9);
        if (r > 1) {
            const auto [p2, smaller] = compress_conv_to_scef(bank, r - 1);
            EXPECT_GT(smaller.relative_error, budget);
        }
    }
}

TEST(CompressNetwork, SchedulePicksPerDepthRanks) {
    NetworkConfig cfg;
    cfg.input = {2, 12, 12};
    for (std::size_t c_out : {4u, 6u, 8u}) {
        LayerSpec conv;
        conv.kind = LayerKind::conv2d;
        conv.c_out = c_out;
        conv.h = 3;
        cfg.layers.push_back(conv);
    }
    LayerSpec dense;
    dense.kind = LayerKind::dense;
    dense.c_out = 2;
    cfg.layers.push_back(dense);
    const Network net = build_network(cfg, 7);

    CompressionOptions options;
    options.mode = CompressionMode::schedule;
    options.decay = RankDecay::linear;
    const auto [compressed, reports] = compress_network(net, options);
    ASSERT_EQ(reports.size(), 3u);
    EXPECT_EQ(reports[0].report.rank_used, 4u); // capped by min(K, c_out) = 4
    EXPECT_EQ(reports[1].report.rank_used, 5u); // linear schedule value
    EXPECT_EQ(reports[2].report.rank_used, 1u);
    EXPECT_EQ(compressed.config.rank_decay, RankDecay::none);
    for (const LayerCompressionReport& lr : reports) {
        EXPECT_EQ(compressed.config.layers[lr.layer_index].kind, LayerKind::scef);
        EXPECT_EQ(compressed.config.layers[lr.layer_index].rank, lr.report.rank_used);
    }
    // The compressed network still runs forward.
    std::mt19937_64 rng(31);
    const Tensor4 input = test::random_tensor(1, 2, 12, 12, rng);
    const ForwardTrace trace = network_forward(compressed, input);
    EXPECT_EQ(trace.classes, 2u);
}
