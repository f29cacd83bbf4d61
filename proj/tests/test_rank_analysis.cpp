#include <gtest/gtest.h>

#include <random>

#include "scef/rank_analysis.hpp"
#include "test_util.hpp"

using namespace scef;

namespace {

// Bank whose per-channel filter matrices are built from exactly rho
// orthonormal directions with singular values in [0.5, 1]: the effective
// rank at gamma = 0.3 is rho by construction.
FilterBank constructed_rank_bank(std::size_t c_in, std::size_t c_out, std::size_t h,
                                 std::size_t rho, std::mt19937_64& rng) {
    FilterBank bank(c_out, c_in, h);
    const std::size_t K = h * h;
    for (std::size_t i = 0; i < c_in; ++i) {
        const Matrix u = small_svd(test::random_matrix(K, rho, rng)).left;     // K×rho
        const Matrix v = small_svd(test::random_matrix(c_out, rho, rng)).left; // c_out×rho
        Matrix m(K, c_out);
        for (std::size_t k = 0; k < rho; ++k) {
            const double sigma = 1.0 - 0.5 * static_cast<double>(k) /
                                           std::max<std::size_t>(1, rho);
            for (std::size_t row = 0; row < K; ++row)
                for (std::size_t col = 0; col < c_out; ++col)
                    m(row, col) += sigma * u(row, k) * v(col, k);
        }
        for (std::size_t j = 0; j < c_out; ++j) {
            std::vector<double> column(K);
            for (std::size_t row = 0; row < K; ++row) column[row] = m(row, j);
            devectorize_filter(column.data(), h, bank.filter(j, i));
        }
    }
    return bank;
}

Matrix matrix_with_spectrum(const std::vector<double>& sigma, std::size_t rows,
                            std::size_t cols, std::mt19937_64& rng) {
    const Matrix u = small_svd(test::random_matrix(rows, sigma.size(), rng)).left;
    const Matrix v = small_svd(test::random_matrix(cols, sigma.size(), rng)).left;
    Matrix m(rows, cols);
    for (std::size_t k = 0; k < sigma.size(); ++k)
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) m(r, c) += sigma[k] * u(r, k) * v(c, k);
    return m;
}

} // namespace

TEST(ChannelEffectiveRank, FlatSpectrumCountsEverything) {
    std::mt19937_64 rng(3);
    const Matrix iso = small_svd(test::random_matrix(9, 4, rng)).left; // orthonormal columns
    EXPECT_EQ(channel_effective_rank(iso, 0.3), 4u);
    EXPECT_EQ(channel_effective_rank(iso, 1.0), 4u);
}

TEST(ChannelEffectiveRank, DirectCountOnKnownSpectrum) {
    std::mt19937_64 rng(5);
    const Matrix m = matrix_with_spectrum({1.0, 0.5, 0.2}, 9, 6, rng);
    EXPECT_EQ(channel_effective_rank(m, 0.3), 2u);
    EXPECT_EQ(channel_effective_rank(m, 0.1), 3u);
    // gamma = 0 counts the full min(K, c_out) including zero singular values
    EXPECT_EQ(channel_effective_rank(m, 0.0), 6u);
}

TEST(ChannelEffectiveRank, ZeroChannelAndErrors) {
    EXPECT_EQ(channel_effective_rank(Matrix(9, 4), 0.3), 0u);
    std::mt19937_64 rng(7);
    const Matrix m = test::random_matrix(4, 4, rng);
    EXPECT_THROW(channel_effective_rank(m, -0.1), parameter_error);
    EXPECT_THROW(channel_effective_rank(m, 1.5), parameter_error);
    Matrix bad(2, 2);
    bad(0, 0) = std::nan("");
    EXPECT_THROW(channel_effective_rank(bad, 0.3), numeric_error);
}

TEST(LayerEffectiveRank, ConstructedRankIsRecovered) {
    std::mt19937_64 rng(11);
    for (std::size_t rho : {1u, 3u, 5u}) {
        const FilterBank bank = constructed_rank_bank(3, 12, 3, rho, rng);
        const EffRankReport report = layer_effective_rank(bank, 0.3);
        EXPECT_EQ(report.layer_rank, rho);
        for (std::size_t r_i : report.per_channel_ranks) EXPECT_EQ(r_i, rho);
        ASSERT_FALSE(report.normalized_spectrum.empty());
        EXPECT_NEAR(report.normalized_spectrum[0], 1.0, 1e-12);
        for (std::size_t k = 1; k < report.normalized_spectrum.size(); ++k)
            ASSERT_LE(report.normalized_spectrum[k], report.normalized_spectrum[k - 1] + 1e-12);
        double density_sum = 0.0;
        for (double d : report.histogram) density_sum += d;
        EXPECT_NEAR(density_sum, 1.0, 1e-12);
        EXPECT_NEAR(report.histogram[rho - 1], 1.0, 1e-12);
    }
}

TEST(LayerEffectiveRank, SingleOutputChannel) {
    std::mt19937_64 rng(13);
    const FilterBank bank = test::random_bank(1, 3, 3, rng);
    const EffRankReport report = layer_effective_rank(bank, 0.7);
    EXPECT_EQ(report.layer_rank, 1u);
}

TEST(LayerEffectiveRank, AllZeroBankIsFlagged) {
    FilterBank bank(4, 2, 3);
    const EffRankReport report = layer_effective_rank(bank, 0.3);
    EXPECT_TRUE(report.all_channels_zero);
    EXPECT_EQ(report.layer_rank, 0u);
    EXPECT_TRUE(report.normalized_spectrum.empty());
}

TEST(LayerEffectiveRank, MonotoneInGamma) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        const FilterBank bank = test::random_bank(1 + rng() % 12, 1 + rng() % 4, 3, rng);
        std::size_t prev_rank = SIZE_MAX;
        std::vector<std::size_t> prev_channels;
        for (double gamma : {0.0, 0.1, 0.3, 0.6, 0.9, 1.0}) {
            const EffRankReport report = layer_effective_rank(bank, gamma);
            ASSERT_LE(report.layer_rank, prev_rank);
            if (!prev_channels.empty())
                for (std::size_t i = 0; i < report.per_channel_ranks.size(); ++i)
                    ASSERT_LE(report.per_channel_ranks[i], prev_channels[i]);
            prev_rank = report.layer_rank;
            prev_channels = report.per_channel_ranks;
        }
    }
}

TEST(LayerEffectiveRank, InvariantToVectorizationOrderScalingAndPermutation) {
    std::mt19937_64 rng(19);
    const FilterBank bank = test::random_bank(6, 3, 3, rng);
    const EffRankReport base = layer_effective_rank(bank, 0.3);

    // Row-major instead of column-major stacking: transposing every filter
    // before the analysis realizes the alternative vec order.
    FilterBank transposed = bank;
    for (std::size_t j = 0; j < bank.c_out; ++j)
        for (std::size_t i = 0; i < bank.c_in; ++i)
            for (std::size_t p = 0; p < 3; ++p)
                for (std::size_t q = 0; q < 3; ++q)
                    transposed.filter(j, i)[q * 3 + p] = bank.filter(j, i)[p * 3 + q];
    const EffRankReport alt_vec = layer_effective_rank(transposed, 0.3);
    EXPECT_EQ(base.layer_rank, alt_vec.layer_rank);
    EXPECT_EQ(base.per_channel_ranks, alt_vec.per_channel_ranks);

    // Scaling one channel's filters by c > 0 changes nothing.
    FilterBank scaled = bank;
    for (std::size_t j = 0; j < bank.c_out; ++j)
        for (std::size_t t = 0; t < 9; ++t) scaled.filter(j, 1)[t] *= 17.5;
    const EffRankReport scaled_report = layer_effective_rank(scaled, 0.3);
    EXPECT_EQ(base.per_channel_ranks, scaled_report.per_channel_ranks);
    EXPECT_EQ(base.layer_rank, scaled_report.layer_rank);

    // Permuting output channels permutes matrix columns only.
    FilterBank permuted = bank;
    for (std::size_t j = 0; j < bank.c_out; ++j) {
        const std::size_t src = (j + 3) % bank.c_out;
        std::copy(bank.filter(src, 0), bank.filter(src, 0) + bank.c_in * 9,
                  permuted.filter(j, 0));
    }
    const EffRankReport permuted_report = layer_effective_rank(permuted, 0.3);
    EXPECT_EQ(base.per_channel_ranks, permuted_report.per_channel_ranks);
    EXPECT_EQ(base.layer_rank, permuted_report.layer_rank);
}

namespace {

NetworkConfig small_net_config() {
    NetworkConfig cfg;
    cfg.input = {2, 8, 8};
    LayerSpec conv3;
    conv3.kind = LayerKind::conv2d;
    conv3.c_out = 4;
    conv3.h = 3;
    LayerSpec conv1;
    conv1.kind = LayerKind::conv2d;
    conv1.c_out = 5;
    conv1.h = 1; // excluded from analysis
    LayerSpec scef;
    scef.kind = LayerKind::scef;
    scef.c_out = 6;
    scef.h = 3;
    scef.rank = 4;
    LayerSpec dense;
    dense.kind = LayerKind::dense;
    dense.c_out = 3;
    cfg.layers = {conv3, conv1, scef, dense};
    return cfg;
}

} // namespace

TEST(AnalyzeNetwork, SkipsOneByOneLayersAndMatchesPerLayerOracle) {
    const Network net = build_network(small_net_config(), 3);
    const std::vector<EffRankReport> reports = analyze_network(net, 0.3);
    ASSERT_EQ(reports.size(), 2u);
    EXPECT_EQ(reports[0].layer_index, 0u);
    EXPECT_EQ(reports[1].layer_index, 2u);
    EXPECT_EQ(reports[0].layer_depth, 0u);
    EXPECT_EQ(reports[1].layer_depth, 1u);
    for (const EffRankReport& r : reports) {
        const EffRankReport direct = layer_effective_rank(layer_bank(net, r.layer_index), 0.3);
        EXPECT_EQ(r.layer_rank, direct.layer_rank);
        EXPECT_EQ(r.per_channel_ranks, direct.per_channel_ranks);
    }
    // SCEF layer rank is capped by its parameterization rank.
    EXPECT_LE(reports[1].layer_rank, 4u);
}

TEST(RankTrajectory, ConstantSeriesHasZeroStd) {
    const Network net = build_network(small_net_config(), 5);
    const std::vector<Network> series(7, net);
    const RankTrajectory traj = rank_trajectory(series, 0.3);
    ASSERT_EQ(traj.ranks.size(), 7u);
    EXPECT_EQ(traj.window, 2u); // ceil(7/5)
    for (std::size_t s = 1; s < traj.ranks.size(); ++s) EXPECT_EQ(traj.ranks[s], traj.ranks[0]);
    for (double sd : traj.final_window_std) EXPECT_DOUBLE_EQ(sd, 0.0);
}

TEST(RankTrajectory, SingleCheckpointAndMismatch) {
    const Network net = build_network(small_net_config(), 5);
    const RankTrajectory traj = rank_trajectory({net}, 0.3);
    EXPECT_EQ(traj.ranks.size(), 1u);

    NetworkConfig other_cfg = small_net_config();
    other_cfg.layers[0].c_out = 7; // different topology
    const Network other = build_network(other_cfg, 5);
    EXPECT_THROW(rank_trajectory({net, other}, 0.3), consistency_error);
}

TEST(VerifyRobustnessBound, ZeroPerturbationAndScalarCase) {
    ScefParams p = init_scef(2, 3, 3, 4, 7);
    // enforce ||a|| <= eps = 1 by rescaling
    for (std::size_t i = 0; i < p.c_in; ++i)
        for (std::size_t j = 0; j < p.c_out; ++j) {
            double n2 = 0.0;
            for (std::size_t k = 0; k < p.r; ++k) n2 += p.coef(i, j, k) * p.coef(i, j, k);
            const double s = n2 > 0 ? 1.0 / std::sqrt(n2) : 1.0;
            for (std::size_t k = 0; k < p.r; ++k) p.coef(i, j, k) *= s;
        }
    RobustnessCheckConfig cfg;
    cfg.epsilon = 1.0;
    cfg.trials = 5;
    cfg.perturbation_scale = 0.0; // all-zero perturbations
    const RobustnessReport zero_report = verify_robustness_bound(p, cfg, 1);
    EXPECT_EQ(zero_report.violations, 0u);
    EXPECT_DOUBLE_EQ(zero_report.max_ratio, 0.0);

    // c_in = 1, r = 1, h = 1: the bound reduces to |a| |dI|_max <= eps ||dI||_2.
    ScefParams scalar = init_scef(1, 1, 1, 1, 9);
    scalar.coefficients[0] = 0.9;
    RobustnessCheckConfig scfg;
    scfg.epsilon = 1.0;
    scfg.trials = 200;
    scfg.image_size = 6;
    const RobustnessReport scalar_report = verify_robustness_bound(scalar, scfg, 11);
    EXPECT_EQ(scalar_report.violations, 0u);
    EXPECT_LE(scalar_report.max_ratio, 1.0);
}

TEST(VerifyRobustnessBound, MonteCarloHoldsWithMargin) {
    std::mt19937_64 rng(13);
    std::size_t total_checks = 0;
    double max_ratio = 0.0;
    for (int setup = 0; setup < 20; ++setup) {
        const std::size_t c_in = 1 + rng() % 4;
        const std::size_t c_out = 1 + rng() % 4;
        const std::size_t r = 1 + rng() % 9;
        ScefParams p = init_scef(c_in, c_out, 3, r, 1000 + setup);
        for (std::size_t i = 0; i < p.c_in; ++i)
            for (std::size_t j = 0; j < p.c_out; ++j) {
                double n2 = 0.0;
                for (std::size_t k = 0; k < p.r; ++k) n2 += p.coef(i, j, k) * p.coef(i, j, k);
                const double s = n2 > 0 ? 1.0 / std::sqrt(n2) : 1.0;
                for (std::size_t k = 0; k < p.r; ++k) p.coef(i, j, k) *= s;
            }
        RobustnessCheckConfig cfg;
        cfg.epsilon = 1.0;
        cfg.trials = 50;
        const RobustnessReport report = verify_robustness_bound(p, cfg, 500 + setup);
        EXPECT_EQ(report.violations, 0u);
        total_checks += report.checks;
        max_ratio = std::max(max_ratio, report.max_ratio);
    }
    EXPECT_GT(total_checks, 0u);
    EXPECT_LT(max_ratio, 1.0); // the bound is loose by at least sqrt(h)*r
}

TEST(VerifyRobustnessBound, HypothesisViolationsAreNamed) {
    ScefParams p = init_scef(2, 2, 3, 2, 17);
    ScefParams bad_norm = p;
    for (double& v : bad_norm.coefficients) v = 10.0; // ||a|| > eps
    RobustnessCheckConfig cfg;
    cfg.epsilon = 1.0;
    cfg.trials = 1;
    try {
        verify_robustness_bound(bad_norm, cfg, 1);
        FAIL() << "expected precondition_error";
    } catch (const precondition_error& e) {
        EXPECT_NE(std::string(e.what()).find("exceeds epsilon"), std::string::npos);
    }

    ScefParams bad_basis = p;
    for (double& v : bad_basis.eigen_filters.weights) v *= 1.5;
    for (double& v : bad_basis.coefficients) v = 0.0;
    EXPECT_THROW(verify_robustness_bound(bad_basis, cfg, 1), precondition_error);
}
