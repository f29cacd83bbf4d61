#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "scef/layers.hpp"
#include "scef/linalg.hpp"

namespace scef {

/// Norm applied to the orthonormality defect ŪᵀŪ − I. Spectral is the
/// default reading; Frobenius is offered as an alternative.
enum class Phi1Norm { spectral, frobenius };

struct RegWeights {
    double lambda1_base = 1e-4; // scaled per layer by its rank r
    double lambda2 = 1e-4;
    Phi1Norm phi1_norm = Phi1Norm::spectral;
};

struct LossBreakdown {
    double task_loss = 0.0;
    double phi1_total = 0.0;
    double phi2_total = 0.0;
    double total = 0.0;
};

struct Phi1Result {
    double value = 0.0;
    DepthwiseBank grad; // same shape as the eigen-filters
};

struct Phi2Result {
    double value = 0.0;
    std::vector<double> grad; // same layout as the coefficients
};

/// Orthonormality penalty: lambda1 * sum_i ||Ū^(i)ᵀŪ^(i) − I||. The gradient
/// of the spectral norm uses the top singular pair of the defect matrix; the
/// subgradient at a zero defect is zero.
inline Phi1Result phi1(const ScefParams& params, double lambda1,
                       Phi1Norm norm = Phi1Norm::spectral) {
    Phi1Result res;
    res.grad = DepthwiseBank(params.c_in, params.r, params.h);
    const std::size_t K = params.K();
    const std::size_t r = params.r;
    for (std::size_t i = 0; i < params.c_in; ++i) {
        const Matrix u = params.basis_matrix(i);
        Matrix defect = matmul(transpose(u), u);
        for (std::size_t k = 0; k < r; ++k) defect(k, k) -= 1.0;

        Matrix grad_u(K, r); // gradient of ||defect|| with respect to Ū
        if (norm == Phi1Norm::spectral) {
            const SvdResult svd = small_svd(defect);
            const double sigma = svd.singular[0];
            res.value += lambda1 * sigma;
            if (sigma > 0.0) {
                // d sigma_1 / dŪ = Ū (v1 u1ᵀ + u1 v1ᵀ)
                for (std::size_t row = 0; row < K; ++row)
                    for (std::size_t col = 0; col < r; ++col) {
                        double acc = 0.0;
                        for (std::size_t t = 0; t < r; ++t)
                            acc += u(row, t) * (svd.right(t, 0) * svd.left(col, 0) +
                                                svd.left(t, 0) * svd.right(col, 0));
                        grad_u(row, col) = lambda1 * acc;
                    }
            }
        } else {
            const double f = frobenius_norm(defect);
            res.value += lambda1 * f;
            if (f > 0.0) {
                const Matrix ud = matmul(u, defect);
                for (std::size_t row = 0; row < K; ++row)
                    for (std::size_t col = 0; col < r; ++col)
                        grad_u(row, col) = lambda1 * 2.0 * ud(row, col) / f;
            }
        }
        std::vector<double> column(K);
        for (std::size_t k = 0; k < r; ++k) {
            for (std::size_t row = 0; row < K; ++row) column[row] = grad_u(row, k);
            devectorize_filter(column.data(), params.h, res.grad.filter(i, k));
        }
    }
    return res;
}

/// Coefficient-norm penalty: lambda2 * sum_{i,j} ||a_j^(i)||_2, with
/// subgradient 0 at a zero vector.
inline Phi2Result phi2(const ScefParams& params, double lambda2) {
    Phi2Result res;
    res.grad.assign(params.coefficients.size(), 0.0);
    for (std::size_t i = 0; i < params.c_in; ++i)
        for (std::size_t j = 0; j < params.c_out; ++j) {
            const std::size_t base = (i * params.c_out + j) * params.r;
            double n2 = 0.0;
            for (std::size_t k = 0; k < params.r; ++k) {
                const double a = params.coefficients[base + k];
                n2 += a * a;
            }
            const double n = std::sqrt(n2);
            res.value += lambda2 * n;
            if (n > 0.0)
                for (std::size_t k = 0; k < params.r; ++k)
                    res.grad[base + k] = lambda2 * params.coefficients[base + k] / n;
        }
    return res;
}

/// Total objective: task loss plus both penalties summed over the SCEF
/// layers, with the per-layer lambda1 = lambda1_base * r rule applied.
inline LossBreakdown total_loss(double task, const std::vector<ScefParams>& layers,
                                const RegWeights& weights) {
    LossBreakdown b;
    b.task_loss = task;
    for (const ScefParams& layer : layers) {
        const double lambda1 = weights.lambda1_base * static_cast<double>(layer.r);
        b.phi1_total += phi1(layer, lambda1, weights.phi1_norm).value;
        b.phi2_total += phi2(layer, weights.lambda2).value;
    }
    b.total = b.task_loss + b.phi1_total + b.phi2_total;
    return b;
}

} // namespace scef
