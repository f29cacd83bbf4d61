#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "scef/conv.hpp"
#include "scef/errors.hpp"
#include "scef/linalg.hpp"
#include "scef/tensor.hpp"

namespace scef {

/// Parameters of one SCEF layer: per input channel i a set of r orthonormal
/// eigen-filters u_k^(i) (h×h, orthonormal after vectorization) and per
/// output channel j a coefficient vector a_j^(i) of length r. The dense
/// filters the layer realizes are w_j^(i) = sum_k a[i][j][k] * u_k^(i).
struct ScefParams {
    std::size_t c_in = 0;
    std::size_t c_out = 0;
    std::size_t h = 0;
    std::size_t r = 0;
    bool frozen = false;              // eigen-filters excluded from training
    DepthwiseBank eigen_filters;      // (c_in, r, h, h)
    std::vector<double> coefficients; // (c_in, c_out, r)

    std::size_t K() const { return h * h; }

    double& coef(std::size_t i, std::size_t j, std::size_t k) {
        return coefficients[(i * c_out + j) * r + k];
    }
    double coef(std::size_t i, std::size_t j, std::size_t k) const {
        return coefficients[(i * c_out + j) * r + k];
    }

    /// Ū^(i): the K×r matrix whose columns are the vectorized eigen-filters.
    Matrix basis_matrix(std::size_t i) const {
        Matrix u(K(), r);
        for (std::size_t k = 0; k < r; ++k) {
            std::vector<double> v = vectorize_filter(eigen_filters.filter(i, k), h);
            for (std::size_t row = 0; row < K(); ++row) u(row, k) = v[row];
        }
        return u;
    }
};

/// Baseline dense convolution layer.
struct Conv2dParams {
    FilterBank bank;
    std::size_t stride = 1;
    Padding padding = Padding::same;
};

/// Gradients of the total loss with respect to one SCEF layer's parameters;
/// shapes mirror ScefParams.
struct ScefGrads {
    DepthwiseBank eigen_filters;
    std::vector<double> coefficients;
};

struct Conv2dGrads {
    FilterBank bank;
};

/// Algorithm: per input channel, orthonormalize a random K×r Gaussian matrix
/// by SVD and reshape its left singular vectors into the eigen-filters.
/// Coefficients are i.i.d. normal with fan-in style scale sqrt(2/(c_in*r)).
inline ScefParams init_scef(std::size_t c_in, std::size_t c_out, std::size_t h, std::size_t r,
                            std::uint64_t seed, bool frozen = false) {
    if (c_in == 0 || c_out == 0) throw parameter_error("init_scef: channel counts must be positive");
    const std::size_t K = h * h;
    if (r < 1 || r > K)
        throw parameter_error("init_scef: rank " + std::to_string(r) + " outside [1, " +
                              std::to_string(K) + "]");
    ScefParams params;
    params.c_in = c_in;
    params.c_out = c_out;
    params.h = h;
    params.r = r;
    params.frozen = frozen;
    params.eigen_filters = DepthwiseBank(c_in, r, h);
    params.coefficients.assign(c_in * c_out * r, 0.0);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> unit_normal(0.0, 1.0);
    for (std::size_t i = 0; i < c_in; ++i) {
        Matrix gauss(K, r);
        for (double& v : gauss.a) v = unit_normal(rng);
        const SvdResult svd = small_svd(gauss);
        std::vector<double> column(K);
        for (std::size_t k = 0; k < r; ++k) {
            for (std::size_t row = 0; row < K; ++row) column[row] = svd.left(row, k);
            devectorize_filter(column.data(), h, params.eigen_filters.filter(i, k));
        }
    }
    const double sd = std::sqrt(2.0 / static_cast<double>(c_in * r));
    for (double& v : params.coefficients) v = sd * unit_normal(rng);
    return params;
}

/// Dense bank equivalent to the SCEF parameterization.
inline FilterBank compose_filters(const ScefParams& params) {
    FilterBank bank(params.c_out, params.c_in, params.h);
    const std::size_t K = params.K();
    for (std::size_t j = 0; j < params.c_out; ++j)
        for (std::size_t i = 0; i < params.c_in; ++i) {
            double* w = bank.filter(j, i);
            for (std::size_t k = 0; k < params.r; ++k) {
                const double a = params.coef(i, j, k);
                if (a == 0.0) continue;
                const double* u = params.eigen_filters.filter(i, k);
                for (std::size_t t = 0; t < K; ++t) w[t] += a * u[t];
            }
        }
    return bank;
}

/// Vectorized filters of input channel i stacked as columns, K×c_out: the
/// matrix whose SVD drives the rank analysis and the compressor.
inline Matrix channel_matrix(const FilterBank& bank, std::size_t i) {
    const std::size_t K = bank.K();
    Matrix m(K, bank.c_out);
    for (std::size_t j = 0; j < bank.c_out; ++j) {
        const std::vector<double> v = vectorize_filter(bank.filter(j, i), bank.h);
        for (std::size_t row = 0; row < K; ++row) m(row, j) = v[row];
    }
    return m;
}

/// Forward path: depthwise pass with the eigen-filters (c_in*r intermediate
/// maps) followed by the pointwise combination with the coefficients.
inline Tensor4 scef_forward(const ScefParams& params, const Tensor4& input, std::size_t stride,
                            Padding padding) {
    if (input.channels != params.c_in)
        throw dimension_error("scef_forward: input has " + std::to_string(input.channels) +
                              " channels, layer expects " + std::to_string(params.c_in));
    const Tensor4 inter = depthwise_conv(input, params.eigen_filters, stride, padding);
    Tensor4 out(input.batch, params.c_out, inter.height, inter.width);
    const std::size_t plane = inter.height * inter.width;
    for (std::size_t b = 0; b < input.batch; ++b)
        for (std::size_t j = 0; j < params.c_out; ++j) {
            double* dst = out.plane(b, j);
            for (std::size_t i = 0; i < params.c_in; ++i)
                for (std::size_t k = 0; k < params.r; ++k) {
                    const double a = params.coef(i, j, k);
                    if (a == 0.0) continue;
                    const double* src = inter.plane(b, i * params.r + k);
                    for (std::size_t t = 0; t < plane; ++t) dst[t] += a * src[t];
                }
        }
    return out;
}

/// Exact gradients of the SCEF forward map. The eigen-filter block is zero
/// when the layer is frozen.
inline std::pair<ScefGrads, Tensor4> scef_backward(const ScefParams& params, const Tensor4& input,
                                                   const Tensor4& upstream, std::size_t stride,
                                                   Padding padding) {
    if (input.channels != params.c_in)
        throw dimension_error("scef_backward: input channel mismatch");
    const FilterBank composed = compose_filters(params);
    const FilterBank dense_grads =
        conv2d_grad_weights(input, upstream, params.c_out, params.h, stride, padding);
    Tensor4 input_grad =
        conv2d_grad_input(upstream, composed, input.height, input.width, stride, padding);

    ScefGrads grads;
    grads.eigen_filters = DepthwiseBank(params.c_in, params.r, params.h);
    grads.coefficients.assign(params.coefficients.size(), 0.0);
    const std::size_t K = params.K();
    for (std::size_t i = 0; i < params.c_in; ++i)
        for (std::size_t j = 0; j < params.c_out; ++j) {
            const double* gw = dense_grads.filter(j, i);
            for (std::size_t k = 0; k < params.r; ++k) {
                const double* u = params.eigen_filters.filter(i, k);
                double dot = 0.0;
                for (std::size_t t = 0; t < K; ++t) dot += gw[t] * u[t];
                grads.coefficients[(i * params.c_out + j) * params.r + k] = dot;
                if (!params.frozen) {
                    const double a = params.coef(i, j, k);
                    if (a != 0.0) {
                        double* gu = grads.eigen_filters.filter(i, k);
                        for (std::size_t t = 0; t < K; ++t) gu[t] += a * gw[t];
                    }
                }
            }
        }
    return {std::move(grads), std::move(input_grad)};
}

inline Tensor4 conv2d_forward(const Conv2dParams& params, const Tensor4& input) {
    return conv2d(input, params.bank, params.stride, params.padding);
}

inline std::pair<Conv2dGrads, Tensor4> conv2d_backward(const Conv2dParams& params,
                                                       const Tensor4& input,
                                                       const Tensor4& upstream) {
    Conv2dGrads grads;
    grads.bank = conv2d_grad_weights(input, upstream, params.bank.c_out, params.bank.h,
                                     params.stride, params.padding);
    Tensor4 input_grad = conv2d_grad_input(upstream, params.bank, input.height, input.width,
                                           params.stride, params.padding);
    return {std::move(grads), std::move(input_grad)};
}

} // namespace scef
