#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "scef/errors.hpp"
#include "scef/tensor.hpp"

namespace scef {

enum class Padding { valid, same };

inline const char* to_string(Padding p) { return p == Padding::valid ? "valid" : "same"; }

/// Dense bank of 2-d filters, shape (c_out, c_in, h, h), h odd.
struct FilterBank {
    std::size_t c_out = 0;
    std::size_t c_in = 0;
    std::size_t h = 0;
    std::vector<double> weights;

    FilterBank() = default;
    FilterBank(std::size_t co, std::size_t ci, std::size_t filter_h)
        : c_out(co), c_in(ci), h(filter_h), weights(co * ci * filter_h * filter_h, 0.0) {
        if (co == 0 || ci == 0) throw parameter_error("FilterBank: channel counts must be positive");
        if (filter_h == 0 || filter_h % 2 == 0)
            throw parameter_error("FilterBank: filter size must be odd and positive, got " +
                                  std::to_string(filter_h));
    }

    std::size_t K() const { return h * h; }

    double* filter(std::size_t j, std::size_t i) {
        return weights.data() + (j * c_in + i) * h * h;
    }
    const double* filter(std::size_t j, std::size_t i) const {
        return weights.data() + (j * c_in + i) * h * h;
    }
};

/// Filters applied channel-by-channel, shape (c_in, r, h, h); input channel i
/// convolved with filter (i, k) produces output channel i*r + k.
struct DepthwiseBank {
    std::size_t c_in = 0;
    std::size_t r = 0;
    std::size_t h = 0;
    std::vector<double> weights;

    DepthwiseBank() = default;
    DepthwiseBank(std::size_t ci, std::size_t rank, std::size_t filter_h)
        : c_in(ci), r(rank), h(filter_h), weights(ci * rank * filter_h * filter_h, 0.0) {
        if (ci == 0 || rank == 0) throw parameter_error("DepthwiseBank: dimensions must be positive");
        if (filter_h == 0 || filter_h % 2 == 0)
            throw parameter_error("DepthwiseBank: filter size must be odd and positive");
    }

    double* filter(std::size_t i, std::size_t k) {
        return weights.data() + (i * r + k) * h * h;
    }
    const double* filter(std::size_t i, std::size_t k) const {
        return weights.data() + (i * r + k) * h * h;
    }
};

struct ConvGeometry {
    std::size_t out_h = 0;
    std::size_t out_w = 0;
    std::ptrdiff_t pad_top = 0;
    std::ptrdiff_t pad_left = 0;
};

/// Output size and zero-fill amounts. Same-padding output is
/// floor(H/stride) × floor(W/stride) with the extra pixel of an odd pad on
/// the bottom/right; valid-padding is the standard shrinkage.
inline ConvGeometry conv_geometry(std::size_t H, std::size_t W, std::size_t h,
                                  std::size_t stride, Padding padding) {
    if (stride < 1) throw parameter_error("conv_geometry: stride must be >= 1");
    if (H == 0 || W == 0) throw dimension_error("conv_geometry: empty input");
    ConvGeometry g;
    if (padding == Padding::valid) {
        if (H < h || W < h)
            throw dimension_error("conv_geometry: valid-padding output would be empty for " +
                                  std::to_string(H) + "x" + std::to_string(W) + " input, " +
                                  std::to_string(h) + "x" + std::to_string(h) + " filter");
        g.out_h = (H - h) / stride + 1;
        g.out_w = (W - h) / stride + 1;
    } else {
        g.out_h = H / stride;
        g.out_w = W / stride;
        if (g.out_h == 0 || g.out_w == 0)
            throw dimension_error("conv_geometry: stride larger than input");
        const std::ptrdiff_t need_h = static_cast<std::ptrdiff_t>((g.out_h - 1) * stride + h) -
                                      static_cast<std::ptrdiff_t>(H);
        const std::ptrdiff_t need_w = static_cast<std::ptrdiff_t>((g.out_w - 1) * stride + h) -
                                      static_cast<std::ptrdiff_t>(W);
        g.pad_top = need_h > 0 ? need_h / 2 : 0;
        g.pad_left = need_w > 0 ? need_w / 2 : 0;
    }
    return g;
}

namespace detail {

// out[y, x] += sum_{p,q} in[y*stride + p - pad_top, x*stride + q - pad_left] * w[p, q]
// (cross-correlation, zero outside the input).
inline void corr_accumulate(const double* in, std::size_t H, std::size_t W, const double* w,
                            std::size_t h, std::size_t stride, std::ptrdiff_t pad_top,
                            std::ptrdiff_t pad_left, double* out, std::size_t out_h,
                            std::size_t out_w) {
    for (std::size_t y = 0; y < out_h; ++y) {
        const std::ptrdiff_t base_y = static_cast<std::ptrdiff_t>(y * stride) - pad_top;
        for (std::size_t x = 0; x < out_w; ++x) {
            const std::ptrdiff_t base_x = static_cast<std::ptrdiff_t>(x * stride) - pad_left;
            double acc = 0.0;
            for (std::size_t p = 0; p < h; ++p) {
                const std::ptrdiff_t yy = base_y + static_cast<std::ptrdiff_t>(p);
                if (yy < 0 || yy >= static_cast<std::ptrdiff_t>(H)) continue;
                const double* row = in + static_cast<std::size_t>(yy) * W;
                const double* wrow = w + p * h;
                for (std::size_t q = 0; q < h; ++q) {
                    const std::ptrdiff_t xx = base_x + static_cast<std::ptrdiff_t>(q);
                    if (xx < 0 || xx >= static_cast<std::ptrdiff_t>(W)) continue;
                    acc += row[static_cast<std::size_t>(xx)] * wrow[q];
                }
            }
            out[y * out_w + x] += acc;
        }
    }
}

// wgrad[p, q] += sum_{y,x} g[y, x] * in[y*stride + p - pad_top, x*stride + q - pad_left]
inline void corr_grad_weight(const double* in, std::size_t H, std::size_t W, const double* g,
                             std::size_t out_h, std::size_t out_w, std::size_t h,
                             std::size_t stride, std::ptrdiff_t pad_top, std::ptrdiff_t pad_left,
                             double* wgrad) {
    for (std::size_t y = 0; y < out_h; ++y) {
        const std::ptrdiff_t base_y = static_cast<std::ptrdiff_t>(y * stride) - pad_top;
        for (std::size_t x = 0; x < out_w; ++x) {
            const double gv = g[y * out_w + x];
            if (gv == 0.0) continue;
            const std::ptrdiff_t base_x = static_cast<std::ptrdiff_t>(x * stride) - pad_left;
            for (std::size_t p = 0; p < h; ++p) {
                const std::ptrdiff_t yy = base_y + static_cast<std::ptrdiff_t>(p);
                if (yy < 0 || yy >= static_cast<std::ptrdiff_t>(H)) continue;
                const double* row = in + static_cast<std::size_t>(yy) * W;
                double* wrow = wgrad + p * h;
                for (std::size_t q = 0; q < h; ++q) {
                    const std::ptrdiff_t xx = base_x + static_cast<std::ptrdiff_t>(q);
                    if (xx < 0 || xx >= static_cast<std::ptrdiff_t>(W)) continue;
                    wrow[q] += gv * row[static_cast<std::size_t>(xx)];
                }
            }
        }
    }
}

// igrad[y*stride + p - pad_top, x*stride + q - pad_left] += g[y, x] * w[p, q]
inline void corr_grad_input(const double* g, std::size_t out_h, std::size_t out_w,
                            const double* w, std::size_t h, std::size_t stride,
                            std::ptrdiff_t pad_top, std::ptrdiff_t pad_left, double* igrad,
                            std::size_t H, std::size_t W) {
    for (std::size_t y = 0; y < out_h; ++y) {
        const std::ptrdiff_t base_y = static_cast<std::ptrdiff_t>(y * stride) - pad_top;
        for (std::size_t x = 0; x < out_w; ++x) {
            const double gv = g[y * out_w + x];
            if (gv == 0.0) continue;
            const std::ptrdiff_t base_x = static_cast<std::ptrdiff_t>(x * stride) - pad_left;
            for (std::size_t p = 0; p < h; ++p) {
                const std::ptrdiff_t yy = base_y + static_cast<std::ptrdiff_t>(p);
                if (yy < 0 || yy >= static_cast<std::ptrdiff_t>(H)) continue;
                double* row = igrad + static_cast<std::size_t>(yy) * W;
                const double* wrow = w + p * h;
                for (std::size_t q = 0; q < h; ++q) {
                    const std::ptrdiff_t xx = base_x + static_cast<std::ptrdiff_t>(q);
                    if (xx < 0 || xx >= static_cast<std::ptrdiff_t>(W)) continue;
                    row[static_cast<std::size_t>(xx)] += gv * wrow[q];
                }
            }
        }
    }
}

} // namespace detail

/// 2-d cross-correlation (no kernel flip) of every input channel with the
/// bank, summed over input channels per output channel.
inline Tensor4 conv2d(const Tensor4& input, const FilterBank& filters, std::size_t stride,
                      Padding padding) {
    if (input.channels != filters.c_in)
        throw dimension_error("conv2d: input has " + std::to_string(input.channels) +
                              " channels, bank expects " + std::to_string(filters.c_in));
    if (input.size() == 0) throw dimension_error("conv2d: empty input " + input.shape_str());
    const ConvGeometry g = conv_geometry(input.height, input.width, filters.h, stride, padding);
    Tensor4 out(input.batch, filters.c_out, g.out_h, g.out_w);
    for (std::size_t b = 0; b < input.batch; ++b)
        for (std::size_t j = 0; j < filters.c_out; ++j)
            for (std::size_t i = 0; i < filters.c_in; ++i)
                detail::corr_accumulate(input.plane(b, i), input.height, input.width,
                                        filters.filter(j, i), filters.h, stride, g.pad_top,
                                        g.pad_left, out.plane(b, j), g.out_h, g.out_w);
    return out;
}

/// Per-channel cross-correlation: output channel i*r + k is input channel i
/// filtered with filters(i, k). Output has c_in*r channels.
inline Tensor4 depthwise_conv(const Tensor4& input, const DepthwiseBank& filters,
                              std::size_t stride, Padding padding) {
    if (input.channels != filters.c_in)
        throw dimension_error("depthwise_conv: input has " + std::to_string(input.channels) +
                              " channels, bank expects " + std::to_string(filters.c_in));
    if (input.size() == 0) throw dimension_error("depthwise_conv: empty input");
    const ConvGeometry g = conv_geometry(input.height, input.width, filters.h, stride, padding);
    Tensor4 out(input.batch, filters.c_in * filters.r, g.out_h, g.out_w);
    for (std::size_t b = 0; b < input.batch; ++b)
        for (std::size_t i = 0; i < filters.c_in; ++i)
            for (std::size_t k = 0; k < filters.r; ++k)
                detail::corr_accumulate(input.plane(b, i), input.height, input.width,
                                        filters.filter(i, k), filters.h, stride, g.pad_top,
                                        g.pad_left, out.plane(b, i * filters.r + k), g.out_h,
                                        g.out_w);
    return out;
}

/// Gradient of conv2d with respect to the bank weights.
inline FilterBank conv2d_grad_weights(const Tensor4& input, const Tensor4& upstream,
                                      std::size_t c_out, std::size_t h, std::size_t stride,
                                      Padding padding) {
    const ConvGeometry g = conv_geometry(input.height, input.width, h, stride, padding);
    if (upstream.batch != input.batch || upstream.channels != c_out ||
        upstream.height != g.out_h || upstream.width != g.out_w)
        throw dimension_error("conv2d_grad_weights: upstream shape " + upstream.shape_str() +
                              " does not match forward output");
    FilterBank grads(c_out, input.channels, h);
    for (std::size_t b = 0; b < input.batch; ++b)
        for (std::size_t j = 0; j < c_out; ++j)
            for (std::size_t i = 0; i < input.channels; ++i)
                detail::corr_grad_weight(input.plane(b, i), input.height, input.width,
                                         upstream.plane(b, j), g.out_h, g.out_w, h, stride,
                                         g.pad_top, g.pad_left, grads.filter(j, i));
    return grads;
}

/// Gradient of conv2d with respect to the input (transposed convolution).
inline Tensor4 conv2d_grad_input(const Tensor4& upstream, const FilterBank& filters,
                                 std::size_t in_h, std::size_t in_w, std::size_t stride,
                                 Padding padding) {
    const ConvGeometry g = conv_geometry(in_h, in_w, filters.h, stride, padding);
    if (upstream.channels != filters.c_out || upstream.height != g.out_h ||
        upstream.width != g.out_w)
        throw dimension_error("conv2d_grad_input: upstream shape " + upstream.shape_str() +
                              " does not match forward output");
    Tensor4 igrad(upstream.batch, filters.c_in, in_h, in_w);
    for (std::size_t b = 0; b < upstream.batch; ++b)
        for (std::size_t j = 0; j < filters.c_out; ++j)
            for (std::size_t i = 0; i < filters.c_in; ++i)
                detail::corr_grad_input(upstream.plane(b, j), g.out_h, g.out_w,
                                        filters.filter(j, i), filters.h, stride, g.pad_top,
                                        g.pad_left, igrad.plane(b, i), in_h, in_w);
    return igrad;
}

} // namespace scef
