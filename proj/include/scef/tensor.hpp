#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "scef/errors.hpp"

namespace scef {

/// Dense 4-d tensor of doubles with shape (batch, channels, height, width),
/// row-major within an image. Feature maps and intermediate activations use
/// this container throughout.
struct Tensor4 {
    std::size_t batch = 0;
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> data;

    Tensor4() = default;
    Tensor4(std::size_t b, std::size_t c, std::size_t h, std::size_t w, double fill = 0.0)
        : batch(b), channels(c), height(h), width(w), data(b * c * h * w, fill) {}

    std::size_t size() const { return data.size(); }

    double& at(std::size_t b, std::size_t c, std::size_t y, std::size_t x) {
        return data[((b * channels + c) * height + y) * width + x];
    }
    double at(std::size_t b, std::size_t c, std::size_t y, std::size_t x) const {
        return data[((b * channels + c) * height + y) * width + x];
    }

    // Pointer to the start of one image plane.
    double* plane(std::size_t b, std::size_t c) {
        return data.data() + (b * channels + c) * height * width;
    }
    const double* plane(std::size_t b, std::size_t c) const {
        return data.data() + (b * channels + c) * height * width;
    }

    bool same_shape(const Tensor4& o) const {
        return batch == o.batch && channels == o.channels && height == o.height &&
               width == o.width;
    }

    std::string shape_str() const {
        return "(" + std::to_string(batch) + ", " + std::to_string(channels) + ", " +
               std::to_string(height) + ", " + std::to_string(width) + ")";
    }
};

/// Maximum absolute entry; 0 for an empty or all-zero tensor.
inline double inf_norm(const Tensor4& t) {
    double m = 0.0;
    for (double v : t.data) {
        double a = std::fabs(v);
        if (a > m) m = a;
    }
    return m;
}

inline bool all_finite(const Tensor4& t) {
    for (double v : t.data)
        if (!std::isfinite(v)) return false;
    return true;
}

} // namespace scef
