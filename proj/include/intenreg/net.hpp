#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "intenreg/image.hpp"

namespace intenreg {

// Planar channel-major tensor (CHW), the working currency of the network.
struct Tensor {
    int ch = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(int c, int h, int w, double fill = 0.0)
        : ch(c), height(h), width(w), data(std::size_t(c) * h * w, fill) {}

    double& at(int c, int r, int x) {
        return data[(std::size_t(c) * height + r) * width + x];
    }
    const double& at(int c, int r, int x) const {
        return data[(std::size_t(c) * height + r) * width + x];
    }
    std::size_t size() const { return data.size(); }
    bool same_shape(const Tensor& o) const {
        return ch == o.ch && height == o.height && width == o.width;
    }
};

// One 3x3 convolution, zero padding 1, stride 1 or 2.
// Weight layout: [out_ch][in_ch][3][3] flattened row-major.
struct ConvLayer {
    int in_ch = 0;
    int out_ch = 0;
    int stride = 1;
    std::vector<double> weights;
    std::vector<double> bias;

    std::size_t weight_count() const { return std::size_t(out_ch) * in_ch * 9; }
};

// Fixed two-scale encoder-decoder:
//   enc1 2->16 s1, enc2 16->32 s2, mid 32->32 s1,
//   nearest x2 upsample, concat with the enc1 activation,
//   dec1 48->16 s1, head 16->2 s1 linear.
// Leaky-ReLU slope 0.2 after every conv except the head.
struct NetParams {
    ConvLayer enc1, enc2, mid, dec1, head;

    // He-normal init for the hidden convs; the head draws from
    // Normal(0, std 1e-3) with zero bias so a fresh net emits a
    // near-zero displacement field.
    static NetParams init(std::uint64_t seed);

    std::size_t param_count() const;
    std::vector<double> to_flat() const;
    void from_flat(const std::vector<double>& flat);

    void validate() const;
};

// Gradients shaped exactly like NetParams.
struct NetGrads {
    ConvLayer enc1, enc2, mid, dec1, head;
    std::vector<double> to_flat() const;
};

// Saved activations from one forward pass, consumed by backward().
struct ForwardTrace {
    Tensor input;               // 2 x H x W  [target; source]
    Tensor z1, z2, z3, z4;      // pre-activations
    Tensor a1, a2, a3, a4;      // post-leaky activations
    Tensor up, cat;             // upsample and skip concatenation
};

// Layer primitives, exposed so each one can be gradient-checked on its own.
void conv_shape(const ConvLayer& layer, int h, int w, int& oh, int& ow);
Tensor conv_forward(const ConvLayer& layer, const Tensor& in);
void conv_backward(const ConvLayer& layer, const Tensor& in, const Tensor& d_out,
                   ConvLayer& d_layer, Tensor* d_in);
Tensor leaky_forward(const Tensor& z);
Tensor leaky_backward(const Tensor& z, const Tensor& d_a);
Tensor upsample2(const Tensor& in);
Tensor upsample2_backward(const Tensor& d_out);
Tensor concat_channels(const Tensor& a, const Tensor& b);

// Runs the network on the stacked pair. H and W must be even and >= 8.
// When `trace` is given, every intermediate needed by backward() is kept.
DisplacementField forward(const NetParams& params, const Image2D& target,
                          const Image2D& source, ForwardTrace* trace = nullptr);

// Reverse-mode pass. `upstream` holds dLoss/dField. Also produces the
// gradient with respect to the stacked input when `grad_input` is given
// (both the skip and the main path contribute).
NetGrads backward(const NetParams& params, const ForwardTrace& trace,
                  const DisplacementField& upstream, Tensor* grad_input = nullptr);

// Versioned binary checkpoint; round-trips bit-exactly.
void save_checkpoint(const NetParams& params, const std::string& path);
NetParams load_checkpoint(const std::string& path);

}  // namespace intenreg
