#include "intenreg/net.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "intenreg/rng.hpp"

namespace intenreg {

namespace {

constexpr double kLeakySlope = 0.2;
constexpr char kMagic[8] = {'I', 'N', 'R', 'G', 'N', 'E', 'T', '1'};

}  // namespace

void conv_shape(const ConvLayer& layer, int h, int w, int& oh, int& ow) {
    oh = (h + 2 - 3) / layer.stride + 1;
    ow = (w + 2 - 3) / layer.stride + 1;
}

Tensor conv_forward(const ConvLayer& layer, const Tensor& in) {
    if (in.ch != layer.in_ch)
        throw DimensionError("conv: input has " + std::to_string(in.ch) +
                             " channels, layer expects " + std::to_string(layer.in_ch));
    int oh, ow;
    conv_shape(layer, in.height, in.width, oh, ow);
    Tensor out(layer.out_ch, oh, ow);
    const int s = layer.stride;
    for (int oc = 0; oc < layer.out_ch; ++oc) {
        double* op = &out.at(oc, 0, 0);
        const double b = layer.bias[oc];
        for (std::size_t i = 0, n = std::size_t(oh) * ow; i < n; ++i) op[i] = b;
        for (int ic = 0; ic < layer.in_ch; ++ic) {
            for (int kr = 0; kr < 3; ++kr) {
                for (int kc = 0; kc < 3; ++kc) {
                    const double wgt =
                        layer.weights[((std::size_t(oc) * layer.in_ch + ic) * 3 + kr) * 3 + kc];
                    if (wgt == 0.0) continue;
                    for (int orow = 0; orow < oh; ++orow) {
                        const int ir = orow * s + kr - 1;
                        if (ir < 0 || ir >= in.height) continue;
                        const double* ip = &in.at(ic, ir, 0);
                        double* orow_p = op + std::size_t(orow) * ow;
                        for (int ocol = 0; ocol < ow; ++ocol) {
                            const int icc = ocol * s + kc - 1;
                            if (icc < 0 || icc >= in.width) continue;
                            orow_p[ocol] += wgt * ip[icc];
                        }
                    }
                }
            }
        }
    }
    return out;
}

// Accumulates layer gradients and (optionally) the input gradient.
void conv_backward(const ConvLayer& layer, const Tensor& in, const Tensor& d_out,
                   ConvLayer& d_layer, Tensor* d_in) {
    d_layer.in_ch = layer.in_ch;
    d_layer.out_ch = layer.out_ch;
    d_layer.stride = layer.stride;
    d_layer.weights.assign(layer.weight_count(), 0.0);
    d_layer.bias.assign(std::size_t(layer.out_ch), 0.0);
    if (d_in) *d_in = Tensor(in.ch, in.height, in.width);

    const int s = layer.stride;
    const int oh = d_out.height, ow = d_out.width;
    for (int oc = 0; oc < layer.out_ch; ++oc) {
        const double* dop = &d_out.at(oc, 0, 0);
        double bacc = 0.0;
        for (std::size_t i = 0, n = std::size_t(oh) * ow; i < n; ++i) bacc += dop[i];
        d_layer.bias[oc] = bacc;
        for (int ic = 0; ic < layer.in_ch; ++ic) {
            for (int kr = 0; kr < 3; ++kr) {
                for (int kc = 0; kc < 3; ++kc) {
                    const std::size_t wi =
                        ((std::size_t(oc) * layer.in_ch + ic) * 3 + kr) * 3 + kc;
                    const double wgt = layer.weights[wi];
                    double wacc = 0.0;
                    for (int orow = 0; orow < oh; ++orow) {
                        const int ir = orow * s + kr - 1;
                        if (ir < 0 || ir >= in.height) continue;
                        const double* ip = &in.at(ic, ir, 0);
                        const double* drow = dop + std::size_t(orow) * ow;
                        double* dip = d_in ? &d_in->at(ic, ir, 0) : nullptr;
                        for (int ocol = 0; ocol < ow; ++ocol) {
                            const int icc = ocol * s + kc - 1;
                            if (icc < 0 || icc >= in.width) continue;
                            wacc += drow[ocol] * ip[icc];
                            if (dip) dip[icc] += wgt * drow[ocol];
                        }
                    }
                    d_layer.weights[wi] = wacc;
                }
            }
        }
    }
}

Tensor leaky_forward(const Tensor& z) {
    Tensor a = z;
    for (auto& v : a.data) v = v > 0.0 ? v : kLeakySlope * v;
    return a;
}

Tensor leaky_backward(const Tensor& z, const Tensor& d_a) {
    Tensor d_z = d_a;
    for (std::size_t i = 0; i < z.data.size(); ++i)
        if (z.data[i] <= 0.0) d_z.data[i] *= kLeakySlope;
    return d_z;
}

Tensor upsample2(const Tensor& in) {
    Tensor out(in.ch, in.height * 2, in.width * 2);
    for (int c = 0; c < in.ch; ++c)
        for (int r = 0; r < out.height; ++r) {
            const double* ip = &in.at(c, r / 2, 0);
            double* op = &out.at(c, r, 0);
            for (int x = 0; x < out.width; ++x) op[x] = ip[x / 2];
        }
    return out;
}

Tensor upsample2_backward(const Tensor& d_out) {
    Tensor d_in(d_out.ch, d_out.height / 2, d_out.width / 2);
    for (int c = 0; c < d_out.ch; ++c)
        for (int r = 0; r < d_out.height; ++r) {
            const double* dop = &d_out.at(c, r, 0);
            double* dip = &d_in.at(c, r / 2, 0);
            for (int x = 0; x < d_out.width; ++x) dip[x / 2] += dop[x];
        }
    return d_in;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    Tensor out(a.ch + b.ch, a.height, a.width);
    std::copy(a.data.begin(), a.data.end(), out.data.begin());
    std::copy(b.data.begin(), b.data.end(), out.data.begin() + a.data.size());
    return out;
}

namespace {

void fill_normal(std::vector<double>& v, Rng& rng, double stddev) {
    for (auto& x : v) x = rng.normal(0.0, stddev);
}

ConvLayer make_layer(int in_ch, int out_ch, int stride) {
    ConvLayer l;
    l.in_ch = in_ch;
    l.out_ch = out_ch;
    l.stride = stride;
    l.weights.assign(l.weight_count(), 0.0);
    l.bias.assign(std::size_t(out_ch), 0.0);
    return l;
}

void append_u64_le(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

std::uint64_t read_u64_le(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(p[i]) << (8 * i);
    return v;
}

}  // namespace

NetParams NetParams::init(std::uint64_t seed) {
    NetParams p;
    p.enc1 = make_layer(2, 16, 1);
    p.enc2 = make_layer(16, 32, 2);
    p.mid = make_layer(32, 32, 1);
    p.dec1 = make_layer(48, 16, 1);
    p.head = make_layer(16, 2, 1);

    // Distinct substreams per layer keep the draw independent of layer
    // traversal details.
    auto he = [&](ConvLayer& l, std::uint64_t stream) {
        Rng rng(mix_seed(seed, stream));
        fill_normal(l.weights, rng, std::sqrt(2.0 / double(l.in_ch * 9)));
    };
    he(p.enc1, 1);
    he(p.enc2, 2);
    he(p.mid, 3);
    he(p.dec1, 4);
    Rng rng(mix_seed(seed, 5));
    fill_normal(p.head.weights, rng, 1e-3);
    return p;
}

std::size_t NetParams::param_count() const {
    std::size_t n = 0;
    for (const ConvLayer* l : {&enc1, &enc2, &mid, &dec1, &head})
        n += l->weight_count() + l->bias.size();
    return n;
}

std::vector<double> NetParams::to_flat() const {
    std::vector<double> flat;
    flat.reserve(param_count());
    for (const ConvLayer* l : {&enc1, &enc2, &mid, &dec1, &head}) {
        flat.insert(flat.end(), l->weights.begin(), l->weights.end());
        flat.insert(flat.end(), l->bias.begin(), l->bias.end());
    }
    return flat;
}

void NetParams::from_flat(const std::vector<double>& flat) {
    if (flat.size() != param_count())
        throw DimensionError("NetParams::from_flat: expected " +
                             std::to_string(param_count()) + " values, got " +
                             std::to_string(flat.size()));
    std::size_t off = 0;
    for (ConvLayer* l : {&enc1, &enc2, &mid, &dec1, &head}) {
        std::copy(flat.begin() + off, flat.begin() + off + l->weight_count(),
                  l->weights.begin());
        off += l->weight_count();
        std::copy(flat.begin() + off, flat.begin() + off + l->bias.size(), l->bias.begin());
        off += l->bias.size();
    }
}

void NetParams::validate() const {
    for (const ConvLayer* l : {&enc1, &enc2, &mid, &dec1, &head}) {
        if (l->weights.size() != l->weight_count() ||
            l->bias.size() != std::size_t(l->out_ch))
            throw DimensionError("NetParams: tensor sizes do not match the architecture");
        for (double v : l->weights)
            if (!std::isfinite(v)) throw ValidationError("NetParams: non-finite weight");
        for (double v : l->bias)
            if (!std::isfinite(v)) throw ValidationError("NetParams: non-finite bias");
    }
}

std::vector<double> NetGrads::to_flat() const {
    std::vector<double> flat;
    for (const ConvLayer* l : {&enc1, &enc2, &mid, &dec1, &head}) {
        flat.insert(flat.end(), l->weights.begin(), l->weights.end());
        flat.insert(flat.end(), l->bias.begin(), l->bias.end());
    }
    return flat;
}

DisplacementField forward(const NetParams& params, const Image2D& target,
                          const Image2D& source, ForwardTrace* trace) {
    require_same_shape(target, source, "forward");
    const int h = target.height, w = target.width;
    if (h < 8 || w < 8 || h % 2 != 0 || w % 2 != 0)
        throw DimensionError("forward: input must be even-sized and at least 8x8, got " +
                             std::to_string(h) + "x" + std::to_string(w));

    Tensor input(2, h, w);
    std::copy(target.data.begin(), target.data.end(), input.data.begin());
    std::copy(source.data.begin(), source.data.end(),
              input.data.begin() + target.data.size());

    Tensor z1 = conv_forward(params.enc1, input);
    Tensor a1 = leaky_forward(z1);
    Tensor z2 = conv_forward(params.enc2, a1);
    Tensor a2 = leaky_forward(z2);
    Tensor z3 = conv_forward(params.mid, a2);
    Tensor a3 = leaky_forward(z3);
    Tensor up = upsample2(a3);
    Tensor cat = concat_channels(up, a1);
    Tensor z4 = conv_forward(params.dec1, cat);
    Tensor a4 = leaky_forward(z4);
    Tensor out = conv_forward(params.head, a4);

    DisplacementField field(h, w);
    std::copy(out.data.begin(), out.data.begin() + field.u_row.size(),
              field.u_row.begin());
    std::copy(out.data.begin() + field.u_row.size(), out.data.end(), field.u_col.begin());

    if (trace) {
        trace->input = std::move(input);
        trace->z1 = std::move(z1);
        trace->a1 = std::move(a1);
        trace->z2 = std::move(z2);
        trace->a2 = std::move(a2);
        trace->z3 = std::move(z3);
        trace->a3 = std::move(a3);
        trace->up = std::move(up);
        trace->cat = std::move(cat);
        trace->z4 = std::move(z4);
        trace->a4 = std::move(a4);
    }
    return field;
}

NetGrads backward(const NetParams& params, const ForwardTrace& trace,
                  const DisplacementField& upstream, Tensor* grad_input) {
    const int h = trace.input.height, w = trace.input.width;
    if (upstream.height != h || upstream.width != w)
        throw ValidationError("backward: upstream field does not match the traced input");
    if (trace.a4.ch != params.head.in_ch || trace.cat.ch != params.dec1.in_ch)
        throw ValidationError("backward: trace does not belong to these parameters");

    Tensor d_field(2, h, w);
    std::copy(upstream.u_row.begin(), upstream.u_row.end(), d_field.data.begin());
    std::copy(upstream.u_col.begin(), upstream.u_col.end(),
              d_field.data.begin() + upstream.u_row.size());

    NetGrads g;
    Tensor d_a4;
    conv_backward(params.head, trace.a4, d_field, g.head, &d_a4);
    Tensor d_z4 = leaky_backward(trace.z4, d_a4);
    Tensor d_cat;
    conv_backward(params.dec1, trace.cat, d_z4, g.dec1, &d_cat);

    // Split the concatenation: first 32 channels feed the upsample path,
    // the last 16 are the skip into a1.
    Tensor d_up(trace.up.ch, h, w);
    Tensor d_a1(trace.a1.ch, h, w);
    std::copy(d_cat.data.begin(), d_cat.data.begin() + d_up.data.size(),
              d_up.data.begin());
    std::copy(d_cat.data.begin() + d_up.data.size(), d_cat.data.end(), d_a1.data.begin());

    Tensor d_a3 = upsample2_backward(d_up);
    Tensor d_z3 = leaky_backward(trace.z3, d_a3);
    Tensor d_a2;
    conv_backward(params.mid, trace.a2, d_z3, g.mid, &d_a2);
    Tensor d_z2 = leaky_backward(trace.z2, d_a2);
    Tensor d_a1_main;
    conv_backward(params.enc2, trace.a1, d_z2, g.enc2, &d_a1_main);
    for (std::size_t i = 0; i < d_a1.data.size(); ++i)
        d_a1.data[i] += d_a1_main.data[i];
    Tensor d_z1 = leaky_backward(trace.z1, d_a1);
    conv_backward(params.enc1, trace.input, d_z1, g.enc1, grad_input);
    return g;
}

void save_checkpoint(const NetParams& params, const std::string& path) {
    params.validate();
    std::string buf(kMagic, sizeof kMagic);
    const ConvLayer* layers[] = {&params.enc1, &params.enc2, &params.mid, &params.dec1,
                                 &params.head};
    append_u64_le(buf, 5);  // layer count
    for (const ConvLayer* l : layers) {
        append_u64_le(buf, std::uint64_t(l->in_ch));
        append_u64_le(buf, std::uint64_t(l->out_ch));
        append_u64_le(buf, std::uint64_t(l->stride));
    }
    for (const ConvLayer* l : layers) {
        for (double v : l->weights) append_u64_le(buf, std::bit_cast<std::uint64_t>(v));
        for (double v : l->bias) append_u64_le(buf, std::bit_cast<std::uint64_t>(v));
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open checkpoint for writing: " + path);
    f.write(buf.data(), std::streamsize(buf.size()));
    if (!f) throw IoError("short write to checkpoint: " + path);
}

NetParams load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open checkpoint: " + path);
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    auto fail = [&](const std::string& why) {
        throw ParseError("checkpoint " + path + ": " + why);
    };
    if (buf.size() < sizeof kMagic + 8) fail("truncated header");
    if (std::memcmp(buf.data(), kMagic, sizeof kMagic) != 0) fail("bad magic");

    const unsigned char* p = reinterpret_cast<const unsigned char*>(buf.data());
    std::size_t off = sizeof kMagic;
    auto next_u64 = [&]() {
        if (off + 8 > buf.size()) fail("truncated");
        std::uint64_t v = read_u64_le(p + off);
        off += 8;
        return v;
    };

    if (next_u64() != 5) fail("unexpected layer count");
    NetParams out = NetParams::init(0);
    ConvLayer* layers[] = {&out.enc1, &out.enc2, &out.mid, &out.dec1, &out.head};
    for (ConvLayer* l : layers) {
        const auto in_ch = next_u64(), out_ch = next_u64(), stride = next_u64();
        if (in_ch != std::uint64_t(l->in_ch) || out_ch != std::uint64_t(l->out_ch) ||
            stride != std::uint64_t(l->stride))
            fail("architecture descriptor does not match this build");
    }
    for (ConvLayer* l : layers) {
        for (double& v : l->weights) v = std::bit_cast<double>(next_u64());
        for (double& v : l->bias) v = std::bit_cast<double>(next_u64());
    }
    if (off != buf.size()) fail("trailing bytes");
    out.validate();
    return out;
}

}  // namespace intenreg
