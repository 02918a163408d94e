#include "stedge/model.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <random>

namespace stedge::model {

namespace fs = std::filesystem;

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

std::string stage_name(int s, const char* part) { return "stage" + std::to_string(s) + "." + part; }

// ---------------------------------------------------------------------------
// 3x3 convolution, zero padding, stride 1.

std::vector<double> im2col(const Tensor& x) {
    const int H = x.height;
    const int W = x.width;
    const std::size_t hw = x.plane_size();
    std::vector<double> cols(static_cast<std::size_t>(x.channels) * 9 * hw, 0.0);
    for (int c = 0; c < x.channels; ++c) {
        const double* src = x.data.data() + c * hw;
        for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
                double* row = cols.data() + (static_cast<std::size_t>(c) * 9 + ky * 3 + kx) * hw;
                for (int y = 0; y < H; ++y) {
                    const int sy = y + ky - 1;
                    if (sy < 0 || sy >= H) continue;
                    const int x0 = std::max(0, 1 - kx);
                    const int x1 = std::min(W, W + 1 - kx);
                    const double* s = src + static_cast<std::size_t>(sy) * W + (kx - 1);
                    double* d = row + static_cast<std::size_t>(y) * W;
                    for (int xx = x0; xx < x1; ++xx) d[xx] = s[xx];
                }
            }
        }
    }
    return cols;
}

void col2im_add(const std::vector<double>& cols, Tensor& dx) {
    const int H = dx.height;
    const int W = dx.width;
    const std::size_t hw = dx.plane_size();
    for (int c = 0; c < dx.channels; ++c) {
        double* dst = dx.data.data() + c * hw;
        for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
                const double* row = cols.data() + (static_cast<std::size_t>(c) * 9 + ky * 3 + kx) * hw;
                for (int y = 0; y < H; ++y) {
                    const int sy = y + ky - 1;
                    if (sy < 0 || sy >= H) continue;
                    const int x0 = std::max(0, 1 - kx);
                    const int x1 = std::min(W, W + 1 - kx);
                    double* d = dst + static_cast<std::size_t>(sy) * W + (kx - 1);
                    const double* s = row + static_cast<std::size_t>(y) * W;
                    for (int xx = x0; xx < x1; ++xx) d[xx] += s[xx];
                }
            }
        }
    }
}

Tensor conv3x3(const Tensor& x, std::span<const double> weight, std::span<const double> bias, int out_channels) {
    const std::vector<double> cols = im2col(x);
    const std::size_t hw = x.plane_size();
    Tensor out(out_channels, x.height, x.width);
    ConstMatrixMap w(weight.data(), out_channels, x.channels * 9);
    ConstMatrixMap c(cols.data(), x.channels * 9, static_cast<Eigen::Index>(hw));
    MatrixMap o(out.data.data(), out_channels, static_cast<Eigen::Index>(hw));
    o.noalias() = w * c;
    for (int co = 0; co < out_channels; ++co) o.row(co).array() += bias[co];
    return out;
}

// Accumulates weight/bias gradients and returns the input gradient.
Tensor conv3x3_backward(const Tensor& x, const Tensor& dout, std::span<const double> weight,
                        std::span<double> dweight, std::span<double> dbias) {
    const std::vector<double> cols = im2col(x);
    const std::size_t hw = x.plane_size();
    const int cin9 = x.channels * 9;
    ConstMatrixMap w(weight.data(), dout.channels, cin9);
    ConstMatrixMap c(cols.data(), cin9, static_cast<Eigen::Index>(hw));
    ConstMatrixMap g(dout.data.data(), dout.channels, static_cast<Eigen::Index>(hw));
    MatrixMap dw(dweight.data(), dout.channels, cin9);
    dw.noalias() += g * c.transpose();
    for (int co = 0; co < dout.channels; ++co) dbias[co] += g.row(co).sum();
    std::vector<double> dcols(cols.size());
    MatrixMap dc(dcols.data(), cin9, static_cast<Eigen::Index>(hw));
    dc.noalias() = w.transpose() * g;
    Tensor dx(x.channels, x.height, x.width);
    col2im_add(dcols, dx);
    return dx;
}

// ---------------------------------------------------------------------------
// Pointwise pieces.

Tensor elu(const Tensor& pre) {
    Tensor out = pre;
    for (double& v : out.data) {
        if (v <= 0.0) v = std::expm1(v);
    }
    return out;
}

void elu_backward_inplace(const Tensor& pre, Tensor& grad) {
    for (std::size_t i = 0; i < grad.data.size(); ++i) {
        if (pre.data[i] <= 0.0) grad.data[i] *= std::exp(pre.data[i]);
    }
}

double logistic(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

Tensor avgpool2(const Tensor& x) {
    Tensor out(x.channels, x.height / 2, x.width / 2);
    for (int c = 0; c < x.channels; ++c) {
        const double* src = x.data.data() + c * x.plane_size();
        double* dst = out.data.data() + c * out.plane_size();
        for (int y = 0; y < out.height; ++y) {
            for (int xx = 0; xx < out.width; ++xx) {
                const std::size_t i = static_cast<std::size_t>(2 * y) * x.width + 2 * xx;
                dst[static_cast<std::size_t>(y) * out.width + xx] =
                    0.25 * (src[i] + src[i + 1] + src[i + x.width] + src[i + x.width + 1]);
            }
        }
    }
    return out;
}

void avgpool2_backward_add(const Tensor& dout, Tensor& dx) {
    for (int c = 0; c < dout.channels; ++c) {
        const double* src = dout.data.data() + c * dout.plane_size();
        double* dst = dx.data.data() + c * dx.plane_size();
        for (int y = 0; y < dout.height; ++y) {
            for (int xx = 0; xx < dout.width; ++xx) {
                const double g = 0.25 * src[static_cast<std::size_t>(y) * dout.width + xx];
                const std::size_t i = static_cast<std::size_t>(2 * y) * dx.width + 2 * xx;
                dst[i] += g;
                dst[i + 1] += g;
                dst[i + dx.width] += g;
                dst[i + dx.width + 1] += g;
            }
        }
    }
}

// Bilinear interpolation taps (half-pixel centres, clamped) along one axis.
struct AxisTaps {
    std::vector<int> lo, hi;
    std::vector<double> frac;
};

AxisTaps axis_taps(int src, int dst) {
    AxisTaps t;
    t.lo.resize(dst);
    t.hi.resize(dst);
    t.frac.resize(dst);
    const double scale = static_cast<double>(src) / dst;
    for (int i = 0; i < dst; ++i) {
        const double f = std::clamp((i + 0.5) * scale - 0.5, 0.0, src - 1.0);
        t.lo[i] = static_cast<int>(f);
        t.hi[i] = std::min(t.lo[i] + 1, src - 1);
        t.frac[i] = f - t.lo[i];
    }
    return t;
}

FloatMap upsample(const FloatMap& src, int height, int width) {
    if (src.height() == height && src.width() == width) return src;
    const AxisTaps ty = axis_taps(src.height(), height);
    const AxisTaps tx = axis_taps(src.width(), width);
    FloatMap out(height, width);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double top = (1 - tx.frac[x]) * src(ty.lo[y], tx.lo[x]) + tx.frac[x] * src(ty.lo[y], tx.hi[x]);
            const double bot = (1 - tx.frac[x]) * src(ty.hi[y], tx.lo[x]) + tx.frac[x] * src(ty.hi[y], tx.hi[x]);
            out(y, x) = (1 - ty.frac[y]) * top + ty.frac[y] * bot;
        }
    }
    return out;
}

FloatMap upsample_adjoint(const FloatMap& grad, int src_height, int src_width) {
    if (grad.height() == src_height && grad.width() == src_width) return grad;
    const AxisTaps ty = axis_taps(src_height, grad.height());
    const AxisTaps tx = axis_taps(src_width, grad.width());
    FloatMap out(src_height, src_width);
    for (int y = 0; y < grad.height(); ++y) {
        for (int x = 0; x < grad.width(); ++x) {
            const double g = grad(y, x);
            const double wy0 = 1 - ty.frac[y];
            const double wy1 = ty.frac[y];
            const double wx0 = 1 - tx.frac[x];
            const double wx1 = tx.frac[x];
            out(ty.lo[y], tx.lo[x]) += g * wy0 * wx0;
            out(ty.lo[y], tx.hi[x]) += g * wy0 * wx1;
            out(ty.hi[y], tx.lo[x]) += g * wy1 * wx0;
            out(ty.hi[y], tx.hi[x]) += g * wy1 * wx1;
        }
    }
    return out;
}

Tensor to_tensor(const Image& img) {
    Tensor t(img.channels(), img.height(), img.width());
    const std::size_t hw = t.plane_size();
    for (std::size_t i = 0; i < hw; ++i) {
        for (int c = 0; c < img.channels(); ++c) {
            t.data[c * hw + i] = img.values()[i * img.channels() + c];
        }
    }
    return t;
}

// ---------------------------------------------------------------------------
// Little-endian serialization helpers.

constexpr std::array<char, 8> kMagic = {'S', 'T', 'E', 'D', 'G', 'E', 'C', 'K'};

void put_u64(std::ostream& os, std::uint64_t v) {
    std::array<char, 8> b;
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    os.write(b.data(), b.size());
}

void put_u32(std::ostream& os, std::uint32_t v) {
    std::array<char, 4> b;
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    os.write(b.data(), b.size());
}

std::uint64_t get_u64(std::istream& is) {
    std::array<unsigned char, 8> b{};
    if (!is.read(reinterpret_cast<char*>(b.data()), b.size())) throw CheckpointError("checkpoint truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

std::uint32_t get_u32(std::istream& is) {
    std::array<unsigned char, 4> b{};
    if (!is.read(reinterpret_cast<char*>(b.data()), b.size())) throw CheckpointError("checkpoint truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

void put_array(std::ostream& os, const std::vector<double>& values) {
    for (double v : values) put_u64(os, std::bit_cast<std::uint64_t>(v));
}

void get_array(std::istream& is, std::vector<double>& values) {
    for (double& v : values) v = std::bit_cast<double>(get_u64(is));
}

}  // namespace

// ---------------------------------------------------------------------------

int BackboneConfig::stage_channels(int s) const noexcept {
    return base_channels * (1 << std::min(s, 3));
}

void BackboneConfig::validate() const {
    if (num_blocks < 2) throw std::invalid_argument("BackboneConfig: num_blocks must be >= 2");
    if (num_blocks > 12) throw std::invalid_argument("BackboneConfig: num_blocks must be <= 12");
    if (base_channels < 1) throw std::invalid_argument("BackboneConfig: base_channels must be >= 1");
    if (in_channels != 1 && in_channels != 3) throw std::invalid_argument("BackboneConfig: in_channels must be 1 or 3");
    if (input_height < 1 || input_width < 1) throw std::invalid_argument("BackboneConfig: input size must be positive");
}

NetworkParams::NetworkParams(const BackboneConfig& config) : config_(config) {
    config_.validate();
    std::size_t offset = 0;
    auto add = [&](std::string name, std::size_t size) {
        layout_.push_back({std::move(name), offset, size});
        offset += size;
    };
    int in = config_.in_channels;
    for (int s = 0; s < config_.num_stages(); ++s) {
        const int c = config_.stage_channels(s);
        add(stage_name(s, "conv_a.weight"), static_cast<std::size_t>(c) * in * 9);
        add(stage_name(s, "conv_a.bias"), c);
        add(stage_name(s, "conv_b.weight"), static_cast<std::size_t>(c) * c * 9);
        add(stage_name(s, "conv_b.bias"), c);
        add(stage_name(s, "head.weight"), c);
        add(stage_name(s, "head.bias"), 1);
        in = c;
    }
    add("fuse.weight", config_.num_stages());
    add("fuse.bias", 1);
    values_.assign(offset, 0.0);
    m_.assign(offset, 0.0);
    v_.assign(offset, 0.0);
}

NetworkParams NetworkParams::initialize(const BackboneConfig& config, std::uint64_t seed) {
    NetworkParams p(config);
    std::mt19937_64 rng(seed);
    auto fill_normal = [&](std::string_view name, double stddev) {
        std::normal_distribution<double> dist(0.0, stddev);
        for (double& w : p.tensor(name)) w = dist(rng);
    };
    int in = config.in_channels;
    for (int s = 0; s < config.num_stages(); ++s) {
        const int c = config.stage_channels(s);
        fill_normal(stage_name(s, "conv_a.weight"), std::sqrt(2.0 / (in * 9)));
        fill_normal(stage_name(s, "conv_b.weight"), std::sqrt(2.0 / (c * 9)));
        fill_normal(stage_name(s, "head.weight"), std::sqrt(1.0 / c));
        in = c;
    }
    for (double& w : p.tensor("fuse.weight")) w = 1.0 / config.num_stages();
    return p;
}

const ParamSlot& NetworkParams::slot(std::string_view name) const {
    for (const ParamSlot& s : layout_) {
        if (s.name == name) return s;
    }
    throw std::out_of_range("NetworkParams: no tensor named " + std::string(name));
}

std::span<const double> NetworkParams::tensor(std::string_view name) const {
    const ParamSlot& s = slot(name);
    return std::span<const double>(values_).subspan(s.offset, s.size);
}

std::span<double> NetworkParams::tensor(std::string_view name) {
    const ParamSlot& s = slot(name);
    return std::span<double>(values_).subspan(s.offset, s.size);
}

Image match_channels(const Image& img, int channels) {
    if (img.channels() == channels) return img;
    if (img.channels() == 1 && channels == 3) {
        Image out(img.height(), img.width(), 3);
        for (std::size_t i = 0; i < img.pixel_count(); ++i) {
            for (int c = 0; c < 3; ++c) out.values()[i * 3 + c] = img.values()[i];
        }
        return out;
    }
    if (img.channels() == 3 && channels == 1) {
        Image out(img.height(), img.width(), 1);
        for (std::size_t i = 0; i < img.pixel_count(); ++i) {
            const auto v = img.values().subspan(i * 3, 3);
            out.values()[i] = 0.299 * v[0] + 0.587 * v[1] + 0.114 * v[2];
        }
        return out;
    }
    throw std::invalid_argument("match_channels: unsupported channel conversion");
}

SideOutputs forward(const NetworkParams& params, const Image& img, ForwardCache* cache) {
    const BackboneConfig& cfg = params.config();
    const int stride = cfg.stride();
    if (img.height() % stride != 0 || img.width() % stride != 0 || img.height() == 0 || img.width() == 0) {
        throw std::invalid_argument("forward: spatial size " + std::to_string(img.height()) + "x" +
                                    std::to_string(img.width()) + " not divisible by stride " +
                                    std::to_string(stride));
    }
    if (img.channels() != cfg.in_channels) {
        throw std::invalid_argument("forward: expected " + std::to_string(cfg.in_channels) + " channels");
    }
    const int H = img.height();
    const int W = img.width();
    const int S = cfg.num_stages();

    ForwardCache local;
    ForwardCache& fc = cache != nullptr ? *cache : local;
    fc.stages.assign(S, {});

    Tensor x = to_tensor(img);
    FloatMap fused_logit(H, W, params.tensor("fuse.bias")[0]);
    const auto fuse_w = params.tensor("fuse.weight");
    for (int s = 0; s < S; ++s) {
        auto& st = fc.stages[s];
        const int c = cfg.stage_channels(s);
        st.input = s == 0 ? std::move(x) : avgpool2(x);
        st.pre_a = conv3x3(st.input, params.tensor(stage_name(s, "conv_a.weight")),
                           params.tensor(stage_name(s, "conv_a.bias")), c);
        st.act_a = elu(st.pre_a);
        st.pre_b = conv3x3(st.act_a, params.tensor(stage_name(s, "conv_b.weight")),
                           params.tensor(stage_name(s, "conv_b.bias")), c);
        st.act_b = elu(st.pre_b);

        const auto hw = params.tensor(stage_name(s, "head.weight"));
        const double hb = params.tensor(stage_name(s, "head.bias"))[0];
        FloatMap head(st.act_b.height, st.act_b.width, hb);
        const std::size_t plane = st.act_b.plane_size();
        for (int ch = 0; ch < c; ++ch) {
            const double* a = st.act_b.data.data() + ch * plane;
            for (std::size_t i = 0; i < plane; ++i) head[i] += hw[ch] * a[i];
        }
        st.logit = upsample(head, H, W);
        for (std::size_t i = 0; i < fused_logit.size(); ++i) fused_logit[i] += fuse_w[s] * st.logit[i];
        x = st.act_b;
    }

    SideOutputs out;
    out.maps.reserve(cfg.num_blocks);
    for (int s = 0; s < S; ++s) {
        EdgeProbMap p(H, W);
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = logistic(fc.stages[s].logit[i]);
        out.maps.push_back(std::move(p));
    }
    EdgeProbMap fused(H, W);
    for (std::size_t i = 0; i < fused.size(); ++i) fused[i] = logistic(fused_logit[i]);
    out.maps.push_back(std::move(fused));

    fc.fused_logit = std::move(fused_logit);
    fc.outputs = out;
    return out;
}

std::vector<double> backward(const NetworkParams& params, const ForwardCache& cache,
                             std::span<const EdgeProbMap> upstream) {
    const BackboneConfig& cfg = params.config();
    const int S = cfg.num_stages();
    if (upstream.size() != static_cast<std::size_t>(cfg.num_blocks) || cache.outputs.size() != upstream.size()) {
        throw std::invalid_argument("backward: expected one upstream gradient per side output");
    }
    for (std::size_t k = 0; k < upstream.size(); ++k) {
        if (!upstream[k].same_shape(cache.outputs.maps[k])) {
            throw std::invalid_argument("backward: upstream gradient shape mismatch");
        }
    }
    std::vector<double> grads(params.parameter_count(), 0.0);
    auto gslot = [&](const std::string& name) {
        const ParamSlot& s = params.slot(name);
        return std::span<double>(grads).subspan(s.offset, s.size);
    };

    // Fused logit gradient.
    const EdgeProbMap& pf = cache.outputs.fused();
    FloatMap dfused(pf.height(), pf.width());
    for (std::size_t i = 0; i < pf.size(); ++i) dfused[i] = upstream[S][i] * pf[i] * (1.0 - pf[i]);
    const auto fuse_w = params.tensor("fuse.weight");
    auto dfuse_w = gslot("fuse.weight");
    double dfuse_b = 0.0;
    for (std::size_t i = 0; i < dfused.size(); ++i) dfuse_b += dfused[i];
    gslot("fuse.bias")[0] = dfuse_b;

    Tensor carry;  // gradient flowing into the current stage's activation from the next stage
    for (int s = S - 1; s >= 0; --s) {
        const auto& st = cache.stages[s];
        const int c = cfg.stage_channels(s);
        const EdgeProbMap& ps = cache.outputs.maps[s];

        FloatMap dlogit(ps.height(), ps.width());
        double dw = 0.0;
        for (std::size_t i = 0; i < ps.size(); ++i) {
            dlogit[i] = upstream[s][i] * ps[i] * (1.0 - ps[i]) + fuse_w[s] * dfused[i];
            dw += dfused[i] * st.logit[i];
        }
        dfuse_w[s] = dw;
        const FloatMap dhead = upsample_adjoint(dlogit, st.act_b.height, st.act_b.width);

        const auto head_w = params.tensor(stage_name(s, "head.weight"));
        auto dhead_w = gslot(stage_name(s, "head.weight"));
        double dhead_b = 0.0;
        for (std::size_t i = 0; i < dhead.size(); ++i) dhead_b += dhead[i];
        gslot(stage_name(s, "head.bias"))[0] = dhead_b;

        Tensor dact = carry.data.empty() ? Tensor(c, st.act_b.height, st.act_b.width) : std::move(carry);
        const std::size_t plane = st.act_b.plane_size();
        for (int ch = 0; ch < c; ++ch) {
            const double* a = st.act_b.data.data() + ch * plane;
            double* d = dact.data.data() + ch * plane;
            double acc = 0.0;
            for (std::size_t i = 0; i < plane; ++i) {
                acc += dhead[i] * a[i];
                d[i] += head_w[ch] * dhead[i];
            }
            dhead_w[ch] = acc;
        }

        elu_backward_inplace(st.pre_b, dact);
        Tensor dact_a = conv3x3_backward(st.act_a, dact, params.tensor(stage_name(s, "conv_b.weight")),
                                         gslot(stage_name(s, "conv_b.weight")), gslot(stage_name(s, "conv_b.bias")));
        elu_backward_inplace(st.pre_a, dact_a);
        Tensor dinput = conv3x3_backward(st.input, dact_a, params.tensor(stage_name(s, "conv_a.weight")),
                                         gslot(stage_name(s, "conv_a.weight")), gslot(stage_name(s, "conv_a.bias")));
        if (s > 0) {
            const auto& prev = cache.stages[s - 1].act_b;
            carry = Tensor(prev.channels, prev.height, prev.width);
            avgpool2_backward_add(dinput, carry);
        }
    }
    return grads;
}

std::vector<double> backward(const NetworkParams& params, const Image& img, std::span<const EdgeProbMap> upstream) {
    ForwardCache cache;
    forward(params, img, &cache);
    return backward(params, cache, upstream);
}

Image pad_to_stride(const Image& img, int stride) {
    const int h = (img.height() + stride - 1) / stride * stride;
    const int w = (img.width() + stride - 1) / stride * stride;
    if (h == img.height() && w == img.width()) return img;
    Image out(h, w, img.channels());
    for (int y = 0; y < h; ++y) {
        const int sy = std::min(y, img.height() - 1);
        for (int x = 0; x < w; ++x) {
            const int sx = std::min(x, img.width() - 1);
            for (int c = 0; c < img.channels(); ++c) out.at(y, x, c) = img.at(sy, sx, c);
        }
    }
    return out;
}

SideOutputs predict(const NetworkParams& params, const Image& img) {
    const Image input = pad_to_stride(match_channels(img, params.config().in_channels), params.config().stride());
    SideOutputs padded = forward(params, input);
    if (input.height() == img.height() && input.width() == img.width()) return padded;
    SideOutputs out;
    for (const EdgeProbMap& m : padded.maps) {
        EdgeProbMap c(img.height(), img.width());
        for (int y = 0; y < img.height(); ++y) {
            for (int x = 0; x < img.width(); ++x) c(y, x) = m(y, x);
        }
        out.maps.push_back(std::move(c));
    }
    return out;
}

void adam_step(NetworkParams& params, std::span<const double> grads, const AdamConfig& config) {
    if (grads.size() != params.parameter_count()) {
        throw std::invalid_argument("adam_step: gradient size mismatch");
    }
    if (!(config.learning_rate > 0.0)) {
        throw std::invalid_argument("adam_step: learning rate must be positive");
    }
    for (double g : grads) {
        if (!std::isfinite(g)) throw std::invalid_argument("adam_step: non-finite gradient");
    }
    params.set_step(params.step() + 1);
    const double t = static_cast<double>(params.step());
    const double c1 = 1.0 - std::pow(config.beta1, t);
    const double c2 = 1.0 - std::pow(config.beta2, t);
    auto& w = params.values();
    auto& m = params.first_moment();
    auto& v = params.second_moment();
    for (std::size_t i = 0; i < w.size(); ++i) {
        m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * grads[i];
        v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * grads[i] * grads[i];
        const double mhat = m[i] / c1;
        const double vhat = v[i] / c2;
        w[i] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.epsilon);
    }
}

void save_checkpoint(const NetworkParams& params, const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw CheckpointError("cannot open checkpoint for writing: " + path.string());
    const BackboneConfig& cfg = params.config();
    os.write(kMagic.data(), kMagic.size());
    put_u32(os, kCheckpointVersion);
    put_u32(os, static_cast<std::uint32_t>(cfg.num_blocks));
    put_u32(os, static_cast<std::uint32_t>(cfg.base_channels));
    put_u32(os, static_cast<std::uint32_t>(cfg.in_channels));
    put_u32(os, static_cast<std::uint32_t>(cfg.input_height));
    put_u32(os, static_cast<std::uint32_t>(cfg.input_width));
    put_u64(os, params.step());
    put_u64(os, params.parameter_count());
    put_array(os, params.values());
    put_array(os, params.first_moment());
    put_array(os, params.second_moment());
    if (!os) throw CheckpointError("failed writing checkpoint: " + path.string());
}

NetworkParams load_checkpoint(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw CheckpointError("cannot open checkpoint: " + path.string());
    std::array<char, 8> magic{};
    if (!is.read(magic.data(), magic.size()) || magic != kMagic) {
        throw CheckpointError("not a checkpoint file: " + path.string());
    }
    const std::uint32_t version = get_u32(is);
    if (version != kCheckpointVersion) {
        throw CheckpointError("checkpoint version " + std::to_string(version) + " unsupported (expected " +
                              std::to_string(kCheckpointVersion) + "): " + path.string());
    }
    BackboneConfig cfg;
    cfg.num_blocks = static_cast<int>(get_u32(is));
    cfg.base_channels = static_cast<int>(get_u32(is));
    cfg.in_channels = static_cast<int>(get_u32(is));
    cfg.input_height = static_cast<int>(get_u32(is));
    cfg.input_width = static_cast<int>(get_u32(is));
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw CheckpointError(std::string("corrupt checkpoint config: ") + e.what());
    }
    NetworkParams params(cfg);
    params.set_step(get_u64(is));
    const std::uint64_t count = get_u64(is);
    if (count != params.parameter_count()) {
        throw CheckpointError("checkpoint parameter count does not match its config: " + path.string());
    }
    get_array(is, params.values());
    get_array(is, params.first_moment());
    get_array(is, params.second_moment());
    if (is.peek() != std::char_traits<char>::eof()) {
        throw CheckpointError("trailing data in checkpoint: " + path.string());
    }
    return params;
}

}  // namespace stedge::model
