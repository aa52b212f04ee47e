#include "rrl/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "rrl/error.hpp"
#include "rrl/rng.hpp"
#include "rrl/textio.hpp"

namespace rrl {

namespace {

constexpr std::uint32_t kCheckpointVersion = 1;

int pooled_height(const EncoderConfig& cfg) {
    return cfg.input_height >> cfg.block_widths.size();
}

int pooled_width_px(const EncoderConfig& cfg) {
    return cfg.input_width >> cfg.block_widths.size();
}

int descriptor_in_width(const EncoderConfig& cfg) {
    return cfg.block_widths.empty() ? cfg.input_channels : cfg.block_widths.back();
}

// 3x3 same convolution as nine shift-and-accumulate passes. `zero` keeps
// the output preloaded with the bias.
void conv3x3(const double* in, int in_ch, int h, int w, const double* kernel,
             const double* bias, double* out, int out_ch) {
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (int oc = 0; oc < out_ch; ++oc) {
        double* dst = out + oc * plane;
        std::fill(dst, dst + plane, bias[oc]);
        for (int ic = 0; ic < in_ch; ++ic) {
            const double* src = in + ic * plane;
            const double* k = kernel + (static_cast<std::size_t>(oc) * in_ch + ic) * 9;
            for (int dy = 0; dy < 3; ++dy) {
                int y0 = std::max(0, 1 - dy), y1 = std::min(h, h + 1 - dy);
                for (int dx = 0; dx < 3; ++dx) {
                    int x0 = std::max(0, 1 - dx), x1 = std::min(w, w + 1 - dx);
                    double kv = k[dy * 3 + dx];
                    for (int y = y0; y < y1; ++y) {
                        double* drow = dst + static_cast<std::size_t>(y) * w;
                        const double* srow = src + static_cast<std::size_t>(y + dy - 1) * w + (dx - 1);
                        for (int x = x0; x < x1; ++x) drow[x] += kv * srow[x];
                    }
                }
            }
        }
    }
}

// d(kernel) for the same convolution: correlation of upstream gradient
// with the block input over the in-bounds window.
void conv3x3_kernel_grad(const double* in, int in_ch, int h, int w, const double* dout,
                         int out_ch, double* dkernel) {
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (int oc = 0; oc < out_ch; ++oc) {
        const double* dz = dout + oc * plane;
        for (int ic = 0; ic < in_ch; ++ic) {
            const double* src = in + ic * plane;
            double* dk = dkernel + (static_cast<std::size_t>(oc) * in_ch + ic) * 9;
            for (int dy = 0; dy < 3; ++dy) {
                int y0 = std::max(0, 1 - dy), y1 = std::min(h, h + 1 - dy);
                for (int dx = 0; dx < 3; ++dx) {
                    int x0 = std::max(0, 1 - dx), x1 = std::min(w, w + 1 - dx);
                    double acc = 0.0;
                    for (int y = y0; y < y1; ++y) {
                        const double* drow = dz + static_cast<std::size_t>(y) * w;
                        const double* srow = src + static_cast<std::size_t>(y + dy - 1) * w + (dx - 1);
                        for (int x = x0; x < x1; ++x) acc += drow[x] * srow[x];
                    }
                    dk[dy * 3 + dx] += acc;
                }
            }
        }
    }
}

// d(input): scatter the upstream gradient back through the same shifts.
void conv3x3_input_grad(const double* kernel, int in_ch, int h, int w, const double* dout,
                        int out_ch, double* din) {
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    std::fill(din, din + static_cast<std::size_t>(in_ch) * plane, 0.0);
    for (int oc = 0; oc < out_ch; ++oc) {
        const double* dz = dout + oc * plane;
        for (int ic = 0; ic < in_ch; ++ic) {
            double* dst = din + ic * plane;
            const double* k = kernel + (static_cast<std::size_t>(oc) * in_ch + ic) * 9;
            for (int dy = 0; dy < 3; ++dy) {
                int y0 = std::max(0, 1 - dy), y1 = std::min(h, h + 1 - dy);
                for (int dx = 0; dx < 3; ++dx) {
                    int x0 = std::max(0, 1 - dx), x1 = std::min(w, w + 1 - dx);
                    double kv = k[dy * 3 + dx];
                    for (int y = y0; y < y1; ++y) {
                        const double* drow = dz + static_cast<std::size_t>(y) * w;
                        double* srow = dst + static_cast<std::size_t>(y + dy - 1) * w + (dx - 1);
                        for (int x = x0; x < x1; ++x) srow[x] += kv * drow[x];
                    }
                }
            }
        }
    }
}

void check_cache(const EncoderConfig& cfg, const ForwardResult& fwd) {
    const std::size_t n_blocks = cfg.block_widths.size();
    const auto& cache = fwd.cache;
    bool ok = cache.block_inputs.size() == n_blocks + 1 && cache.conv_pre.size() == n_blocks &&
              cache.pooled_mean.size() == static_cast<std::size_t>(descriptor_in_width(cfg)) &&
              cache.descriptor_pre.size() == static_cast<std::size_t>(cfg.gamma) &&
              fwd.descriptor.size() == static_cast<std::size_t>(cfg.gamma) &&
              fwd.predicted_adjacency.size() ==
                  static_cast<std::size_t>(cfg.num_classes) * cfg.num_classes;
    if (ok) {
        int h = cfg.input_height, w = cfg.input_width, ch = cfg.input_channels;
        for (std::size_t b = 0; b <= n_blocks && ok; ++b) {
            ok = cache.block_inputs[b].size() == static_cast<std::size_t>(ch) * h * w;
            if (b < n_blocks) {
                ok = ok && cache.conv_pre[b].size() ==
                               static_cast<std::size_t>(cfg.block_widths[b]) * h * w;
                ch = cfg.block_widths[b];
                h /= 2;
                w /= 2;
            }
        }
    }
    if (!ok) throw DataError("stale or mismatched forward cache for this encoder config");
}

}  // namespace

void validate_config(const EncoderConfig& cfg) {
    if (cfg.input_channels < 1 || cfg.input_height < 1 || cfg.input_width < 1 ||
        cfg.gamma < 1 || cfg.num_classes < 1)
        throw DataError("encoder config counts must all be >= 1");
    for (int w : cfg.block_widths)
        if (w < 1) throw DataError("block widths must be >= 1");
    const int shrink = 1 << cfg.block_widths.size();
    if (cfg.input_height % shrink != 0 || cfg.input_width % shrink != 0)
        throw DataError("input size " + std::to_string(cfg.input_height) + "x" +
                        std::to_string(cfg.input_width) + " is not divisible by 2^" +
                        std::to_string(cfg.block_widths.size()));
}

std::vector<ParamBlockView> param_blocks(EncoderParams& p) {
    std::vector<ParamBlockView> views;
    for (std::size_t b = 0; b < p.blocks.size(); ++b) {
        views.push_back({"conv block " + std::to_string(b) + " kernel", &p.blocks[b].kernel});
        views.push_back({"conv block " + std::to_string(b) + " bias", &p.blocks[b].bias});
    }
    views.push_back({"descriptor weight", &p.descriptor.weight});
    views.push_back({"descriptor bias", &p.descriptor.bias});
    views.push_back({"head weight", &p.head.weight});
    views.push_back({"head bias", &p.head.bias});
    return views;
}

EncoderParams zero_params(const EncoderConfig& cfg) {
    validate_config(cfg);
    EncoderParams p;
    int in_ch = cfg.input_channels;
    for (int out_ch : cfg.block_widths) {
        ConvBlock blk;
        blk.kernel.assign(static_cast<std::size_t>(out_ch) * in_ch * 9, 0.0);
        blk.bias.assign(static_cast<std::size_t>(out_ch), 0.0);
        p.blocks.push_back(std::move(blk));
        in_ch = out_ch;
    }
    p.descriptor.weight.assign(static_cast<std::size_t>(descriptor_in_width(cfg)) * cfg.gamma, 0.0);
    p.descriptor.bias.assign(static_cast<std::size_t>(cfg.gamma), 0.0);
    p.head.weight.assign(static_cast<std::size_t>(cfg.gamma) * cfg.num_classes * cfg.num_classes, 0.0);
    p.head.bias.assign(static_cast<std::size_t>(cfg.num_classes) * cfg.num_classes, 0.0);
    return p;
}

// Weights are drawn in declaration order from a single SplitMix64 stream
// seeded by cfg.seed; biases stay zero and consume no draws.
EncoderParams init_params(const EncoderConfig& cfg) {
    EncoderParams p = zero_params(cfg);
    SplitMix64 rng(cfg.seed);
    int in_ch = cfg.input_channels;
    for (auto& blk : p.blocks) {
        double std_dev = std::sqrt(2.0 / (static_cast<double>(in_ch) * 9.0));
        for (auto& v : blk.kernel) v = rng.next_normal() * std_dev;
        in_ch = static_cast<int>(blk.bias.size());
    }
    double std_desc = std::sqrt(2.0 / static_cast<double>(descriptor_in_width(cfg)));
    for (auto& v : p.descriptor.weight) v = rng.next_normal() * std_desc;
    double std_head = std::sqrt(2.0 / static_cast<double>(cfg.gamma));
    for (auto& v : p.head.weight) v = rng.next_normal() * std_head;
    return p;
}

ForwardResult forward(const EncoderParams& params, const EncoderConfig& cfg,
                      std::span<const double> image) {
    validate_config(cfg);
    const std::size_t expected =
        static_cast<std::size_t>(cfg.input_channels) * cfg.input_height * cfg.input_width;
    if (image.size() != expected)
        throw DataError("image size " + std::to_string(image.size()) + " does not match config (" +
                        std::to_string(expected) + " values)");
    for (double v : image)
        if (!std::isfinite(v)) throw DataError("non-finite value in input image");
    if (params.blocks.size() != cfg.block_widths.size())
        throw DataError("parameter shapes do not match encoder config");

    ForwardResult fwd;
    auto& cache = fwd.cache;
    cache.block_inputs.emplace_back(image.begin(), image.end());

    int ch = cfg.input_channels, h = cfg.input_height, w = cfg.input_width;
    for (std::size_t b = 0; b < params.blocks.size(); ++b) {
        const ConvBlock& blk = params.blocks[b];
        const int out_ch = cfg.block_widths[b];
        if (blk.kernel.size() != static_cast<std::size_t>(out_ch) * ch * 9 ||
            blk.bias.size() != static_cast<std::size_t>(out_ch))
            throw DataError("parameter shapes do not match encoder config");

        std::vector<double> z(static_cast<std::size_t>(out_ch) * h * w);
        conv3x3(cache.block_inputs[b].data(), ch, h, w, blk.kernel.data(), blk.bias.data(),
                z.data(), out_ch);

        // ReLU then 2x2 average pool, stride 2.
        const int ph = h / 2, pw = w / 2;
        std::vector<double> pooled(static_cast<std::size_t>(out_ch) * ph * pw);
        for (int oc = 0; oc < out_ch; ++oc) {
            const double* zp = z.data() + static_cast<std::size_t>(oc) * h * w;
            double* pp = pooled.data() + static_cast<std::size_t>(oc) * ph * pw;
            for (int y = 0; y < ph; ++y)
                for (int x = 0; x < pw; ++x) {
                    double acc = 0.0;
                    for (int py = 0; py < 2; ++py)
                        for (int px = 0; px < 2; ++px) {
                            double v = zp[static_cast<std::size_t>(2 * y + py) * w + 2 * x + px];
                            acc += v > 0.0 ? v : 0.0;
                        }
                    pp[static_cast<std::size_t>(y) * pw + x] = acc * 0.25;
                }
        }
        cache.conv_pre.push_back(std::move(z));
        cache.block_inputs.push_back(std::move(pooled));
        ch = out_ch;
        h = ph;
        w = pw;
    }

    // Global average pool over the remaining spatial extent.
    const std::vector<double>& final_map = cache.block_inputs.back();
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    cache.pooled_mean.assign(static_cast<std::size_t>(ch), 0.0);
    for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        const double* fp = final_map.data() + c * plane;
        for (std::size_t i = 0; i < plane; ++i) acc += fp[i];
        cache.pooled_mean[static_cast<std::size_t>(c)] = acc / static_cast<double>(plane);
    }

    // Dense layer to the descriptor, rectified.
    const int gamma = cfg.gamma;
    cache.descriptor_pre.assign(params.descriptor.bias.begin(), params.descriptor.bias.end());
    for (int c = 0; c < ch; ++c) {
        double g = cache.pooled_mean[static_cast<std::size_t>(c)];
        const double* wrow = params.descriptor.weight.data() + static_cast<std::size_t>(c) * gamma;
        for (int j = 0; j < gamma; ++j) cache.descriptor_pre[static_cast<std::size_t>(j)] += g * wrow[j];
    }
    fwd.descriptor.resize(static_cast<std::size_t>(gamma));
    for (int j = 0; j < gamma; ++j) {
        double v = cache.descriptor_pre[static_cast<std::size_t>(j)];
        fwd.descriptor[static_cast<std::size_t>(j)] = v > 0.0 ? v : 0.0;
    }

    // Linear head to the vectorized adjacency matrix.
    const int out_n = cfg.num_classes * cfg.num_classes;
    fwd.predicted_adjacency.assign(params.head.bias.begin(), params.head.bias.end());
    for (int j = 0; j < gamma; ++j) {
        double d = fwd.descriptor[static_cast<std::size_t>(j)];
        if (d == 0.0) continue;
        const double* wrow = params.head.weight.data() + static_cast<std::size_t>(j) * out_n;
        for (int k = 0; k < out_n; ++k) fwd.predicted_adjacency[static_cast<std::size_t>(k)] += d * wrow[k];
    }
    return fwd;
}

double rrl_loss(std::span<const double> predicted, const AdjacencyMatrix& target) {
    const std::size_t n = target.entries.size();
    if (predicted.size() != n)
        throw DataError("prediction length " + std::to_string(predicted.size()) +
                        " does not match target C^2 = " + std::to_string(n));
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double diff = target.entries[i] - predicted[i];
        acc += diff * diff;
    }
    return acc / static_cast<double>(n);
}

BackwardResult backward(const EncoderParams& params, const EncoderConfig& cfg,
                        const ForwardResult& fwd, const AdjacencyMatrix& target) {
    validate_config(cfg);
    check_cache(cfg, fwd);
    const int out_n = cfg.num_classes * cfg.num_classes;
    if (target.entries.size() != static_cast<std::size_t>(out_n))
        throw DataError("target C does not match encoder config");

    BackwardResult res;
    res.grads = zero_params(cfg);
    res.loss = rrl_loss(fwd.predicted_adjacency, target);

    // Head: d(loss)/d(output_k) = 2 (o_k - t_k) / C^2.
    const int gamma = cfg.gamma;
    std::vector<double> dout(static_cast<std::size_t>(out_n));
    for (int k = 0; k < out_n; ++k)
        dout[static_cast<std::size_t>(k)] = 2.0 *
            (fwd.predicted_adjacency[static_cast<std::size_t>(k)] - target.entries[static_cast<std::size_t>(k)]) /
            static_cast<double>(out_n);

    std::vector<double> ddesc(static_cast<std::size_t>(gamma), 0.0);
    for (int j = 0; j < gamma; ++j) {
        double d = fwd.descriptor[static_cast<std::size_t>(j)];
        const double* wrow = params.head.weight.data() + static_cast<std::size_t>(j) * out_n;
        double* gw = res.grads.head.weight.data() + static_cast<std::size_t>(j) * out_n;
        double acc = 0.0;
        for (int k = 0; k < out_n; ++k) {
            gw[k] = d * dout[static_cast<std::size_t>(k)];
            acc += wrow[k] * dout[static_cast<std::size_t>(k)];
        }
        ddesc[static_cast<std::size_t>(j)] = acc;
    }
    res.grads.head.bias = dout;

    // Descriptor dense layer through its ReLU.
    const int in_width = descriptor_in_width(cfg);
    std::vector<double> dz1(static_cast<std::size_t>(gamma));
    for (int j = 0; j < gamma; ++j)
        dz1[static_cast<std::size_t>(j)] =
            fwd.cache.descriptor_pre[static_cast<std::size_t>(j)] > 0.0 ? ddesc[static_cast<std::size_t>(j)] : 0.0;
    res.grads.descriptor.bias = dz1;
    std::vector<double> dmean(static_cast<std::size_t>(in_width), 0.0);
    for (int c = 0; c < in_width; ++c) {
        double g = fwd.cache.pooled_mean[static_cast<std::size_t>(c)];
        const double* wrow = params.descriptor.weight.data() + static_cast<std::size_t>(c) * gamma;
        double* gw = res.grads.descriptor.weight.data() + static_cast<std::size_t>(c) * gamma;
        double acc = 0.0;
        for (int j = 0; j < gamma; ++j) {
            gw[j] = g * dz1[static_cast<std::size_t>(j)];
            acc += wrow[j] * dz1[static_cast<std::size_t>(j)];
        }
        dmean[static_cast<std::size_t>(c)] = acc;
    }

    // Global average pool spreads each channel gradient uniformly.
    const std::size_t n_blocks = params.blocks.size();
    int h = pooled_height(cfg), w = pooled_width_px(cfg);
    std::size_t plane = static_cast<std::size_t>(h) * w;
    std::vector<double> dpool(static_cast<std::size_t>(in_width) * plane);
    for (int c = 0; c < in_width; ++c) {
        double v = dmean[static_cast<std::size_t>(c)] / static_cast<double>(plane);
        std::fill_n(dpool.begin() + c * plane, plane, v);
    }

    // Walk the blocks backwards: pool -> ReLU -> convolution.
    for (std::size_t bi = n_blocks; bi-- > 0;) {
        const int out_ch = cfg.block_widths[bi];
        const int in_ch = bi == 0 ? cfg.input_channels : cfg.block_widths[bi - 1];
        const int bh = h * 2, bw = w * 2;  // spatial extent before this block's pool
        const std::vector<double>& z = fwd.cache.conv_pre[bi];
        const std::vector<double>& in = fwd.cache.block_inputs[bi];

        std::vector<double> dz(static_cast<std::size_t>(out_ch) * bh * bw);
        for (int oc = 0; oc < out_ch; ++oc) {
            const double* dp = dpool.data() + static_cast<std::size_t>(oc) * h * w;
            const double* zp = z.data() + static_cast<std::size_t>(oc) * bh * bw;
            double* dzp = dz.data() + static_cast<std::size_t>(oc) * bh * bw;
            for (int y = 0; y < bh; ++y)
                for (int x = 0; x < bw; ++x) {
                    std::size_t i = static_cast<std::size_t>(y) * bw + x;
                    double up = dp[static_cast<std::size_t>(y / 2) * w + x / 2] * 0.25;
                    dzp[i] = zp[i] > 0.0 ? up : 0.0;
                }
        }

        ConvBlock& gblk = res.grads.blocks[bi];
        for (int oc = 0; oc < out_ch; ++oc) {
            const double* dzp = dz.data() + static_cast<std::size_t>(oc) * bh * bw;
            double acc = 0.0;
            for (std::size_t i = 0; i < static_cast<std::size_t>(bh) * bw; ++i) acc += dzp[i];
            gblk.bias[static_cast<std::size_t>(oc)] = acc;
        }
        conv3x3_kernel_grad(in.data(), in_ch, bh, bw, dz.data(), out_ch, gblk.kernel.data());

        if (bi > 0) {
            std::vector<double> din(static_cast<std::size_t>(in_ch) * bh * bw);
            conv3x3_input_grad(params.blocks[bi].kernel.data(), in_ch, bh, bw, dz.data(), out_ch,
                               din.data());
            dpool = std::move(din);
            h = bh;
            w = bw;
        }
    }
    return res;
}

void save_checkpoint(const std::string& path, const EncoderConfig& cfg,
                     const EncoderParams& params) {
    validate_config(cfg);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint file: " + path);
    out.write("RRLM", 4);
    put_u32(out, kCheckpointVersion);
    put_u32(out, static_cast<std::uint32_t>(cfg.input_channels));
    put_u32(out, static_cast<std::uint32_t>(cfg.input_height));
    put_u32(out, static_cast<std::uint32_t>(cfg.input_width));
    put_u32(out, static_cast<std::uint32_t>(cfg.block_widths.size()));
    for (int bw : cfg.block_widths) put_u32(out, static_cast<std::uint32_t>(bw));
    put_u32(out, static_cast<std::uint32_t>(cfg.gamma));
    put_u32(out, static_cast<std::uint32_t>(cfg.num_classes));
    put_u64(out, cfg.seed);
    auto& mutable_params = const_cast<EncoderParams&>(params);
    for (const auto& view : param_blocks(mutable_params))
        for (double v : *view.values) put_f64(out, v);
    if (!out) throw DataError("write failure on checkpoint file: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint file: " + path);
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "RRLM", 4) != 0)
        throw DataError(path + ": not an RRLM checkpoint (bad magic)");
    std::uint32_t version = get_u32(in, "checkpoint version");
    if (version != kCheckpointVersion)
        throw DataError(path + ": unsupported checkpoint version " + std::to_string(version));

    Checkpoint ckpt;
    EncoderConfig& cfg = ckpt.config;
    cfg.input_channels = static_cast<int>(get_u32(in, "input channels"));
    cfg.input_height = static_cast<int>(get_u32(in, "input height"));
    cfg.input_width = static_cast<int>(get_u32(in, "input width"));
    std::uint32_t n_blocks = get_u32(in, "block count");
    cfg.block_widths.clear();
    for (std::uint32_t b = 0; b < n_blocks; ++b)
        cfg.block_widths.push_back(static_cast<int>(get_u32(in, "block width")));
    cfg.gamma = static_cast<int>(get_u32(in, "gamma"));
    cfg.num_classes = static_cast<int>(get_u32(in, "class count"));
    cfg.seed = get_u64(in, "seed");
    validate_config(cfg);

    ckpt.params = zero_params(cfg);
    for (const auto& view : param_blocks(ckpt.params))
        for (auto& v : *view.values) v = get_f64(in, "parameter value");
    if (in.peek() != std::ifstream::traits_type::eof())
        throw DataError(path + ": trailing bytes after parameter arrays");
    return ckpt;
}

}  // namespace rrl
