#include "rrl/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <numeric>
#include <thread>

#include "rrl/error.hpp"
#include "rrl/rng.hpp"

namespace rrl {

namespace {

void validate_train_config(const TrainConfig& cfg) {
    if (cfg.epochs < 1) throw DataError("epochs must be >= 1");
    if (cfg.batch_size < 1) throw DataError("batch size must be >= 1");
    if (!(cfg.learning_rate > 0.0)) throw DataError("learning rate must be positive");
    if (cfg.adam_beta1 < 0.0 || cfg.adam_beta1 >= 1.0 || cfg.adam_beta2 < 0.0 ||
        cfg.adam_beta2 >= 1.0)
        throw DataError("Adam betas must lie in [0, 1)");
    if (cfg.threads < 1) throw DataError("thread count must be >= 1");
}

// Runs fn(0..n-1) on up to `threads` workers. Each index writes only its
// own slot, so the schedule does not affect results.
void run_indexed(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    const int workers = static_cast<int>(std::min<std::size_t>(std::max(threads, 1), n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::mutex err_mutex;
    std::exception_ptr first_error;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = static_cast<std::size_t>(w); i < n;
                     i += static_cast<std::size_t>(workers))
                    fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

void accumulate(EncoderParams& into, const Gradients& grads) {
    auto dst = param_blocks(into);
    auto src = param_blocks(const_cast<Gradients&>(grads));
    for (std::size_t i = 0; i < dst.size(); ++i) {
        auto& d = *dst[i].values;
        const auto& s = *src[i].values;
        for (std::size_t j = 0; j < d.size(); ++j) d[j] += s[j];
    }
}

}  // namespace

AdamState make_adam_state(const EncoderConfig& cfg) {
    return {zero_params(cfg), zero_params(cfg), 0};
}

void adam_step(EncoderParams& params, const Gradients& grads, AdamState& state,
               const TrainConfig& cfg) {
    auto pv = param_blocks(params);
    auto gv = param_blocks(const_cast<Gradients&>(grads));
    auto mv = param_blocks(state.first_moment);
    auto vv = param_blocks(state.second_moment);
    if (gv.size() != pv.size() || mv.size() != pv.size() || vv.size() != pv.size())
        throw DataError("Adam state shape does not match parameters");

    state.step += 1;
    const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
    const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < pv.size(); ++i) {
        auto& p = *pv[i].values;
        const auto& g = *gv[i].values;
        auto& m = *mv[i].values;
        auto& v = *vv[i].values;
        if (g.size() != p.size() || m.size() != p.size() || v.size() != p.size())
            throw DataError("gradient shape does not match parameters in " + pv[i].name);
        for (std::size_t j = 0; j < p.size(); ++j) {
            double grad = g[j];
            if (!std::isfinite(grad))
                throw DataError("non-finite gradient in " + gv[i].name);
            m[j] = b1 * m[j] + (1.0 - b1) * grad;
            v[j] = b2 * v[j] + (1.0 - b2) * grad * grad;
            double m_hat = m[j] / corr1;
            double v_hat = v[j] / corr2;
            p[j] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_epsilon);
        }
    }
}

TrainReport train(const std::vector<TrainExample>& dataset, const EncoderConfig& encoder_cfg,
                  const TrainConfig& train_cfg) {
    validate_config(encoder_cfg);
    validate_train_config(train_cfg);
    if (dataset.empty()) throw DataError("training dataset is empty");

    const std::size_t image_len = static_cast<std::size_t>(encoder_cfg.input_channels) *
                                  encoder_cfg.input_height * encoder_cfg.input_width;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const auto& ex = dataset[i];
        if (ex.image.size() != image_len)
            throw DataError("image " + std::to_string(i) + " does not match encoder input shape");
        if (ex.map.num_classes != encoder_cfg.num_classes)
            throw DataError("label map " + std::to_string(i) + " has C = " +
                            std::to_string(ex.map.num_classes) + ", encoder expects " +
                            std::to_string(encoder_cfg.num_classes));
        if (ex.map.height != encoder_cfg.input_height || ex.map.width != encoder_cfg.input_width)
            throw DataError("label map " + std::to_string(i) + " size does not match the image");
    }

    const auto start = std::chrono::steady_clock::now();

    // Label maps are static, so the regression targets are fixed; build
    // them once up front.
    std::vector<AdjacencyMatrix> targets;
    targets.reserve(dataset.size());
    for (const auto& ex : dataset)
        targets.push_back(adjacency_from_map(ex.map, train_cfg.weight_config));

    EncoderParams params = init_params(encoder_cfg);
    AdamState state = make_adam_state(encoder_cfg);

    TrainReport report;
    report.epoch_mean_loss.reserve(static_cast<std::size_t>(train_cfg.epochs));

    std::vector<std::size_t> order(dataset.size());
    for (int epoch = 0; epoch < train_cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        SplitMix64 shuffle_rng(derive_seed(train_cfg.shuffle_seed, static_cast<std::uint64_t>(epoch)));
        fisher_yates(order, shuffle_rng);

        double epoch_loss = 0.0;
        for (std::size_t batch_start = 0; batch_start < order.size();
             batch_start += static_cast<std::size_t>(train_cfg.batch_size)) {
            const std::size_t batch_end =
                std::min(batch_start + static_cast<std::size_t>(train_cfg.batch_size), order.size());
            const std::size_t batch_len = batch_end - batch_start;

            std::vector<BackwardResult> results(batch_len);
            run_indexed(batch_len, train_cfg.threads, [&](std::size_t slot) {
                const std::size_t idx = order[batch_start + slot];
                ForwardResult fwd = forward(params, encoder_cfg, dataset[idx].image);
                results[slot] = backward(params, encoder_cfg, fwd, targets[idx]);
            });

            // Batch loss is the sum over the batch; gradients are reduced
            // in ascending dataset index so any worker count gives the
            // same bits.
            std::vector<std::size_t> slots(batch_len);
            std::iota(slots.begin(), slots.end(), std::size_t{0});
            std::sort(slots.begin(), slots.end(), [&](std::size_t a, std::size_t b) {
                return order[batch_start + a] < order[batch_start + b];
            });
            Gradients batch_grads = zero_params(encoder_cfg);
            for (std::size_t slot : slots) {
                epoch_loss += results[slot].loss;
                accumulate(batch_grads, results[slot].grads);
            }
            adam_step(params, batch_grads, state, train_cfg);
        }
        double mean_loss = epoch_loss / static_cast<double>(dataset.size());
        if (!std::isfinite(mean_loss))
            throw DataError("non-finite training loss at epoch " + std::to_string(epoch));
        report.epoch_mean_loss.push_back(mean_loss);
    }

    report.final_params = std::move(params);
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

DescriptorStore extract_descriptors(const EncoderParams& params, const EncoderConfig& cfg,
                                    const std::vector<ArchiveImage>& archive, int threads) {
    validate_config(cfg);
    std::size_t label_width = archive.empty() ? static_cast<std::size_t>(cfg.num_classes)
                                              : archive.front().labels.bits.size();
    std::vector<std::vector<double>> descriptors(archive.size());
    run_indexed(archive.size(), threads, [&](std::size_t i) {
        descriptors[i] = forward(params, cfg, archive[i].image).descriptor;
    });

    DescriptorStore store(cfg.gamma, static_cast<int>(label_width));
    for (std::size_t i = 0; i < archive.size(); ++i) {
        if (archive[i].labels.bits.size() != label_width)
            throw DataError("inconsistent label vector width for id " + archive[i].id);
        store.add({archive[i].id, std::move(descriptors[i]), archive[i].labels});
    }
    return store;
}

}  // namespace rrl
