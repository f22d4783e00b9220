#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "rhm/error.hpp"
#include "rhm/network.hpp"
#include "rhm/optimizer.hpp"
#include "rhm/parallel.hpp"
#include "rhm/rng.hpp"
#include "rhm/timeline.hpp"

namespace rhm {

// Opaque similarity group: mining only ever compares labels for equality.
struct PairLabel {
    uint64_t key = 0;
    bool operator==(const PairLabel&) const = default;
    bool operator<(const PairLabel& o) const { return key < o.key; }

    static PairLabel from_class(int category) {
        return PairLabel{static_cast<uint64_t>(category)};
    }
};

struct Triplet {
    int anchor = 0;
    int positive = 0;
    int negative = 0;
};

inline double euclidean_distance(const std::vector<float>& a, const std::vector<float>& b) {
    if (a.size() != b.size())
        throw DimensionError("feature dimension mismatch: " + std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()));
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += d * d;
    }
    return std::sqrt(acc);
}

struct TripletLossValue {
    double loss = 0.0;
    std::vector<float> grad_anchor, grad_positive, grad_negative;
};

// max(0, ||fa-fp|| - ||fa-fn|| + margin) with Euclidean distances and
// subgradient 0 at the hinge point.
inline TripletLossValue triplet_loss(const std::vector<float>& fa, const std::vector<float>& fp,
                                     const std::vector<float>& fn, double margin) {
    if (!(margin > 0.0)) throw ConfigError("triplet margin must be > 0");
    const double d_ap = euclidean_distance(fa, fp);
    const double d_an = euclidean_distance(fa, fn);
    TripletLossValue out;
    out.grad_anchor.assign(fa.size(), 0.0f);
    out.grad_positive.assign(fa.size(), 0.0f);
    out.grad_negative.assign(fa.size(), 0.0f);
    const double loss = d_ap - d_an + margin;
    if (loss <= 0.0) return out;
    out.loss = loss;
    constexpr double kTiny = 1e-12;
    const double inv_ap = d_ap > kTiny ? 1.0 / d_ap : 0.0;
    const double inv_an = d_an > kTiny ? 1.0 / d_an : 0.0;
    for (std::size_t i = 0; i < fa.size(); ++i) {
        const double u_ap = (static_cast<double>(fa[i]) - fp[i]) * inv_ap;
        const double u_an = (static_cast<double>(fa[i]) - fn[i]) * inv_an;
        out.grad_anchor[i] = static_cast<float>(u_ap - u_an);
        out.grad_positive[i] = static_cast<float>(-u_ap);
        out.grad_negative[i] = static_cast<float>(u_an);
    }
    return out;
}

// For every ordered anchor-positive pair, picks the negative minimizing
// ||fa-fn|| among those with d_ap < d_an < d_ap + margin; when no such
// negative exists, falls back to the hardest (closest) negative. Ties break
// to the lowest index. One group only -> empty list.
inline std::vector<Triplet> mine_semi_hard(const std::vector<std::vector<float>>& features,
                                           const std::vector<PairLabel>& labels, double margin) {
    const std::size_t n = features.size();
    if (labels.size() != n) throw DimensionError("mine_semi_hard: labels do not match features");
    std::vector<Triplet> triplets;
    if (n < 3) return triplets;
    bool multiple_groups = false;
    for (std::size_t i = 1; i < n && !multiple_groups; ++i)
        multiple_groups = !(labels[i] == labels[0]);
    if (!multiple_groups) return triplets;

    std::vector<double> dist(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = euclidean_distance(features[i], features[j]);
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }

    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t p = 0; p < n; ++p) {
            if (p == a || !(labels[p] == labels[a])) continue;
            const double d_ap = dist[a * n + p];
            int semi = -1, hardest = -1;
            double semi_d = std::numeric_limits<double>::infinity();
            double hard_d = std::numeric_limits<double>::infinity();
            for (std::size_t neg = 0; neg < n; ++neg) {
                if (labels[neg] == labels[a]) continue;
                const double d_an = dist[a * n + neg];
                if (d_an < hard_d) {
                    hard_d = d_an;
                    hardest = static_cast<int>(neg);
                }
                if (d_ap < d_an && d_an < d_ap + margin && d_an < semi_d) {
                    semi_d = d_an;
                    semi = static_cast<int>(neg);
                }
            }
            const int chosen = semi >= 0 ? semi : hardest;
            if (chosen >= 0)
                triplets.push_back({static_cast<int>(a), static_cast<int>(p), chosen});
        }
    }
    return triplets;
}

// ---------------------------------------------------------------------------
// Temporal grouping: measurements of the same wheel falling in the same
// bucket of days after the same workshop visit share a group.

struct TemporalLabel {
    PairLabel label;
    uint32_t visit_index = 0;
    int32_t bucket = 0;
    bool before_first_visit = false;
};

constexpr int kDefaultBucketDays = 30;

inline PairLabel pack_temporal_label(uint32_t wheel_id, uint32_t visit_index, int32_t bucket) {
    if (visit_index > 0xffff || bucket < -0x7fff || bucket > 0x7fff)
        throw DataError("temporal label field out of packing range");
    const uint64_t b = static_cast<uint64_t>(static_cast<uint16_t>(bucket + 0x8000));
    return PairLabel{(static_cast<uint64_t>(wheel_id) << 32) |
                     (static_cast<uint64_t>(visit_index) << 16) | b};
}

inline std::vector<TemporalLabel> temporal_pair_labels_from_times(
    uint32_t wheel_id, const std::vector<uint64_t>& timestamps, const std::vector<int>& visit_days,
    int bucket_days = kDefaultBucketDays) {
    if (visit_days.empty()) throw ConfigError("temporal_pair_labels: workshop visits unknown");
    if (bucket_days < 1) throw ConfigError("temporal_pair_labels: bucket_days must be >= 1");
    if (!std::is_sorted(visit_days.begin(), visit_days.end()))
        throw OrderingError("workshop visit days must be sorted");
    if (!std::is_sorted(timestamps.begin(), timestamps.end()))
        throw OrderingError("timeline for wheel " + std::to_string(wheel_id) +
                            " is not time-sorted");
    std::vector<TemporalLabel> out;
    out.reserve(timestamps.size());
    for (uint64_t ts : timestamps) {
        const int64_t day = day_of(ts);
        TemporalLabel tl;
        auto it = std::upper_bound(visit_days.begin(), visit_days.end(), day);
        if (it == visit_days.begin()) {
            tl.visit_index = 0;
            tl.before_first_visit = true;
        } else {
            tl.visit_index = static_cast<uint32_t>(std::distance(visit_days.begin(), it) - 1);
        }
        const int64_t since = day - visit_days[tl.visit_index];
        const int64_t bucket = since >= 0 ? since / bucket_days
                                          : -(((-since) + bucket_days - 1) / bucket_days);
        tl.bucket = static_cast<int32_t>(bucket);
        tl.label = pack_temporal_label(wheel_id, tl.visit_index, tl.bucket);
        out.push_back(tl);
    }
    return out;
}

inline std::vector<TemporalLabel> temporal_pair_labels(const WheelTimeline& timeline,
                                                       const std::vector<int>& visit_days,
                                                       int bucket_days = kDefaultBucketDays) {
    std::vector<uint64_t> times;
    times.reserve(timeline.measurements.size());
    for (const auto& m : timeline.measurements) times.push_back(m.timestamp);
    return temporal_pair_labels_from_times(timeline.wheel_id, times, visit_days, bucket_days);
}

// ---------------------------------------------------------------------------
// Training

struct TrainSpec {
    double margin = 1.0;
    int epochs = 0;
    int batch_size = 48;
    OptimizerKind optimizer = OptimizerKind::Adam;
    double learning_rate = 0.001;
    uint64_t seed = 0;
};

struct EpochStats {
    int epoch = 0;
    double mean_loss = 0.0;
    double active_triplet_fraction = 0.0;
};

namespace detail {

// Stratified batch: two members of an eligible anchor group plus a slice of
// the shuffled epoch order. Batches without >= 2 groups are dropped.
inline std::vector<std::vector<std::size_t>> make_batches(
    const std::vector<std::vector<std::size_t>>& groups, std::size_t n_samples,
    std::size_t batch_size, Rng& rng) {
    std::vector<std::size_t> order(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) order[i] = i;
    for (std::size_t i = n_samples; i > 1; --i)
        std::swap(order[i - 1], order[rng.uniform_index(i)]);

    std::vector<std::size_t> eligible;
    for (std::size_t g = 0; g < groups.size(); ++g)
        if (groups[g].size() >= 2) eligible.push_back(g);
    if (eligible.empty()) return {};
    for (std::size_t i = eligible.size(); i > 1; --i)
        std::swap(eligible[i - 1], eligible[rng.uniform_index(i)]);

    const std::size_t n_batches = std::max<std::size_t>(1, n_samples / std::max<std::size_t>(batch_size, 2));
    std::vector<std::vector<std::size_t>> batches;
    std::size_t cursor = 0;
    for (std::size_t b = 0; b < n_batches; ++b) {
        const auto& members = groups[eligible[b % eligible.size()]];
        const std::size_t m0 = members[rng.uniform_index(members.size())];
        std::size_t m1 = m0;
        while (m1 == m0) m1 = members[rng.uniform_index(members.size())];
        std::vector<std::size_t> batch{m0, m1};
        while (batch.size() < batch_size && batch.size() < n_samples) {
            const std::size_t idx = order[cursor];
            cursor = (cursor + 1) % n_samples;
            if (idx == m0 || idx == m1) continue;
            batch.push_back(idx);
        }
        batches.push_back(std::move(batch));
    }
    return batches;
}

}  // namespace detail

// Trains the encoder with semi-hard mined triplets; labels come from the
// chosen labeler (class labels or temporal buckets). Returns per-epoch stats.
inline std::vector<EpochStats> train_contrastive(Network<float>& encoder,
                                                 const std::vector<std::vector<float>>& inputs,
                                                 const std::vector<PairLabel>& labels,
                                                 const TrainSpec& spec) {
    if (inputs.empty()) throw ConfigError("train_contrastive: empty dataset");
    if (labels.size() != inputs.size())
        throw DimensionError("train_contrastive: labels do not match dataset");
    if (spec.batch_size < 3) throw ConfigError("train_contrastive: batch size must be >= 3");

    std::map<PairLabel, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < labels.size(); ++i) by_label[labels[i]].push_back(i);
    if (by_label.size() < 2)
        throw ConfigError("train_contrastive: labeler yields fewer than 2 groups");
    bool any_pair = false;
    for (const auto& [label, members] : by_label) any_pair = any_pair || members.size() >= 2;
    if (!any_pair)
        throw ConfigError("train_contrastive: no group has two members, no valid triplet exists");

    std::vector<std::vector<std::size_t>> groups;
    groups.reserve(by_label.size());
    for (auto& [label, members] : by_label) groups.push_back(members);

    Rng rng(spec.seed);
    auto optimizer = Optimizer<float>::make(spec.optimizer, static_cast<float>(spec.learning_rate),
                                            encoder);
    std::vector<EpochStats> history;
    history.reserve(static_cast<std::size_t>(std::max(spec.epochs, 0)));

    for (int epoch = 0; epoch < spec.epochs; ++epoch) {
        const auto batches = detail::make_batches(groups, inputs.size(),
                                                  static_cast<std::size_t>(spec.batch_size), rng);
        double loss_sum = 0.0;
        std::size_t triplet_count = 0;
        std::size_t active_count = 0;
        for (const auto& batch : batches) {
            const std::size_t bs = batch.size();
            std::vector<Trace<float>> traces(bs);
            std::vector<std::vector<float>> feats(bs);
            parallel_for(bs, [&](std::size_t i) {
                Tensor<float> in = Tensor<float>::from(encoder.input_shape,
                                                       inputs[batch[i]]);
                feats[i] = forward(encoder, in, &traces[i]).data;
            });
            std::vector<PairLabel> batch_labels(bs);
            for (std::size_t i = 0; i < bs; ++i) batch_labels[i] = labels[batch[i]];
            const auto triplets = mine_semi_hard(feats, batch_labels, spec.margin);
            if (triplets.empty()) continue;

            const std::size_t feat_dim = feats[0].size();
            std::vector<std::vector<float>> feat_grads(bs, std::vector<float>(feat_dim, 0.0f));
            const float inv_t = 1.0f / static_cast<float>(triplets.size());
            for (const auto& t : triplets) {
                const auto lv = triplet_loss(feats[t.anchor], feats[t.positive],
                                             feats[t.negative], spec.margin);
                loss_sum += lv.loss;
                ++triplet_count;
                if (lv.loss > 0.0) ++active_count;
                for (std::size_t d = 0; d < feat_dim; ++d) {
                    feat_grads[t.anchor][d] += lv.grad_anchor[d] * inv_t;
                    feat_grads[t.positive][d] += lv.grad_positive[d] * inv_t;
                    feat_grads[t.negative][d] += lv.grad_negative[d] * inv_t;
                }
            }

            std::vector<GradientSet<float>> sample_grads(bs);
            std::vector<char> has_grad(bs, 0);
            parallel_for(bs, [&](std::size_t i) {
                bool nonzero = false;
                for (float g : feat_grads[i]) nonzero = nonzero || g != 0.0f;
                if (!nonzero) return;
                Tensor<float> upstream = Tensor<float>::from(encoder.output_shape(), feat_grads[i]);
                sample_grads[i] = backward(encoder, traces[i], upstream);
                has_grad[i] = 1;
            });
            GradientSet<float> total = zero_gradients(encoder);
            for (std::size_t i = 0; i < bs; ++i)
                if (has_grad[i]) total.add(sample_grads[i]);
            optimizer.step(encoder, total);
        }
        EpochStats stats;
        stats.epoch = epoch;
        stats.mean_loss = triplet_count ? loss_sum / static_cast<double>(triplet_count) : 0.0;
        stats.active_triplet_fraction =
            triplet_count ? static_cast<double>(active_count) / static_cast<double>(triplet_count) : 0.0;
        history.push_back(stats);
    }
    return history;
}

// ---------------------------------------------------------------------------
// Cross-entropy training (phase 2 of the supervised task, and the
// end-to-end comparison baseline). The network's last layer must be softmax;
// the loss is evaluated on its input logits via log-sum-exp.

inline double cross_entropy_from_logits(const std::vector<float>& logits, int label) {
    if (label < 0 || label >= static_cast<int>(logits.size()))
        throw DataError("label " + std::to_string(label) + " outside category range");
    double mx = logits[0];
    for (float v : logits) mx = std::max(mx, static_cast<double>(v));
    double sum = 0.0;
    for (float v : logits) sum += std::exp(static_cast<double>(v) - mx);
    return std::log(sum) + mx - static_cast<double>(logits[static_cast<std::size_t>(label)]);
}

inline std::vector<EpochStats> train_cross_entropy(Network<float>& net,
                                                   const std::vector<std::vector<float>>& inputs,
                                                   const std::vector<int>& labels,
                                                   const TrainSpec& spec) {
    if (inputs.empty()) throw ConfigError("train_cross_entropy: empty dataset");
    if (labels.size() != inputs.size())
        throw DimensionError("train_cross_entropy: labels do not match dataset");
    if (net.layers.empty() || net.layers.back().spec.kind != LayerKind::Softmax)
        throw ConfigError("train_cross_entropy: network must end with softmax");
    const int categories = static_cast<int>(shape_size(net.output_shape()));
    int first = labels[0];
    bool degenerate = true;
    for (int l : labels) {
        if (l < 0 || l >= categories)
            throw DataError("label " + std::to_string(l) + " outside category range [0, " +
                            std::to_string(categories) + ")");
        degenerate = degenerate && l == first;
    }
    if (degenerate)
        throw ConfigError("train_cross_entropy: single-category dataset, loss is degenerate");

    Rng rng(spec.seed);
    auto optimizer = Optimizer<float>::make(spec.optimizer, static_cast<float>(spec.learning_rate), net);
    const std::size_t n = inputs.size();
    const std::size_t logits_index = net.layers.size() - 1;  // trace.act index of logits
    std::vector<EpochStats> history;

    for (int epoch = 0; epoch < spec.epochs; ++epoch) {
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);
        double loss_sum = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(spec.batch_size)) {
            const std::size_t bs = std::min(n - start, static_cast<std::size_t>(spec.batch_size));
            std::vector<GradientSet<float>> sample_grads(bs);
            std::vector<double> sample_loss(bs);
            parallel_for(bs, [&](std::size_t i) {
                const std::size_t idx = order[start + i];
                Trace<float> trace;
                Tensor<float> in = Tensor<float>::from(net.input_shape, inputs[idx]);
                forward(net, in, &trace);
                const std::vector<float>& logits = trace.act[logits_index].data;
                const std::vector<float>& probs = trace.act.back().data;
                sample_loss[i] = cross_entropy_from_logits(logits, labels[idx]);
                Tensor<float> dlogits(trace.act[logits_index].shape);
                for (std::size_t c = 0; c < probs.size(); ++c) dlogits.data[c] = probs[c];
                dlogits.data[static_cast<std::size_t>(labels[idx])] -= 1.0f;
                sample_grads[i] = backward(net, trace, dlogits, logits_index);
            });
            GradientSet<float> total = zero_gradients(net);
            for (std::size_t i = 0; i < bs; ++i) {
                total.add(sample_grads[i]);
                loss_sum += sample_loss[i];
            }
            total.scale(1.0f / static_cast<float>(bs));
            optimizer.step(net, total);
            seen += bs;
        }
        history.push_back({epoch, seen ? loss_sum / static_cast<double>(seen) : 0.0, 0.0});
    }
    return history;
}

}  // namespace rhm
