#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "rhm/contrastive.hpp"
#include "rhm/encoders.hpp"

using namespace rhm;

TEST_CASE("triplet loss hinge cases") {
    std::vector<float> fa = {0.0f, 0.0f};
    std::vector<float> fn = {2.0f, 0.0f};
    // fa == fp, ||fa - fn|| = 2, margin 1 -> hinge inactive
    auto r = triplet_loss(fa, fa, fn, 1.0);
    REQUIRE(r.loss == 0.0);
    for (float g : r.grad_anchor) REQUIRE(g == 0.0f);

    // d_ap = 1, d_an = 1.5, margin 1 -> loss 0.5
    std::vector<float> fp = {1.0f, 0.0f};
    std::vector<float> fn2 = {-1.5f, 0.0f};
    auto r2 = triplet_loss(fa, fp, fn2, 1.0);
    REQUIRE(r2.loss == Catch::Approx(0.5));

    REQUIRE_THROWS_AS(triplet_loss(fa, fp, {1.0f}, 1.0), DimensionError);
}

TEST_CASE("triplet loss gradients match finite differences") {
    Rng rng(41);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<float> fa(4), fp(4), fn(4);
        for (int i = 0; i < 4; ++i) {
            fa[i] = static_cast<float>(rng.uniform(-1.0, 1.0));
            fp[i] = static_cast<float>(rng.uniform(-1.0, 1.0));
            fn[i] = static_cast<float>(rng.uniform(-1.0, 1.0));
        }
        auto base = triplet_loss(fa, fp, fn, 1.0);
        if (base.loss < 1e-3) continue;  // keep away from the hinge kink
        const double h = 1e-5;
        auto check = [&](std::vector<float>& vec, const std::vector<float>& grad) {
            for (int i = 0; i < 4; ++i) {
                const float orig = vec[i];
                vec[i] = orig + static_cast<float>(h);
                const double step_up = static_cast<double>(vec[i]) - orig;  // realized float step
                const double up = triplet_loss(fa, fp, fn, 1.0).loss;
                vec[i] = orig - static_cast<float>(h);
                const double step_dn = static_cast<double>(orig) - vec[i];
                const double dn = triplet_loss(fa, fp, fn, 1.0).loss;
                vec[i] = orig;
                const double fd = (up - dn) / (step_up + step_dn);
                const double denom = std::max({std::fabs(fd), std::fabs((double)grad[i]), 1e-4});
                REQUIRE(std::fabs(fd - grad[i]) / denom < 1e-3);
            }
        };
        check(fa, base.grad_anchor);
        check(fp, base.grad_positive);
        check(fn, base.grad_negative);
    }
}

TEST_CASE("triplet loss is invariant under feature translation") {
    Rng rng(55);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<float> fa(3), fp(3), fn(3), shift(3);
        for (int i = 0; i < 3; ++i) {
            fa[i] = static_cast<float>(rng.uniform(-2.0, 2.0));
            fp[i] = static_cast<float>(rng.uniform(-2.0, 2.0));
            fn[i] = static_cast<float>(rng.uniform(-2.0, 2.0));
            shift[i] = static_cast<float>(rng.uniform(-3.0, 3.0));
        }
        auto base = triplet_loss(fa, fp, fn, 1.0).loss;
        std::vector<float> fa2 = fa, fp2 = fp, fn2 = fn;
        for (int i = 0; i < 3; ++i) {
            fa2[i] += shift[i];
            fp2[i] += shift[i];
            fn2[i] += shift[i];
        }
        REQUIRE(triplet_loss(fa2, fp2, fn2, 1.0).loss == Catch::Approx(base).margin(1e-5));
    }
}

TEST_CASE("semi-hard mining picks the stated negative on the 1-D example") {
    // anchor 0.0, positive 0.1, negatives {0.05, 0.15, 5.0}, margin 1
    std::vector<std::vector<float>> feats = {{0.0f}, {0.1f}, {0.05f}, {0.15f}, {5.0f}};
    std::vector<PairLabel> labels = {PairLabel::from_class(0), PairLabel::from_class(0),
                                     PairLabel::from_class(1), PairLabel::from_class(1),
                                     PairLabel::from_class(1)};
    auto triplets = mine_semi_hard(feats, labels, 1.0);
    REQUIRE_FALSE(triplets.empty());
    // anchor 0, positive 1: d_ap = 0.1; semi-hard needs 0.1 < d_an < 1.1
    // negatives: 0.05 (too close), 0.15 (ok), 5.0 (too far) -> index 3
    bool found = false;
    for (const auto& t : triplets)
        if (t.anchor == 0 && t.positive == 1) {
            REQUIRE(t.negative == 3);
            found = true;
        }
    REQUIRE(found);
}

TEST_CASE("mining falls back to the closest negative when none is semi-hard") {
    // all negatives farther than d_ap + margin
    std::vector<std::vector<float>> feats = {{0.0f}, {0.1f}, {3.0f}, {4.0f}, {5.0f}};
    std::vector<PairLabel> labels = {PairLabel::from_class(0), PairLabel::from_class(0),
                                     PairLabel::from_class(1), PairLabel::from_class(1),
                                     PairLabel::from_class(1)};
    auto triplets = mine_semi_hard(feats, labels, 1.0);
    for (const auto& t : triplets)
        if (t.anchor == 0 && t.positive == 1) REQUIRE(t.negative == 2);  // hardest = closest
}

TEST_CASE("a single group yields no triplets") {
    std::vector<std::vector<float>> feats = {{0.0f}, {1.0f}, {2.0f}};
    std::vector<PairLabel> labels(3, PairLabel::from_class(0));
    REQUIRE(mine_semi_hard(feats, labels, 1.0).empty());
}

TEST_CASE("mining equals exhaustive enumeration on random batches") {
    Rng rng(77);
    for (int batch = 0; batch < 60; ++batch) {
        const std::size_t n = 3 + rng.uniform_index(62);
        const int dims = 1 + static_cast<int>(rng.uniform_index(4));
        const int groups = 2 + static_cast<int>(rng.uniform_index(4));
        std::vector<std::vector<float>> feats(n);
        std::vector<PairLabel> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            feats[i].resize(static_cast<std::size_t>(dims));
            for (auto& v : feats[i]) v = static_cast<float>(rng.uniform(-2.0, 2.0));
            labels[i] = PairLabel::from_class(static_cast<int>(rng.uniform_index(groups)));
        }
        const double margin = 0.5 + rng.uniform();
        const auto got = mine_semi_hard(feats, labels, margin);

        // oracle: literal scan over all (a, p, n) triples
        std::vector<Triplet> expected;
        bool multi = false;
        for (std::size_t i = 1; i < n; ++i) multi = multi || !(labels[i] == labels[0]);
        if (multi) {
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t p = 0; p < n; ++p) {
                    if (a == p || !(labels[a] == labels[p])) continue;
                    const double d_ap = euclidean_distance(feats[a], feats[p]);
                    int best = -1;
                    double best_d = 0.0;
                    bool best_semi = false;
                    for (std::size_t neg = 0; neg < n; ++neg) {
                        if (labels[neg] == labels[a]) continue;
                        const double d_an = euclidean_distance(feats[a], feats[neg]);
                        const bool semi = d_ap < d_an && d_an < d_ap + margin;
                        bool better = false;
                        if (best < 0) better = true;
                        else if (semi != best_semi) better = semi;
                        else better = d_an < best_d;
                        if (better) {
                            best = static_cast<int>(neg);
                            best_d = d_an;
                            best_semi = semi;
                        }
                    }
                    if (best >= 0)
                        expected.push_back({static_cast<int>(a), static_cast<int>(p), best});
                }
        }
        REQUIRE(got.size() == expected.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            REQUIRE(got[i].anchor == expected[i].anchor);
            REQUIRE(got[i].positive == expected[i].positive);
            REQUIRE(got[i].negative == expected[i].negative);
        }
    }
}

TEST_CASE("temporal labels group by wheel, visit and 30-day bucket") {
    WheelTimeline tl;
    tl.wheel_id = 5;
    auto add_day = [&](int day) {
        Measurement m;
        m.wheel_id = 5;
        m.timestamp = static_cast<uint64_t>(day) * kSecondsPerDay + 7200;
        m.load = 1.0f;
        for (auto& s : m.segments) s = {1.0f};
        tl.measurements.push_back(m);
    };
    add_day(2);   // bucket 0
    add_day(5);   // bucket 0 (3 days later, same month)
    add_day(10);  // bucket 0
    add_day(40);  // bucket 1
    add_day(70);  // visit at 60 -> visit 1, bucket 0

    auto labels = temporal_pair_labels(tl, {0, 60}, 30);
    REQUIRE(labels.size() == 5);
    REQUIRE(labels[0].label == labels[1].label);  // 3 days apart, same month
    REQUIRE_FALSE(labels[2].label == labels[3].label);  // days 10 vs 40
    REQUIRE(labels[3].visit_index == 0);
    REQUIRE(labels[4].visit_index == 1);
    REQUIRE(labels[4].bucket == 0);
    REQUIRE_FALSE(labels[0].label == labels[4].label);  // different visit intervals

    // same day numbers on another wheel -> different groups
    WheelTimeline other = tl;
    other.wheel_id = 6;
    for (auto& m : other.measurements) m.wheel_id = 6;
    auto labels2 = temporal_pair_labels(other, {0, 60}, 30);
    for (std::size_t i = 0; i < labels.size(); ++i)
        REQUIRE_FALSE(labels[i].label == labels2[i].label);
}

TEST_CASE("measurement before the first visit gets visit 0 and a warning") {
    WheelTimeline tl;
    tl.wheel_id = 2;
    Measurement m;
    m.wheel_id = 2;
    m.timestamp = 3 * kSecondsPerDay;
    m.load = 1.0f;
    for (auto& s : m.segments) s = {1.0f};
    tl.measurements.push_back(m);
    auto labels = temporal_pair_labels(tl, {10}, 30);
    REQUIRE(labels[0].visit_index == 0);
    REQUIRE(labels[0].before_first_visit);
}

TEST_CASE("label equality is an equivalence relation across buckets") {
    // reflexive / symmetric / transitive follow from key equality; spot-check
    auto a = pack_temporal_label(1, 0, 2);
    auto b = pack_temporal_label(1, 0, 2);
    auto c = pack_temporal_label(1, 1, 2);
    REQUIRE(a == a);
    REQUIRE(a == b);
    REQUIRE(b == a);
    REQUIRE_FALSE(a == c);
}

TEST_CASE("contrastive training separates a two-level toy set") {
    // constant signals at two levels; zero loss is achievable
    const int len = 32;
    std::vector<std::vector<float>> inputs;
    std::vector<PairLabel> labels;
    Rng rng(13);
    for (int i = 0; i < 24; ++i) {
        const int group = i % 2;
        std::vector<float> sig(len, group == 0 ? 1.0f : 2.0f);
        for (auto& v : sig) v += static_cast<float>(rng.uniform(-0.01, 0.01));
        inputs.push_back(sig);
        labels.push_back(PairLabel::from_class(group));
    }
    WheelEncoderConfig cfg;
    cfg.conv_layers = 2;
    cfg.input_length = len;
    cfg.feature_dim = 2;
    auto encoder = build_wheel_encoder(cfg, 3);

    TrainSpec spec;
    spec.epochs = 20;
    spec.batch_size = 12;
    spec.seed = 5;
    auto history = train_contrastive(encoder, inputs, labels, spec);
    REQUIRE(history.size() == 20);
    REQUIRE(history.back().mean_loss < 0.05);
}

TEST_CASE("epochs = 0 leaves the encoder untouched with empty history") {
    std::vector<std::vector<float>> inputs = {{1.0f, 1.0f}, {1.0f, 1.0f}, {2.0f, 2.0f}};
    std::vector<PairLabel> labels = {PairLabel::from_class(0), PairLabel::from_class(0),
                                     PairLabel::from_class(1)};
    auto net = build_network<float>({2}, {LayerSpec::dense(2, 2)}, 5);
    const auto before = net.layers[0].weight.data;
    TrainSpec spec;
    spec.epochs = 0;
    spec.batch_size = 3;
    auto history = train_contrastive(net, inputs, labels, spec);
    REQUIRE(history.empty());
    REQUIRE(net.layers[0].weight.data == before);
}

TEST_CASE("same seed gives identical trained parameters") {
    std::vector<std::vector<float>> inputs;
    std::vector<PairLabel> labels;
    Rng rng(2);
    for (int i = 0; i < 16; ++i) {
        std::vector<float> sig(8);
        for (auto& v : sig) v = static_cast<float>(rng.uniform(0.0, 2.0));
        inputs.push_back(sig);
        labels.push_back(PairLabel::from_class(i % 3));
    }
    TrainSpec spec;
    spec.epochs = 4;
    spec.batch_size = 8;
    spec.seed = 123;
    auto net1 = build_network<float>({8}, {LayerSpec::dense(8, 3)}, 1);
    auto net2 = build_network<float>({8}, {LayerSpec::dense(8, 3)}, 1);
    train_contrastive(net1, inputs, labels, spec);
    train_contrastive(net2, inputs, labels, spec);
    REQUIRE(net1.layers[0].weight.data == net2.layers[0].weight.data);
    REQUIRE(net1.layers[0].bias.data == net2.layers[0].bias.data);
}

TEST_CASE("training with a single group is a configuration error") {
    std::vector<std::vector<float>> inputs = {{1.0f}, {2.0f}, {3.0f}};
    std::vector<PairLabel> labels(3, PairLabel::from_class(0));
    auto net = build_network<float>({1}, {LayerSpec::dense(1, 2)}, 1);
    TrainSpec spec;
    spec.epochs = 1;
    spec.batch_size = 3;
    REQUIRE_THROWS_AS(train_contrastive(net, inputs, labels, spec), ConfigError);
}

TEST_CASE("cross-entropy training: degenerate labels and range errors") {
    auto model = build_network<float>(
        {4}, {LayerSpec::dense(4, 3), LayerSpec::softmax()}, 2);
    std::vector<std::vector<float>> inputs = {{1, 0, 0, 0}, {0, 1, 0, 0}};
    TrainSpec spec;
    spec.epochs = 1;
    spec.batch_size = 2;
    std::vector<int> single = {1, 1};
    REQUIRE_THROWS_AS(train_cross_entropy(model, inputs, single, spec), ConfigError);
    std::vector<int> out_of_range = {0, 3};
    REQUIRE_THROWS_AS(train_cross_entropy(model, inputs, out_of_range, spec), DataError);
}

TEST_CASE("cross-entropy of a perfect one-hot prediction is tiny") {
    REQUIRE(cross_entropy_from_logits({30.0f, 0.0f, 0.0f}, 0) < 1e-3);
    REQUIRE(cross_entropy_from_logits({0.0f, 0.0f, 0.0f}, 1) == Catch::Approx(std::log(3.0)));
}

TEST_CASE("linearly separable features train to high accuracy") {
    // three clusters in 8-d feature space; head is logistic regression
    Rng rng(91);
    std::vector<std::vector<float>> feats;
    std::vector<int> labels;
    for (int i = 0; i < 120; ++i) {
        const int c = i % 3;
        std::vector<float> f(8, 0.0f);
        for (auto& v : f) v = static_cast<float>(rng.uniform(-0.2, 0.2));
        f[static_cast<std::size_t>(c)] += 2.0f;
        feats.push_back(f);
        labels.push_back(c);
    }
    auto head = build_network<float>({8}, {LayerSpec::dense(8, 3), LayerSpec::softmax()}, 7);
    TrainSpec spec;
    spec.epochs = 60;
    spec.batch_size = 24;
    spec.optimizer = OptimizerKind::Adam;
    spec.learning_rate = 0.05;
    spec.seed = 4;
    train_cross_entropy(head, feats, labels, spec);
    int correct = 0;
    for (std::size_t i = 0; i < feats.size(); ++i) {
        auto probs = classify(head, feats[i]);
        int arg = 0;
        for (int c = 1; c < 3; ++c)
            if (probs[c] > probs[arg]) arg = c;
        if (arg == labels[i]) ++correct;
    }
    REQUIRE(static_cast<double>(correct) / feats.size() > 0.99);
}
