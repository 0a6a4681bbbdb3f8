#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "fluxcast/gradcheck.hpp"
#include "fluxcast/jsonio.hpp"
#include "fluxcast/model.hpp"
#include "fluxcast/synth.hpp"

using namespace fluxcast;
using num::Matrix;

namespace {

model::ModelConfig tiny_config() {
    model::ModelConfig cfg;
    cfg.k = 1;
    cfg.f = 1;
    cfg.d = 1;
    cfg.m = 1;
    cfg.L = 2;
    cfg.finalize();
    return cfg;
}

data::Window synth_window(const data::SynthConfig& sc, std::size_t L,
                          std::size_t tau, std::size_t m) {
    data::SynthResult res = data::synth_generate(sc);
    data::NormStats stats = data::NormStats::compute(res.series);
    data::WindowBatch w = data::make_windows(data::normalize(res.series, stats), L, tau, m);
    REQUIRE(!w.empty());
    return w.front();
}

} // namespace

TEST_CASE("config validation and task weight normalization") {
    model::ModelConfig cfg;
    cfg.k = 4;
    cfg.task_weights = {1, 1, 1, 5};
    cfg.finalize();
    double sum = 0.0;
    for (double w : cfg.task_weights) sum += w;
    CHECK(sum == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(cfg.task_weights[3] == doctest::Approx(2.5).epsilon(1e-12));

    model::ModelConfig bad;
    bad.m = 8;
    bad.L = 4;
    CHECK_THROWS_AS(bad.finalize(), ConfigError);

    model::ModelConfig neg;
    neg.k = 2;
    neg.task_weights = {1.0, -1.0};
    CHECK_THROWS_AS(neg.finalize(), ConfigError);
}

TEST_CASE("parameter init respects fan-in bounds and the seed") {
    model::ModelConfig cfg;
    cfg.finalize();
    model::ModelParams a = model::ModelParams::init(cfg, num::RandomSource(3));
    model::ModelParams b = model::ModelParams::init(cfg, num::RandomSource(3));
    model::ModelParams c = model::ModelParams::init(cfg, num::RandomSource(4));
    REQUIRE(a.set.count() == b.set.count());
    bool differs = false;
    for (std::size_t i = 0; i < a.set.count(); ++i)
        for (std::size_t j = 0; j < a.set.value(i).size(); ++j) {
            CHECK(a.set.value(i).at(j) == b.set.value(i).at(j));
            if (a.set.value(i).at(j) != c.set.value(i).at(j)) differs = true;
        }
    CHECK(differs);

    double bound = 1.0 / std::sqrt(static_cast<double>(cfg.f));
    const Matrix& enc = a.set["enc.W"];
    for (std::size_t i = 0; i < enc.size(); ++i) CHECK(std::abs(enc.at(i)) <= bound);
}

TEST_CASE("encoder scalar oracle") {
    model::ModelConfig cfg = tiny_config();
    model::ModelParams p = model::ModelParams::zeros(cfg);
    p.set["enc.W"].at(0) = 0.5;
    Matrix h = model::encode(Matrix::scalar(1.0), p, cfg);
    CHECK(h(0, 0) == doctest::Approx(0.46211715726000974).epsilon(1e-15));
}

TEST_CASE("state fusion with a zero gate is the midpoint") {
    model::ModelConfig cfg;
    cfg.k = 2;
    cfg.f = 1;
    cfg.d = 2;
    cfg.finalize();
    model::ModelParams p = model::ModelParams::zeros(cfg); // fuse.w = fuse.b = 0
    model::HiddenState st = model::HiddenState::initial(cfg);
    st.fused = Matrix(2, 2, {1, 1, 2, 2});

    Matrix h(2, 2, {3, 5, 4, 6});
    auto [fused, alpha] = model::fuse_state(h, st, p, cfg);
    CHECK(alpha(0, 0) == 0.5);
    CHECK(fused(0, 0) == 2.0); // (3 + 1) / 2
    CHECK(fused(1, 1) == 4.0); // (6 + 2) / 2

    cfg.use_fusion = false;
    auto [passthrough, one] = model::fuse_state(h, st, p, cfg);
    CHECK(passthrough(0, 1) == 5.0);
    CHECK(one(0, 0) == 1.0);
}

TEST_CASE("propagation scalar oracle") {
    model::ModelConfig cfg = tiny_config();
    model::ModelParams p = model::ModelParams::zeros(cfg);
    p.set["prop.W"].at(0) = 2.0;
    graph::AdjacencyMatrix adj{Matrix::identity(1)};
    Matrix z = model::propagate(Matrix::scalar(1.0), adj, p, cfg);
    CHECK(z(0, 0) == doctest::Approx(0.8807970779778823).epsilon(1e-15));
}

TEST_CASE("fluctuation gate saturates at its endpoints") {
    model::ModelConfig cfg;
    cfg.k = 2;
    cfg.f = 1;
    cfg.d = 1;
    cfg.finalize();
    model::ModelParams p = model::ModelParams::zeros(cfg);
    model::HiddenState st = model::HiddenState::initial(cfg);

    Matrix z(2, 1, {10, 20});
    Matrix fused(2, 1, {-10, -20});
    Matrix x(2, 1, {1, 1});

    p.set["gate.b"].at(0) = 50.0; // lambda -> 1: propagated wins
    auto [g_hi, l_hi] = model::gate_fuse(z, fused, x, st, p, cfg);
    CHECK(l_hi(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(g_hi(0, 0) == doctest::Approx(10.0).epsilon(1e-9));

    p.set["gate.b"].at(0) = -50.0; // lambda -> 0: local state wins
    auto [g_lo, l_lo] = model::gate_fuse(z, fused, x, st, p, cfg);
    CHECK(l_lo(1, 0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(g_lo(1, 0) == doctest::Approx(-20.0).epsilon(1e-9));
}

TEST_CASE("dynamic adjustment scalar oracle") {
    model::ModelConfig cfg = tiny_config();
    model::ModelParams p = model::ModelParams::zeros(cfg);
    p.set["dyn.u"].at(0) = 1.0; // c = 0
    model::HiddenState st = model::HiddenState::initial(cfg);
    st.s_ewma = {1.0};
    st.prev_input = Matrix::scalar(0.0);

    // |dx| = 1 keeps the EWMA at exactly 1: s = 0.9 * 1 + 0.1 * 1
    model::DynamicOut out =
        model::dynamic_adjust(Matrix::scalar(2.0), Matrix::scalar(1.0), st, p, cfg);
    CHECK(out.s_ewma[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(out.gamma(0, 0) == doctest::Approx(0.7310585786300049).epsilon(1e-15));
    CHECK(out.g(0, 0) == doctest::Approx(1.4621171572600098).epsilon(1e-14));

    cfg.use_dynamic = false;
    model::DynamicOut off =
        model::dynamic_adjust(Matrix::scalar(2.0), Matrix::scalar(1.0), st, p, cfg);
    CHECK(off.g(0, 0) == 2.0);
    CHECK(off.gamma(0, 0) == 1.0);
    CHECK(off.s_ewma[0] == doctest::Approx(1.0)); // EWMA still advances
}

TEST_CASE("decoder with zero weights returns the head bias") {
    model::ModelConfig cfg;
    cfg.k = 3;
    cfg.f = 1;
    cfg.d = 2;
    cfg.m = 2;
    cfg.finalize();
    model::ModelParams p = model::ModelParams::zeros(cfg);
    for (std::size_t k = 0; k < 3; ++k) p.set["head.b"](k, 0) = 0.3;

    std::vector<Matrix> buf{Matrix(3, 2, 1.0), Matrix(3, 2, 2.0)};
    Matrix pred = model::decode(buf, p, cfg);
    REQUIRE(pred.rows() == 3);
    for (std::size_t k = 0; k < 3; ++k) CHECK(pred(k, 0) == 0.3);

    CHECK_THROWS_AS(model::decode({Matrix(3, 2)}, p, cfg), ShapeError);
}

TEST_CASE("loss oracle and masking") {
    Matrix preds(1, 2, {1, 2});
    Matrix targets(1, 2, {0, 0});
    Matrix mask(1, 2, 1.0);
    CHECK(model::loss(preds, targets, mask, {1, 1}) == 2.5);

    Matrix half(1, 2, {1.0, 0.0});
    CHECK(model::loss(preds, targets, half, {1, 1}) == 1.0);

    CHECK_THROWS_AS(model::loss(preds, targets, Matrix(1, 2), {1, 1}), DataError);
    CHECK_THROWS_AS(model::loss(preds, targets, mask, {1}), ShapeError);
}

TEST_CASE("forward window emits one prediction per position m..L") {
    model::ModelConfig cfg;
    cfg.k = 2;
    cfg.f = 1;
    cfg.d = 3;
    cfg.m = 2;
    cfg.L = 4;
    cfg.tau = 1;
    cfg.finalize();
    model::ModelParams p = model::ModelParams::init(cfg, num::RandomSource(8));
    graph::AdjacencyMatrix adj{Matrix::identity(2)};

    data::SynthConfig sc;
    sc.k = 2;
    sc.f = 1;
    sc.t = 30;
    sc.seed = 12;
    data::Window w = synth_window(sc, 4, 1, 2);

    model::ForwardResult fr = model::forward_window(w, adj, p, cfg);
    CHECK(fr.predictions.rows() == 3); // L - m + 1
    CHECK(fr.predictions.cols() == 2);
    CHECK(fr.trace.steps.size() == 4);
    CHECK_FALSE(fr.trace.steps[0].has_prediction);
    CHECK(fr.trace.steps[1].has_prediction);
}

TEST_CASE("tape loss equals the plain forward loss bit for bit") {
    model::ModelConfig cfg;
    cfg.k = 3;
    cfg.f = 2;
    cfg.d = 4;
    cfg.m = 2;
    cfg.L = 6;
    cfg.finalize();
    model::ModelParams p = model::ModelParams::init(cfg, num::RandomSource(15));

    data::SynthConfig sc;
    sc.k = 3;
    sc.f = 2;
    sc.t = 40;
    sc.seed = 16;
    data::SynthResult res = data::synth_generate(sc);
    graph::AdjacencyMatrix adj = res.truth;
    data::Window w = synth_window(sc, 6, 1, 2);

    model::ForwardResult fr = model::forward_window(w, adj, p, cfg);
    double plain = model::loss(fr.predictions, w.targets, w.target_mask, cfg.task_weights);

    num::EvalResult er = num::grad_eval(
        [&](num::Tape& t, const std::vector<num::Value>& lv) {
            return model::window_loss_program(t, lv, w, adj, cfg);
        },
        p.set);
    CHECK(er.value == plain);
}

TEST_CASE("window loss gradients pass the finite-difference check") {
    model::ModelConfig cfg;
    cfg.k = 2;
    cfg.f = 2;
    cfg.d = 3;
    cfg.m = 2;
    cfg.L = 5;
    cfg.finalize();
    model::ModelParams p = model::ModelParams::init(cfg, num::RandomSource(23));

    data::SynthConfig sc;
    sc.k = 2;
    sc.f = 2;
    sc.t = 30;
    sc.seed = 24;
    data::SynthResult res = data::synth_generate(sc);
    data::Window w = synth_window(sc, 5, 1, 2);

    num::CheckReport rep = num::grad_check(
        [&](num::Tape& t, const std::vector<num::Value>& lv) {
            return model::window_loss_program(t, lv, w, res.truth, cfg);
        },
        p.set, 1e-5, 1e-4);
    INFO("worst ", rep.worst_param, " rel ", rep.max_rel_error);
    CHECK(rep.passed);
}

TEST_CASE("predictions are equivariant under node permutation") {
    model::ModelConfig cfg;
    cfg.k = 3;
    cfg.f = 2;
    cfg.d = 4;
    cfg.m = 2;
    cfg.L = 5;
    cfg.finalize();
    model::ModelParams p = model::ModelParams::init(cfg, num::RandomSource(31));

    data::SynthConfig sc;
    sc.k = 3;
    sc.f = 2;
    sc.t = 30;
    sc.seed = 32;
    data::SynthResult res = data::synth_generate(sc);
    data::Window w = synth_window(sc, 5, 1, 2);

    std::vector<std::size_t> perm{2, 0, 1};
    data::Window pw = w;
    for (auto& x : pw.inputs) {
        Matrix src = x;
        for (std::size_t k = 0; k < 3; ++k)
            for (std::size_t f = 0; f < 2; ++f) x(k, f) = src(perm[k], f);
    }
    graph::AdjacencyMatrix padj{Matrix(3, 3)};
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            padj.weights(i, j) = res.truth.weights(perm[i], perm[j]);
    model::ModelParams pp = p;
    for (std::size_t k = 0; k < 3; ++k) {
        for (std::size_t c = 0; c < cfg.dec_width(); ++c)
            pp.set["head.W"](k, c) = p.set["head.W"](perm[k], c);
        pp.set["head.b"](k, 0) = p.set["head.b"](perm[k], 0);
    }

    model::ForwardResult base = model::forward_window(w, res.truth, p, cfg);
    model::ForwardResult permuted = model::forward_window(pw, padj, pp, cfg);
    for (std::size_t r = 0; r < base.predictions.rows(); ++r)
        for (std::size_t k = 0; k < 3; ++k)
            CHECK(permuted.predictions(r, k) ==
                  doctest::Approx(base.predictions(r, perm[k])).epsilon(1e-12));
}

namespace {

struct TrainFixture {
    model::ModelConfig cfg;
    graph::AdjacencyMatrix adj;
    data::WindowBatch train_w, val_w;
};

TrainFixture small_training_setup(std::uint64_t seed) {
    TrainFixture fx;
    fx.cfg.k = 3;
    fx.cfg.f = 2;
    fx.cfg.d = 6;
    fx.cfg.m = 2;
    fx.cfg.L = 8;
    fx.cfg.seed = seed;
    fx.cfg.finalize();

    data::SynthConfig sc;
    sc.k = 3;
    sc.f = 2;
    sc.t = 160;
    sc.noise_scale = 0.05;
    sc.seed = 40;
    data::SynthResult res = data::synth_generate(sc);
    fx.adj = res.truth;
    data::NormStats stats = data::NormStats::compute(res.series);
    data::AlignedSeries norm = data::normalize(res.series, stats);
    data::SplitResult sp = data::split(norm, 0.7, 0.1, 0.2);
    fx.train_w = data::make_windows(sp.train, fx.cfg.L, fx.cfg.tau, fx.cfg.m);
    fx.val_w = data::make_windows(sp.val, fx.cfg.L, fx.cfg.tau, fx.cfg.m);
    return fx;
}

} // namespace

TEST_CASE("training reduces the loss and is bit-deterministic") {
    TrainFixture fx = small_training_setup(50);
    model::TrainConfig tc;
    tc.epochs = 12;
    tc.batch = 8;
    tc.max_windows_per_epoch = 40;

    model::TrainResult a = model::train(fx.train_w, fx.val_w, fx.adj, fx.cfg, tc);
    model::TrainResult b = model::train(fx.train_w, fx.val_w, fx.adj, fx.cfg, tc);

    REQUIRE(a.log.size() == 12);
    CHECK(a.log.back().train_loss < a.log.front().train_loss);
    for (std::size_t i = 0; i < a.params.set.count(); ++i)
        for (std::size_t j = 0; j < a.params.set.value(i).size(); ++j)
            CHECK(a.params.set.value(i).at(j) == b.params.set.value(i).at(j));
    for (std::size_t i = 0; i < a.log.size(); ++i) {
        CHECK(a.log[i].train_loss == b.log[i].train_loss);
        CHECK(a.log[i].val_loss == b.log[i].val_loss);
    }
}

TEST_CASE("early stopping restores the best validation parameters") {
    TrainFixture fx = small_training_setup(51);
    model::TrainConfig tc;
    tc.epochs = 60;
    tc.batch = 8;
    tc.patience = 3;
    tc.max_windows_per_epoch = 24;
    tc.adam.lr = 0.02; // aggressive on purpose so validation turns

    model::TrainResult r = model::train(fx.train_w, fx.val_w, fx.adj, fx.cfg, tc);
    if (r.early_stopped) {
        double best = r.log.front().val_loss;
        for (const auto& e : r.log) best = std::min(best, e.val_loss);
        double restored = 0.0;
        for (const auto& w : fx.val_w) {
            model::ForwardResult fr = model::forward_window(w, fx.adj, r.params, fx.cfg);
            restored += model::loss(fr.predictions, w.targets, w.target_mask,
                                    fx.cfg.task_weights);
        }
        restored /= static_cast<double>(fx.val_w.size());
        CHECK(restored == doctest::Approx(best).epsilon(1e-12));
    }
    CHECK(r.log.size() <= 60);
}

TEST_CASE("training surfaces numeric blowups with the epoch") {
    TrainFixture fx = small_training_setup(52);
    model::TrainConfig tc;
    tc.epochs = 50;
    tc.adam.lr = 1e200; // guaranteed overflow in the decoder products
    CHECK_THROWS_AS(model::train(fx.train_w, fx.val_w, fx.adj, fx.cfg, tc), NumericError);
}

TEST_CASE("predict matches the forward pass over the trailing window") {
    model::ModelConfig cfg;
    cfg.k = 2;
    cfg.f = 1;
    cfg.d = 3;
    cfg.m = 2;
    cfg.L = 6;
    cfg.finalize();
    model::ModelParams p = model::ModelParams::init(cfg, num::RandomSource(60));

    data::SynthConfig sc;
    sc.k = 2;
    sc.f = 1;
    sc.t = 40;
    sc.seed = 61;
    data::SynthResult res = data::synth_generate(sc);
    data::NormStats stats = data::NormStats::compute(res.series);
    data::AlignedSeries norm = data::normalize(res.series, stats);

    std::size_t t = 20; // 1-based
    std::vector<double> preds = model::predict(norm, t, res.truth, p, cfg);
    REQUIRE(preds.size() == 2);

    data::Window w;
    for (std::size_t s = t - cfg.L; s < t; ++s) w.inputs.push_back(norm.step_matrix(s));
    w.targets = Matrix(cfg.L - cfg.m + 1, 2);
    w.target_mask = Matrix(cfg.L - cfg.m + 1, 2, 1.0);
    model::ForwardResult fr = model::forward_window(w, res.truth, p, cfg);
    for (std::size_t k = 0; k < 2; ++k)
        CHECK(preds[k] == fr.predictions(fr.predictions.rows() - 1, k));

    CHECK_THROWS_AS(model::predict(norm, 1, res.truth, p, cfg), DataError);
    CHECK_THROWS_AS(model::predict(norm, 1000, res.truth, p, cfg), DataError);
}

TEST_CASE("model persistence round-trips bit-exactly") {
    model::ModelConfig cfg;
    cfg.k = 3;
    cfg.f = 2;
    cfg.d = 5;
    cfg.m = 2;
    cfg.L = 7;
    cfg.task_weights = {1, 2, 3};
    cfg.finalize();
    model::ModelParams p = model::ModelParams::init(cfg, num::RandomSource(70));

    namespace fs = std::filesystem;
    std::string path = (fs::temp_directory_path() / "model_rt.json").string();
    model::save_model(path, cfg, p);
    auto [cfg2, p2] = model::load_model(path);

    CHECK(cfg2.k == cfg.k);
    CHECK(cfg2.d == cfg.d);
    CHECK(cfg2.task_weights == cfg.task_weights);
    REQUIRE(p2.set.count() == p.set.count());
    for (std::size_t i = 0; i < p.set.count(); ++i) {
        CHECK(p2.set.name(i) == p.set.name(i));
        for (std::size_t j = 0; j < p.set.value(i).size(); ++j)
            CHECK(p2.set.value(i).at(j) == p.set.value(i).at(j));
    }

    std::string path2 = (fs::temp_directory_path() / "model_rt2.json").string();
    model::save_model(path2, cfg2, p2);
    CHECK(io::read_text(path) == io::read_text(path2));
}
