// Acceptance suite: one test per criterion, each printing a pass/fail line.

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "l0sparse/l0sparse.hpp"
#include "feature_oracle.hpp"
#include "least_squares.hpp"

using namespace l0sparse;

namespace {

void report(const char* name) {
    std::printf("[ACCEPTANCE] %s: %s\n", name, ::testing::Test::HasFailure() ? "FAIL" : "PASS");
    std::fflush(stdout);
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

// y = 1.5 x0 - 0.8 x1^3 + noise over U(-1.5, 1.5)^2.
Dataset cubic_task(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Dataset ds;
    ds.inputs = Matrix(n, 2);
    ds.targets = Matrix(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        const double x0 = rng.uniform(-1.5, 1.5);
        const double x1 = rng.uniform(-1.5, 1.5);
        ds.inputs(i, 0) = x0;
        ds.inputs(i, 1) = x1;
        ds.targets(i, 0) = 1.5 * x0 - 0.8 * x1 * x1 * x1 + rng.normal(0.0, 0.01);
    }
    return ds;
}

// Transitions sampled away from the speed/torque clips, so the theta_dot
// update is exactly linear in [1, cos, sin, theta_dot, a].
Dataset clip_free_transitions(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Dataset ds;
    ds.inputs = Matrix(n, 4);
    ds.targets = Matrix(n, 3);
    for (std::size_t i = 0; i < n; ++i) {
        PendulumState s{rng.uniform(-M_PI, M_PI), rng.uniform(-6.0, 6.0)};
        const double a = rng.uniform(-2.0, 2.0);
        const StepResult r = step(s, a);
        EXPECT_LT(std::fabs(r.next.theta_dot), pendulum::kMaxSpeed);
        ds.inputs(i, 0) = std::cos(s.theta);
        ds.inputs(i, 1) = std::sin(s.theta);
        ds.inputs(i, 2) = s.theta_dot;
        ds.inputs(i, 3) = a;
        for (std::size_t c = 0; c < 3; ++c) ds.targets(i, c) = r.obs_next[c];
    }
    return ds;
}

double mean_predictor_mse(const Dataset& train, const Dataset& test) {
    const std::size_t cols = train.targets.cols();
    std::vector<double> means(cols, 0.0);
    for (std::size_t r = 0; r < train.targets.rows(); ++r)
        for (std::size_t c = 0; c < cols; ++c) means[c] += train.targets(r, c);
    for (double& m : means) m /= static_cast<double>(train.targets.rows());
    double acc = 0.0;
    for (std::size_t r = 0; r < test.targets.rows(); ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            const double d = test.targets(r, c) - means[c];
            acc += d * d;
        }
    return acc / static_cast<double>(test.targets.rows() * cols);
}

}  // namespace

// 1. Empirical CDF of 1e6 binary-concrete samples vs the analytic CDF (DKW at
//    99.9%) for log_alpha in {-2, 0, 1.5}; empirical P(z=0) at log_alpha = 0.
TEST(Acceptance, C1_DistributionCorrectness) {
    GateConfig cfg;
    const std::size_t n = 1000000;
    const double dkw = 0.0019494746035204052;  // sqrt(ln(2/0.001) / (2e6))
    Rng rng(1001);
    for (double la : {-2.0, 0.0, 1.5}) {
        GateVector gates{{la}};
        std::vector<double> d(n);
        std::size_t zeros = 0;
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> u = {rng.uniform_open()};
            GateSample s = sample_gates(gates, cfg, u);
            d[i] = s.cache.d[0];
            if (s.z[0] == 0.0) ++zeros;
        }
        std::sort(d.begin(), d.end());
        double sup = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double F = gate_cdf(d[i], la, cfg);
            sup = std::max(sup, std::fabs(F - static_cast<double>(i + 1) / n));
            sup = std::max(sup, std::fabs(F - static_cast<double>(i) / n));
        }
        EXPECT_LT(sup, dkw) << "log_alpha=" << la;
        if (la == 0.0) EXPECT_NEAR(static_cast<double>(zeros) / n, 0.1682, 0.002);
    }
    report("criterion 1 distribution correctness");
}

// 2. prob_active = 1 - Q_dbar(0) to 1e-12; penalty gradient vs central
//    differences at h = 1e-6, rel err < 1e-5.
TEST(Acceptance, C2_PenaltyIdentity) {
    GateConfig cfg;
    Rng rng(1002);
    const double h = 1e-6;
    for (int i = 0; i < 100; ++i) {
        const double la = rng.uniform(-6.0, 6.0);
        GateVector g{{la}};
        const double p = prob_active(g, cfg)[0];
        EXPECT_NEAR(p, 1.0 - gate_cdf(0.0, la, cfg, true), 1e-12);

        const double analytic = penalty_and_grad(g, cfg).grad[0];
        const double numeric = (penalty_and_grad(GateVector{{la + h}}, cfg).value -
                                penalty_and_grad(GateVector{{la - h}}, cfg).value) /
                               (2.0 * h);
        EXPECT_LT(std::fabs(analytic - numeric) / std::fabs(numeric), 1e-5);
    }
    report("criterion 2 penalty identity");
}

// 3. Finite-difference gradient checks for every layer and every model kind
//    with frozen gate noise, 20 seeds, rel err < 1e-4.
TEST(Acceptance, C3_GradientSuite) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng(seed);

        {  // dense + elu stack
            DenseLayer fc1(4, 6, true, rng);
            EluLayer elu;
            DenseLayer fc2(6, 2, false, rng);
            Matrix x(3, 4), target(3, 2);
            for (double& v : x.span()) v = rng.uniform(-1.5, 1.5);
            for (double& v : target.span()) v = rng.uniform(-1.5, 1.5);
            auto loss = [&] {
                return mse_loss(
                           fc2.forward(elu.forward(fc1.forward(x, Mode::train), Mode::train),
                                       Mode::train),
                           target)
                    .loss;
            };
            fc1.zero_grad();
            fc2.zero_grad();
            MseResult mse = mse_loss(
                fc2.forward(elu.forward(fc1.forward(x, Mode::train), Mode::train), Mode::train),
                target);
            fc1.backward(elu.backward(fc2.backward(mse.d_pred)));
            std::vector<ParamView> blocks;
            fc1.collect_params("fc1", blocks);
            fc2.collect_params("fc2", blocks);
            GradCheckReport rep = gradient_check(loss, blocks, 1e-5, 1e-4);
            EXPECT_TRUE(rep.pass) << "dense/elu seed " << seed << " err " << rep.max_rel_err;
        }

        for (GateGranularity gran : {GateGranularity::per_input_row, GateGranularity::per_element}) {
            GateConfig cfg;
            L0DenseLayer layer(3, 2, true, cfg, gran, rng);
            std::vector<double> noise(layer.gate_count());
            for (double& u : noise) u = rng.uniform(0.25, 0.75);
            Matrix x(3, 3), target(3, 2);
            for (double& v : x.span()) v = rng.uniform(-1.5, 1.5);
            for (double& v : target.span()) v = rng.uniform(-1.5, 1.5);
            auto loss = [&] { return mse_loss(layer.forward(x, Mode::train, noise), target).loss; };
            layer.zero_grad();
            MseResult mse = mse_loss(layer.forward(x, Mode::train, noise), target);
            layer.backward(mse.d_pred);
            std::vector<ParamView> blocks;
            layer.collect_params("l0", blocks);
            GradCheckReport rep = gradient_check(loss, blocks, 1e-5, 1e-4);
            EXPECT_TRUE(rep.pass) << "l0dense seed " << seed << " err " << rep.max_rel_err;
        }

        for (ModelKind kind : {ModelKind::fcnn, ModelKind::sparse_fcnn, ModelKind::l0_sindy}) {
            ModelSpec spec;
            spec.kind = kind;
            spec.input_dim = 4;
            spec.output_dim = 2;
            spec.h_dim = 8;
            if (kind == ModelKind::l0_sindy) spec.library = LibrarySpec::polynomial_lib(2);
            Model model(spec, seed * 31 + 7);

            Rng noise_rng(seed * 17 + 3);
            GateNoise noise = model.draw_gate_noise(noise_rng);
            for (std::vector<double>& layer_noise : noise.per_layer)
                for (double& u : layer_noise) u = 0.25 + 0.5 * noise_rng.uniform();

            Matrix x(3, 4), target(3, 2);
            for (double& v : x.span()) v = rng.uniform(-1.0, 1.0);
            for (double& v : target.span()) v = rng.uniform(-1.0, 1.0);
            const bool gated = model.gated_layer_count() > 0;
            auto loss = [&] {
                return mse_loss(model.forward_inputs(x, Mode::train, gated ? &noise : nullptr),
                                target)
                    .loss;
            };
            model.zero_grad();
            MseResult mse = mse_loss(
                model.forward_inputs(x, Mode::train, gated ? &noise : nullptr), target);
            model.backward(mse.d_pred);
            std::vector<ParamView> blocks = model.parameters();
            GradCheckReport rep = gradient_check(loss, blocks, 1e-5, 1e-4);
            EXPECT_TRUE(rep.pass) << to_string(kind) << " seed " << seed << " err "
                                  << rep.max_rel_err;
        }
    }
    report("criterion 3 gradient suite");
}

// 4. Polynomial transform vs brute-force enumeration to 1e-12; dimension
//    formula C(d+deg, deg) for dims 1-6, degrees 1-4.
TEST(Acceptance, C4_FeatureLibraryOracle) {
    Rng rng(1004);
    for (std::size_t dim = 1; dim <= 6; ++dim) {
        for (int degree = 1; degree <= 4; ++degree) {
            const LibrarySpec spec = LibrarySpec::polynomial_lib(degree);
            const FeatureMap map = library_dim_and_names(spec, dim);
            EXPECT_EQ(map.n_features, testutil::binomial(dim + degree, degree));

            const auto oracle = testutil::oracle_monomials(dim, degree, true, true);
            ASSERT_EQ(oracle.size(), map.n_features);
            Matrix x(8, dim);
            for (double& v : x.span()) v = rng.uniform(-2.0, 2.0);
            const Matrix phi = transform(spec, x);
            for (std::size_t r = 0; r < x.rows(); ++r)
                for (std::size_t f = 0; f < oracle.size(); ++f)
                    EXPECT_NEAR(phi(r, f), testutil::oracle_eval(oracle[f], x.row(r)), 1e-12);
        }
    }
    report("criterion 4 feature-library oracle");
}

// 5. Degree-1 dictionary with lambda = 0 on 20,000 clip-free transitions
//    recovers the theta_dot row within 2% and matches least squares to 1e-3.
TEST(Acceptance, C5_ExactDynamicsRecovery) {
    const Dataset train = clip_free_transitions(20000, 1005);

    ModelSpec spec;
    spec.kind = ModelKind::l0_sindy;
    spec.input_dim = 4;
    spec.output_dim = 3;
    spec.library = LibrarySpec::polynomial_lib(1);
    Model model(spec, 55);

    TrainConfig cfg;
    cfg.lambda = 0.0;
    cfg.learning_rate = 5e-3;
    cfg.epochs = 800;
    cfg.seed = 56;
    ASSERT_FALSE(fit(model, train, train, cfg).aborted);
    cfg.learning_rate = 2e-4;
    cfg.epochs = 300;
    ASSERT_FALSE(fit(model, train, train, cfg).aborted);

    // Effective coefficients of the theta_dot output row.
    const std::vector<Equation> eqs = model.extract_equations(0.0);
    std::vector<double> learned(5, 0.0);
    for (const EquationTerm& t : eqs[2].terms) learned[t.feature] = t.coefficient;

    EXPECT_NEAR(learned[2] / 0.73575, 1.0, 0.02);  // sin(theta)
    EXPECT_NEAR(learned[3] / 1.0, 1.0, 0.02);      // theta_dot
    EXPECT_NEAR(learned[4] / 0.15, 1.0, 0.02);     // action

    const Matrix phi = transform(*spec.library, train.inputs);
    const auto ols = testutil::least_squares(phi, train.targets);
    for (std::size_t f = 0; f < 5; ++f)
        EXPECT_NEAR(learned[f], ols[2][f], 1e-3) << "feature " << f;
    report("criterion 5 exact dynamics recovery");
}

// 6. Synthetic cubic task: some lambda in {0.01, 0.1, 1} recovers exactly the
//    two-term true support with coefficients within 5%.
TEST(Acceptance, C6_SupportRecovery) {
    const Dataset train = cubic_task(2000, 1006);
    const Dataset test = cubic_task(500, 1007);
    const std::size_t x0_feature = 1, x1_cubed_feature = 9;

    bool recovered = false;
    for (double lambda : {0.01, 0.1, 1.0}) {
        ModelSpec spec;
        spec.kind = ModelKind::l0_sindy;
        spec.input_dim = 2;
        spec.output_dim = 1;
        spec.library = LibrarySpec::polynomial_lib(3);
        spec.gates.lambda = lambda;
        Model model(spec, 66);

        TrainConfig cfg;
        cfg.lambda = lambda;
        cfg.learning_rate = 5e-3;
        cfg.epochs = 1500;
        cfg.seed = 67;
        if (fit(model, train, test, cfg).aborted) continue;
        cfg.learning_rate = 5e-4;
        cfg.epochs = 500;
        if (fit(model, train, test, cfg).aborted) continue;

        const std::vector<Equation> eqs = model.extract_equations();
        if (eqs[0].terms.size() != 2) continue;
        if (eqs[0].terms[0].feature != x0_feature || eqs[0].terms[1].feature != x1_cubed_feature)
            continue;
        const double c0 = eqs[0].terms[0].coefficient;
        const double c1 = eqs[0].terms[1].coefficient;
        if (std::fabs(c0 - 1.5) / 1.5 < 0.05 && std::fabs(c1 + 0.8) / 0.8 < 0.05) {
            recovered = true;
            break;
        }
    }
    EXPECT_TRUE(recovered);
    report("criterion 6 support recovery");
}

// 7. Desk-scale replication: 100 episodes, 100 epochs, batch 256. All three
//    transition models beat the mean predictor tenfold; sparse models end
//    with fewer active gates than they started with at lambda = 1.
TEST(Acceptance, C7_DeskScaleReplication) {
    const ReplayBuffer train_buffer = collect_dataset(100, 200, 1008);
    const ReplayBuffer test_buffer = collect_dataset(20, 200, 1009);
    const Dataset train = make_dataset(train_buffer, TrainTarget::transition);
    const Dataset test = make_dataset(test_buffer, TrainTarget::transition);
    const double baseline = mean_predictor_mse(train, test);
    ASSERT_GT(baseline, 0.0);

    for (ModelKind kind : {ModelKind::fcnn, ModelKind::sparse_fcnn, ModelKind::l0_sindy}) {
        ModelSpec spec;
        spec.kind = kind;
        spec.input_dim = 4;
        spec.output_dim = 3;
        spec.h_dim = 256;
        spec.gates.lambda = 1.0;
        if (kind == ModelKind::l0_sindy) spec.library = LibrarySpec::polynomial_lib(3);
        Model model(spec, 77);

        const bool gated = kind != ModelKind::fcnn;
        const std::size_t initial_active = gated ? model.sparsity_counts().active_gates : 0;

        TrainConfig cfg;  // lr 1e-3, batch 256 defaults
        cfg.epochs = 100;
        cfg.lambda = 1.0;
        cfg.seed = 78;
        const TrainResult result = fit(model, train, test, cfg);
        ASSERT_FALSE(result.aborted) << to_string(kind);

        const double final_test = result.metrics.epochs.back().test_mse;
        EXPECT_LT(final_test, baseline / 10.0)
            << to_string(kind) << ": test_mse=" << final_test << " baseline=" << baseline;
        if (gated) {
            EXPECT_LT(result.metrics.epochs.back().active_gates, initial_active)
                << to_string(kind);
        }
        std::printf("  [desk-scale] %-12s test_mse=%.6f baseline=%.6f active %zu -> %zu\n",
                    to_string(kind), final_test, baseline, initial_active,
                    gated ? result.metrics.epochs.back().active_gates : 0);
    }
    report("criterion 7 desk-scale replication");
}

// 8. Determinism and round trips: identical seeds give identical metrics,
//    dataset and checkpoint files round-trip bit-exactly, and extracted
//    equations re-evaluate to the model forward pass within 1e-10.
TEST(Acceptance, C8_DeterminismAndRoundTrips) {
    // Byte-identical metrics (modulo the wall-clock seconds column).
    const ReplayBuffer train_buffer = collect_dataset(5, 50, 1010);
    const ReplayBuffer test_buffer = collect_dataset(2, 50, 1011);
    ModelSpec spec;
    spec.kind = ModelKind::sparse_fcnn;
    spec.input_dim = 4;
    spec.output_dim = 3;
    spec.h_dim = 16;
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 64;
    cfg.seed = 88;

    auto run_once = [&](const std::string& tag) {
        Model model(spec, 88);
        TrainResult r = train_model(model, train_buffer, test_buffer, cfg);
        const std::string path = temp_path("acc8_" + tag + ".csv");
        write_metrics_csv(r.metrics, path);
        std::ifstream is(path);
        std::string line, stripped;
        while (std::getline(is, line)) stripped += line.substr(0, line.rfind(',')) + "\n";
        return stripped;
    };
    EXPECT_EQ(run_once("a"), run_once("b"));

    // Dataset round trip, bit-exact.
    const std::string ds_path = temp_path("acc8_dataset.bin");
    save_dataset(train_buffer, ds_path);
    const ReplayBuffer loaded = load_dataset(ds_path);
    ASSERT_EQ(loaded.count(), train_buffer.count());
    bool ds_equal = loaded.obs_raw() == train_buffer.obs_raw() &&
                    loaded.act_raw() == train_buffer.act_raw() &&
                    loaded.reward_raw() == train_buffer.reward_raw() &&
                    loaded.next_obs_raw() == train_buffer.next_obs_raw() &&
                    loaded.done_raw() == train_buffer.done_raw();
    EXPECT_TRUE(ds_equal);

    // Checkpoint round trip, bit-exact.
    ModelSpec sindy;
    sindy.kind = ModelKind::l0_sindy;
    sindy.input_dim = 4;
    sindy.output_dim = 3;
    sindy.library = LibrarySpec::generalized_lib(
        {LibrarySpec::polynomial_lib(2), LibrarySpec::fourier_lib(1)});
    Model m(sindy, 99);
    Rng jitter(100);
    for (ParamView& p : m.parameters())
        for (double& v : p.value) v = jitter.uniform(-2.0, 2.0);
    const std::string ck_path = temp_path("acc8_model.ckpt");
    save_model(m, ck_path);
    Model m2 = load_model(ck_path);
    auto pa = m.parameters(), pb = m2.parameters();
    ASSERT_EQ(pa.size(), pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i)
        for (std::size_t j = 0; j < pa[i].value.size(); ++j)
            ASSERT_EQ(pa[i].value[j], pb[i].value[j]);

    // Equations re-evaluate to the forward pass.
    const std::vector<Equation> eqs = m.extract_equations();
    for (int trial = 0; trial < 25; ++trial) {
        Matrix x(1, 4);
        for (double& v : x.span()) v = jitter.uniform(-2.0, 2.0);
        const Matrix y = m.forward_inputs(x, Mode::infer);
        for (std::size_t o = 0; o < 3; ++o)
            EXPECT_NEAR(m.evaluate_equation(eqs[o], x), y(0, o), 1e-10);
    }
    report("criterion 8 determinism and round trips");
}
