// Acceptance checks. Each test is one criterion; a listener prints a single
// PASS/FAIL/SKIP line per criterion with the measured values.

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include <gsl/gsl_multimin.h>
#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "oracles.hpp"

using namespace usvseg;
namespace fs = std::filesystem;

namespace {

std::map<std::string, std::string>& details()
{
    static std::map<std::string, std::string> d;
    return d;
}

void report(const std::string& text)
{
    details()[::testing::UnitTest::GetInstance()->current_test_info()->name()] = text;
}

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

const std::map<std::string, std::string> kCriteria{
    {"EStepOracle", "E-step equals the nested-loop definition (50 instances <= 16x16, 1e-12)"},
    {"Normalization", "field rows sum to 1 / 2 / 2 / 1 after every iteration (1e-9)"},
    {"MStepOracle", "closed-form M-step matches numerical maximisation of the bound (20 x M=16, d=3, 1e-4)"},
    {"MomentMatching", "moment matching: exact mixture moments 1e-10, Monte Carlo 1e6 samples 1e-2"},
    {"Convergence", "EM converges within 10 iterations on >= 99/100 scenes, median <= 5"},
    {"EndToEnd", "100-scene suite: SSM F >= 0.90, aFP <= 0.10, UGM F strictly lower"},
    {"MetricUnits", "metric hand examples exact, p_success(0.772, 3) = 0.988 +- 0.001"},
    {"Performance", "median fit + detection per frame <= 50 ms (reported by run)"},
    {"Determinism", "two runs give byte-identical masks, edges, boxes and metrics"},
    {"DatasetReference", "optional: real-dataset run (USVSEG_DATASET_DIR)"},
};

class CriterionPrinter : public ::testing::EmptyTestEventListener {
    void OnTestEnd(const ::testing::TestInfo& info) override
    {
        const auto* r = info.result();
        const char* verdict = r->Skipped() ? "SKIP" : (r->Passed() ? "PASS" : "FAIL");
        const auto it = kCriteria.find(info.name());
        const std::string label = it == kCriteria.end() ? info.name() : it->second;
        const auto d = details().find(info.name());
        std::printf("%s  %s", verdict, label.c_str());
        if (d != details().end()) std::printf("  [%s]", d->second.c_str());
        std::printf("\n");
        std::fflush(stdout);
    }
};

// ---------------------------------------------------------------------------

struct CliRun {
    int code = -1;
    std::string output;
};

CliRun cli(const std::string& args)
{
    const std::string cmd = std::string(USVSEG_CLI_PATH) + " " + args + " 2>&1";
    CliRun r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    char buf[4096];
    std::size_t n = 0;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.output.append(buf, n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Matrix random_spd(int d, double floor, std::mt19937_64& rng)
{
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix a(d, d);
    for (int i = 0; i < d * d; ++i) a.data()[i] = n(rng);
    return a * a.transpose() / d * 0.1 + floor * Matrix::Identity(d, d);
}

// ---------------------------------------------------------------------------
// Numerical maximisation of the bound with GSL's BFGS and central-difference
// gradients of the library's lower_bound.

struct Objective {
    std::function<double(const gsl_vector*)> f;
};

double obj_f(const gsl_vector* x, void* p) { return static_cast<Objective*>(p)->f(x); }

void obj_df(const gsl_vector* x, void* p, gsl_vector* g)
{
    gsl_vector* y = gsl_vector_alloc(x->size);
    gsl_vector_memcpy(y, x);
    for (std::size_t i = 0; i < x->size; ++i) {
        const double xi = gsl_vector_get(x, i);
        const double h = 1e-5 * std::max(1.0, std::abs(xi));
        gsl_vector_set(y, i, xi + h);
        const double fp = obj_f(y, p);
        gsl_vector_set(y, i, xi - h);
        const double fm = obj_f(y, p);
        gsl_vector_set(y, i, xi);
        gsl_vector_set(g, i, (fp - fm) / (2.0 * h));
    }
    gsl_vector_free(y);
}

void obj_fdf(const gsl_vector* x, void* p, double* f, gsl_vector* g)
{
    *f = obj_f(x, p);
    obj_df(x, p, g);
}

std::vector<double> minimise(Objective& o, std::vector<double> start)
{
    const std::size_t n = start.size();
    gsl_multimin_function_fdf fn{&obj_f, &obj_df, &obj_fdf, n, &o};
    gsl_vector* x = gsl_vector_alloc(n);
    for (int restart = 0; restart < 3; ++restart) {
        for (std::size_t i = 0; i < n; ++i) gsl_vector_set(x, i, start[i]);
        gsl_multimin_fdfminimizer* s = gsl_multimin_fdfminimizer_alloc(gsl_multimin_fdfminimizer_vector_bfgs2, n);
        gsl_multimin_fdfminimizer_set(s, &fn, x, 0.01, 0.1);
        for (int it = 0; it < 2000; ++it) {
            if (gsl_multimin_fdfminimizer_iterate(s)) break;
            if (gsl_multimin_test_gradient(s->gradient, 1e-9) == GSL_SUCCESS) break;
        }
        for (std::size_t i = 0; i < n; ++i) start[i] = gsl_vector_get(s->x, i);
        gsl_multimin_fdfminimizer_free(s);
    }
    gsl_vector_free(x);
    return start;
}

struct MStepInstance {
    FeatureField features;
    CategoricalField q_hat, s_hat, prior;
    WeakPriors priors;
    MixtureParams old;
};

MStepInstance random_mstep_instance(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    MStepInstance in;
    in.features.width = 4;
    in.features.height = 4;
    in.features.values = Matrix(3, 16);
    for (int i = 0; i < in.features.values.size(); ++i) in.features.values.data()[i] = u(rng);
    in.q_hat = oracle::random_field(4, 4, rng).scaled(2.0);
    in.s_hat = oracle::random_field(4, 4, rng).scaled(2.0);
    in.prior = oracle::random_field(4, 4, rng);
    for (int k = 0; k < kGaussians; ++k) {
        in.priors.components[k].mean = Vector::NullaryExpr(3, [&] { return u(rng); });
        in.priors.components[k].cov = random_spd(3, 0.02, rng);
        in.old.components[k].mean = Vector::NullaryExpr(3, [&] { return u(rng); });
        in.old.components[k].cov = random_spd(3, 0.05, rng);
    }
    in.old.uniform_density = 1.0;
    return in;
}

} // namespace

// ---------------------------------------------------------------------------

TEST(Acceptance, EStepOracle)
{
    std::mt19937_64 rng(20240501);
    std::uniform_int_distribution<int> side(3, 16);
    const std::array<int, 3> working{50, 150, 250}; // kernels 3x3, 5x5, 7x7
    double worst = 0.0;
    for (int n = 0; n < 50; ++n) {
        const int w = side(rng), h = side(rng);
        const MrfKernels kernels = make_mrf_kernels(working[n % 3]);
        const auto pi = oracle::random_field(w, h, rng);
        const auto p = oracle::random_field(w, h, rng);
        const auto lib = e_step(pi, p, kernels);
        const auto ref = oracle::e_step(pi, p, kernels.lambda);
        for (int k = 0; k < kComponents; ++k)
            for (int i = 0; i < w * h; ++i) {
                worst = std::max({worst, std::abs(lib.s_hat(k, i) - ref.s_hat(k, i)),
                                  std::abs(lib.q_hat(k, i) - ref.q_hat(k, i)), std::abs(lib.prior(k, i) - ref.prior(k, i))});
            }
    }
    report("max |diff| " + fmt("%.2e", worst));
    EXPECT_LE(worst, 1e-12);
}

TEST(Acceptance, Normalization)
{
    double worst = 0.0;
    int iterations = 0;
    auto check = [&](const IterationView& v) {
        ++iterations;
        for (int i = 0; i < v.posterior.size(); ++i) {
            worst = std::max(worst, std::abs(v.estep.prior.row_sum(i) - 1.0));
            worst = std::max(worst, std::abs(v.estep.s_hat.row_sum(i) - 2.0));
            worst = std::max(worst, std::abs(v.estep.q_hat.row_sum(i) - 2.0));
            worst = std::max(worst, std::abs(v.posterior.row_sum(i) - 1.0));
        }
    };
    EmConfig cfg;
    cfg.tol = 1e-6; // run every iteration
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (bool mrf : {true, false}) {
        cfg.use_mrf = mrf;
        for (int n = 0; n < 10; ++n) {
            // random features and parameters
            FeatureField f;
            f.width = 16;
            f.height = 12;
            f.values = Matrix(5, 16 * 12);
            for (int i = 0; i < f.values.size(); ++i) f.values.data()[i] = u(rng);
            MixtureParams params;
            for (auto& g : params.components) g = {Vector::NullaryExpr(5, [&] { return u(rng); }), random_spd(5, 0.05, rng)};
            params.uniform_density = 1.0;
            WeakPriors priors;
            for (auto& g : priors.components) g = {Vector::NullaryExpr(5, [&] { return u(rng); }), random_spd(5, 0.05, rng)};
            fit(f, params, oracle::random_field(16, 12, rng), priors, make_mrf_kernels(50), cfg, check);

            // synthetic scene at working resolution
            const auto frame = generate_sequence(random_scene(300 + n, SuiteOptions{})).front().image;
            const auto in = fixture::first_frame_inputs(frame);
            const DetectorState state = DetectorState::create(fixture::synthetic_priors(), {});
            fit(in.features, in.params, in.prior, state.priors, in.kernels, cfg, check);
        }
    }
    report("max row-sum error " + fmt("%.2e", worst) + " over " + std::to_string(iterations) + " iterations");
    EXPECT_GT(iterations, 200);
    EXPECT_LE(worst, 1e-9);
}

TEST(Acceptance, MStepOracle)
{
    std::mt19937_64 rng(1729);
    double worst = 0.0, alt_worst = 0.0, alt_sum = 0.0;
    std::ostringstream rep;
    rep << "instance  component  |mu_closed - mu_opt|  |Sigma_closed - Sigma_opt|  |mu_alt - mu_opt|\n";
    for (int n = 0; n < 20; ++n) {
        const MStepInstance in = random_mstep_instance(rng);
        const MStepResult closed = m_step(in.features, in.q_hat, in.priors, in.old, 0.0);
        for (int k = 0; k < kGaussians; ++k) {
            ASSERT_FALSE(closed.frozen[k]);
            // mean, old covariance held fixed
            MixtureParams trial = in.old;
            Objective mean_obj{[&](const gsl_vector* x) {
                for (int a = 0; a < 3; ++a) trial.components[k].mean(a) = gsl_vector_get(x, a);
                return -lower_bound(in.features, trial, in.prior, in.q_hat, in.s_hat, in.priors);
            }};
            const auto mu = minimise(mean_obj, {in.old.components[k].mean(0), in.old.components[k].mean(1),
                                                in.old.components[k].mean(2)});
            const Vector mu_opt = Eigen::Map<const Vector>(mu.data(), 3);

            // covariance, mean held at the closed-form value; Cholesky factor with log diagonal
            trial = in.old;
            trial.components[k].mean = closed.params.components[k].mean;
            auto chol = [](const gsl_vector* x) {
                Matrix l = Matrix::Zero(3, 3);
                int j = 0;
                for (int r = 0; r < 3; ++r)
                    for (int c = 0; c <= r; ++c, ++j) l(r, c) = r == c ? std::exp(gsl_vector_get(x, j)) : gsl_vector_get(x, j);
                return Matrix(l * l.transpose());
            };
            Objective cov_obj{[&](const gsl_vector* x) {
                trial.components[k].cov = chol(x);
                return -lower_bound(in.features, trial, in.prior, in.q_hat, in.s_hat, in.priors);
            }};
            const Matrix l0 = in.old.components[k].cov.llt().matrixL();
            std::vector<double> start;
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c <= r; ++c) start.push_back(r == c ? std::log(l0(r, c)) : l0(r, c));
            const auto lx = minimise(cov_obj, start);
            gsl_vector* gx = gsl_vector_alloc(6);
            for (int j = 0; j < 6; ++j) gsl_vector_set(gx, j, lx[j]);
            const Matrix cov_opt = chol(gx);
            gsl_vector_free(gx);

            const double dmu = (closed.params.components[k].mean - mu_opt).cwiseAbs().maxCoeff();
            const double dcov = (closed.params.components[k].cov - cov_opt).cwiseAbs().maxCoeff();
            worst = std::max({worst, dmu, dcov});

            // alternative closed form: beta^-1 (Lambda S^-1 sum q y - Sp^-1 mu_p)
            const Eigen::Map<const Vector> resp(in.q_hat.planes[k].data.data(), 16);
            const double beta = resp.sum();
            const Matrix s_inv = in.old.components[k].cov.inverse();
            const Matrix sp_inv = in.priors.components[k].cov.inverse();
            const Matrix lambda = (s_inv + sp_inv).inverse();
            const Vector alt =
                (lambda * s_inv * (in.features.values * resp) - sp_inv * in.priors.components[k].mean) / beta;
            const double dalt = (alt - mu_opt).cwiseAbs().maxCoeff();
            alt_worst = std::max(alt_worst, dalt);
            alt_sum += dalt;
            char line[160];
            std::snprintf(line, sizeof line, "%8d  %9d  %20.3e  %26.3e  %21.3e\n", n, k + 1, dmu, dcov, dalt);
            rep << line;
        }
    }
    rep << "alternative-form mean distance: max " << alt_worst << ", average " << alt_sum / 60.0 << "\n";
    std::ofstream("mstep_discrepancy_report.txt") << rep.str();
    std::printf("%s", rep.str().c_str());
    report("closed vs optimiser max " + fmt("%.2e", worst) + "; alternative form off by up to " + fmt("%.2f", alt_worst) +
           " (mstep_discrepancy_report.txt)");
    EXPECT_LE(worst, 1e-4);
}

TEST(Acceptance, MomentMatching)
{
    std::mt19937_64 rng(4096);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double exact_worst = 0.0;
    for (int d : {1, 3, 5}) {
        for (double alpha : {0.0, 0.25, 0.6, 1.0}) {
            const GaussianComponent a{Vector::NullaryExpr(d, [&] { return u(rng); }), random_spd(d, 0.2, rng)};
            const GaussianComponent b{Vector::NullaryExpr(d, [&] { return u(rng); }), random_spd(d, 0.2, rng)};
            const auto m = merge_moment_match(a, b, alpha);
            // direct mixture moments, entry by entry
            for (int r = 0; r < d; ++r) {
                const double mean = alpha * a.mean(r) + (1 - alpha) * b.mean(r);
                exact_worst = std::max(exact_worst, std::abs(m.mean(r) - mean));
                for (int c = 0; c < d; ++c) {
                    const double second = alpha * (a.cov(r, c) + a.mean(r) * a.mean(c)) +
                                          (1 - alpha) * (b.cov(r, c) + b.mean(r) * b.mean(c));
                    const double cov = second - mean * (alpha * a.mean(c) + (1 - alpha) * b.mean(c));
                    exact_worst = std::max(exact_worst, std::abs(m.cov(r, c) - cov));
                }
            }
        }
    }

    double mc_worst = 0.0;
    for (int d : {1, 3}) {
        for (double alpha : {0.6, 0.3}) {
            const GaussianComponent a{Vector::NullaryExpr(d, [&] { return u(rng); }), random_spd(d, 0.2, rng)};
            const GaussianComponent b{Vector::NullaryExpr(d, [&] { return u(rng); }), random_spd(d, 0.2, rng)};
            const auto m = merge_moment_match(a, b, alpha);
            const Matrix la = a.cov.llt().matrixL(), lb = b.cov.llt().matrixL();
            std::normal_distribution<double> z(0.0, 1.0);
            std::bernoulli_distribution pick(alpha);
            const int n = 1000000;
            Vector sum = Vector::Zero(d);
            Matrix outer = Matrix::Zero(d, d);
            Vector e(d), x(d);
            for (int s = 0; s < n; ++s) {
                for (int i = 0; i < d; ++i) e(i) = z(rng);
                x = pick(rng) ? Vector(a.mean + la * e) : Vector(b.mean + lb * e);
                sum += x;
                outer.noalias() += x * x.transpose();
            }
            const Vector mean = sum / n;
            const Matrix cov = outer / n - mean * mean.transpose();
            mc_worst = std::max({mc_worst, (mean - m.mean).cwiseAbs().maxCoeff(), (cov - m.cov).cwiseAbs().maxCoeff()});
        }
    }
    report("exact " + fmt("%.2e", exact_worst) + ", Monte Carlo " + fmt("%.2e", mc_worst));
    EXPECT_LE(exact_worst, 1e-10);
    EXPECT_LE(mc_worst, 1e-2);
}

TEST(Acceptance, Convergence)
{
    const DetectorState state = DetectorState::create(fixture::synthetic_priors(), {});
    int converged = 0;
    std::vector<double> iterations;
    for (int n = 0; n < 100; ++n) {
        const auto frame = generate_sequence(random_scene(2000 + n, SuiteOptions{})).front().image;
        const auto in = fixture::first_frame_inputs(frame);
        const auto r = fit(in.features, in.params, in.prior, state.priors, in.kernels, EmConfig{});
        converged += r.converged;
        iterations.push_back(r.iterations);
    }
    const double med = median(iterations);
    report(std::to_string(converged) + "/100 converged, median " + fmt("%.1f", med) + " iterations, max " +
           fmt("%.0f", *std::max_element(iterations.begin(), iterations.end())));
    EXPECT_GE(converged, 99);
    EXPECT_LE(med, 5.0);
}

TEST(Acceptance, EndToEnd)
{
    std::map<Mode, Metrics> metrics;
    for (Mode mode : {Mode::SSM, Mode::UGM}) {
        DetectorConfig cfg;
        cfg.mode = mode;
        std::vector<MatchOutcome> outcomes;
        std::vector<double> rmses;
        for (int n = 0; n < 100; ++n) {
            const auto spec = random_scene(1000 + n, SuiteOptions{});
            const auto frame = generate_sequence(spec).front();
            const auto [r, next] = process_frame(DetectorState::create(fixture::synthetic_priors(), cfg), frame.image);
            ASSERT_TRUE(r.ok) << r.error;
            const auto ev = evaluate_frame(r.obstacles, r.edge, frame.annotation, spec.width, spec.height, EvalOptions{});
            outcomes.push_back(ev.outcome);
            rmses.push_back(ev.edge_rmse);
        }
        metrics[mode] = aggregate(outcomes, rmses);
    }
    const auto& ssm = metrics[Mode::SSM];
    const auto& ugm = metrics[Mode::UGM];
    std::printf("SSM\n%sUGM\n%s", format_metrics_table(ssm).c_str(), format_metrics_table(ugm).c_str());
    report("SSM F " + fmt("%.3f", ssm.f) + " aFP " + fmt("%.3f", ssm.afp) + " Edg " + fmt("%.2f", ssm.edg) + "; UGM F " +
           fmt("%.3f", ugm.f) + " aFP " + fmt("%.3f", ugm.afp));
    EXPECT_GE(ssm.f, 0.90);
    EXPECT_LE(ssm.afp, 0.10);
    EXPECT_LT(ugm.f, ssm.f);
}

TEST(Acceptance, MetricUnits)
{
    int checks = 0;
    auto ok = [&](bool c) {
        ++checks;
        EXPECT_TRUE(c) << "check " << checks;
    };
    // edge RMSE
    ok(edge_rmse(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3}) == 0.0);
    ok(edge_rmse(std::vector<double>{15, 25, 35}, std::vector<double>{10, 20, 30}) == 5.0);
    ok(edge_rmse(std::vector<double>{3, 4}, std::vector<double>{0, 0}) == std::sqrt(12.5));
    // matching
    const BoundingBox g{0, 0, 10, 10};
    auto m = match_detections({g}, {g});
    ok(m.tp == 1 && m.fp == 0 && m.fn == 0);
    m = match_detections({{50, 50, 5, 5}}, {g});
    ok(m.tp == 0 && m.fp == 1 && m.fn == 1);
    m = match_detections({{0, 0, 6, 10}, {0, 0, 10, 4}}, {g});
    ok(m.tp == 1 && m.fp == 1 && m.fn == 0);
    // size filter
    const std::vector<BoundingBox> dets{{3, 4, 5, 6}, {20, 20, 2, 9}}, gts{{1, 1, 7, 7}};
    ok(size_filter(dets, gts, 0.0) == std::pair{dets, gts});
    const auto small = size_filter({{99, 99, 5, 5}}, {{100, 100, 4, 4}}, 10.0);
    ok(small.first.empty() && small.second.empty());
    const auto large = size_filter({{0, 0, 40, 40}}, {{0, 0, 40, 40}}, 30.0);
    ok(large.first.size() == 1 && large.second.size() == 1);
    // aggregate
    const auto perfect = aggregate(std::vector<MatchOutcome>{{1, 0, 0, {}}}, std::vector<double>{0.0});
    ok(perfect.prec == 1.0 && perfect.rec == 1.0 && perfect.f == 1.0 && perfect.afp == 0.0);
    const auto none = aggregate(std::vector<MatchOutcome>{{0, 2, 3, {}}, {0, 0, 1, {}}}, std::vector<double>{1, 3});
    ok(none.prec == 0.0 && none.rec == 0.0 && none.f == 0.0 && none.afp == 1.0 && none.edg == 2.0);
    // detection probability
    const double p = p_success(0.772, 3);
    ok(std::abs(p - 0.988) <= 0.001);
    ok(p_success(1.0, 3) == 1.0 && p_success(0.0, 3) == 0.0);
    report(std::to_string(checks) + " checks, p_success(0.772, 3) = " + fmt("%.4f", p));
}

namespace {

/// A 30-frame 640x480 synthetic sequence, priors and annotations on disk.
struct SequenceOnDisk {
    fs::path root;

    SequenceOnDisk()
    {
        root = fs::temp_directory_path() / "usvseg_acceptance";
        fs::remove_all(root);
        fs::create_directories(root);
        save_priors(root / "priors.json", fixture::synthetic_priors());
        SuiteOptions opt;
        opt.width = 640;
        opt.height = 480;
        opt.frames = 30;
        write_json_file(root / "scene.json", scene_to_json(random_scene(31337, opt)));
        const CliRun r = cli("synth " + q(root / "scene.json") + " --out " + q(root / "seq"));
        if (r.code != 0) throw std::runtime_error("synth failed: " + r.output);
    }
    ~SequenceOnDisk() { fs::remove_all(root); }

    CliRun run(const std::string& name) const
    {
        return cli("run " + q(root / "seq" / "frames") + " --priors " + q(root / "priors.json") + " --out " + q(root / name));
    }
};

const SequenceOnDisk& sequence()
{
    static const SequenceOnDisk s;
    return s;
}

} // namespace

TEST(Acceptance, Performance)
{
    const auto& seq = sequence();
    const CliRun r = seq.run("perf");
    ASSERT_EQ(r.code, 0) << r.output;
    std::printf("%s", r.output.c_str());
    const auto timing = read_json_file(seq.root / "perf" / "timing.json");
    const double fit_detect = timing["median_fit_detect_ms"].get<double>();
    report("median fit+detect " + fmt("%.2f", fit_detect) + " ms (fit " +
           fmt("%.2f", timing["median_fit_ms"].get<double>()) + ", detect " +
           fmt("%.2f", timing["median_detect_ms"].get<double>()) + ") over " + std::to_string(timing["frames"].get<int>()) +
           " frames of 640x480");
    EXPECT_LE(fit_detect, 50.0);
}

TEST(Acceptance, Determinism)
{
    const auto& seq = sequence();
    for (const char* name : {"det_a", "det_b"}) {
        const CliRun r = seq.run(name);
        ASSERT_EQ(r.code, 0) << r.output;
        const CliRun ev = cli("evaluate " + q(seq.root / name) + " " + q(seq.root / "seq" / "annotations"));
        ASSERT_EQ(ev.code, 0) << ev.output;
    }
    int compared = 0, differing = 0;
    for (const auto& e : fs::directory_iterator(seq.root / "det_a")) {
        const std::string f = e.path().filename().string();
        if (f == "timing.json") continue;
        ++compared;
        if (read_file_bytes(e.path()) != read_file_bytes(seq.root / "det_b" / f)) ++differing;
    }
    report(std::to_string(compared) + " files compared, " + std::to_string(differing) + " differ");
    EXPECT_EQ(compared, 30 * 3 + 1);
    EXPECT_EQ(differing, 0);
}

TEST(Acceptance, DatasetReference)
{
    // Layout: $USVSEG_DATASET_DIR/{frames/, annotations/, priors.json}, annotations
    // in this library's JSON schema.
    const char* dir = std::getenv("USVSEG_DATASET_DIR");
    if (!dir) GTEST_SKIP() << "USVSEG_DATASET_DIR not set";
    const fs::path root(dir);
    const fs::path out = fs::temp_directory_path() / "usvseg_dataset_run";
    const CliRun r = cli("run " + q(root / "frames") + " --priors " + q(root / "priors.json") + " --out " + q(out));
    ASSERT_EQ(r.code, 0) << r.output;
    const CliRun ev = cli("evaluate " + q(out) + " " + q(root / "annotations") + " --nbuf 3");
    ASSERT_EQ(ev.code, 0) << ev.output;
    std::printf("%s", ev.output.c_str());
    const auto m = read_json_file(out / "metrics.json");
    // reference figures for calm conditions: Edg 9.2, Prec 0.885, Rec 0.772, F 0.819, aFP 0.039
    report("F " + fmt("%.3f", m["F"].get<double>()) + " (reference 0.819), Edg " + fmt("%.1f", m["Edg"].get<double>()) +
           " (reference 9.2)");
    EXPECT_NEAR(m["F"].get<double>(), 0.819, 0.05);
}

int main(int argc, char** argv)
{
    ::testing::InitGoogleTest(&argc, argv);
    ::testing::UnitTest::GetInstance()->listeners().Append(new CriterionPrinter);
    return RUN_ALL_TESTS();
}
