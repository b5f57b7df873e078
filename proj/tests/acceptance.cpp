// Acceptance report: one PASS/FAIL line per criterion. Criteria 5 and 7 read
// a finished toy run from --run-dir, training one there first when none exists.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <sys/wait.h>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bsdf_oracle.hpp"
#include "gradcheck.hpp"
#include "invrend/checkpoint.hpp"
#include "invrend/mesh.hpp"
#include "invrend/metrics.hpp"
#include "rays.hpp"

using namespace invrend;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

SphereScene gt_sphere(const Config& c, double sharpness) {
    SphereScene sc;
    sc.radius = c.synth.radius;
    sc.sharpness = sharpness;
    sc.albedo = c.synth.albedo;
    sc.roughness = c.synth.roughness;
    sc.metallic = c.synth.metallic;
    sc.light_dir = normalized(Vec3{c.synth.light_dir[0], c.synth.light_dir[1], c.synth.light_dir[2]});
    sc.intensity = c.synth.intensity;
    return sc;
}

Outcome gradient_check(const Config& c, const SceneDataset& data) {
    Fields fields(c.fields, c.train.seed);
    const RayBatch batch = testing::foreground_batch(data, 0, 4, 1);
    const auto samples = testing::check_loss_gradient(fields, batch, c, 0, testing::pick_params(fields.params(), 50, 7));
    double worst = 0.0;
    std::size_t bad = 0;
    for (const auto& s : samples) {
        worst = std::max(worst, s.rel);
        bad += !(s.rel < 1e-4);
    }
    return {bad == 0 && batch.rays.size() == 4,
            fmt("%zu params over 4 networks, %zu rays, max rel err %.2e, %zu above 1e-4", samples.size(),
                batch.rays.size(), worst, bad)};
}

Outcome bsdf_check() {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto unit = [&] {
        V3<double> v{g(rng), g(rng), g(rng)};
        const double n = std::sqrt(bsdf::dot3(v, v));
        return V3<double>{v[0] / n, v[1] / n, v[2] / n};
    };
    std::size_t bad = 0, lit = 0;
    double worst = 0.0;
    for (int k = 0; k < 10000; ++k) {
        const auto n = unit(), v = unit(), l = unit();
        const V3<double> col{u(rng), u(rng), u(rng)};
        const double r = u(rng), m = u(rng);
        const auto got = bsdf_eval(n, v, l, col, r, m);
        const auto want = testing::oracle_bsdf(n, v, l, col, r, m);
        lit += bsdf::dot3(n, l) > 0.0;
        for (int ch = 0; ch < 3; ++ch) {
            const double err = std::fabs(got.total[ch] - want.total[ch]) / std::max(1.0, std::fabs(want.total[ch]));
            worst = std::max(worst, err);
            bad += !(err <= 1e-12);
        }
    }
    return {bad == 0, fmt("10000 configurations (%zu lit), max err %.2e, %zu channels above 1e-12", lit, worst, bad)};
}

Outcome weight_check(const Config& c) {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst_sum = 0.0;
    bool in_range = true;
    for (int k = 0; k < 1000; ++k) {
        std::vector<double> a(1 + rng() % 128);
        for (double& x : a) x = u(rng);
        const WeightProfile p = weights(a);
        double prod = 1.0, sum = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            prod *= 1.0 - a[i];
            sum += p.w[i];
            in_range &= p.w[i] >= 0.0 && p.w[i] <= 1.0;
        }
        worst_sum = std::max(worst_sum, std::fabs(sum - (1.0 - prod)));
    }
    std::size_t within = 0;
    double worst_dt = 0.0;
    for (int k = 0; k < 100; ++k) {
        const Ray ray = testing::random_hitting_ray(rng, c.synth.radius);
        const double hit = testing::sphere_hit(ray.origin, ray.dir, c.synth.radius);
        const auto t = stratified_samples(ray, 256, nullptr);
        std::vector<double> f(t.size());
        for (std::size_t i = 0; i < t.size(); ++i) f[i] = length(ray.origin + ray.dir * t[i]) - c.synth.radius;
        const std::size_t i = weights(interval_alphas(f, 64.0)).argmax;
        const double err = std::fabs(0.5 * (t[i] + t[i + 1]) - hit) / (t[1] - t[0]);
        worst_dt = std::max(worst_dt, err);
        within += err <= 1.0;
    }
    const bool pass = worst_sum <= 1e-12 && in_range && within == 100;
    return {pass, fmt("1000 profiles: max |sum w - (1 - prod)| %.2e, w in [0,1]: %s; sphere s=64 n=256: %zu/100 rays "
                      "within one interval (worst %.2f intervals)",
                      worst_sum, in_range ? "yes" : "no", within, worst_dt)};
}

Outcome quadrature_check(const Config& c) {
    std::mt19937_64 rng(13);
    std::vector<Ray> rays;
    for (int k = 0; k < 100; ++k) rays.push_back(testing::random_hitting_ray(rng, c.synth.radius));
    const SphereScene sc = gt_sphere(c, 64.0);
    auto render = [&](std::size_t n) {
        std::vector<std::vector<double>> t;
        for (const Ray& r : rays) t.push_back(stratified_samples(r, n, nullptr));
        ad::Graph g;
        return render_rays(g, AnalyticSource(sc), rays, t).L_vol.value();
    };
    const Tensor ref = render(4096), got = render(512);
    std::size_t ok = 0, dark = 0, terminator = 0;
    double worst_dark = 0.0;
    for (std::size_t r = 0; r < rays.size(); ++r) {
        bool ray_ok = true;
        double peak = 0.0, abs_err = 0.0;
        for (int k = 0; k < 3; ++k) {
            const double x = got(r, k), y = ref(r, k);
            ray_ok &= x == y || std::fabs(x - y) < 0.01 * std::fabs(y);
            peak = std::max(peak, y);
            abs_err = std::max(abs_err, std::fabs(x - y));
        }
        ok += ray_ok;
        if (ray_ok) continue;
        const Vec3 hit = rays[r].origin + rays[r].dir * testing::sphere_hit(rays[r].origin, rays[r].dir, sc.radius);
        if (peak < 1e-3) {
            ++dark;
            worst_dark = std::max(worst_dark, abs_err);
        } else if (std::fabs(dot(normalized(hit), sc.light_dir)) < 0.1) {
            ++terminator;
        }
    }
    return {ok == rays.size(),
            fmt("%zu/100 rays within 1%% on every channel; of the %zu failing, %zu are shadowed (reference < 1e-3, "
                "max abs diff %.1e) and %zu lie within |n.l| < 0.1 of the terminator",
                ok, rays.size() - ok, dark, worst_dark, terminator)};
}

Outcome loss_arithmetic() {
    const LossWeights w;
    const double v = total_color(0.1, 0.2, 0.3, w);
    return {v == 0.1 + 0.0003 * 0.2 + 0.0001 * 0.3 && std::fabs(v - 0.10009) <= 1e-15 && w.lambda1 == 0.0003 &&
                w.lambda2 == 0.0001,
            fmt("total_color(0.1, 0.2, 0.3) = %.17g with lambda1 %g, lambda2 %g", v, w.lambda1, w.lambda2)};
}

/// Config equality ignoring how often the run logs, validates and saves.
bool same_training(Config a, Config b) {
    for (Config* c : {&a, &b}) {
        c->train.log_every = 0;
        c->train.validate_every = 0;
        c->train.checkpoint_every = 0;
    }
    return config_to_json(a) == config_to_json(b);
}

struct ToyRun {
    std::optional<Snapshot> snap;
    std::string problem;
};

int cli(const std::string& args) {
    const std::string cmd = std::string(INVREND_CLI) + " " + args + " >&2";
    std::fprintf(stderr, "+ %s\n", cmd.c_str());
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

/// The toy run in `dir`, trained there with the CLI (resuming from
/// latest.bin) unless a finished run with the same config already exists.
ToyRun ensure_run(const std::string& config_path, const Config& c, const fs::path& dir, bool allow_train) {
    const fs::path latest = dir / "latest.bin";
    std::optional<Snapshot> snap;
    if (fs::exists(latest)) {
        snap = load_checkpoint(latest.string());
        if (!same_training(snap->config, c)) return {std::nullopt, "run in " + dir.string() + " used a different config"};
        if (snap->step >= c.train.max_steps) return {snap, ""};
    }
    if (!allow_train) return {std::nullopt, "no finished run in " + dir.string()};
    const fs::path data = dir / "data";
    if (!fs::exists(data / "cameras.json") && cli("synth --config " + config_path + " --out " + data.string()) != 0)
        return {std::nullopt, "synth failed"};
    std::string args = "train --config " + config_path + " --data " + data.string() + " --out " + dir.string() +
                       " --threads 1";
    if (snap) args += " --resume " + latest.string();
    if (cli(args) != 0) return {std::nullopt, "training failed"};
    return {load_checkpoint(latest.string()), ""};
}

Outcome toy_inversion(const ToyRun& run, const SceneDataset& data) {
    if (!run.snap) return {false, run.problem};
    const Snapshot& s = *run.snap;
    const Config& c = s.config;
    const Fields fields = restore_fields(s);
    QuadratureConfig quad = c.quadrature;
    quad.perturb = false;
    RenderOptions opt;
    opt.bsdf = c.bsdf;
    double worst_psnr = 1e9, mean_psnr = 0.0;
    const auto held = holdout_views(data.views.size(), c.train.holdout_stride);
    std::string per_view;
    for (std::size_t v : held) {
        std::vector<double> img = render_image(fields, data.views[v].camera, quad, opt).surf;
        for (double& x : img) x = std::clamp(x, 0.0, 1.0);
        const double p = psnr(img, data.views[v].rgb);
        worst_psnr = std::min(worst_psnr, p);
        mean_psnr += p / static_cast<double>(held.size());
        per_view += fmt(" %zu:%.2f", v, p);
    }

    MaterialMesh mesh = marching_cubes([&](const Tensor& x) { return fields.sdf_values(x); }, 256);
    attach_materials(mesh, fields);
    const double cd = chamfer_distance(sample_surface(mesh, 100000, 1), sample_sphere(c.synth.radius, 100000, 2));

    const Vec3 l = normalized(Vec3{c.synth.light_dir[0], c.synth.light_dir[1], c.synth.light_dir[2]});
    std::array<double, 3> albedo{};
    std::size_t lit = 0;
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        if (dot(normalized(mesh.vertices[i]), l) <= 0.0) continue;
        for (int k = 0; k < 3; ++k) albedo[k] += mesh.albedo[i][k];
        ++lit;
    }
    double worst_albedo = 0.0;
    for (int k = 0; k < 3; ++k) {
        albedo[k] /= static_cast<double>(std::max<std::size_t>(lit, 1));
        worst_albedo = std::max(worst_albedo, std::fabs(albedo[k] - c.synth.albedo[k]));
    }
    const bool pass = worst_psnr >= 25.0 && cd <= 0.02 && worst_albedo <= 0.1 && lit > 0;
    return {pass, fmt("step %zu; held-out L_surf PSNR%s (min %.2f, mean %.2f, need >= 25); Chamfer %.4f (need <= 0.02); "
                      "lit albedo (%.3f, %.3f, %.3f) vs (%.1f, %.1f, %.1f), max dev %.3f (need <= 0.1)",
                      s.step, per_view.c_str(), worst_psnr, mean_psnr, cd, albedo[0], albedo[1], albedo[2],
                      c.synth.albedo[0], c.synth.albedo[1], c.synth.albedo[2], worst_albedo)};
}

Outcome sync_observable(const ToyRun& run, const fs::path& dir) {
    if (!run.snap) return {false, run.problem};
    const std::size_t max_steps = run.snap->config.train.max_steps;
    std::set<std::size_t> seen;
    nlohmann::json last;
    std::ifstream in(dir / "sync.ndjson");
    std::string line;
    bool finite = true;
    while (std::getline(in, line)) {
        const auto j = nlohmann::json::parse(line);
        for (const char* k : {"psnr_r", "psnr_surf", "psnr_vol"})
            finite &= j.contains(k) && std::isfinite(j[k].get<double>());
        seen.insert(j["step"].get<std::size_t>());
        if (j["step"].get<std::size_t>() == max_steps) last = j;
    }
    std::size_t expected = 0, present = 0;
    for (std::size_t s = 2500; s <= max_steps; s += 2500) {
        ++expected;
        present += seen.count(s);
    }
    if (last.is_null()) return {false, fmt("no validation record at step %zu", max_steps)};
    const double gap = std::fabs(last["psnr_surf"].get<double>() - last["psnr_r"].get<double>());
    return {finite && present == expected && gap <= 3.0,
            fmt("%zu/%zu records every 2500 steps, all three series finite: %s; final L_r %.2f, L_surf %.2f, L_vol %.2f "
                "dB, |surf - r| %.2f (need <= 3)",
                present, expected, finite ? "yes" : "no", last["psnr_r"].get<double>(), last["psnr_surf"].get<double>(),
                last["psnr_vol"].get<double>(), gap)};
}

Outcome determinism(const std::string& config_path, const fs::path& dir) {
    const fs::path data = dir / "determinism_data";
    if (!fs::exists(data / "cameras.json") && cli("synth --config " + config_path + " --out " + data.string()) != 0)
        return {false, "synth failed"};
    std::string bytes[2];
    for (int k = 0; k < 2; ++k) {
        const fs::path out = dir / ("determinism_" + std::to_string(k));
        fs::remove_all(out);
        if (cli("train --config " + config_path + " --data " + data.string() + " --out " + out.string() +
                " --threads 1 --steps 1000 train.checkpoint_every=1000 train.validate_every=0") != 0)
            return {false, "training failed"};
        bytes[k] = read_text(out / "ckpt_0001000.bin");
    }
    const bool pass = !bytes[0].empty() && bytes[0] == bytes[1];
    return {pass, fmt("two --threads 1 CLI runs, checkpoints at step 1000 of %zu bytes: %s", bytes[0].size(),
                      pass ? "identical" : "different")};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance report"};
    std::string config_path = INVREND_TOY_CONFIG, run_dir = "acceptance_run";
    std::vector<int> only;
    bool no_train = false;
    app.add_option("--config", config_path, "toy config");
    app.add_option("--run-dir", run_dir, "directory of the toy run (criteria 5, 7 and 8 write here)");
    app.add_option("--only", only, "criteria to run");
    app.add_flag("--no-train", no_train, "fail criteria 5 and 7 instead of training when no finished run exists");
    CLI11_PARSE(app, argc, argv);

    const Config c = load_config(config_path);
    const SceneDataset data = make_synthetic(synth_spec(c));
    const fs::path dir(run_dir);
    std::optional<ToyRun> run;
    auto toy = [&]() -> const ToyRun& {
        if (!run) run = ensure_run(config_path, c, dir, !no_train);
        return *run;
    };

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"gradient correctness", [&] { return gradient_check(c, data); }},
        {"BSDF oracle equivalence", bsdf_check},
        {"weight-function invariants", [&] { return weight_check(c); }},
        {"quadrature convergence", [&] { return quadrature_check(c); }},
        {"end-to-end toy inversion", [&] { return toy_inversion(toy(), data); }},
        {"loss arithmetic", loss_arithmetic},
        {"synchronization observable", [&] { return sync_observable(toy(), dir); }},
        {"determinism", [&] { return determinism(config_path, dir); }},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("criterion %d %s: %s (%.1fs) %s\n", id, criteria[i].first.c_str(), o.pass ? "PASS" : "FAIL", secs,
                    o.detail.c_str());
        std::fflush(stdout);
        failed += !o.pass;
    }
    return failed == 0 ? 0 : 1;
}
