// invrend: synth | train | render | mesh | eval

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>
#include <omp.h>

#include "invrend/checkpoint.hpp"
#include "invrend/config.hpp"
#include "invrend/dataset.hpp"
#include "invrend/image_io.hpp"
#include "invrend/mesh.hpp"
#include "invrend/metrics.hpp"
#include "invrend/renderer.hpp"
#include "invrend/trainer.hpp"

using namespace invrend;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kBadConfig = 2, kDataError = 3, kNumericAbort = 4 };

struct Common {
    std::string config_path, out = ".";
    std::optional<std::uint64_t> seed;
    int threads = 0;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config_path, "JSON config file");
    app->add_option("--out", c.out, "output directory");
    app->add_option("--seed", c.seed, "random seed (train.seed)");
    app->add_option("--threads", c.threads, "OpenMP threads (1 gives bitwise-reproducible runs)");
    app->add_option("overrides", c.overrides, "dotted key=value config overrides");
}

Config resolve(const Common& c, Config base) {
    if (!c.config_path.empty()) base = load_config(c.config_path);
    if (c.seed) base.train.seed = *c.seed;
    return base;
}

void finish_config(Config& cfg, const Common& c) {
    for (const auto& o : c.overrides) apply_override(cfg, o);
    validate_config(cfg);
    fs::create_directories(c.out);
    std::ofstream(fs::path(c.out) / "config.json") << config_to_json(cfg);
}

void write_images(const ImageSet& img, const fs::path& dir) {
    fs::create_directories(dir);
    const std::size_t w = img.width, h = img.height;
    write_png((dir / "surf.png").string(), to_image(img.surf, w, h, 3, true));
    write_png((dir / "radiance.png").string(), to_image(img.radiance, w, h, 3, true));
    write_png((dir / "vol.png").string(), to_image(img.vol, w, h, 3, true));
    write_png((dir / "albedo.png").string(), to_image(img.albedo, w, h, 3, true));
    write_png((dir / "normal.png").string(), normals_to_image(img.normal, img.foreground, w, h));
    write_png((dir / "light_dir.png").string(), normals_to_image(img.light_dir, img.foreground, w, h));
    write_png((dir / "roughness.png").string(), to_image(img.roughness, w, h, 1, false));
    write_png((dir / "metallic.png").string(), to_image(img.metallic, w, h, 1, false));
}

RenderOptions render_options(const Config& cfg) {
    RenderOptions o;
    o.bsdf = cfg.bsdf;
    return o;
}

QuadratureConfig eval_quadrature(const Config& cfg) {
    QuadratureConfig q = cfg.quadrature;
    q.perturb = false;
    return q;
}

MaterialMesh extract_mesh(const Fields& fields, std::size_t grid) {
    MaterialMesh mesh = marching_cubes([&](const Tensor& x) { return fields.sdf_values(x); }, grid);
    attach_materials(mesh, fields);
    return mesh;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Single-stage neural inverse rendering: geometry, material and light from posed images"};
    app.require_subcommand(1);

    Common c;
    std::string data_dir, checkpoint, images_dir, resume;
    std::optional<std::size_t> steps, views, resolution, view_index;
    std::string shape;
    std::vector<double> eye;
    std::size_t grid = 256, chamfer_points = 100000;

    auto* synth = app.add_subcommand("synth", "write a synthetic dataset with analytic ground truth");
    add_common(synth, c);
    synth->add_option("--views", views, "number of views (default 24)");
    synth->add_option("--resolution", resolution, "image width and height (default 64)");
    synth->add_option("--shape", shape, "sphere or rounded-box");

    auto* train = app.add_subcommand("train", "optimise all fields on a dataset");
    add_common(train, c);
    train->add_option("--data", data_dir, "dataset directory")->required();
    train->add_option("--steps", steps, "training steps (train.max_steps)");
    train->add_option("--resume", resume, "checkpoint to continue from");

    auto* render = app.add_subcommand("render", "render maps from a checkpoint");
    add_common(render, c);
    render->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
    render->add_option("--data", data_dir, "dataset directory (for --view)");
    render->add_option("--view", view_index, "camera index in the dataset");
    render->add_option("--eye", eye, "novel camera position x y z (looks at the origin)")->expected(3);
    render->add_option("--resolution", resolution, "novel view width and height (default 64)");

    auto* mesh = app.add_subcommand("mesh", "extract the zero level set with per-vertex materials");
    add_common(mesh, c);
    mesh->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
    mesh->add_option("--grid", grid, "marching cubes resolution (default 256)");

    auto* eval = app.add_subcommand("eval", "PSNR on held-out views and Chamfer distance to ground truth");
    add_common(eval, c);
    eval->add_option("--data", data_dir, "dataset directory")->required();
    eval->add_option("--checkpoint", checkpoint, "checkpoint file");
    eval->add_option("--images", images_dir, "directory of rendered NNN.png to score instead of a checkpoint");
    eval->add_option("--grid", grid, "marching cubes resolution for Chamfer (default 256)");
    eval->add_option("--points", chamfer_points, "surface samples per mesh for Chamfer (default 100000)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kBadConfig;
    }

    try {
        if (c.threads > 0) omp_set_num_threads(c.threads);

        if (*synth) {
            Config cfg = resolve(c, Config{});
            if (views) cfg.synth.views = *views;
            if (resolution) cfg.synth.resolution = *resolution;
            if (!shape.empty()) cfg.synth.shape = shape;
            finish_config(cfg, c);
            const SceneDataset data = make_synthetic(synth_spec(cfg));
            save_dataset(data, c.out);
            std::cerr << "wrote " << data.views.size() << " views to " << c.out << "\n";
        } else if (*train) {
            std::optional<Snapshot> snap;
            if (!resume.empty()) snap = load_checkpoint(resume);
            Config cfg = resolve(c, snap ? snap->config : Config{});
            if (steps) cfg.train.max_steps = *steps;
            finish_config(cfg, c);
            const SceneDataset data = load_dataset(data_dir);
            std::optional<Trainer> trainer;
            if (snap) {
                snap->config = cfg;
                trainer.emplace(cfg, data, restore_fields(*snap), restore_adam(*snap), snap->step);
            } else {
                trainer.emplace(cfg, data);
            }
            trainer->run(c.out, std::nullopt, [&](const StepResult& r) {
                if (cfg.train.log_every > 0 && r.step % cfg.train.log_every == 0)
                    std::cerr << "step " << r.step << " loss " << r.loss.total << " l_r " << r.loss.l_r << " lr " << r.lr
                              << "\n";
            });
        } else if (*render) {
            const Snapshot snap = load_checkpoint(checkpoint);
            Config cfg = snap.config;
            finish_config(cfg, c);
            const Fields fields = restore_fields(snap);
            Camera cam;
            if (!eye.empty()) {
                const std::size_t res = resolution.value_or(64);
                cam = look_at({eye[0], eye[1], eye[2]}, {0, 0, 0}, {0, 0, 1}, res, res,
                              cfg.synth.half_fov_deg * std::numbers::pi / 180.0);
            } else {
                if (data_dir.empty() || !view_index) throw ConfigError("render needs --data with --view, or --eye");
                const SceneDataset data = load_dataset(data_dir);
                if (*view_index >= data.views.size()) throw DataError("--view is out of range");
                cam = data.views[*view_index].camera;
            }
            write_images(render_image(fields, cam, eval_quadrature(cfg), render_options(cfg)), c.out);
        } else if (*mesh) {
            const Snapshot snap = load_checkpoint(checkpoint);
            Config cfg = snap.config;
            finish_config(cfg, c);
            const Fields fields = restore_fields(snap);
            export_ply(extract_mesh(fields, grid), (fs::path(c.out) / "mesh.ply").string());
        } else if (*eval) {
            if (checkpoint.empty() == images_dir.empty()) throw ConfigError("eval needs exactly one of --checkpoint or --images");
            std::optional<Snapshot> snap;
            if (!checkpoint.empty()) snap = load_checkpoint(checkpoint);
            Config cfg = snap ? snap->config : resolve(c, Config{});
            finish_config(cfg, c);
            const SceneDataset data = load_dataset(data_dir);
            std::optional<Fields> fields;
            if (snap) fields.emplace(restore_fields(*snap));
            nlohmann::json out;
            out["views"] = nlohmann::json::array();
            double sum = 0.0;
            const auto held = holdout_views(data.views.size(), cfg.train.holdout_stride);
            if (held.empty()) throw DataError("dataset has no held-out views");
            for (std::size_t v : held) {
                std::vector<double> pred;
                const SceneView& view = data.views[v];
                if (fields) {
                    pred = render_image(*fields, view.camera, eval_quadrature(cfg), render_options(cfg)).surf;
                } else {
                    char name[32];
                    std::snprintf(name, sizeof name, "%03zu.png", v);
                    const Image8 img = read_png((fs::path(images_dir) / name).string(), 3);
                    if (img.width != view.camera.width || img.height != view.camera.height)
                        throw DataError(std::string("rendered image ") + name + " has the wrong size");
                    for (unsigned char b : img.data) pred.push_back(decode_gamma(b));
                }
                for (double& x : pred) x = std::clamp(x, 0.0, 1.0);
                const double p = psnr(pred, view.rgb);
                out["views"].push_back({{"view", v}, {"psnr", p}});
                sum += p;
            }
            out["psnr_mean"] = sum / static_cast<double>(held.size());
            if (fields && data.gt) {
                const MaterialMesh m = extract_mesh(*fields, grid);
                const std::vector<Vec3> a = sample_surface(m, chamfer_points, 1);
                std::vector<Vec3> b;
                if (data.gt->shape == "sphere") {
                    b = sample_sphere(data.gt->radius, chamfer_points, 2);
                } else {
                    const GroundTruth gt = *data.gt;
                    b = sample_surface(marching_cubes([&](const Tensor& x) {
                        std::vector<double> f(x.rows());
                        for (std::size_t i = 0; i < x.rows(); ++i) f[i] = gt_sdf(gt, {x(i, 0), x(i, 1), x(i, 2)});
                        return f;
                    }, grid), chamfer_points, 2);
                }
                out["chamfer"] = chamfer_distance(a, b);
            }
            std::ofstream(fs::path(c.out) / "metrics.json") << out.dump(2) << "\n";
            std::cout << out.dump(2) << "\n";
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kBadConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kDataError;
    } catch (const CheckpointError& e) {
        std::cerr << "checkpoint error: " << e.what() << "\n";
        return kDataError;
    } catch (const EmptySurface& e) {
        std::cerr << "mesh error: " << e.what() << "\n";
        return kDataError;
    } catch (const NumericError& e) {
        std::cerr << "numeric abort: " << e.what() << "\n";
        return kNumericAbort;
    } catch (const NonFiniteLoss& e) {
        std::cerr << "numeric abort: " << e.what() << "\n";
        return kNumericAbort;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kOk;
}
