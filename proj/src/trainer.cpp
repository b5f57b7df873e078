#include "invrend/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "invrend/checkpoint.hpp"
#include "invrend/metrics.hpp"

namespace invrend {

using namespace ad;
namespace fs = std::filesystem;

LossEval evaluate_loss(const Fields& fields, const RayBatch& batch, const Config& config, std::size_t step,
                       bool want_grads, const FrozenState* frozen, FrozenState* record, std::mt19937_64* rng) {
    const std::size_t nr = batch.rays.size();
    if (nr == 0) throw std::invalid_argument("evaluate_loss: empty batch");
    const auto sdf = [&](const Tensor& x) { return fields.sdf_values(x); };
    const std::vector<std::vector<double>> t = frozen ? frozen->t : sample_rays(batch.rays, sdf, config.quadrature, rng);

    Graph graph;
    const std::vector<Var> bound = fields.params().bind(graph);
    NeuralSource source(fields, bound, true);
    RenderOptions opt;
    opt.bsdf = config.bsdf;
    if (frozen) opt.fixed_argmax = &frozen->argmax;
    const RenderBatch b = render_rays(graph, source, batch.rays, t, opt);

    const std::vector<double>& w_max = frozen ? frozen->w_max : b.w_max;
    const Tensor L_r_target = frozen ? frozen->L_r_target : b.L_r.value();
    if (record) {
        record->t = t;
        record->argmax = b.argmax;
        record->w_max = b.w_max;
        record->L_r_target = b.L_r.value();
    }

    // colour losses see foreground rays only; background is left to the mask term
    std::vector<std::size_t> fg;
    for (std::size_t r = 0; r < nr; ++r)
        if (batch.mask[r] > 0.5) fg.push_back(r);
    ColorLossVars color;
    if (fg.empty()) {
        color.l_r = color.l_surf = color.l_vol = graph.constant(Tensor::scalar(0.0));
    } else {
        const auto fg_idx = std::make_shared<const std::vector<std::size_t>>(fg);
        Tensor target = Tensor::matrix(fg.size(), 3), gt = Tensor::matrix(fg.size(), 3);
        std::vector<double> wm(fg.size());
        for (std::size_t i = 0; i < fg.size(); ++i) {
            for (int k = 0; k < 3; ++k) {
                target(i, k) = L_r_target(fg[i], k);
                gt(i, k) = batch.L_gt(fg[i], k);
            }
            wm[i] = w_max[fg[i]];
        }
        color = color_losses(index_rows(b.L_r, fg_idx), index_rows(b.L_surf, fg_idx), index_rows(b.L_vol, fg_idx),
                             graph.constant(std::move(gt)), target, wm);
    }
    const Var eik = eikonal_loss(b.shading.gradient);

    // surface points: the max-weight sample of each ray
    const auto rows = std::make_shared<const std::vector<std::size_t>>(b.surface_rows);
    const Tensor surface_x = index_rows(b.x, rows).value();
    Var hess;
    if (config.loss.hessian_mode == "exact") {
        const Var xs = graph.input(surface_x);
        hess = hessian_exact(graph, fields.eval_sdf(bound, xs, true).gradient, xs);
    } else {
        hess = hessian_fd(
            graph, [&](Var xq) { return fields.eval_sdf(bound, xq, true).gradient; }, surface_x,
            config.loss.hessian_step);
    }
    const Var hess_loss = hessian_loss(hess);

    std::vector<std::size_t> fg_rows;
    for (std::size_t r : fg) fg_rows.push_back(b.surface_rows[r]);
    Var light;
    if (fg_rows.size() >= 2) {
        const auto sr = std::make_shared<const std::vector<std::size_t>>(fg_rows);
        light = light_variance_loss(index_rows(b.x, sr), index_rows(b.shading.normal, sr),
                                    index_rows(b.shading.light_dir, sr), index_rows(b.shading.intensity, sr),
                                    config.loss);
    } else {
        light = graph.constant(Tensor::scalar(0.0));
    }
    const Var mask = mask_loss(b.w_sum, batch.mask);

    const LossWeights& w = config.loss;
    const double wh = hessian_weight_at(w, step, config.train.max_steps);
    Var total = add(add(color.l_r, scale(color.l_surf, w.lambda1)), scale(color.l_vol, w.lambda2));
    total = add(total, scale(eik, w.eikonal));
    total = add(total, scale(hess_loss, wh));
    total = add(total, scale(light, w.light));
    total = add(total, scale(mask, w.mask));

    LossEval out;
    LossBreakdown& lb = out.loss;
    lb.l_r = color.l_r.value().item();
    lb.l_surf = color.l_surf.value().item();
    lb.l_vol = color.l_vol.value().item();
    lb.eikonal = eik.value().item();
    lb.hessian = hess_loss.value().item();
    lb.light = light.value().item();
    lb.mask = mask.value().item();
    lb.total = total.value().item();
    for (double v : w_max) out.w_max_mean += v / static_cast<double>(nr);
    if (want_grads) out.grads = slot_gradients(graph.backward(total), bound);
    return out;
}

namespace {

std::uint64_t step_seed(std::uint64_t seed, std::size_t step) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(static_cast<std::uint64_t>(step) >> 32)};
    std::uint32_t words[2];
    seq.generate(words, words + 2);
    return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

bool finite(const LossBreakdown& l) {
    for (double v : {l.l_r, l.l_surf, l.l_vol, l.eikonal, l.hessian, l.light, l.mask, l.total})
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace

Trainer::Trainer(const Config& config, const SceneDataset& data)
    : Trainer(config, data, Fields(config.fields, config.train.seed), Adam(), 0) {
    adam_ = Adam(fields_.params().values());
}

Trainer::Trainer(const Config& config, const SceneDataset& data, Fields fields, Adam adam, std::size_t step)
    : config_(config), data_(data), fields_(std::move(fields)), adam_(std::move(adam)), step_(step) {
    validate_config(config_);
    if (data_.views.empty()) throw std::invalid_argument("trainer needs at least one view");
    holdout_ = holdout_views(data_.views.size(), config_.train.holdout_stride);
    for (std::size_t v : training_views(data_.views.size(), config_.train.holdout_stride)) {
        const Camera& cam = data_.views[v].camera;
        for (std::size_t y = 0; y < cam.height; ++y)
            for (std::size_t x = 0; x < cam.width; ++x)
                if (!ray_from_pixel(cam, static_cast<double>(x), static_cast<double>(y)).background)
                    pixels_.emplace_back(v, y * cam.width + x);
    }
    if (pixels_.empty()) throw std::invalid_argument("no training pixel sees the unit sphere");
}

RayBatch Trainer::sample_batch(std::mt19937_64& rng) const {
    RayBatch b;
    const std::size_t n = config_.train.rays_per_step;
    b.L_gt = Tensor::matrix(n, 3);
    b.mask.resize(n);
    std::uniform_int_distribution<std::size_t> pick(0, pixels_.size() - 1);
    for (std::size_t i = 0; i < n; ++i) {
        const auto [v, p] = pixels_[pick(rng)];
        const SceneView& view = data_.views[v];
        const std::size_t w = view.camera.width;
        b.rays.push_back(ray_from_pixel(view.camera, static_cast<double>(p % w), static_cast<double>(p / w)));
        for (int k = 0; k < 3; ++k) b.L_gt(i, k) = view.rgb[3 * p + k];
        b.mask[i] = view.mask[p];
    }
    return b;
}

StepResult Trainer::train_step() {
    std::mt19937_64 rng(step_seed(config_.train.seed, step_));
    const RayBatch batch = sample_batch(rng);
    std::mt19937_64* sampler = config_.quadrature.perturb ? &rng : nullptr;
    const LossEval e = evaluate_loss(fields_, batch, config_, step_, true, nullptr, nullptr, sampler);
    StepResult r;
    r.step = step_;
    r.loss = e.loss;
    double g2 = 0.0;
    for (const Tensor& g : e.grads)
        for (double v : g.data) g2 += v * v;
    r.grad_norm = std::sqrt(g2);
    if (!finite(e.loss) || !std::isfinite(r.grad_norm))
        throw NonFiniteLoss("non-finite loss or gradient at step " + std::to_string(step_) + ": " + loss_record_json(r));
    r.lr = lr_at(step_, config_.train);
    adam_.step(fields_.params().values(), e.grads, r.lr);
    ++step_;
    return r;
}

SyncRecord Trainer::validate() const {
    SyncRecord s;
    s.step = step_;
    const std::size_t idx = holdout_.empty() ? 0 : holdout_[std::min(config_.train.validation_view, holdout_.size() - 1)];
    s.view = idx;
    const SceneView& view = data_.views[idx];
    QuadratureConfig quad = config_.quadrature;
    quad.perturb = false;
    RenderOptions opt;
    opt.bsdf = config_.bsdf;
    const ImageSet img = render_image(fields_, view.camera, quad, opt);
    auto clamp01 = [](std::vector<double> v) {
        for (double& x : v) x = std::clamp(x, 0.0, 1.0);
        return v;
    };
    s.psnr_r = psnr(clamp01(img.radiance), view.rgb);
    s.psnr_surf = psnr(clamp01(img.surf), view.rgb);
    s.psnr_vol = psnr(clamp01(img.vol), view.rgb);
    return s;
}

std::string loss_record_json(const StepResult& r) {
    nlohmann::json j;
    j["step"] = r.step;
    j["l_r"] = r.loss.l_r;
    j["l_surf"] = r.loss.l_surf;
    j["l_vol"] = r.loss.l_vol;
    j["eikonal"] = r.loss.eikonal;
    j["hessian"] = r.loss.hessian;
    j["light"] = r.loss.light;
    j["mask"] = r.loss.mask;
    j["total"] = r.loss.total;
    j["lr"] = r.lr;
    j["grad_norm"] = r.grad_norm;
    return j.dump();
}

std::string sync_record_json(const SyncRecord& r) {
    nlohmann::json j;
    j["step"] = r.step;
    j["view"] = r.view;
    j["psnr_r"] = r.psnr_r;
    j["psnr_surf"] = r.psnr_surf;
    j["psnr_vol"] = r.psnr_vol;
    return j.dump();
}

void Trainer::run(const std::string& out_dir, std::optional<std::size_t> stop_at,
                  const std::function<void(const StepResult&)>& on_step) {
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    std::ofstream loss_log(dir / "loss.ndjson", std::ios::app);
    std::ofstream sync_log(dir / "sync.ndjson", std::ios::app);
    const std::size_t last = stop_at ? std::min(*stop_at, config_.train.max_steps) : config_.train.max_steps;
    const TrainConfig& tc = config_.train;
    auto checkpoint = [&] {
        char name[32];
        std::snprintf(name, sizeof name, "ckpt_%07zu.bin", step_);
        const Snapshot s = make_snapshot(config_, step_, fields_, adam_);
        save_checkpoint((dir / name).string(), s);
        save_checkpoint((dir / "latest.bin").string(), s);
    };
    while (step_ < last) {
        StepResult r;
        try {
            r = train_step();
        } catch (const std::exception& e) {
            std::ofstream dump(dir / "abort.json");
            nlohmann::json j;
            j["step"] = step_;
            j["error"] = e.what();
            dump << j.dump(2) << "\n";
            throw;
        }
        if (on_step) on_step(r);
        if (tc.log_every > 0 && (r.step % tc.log_every == 0 || step_ == last)) loss_log << loss_record_json(r) << "\n" << std::flush;
        if (tc.validate_every > 0 && step_ % tc.validate_every == 0) sync_log << sync_record_json(validate()) << "\n" << std::flush;
        if (tc.checkpoint_every > 0 && step_ % tc.checkpoint_every == 0) checkpoint();
    }
    checkpoint();
}

}  // namespace invrend
