#pragma once

#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "invrend/config.hpp"
#include "invrend/dataset.hpp"
#include "invrend/fields.hpp"
#include "invrend/losses.hpp"
#include "invrend/optim.hpp"
#include "invrend/renderer.hpp"

namespace invrend {

/// Rays with their ground truth.
struct RayBatch {
    std::vector<Ray> rays;
    Tensor L_gt;                // [R,3] linear RGB
    std::vector<double> mask;  // [R]
};

/// Everything that depends discontinuously on the parameters. Recorded on
/// one evaluation and replayed to make the loss a smooth function of the
/// parameters (finite-difference checks).
struct FrozenState {
    std::vector<std::vector<double>> t;
    std::vector<std::size_t> argmax;
    std::vector<double> w_max;
    Tensor L_r_target;
};

struct LossEval {
    LossBreakdown loss;
    std::vector<Tensor> grads;  // per parameter slot; empty unless requested
    double w_max_mean = 0.0;
};

/// Total loss on a batch at `step` of training (the step only sets the
/// Hessian weight). Sample depths come from `frozen` if given, else from
/// importance sampling with `rng` (nullptr: deterministic midpoints). When
/// `record` is non-null the discontinuous choices are stored there.
LossEval evaluate_loss(const Fields& fields, const RayBatch& batch, const Config& config, std::size_t step,
                       bool want_grads, const FrozenState* frozen = nullptr, FrozenState* record = nullptr,
                       std::mt19937_64* rng = nullptr);

struct StepResult {
    std::size_t step = 0;
    LossBreakdown loss;
    double lr = 0.0;
    double grad_norm = 0.0;
};

struct SyncRecord {
    std::size_t step = 0;
    std::size_t view = 0;
    double psnr_r = 0.0, psnr_surf = 0.0, psnr_vol = 0.0;
};

class NonFiniteLoss : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Trainer {
public:
    Trainer(const Config& config, const SceneDataset& data);
    /// Resumes from a checkpoint's parameters, moments and step.
    Trainer(const Config& config, const SceneDataset& data, Fields fields, Adam adam, std::size_t step);

    /// `rays_per_step` random pixels across the training views.
    RayBatch sample_batch(std::mt19937_64& rng) const;
    /// One Adam step; advances step().
    StepResult train_step();
    /// PSNR of L_r, L_surf and L_vol on the configured held-out view.
    SyncRecord validate() const;

    /// Runs until max_steps, writing loss.ndjson, sync.ndjson and
    /// checkpoints into `out_dir`. `stop_at` overrides max_steps as the last
    /// step run (the schedule still uses max_steps).
    void run(const std::string& out_dir, std::optional<std::size_t> stop_at = std::nullopt,
             const std::function<void(const StepResult&)>& on_step = {});

    std::size_t step() const { return step_; }
    const Fields& fields() const { return fields_; }
    Fields& fields() { return fields_; }
    const Adam& adam() const { return adam_; }
    const Config& config() const { return config_; }

private:
    Config config_;
    const SceneDataset& data_;
    Fields fields_;
    Adam adam_;
    std::size_t step_ = 0;
    std::vector<std::pair<std::size_t, std::size_t>> pixels_;  // (view, pixel) hitting the unit sphere
    std::vector<std::size_t> holdout_;
};

std::string loss_record_json(const StepResult& r);
std::string sync_record_json(const SyncRecord& r);

}  // namespace invrend
