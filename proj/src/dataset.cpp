#include "invrend/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include <json.hpp>

namespace invrend {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Vec3 abs3(const Vec3& a) { return {std::fabs(a[0]), std::fabs(a[1]), std::fabs(a[2])}; }

json vec_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }
json vec_json(const std::array<double, 3>& v, int) { return json::array({v[0], v[1], v[2]}); }

template <std::size_t N>
std::array<double, N> read_array(const json& j, const char* key) {
    const json& a = j.at(key);
    if (!a.is_array() || a.size() != N) throw DataError(std::string("'") + key + "' must have " + std::to_string(N) + " numbers");
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i) out[i] = a[i].get<double>();
    return out;
}

json gt_json(const GroundTruth& gt) {
    json j;
    j["shape"] = gt.shape;
    if (gt.shape == "sphere") {
        j["radius"] = gt.radius;
    } else {
        j["half_extent"] = vec_json(gt.half_extent);
        j["corner"] = gt.corner;
    }
    j["albedo"] = vec_json(gt.albedo, 0);
    j["roughness"] = gt.roughness;
    j["metallic"] = gt.metallic;
    j["light_dir"] = vec_json(gt.light_dir);
    j["intensity"] = vec_json(gt.intensity, 0);
    return j;
}

GroundTruth gt_from_json(const json& j) {
    GroundTruth gt;
    gt.shape = j.at("shape").get<std::string>();
    if (gt.shape == "sphere") {
        gt.radius = j.at("radius").get<double>();
    } else if (gt.shape == "rounded-box") {
        gt.half_extent = read_array<3>(j, "half_extent");
        gt.corner = j.at("corner").get<double>();
    } else {
        throw DataError("unknown ground-truth shape '" + gt.shape + "'");
    }
    gt.albedo = read_array<3>(j, "albedo");
    gt.roughness = j.at("roughness").get<double>();
    gt.metallic = j.at("metallic").get<double>();
    gt.light_dir = read_array<3>(j, "light_dir");
    gt.intensity = read_array<3>(j, "intensity");
    return gt;
}

std::string view_name(const char* dir, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s/%03zu.png", dir, i);
    return buf;
}

}  // namespace

double gt_sdf(const GroundTruth& gt, const Vec3& x) {
    if (gt.shape == "sphere") return length(x) - gt.radius;
    const Vec3 q = abs3(x) - (gt.half_extent - Vec3{gt.corner, gt.corner, gt.corner});
    const Vec3 qp{std::max(q[0], 0.0), std::max(q[1], 0.0), std::max(q[2], 0.0)};
    return length(qp) + std::min(std::max({q[0], q[1], q[2]}), 0.0) - gt.corner;
}

Vec3 gt_normal(const GroundTruth& gt, const Vec3& x) {
    if (gt.shape == "sphere") return normalized(x);
    const Vec3 q = abs3(x) - (gt.half_extent - Vec3{gt.corner, gt.corner, gt.corner});
    Vec3 g{};
    if (std::max({q[0], q[1], q[2]}) > 0.0) {
        g = {std::max(q[0], 0.0), std::max(q[1], 0.0), std::max(q[2], 0.0)};
    } else {
        const int k = q[0] >= q[1] && q[0] >= q[2] ? 0 : (q[1] >= q[2] ? 1 : 2);
        g[k] = 1.0;
    }
    for (int k = 0; k < 3; ++k) g[k] = std::copysign(g[k], x[k]);
    return normalized(g);
}

std::optional<double> gt_intersect(const GroundTruth& gt, const Ray& ray) {
    if (gt.shape == "sphere") {
        const double b = dot(ray.origin, ray.dir);
        const double c = dot(ray.origin, ray.origin) - gt.radius * gt.radius;
        const double disc = b * b - c;
        if (disc <= 0.0) return std::nullopt;
        const double t = -b - std::sqrt(disc);
        if (t <= 0.0) return std::nullopt;
        return t;
    }
    if (ray.background) return std::nullopt;
    double t = ray.t_near;
    for (int it = 0; it < 2000 && t <= ray.t_far; ++it) {
        const double f = gt_sdf(gt, ray.origin + ray.dir * t);
        if (f < 1e-12) return t;
        t += f;
    }
    return std::nullopt;
}

std::optional<std::array<double, 3>> gt_shade(const GroundTruth& gt, const Ray& ray, const BsdfOptions& opt) {
    const auto hit = gt_intersect(gt, ray);
    if (!hit) return std::nullopt;
    const Vec3 x = ray.origin + ray.dir * *hit;
    const Vec3 n = gt_normal(gt, x);
    const Vec3 v = ray.dir * -1.0;
    const Vec3 l = normalized(gt.light_dir);
    const BsdfValue<double> b = bsdf_eval<double>(n, v, l, gt.albedo, gt.roughness, gt.metallic, opt);
    return std::array<double, 3>{b.total[0] * gt.intensity[0], b.total[1] * gt.intensity[1],
                                 b.total[2] * gt.intensity[2]};
}

SynthSpec synth_spec(const Config& cfg) {
    SynthSpec s;
    const SynthConfig& sc = cfg.synth;
    s.gt.shape = sc.shape;
    s.gt.radius = sc.radius;
    s.gt.albedo = sc.albedo;
    s.gt.roughness = sc.roughness;
    s.gt.metallic = sc.metallic;
    s.gt.light_dir = normalized(Vec3{sc.light_dir[0], sc.light_dir[1], sc.light_dir[2]});
    s.gt.intensity = sc.intensity;
    s.views = sc.views;
    s.width = s.height = sc.resolution;
    s.distance = sc.distance;
    s.half_fov_deg = sc.half_fov_deg;
    s.seed = cfg.train.seed;
    return s;
}

SceneDataset make_synthetic(const SynthSpec& spec) {
    if (spec.gt.shape != "sphere" && spec.gt.shape != "rounded-box")
        throw std::invalid_argument("unknown shape '" + spec.gt.shape + "' (expected sphere or rounded-box)");
    if (spec.views == 0 || spec.width == 0 || spec.height == 0) throw std::invalid_argument("empty synthetic dataset");
    SceneDataset data;
    data.gt = spec.gt;
    std::mt19937_64 rng(spec.seed);
    const double offset = spec.seed == 0 ? 0.0 : std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    const double z_lo = -0.5, z_hi = 0.85;
    for (std::size_t i = 0; i < spec.views; ++i) {
        const double z = spec.views == 1 ? 0.0 : z_hi - (z_hi - z_lo) * static_cast<double>(i) / static_cast<double>(spec.views - 1);
        const double ring = std::sqrt(1.0 - z * z);
        const double a = offset + golden * static_cast<double>(i);
        const Vec3 eye = Vec3{ring * std::cos(a), ring * std::sin(a), z} * spec.distance;
        SceneView view;
        view.camera = look_at(eye, {0, 0, 0}, {0, 0, 1}, spec.width, spec.height, spec.half_fov_deg * std::numbers::pi / 180.0);
        view.rgb.assign(spec.width * spec.height * 3, 0.0);
        view.mask.assign(spec.width * spec.height, 0.0);
        view.image_file = view_name("images", i);
        view.mask_file = view_name("masks", i);
        for (std::size_t y = 0; y < spec.height; ++y)
            for (std::size_t x = 0; x < spec.width; ++x) {
                const Ray ray = ray_from_pixel(view.camera, static_cast<double>(x), static_cast<double>(y));
                const auto c = gt_shade(spec.gt, ray);
                if (!c) continue;
                const std::size_t p = y * spec.width + x;
                view.mask[p] = 1.0;
                for (int k = 0; k < 3; ++k) view.rgb[3 * p + k] = (*c)[k];
            }
        data.views.push_back(std::move(view));
    }
    return data;
}

void save_dataset(const SceneDataset& data, const std::string& dir) {
    fs::create_directories(fs::path(dir) / "images");
    fs::create_directories(fs::path(dir) / "masks");
    json cams;
    cams["scene_scale"] = data.scene_scale;
    cams["images"] = json::array();
    for (const SceneView& v : data.views) {
        json e;
        e["file"] = v.image_file;
        e["mask"] = v.mask_file;
        e["K"] = v.camera.K;
        auto w2c = v.camera.W2C;
        for (int r = 0; r < 3; ++r) w2c[4 * r + 3] *= data.scene_scale;
        e["W2C"] = w2c;
        cams["images"].push_back(e);
        const std::size_t w = v.camera.width, h = v.camera.height;
        write_png((fs::path(dir) / v.image_file).string(), to_image(v.rgb, w, h, 3, true));
        write_png((fs::path(dir) / v.mask_file).string(), to_image(v.mask, w, h, 1, false));
    }
    std::ofstream(fs::path(dir) / "cameras.json") << cams.dump(2) << "\n";
    if (data.gt) std::ofstream(fs::path(dir) / "gt.json") << gt_json(*data.gt).dump(2) << "\n";
}

SceneDataset load_dataset(const std::string& dir) {
    const fs::path root(dir);
    std::ifstream in(root / "cameras.json");
    if (!in) throw DataError("missing " + (root / "cameras.json").string());
    json cams;
    try {
        in >> cams;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed cameras.json: ") + e.what());
    }
    SceneDataset data;
    try {
        data.scene_scale = cams.value("scene_scale", 1.0);
        if (!(data.scene_scale > 0.0)) throw DataError("scene_scale must be positive");
        const json& images = cams.at("images");
        for (const json& e : images) {
            SceneView v;
            v.image_file = e.at("file").get<std::string>();
            v.mask_file = e.at("mask").get<std::string>();
            v.camera.K = read_array<9>(e, "K");
            v.camera.W2C = read_array<12>(e, "W2C");
            for (int r = 0; r < 3; ++r) v.camera.W2C[4 * r + 3] /= data.scene_scale;
            const Image8 img = read_png((root / v.image_file).string(), 3);
            const Image8 mask = read_png((root / v.mask_file).string(), 1);
            if (img.width != mask.width || img.height != mask.height)
                throw DataError("image and mask sizes differ for " + v.image_file);
            v.camera.width = img.width;
            v.camera.height = img.height;
            validate_camera(v.camera);
            v.rgb.resize(img.data.size());
            for (std::size_t i = 0; i < img.data.size(); ++i) v.rgb[i] = decode_gamma(img.data[i]);
            v.mask.resize(mask.data.size());
            for (std::size_t i = 0; i < mask.data.size(); ++i) v.mask[i] = mask.data[i] > 127 ? 1.0 : 0.0;
            data.views.push_back(std::move(v));
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed cameras.json: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw DataError(e.what());
    }
    if (data.views.empty()) throw DataError("dataset has no images");
    std::size_t pngs = 0, masks = 0;
    for (const auto& e : fs::directory_iterator(root / "images")) pngs += e.path().extension() == ".png";
    for (const auto& e : fs::directory_iterator(root / "masks")) masks += e.path().extension() == ".png";
    if (pngs != masks) throw DataError("image/mask count mismatch: " + std::to_string(pngs) + " images, " + std::to_string(masks) + " masks");
    if (fs::exists(root / "gt.json")) {
        std::ifstream g(root / "gt.json");
        try {
            data.gt = gt_from_json(json::parse(g));
        } catch (const json::exception& e) {
            throw DataError(std::string("malformed gt.json: ") + e.what());
        }
    }
    return data;
}

std::vector<std::size_t> holdout_views(std::size_t count, std::size_t stride) {
    std::vector<std::size_t> out;
    for (std::size_t i = stride - 1; i < count; i += stride) out.push_back(i);
    return out;
}

std::vector<std::size_t> training_views(std::size_t count, std::size_t stride) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < count; ++i)
        if ((i + 1) % stride != 0) out.push_back(i);
    return out;
}

}  // namespace invrend
