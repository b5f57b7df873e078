#include "invrend/renderer.hpp"

#include <functional>
#include <memory>

namespace invrend {

using namespace ad;

SampleShading NeuralSource::shade(Graph&, Var x, Var view) const {
    SampleShading s;
    const SdfEval geo = fields_.eval_sdf(bound_, x, create_graph_);
    s.sdf = geo.sdf;
    s.gradient = geo.gradient;
    s.normal = geo.normal;
    s.radiance = fields_.eval_radiance(bound_, x, geo.normal, view, geo.feature);
    const MaterialEval mat = fields_.eval_material(bound_, x, geo.normal, geo.feature);
    s.albedo = mat.albedo;
    s.roughness = mat.roughness;
    s.metallic = mat.metallic;
    const LightEval light = fields_.eval_photon(bound_, x, geo.normal, geo.feature);
    s.light_dir = light.direction;
    s.intensity = light.intensity;
    return s;
}

Var NeuralSource::sharpness(Graph&) const { return fields_.sharpness(bound_); }

SampleShading AnalyticSource::shade(Graph& graph, Var x, Var) const {
    const std::size_t p = x.rows();
    auto rows_of = [&](std::initializer_list<double> v) {
        Tensor t(Shape{p, v.size()});
        for (std::size_t r = 0; r < p; ++r) std::copy(v.begin(), v.end(), t.data.begin() + static_cast<long>(r * v.size()));
        return graph.constant(std::move(t));
    };
    const SphereScene& sc = scene_;
    SampleShading s;
    s.sdf = add_scalar(norm(x), -sc.radius);
    s.gradient = graph.grad(sum(s.sdf), x, true);
    s.normal = normalize(s.gradient);
    s.radiance = rows_of({sc.radiance[0], sc.radiance[1], sc.radiance[2]});
    s.albedo = rows_of({sc.albedo[0], sc.albedo[1], sc.albedo[2]});
    s.roughness = rows_of({sc.roughness});
    s.metallic = rows_of({sc.metallic});
    const Vec3 l = normalized(sc.light_dir);
    s.light_dir = rows_of({l[0], l[1], l[2]});
    s.intensity = rows_of({sc.intensity[0], sc.intensity[1], sc.intensity[2]});
    return s;
}

Var AnalyticSource::sharpness(Graph& graph) const { return graph.constant(Tensor::scalar(scene_.sharpness)); }

std::vector<double> AnalyticSource::sdf_values(const Tensor& x) const {
    std::vector<double> f(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r)
        f[r] = std::sqrt(x(r, 0) * x(r, 0) + x(r, 1) * x(r, 1) + x(r, 2) * x(r, 2)) - scene_.radius;
    return f;
}

RenderBatch render_rays(Graph& graph, const FieldSource& source, const std::vector<Ray>& rays,
                        const std::vector<std::vector<double>>& t, const RenderOptions& options) {
    const std::size_t nr = rays.size();
    if (nr == 0 || t.size() != nr) throw std::invalid_argument("render_rays: need one sample set per ray");
    const std::size_t n = t.front().size();
    for (const auto& ts : t)
        if (ts.size() != n) throw std::invalid_argument("render_rays: every ray needs the same sample count");
    const std::size_t p = nr * n;

    RenderBatch b;
    b.samples_per_ray = n;
    b.x = graph.input(sample_points(rays, t));
    Tensor view(Shape{p, 3});
    for (std::size_t r = 0; r < nr; ++r)
        for (std::size_t i = 0; i < n; ++i)
            for (int k = 0; k < 3; ++k) view(r * n + i, k) = -rays[r].dir[k];
    const Var v = graph.constant(std::move(view));

    b.shading = source.shade(graph, b.x, v);
    const WeightVars wv = weights_graph(reshape(b.shading.sdf, Shape{nr, n}), source.sharpness(graph));
    b.w = wv.w;
    b.w_sum = wv.w_sum;
    const Var wflat = reshape(wv.w, Shape{p, 1});
    b.L_r = segment_sum(mul(wflat, b.shading.radiance), n);

    const SampleShading& s = b.shading;
    const Var f = bsdf_graph(s.normal, v, s.light_dir, s.albedo, s.roughness, s.metallic, options.bsdf);
    b.integrand = mul(f, s.intensity);
    b.L_vol = segment_sum(mul(wflat, b.integrand), n);

    b.argmax = options.fixed_argmax ? *options.fixed_argmax : row_argmax(wv.w.value());
    if (b.argmax.size() != nr) throw std::invalid_argument("render_rays: fixed argmax has the wrong length");
    b.surface_rows.resize(nr);
    b.w_max.resize(nr);
    for (std::size_t r = 0; r < nr; ++r) {
        b.surface_rows[r] = r * n + b.argmax[r];
        b.w_max[r] = wv.w.value()(r, b.argmax[r]);
    }
    b.L_surf = index_rows(b.integrand, std::make_shared<const std::vector<std::size_t>>(b.surface_rows));
    return b;
}

namespace {

using SourceFactory = std::function<std::unique_ptr<FieldSource>(Graph&)>;

ImageSet render_image_impl(const SourceFactory& make, const std::function<std::vector<double>(const Tensor&)>& sdf,
                           const Camera& cam, const QuadratureConfig& quad, const RenderOptions& options,
                           std::size_t chunk) {
    ImageSet img;
    img.width = cam.width;
    img.height = cam.height;
    const std::size_t npx = cam.width * cam.height;
    for (auto* v : {&img.surf, &img.vol, &img.radiance, &img.normal, &img.albedo, &img.light_dir}) v->assign(npx * 3, 0.0);
    for (auto* v : {&img.roughness, &img.metallic, &img.w_sum}) v->assign(npx, 0.0);
    img.foreground.assign(npx, 0);

    std::vector<std::size_t> pixels;
    std::vector<Ray> rays;
    for (std::size_t y = 0; y < cam.height; ++y)
        for (std::size_t x = 0; x < cam.width; ++x) {
            const Ray ray = ray_from_pixel(cam, static_cast<double>(x), static_cast<double>(y));
            if (ray.background) continue;
            pixels.push_back(y * cam.width + x);
            rays.push_back(ray);
        }

    for (std::size_t begin = 0; begin < rays.size(); begin += chunk) {
        const std::size_t end = std::min(rays.size(), begin + chunk);
        const std::vector<Ray> part(rays.begin() + static_cast<long>(begin), rays.begin() + static_cast<long>(end));
        const auto t = sample_rays(part, sdf, quad, nullptr);
        Graph graph;
        const auto source = make(graph);
        const RenderBatch b = render_rays(graph, *source, part, t, options);
        const SampleShading& s = b.shading;
        for (std::size_t r = 0; r < part.size(); ++r) {
            const std::size_t px = pixels[begin + r];
            const double ws = b.w_sum.value()(r, 0);
            img.w_sum[px] = ws;
            if (ws < quad.surface_threshold) continue;
            img.foreground[px] = 1;
            const std::size_t row = b.surface_rows[r];
            for (int k = 0; k < 3; ++k) {
                img.surf[3 * px + k] = b.L_surf.value()(r, k);
                img.vol[3 * px + k] = b.L_vol.value()(r, k);
                img.radiance[3 * px + k] = b.L_r.value()(r, k);
                img.normal[3 * px + k] = s.normal.value()(row, k);
                img.albedo[3 * px + k] = s.albedo.value()(row, k);
                img.light_dir[3 * px + k] = s.light_dir.value()(row, k);
            }
            img.roughness[px] = s.roughness.value()(row, 0);
            img.metallic[px] = s.metallic.value()(row, 0);
        }
    }
    return img;
}

}  // namespace

ImageSet render_image(const FieldSource& source, const Camera& cam, const QuadratureConfig& quad,
                      const RenderOptions& options, std::size_t chunk) {
    struct Borrowed final : FieldSource {
        const FieldSource& inner;
        explicit Borrowed(const FieldSource& s) : inner(s) {}
        SampleShading shade(Graph& g, Var x, Var v) const override { return inner.shade(g, x, v); }
        Var sharpness(Graph& g) const override { return inner.sharpness(g); }
        std::vector<double> sdf_values(const Tensor& x) const override { return inner.sdf_values(x); }
    };
    return render_image_impl([&](Graph&) { return std::make_unique<Borrowed>(source); },
                             [&](const Tensor& x) { return source.sdf_values(x); }, cam, quad, options, chunk);
}

ImageSet render_image(const Fields& fields, const Camera& cam, const QuadratureConfig& quad,
                      const RenderOptions& options, std::size_t chunk) {
    // One chunk is rendered at a time, so a single binding slot suffices.
    std::vector<Var> bound;
    return render_image_impl(
        [&](Graph& g) {
            bound = fields.params().bind(g);
            return std::make_unique<NeuralSource>(fields, bound, false);
        },
        [&](const Tensor& x) { return fields.sdf_values(x); }, cam, quad, options, chunk);
}

}  // namespace invrend
