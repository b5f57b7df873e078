#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "invrend/quadrature.hpp"
#include "invrend/vec.hpp"

namespace invrend {

class Fields;

struct MaterialMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<std::uint32_t, 3>> faces;
    std::vector<Vec3> normals;                 // unit, one per vertex
    std::vector<std::array<double, 3>> albedo;  // per vertex
    std::vector<double> roughness, metallic;
};

class EmptySurface : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Zero level set of `sdf` sampled on (resolution+1)³ grid points spanning
/// [lo, hi]. Normals come from central differences of `sdf`; faces are wound
/// counter-clockwise around the outward normal. Material channels are left
/// at defaults (grey albedo, roughness 0.5, metallic 0).
MaterialMesh marching_cubes(const SdfBatchFn& sdf, std::size_t resolution, const Vec3& lo = {-1, -1, -1},
                            const Vec3& hi = {1, 1, 1});

/// Replaces normals with the SDF-network normals and fills albedo,
/// roughness and metallic from the material network at each vertex.
void attach_materials(MaterialMesh& mesh, const Fields& fields);

/// Throws std::invalid_argument on out-of-range indices, size mismatches or
/// non-unit normals.
void validate_mesh(const MaterialMesh& mesh);

void export_ply(const MaterialMesh& mesh, const std::string& path);
std::string ply_string(const MaterialMesh& mesh);
MaterialMesh parse_ply(const std::string& text);
MaterialMesh load_ply(const std::string& path);

double triangle_area(const MaterialMesh& mesh, std::size_t face);
/// Area-weighted uniform samples on the mesh surface.
std::vector<Vec3> sample_surface(const MaterialMesh& mesh, std::size_t count, std::uint64_t seed);

}  // namespace invrend
