#pragma once

#include <cstdint>
#include <vector>

#include "invrend/vec.hpp"

namespace invrend {

constexpr double kPsnrCap = 99.0;

double mse(const std::vector<double>& image, const std::vector<double>& reference);
/// 10·log10(1/MSE), capped at `cap` when MSE = 0.
double psnr(const std::vector<double>& image, const std::vector<double>& reference, double cap = kPsnrCap);

/// Symmetric mean nearest-neighbour distance.
double chamfer_distance(const std::vector<Vec3>& a, const std::vector<Vec3>& b);
/// Nearest distance from each query to `points`; uniform grid acceleration.
std::vector<double> nearest_distances(const std::vector<Vec3>& queries, const std::vector<Vec3>& points);

/// Uniform samples on a sphere of radius r about the origin.
std::vector<Vec3> sample_sphere(double radius, std::size_t count, std::uint64_t seed);

}  // namespace invrend
