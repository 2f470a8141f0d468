#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "slowfast/stationary.hpp"

namespace slowfast {

enum class Metric { tv, w1, wbl };
enum class DistanceMethod { quadrature, cdf_integral, sorted_samples, discrete_transport };

std::string to_string(Metric metric);
std::string to_string(DistanceMethod method);
Metric metric_from_string(const std::string& text);

struct DistanceReport {
  Metric metric = Metric::tv;
  double value = 0.0;
  DistanceMethod method = DistanceMethod::quadrature;
  std::size_t resolution = 0;  // union grid points, samples or atoms
};

/// Finitely supported probability measure with sorted distinct positions.
struct DiscreteMeasure {
  std::vector<double> positions;
  std::vector<double> weights;

  /// Sorts, merges equal positions, drops zero weights and normalises.
  static DiscreteMeasure from_atoms(std::vector<double> positions, std::vector<double> weights);
  static DiscreteMeasure point_mass(double at);

  std::size_t size() const noexcept { return positions.size(); }
};

/// Largest number of atoms accepted by the bounded-Lipschitz solver.
inline constexpr std::size_t kMaxTransportAtoms = 512;

/// Splits the density into `atoms` bins of equal mass, each collapsed to
/// its barycentre.
DiscreteMeasure atomize(const Density1D& d, std::size_t atoms = kMaxTransportAtoms);
/// Equal-weight samples as atoms (duplicates merged).
DiscreteMeasure atomize(const EmpiricalMeasure& m);
/// Aggregates consecutive atoms into at most `atoms` groups of (nearly) equal
/// mass located at their barycentres.
DiscreteMeasure coarsen(const DiscreteMeasure& m, std::size_t atoms = kMaxTransportAtoms);

/// Total variation with the factor-2 convention: integral of |rho_p - rho_q|
/// over the union grid, both densities linearly interpolated and zero
/// outside their own grids. Range [0, 2].
double tv_distance(const Density1D& p, const Density1D& q);
double tv_distance(const DiscreteMeasure& p, const DiscreteMeasure& q);

/// Integral of |F_p - F_q| over the union grid.
double w1_density(const Density1D& p, const Density1D& q);
/// Exact W1 between empirical measures.
double w1_empirical(const EmpiricalMeasure& a, const EmpiricalMeasure& b);
double w1_discrete(const DiscreteMeasure& p, const DiscreteMeasure& q);

/// Bounded-Lipschitz distance as optimal transport with cost min(|u - v|, 2).
/// Densities are atomized to kMaxTransportAtoms bins; empirical and discrete
/// inputs with more atoms throw ResolutionError.
double wbl_distance(const Density1D& p, const Density1D& q);
double wbl_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b);
double wbl_distance(const DiscreteMeasure& p, const DiscreteMeasure& q);

DistanceReport distance(Metric metric, const Density1D& p, const Density1D& q);
DistanceReport distance(Metric metric, const EmpiricalMeasure& a, const EmpiricalMeasure& b);

}  // namespace slowfast
