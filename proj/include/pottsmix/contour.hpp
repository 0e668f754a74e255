#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "pottsmix/bitvector.hpp"
#include "pottsmix/lattice.hpp"
#include "pottsmix/potts.hpp"

namespace pottsmix {

// Boolean array over HalfGrid cells.
using HalfCellSet = BitVector;

// Facet id f = cell * d + dir names the (d-1)-cell between `cell` and
// `cell + e_dir`. Scaled by 4, its center sits at 2y_dir + 1 in coordinate
// dir and spans [2y_j - 1, 2y_j + 1] in every other coordinate j.
struct SurfacePiece {
  std::vector<std::uint32_t> facets;  // sorted
  std::vector<bool> low_inside;       // per facet: the lower cell lies in V(A)
  std::vector<std::uint8_t> winding;  // Z_2 winding vector
  std::size_t norm = 0;               // lattice-edge crossings
  bool is_contour() const;
};

enum class OmegaClass { Ord, Dis, Tun };
std::string omega_class_name(OmegaClass c);

enum class ExtRule { FlatInterface, LargerVolume, Origin };

struct ContourSides {
  HalfCellSet interior;
  HalfCellSet exterior;
  ExtRule rule = ExtRule::Origin;
};

struct ContourDecomposition {
  TorusSpec spec;
  std::vector<SurfacePiece> pieces;
  std::vector<std::size_t> contours;    // indices into pieces, winding 0
  std::vector<std::size_t> interfaces;  // indices into pieces, winding != 0
  std::vector<ContourSides> sides;      // parallel to contours
  HalfCellSet ext_gamma;                // intersection of all exteriors
  OmegaClass omega = OmegaClass::Dis;
  bool empty_ordered = false;           // label used only when there are no pieces
};

// Per-torus precomputation shared by every contour operation. Immutable.
class ContourGeometry {
 public:
  explicit ContourGeometry(TorusSpec spec);

  const Torus& torus() const { return torus_; }
  const HalfGrid& grid() const { return grid_; }
  int dim() const { return grid_.dim(); }
  std::size_t cell_count() const { return grid_.cell_count(); }
  std::size_t facet_count() const { return grid_.cell_count() * grid_.dim(); }

  std::uint32_t facet_low(std::uint32_t f) const { return f / dim(); }
  int facet_dir(std::uint32_t f) const { return static_cast<int>(f % dim()); }
  std::uint32_t facet_high(std::uint32_t f) const { return grid_.step(facet_low(f), facet_dir(f), +1); }
  // Facet at a quarter position of a lattice edge.
  bool facet_crosses_edge(std::uint32_t f) const { return crosses_edge_[f] != 0; }
  // Facet pierced by the fundamental loop in its own direction.
  bool facet_on_base_loop(std::uint32_t f) const { return on_base_loop_[f] != 0; }
  bool facets_touch(std::uint32_t f, std::uint32_t g) const;
  // Cells whose closure meets the closed facet f (2 * 3^{d-1} of them).
  std::vector<std::uint32_t> cells_touching_facet(std::uint32_t f) const;

  const std::vector<std::uint32_t>& cube_edges(std::uint32_t cell) const { return cube_edges_[cell]; }
  std::size_t vertex_cell_count() const { return torus_.graph().vertex_count(); }

 private:
  Torus torus_;
  HalfGrid grid_;
  std::vector<std::vector<std::uint32_t>> cube_edges_;  // lattice edges of the cell's minimal cube
  std::vector<char> crosses_edge_;
  std::vector<char> on_base_loop_;
};

HalfCellSet fatten(const ContourGeometry& geo, const EdgeConfig& a);

// Throws ConsistencyError on a regularity violation.
std::vector<SurfacePiece> boundary_components(const ContourGeometry& geo, const HalfCellSet& cells);

std::vector<std::uint8_t> winding_vector(const ContourGeometry& geo, const SurfacePiece& piece);

// Flood fill over cells, never crossing a facet flagged in `walls`.
// Returns a component label per cell and the number of components.
std::pair<std::vector<std::uint32_t>, std::uint32_t> cell_components(const ContourGeometry& geo,
                                                                     const std::vector<char>& walls);

ContourSides interior_exterior(const ContourGeometry& geo, const SurfacePiece& contour);

ContourDecomposition classify(const ContourGeometry& geo, const EdgeConfig& a);

// Cells of V(A) recovered from the pieces and their orientations alone.
// Throws InvalidArgument when the labels do not match.
HalfCellSet ordered_cells(const ContourGeometry& geo, const ContourDecomposition& dec);

double log_weight_factorized(const ModelParams& m, const ContourGeometry& geo, const ContourDecomposition& dec);

EdgeConfig reconstruct(const ContourGeometry& geo, const ContourDecomposition& dec);

bool pieces_compatible(const ContourGeometry& geo, const SurfacePiece& a, const SurfacePiece& b);

struct DiameterReport {
  std::vector<std::size_t> extent;  // |I_i|
  std::size_t diam = 0;
};
DiameterReport diameter(const ContourGeometry& geo, const SurfacePiece& contour);

struct IsoReport {
  std::size_t norm = 0;
  std::size_t diam = 0;
  std::size_t interior_vertices = 0;
  bool norm_vs_diam = false;      // norm >= 2 diam
  bool volume_vs_norm = false;    // |Int n V| <= norm * diam / 2
  bool ok() const { return norm_vs_diam && volume_vs_norm; }
};
IsoReport iso_check(const ContourGeometry& geo, const SurfacePiece& contour, const HalfCellSet& interior);

std::size_t vertex_cells_in(const ContourGeometry& geo, const HalfCellSet& cells);

// Exhaustive census of all 2^|E| bond configurations, weight-free: counts
// keyed by (class, |A|, c(V,A), |Ext Gamma(A) n V|), so any (q, beta) can be
// evaluated afterwards.
struct OmegaCensus {
  TorusSpec spec;
  std::size_t edge_count = 0;
  std::map<std::tuple<int, int, int, int>, std::uint64_t> counts;
  std::array<std::uint64_t, 3> class_counts{};  // indexed by OmegaClass
  std::array<std::uint64_t, 3> rule_counts{};   // Ext decisions by ExtRule
  std::uint64_t total() const { return class_counts[0] + class_counts[1] + class_counts[2]; }
};

OmegaCensus omega_census(const ContourGeometry& geo, std::size_t max_edges = 24, unsigned workers = 1);

struct OmegaSums {
  double log_z = 0;      // all configurations
  double log_z_ord = 0;  // (1/q) sum over Omega_ord
  double log_z_dis = 0;
  double log_z_tun = 0;
  double q = 2;
  double nu_ord() const;  // q Z_ord / Z
  double nu_dis() const;
  double nu_tun() const;
};
OmegaSums omega_sums(const OmegaCensus& census, const ModelParams& m);

// FK-probability histogram of |Ext Gamma(A) n V| within one class.
std::vector<double> ext_volume_histogram(const OmegaCensus& census, const ModelParams& m, OmegaClass cls);

enum class Phase { Ord, Dis };

// Z_label(Lambda) for Lambda = Int(gamma), summing all bond configurations
// that differ from the constant label only on edges with midpoint in Lambda
// and whose pieces all lie in Lambda (every touching cell inside). For
// Phase::Ord the sum is q Z_ord(Lambda); the returned value divides by q.
double log_restricted_z(const ModelParams& m, const ContourGeometry& geo, const HalfCellSet& region, Phase label,
                        std::size_t max_edges = 20);

// K_ord = e^{-kappa |gamma|} Z_dis(Int)/Z_ord(Int); K_dis carries an extra q
// and the inverse ratio.
double log_contour_activity(const ModelParams& m, const ContourGeometry& geo, const SurfacePiece& gamma,
                            Phase external_label, std::size_t max_edges = 20);

struct PieceCensus {
  std::map<std::size_t, std::uint64_t> contours_by_norm;     // distinct oriented contours
  std::map<std::size_t, std::uint64_t> interfaces_by_norm;   // distinct oriented interfaces
  std::map<std::size_t, std::uint64_t> contours_around_origin_by_norm;  // origin vertex in Int
  std::size_t min_contour_norm = 0;
  std::size_t min_interface_norm = 0;
};
PieceCensus piece_count_census(const ContourGeometry& geo, std::size_t max_edges = 24);

std::string decomposition_json(const ContourGeometry& geo, const ContourDecomposition& dec);

}  // namespace pottsmix
