#pragma once

#include <ksm/polytope.hpp>

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace ksm {

// Uniform refinement of the origin-cone triangulation of P*. In dimension 1
// the nodes are equally spaced and sorted; in dimension 2 every cone
// triangle (0, p, q) is split into 4^level congruent triangles.
struct DualMesh {
  int dimension = 0;
  int level = 0;
  std::vector<Point> nodes;
  std::vector<std::array<int, 3>> triangles;  // dimension 2 only
  std::vector<std::vector<int>> neighbors;    // edge-adjacent nodes
  std::vector<char> boundary;                 // node lies on the boundary of P*
  std::vector<int> vertex_nodes;              // node index of each dual vertex
  int origin_node = -1;

  std::size_t size() const { return nodes.size(); }
  // Barycentric interpolation of nodal values at z in P*.
  double interpolate(std::span<const double> values, std::span<const double> z) const;

  // Cone-local indexing used by interpolation: for cone c and lattice
  // coordinates (i, j) with i + j <= 2^level.
  std::vector<std::vector<int>> cone_tables;
  std::vector<std::array<Point, 2>> cone_edges;  // (p, q)
  // Facet normals through each dual vertex (dimension 2).
  std::vector<std::array<Point, 2>> vertex_rays;
};

using DualMeshPtr = std::shared_ptr<const DualMesh>;

// Throws UnsupportedDimension for dimension 3 and InvalidInput for a
// negative level.
DualMeshPtr make_dual_mesh(const DualPolytope& dual, int level);

// Sampled Legendre dual u* of a convex function u on R^l. Primal values are
// u(y) = max_i (<y, z_i> - u*_i).
struct ConvexDualGrid {
  DualMeshPtr mesh;
  std::vector<double> values;
  double window = 0;  // primal half-width Y; 0 selects 40 (l = 1) or 20 (l = 2)

  double effective_window() const;
  double primal(std::span<const double> y) const;
  double dual_at(std::span<const double> z) const { return mesh->interpolate(values, z); }
};

ConvexDualGrid sample_dual(DualMeshPtr mesh, const std::function<double(std::span<const double>)>& f);

// Integral of weight * hat_i over P* for every node i (hat = piecewise-linear
// nodal basis). The sum over i equals the integral of the weight.
std::vector<double> hat_weights(const DualMesh& mesh, const ScalarIntegrand& weight,
                                const std::optional<Grading>& grading = std::nullopt,
                                int refinement = 1);

// Legendre cells of the primal function: cell_i = {y : u(y) = <y, z_i> - u*_i}.
struct LegendreCells {
  double log_mass = 0;            // log of the integral of e^{-u} over R^l
  std::vector<double> prob;       // cell mass / total mass
  struct Interface {
    int i = 0;
    int j = 0;
    double weight = 0;  // (1/Z) * integral of e^{-u} over the shared face / |z_i - z_j|
  };
  std::vector<Interface> interfaces;
  double window = 0;
  double tail_bound = 0;  // relative bound on mass outside the window (l = 2)
  double outside_mass = 0;  // relative mass outside [-Y, Y]^l (exact for l = 1)
};

// Requires values convex on the mesh up to round-off; nodes strictly above
// the convex envelope get empty cells. In dimension 2 throws WindowTooSmall
// when the tail bound exceeds 1e-6 of the window integral; an automatic
// window (0) is doubled up to 160 first.
LegendreCells legendre_cells(const ConvexDualGrid& u);

// Lower convex envelope of the nodal values (isotonic slope projection in
// dimension 1). Idempotent on convex data.
ConvexDualGrid convexify(const ConvexDualGrid& u);

// Corner of the piecewise-affine primal function: its subdifferential is
// the simplex spanned by the listed nodes (the third is -1 in dimension 1).
// In dimension 2 only corners inside the window are reported.
struct PrimalVertex {
  Point y;
  std::array<int, 3> nodes;
};
std::vector<PrimalVertex> primal_vertices(const ConvexDualGrid& u);

// Largest amount by which a node lies above the convex envelope.
double convexity_defect(const ConvexDualGrid& u);

}  // namespace ksm
