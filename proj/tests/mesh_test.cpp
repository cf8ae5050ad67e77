#include <gtest/gtest.h>

#include <sstream>

#include "icdd/mesh.hpp"

using namespace icdd;

TEST(Mesh, UnitSquareHalfSpacing) {
  const auto m = build_rect_mesh({0, 1, 0, 1}, 0.5);
  EXPECT_EQ(m.num_elements(), 4);
  EXPECT_EQ(m.num_nodes(), 9);
  EXPECT_EQ(m.boundary_edges().size(), 8u);
}

TEST(Mesh, TallDomainCounts) {
  const auto m = build_rect_mesh({-0.5, 0.5, -0.5, 1.0}, 1.0 / 20);
  EXPECT_EQ(m.nx(), 20);
  EXPECT_EQ(m.ny(), 30);
  const auto line = extract_interface_nodes(m, 0.0);
  EXPECT_EQ(line.nodes.size(), 21u);
  EXPECT_DOUBLE_EQ(line.y, 0.0);
  for (std::size_t i = 1; i < line.nodes.size(); ++i) {
    EXPECT_LT(m.node_coords(line.nodes[i - 1])[0], m.node_coords(line.nodes[i])[0]);
  }
}

TEST(Mesh, RejectsBadInput) {
  EXPECT_THROW(build_rect_mesh({0, 1, 0, 1}, -0.1), InputError);
  EXPECT_THROW(build_rect_mesh({0, 1, 1, 0}, 0.1), InputError);
  EXPECT_THROW(build_tensor_mesh({0, 0.5, 0.4}, {0, 1}), InputError);
}

TEST(Mesh, PerforatedCellCountsAndTags) {
  // One cell of side 1 with a centred square obstacle of side 0.6 on a 10x10 grid.
  const ObstacleLattice lat{1.0, 0.6, {0, 1, 0, 1}};
  const auto m = build_perforated_mesh({0, 1, 0, 1}, lat, 10);
  EXPECT_EQ(m.num_elements(), 100 - 36);
  EXPECT_NEAR(m.active_area(), lat.porosity(), 1e-14);
  int obstacle_edges = 0;
  for (const auto& e : m.boundary_edges()) obstacle_edges += e.tag == BoundaryTag::obstacle;
  EXPECT_EQ(obstacle_edges, 24);
}

TEST(Mesh, PerforatedRejectsMisalignedObstacle) {
  EXPECT_THROW(build_perforated_mesh({0, 1, 0, 1}, {1.0, 0.8, {0, 1, 0, 1}}, 8), InputError);
  EXPECT_THROW(build_perforated_mesh({0, 1, 0, 1}, {1.0, 1.2, {0, 1, 0, 1}}, 10), InputError);
}

TEST(Mesh, InterfaceOffGridRejected) {
  const auto m = build_rect_mesh({0, 1, 0, 1}, 0.25);
  EXPECT_THROW(extract_interface_nodes(m, 2.0), InputError);
  EXPECT_EQ(extract_interface_nodes(m, 0.26).row, 1);
}

TEST(Mesh, CoincidentInterfacesRejected) {
  const auto m = build_rect_mesh({0, 1, 0, 1}, 0.25);
  EXPECT_THROW(extract_disjoint_interfaces(m, 0.5, 0.51), InputError);
  const auto lines = extract_disjoint_interfaces(m, 0.25, 0.5);
  EXPECT_EQ(lines[0].row, 1);
  EXPECT_EQ(lines[1].row, 2);
}

TEST(Mesh, SubRowsAreConformal) {
  const auto m = build_tensor_mesh({0, 0.3, 1}, {0, 0.1, 0.35, 1});
  const auto lower = m.sub_rows(0, 2);
  const auto upper = m.sub_rows(1, 3);
  EXPECT_EQ(lower.ys().back(), upper.ys()[1]);
  EXPECT_EQ(lower.xs(), upper.xs());
}

TEST(Mesh, VtkOutputHasCells) {
  std::ostringstream os;
  write_vtk_mesh(os, build_rect_mesh({0, 1, 0, 1}, 0.5));
  EXPECT_NE(os.str().find("CELLS 4"), std::string::npos);
}
