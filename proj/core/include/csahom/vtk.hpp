#pragma once

// Minimal legacy-ASCII VTK writer for step-wise field output.

#include <string>
#include <vector>

#include "csahom/mesh.hpp"

namespace csahom {

struct VtkPointVectors {
  std::string name;
  const std::vector<Vec2>* data = nullptr;  // one per node
};

struct VtkCellTensors {
  std::string name;
  const std::vector<Mat3>* data = nullptr;  // one per element
};

/// Writes an unstructured grid with optional nodal vector fields and
/// per-element tensor fields.
void write_vtk(const std::string& path, const Mesh& mesh,
               const std::vector<VtkPointVectors>& point_fields = {},
               const std::vector<VtkCellTensors>& cell_fields = {});

}  // namespace csahom
