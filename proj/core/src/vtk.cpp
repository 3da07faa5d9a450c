#include "csahom/vtk.hpp"

#include <cstdio>
#include <fstream>

#include "csahom/error.hpp"

namespace csahom {

namespace {
std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace

void write_vtk(const std::string& path, const Mesh& mesh,
               const std::vector<VtkPointVectors>& point_fields,
               const std::vector<VtkCellTensors>& cell_fields) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");

  out << "# vtk DataFile Version 3.0\n";
  out << "csahomog output\n";
  out << "ASCII\n";
  out << "DATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.n_nodes() << " double\n";
  for (const Vec2& x : mesh.nodes) out << g17(x.x()) << " " << g17(x.y()) << " 0\n";

  int list_len = 0;
  for (const Element& e : mesh.elements) list_len += 1 + node_count(e.kind);
  out << "CELLS " << mesh.n_elements() << " " << list_len << "\n";
  for (const Element& e : mesh.elements) {
    const int n = node_count(e.kind);
    out << n;
    for (int a = 0; a < n; ++a) out << " " << e.nodes[a];
    out << "\n";
  }
  out << "CELL_TYPES " << mesh.n_elements() << "\n";
  for (const Element& e : mesh.elements) out << (e.kind == ElementKind::tri3 ? 5 : 9) << "\n";

  if (!point_fields.empty()) {
    out << "POINT_DATA " << mesh.n_nodes() << "\n";
    for (const auto& f : point_fields) {
      if (!f.data || static_cast<int>(f.data->size()) != mesh.n_nodes())
        throw Error("write_vtk: point field '" + f.name + "' size mismatch");
      out << "VECTORS " << f.name << " double\n";
      for (const Vec2& v : *f.data) out << g17(v.x()) << " " << g17(v.y()) << " 0\n";
    }
  }
  if (!cell_fields.empty()) {
    out << "CELL_DATA " << mesh.n_elements() << "\n";
    for (const auto& f : cell_fields) {
      if (!f.data || static_cast<int>(f.data->size()) != mesh.n_elements())
        throw Error("write_vtk: cell field '" + f.name + "' size mismatch");
      out << "TENSORS " << f.name << " double\n";
      for (const Mat3& t : *f.data) {
        for (int i = 0; i < 3; ++i)
          out << g17(t(i, 0)) << " " << g17(t(i, 1)) << " " << g17(t(i, 2)) << "\n";
        out << "\n";
      }
    }
  }
  if (!out) throw Error("write failure on '" + path + "'");
}

}  // namespace csahom
