#include "csahom/mesh.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "csahom/error.hpp"

namespace csahom {

namespace {

// Tokenized line with its 1-based source line number for error reporting.
struct Line {
  std::vector<std::string> tok;
  int no = 0;
};

std::vector<Line> tokenize_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open mesh file", path);
  std::vector<Line> lines;
  std::string raw;
  int no = 0;
  while (std::getline(in, raw)) {
    ++no;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    std::istringstream ss(raw);
    Line l;
    l.no = no;
    std::string t;
    while (ss >> t) l.tok.push_back(t);
    if (!l.tok.empty()) lines.push_back(std::move(l));
  }
  return lines;
}

long to_long(const std::string& s, const std::string& path, int line) {
  try {
    size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("expected integer, got '" + s + "'", path, line);
  }
}

double to_double(const std::string& s, const std::string& path, int line) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("expected number, got '" + s + "'", path, line);
  }
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Mesh load_mesh(const std::string& path) {
  const auto lines = tokenize_file(path);
  size_t pos = 0;
  auto need = [&](const char* what) -> const Line& {
    if (pos >= lines.size()) throw ParseError(std::string("unexpected end of file, expected ") + what, path);
    return lines[pos];
  };

  Mesh mesh;

  {
    const Line& hdr = need("'nodes N'");
    if (hdr.tok.size() != 2 || hdr.tok[0] != "nodes")
      throw ParseError("expected 'nodes N' header", path, hdr.no);
    const long n = to_long(hdr.tok[1], path, hdr.no);
    if (n < 0) throw ParseError("negative node count", path, hdr.no);
    ++pos;
    mesh.nodes.reserve(static_cast<size_t>(n));
    for (long i = 0; i < n; ++i) {
      const Line& l = need("node line");
      if (l.tok.size() != 3) throw ParseError("node line needs '<id> <x> <y>'", path, l.no);
      if (to_long(l.tok[0], path, l.no) != i)
        throw ParseError("node ids must be 0-based and strictly increasing", path, l.no);
      mesh.nodes.emplace_back(to_double(l.tok[1], path, l.no), to_double(l.tok[2], path, l.no));
      ++pos;
    }
  }

  {
    const Line& hdr = need("'elements M'");
    if (hdr.tok.size() != 2 || hdr.tok[0] != "elements")
      throw ParseError("expected 'elements M' header", path, hdr.no);
    const long m = to_long(hdr.tok[1], path, hdr.no);
    if (m < 0) throw ParseError("negative element count", path, hdr.no);
    ++pos;
    mesh.elements.reserve(static_cast<size_t>(m));
    for (long i = 0; i < m; ++i) {
      const Line& l = need("element line");
      if (l.tok.size() < 2) throw ParseError("truncated element line", path, l.no);
      if (to_long(l.tok[0], path, l.no) != i)
        throw ParseError("element ids must be 0-based and strictly increasing", path, l.no);
      Element e;
      if (l.tok[1] == "tri3")
        e.kind = ElementKind::tri3;
      else if (l.tok[1] == "quad4")
        e.kind = ElementKind::quad4;
      else
        throw ParseError("unknown element kind '" + l.tok[1] + "'", path, l.no);
      const int nn = node_count(e.kind);
      if (static_cast<int>(l.tok.size()) != 2 + nn + 1)
        throw ParseError("element line needs '<id> <kind> <nodes...> <region>'", path, l.no);
      for (int a = 0; a < nn; ++a) {
        const long v = to_long(l.tok[2 + a], path, l.no);
        if (v < 0 || v >= static_cast<long>(mesh.nodes.size()))
          throw ParseError("element references node out of range", path, l.no);
        e.nodes[a] = static_cast<int>(v);
      }
      e.region = static_cast<int>(to_long(l.tok[2 + nn], path, l.no));
      mesh.elements.push_back(e);
      ++pos;
    }
  }

  if (pos < lines.size()) {
    const Line& hdr = lines[pos];
    if (hdr.tok.size() != 2 || hdr.tok[0] != "facets")
      throw ParseError("expected 'facets K' header or end of file", path, hdr.no);
    const long k = to_long(hdr.tok[1], path, hdr.no);
    if (k < 0) throw ParseError("negative facet count", path, hdr.no);
    ++pos;
    mesh.facets.reserve(static_cast<size_t>(k));
    for (long i = 0; i < k; ++i) {
      const Line& l = need("facet line");
      if (l.tok.size() != 4) throw ParseError("facet line needs '<id> <n1> <n2> <tag>'", path, l.no);
      if (to_long(l.tok[0], path, l.no) != i)
        throw ParseError("facet ids must be 0-based and strictly increasing", path, l.no);
      Facet f;
      for (int a = 0; a < 2; ++a) {
        const long v = to_long(l.tok[1 + a], path, l.no);
        if (v < 0 || v >= static_cast<long>(mesh.nodes.size()))
          throw ParseError("facet references node out of range", path, l.no);
        f.nodes[a] = static_cast<int>(v);
      }
      f.tag = static_cast<int>(to_long(l.tok[3], path, l.no));
      mesh.facets.push_back(f);
      ++pos;
    }
    if (pos < lines.size())
      throw ParseError("trailing content after facet section", path, lines[pos].no);
  }

  return mesh;
}

void write_mesh(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << "nodes " << mesh.nodes.size() << "\n";
  for (size_t i = 0; i < mesh.nodes.size(); ++i)
    out << i << " " << fmt17(mesh.nodes[i].x()) << " " << fmt17(mesh.nodes[i].y()) << "\n";
  out << "elements " << mesh.elements.size() << "\n";
  for (size_t i = 0; i < mesh.elements.size(); ++i) {
    const Element& e = mesh.elements[i];
    out << i << " " << (e.kind == ElementKind::tri3 ? "tri3" : "quad4");
    for (int a = 0; a < node_count(e.kind); ++a) out << " " << e.nodes[a];
    out << " " << e.region << "\n";
  }
  if (!mesh.facets.empty()) {
    out << "facets " << mesh.facets.size() << "\n";
    for (size_t i = 0; i < mesh.facets.size(); ++i)
      out << i << " " << mesh.facets[i].nodes[0] << " " << mesh.facets[i].nodes[1] << " "
          << mesh.facets[i].tag << "\n";
  }
  if (!out) throw Error("write failure on '" + path + "'");
}

Mesh displace(const Mesh& mesh, const FieldVector& u) {
  if (u.size() != 2 * mesh.n_nodes())
    throw Error("displace: field length does not match mesh node count");
  Mesh out = mesh;
  for (int i = 0; i < mesh.n_nodes(); ++i) {
    out.nodes[i].x() += u[2 * i];
    out.nodes[i].y() += u[2 * i + 1];
  }
  for (int e = 0; e < out.n_elements(); ++e) {
    const QuadratureRule rule = build_quadrature(out.elements[e].kind);
    for (const Vec2& q : rule.points) {
      // shape_gradients throws InversionError with the element index on
      // non-positive Jacobians.
      (void)shape_gradients(out, e, q);
    }
  }
  return out;
}

double mesh_area(const Mesh& mesh) {
  double area = 0.0;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const QuadratureRule rule = build_quadrature(mesh.elements[e].kind);
    for (size_t q = 0; q < rule.points.size(); ++q)
      area += rule.weights[q] * shape_gradients(mesh, e, rule.points[q]).detJ;
  }
  return area;
}

std::uint64_t mesh_checksum(const Mesh& mesh) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a offset basis
  auto mix = [&h](const void* data, size_t n) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  for (const Vec2& x : mesh.nodes) {
    const double c[2] = {x.x(), x.y()};
    mix(c, sizeof c);
  }
  for (const Element& e : mesh.elements) {
    const int k = e.kind == ElementKind::tri3 ? 3 : 4;
    mix(&k, sizeof k);
    mix(e.nodes.data(), sizeof(int) * static_cast<size_t>(k));
    mix(&e.region, sizeof e.region);
  }
  return h;
}

}  // namespace csahom
