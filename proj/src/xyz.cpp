#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "tersoff/system.hpp"

namespace tersoff {

namespace {

// Value of key="..." or key=token in an extended XYZ comment line.
std::optional<std::string> comment_value(const std::string& comment, const std::string& key) {
  std::size_t pos = 0;
  while ((pos = comment.find(key + "=", pos)) != std::string::npos) {
    if (pos == 0 || comment[pos - 1] == ' ' || comment[pos - 1] == '\t') break;
    ++pos;
  }
  if (pos == std::string::npos) return std::nullopt;
  pos += key.size() + 1;
  if (pos < comment.size() && comment[pos] == '"') {
    const auto end = comment.find('"', pos + 1);
    if (end == std::string::npos) return std::nullopt;
    return comment.substr(pos + 1, end - pos - 1);
  }
  const auto end = comment.find_first_of(" \t", pos);
  return comment.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
}

}  // namespace

void write_xyz(std::ostream& out, const SimulationState& state, const std::string& extra_comment) {
  const auto& b = state.box;
  char buf[160];
  out << state.size() << '\n';
  std::snprintf(buf, sizeof(buf), "Lattice=\"%.12g 0 0 0 %.12g 0 0 0 %.12g\" pbc=\"%c %c %c\" Time=%.6g", b.lengths[0],
                b.lengths[1], b.lengths[2], b.periodic[0] ? 'T' : 'F', b.periodic[1] ? 'T' : 'F',
                b.periodic[2] ? 'T' : 'F', state.time);
  out << buf;
  if (!extra_comment.empty()) out << ' ' << extra_comment;
  out << '\n';
  for (int i = 0; i < state.size(); ++i) {
    std::snprintf(buf, sizeof(buf), " %.12f %.12f %.12f", state.positions(0, i), state.positions(1, i),
                  state.positions(2, i));
    out << state.type_names[static_cast<std::size_t>(state.species[static_cast<std::size_t>(i)])] << buf << '\n';
  }
}

SimulationState read_xyz(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ParseError(line_no, "empty structure file");
  long long count = -1;
  {
    std::istringstream ss(line);
    if (!(ss >> count) || count < 0) throw ParseError(line_no, "first line must be the atom count");
  }
  std::string comment;
  ++line_no;
  if (!std::getline(in, comment)) throw ParseError(line_no, "missing comment line");

  SimulationState s = SimulationState::with_atoms(static_cast<int>(count), {});
  bool have_lattice = false;
  if (auto lat = comment_value(comment, "Lattice")) {
    std::istringstream ls(*lat);
    double m[9];
    for (double& v : m) {
      if (!(ls >> v)) throw ParseError(line_no, "Lattice needs 9 numbers");
    }
    if (m[1] != 0 || m[2] != 0 || m[3] != 0 || m[5] != 0 || m[6] != 0 || m[7] != 0) {
      throw ParseError(line_no, "only orthorhombic lattices are supported");
    }
    s.box.lengths = Eigen::Vector3d(m[0], m[4], m[8]);
    if (!(s.box.lengths.minCoeff() > 0.0)) throw ParseError(line_no, "lattice edges must be positive");
    have_lattice = true;
  }
  if (auto pbc = comment_value(comment, "pbc")) {
    std::istringstream ps(*pbc);
    for (int a = 0; a < 3; ++a) {
      std::string flag;
      if (!(ps >> flag) || (flag != "T" && flag != "F")) throw ParseError(line_no, "pbc needs three T/F flags");
      s.box.periodic[a] = flag == "T";
    }
    if (s.box.any_periodic() && !have_lattice) throw ParseError(line_no, "pbc given without a Lattice");
  }
  if (auto t = comment_value(comment, "Time")) {
    try {
      s.time = std::stod(*t);
    } catch (const std::exception&) {
      throw ParseError(line_no, "bad Time value");
    }
  }

  for (long long i = 0; i < count; ++i) {
    ++line_no;
    if (!std::getline(in, line)) throw ParseError(line_no, "expected " + std::to_string(count) + " atom rows");
    std::istringstream ss(line);
    std::string element;
    double x = 0, y = 0, z = 0;
    if (!(ss >> element >> x >> y >> z)) throw ParseError(line_no, "atom row must be 'element x y z'");
    auto it = std::find(s.type_names.begin(), s.type_names.end(), element);
    if (it == s.type_names.end()) {
      try {
        s.type_masses.push_back(element_mass(element));
      } catch (const ConfigError& e) {
        throw ParseError(line_no, e.what());
      }
      s.type_names.push_back(element);
      it = s.type_names.end() - 1;
    }
    s.species[static_cast<std::size_t>(i)] = static_cast<int>(it - s.type_names.begin());
    s.positions.col(static_cast<Eigen::Index>(i)) = s.box.wrap(Eigen::Vector3d(x, y, z));
    if (!s.positions.col(static_cast<Eigen::Index>(i)).allFinite()) throw ParseError(line_no, "non-finite coordinate");
  }
  if (!have_lattice && count > 0) {
    const Eigen::Vector3d extent = s.positions.rowwise().maxCoeff() - s.positions.rowwise().minCoeff();
    for (int a = 0; a < 3; ++a) s.box.lengths[a] = std::max(1.0, extent[a]);
  }
  return s;
}

SimulationState read_xyz_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open structure file '" + path + "'");
  return read_xyz(in);
}

}  // namespace tersoff
