#include "gridfault/grid.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace gridfault {

namespace {

// Locale-independent double parse; the case format always uses '.' decimals.
double parse_double(std::string_view token, int line_no) {
  double value = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  while (first != last && (*first == ' ' || *first == '\t')) ++first;
  while (last != first && (*(last - 1) == ' ' || *(last - 1) == '\t')) --last;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ValidationError("case line " + std::to_string(line_no) +
                          ": bad number '" + std::string(token) + "'");
  }
  return value;
}

int parse_int(std::string_view token, int line_no) {
  double v = parse_double(token, line_no);
  int i = static_cast<int>(v);
  if (static_cast<double>(i) != v) {
    throw ValidationError("case line " + std::to_string(line_no) +
                          ": expected integer, got '" + std::string(token) +
                          "'");
  }
  return i;
}

std::vector<std::string_view> split_csv(std::string_view row) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = row.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(row.substr(start));
      break;
    }
    fields.push_back(row.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

}  // namespace

GridSpec::GridSpec(std::vector<Bus> buses, std::vector<Line> lines)
    : buses_(std::move(buses)), lines_(std::move(lines)) {
  validate_and_index();
}

void GridSpec::validate_and_index() {
  if (buses_.size() < 2) throw ValidationError("grid needs at least 2 buses");
  std::map<int, int> index_of;
  for (std::size_t i = 0; i < buses_.size(); ++i) {
    if (!index_of.emplace(buses_[i].id, static_cast<int>(i)).second) {
      throw ValidationError("duplicate bus id " + std::to_string(buses_[i].id));
    }
  }
  adjacency_.assign(buses_.size(), {});
  std::set<std::pair<int, int>> seen_pairs;
  std::set<int> seen_line_ids;
  for (const Line& line : lines_) {
    auto from_it = index_of.find(line.from);
    auto to_it = index_of.find(line.to);
    if (from_it == index_of.end() || to_it == index_of.end()) {
      throw ValidationError("line " + std::to_string(line.id) +
                            " references unknown bus");
    }
    if (line.from == line.to) {
      throw ValidationError("line " + std::to_string(line.id) +
                            " is a self-loop");
    }
    if (std::abs(line.z) == 0.0) {
      throw ValidationError("line " + std::to_string(line.id) +
                            " has zero series impedance");
    }
    auto pair = std::minmax(line.from, line.to);
    if (!seen_pairs.emplace(pair.first, pair.second).second) {
      throw ValidationError("duplicate line between buses " +
                            std::to_string(pair.first) + " and " +
                            std::to_string(pair.second));
    }
    if (!seen_line_ids.insert(line.id).second) {
      throw ValidationError("duplicate line id " + std::to_string(line.id));
    }
    adjacency_[from_it->second].push_back(to_it->second);
    adjacency_[to_it->second].push_back(from_it->second);
  }
  for (auto& nbrs : adjacency_) std::sort(nbrs.begin(), nbrs.end());

  // Connectivity over the line graph.
  std::vector<char> visited(buses_.size(), 0);
  std::vector<int> stack{0};
  visited[0] = 1;
  while (!stack.empty()) {
    int at = stack.back();
    stack.pop_back();
    for (int nb : adjacency_[at]) {
      if (!visited[nb]) {
        visited[nb] = 1;
        stack.push_back(nb);
      }
    }
  }
  if (std::find(visited.begin(), visited.end(), 0) != visited.end()) {
    throw ValidationError("grid graph is disconnected");
  }
}

int GridSpec::bus_index(int bus_id) const {
  for (std::size_t i = 0; i < buses_.size(); ++i) {
    if (buses_[i].id == bus_id) return static_cast<int>(i);
  }
  throw ValidationError("unknown bus id " + std::to_string(bus_id));
}

int GridSpec::line_index(int line_id) const {
  for (std::size_t i = 0; i < lines_.size(); ++i) {
    if (lines_[i].id == line_id) return static_cast<int>(i);
  }
  throw ValidationError("unknown line id " + std::to_string(line_id));
}

GridSpec GridSpec::with_loads(std::vector<Complex> loads) const {
  if (loads.size() != buses_.size()) {
    throw ValidationError("load vector length does not match bus count");
  }
  std::vector<Bus> buses = buses_;
  for (std::size_t i = 0; i < buses.size(); ++i) buses[i].load = loads[i];
  return GridSpec(std::move(buses), lines_);
}

GridSpec parse_case_text(const std::string& text, const std::string& name) {
  enum class Section { None, Buses, Lines };
  Section section = Section::None;
  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::istringstream stream(text);
  std::string row;
  int line_no = 0;
  while (std::getline(stream, row)) {
    ++line_no;
    if (!row.empty() && row.back() == '\r') row.pop_back();
    if (row.empty()) continue;
    if (row[0] == '#') {
      if (row.rfind("#buses", 0) == 0) {
        section = Section::Buses;
      } else if (row.rfind("#lines", 0) == 0) {
        section = Section::Lines;
      }
      continue;  // other '#' rows are comments
    }
    auto fields = split_csv(row);
    if (section == Section::Buses) {
      if (fields.size() != 5) {
        throw ValidationError(name + " line " + std::to_string(line_no) +
                              ": bus row needs 5 fields");
      }
      Bus bus;
      bus.id = parse_int(fields[0], line_no);
      bus.shunt = {parse_double(fields[1], line_no),
                   parse_double(fields[2], line_no)};
      bus.load = {parse_double(fields[3], line_no),
                  parse_double(fields[4], line_no)};
      buses.push_back(bus);
    } else if (section == Section::Lines) {
      if (fields.size() != 6) {
        throw ValidationError(name + " line " + std::to_string(line_no) +
                              ": line row needs 6 fields");
      }
      Line line;
      line.id = parse_int(fields[0], line_no);
      line.from = parse_int(fields[1], line_no);
      line.to = parse_int(fields[2], line_no);
      line.z = {parse_double(fields[3], line_no),
                parse_double(fields[4], line_no)};
      line.charging = parse_double(fields[5], line_no);
      lines.push_back(line);
    } else {
      throw ValidationError(name + " line " + std::to_string(line_no) +
                            ": data before any section header");
    }
  }
  return GridSpec(std::move(buses), std::move(lines));
}

GridSpec parse_case(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open case file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_case_text(buffer.str(), path.filename().string());
}

AdmittanceMatrix build_admittance(const GridSpec& spec) {
  const int n = spec.bus_count();
  CMatrix y = CMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) y(i, i) += spec.bus(i).shunt;
  for (const Line& line : spec.lines()) {
    if (std::abs(line.z) == 0.0) {
      throw ComputeError("line " + std::to_string(line.id) +
                         " has singular series impedance");
    }
    const int i = spec.bus_index(line.from);
    const int j = spec.bus_index(line.to);
    const Complex y_series = 1.0 / line.z;
    const Complex y_half_charging{0.0, line.charging / 2.0};
    y(i, j) -= y_series;
    y(j, i) -= y_series;
    y(i, i) += y_series + y_half_charging;
    y(j, j) += y_series + y_half_charging;
  }
  return AdmittanceMatrix{std::move(y)};
}

FaultAugmentedMatrix augment_fault(const AdmittanceMatrix& y0,
                                   const GridSpec& spec, int line_id, double t,
                                   Complex y_fault, double t_min) {
  if (!(t >= t_min && t <= 1.0 - t_min)) {
    throw ValidationError("fault position t=" + std::to_string(t) +
                          " outside [" + std::to_string(t_min) + ", " +
                          std::to_string(1.0 - t_min) + "]");
  }
  if (!std::isfinite(y_fault.real()) || !std::isfinite(y_fault.imag())) {
    throw ValidationError("fault admittance must be finite");
  }
  const Line& line = spec.line(spec.line_index(line_id));
  const int n = spec.bus_count();
  const int i = spec.bus_index(line.from);
  const int j = spec.bus_index(line.to);

  CMatrix y = CMatrix::Zero(n + 1, n + 1);
  y.topLeftCorner(n, n) = y0.y;

  const Complex y_series = 1.0 / line.z;
  const Complex y_seg_i = 1.0 / (t * line.z);
  const Complex y_seg_j = 1.0 / ((1.0 - t) * line.z);

  // Remove the original series branch, keep the terminal charging in place.
  y(i, j) += y_series;
  y(j, i) += y_series;
  y(i, i) -= y_series;
  y(j, j) -= y_series;

  // Two segments to the fault node F = index n.
  y(i, i) += y_seg_i;
  y(j, j) += y_seg_j;
  y(i, n) = -y_seg_i;
  y(n, i) = -y_seg_i;
  y(j, n) = -y_seg_j;
  y(n, j) = -y_seg_j;
  y(n, n) = y_seg_i + y_seg_j + y_fault;

  FaultAugmentedMatrix out;
  out.base = AdmittanceMatrix{std::move(y)};
  out.faulted_line = line_id;
  out.from_index = i;
  out.to_index = j;
  out.position = t;
  out.fault_admittance = y_fault;
  return out;
}

}  // namespace gridfault
