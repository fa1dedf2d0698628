#include "driftwatch/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "driftwatch/errors.hpp"

namespace driftwatch {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ls(line);
  while (std::getline(ls, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

[[noreturn]] void fail(std::size_t lineno, const std::string& what) {
  throw InputError("CSV line " + std::to_string(lineno) + ": " + what);
}

}  // namespace

StreamCsv parse_stream_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(is, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return true;
    }
    return false;
  };
  if (!next_line()) throw InputError("CSV input is empty");
  auto header = split(line);
  StreamCsv out;
  bool has_label = header.size() >= 3 && header.back() == "label";
  if (has_label) header.pop_back();
  if (header.size() < 2 || header[0] != "t") {
    fail(lineno, "header must be t,value or t,dim_0,...");
  }
  if (header.size() == 2 && header[1] == "value") {
    out.dimensions = 1;
  } else {
    for (std::size_t j = 1; j < header.size(); ++j) {
      if (header[j] != "dim_" + std::to_string(j - 1)) {
        fail(lineno, "expected column dim_" + std::to_string(j - 1) + ", got '" + header[j] + "'");
      }
    }
    out.dimensions = header.size() - 1;
  }
  if (has_label) out.labels.emplace();
  const std::size_t columns = out.dimensions + 1 + (has_label ? 1 : 0);

  while (next_line()) {
    const auto cells = split(line);
    if (cells.size() != columns) {
      fail(lineno, "expected " + std::to_string(columns) + " columns, got " +
                       std::to_string(cells.size()));
    }
    StreamSample s;
    {
      const auto& c = cells[0];
      const auto [p, ec] = std::from_chars(c.data(), c.data() + c.size(), s.index);
      if (ec != std::errc() || p != c.data() + c.size()) fail(lineno, "bad index '" + c + "'");
    }
    for (std::size_t j = 1; j <= out.dimensions; ++j) {
      char* end = nullptr;
      const double v = std::strtod(cells[j].c_str(), &end);
      if (cells[j].empty() || *end || !std::isfinite(v)) {
        fail(lineno, "bad value '" + cells[j] + "'");
      }
      s.values.push_back(v);
    }
    if (has_label) {
      const auto& c = cells.back();
      if (c != "0" && c != "1") fail(lineno, "label must be 0 or 1");
      out.labels->push_back(c == "1");
    }
    if (!out.samples.empty() && s.index <= out.samples.back().index) {
      fail(lineno, "indices must be strictly increasing");
    }
    out.samples.push_back(std::move(s));
  }
  if (out.samples.empty()) throw InputError("CSV input has a header but no rows");
  return out;
}

std::string scenario_to_csv(const Scenario& s) {
  std::ostringstream os;
  const std::size_t d = s.dimensions();
  os << 't';
  if (d == 1) {
    os << ",value";
  } else {
    for (std::size_t j = 0; j < d; ++j) os << ",dim_" << j;
  }
  if (s.labels) os << ",label";
  os << '\n';
  for (std::size_t t = 0; t < s.length(); ++t) {
    os << t;
    for (double v : s.values[t]) os << ',' << format_double(v);
    if (s.labels) os << ',' << (*s.labels)[t];
    os << '\n';
  }
  return os.str();
}

std::string trace_to_csv(const std::vector<TraceRow>& rows) {
  std::ostringstream os;
  os << "t,dim,htm_raw,htm_t,c,cm,lower,upper\n";
  for (const auto& r : rows) {
    os << r.t << ',' << r.dim << ',' << format_double(r.htm_raw) << ',' << format_double(r.htm_t)
       << ',' << r.c << ',' << r.cm << ',' << format_double(r.lower) << ','
       << format_double(r.upper) << '\n';
  }
  return os.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << content;
  if (!out) throw InputError("failed writing '" + path + "'");
}

std::string format_double(double x) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ec == std::errc() ? p : buf);
}

}  // namespace driftwatch
