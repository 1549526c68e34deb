#include "translaw/csv.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace translaw {

namespace {

[[noreturn]] void fail_at(const std::string& path, std::size_t line, const std::string& msg) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

double parse_double(const std::string& path, std::size_t line, const std::string& field,
                    const std::string& name) {
  if (field.empty()) fail_at(path, line, name + " is empty");
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (end != field.c_str() + field.size() || errno == ERANGE || !std::isfinite(v))
    fail_at(path, line, name + " is not a finite number: '" + field + "'");
  return v;
}

std::int64_t parse_count(const std::string& path, std::size_t line, const std::string& field,
                         const std::string& name) {
  const double v = parse_double(path, line, field, name);
  if (v < 1.0 || v != std::floor(v) || v > 9.007199254740992e15)
    fail_at(path, line, name + " must be a positive integer: '" + field + "'");
  return static_cast<std::int64_t>(v);
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open for reading");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::vector<Observation> read_observations(const std::string& path) {
  const auto lines = read_lines(path);
  std::size_t lno = 0;
  while (lno < lines.size() && trim(lines[lno]).empty()) ++lno;
  if (lno == lines.size()) throw std::runtime_error(path + ": no header line");

  const auto header = split_fields(lines[lno]);
  int col_n = -1, col_s = -1, col_err = -1, col_group = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    int* slot = nullptr;
    if (header[c] == "n") slot = &col_n;
    else if (header[c] == "s") slot = &col_s;
    else if (header[c] == "error") slot = &col_err;
    else if (header[c] == "group") slot = &col_group;
    else fail_at(path, lno + 1, "unknown column '" + header[c] + "'");
    if (*slot != -1) fail_at(path, lno + 1, "duplicate column '" + header[c] + "'");
    *slot = static_cast<int>(c);
  }
  if (col_n == -1) fail_at(path, lno + 1, "missing column 'n'");
  if (col_err == -1) fail_at(path, lno + 1, "missing column 'error'");

  std::vector<Observation> obs;
  for (++lno; lno < lines.size(); ++lno) {
    if (trim(lines[lno]).empty()) continue;
    const auto fields = split_fields(lines[lno]);
    if (fields.size() != header.size())
      fail_at(path, lno + 1,
              "expected " + std::to_string(header.size()) + " fields, got " +
                  std::to_string(fields.size()));
    const std::int64_t n = parse_count(path, lno + 1, fields[col_n], "n");
    const std::int64_t s = col_s == -1 ? 1 : parse_count(path, lno + 1, fields[col_s], "s");
    const double err = parse_double(path, lno + 1, fields[col_err], "error");
    std::string group = col_group == -1 ? std::string{} : fields[col_group];
    try {
      obs.emplace_back(n, s, err, std::move(group));
    } catch (const std::exception& e) {
      fail_at(path, lno + 1, e.what());
    }
  }
  if (obs.empty()) throw std::runtime_error(path + ": no data rows");
  return obs;
}

void write_observations(const std::string& path, const std::vector<Observation>& obs) {
  bool any_group = false;
  for (const auto& o : obs) any_group = any_group || !o.group.empty();

  std::ostringstream out;
  out << (any_group ? "n,s,error,group\n" : "n,s,error\n");
  for (const auto& o : obs) {
    out << o.n << ',' << o.s << ',' << format_double(o.error);
    if (any_group) out << ',' << o.group;
    out << '\n';
  }
  write_text_atomic(path, out.str());
}

Eigen::MatrixXd read_activations(const std::string& path) {
  const auto lines = read_lines(path);
  std::vector<std::vector<double>> rows;
  std::size_t width = 0;
  for (std::size_t lno = 0; lno < lines.size(); ++lno) {
    if (trim(lines[lno]).empty()) continue;
    const auto fields = split_fields(lines[lno]);
    std::vector<double> row(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c)
      row[c] = parse_double(path, lno + 1, fields[c], "column " + std::to_string(c + 1));
    if (rows.empty()) width = row.size();
    else if (row.size() != width)
      fail_at(path, lno + 1,
              "expected " + std::to_string(width) + " fields, got " +
                  std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error(path + ": no data rows");
  Eigen::MatrixXd m(rows.size(), width);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < width; ++c) m(r, c) = rows[r][c];
  return m;
}

void write_plot(const std::string& path, const PlotSeries& series) {
  if (series.x.size() != series.predicted.size())
    throw std::invalid_argument("plot: x and predicted lengths differ");
  if (!series.observed.empty() && series.observed.size() != series.x.size())
    throw std::invalid_argument("plot: observed length differs from x");
  if (series.x_name.empty() || series.x_name.find(',') != std::string::npos)
    throw std::invalid_argument("plot: bad x column name");

  std::ostringstream out;
  out << series.x_name << (series.observed.empty() ? ",predicted\n" : ",observed,predicted\n");
  for (std::size_t i = 0; i < series.x.size(); ++i) {
    out << format_double(series.x[i]);
    if (!series.observed.empty()) {
      out << ',';
      if (!std::isnan(series.observed[i])) out << format_double(series.observed[i]);
    }
    out << ',' << format_double(series.predicted[i]) << '\n';
  }
  write_text_atomic(path, out.str());
}

PlotSeries read_plot(const std::string& path) {
  const auto lines = read_lines(path);
  std::size_t lno = 0;
  while (lno < lines.size() && trim(lines[lno]).empty()) ++lno;
  if (lno == lines.size()) throw std::runtime_error(path + ": no header line");

  const auto header = split_fields(lines[lno]);
  const bool has_observed = header.size() == 3;
  if (header.size() < 2 || header.size() > 3 || header.back() != "predicted" ||
      (has_observed && header[1] != "observed"))
    fail_at(path, lno + 1, "expected header <x>[,observed],predicted");

  PlotSeries s;
  s.x_name = header[0];
  for (++lno; lno < lines.size(); ++lno) {
    if (trim(lines[lno]).empty()) continue;
    const auto fields = split_fields(lines[lno]);
    if (fields.size() != header.size())
      fail_at(path, lno + 1,
              "expected " + std::to_string(header.size()) + " fields, got " +
                  std::to_string(fields.size()));
    s.x.push_back(parse_double(path, lno + 1, fields[0], s.x_name));
    if (has_observed)
      s.observed.push_back(fields[1].empty()
                               ? std::numeric_limits<double>::quiet_NaN()
                               : parse_double(path, lno + 1, fields[1], "observed"));
    s.predicted.push_back(parse_double(path, lno + 1, fields.back(), "predicted"));
  }
  if (s.x.empty()) throw std::runtime_error(path + ": no data rows");
  return s;
}

void write_text_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(tmp.string() + ": cannot open for writing");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error(tmp.string() + ": write failed");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error(path + ": rename failed: " + ec.message());
  }
}

}  // namespace translaw
