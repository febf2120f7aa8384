#include "mdr/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "mdr/errors.hpp"

namespace mdr {

namespace {

struct MmHeader {
  bool coordinate = true;
  bool symmetric = false;
  bool pattern = false;
};

[[noreturn]] void fail(const std::string& path, long line, const std::string& what) {
  throw IoError(path + ":" + std::to_string(line) + ": " + what);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

MmHeader parse_header(const std::string& path, std::istream& in, long& line) {
  std::string l;
  if (!std::getline(in, l)) fail(path, 1, "empty file");
  line = 1;
  std::istringstream hs(l);
  std::string banner, object, format, field, sym;
  hs >> banner >> object >> format >> field >> sym;
  if (lower(banner) != "%%matrixmarket" || lower(object) != "matrix")
    fail(path, 1, "not a Matrix Market matrix file");
  MmHeader h;
  format = lower(format);
  if (format == "coordinate")
    h.coordinate = true;
  else if (format == "array")
    h.coordinate = false;
  else
    fail(path, 1, "unsupported format '" + format + "'");
  field = lower(field);
  if (field == "pattern")
    h.pattern = true;
  else if (field != "real" && field != "integer")
    fail(path, 1, "unsupported field '" + field + "'");
  sym = lower(sym);
  if (sym == "symmetric")
    h.symmetric = true;
  else if (sym != "general")
    fail(path, 1, "unsupported symmetry '" + sym + "'");
  return h;
}

bool next_data_line(std::istream& in, std::string& out, long& line) {
  while (std::getline(in, out)) {
    ++line;
    auto pos = out.find_first_not_of(" \t\r\n");
    if (pos == std::string::npos) continue;
    if (out[pos] == '%') continue;
    return true;
  }
  return false;
}

struct Parsed {
  MmHeader h;
  Index rows = 0, cols = 0;
  std::vector<Triplet> entries;  // as given (1-based converted to 0-based)
};

Parsed parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open");
  long line = 0;
  Parsed p;
  p.h = parse_header(path, in, line);
  std::string l;
  if (!next_data_line(in, l, line)) fail(path, line, "missing size line");
  std::istringstream ss(l);
  long nnz = 0;
  if (p.h.coordinate) {
    if (!(ss >> p.rows >> p.cols >> nnz)) fail(path, line, "bad size line");
  } else {
    if (!(ss >> p.rows >> p.cols)) fail(path, line, "bad size line");
    nnz = static_cast<long>(p.rows) * p.cols;
  }
  if (p.rows < 1 || p.cols < 1) fail(path, line, "bad dimensions");
  p.entries.reserve(nnz);
  if (p.h.coordinate) {
    for (long k = 0; k < nnz; ++k) {
      if (!next_data_line(in, l, line)) fail(path, line, "unexpected end of data");
      std::istringstream es(l);
      long r, c;
      double v = 1.0;
      if (!(es >> r >> c)) fail(path, line, "bad coordinate entry");
      if (!p.h.pattern && !(es >> v)) fail(path, line, "missing value");
      if (r < 1 || c < 1 || r > p.rows || c > p.cols)
        fail(path, line, "index out of range");
      p.entries.push_back({r - 1, c - 1, v});
    }
  } else {
    // column-major dense data; symmetric array stores the lower triangle
    for (Index c = 0; c < p.cols; ++c) {
      const Index r0 = p.h.symmetric ? c : 0;
      for (Index r = r0; r < p.rows; ++r) {
        if (!next_data_line(in, l, line)) fail(path, line, "unexpected end of data");
        std::istringstream es(l);
        double v;
        if (!(es >> v)) fail(path, line, "bad array value");
        p.entries.push_back({r, c, v});
      }
    }
  }
  return p;
}

}  // namespace

SymMatrix read_matrix_market(const std::string& path) {
  Parsed p = parse_file(path);
  if (p.rows != p.cols) throw IoError(path + ": symmetric read needs a square matrix");
  if (p.h.coordinate) {
    std::vector<Triplet> up;
    up.reserve(p.entries.size());
    if (p.h.symmetric) {
      up = p.entries;
    } else {
      // general coordinate: average the two triangles
      for (const auto& t : p.entries) {
        if (t.row == t.col)
          up.push_back(t);
        else
          up.push_back({std::min(t.row, t.col), std::max(t.row, t.col), 0.5 * t.value});
      }
    }
    return SymMatrix::from_triplets(p.rows, std::move(up));
  }
  MatrixXd a = MatrixXd::Zero(p.rows, p.cols);
  for (const auto& t : p.entries) {
    a(t.row, t.col) = t.value;
    if (p.h.symmetric) a(t.col, t.row) = t.value;
  }
  return SymMatrix::from_dense(a);
}

void write_matrix_market(const std::string& path, const SymMatrix& m) {
  std::ofstream out(path);
  if (!out) throw IoError(path + ": cannot open for writing");
  char buf[64];
  if (m.is_dense()) {
    out << "%%MatrixMarket matrix array real symmetric\n";
    out << m.dim() << " " << m.dim() << "\n";
    for (Index c = 0; c < m.dim(); ++c)
      for (Index r = c; r < m.dim(); ++r) {
        std::snprintf(buf, sizeof buf, "%.17g\n", m.dense()(r, c));
        out << buf;
      }
  } else {
    out << "%%MatrixMarket matrix coordinate real symmetric\n";
    out << m.dim() << " " << m.dim() << " " << m.upper_entries().size() << "\n";
    for (const auto& t : m.upper_entries()) {
      // store lower triangle (row >= col) per MM convention
      std::snprintf(buf, sizeof buf, "%ld %ld %.17g\n", static_cast<long>(t.col + 1),
                    static_cast<long>(t.row + 1), t.value);
      out << buf;
    }
  }
  if (!out) throw IoError(path + ": write failed");
}

VectorXd read_vector(const std::string& path) {
  std::ifstream probe(path);
  if (!probe) throw IoError(path + ": cannot open");
  std::string first;
  std::getline(probe, first);
  if (first.rfind("%%MatrixMarket", 0) == 0 || first.rfind("%%matrixmarket", 0) == 0) {
    MatrixXd m = read_matrix_market_general(path);
    if (m.cols() != 1) throw IoError(path + ": expected a one-column vector");
    return m.col(0);
  }
  // bare list of values
  std::ifstream in(path);
  std::vector<double> vals;
  double v;
  while (in >> v) vals.push_back(v);
  if (vals.empty()) throw IoError(path + ": no values");
  return Eigen::Map<VectorXd>(vals.data(), vals.size());
}

void write_vector(const std::string& path, const VectorXd& v) {
  std::ofstream out(path);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << "%%MatrixMarket matrix array real general\n";
  out << v.size() << " 1\n";
  char buf[64];
  for (Index i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g\n", v[i]);
    out << buf;
  }
  if (!out) throw IoError(path + ": write failed");
}

MatrixXd read_matrix_market_general(const std::string& path) {
  Parsed p = parse_file(path);
  MatrixXd a = MatrixXd::Zero(p.rows, p.cols);
  for (const auto& t : p.entries) {
    a(t.row, t.col) += t.value;
    if (p.h.symmetric && t.row != t.col) a(t.col, t.row) += t.value;
  }
  return a;
}

void write_matrix_market_general(const std::string& path, const MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << "%%MatrixMarket matrix array real general\n";
  out << m.rows() << " " << m.cols() << "\n";
  char buf[64];
  for (Index c = 0; c < m.cols(); ++c)
    for (Index r = 0; r < m.rows(); ++r) {
      std::snprintf(buf, sizeof buf, "%.17g\n", m(r, c));
      out << buf;
    }
  if (!out) throw IoError(path + ": write failed");
}

}  // namespace mdr
