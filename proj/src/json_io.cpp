#include "evh/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

namespace evh {

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      rows.push_back(Json::array({m(i, j).real(), m(i, j).imag()}));
  return rows;
}

Matrix matrix_from_json(const Json& j, Index rows, Index cols) {
  require(j.is_array() && static_cast<Index>(j.size()) == rows * cols, Err::IoError,
          "matrix entry count does not match the declared dimension");
  Matrix m(rows, cols);
  Index k = 0;
  for (Index i = 0; i < rows; ++i)
    for (Index c = 0; c < cols; ++c, ++k) {
      const Json& e = j[static_cast<std::size_t>(k)];
      require(e.is_array() && e.size() == 2, Err::IoError, "matrix entries must be [re, im]");
      m(i, c) = Complex(e[0].get<double>(), e[1].get<double>());
    }
  return m;
}

Json law_to_json(const MaterialLaw& m) {
  require(m.square(), Err::DimensionMismatch, "only square laws serialize");
  Json j;
  j["dim"] = m.rows();
  j["eps"] = m.eps;
  j["K"] = m.truncation();
  if (m.has_pole()) j["pole"] = matrix_to_json(*m.pole);
  Json coeffs = Json::array();
  for (const auto& c : m.coeffs) coeffs.push_back(matrix_to_json(c));
  j["coeffs"] = std::move(coeffs);
  return j;
}

MaterialLaw law_from_json(const Json& j) {
  require(j.contains("dim") && j.contains("eps") && j.contains("K") && j.contains("coeffs"),
          Err::IoError, "law object needs dim, eps, K, coeffs");
  const Index dim = j["dim"].get<Index>();
  const int k = j["K"].get<int>();
  MaterialLaw m;
  m.eps = j["eps"].get<double>();
  require(j["coeffs"].is_array() && static_cast<int>(j["coeffs"].size()) == k + 1, Err::IoError,
          "coeffs length must be K + 1");
  m.coeffs.reserve(static_cast<std::size_t>(k) + 1);
  for (const auto& c : j["coeffs"]) m.coeffs.push_back(matrix_from_json(c, dim, dim));
  if (j.contains("pole")) m.pole = matrix_from_json(j["pole"], dim, dim);
  m.validate();
  return m;
}

Json certificate_to_json(const PositivityCertificate& cert) {
  Json j;
  j["c"] = cert.c;
  j["d"] = cert.d;
  j["nu1"] = cert.nu1;
  j["delta_hat"] = cert.delta_hat;
  j["r"] = cert.r;
  j["c_out"] = cert.c_out;
  j["sup_bound"] = cert.sup_used;
  j["sup_estimated"] = cert.sup_estimated;
  return j;
}

namespace {

void format_double(std::string& out, double v) {
  if (!std::isfinite(v)) {  // JSON has no inf/nan literals
    out += "null";
    return;
  }
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
  // Keep a float-typed token so the value round-trips as a double.
  if (out.find_first_of(".eE", out.size() - std::strlen(buf)) == std::string::npos) out += ".0";
}

void dump_rec(const Json& j, std::string& out, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent) * depth, ' ');
  const std::string pad_in(static_cast<std::size_t>(indent) * (depth + 1), ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad_in + Json(it.key()).dump() + ": ";
        dump_rec(it.value(), out, indent, depth + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += ",\n";
        first = false;
        out += pad_in;
        dump_rec(e, out, indent, depth + 1);
      }
      out += "\n" + pad + "]";
      return;
    }
    case Json::value_t::number_float:
      format_double(out, j.get<double>());
      return;
    default:
      out += j.dump();
      return;
  }
}

}  // namespace

std::string dump_json(const Json& j, int indent) {
  std::string out;
  dump_rec(j, out, indent, 0);
  out += "\n";
  return out;
}

void write_text_file(const std::string& path, const std::string& body) {
  std::ofstream f(path, std::ios::binary);
  require(f.good(), Err::IoError, "cannot open " + path + " for writing");
  f << body;
  require(f.good(), Err::IoError, "write failed for " + path);
}

Json read_json_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), Err::IoError, "cannot open " + path);
  Json j;
  try {
    j = Json::parse(f);
  } catch (const std::exception& e) {
    fail(Err::ConfigError, "JSON parse error in " + path + ": " + e.what());
  }
  return j;
}

}  // namespace evh
