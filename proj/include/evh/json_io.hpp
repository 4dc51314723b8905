#pragma once

#include <nlohmann/json_fwd.hpp>
#include <string>

#include "evh/material_law.hpp"

namespace evh {

using Json = nlohmann::json;

/// Schema: {dim, eps, K, pole?: matrix, coeffs: [matrix, ...]} where a matrix
/// is a row-major array of [re, im] pairs. Square laws only.
Json law_to_json(const MaterialLaw& m);
MaterialLaw law_from_json(const Json& j);

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j, Index rows, Index cols);

Json certificate_to_json(const PositivityCertificate& cert);

/// Serializes with every floating value printed at 17 significant digits
/// (%.17g), keys in sorted order; byte-deterministic.
std::string dump_json(const Json& j, int indent = 2);

void write_text_file(const std::string& path, const std::string& body);
Json read_json_file(const std::string& path);

}  // namespace evh
