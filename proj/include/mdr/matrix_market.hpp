#ifndef MDR_MATRIX_MARKET_HPP
#define MDR_MATRIX_MARKET_HPP

#include <string>

#include "mdr/sym_matrix.hpp"

namespace mdr {

// Matrix Market exchange format, coordinate and array variants, with the
// symmetric qualifier honored. General square inputs are symmetrized on
// ingestion. Parse failures raise IoError naming file and line.
SymMatrix read_matrix_market(const std::string& path);
void write_matrix_market(const std::string& path, const SymMatrix& m);

// Vectors as one-column arrays (or a bare list of values).
VectorXd read_vector(const std::string& path);
void write_vector(const std::string& path, const VectorXd& v);

// General (possibly rectangular) dense matrix, array or coordinate format.
MatrixXd read_matrix_market_general(const std::string& path);
void write_matrix_market_general(const std::string& path, const MatrixXd& m);

}  // namespace mdr

#endif
