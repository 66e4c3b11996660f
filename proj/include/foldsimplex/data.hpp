#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "foldsimplex/geometry.hpp"

namespace foldsimplex {

/// n compositions stored row-wise, with column names and original row ids.
class DataMatrix {
public:
    /// Rows are closed to unit sum; every entry must be finite and > 0.
    explicit DataMatrix(Matrix values, std::vector<std::string> names = {},
                        std::vector<int> row_ids = {});

    int rows() const { return static_cast<int>(values_.rows()); }
    int parts() const { return static_cast<int>(values_.cols()); }

    const Matrix& values() const { return values_; }
    const std::vector<std::string>& names() const { return names_; }
    /// 1-based ids of the rows in the source file (or 1..n).
    const std::vector<int>& row_ids() const { return row_ids_; }

    Composition composition(int i) const { return Composition(values_.row(i).transpose()); }

    /// Rows at `indices` (repeats allowed), keeping their ids.
    DataMatrix select(const std::vector<int>& indices) const;
    /// All rows except those whose id is listed.
    DataMatrix drop_ids(const std::vector<int>& ids) const;

private:
    Matrix values_;
    std::vector<std::string> names_;
    std::vector<int> row_ids_;
};

struct DatasetOptions {
    char delimiter = ',';
    bool has_header = true;
    /// Close rows that do not sum to one; otherwise they must sum to 1 within 1e-6.
    bool normalize = false;
};

DataMatrix read_dataset(std::istream& in, const DatasetOptions& options = {});
DataMatrix read_dataset_file(const std::string& path, const DatasetOptions& options = {});

/// Headerless square numeric CSV.
Matrix read_matrix_file(const std::string& path, char delimiter = ',');

/// Header row of names, then one row per composition printed with %.17g.
void write_dataset(std::ostream& out, const DataMatrix& data);
void write_dataset_header(std::ostream& out, const std::vector<std::string>& names);

std::vector<std::string> default_part_names(int parts);

} // namespace foldsimplex
