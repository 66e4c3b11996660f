#include "foldsimplex/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "foldsimplex/error.hpp"

namespace foldsimplex {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line, char delimiter) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream stream(line);
    while (std::getline(stream, field, delimiter)) {
        fields.push_back(trim(field));
    }
    if (!line.empty() && line.back() == delimiter) {
        fields.emplace_back();
    }
    return fields;
}

double parse_number(const std::string& field, int line, int column) {
    double value = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    if (!field.empty() && *begin == '+') {
        ++begin;
    }
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (field.empty() || ec != std::errc() || ptr != end) {
        raise(ErrorKind::parse, "line " + std::to_string(line) + ", column " + std::to_string(column) +
                                    ": cannot parse '" + field + "' as a number");
    }
    return value;
}

std::string format_double(double v) {
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.17g", v);
    return buffer;
}

} // namespace

DataMatrix::DataMatrix(Matrix values, std::vector<std::string> names, std::vector<int> row_ids)
    : values_(std::move(values)), names_(std::move(names)), row_ids_(std::move(row_ids)) {
    if (values_.cols() < 2) {
        raise(ErrorKind::invalid_dimension, "data need at least 2 parts");
    }
    if (!values_.allFinite()) {
        raise(ErrorKind::invalid_argument, "data contain non-finite values");
    }
    if (values_.size() > 0 && !(values_.minCoeff() > 0.0)) {
        raise(ErrorKind::zero_component,
              "data contain zero or negative parts; zero values are not supported");
    }
    values_.array().colwise() /= values_.rowwise().sum().array();
    if (names_.empty()) {
        names_ = default_part_names(parts());
    }
    if (static_cast<int>(names_.size()) != parts()) {
        raise(ErrorKind::invalid_argument, "number of names does not match number of parts");
    }
    if (row_ids_.empty()) {
        row_ids_.resize(rows());
        for (int i = 0; i < rows(); ++i) {
            row_ids_[i] = i + 1;
        }
    }
    if (static_cast<int>(row_ids_.size()) != rows()) {
        raise(ErrorKind::invalid_argument, "number of row ids does not match number of rows");
    }
}

DataMatrix DataMatrix::select(const std::vector<int>& indices) const {
    Matrix out(static_cast<Eigen::Index>(indices.size()), values_.cols());
    std::vector<int> ids(indices.size());
    for (std::size_t k = 0; k < indices.size(); ++k) {
        out.row(static_cast<Eigen::Index>(k)) = values_.row(indices[k]);
        ids[k] = row_ids_[indices[k]];
    }
    return DataMatrix(std::move(out), names_, std::move(ids));
}

DataMatrix DataMatrix::drop_ids(const std::vector<int>& ids) const {
    std::vector<int> keep;
    for (int i = 0; i < rows(); ++i) {
        if (std::find(ids.begin(), ids.end(), row_ids_[i]) == ids.end()) {
            keep.push_back(i);
        }
    }
    for (int id : ids) {
        if (std::find(row_ids_.begin(), row_ids_.end(), id) == row_ids_.end()) {
            raise(ErrorKind::invalid_argument, "row " + std::to_string(id) + " does not exist");
        }
    }
    return select(keep);
}

std::vector<std::string> default_part_names(int parts) {
    std::vector<std::string> names(parts);
    for (int i = 0; i < parts; ++i) {
        names[i] = "x" + std::to_string(i + 1);
    }
    return names;
}

DataMatrix read_dataset(std::istream& in, const DatasetOptions& options) {
    std::vector<std::string> names;
    std::vector<std::vector<double>> rows;
    std::string line;
    int line_no = 0;
    std::size_t width = 0;

    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        auto fields = split(line, options.delimiter);
        if (options.has_header && names.empty() && rows.empty()) {
            names = fields;
            width = names.size();
            continue;
        }
        if (width == 0) {
            width = fields.size();
        }
        if (fields.size() != width) {
            raise(ErrorKind::parse, "line " + std::to_string(line_no) + ": expected " + std::to_string(width) +
                                        " fields, found " + std::to_string(fields.size()));
        }
        std::vector<double> row(width);
        double total = 0.0;
        for (std::size_t c = 0; c < width; ++c) {
            row[c] = parse_number(fields[c], line_no, static_cast<int>(c) + 1);
            if (!(row[c] > 0.0)) {
                raise(ErrorKind::zero_component,
                      "line " + std::to_string(line_no) + ", column " + std::to_string(c + 1) + ": value " +
                          fields[c] +
                          " is not strictly positive; compositions with zero parts are not supported");
            }
            total += row[c];
        }
        if (!options.normalize && std::abs(total - 1.0) > 1e-6) {
            raise(ErrorKind::parse, "line " + std::to_string(line_no) + ": row sums to " + format_double(total) +
                                        ", not 1 (pass --normalize to close rows)");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        raise(ErrorKind::parse, "no data rows");
    }

    Matrix values(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < width; ++c) {
            values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        }
    }
    return DataMatrix(std::move(values), names);
}

DataMatrix read_dataset_file(const std::string& path, const DatasetOptions& options) {
    std::ifstream in(path);
    if (!in) {
        raise(ErrorKind::io, "cannot open " + path);
    }
    return read_dataset(in, options);
}

Matrix read_matrix_file(const std::string& path, char delimiter) {
    std::ifstream in(path);
    if (!in) {
        raise(ErrorKind::io, "cannot open " + path);
    }
    std::vector<std::vector<double>> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        auto fields = split(line, delimiter);
        std::vector<double> row;
        for (std::size_t c = 0; c < fields.size(); ++c) {
            row.push_back(parse_number(fields[c], line_no, static_cast<int>(c) + 1));
        }
        rows.push_back(std::move(row));
    }
    const auto n = static_cast<Eigen::Index>(rows.size());
    Matrix m(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
        if (static_cast<Eigen::Index>(rows[r].size()) != n) {
            raise(ErrorKind::parse, path + ": matrix is not square");
        }
        for (Eigen::Index c = 0; c < n; ++c) {
            m(r, c) = rows[r][c];
        }
    }
    return m;
}

void write_dataset_header(std::ostream& out, const std::vector<std::string>& names) {
    for (std::size_t c = 0; c < names.size(); ++c) {
        out << (c ? "," : "") << names[c];
    }
    out << '\n';
}

void write_dataset(std::ostream& out, const DataMatrix& data) {
    write_dataset_header(out, data.names());
    for (int r = 0; r < data.rows(); ++r) {
        for (int c = 0; c < data.parts(); ++c) {
            out << (c ? "," : "") << format_double(data.values()(r, c));
        }
        out << '\n';
    }
}

} // namespace foldsimplex
