#include "robustsize/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace robustsize {

namespace {

std::vector<double> parse_row(const std::string& line, const std::string& name, int lineno) {
    std::vector<double> row;
    std::size_t pos = 0;
    while (pos <= line.size()) {
        std::size_t comma = line.find(',', pos);
        std::string token = line.substr(pos, comma == std::string::npos ? std::string::npos
                                                                        : comma - pos);
        std::size_t begin = token.find_first_not_of(" \t\r");
        if (begin == std::string::npos) {
            throw std::runtime_error(name + ":" + std::to_string(lineno) + ": empty field");
        }
        std::size_t end = token.find_last_not_of(" \t\r");
        token = token.substr(begin, end - begin + 1);
        char* parse_end = nullptr;
        double value = std::strtod(token.c_str(), &parse_end);
        if (parse_end == token.c_str() || *parse_end != '\0') {
            throw std::runtime_error(name + ":" + std::to_string(lineno) +
                                     ": not a number: '" + token + "'");
        }
        row.push_back(value);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return row;
}

}  // namespace

Matrix read_csv_matrix(std::istream& in, const std::string& name) {
    std::vector<std::vector<double>> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        rows.push_back(parse_row(line, name, lineno));
        if (rows.back().size() != rows.front().size()) {
            throw std::runtime_error(name + ":" + std::to_string(lineno) + ": ragged row (" +
                                     std::to_string(rows.back().size()) + " fields, expected " +
                                     std::to_string(rows.front().size()) + ")");
        }
    }
    if (rows.empty()) throw std::runtime_error(name + ": no data");
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return m;
}

Matrix read_csv_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read_csv_matrix(in, path);
}

Vector read_csv_vector(const std::string& path) {
    Matrix m = read_csv_matrix(path);
    if (m.cols() == 1) return m.col(0);
    if (m.rows() == 1) return m.row(0).transpose();
    throw std::runtime_error(path + ": expected a vector, got " + std::to_string(m.rows()) +
                             "x" + std::to_string(m.cols()));
}

std::string format_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

void write_csv(std::ostream& out, const Matrix& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j > 0) out << ',';
            out << format_double(m(i, j));
        }
        out << '\n';
    }
}

void write_csv(const std::string& path, const Matrix& m) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    write_csv(out, m);
}

}  // namespace robustsize
