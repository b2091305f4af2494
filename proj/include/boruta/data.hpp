#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "boruta/rng.hpp"

namespace boruta {

// Raised for anything wrong with user-supplied data (files, columns, labels).
class DataError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct Task {
    enum class Kind { Regression, Classification };
    Kind kind = Kind::Regression;
    int num_classes = 0;

    static Task regression() { return {Kind::Regression, 0}; }
    static Task classification(int num_classes) {
        if (num_classes < 2)
            throw DataError("classification requires at least 2 classes");
        return {Kind::Classification, num_classes};
    }
    bool is_classification() const { return kind == Kind::Classification; }
    bool operator==(const Task&) const = default;
};

// Dense row-major matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> v;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c, 0.0) {}

    double at(std::size_t r, std::size_t c) const { return v[r * cols + c]; }
    double& at(std::size_t r, std::size_t c) { return v[r * cols + c]; }
    const double* row(std::size_t r) const { return v.data() + r * cols; }

    std::vector<double> column(std::size_t c) const {
        std::vector<double> out(rows);
        for (std::size_t r = 0; r < rows; ++r) out[r] = at(r, c);
        return out;
    }
    void set_column(std::size_t c, const std::vector<double>& col) {
        for (std::size_t r = 0; r < rows; ++r) at(r, c) = col[r];
    }
};

struct DataMatrix {
    Matrix X;
    std::vector<double> target;
    std::vector<std::string> feature_names;
    Task task;

    std::size_t n() const { return X.rows; }
    std::size_t p() const { return X.cols; }

    void validate() const {
        if (X.rows != target.size())
            throw DataError("row count does not match target length");
        if (feature_names.size() != X.cols)
            throw DataError("feature name count does not match column count");
        for (double x : X.v)
            if (!std::isfinite(x)) throw DataError("non-finite feature value");
        for (double y : target)
            if (!std::isfinite(y)) throw DataError("non-finite target value");
        if (task.is_classification()) {
            for (double y : target) {
                double r = std::nearbyint(y);
                if (r != y || r < 0 || r >= task.num_classes)
                    throw DataError("class label out of range [0, num_classes)");
            }
        }
    }

    int label(std::size_t r) const { return static_cast<int>(target[r]); }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline bool parse_double(const std::string& s, double& out) {
    std::string t = trim(s);
    if (t.empty()) return false;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

}  // namespace detail

inline DataMatrix load_csv(const std::string& path,
                           const std::string& target_column, Task task) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw DataError("empty dataset: " + path);
    auto header = detail::split_csv_line(line);
    for (auto& h : header) h = detail::trim(h);

    // target column by name, falling back to a numeric index
    std::size_t target_idx = header.size();
    for (std::size_t j = 0; j < header.size(); ++j)
        if (header[j] == target_column) target_idx = j;
    if (target_idx == header.size()) {
        double idx;
        if (detail::parse_double(target_column, idx) && idx >= 0 &&
            idx < static_cast<double>(header.size()) &&
            idx == std::nearbyint(idx))
            target_idx = static_cast<std::size_t>(idx);
        else
            throw DataError("target column not found: " + target_column);
    }

    std::size_t p = header.size() - 1;
    if (p == 0) throw DataError("dataset has no feature columns");

    DataMatrix d;
    d.task = task;
    for (std::size_t j = 0; j < header.size(); ++j)
        if (j != target_idx) d.feature_names.push_back(header[j]);

    std::vector<double> values;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        ++row;
        auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size())
            throw DataError("row " + std::to_string(row) + ": expected " +
                            std::to_string(header.size()) + " cells, got " +
                            std::to_string(cells.size()));
        for (std::size_t j = 0; j < cells.size(); ++j) {
            double x;
            if (!detail::parse_double(cells[j], x))
                throw DataError("non-numeric cell at row " +
                                std::to_string(row) + ", column '" + header[j] +
                                "': '" + detail::trim(cells[j]) + "'");
            if (j == target_idx)
                d.target.push_back(x);
            else
                values.push_back(x);
        }
    }
    if (d.target.empty()) throw DataError("dataset has no data rows: " + path);

    d.X.rows = d.target.size();
    d.X.cols = p;
    d.X.v = std::move(values);
    d.validate();
    return d;
}

inline void save_csv(const DataMatrix& d, std::ostream& out,
                     const std::string& target_name = "target") {
    out.precision(17);
    for (std::size_t j = 0; j < d.p(); ++j) out << d.feature_names[j] << ',';
    out << target_name << '\n';
    for (std::size_t i = 0; i < d.n(); ++i) {
        for (std::size_t j = 0; j < d.p(); ++j) out << d.X.at(i, j) << ',';
        out << d.target[i] << '\n';
    }
}

struct FoldSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

inline std::vector<FoldSplit> kfold_split(const DataMatrix& data, std::size_t k,
                                          std::uint64_t seed) {
    std::size_t n = data.n();
    if (k < 2 || k > n) throw DataError("k must satisfy 2 <= k <= n");

    Rng rng(derive_seed(seed, 0x6b666f6c64ULL));
    auto order = rng.permutation(n);

    std::vector<FoldSplit> folds(k);
    std::size_t base = n / k, extra = n % k, pos = 0;
    for (std::size_t f = 0; f < k; ++f) {
        std::size_t size = base + (f < extra ? 1 : 0);
        folds[f].test.assign(order.begin() + pos, order.begin() + pos + size);
        pos += size;
    }
    for (std::size_t f = 0; f < k; ++f) {
        std::set<std::size_t> test_set(folds[f].test.begin(),
                                       folds[f].test.end());
        for (std::size_t i = 0; i < n; ++i)
            if (!test_set.count(i)) folds[f].train.push_back(i);
    }
    return folds;
}

inline DataMatrix select_columns(const DataMatrix& data,
                                 const std::vector<std::size_t>& columns) {
    if (columns.empty())
        throw DataError("cannot select an empty feature set");
    for (std::size_t c : columns)
        if (c >= data.p())
            throw DataError("column index out of range: " + std::to_string(c));

    DataMatrix out;
    out.task = data.task;
    out.target = data.target;
    out.X = Matrix(data.n(), columns.size());
    for (std::size_t j = 0; j < columns.size(); ++j) {
        out.feature_names.push_back(data.feature_names[columns[j]]);
        for (std::size_t i = 0; i < data.n(); ++i)
            out.X.at(i, j) = data.X.at(i, columns[j]);
    }
    return out;
}

inline DataMatrix select_rows(const DataMatrix& data,
                              const std::vector<std::size_t>& rows) {
    DataMatrix out;
    out.task = data.task;
    out.feature_names = data.feature_names;
    out.X = Matrix(rows.size(), data.p());
    out.target.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.target[i] = data.target[rows[i]];
        for (std::size_t j = 0; j < data.p(); ++j)
            out.X.at(i, j) = data.X.at(rows[i], j);
    }
    return out;
}

}  // namespace boruta
