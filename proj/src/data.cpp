#include "defrag/data.hpp"

#include "defrag/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <numbers>
#include <sstream>

namespace defrag {

void Dataset::validate() const {
    if (X.rows() < 1) throw Error("dataset is empty");
    if (X.cols() < 1) throw Error("dataset has no feature columns");
    if (!X.allFinite()) throw Error("dataset contains non-finite features");
    if (y.size() != X.rows()) throw Error("target length does not match the number of rows");
    if (!y.allFinite()) throw Error("dataset contains non-finite targets");
    if (task == Task::classification) {
        if (n_classes < 2) throw Error("classification dataset needs at least two classes");
        for (Index n = 0; n < y.size(); ++n) {
            if (y(n) < 0 || y(n) >= n_classes || y(n) != std::floor(y(n)))
                throw Error("row " + std::to_string(n) + ": class index out of range");
        }
    }
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string> split_line(std::string_view line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

bool parse_number(std::string_view cell, double& out) {
    if (cell.empty()) return false;
    if (cell.front() == '+') cell.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
    return ec == std::errc() && ptr == cell.data() + cell.size() && std::isfinite(out);
}

}  // namespace

Dataset parse_csv(const std::string& text, const CsvOptions& options) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        rows.push_back(split_line(line));
        line_numbers.push_back(line_no);
    }
    if (rows.empty()) throw ParseError("CSV has no rows");

    std::vector<std::string> header;
    if (options.has_header) {
        header = rows.front();
        rows.erase(rows.begin());
        line_numbers.erase(line_numbers.begin());
    }
    if (rows.empty()) throw ParseError("CSV has no data rows");
    const std::size_t width = options.has_header ? header.size() : rows.front().size();
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != width)
            throw ParseError("line " + std::to_string(line_numbers[r]) + ": expected " + std::to_string(width) +
                             " columns, found " + std::to_string(rows[r].size()));
    }

    std::ptrdiff_t target = -1;
    if (options.has_target) {
        if (width < 2) throw ParseError("CSV needs at least one feature column and a target column");
        if (options.target_column.empty()) {
            target = static_cast<std::ptrdiff_t>(width) - 1;
        } else if (auto it = std::find(header.begin(), header.end(), options.target_column); it != header.end()) {
            target = it - header.begin();
        } else {
            double idx = 0;
            if (!parse_number(options.target_column, idx) || idx < 0 || idx >= static_cast<double>(width) || idx != std::floor(idx))
                throw ParseError("unknown target column '" + options.target_column + "'");
            target = static_cast<std::ptrdiff_t>(idx);
        }
    }

    Dataset data;
    data.task = options.task;
    const auto N = static_cast<Index>(rows.size());
    const auto D = static_cast<Index>(width) - (target >= 0 ? 1 : 0);
    data.X.resize(N, D);
    data.y.resize(target >= 0 ? N : 0);
    for (std::size_t c = 0; c < width; ++c) {
        if (static_cast<std::ptrdiff_t>(c) == target) continue;
        data.feature_names.push_back(options.has_header ? header[c] : "x" + std::to_string(data.feature_names.size() + 1));
    }

    for (Index n = 0; n < N; ++n) {
        Index d = 0;
        for (std::size_t c = 0; c < width; ++c) {
            if (static_cast<std::ptrdiff_t>(c) == target) continue;
            const auto& cell = rows[n][c];
            double v = 0;
            if (!parse_number(cell, v)) {
                throw ParseError("line " + std::to_string(line_numbers[n]) + ", column " + std::to_string(c + 1) +
                                 (cell.empty() ? ": missing value" : ": non-numeric value '" + cell + "'"));
            }
            data.X(n, d++) = v;
        }
    }
    if (target < 0) return data;

    if (options.task == Task::regression) {
        for (Index n = 0; n < N; ++n) {
            const auto& cell = rows[n][target];
            if (!parse_number(cell, data.y(n)))
                throw ParseError("line " + std::to_string(line_numbers[n]) + ", column " + std::to_string(target + 1) +
                                 ": non-numeric target '" + cell + "'");
        }
        return data;
    }

    // Labels that are all non-negative integers map to themselves; anything
    // else maps to its rank in sorted order.
    bool integral = true;
    int max_label = -1;
    for (Index n = 0; n < N; ++n) {
        double v = 0;
        const auto& cell = rows[n][target];
        if (cell.empty())
            throw ParseError("line " + std::to_string(line_numbers[n]) + ", column " + std::to_string(target + 1) + ": missing label");
        if (!parse_number(cell, v) || v < 0 || v != std::floor(v) || v > 1e6) {
            integral = false;
        } else {
            max_label = std::max(max_label, static_cast<int>(v));
        }
    }
    if (integral) {
        data.n_classes = std::max(2, max_label + 1);
        for (int c = 0; c < data.n_classes; ++c) data.class_names.push_back(std::to_string(c));
        for (Index n = 0; n < N; ++n) {
            double v = 0;
            parse_number(rows[n][target], v);
            data.y(n) = v;
        }
    } else {
        std::map<std::string, int> dictionary;
        for (Index n = 0; n < N; ++n) dictionary.emplace(rows[n][target], 0);
        int next = 0;
        for (auto& [name, index] : dictionary) {
            index = next++;
            data.class_names.push_back(name);
        }
        data.n_classes = std::max(2, next);
        if (next < 2) data.class_names.push_back("<unseen>");
        for (Index n = 0; n < N; ++n) data.y(n) = dictionary.at(rows[n][target]);
    }
    return data;
}

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), options);
}

void save_csv(const Dataset& data, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    for (Index d = 0; d < data.cols(); ++d) {
        out << (static_cast<std::size_t>(d) < data.feature_names.size() ? data.feature_names[d] : "x" + std::to_string(d + 1))
            << ',';
    }
    out << "y\n";
    for (Index n = 0; n < data.rows(); ++n) {
        for (Index d = 0; d < data.cols(); ++d) out << format_double(data.X(n, d)) << ',';
        if (data.task == Task::classification) {
            const auto c = static_cast<std::size_t>(data.y(n));
            out << (c < data.class_names.size() ? data.class_names[c] : std::to_string(c)) << '\n';
        } else {
            out << format_double(data.y(n)) << '\n';
        }
    }
    if (!out) throw Error("write failed: " + path.string());
}

double synthetic2_boundary(double x1) {
    return 0.25 + 0.5 / (1.0 + std::exp(-20.0 * (x1 - 0.5))) + 0.05 * std::cos(2.0 * std::numbers::pi * x1);
}

namespace {

template <typename CleanLabel>
Dataset generate(Index n, double noise, std::uint64_t seed, CleanLabel clean) {
    if (n < 1) throw Error("N must be positive");
    if (!(noise >= 0.0 && noise <= 1.0)) throw Error("noise rate must lie in [0, 1]");
    Rng rng(seed);
    Dataset data;
    data.task = Task::classification;
    data.n_classes = 2;
    data.class_names = {"0", "1"};
    data.feature_names = {"x1", "x2"};
    data.X.resize(n, 2);
    data.y.resize(n);
    for (Index i = 0; i < n; ++i) {
        const double x1 = rng.uniform();
        const double x2 = rng.uniform();
        const bool flip = rng.bernoulli(noise);
        data.X(i, 0) = x1;
        data.X(i, 1) = x2;
        data.y(i) = (clean(x1, x2) != flip) ? 1.0 : 0.0;
    }
    return data;
}

}  // namespace

Dataset gen_synthetic1(Index n, double noise, std::uint64_t seed) {
    return generate(n, noise, seed, [](double x1, double x2) { return (x1 > 0.5) != (x2 > 0.5); });
}

Dataset gen_synthetic2(Index n, double noise, std::uint64_t seed) {
    return generate(n, noise, seed, [](double x1, double x2) { return x2 > synthetic2_boundary(x1); });
}

Dataset take_rows(const Dataset& data, const std::vector<Index>& rows) {
    Dataset out = data;
    out.X.resize(static_cast<Index>(rows.size()), data.cols());
    out.y.resize(data.y.size() == 0 ? 0 : static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.X.row(static_cast<Index>(i)) = data.X.row(rows[i]);
        if (data.y.size() != 0) out.y(static_cast<Index>(i)) = data.y(rows[i]);
    }
    return out;
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& data, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw Error("split fraction must lie in (0, 1)");
    const Index N = data.rows();
    std::vector<Index> order(static_cast<std::size_t>(N));
    std::iota(order.begin(), order.end(), Index{0});
    Rng rng(seed);
    for (Index i = N - 1; i > 0; --i) {
        std::swap(order[static_cast<std::size_t>(i)], order[rng.below(static_cast<std::uint64_t>(i + 1))]);
    }
    const auto n_train = static_cast<std::ptrdiff_t>(std::llround(fraction * static_cast<double>(N)));
    std::vector<Index> train(order.begin(), order.begin() + n_train);
    std::vector<Index> test(order.begin() + n_train, order.end());
    return {take_rows(data, train), take_rows(data, test)};
}

}  // namespace defrag
