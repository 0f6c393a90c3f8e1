#include "defrag/compare.hpp"

#include <algorithm>
#include <sstream>

namespace defrag {

double CompareReport::em_total_seconds() const {
    double total = 0;
    for (const auto& row : rows) {
        if (row.method == "EM") total += row.wall_seconds;
    }
    return total;
}

const CompareRow& CompareReport::best_em_by_test() const {
    const CompareRow* best = nullptr;
    for (const auto& row : rows) {
        if (row.method == "EM" && (best == nullptr || row.test_error < best->test_error)) best = &row;
    }
    if (best == nullptr) throw Error("comparison report has no EM rows");
    return *best;
}

std::string CompareReport::to_csv() const {
    std::ostringstream out;
    out << "method,K,train_error,test_error,wall_seconds,restarts,seed\n";
    for (const auto& row : rows) {
        out << row.method << ',' << row.regions << ',' << format_double(row.train_error) << ','
            << format_double(row.test_error) << ',' << format_double(row.wall_seconds) << ',' << row.restarts << ','
            << row.seed << '\n';
    }
    return out.str();
}

}  // namespace defrag
