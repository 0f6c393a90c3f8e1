#include "defrag/model_io.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

namespace defrag {

using nlohmann::json;

namespace {

json vector_json(const Eigen::VectorXd& v) {
    return json(std::vector<double>(v.data(), v.data() + v.size()));
}

json matrix_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Index r = 0; r < m.rows(); ++r) {
        std::vector<double> row(static_cast<std::size_t>(m.cols()));
        for (Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
        rows.push_back(row);
    }
    return rows;
}

Eigen::VectorXd vector_from(const json& j, const char* what, Index expected) {
    if (!j.is_array()) throw ParseError(std::string("model: '") + what + "' must be an array");
    const auto v = j.get<std::vector<double>>();
    if (static_cast<Index>(v.size()) != expected) throw ParseError(std::string("model: '") + what + "' has the wrong length");
    return Eigen::Map<const Eigen::VectorXd>(v.data(), expected);
}

Eigen::MatrixXd matrix_from(const json& j, const char* what, Index rows, Index cols) {
    if (!j.is_array() || static_cast<Index>(j.size()) != rows)
        throw ParseError(std::string("model: '") + what + "' must have " + std::to_string(rows) + " rows");
    Eigen::MatrixXd m(rows, cols);
    for (Index r = 0; r < rows; ++r) m.row(r) = vector_from(j[static_cast<std::size_t>(r)], what, cols).transpose();
    return m;
}

}  // namespace

std::string model_to_json_text(const Model& model) {
    json doc;
    doc["task"] = std::string(to_string(model.task));
    doc["K"] = model.regions();
    doc["L"] = model.statements();
    if (model.task == Task::classification) doc["n_classes"] = model.n_classes;
    json statements = json::array();
    for (const auto& st : model.table.statements) statements.push_back({{"feature", st.feature}, {"threshold", st.threshold}});
    doc["statements"] = std::move(statements);
    doc["alpha"] = vector_json(model.alpha);
    doc["eta"] = matrix_json(model.eta);
    if (model.task == Task::regression) {
        doc["phi"] = {{"mu", vector_json(model.mu)}, {"lambda", vector_json(model.lambda)}};
    } else {
        doc["phi"] = {{"gamma", matrix_json(model.gamma)}};
    }
    return doc.dump() + "\n";
}

Model model_from_json_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& ex) {
        throw ParseError(std::string("malformed model document: ") + ex.what());
    }
    try {
        Model m;
        m.task = parse_task(doc.at("task").get<std::string>());
        const auto K = doc.at("K").get<Index>();
        const auto L = doc.at("L").get<Index>();
        if (K < 1 || L < 0) throw ParseError("model: invalid K or L");
        for (const auto& st : doc.at("statements")) {
            m.table.statements.push_back({st.at("feature").get<int>(), st.at("threshold").get<double>()});
        }
        m.table.raw_count = m.table.size();
        if (static_cast<Index>(m.table.size()) != L) throw ParseError("model: statement count does not match L");
        m.alpha = vector_from(doc.at("alpha"), "alpha", K);
        m.eta = matrix_from(doc.at("eta"), "eta", K, L);
        const json& phi = doc.at("phi");
        if (m.task == Task::regression) {
            m.mu = vector_from(phi.at("mu"), "mu", K);
            m.lambda = vector_from(phi.at("lambda"), "lambda", K);
        } else {
            const json& gamma = phi.at("gamma");
            if (!gamma.is_array() || gamma.empty()) throw ParseError("model: 'gamma' must be a non-empty array");
            m.n_classes = doc.contains("n_classes") ? doc["n_classes"].get<int>() : static_cast<int>(gamma[0].size());
            m.gamma = matrix_from(gamma, "gamma", K, m.n_classes);
        }
        m.validate();
        return m;
    } catch (const json::exception& ex) {
        throw ParseError(std::string("model: ") + ex.what());
    } catch (const ParseError&) {
        throw;
    } catch (const Error& ex) {
        throw ParseError(std::string("model: ") + ex.what());
    }
}

void save_model(const Model& model, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << model_to_json_text(model);
    if (!out) throw Error("write failed: " + path.string());
}

Model load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return model_from_json_text(buf.str());
}

}  // namespace defrag
