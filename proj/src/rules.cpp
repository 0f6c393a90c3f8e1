#include "defrag/rules.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace defrag {

using nlohmann::json;

Rule eta_to_rule(const Model& model, Index k, double tau) {
    if (k < 0 || k >= model.regions()) throw Error("region index out of range");
    if (!(tau > 0.0 && tau <= 0.5)) throw Error("tau must lie in (0, 0.5]");

    std::map<int, Interval> by_feature;
    for (Index l = 0; l < model.statements(); ++l) {
        const auto& st = model.table[static_cast<std::size_t>(l)];
        const double e = model.eta(k, l);
        if (e >= 1.0 - tau) {
            auto& iv = by_feature.try_emplace(st.feature, Interval{st.feature}).first->second;
            iv.lower = std::max(iv.lower, st.threshold);
        } else if (e <= tau) {
            auto& iv = by_feature.try_emplace(st.feature, Interval{st.feature}).first->second;
            iv.upper = std::min(iv.upper, st.threshold);
        }
    }

    Rule rule;
    rule.region = k;
    rule.alpha = model.alpha(k);
    rule.value = region_output(model, k);
    for (const auto& [feature, iv] : by_feature) {
        if (iv.lower >= iv.upper) {
            rule.consistent = false;
            rule.dropped_features.push_back(feature);
            warn("rule for region " + std::to_string(k) + ": contradictory statements on feature " +
                 std::to_string(feature) + " dropped");
            continue;
        }
        rule.intervals.push_back(iv);
    }
    return rule;
}

RuleSet model_to_rules(const Model& model, double tau) {
    RuleSet out;
    out.task = model.task;
    for (Index k = 0; k < model.regions(); ++k) out.rules.push_back(eta_to_rule(model, k, tau));
    return out;
}

bool rule_covers(const Rule& rule, std::span<const double> x) {
    for (const auto& iv : rule.intervals) {
        if (!iv.contains(x[iv.feature])) return false;
    }
    return true;
}

std::vector<int> covering_counts(const RuleSet& rules, const Eigen::MatrixXd& X) {
    std::vector<int> counts(static_cast<std::size_t>(X.rows()), 0);
    std::vector<double> row(static_cast<std::size_t>(X.cols()));
    for (Index n = 0; n < X.rows(); ++n) {
        for (Index d = 0; d < X.cols(); ++d) row[static_cast<std::size_t>(d)] = X(n, d);
        for (const auto& rule : rules.rules) counts[static_cast<std::size_t>(n)] += rule_covers(rule, row) ? 1 : 0;
    }
    return counts;
}

std::vector<Index> rule_coverage(const RuleSet& rules, const Eigen::MatrixXd& X) {
    std::vector<Index> coverage(rules.rules.size(), 0);
    std::vector<double> row(static_cast<std::size_t>(X.cols()));
    for (Index n = 0; n < X.rows(); ++n) {
        for (Index d = 0; d < X.cols(); ++d) row[static_cast<std::size_t>(d)] = X(n, d);
        for (std::size_t r = 0; r < rules.rules.size(); ++r) coverage[r] += rule_covers(rules.rules[r], row) ? 1 : 0;
    }
    return coverage;
}

double overlap_metric(const RuleSet& rules, const Eigen::MatrixXd& X) {
    if (X.rows() == 0) throw Error("overlap metric needs at least one point");
    const auto counts = covering_counts(rules, X);
    double total = 0;
    for (int c : counts) total += c;
    return total / static_cast<double>(X.rows());
}

namespace {

std::string short_number(double v) {
    std::ostringstream out;
    out << std::setprecision(6) << v;
    return out.str();
}

std::string bound_token(double v) {
    if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
    return format_double(v);
}

std::string feature_name(int feature, const std::vector<std::string>& names) {
    if (static_cast<std::size_t>(feature) < names.size()) return names[static_cast<std::size_t>(feature)];
    return "x" + std::to_string(feature + 1);
}

std::string value_text(Task task, double value) {
    return task == Task::classification ? std::to_string(static_cast<long long>(value)) : short_number(value);
}

json bound_json(double v) { return std::isinf(v) ? json(nullptr) : json(v); }

double bound_from(const json& j, double infinite) {
    if (j.is_null()) return infinite;
    if (!j.is_number()) throw ParseError("rules: interval bound must be a number or null");
    return j.get<double>();
}

}  // namespace

std::string format_rules(const RuleSet& rules, RuleStyle style, const std::vector<std::string>& feature_names) {
    std::ostringstream out;
    switch (style) {
        case RuleStyle::text:
            for (const auto& rule : rules.rules) {
                out << "y = " << value_text(rules.task, rule.value) << " ⇐ ";
                if (rule.unconstrained()) {
                    out << "(always)";
                } else {
                    bool first = true;
                    for (const auto& iv : rule.intervals) {
                        const auto name = feature_name(iv.feature, feature_names);
                        if (!std::isinf(iv.lower)) {
                            out << (first ? "" : ", ") << name << " > " << short_number(iv.lower);
                            first = false;
                        }
                        if (!std::isinf(iv.upper)) {
                            out << (first ? "" : ", ") << name << " ≤ " << short_number(iv.upper);
                            first = false;
                        }
                    }
                }
                out << '\n';
            }
            break;
        case RuleStyle::csv:
            out << "region,y,alpha,intervals\n";
            for (const auto& rule : rules.rules) {
                out << rule.region << ',' << format_double(rule.value) << ',' << format_double(rule.alpha) << ',';
                for (std::size_t i = 0; i < rule.intervals.size(); ++i) {
                    const auto& iv = rule.intervals[i];
                    out << (i ? " " : "") << iv.feature << ':' << bound_token(iv.lower) << "<..<=" << bound_token(iv.upper);
                }
                out << '\n';
            }
            break;
        case RuleStyle::structured: {
            json doc;
            doc["task"] = std::string(to_string(rules.task));
            json list = json::array();
            for (const auto& rule : rules.rules) {
                json intervals = json::array();
                for (const auto& iv : rule.intervals) {
                    intervals.push_back({{"feature", iv.feature}, {"lower", bound_json(iv.lower)}, {"upper", bound_json(iv.upper)}});
                }
                list.push_back({{"region", rule.region}, {"y", rule.value}, {"alpha", rule.alpha}, {"intervals", std::move(intervals)}});
            }
            doc["rules"] = std::move(list);
            out << doc.dump() << '\n';
            break;
        }
    }
    return out.str();
}

RuleSet rules_from_json_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& ex) {
        throw ParseError(std::string("malformed rule document: ") + ex.what());
    }
    try {
        RuleSet out;
        out.task = parse_task(doc.at("task").get<std::string>());
        Index next_region = 0;
        for (const auto& jr : doc.at("rules")) {
            Rule rule;
            rule.region = jr.contains("region") ? jr["region"].get<Index>() : next_region;
            ++next_region;
            rule.value = jr.at("y").get<double>();
            rule.alpha = jr.at("alpha").get<double>();
            constexpr double inf = std::numeric_limits<double>::infinity();
            for (const auto& ji : jr.at("intervals")) {
                Interval iv{ji.at("feature").get<int>(), bound_from(ji.at("lower"), -inf), bound_from(ji.at("upper"), inf)};
                if (iv.feature < 0) throw ParseError("rules: negative feature index");
                if (!(iv.lower < iv.upper)) throw ParseError("rules: empty interval on feature " + std::to_string(iv.feature));
                rule.intervals.push_back(iv);
            }
            out.rules.push_back(std::move(rule));
        }
        return out;
    } catch (const json::exception& ex) {
        throw ParseError(std::string("rules: ") + ex.what());
    }
}

void save_rules(const RuleSet& rules, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << format_rules(rules, RuleStyle::structured);
    if (!out) throw Error("write failed: " + path.string());
}

RuleSet load_rules(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return rules_from_json_text(buf.str());
}

}  // namespace defrag
