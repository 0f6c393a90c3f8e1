#include "defrag/plot.hpp"

#include <algorithm>
#include <array>
#include <sstream>

namespace defrag {

namespace {

constexpr double kSize = 480.0;
constexpr double kMargin = 20.0;
constexpr std::array<const char*, 6> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

class Canvas {
public:
    explicit Canvas(const Box& domain) : domain_(domain) {
        const double side = kSize + 2 * kMargin;
        out_ << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
             << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << side << "\" height=\"" << side
             << "\" viewBox=\"0 0 " << side << ' ' << side << "\">\n"
             << "<rect class=\"frame\" x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << kSize
             << "\" height=\"" << kSize << "\" fill=\"white\" stroke=\"black\"/>\n";
    }

    double px(double x) const { return kMargin + (x - domain_.x0) / (domain_.x1 - domain_.x0) * kSize; }
    double py(double y) const { return kMargin + (domain_.y1 - y) / (domain_.y1 - domain_.y0) * kSize; }

    void points(const Dataset& data) {
        out_ << "<g class=\"points\">\n";
        double lo = 0, hi = 1;
        if (data.task == Task::regression && data.y.size() > 0) {
            lo = data.y.minCoeff();
            hi = data.y.maxCoeff();
        }
        for (Index n = 0; n < data.rows(); ++n) {
            const double x = data.X(n, 0), y = data.X(n, 1);
            if (x < domain_.x0 || x > domain_.x1 || y < domain_.y0 || y > domain_.y1) continue;
            std::string color = "#444444";
            if (data.y.size() > 0) {
                if (data.task == Task::classification) {
                    color = kPalette[static_cast<std::size_t>(data.y(n)) % kPalette.size()];
                } else {
                    const int level = hi > lo ? static_cast<int>(255 * (data.y(n) - lo) / (hi - lo)) : 128;
                    std::ostringstream c;
                    c << "rgb(" << level << ",0," << 255 - level << ')';
                    color = c.str();
                }
            }
            out_ << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"2\" fill=\"" << color << "\"/>\n";
        }
        out_ << "</g>\n";
    }

    void box(const Box& b, const char* cls, const char* stroke, const std::string& label = {}) {
        out_ << "<rect class=\"" << cls << "\" x=\"" << px(b.x0) << "\" y=\"" << py(b.y1) << "\" width=\""
             << px(b.x1) - px(b.x0) << "\" height=\"" << py(b.y0) - py(b.y1) << "\" fill=\"none\" stroke=\"" << stroke
             << "\" stroke-width=\"2\" data-x0=\"" << format_double(b.x0) << "\" data-x1=\"" << format_double(b.x1)
             << "\" data-y0=\"" << format_double(b.y0) << "\" data-y1=\"" << format_double(b.y1) << '"';
        if (label.empty()) {
            out_ << "/>\n";
        } else {
            out_ << "><title>" << label << "</title></rect>\n";
        }
    }

    std::string finish() {
        out_ << "</svg>\n";
        return out_.str();
    }

private:
    Box domain_;
    std::ostringstream out_;
};

void require_2d(const Dataset& data) {
    if (data.cols() != 2) throw Error("plot2d needs exactly two features, got " + std::to_string(data.cols()));
}

std::optional<Box> clip(double x0, double x1, double y0, double y1, const Box& domain) {
    Box b{std::max(x0, domain.x0), std::min(x1, domain.x1), std::max(y0, domain.y0), std::min(y1, domain.y1)};
    if (!(b.x0 < b.x1) || !(b.y0 < b.y1)) return std::nullopt;
    return b;
}

}  // namespace

std::optional<Box> rule_box(const Rule& rule, const Box& domain) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    double x0 = -inf, x1 = inf, y0 = -inf, y1 = inf;
    for (const auto& iv : rule.intervals) {
        if (iv.feature == 0) {
            x0 = iv.lower;
            x1 = iv.upper;
        } else if (iv.feature == 1) {
            y0 = iv.lower;
            y1 = iv.upper;
        } else {
            throw Error("rule constrains feature " + std::to_string(iv.feature) + " in a 2-D plot");
        }
    }
    return clip(x0, x1, y0, y1, domain);
}

std::string plot_rules_svg(const Dataset& data, const RuleSet& rules, const Box& domain) {
    require_2d(data);
    Canvas canvas(domain);
    canvas.points(data);
    for (const auto& rule : rules.rules) {
        const auto b = rule_box(rule, domain);
        if (!b) continue;
        const auto color = rules.task == Task::classification
                               ? kPalette[static_cast<std::size_t>(rule.value) % kPalette.size()]
                               : "#000000";
        canvas.box(*b, "rule", color, "y = " + format_double(rule.value));
    }
    return canvas.finish();
}

std::string plot_ensemble_svg(const Dataset& data, const TreeEnsemble& ensemble, int max_trees, const Box& domain) {
    require_2d(data);
    if (ensemble.n_features != 2) throw Error("plot2d needs a two-feature ensemble");
    Canvas canvas(domain);
    canvas.points(data);
    const auto T = std::min<std::size_t>(static_cast<std::size_t>(std::max(0, max_trees)), ensemble.trees.size());
    constexpr double inf = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < T; ++t) {
        const auto& tree = ensemble.trees[t].tree;
        for (NodeId leaf : tree.leaves()) {
            double x0 = -inf, x1 = inf, y0 = -inf, y1 = inf;
            for (const auto& st : leaf_region(tree, leaf)) {
                double& lo = st.feature == 0 ? x0 : y0;
                double& hi = st.feature == 0 ? x1 : y1;
                if (st.side == Side::greater) {
                    lo = std::max(lo, st.threshold);
                } else {
                    hi = std::min(hi, st.threshold);
                }
            }
            if (const auto b = clip(x0, x1, y0, y1, domain)) canvas.box(*b, "cell", "#888888");
        }
    }
    return canvas.finish();
}

}  // namespace defrag
