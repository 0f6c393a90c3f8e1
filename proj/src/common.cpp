#include "defrag/common.hpp"

#include <charconv>
#include <iostream>
#include <mutex>

namespace defrag {

std::string_view to_string(Task task) {
    return task == Task::regression ? "regression" : "classification";
}

Task parse_task(std::string_view name) {
    if (name == "regression") return Task::regression;
    if (name == "classification") return Task::classification;
    throw ParseError("unknown task '" + std::string(name) + "'");
}

namespace {

std::mutex& sink_mutex() {
    static std::mutex m;
    return m;
}

WarningSink& sink() {
    static WarningSink s = [](std::string_view msg) { std::cerr << "warning: " << msg << '\n'; };
    return s;
}

}  // namespace

void set_warning_sink(WarningSink s) {
    std::lock_guard lock(sink_mutex());
    sink() = std::move(s);
}

void warn(std::string_view message) {
    std::lock_guard lock(sink_mutex());
    if (sink()) sink()(message);
}

std::string format_double(double value) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc()) throw Error("cannot format double");
    return std::string(buf, end);
}

}  // namespace defrag
