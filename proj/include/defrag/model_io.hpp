#pragma once

#include "defrag/model.hpp"

#include <filesystem>
#include <string>

namespace defrag {

using Model = SimplifiedModel<double>;

// JSON model file; every double is written in shortest round-trip form.
std::string model_to_json_text(const Model& model);
Model model_from_json_text(const std::string& text);

void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace defrag
