#ifndef POLYFACTOR_MODELS_MODEL_FILE_HPP
#define POLYFACTOR_MODELS_MODEL_FILE_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "polyfactor/inference/model.hpp"
#include "polyfactor/models/models.hpp"

namespace polyfactor {

inline constexpr std::string_view kModelFormat = "polyfactor-model";
inline constexpr int kModelFormatVersion = 1;

/// A parsed model document. `quadrant` is set when the document used the compact
/// quadrant section, so callers can pick up its horizon and seed.
struct ModelDocument {
  std::variant<FactorGraphModel, StateSpaceModel> model;
  std::optional<QuadrantConfig> quadrant;

  [[nodiscard]] bool is_state_space() const noexcept { return model.index() == 1; }
  [[nodiscard]] const StateSpaceModel& state_space() const;
  [[nodiscard]] const FactorGraphModel& factor_graph() const;
};

/// Parses a JSON model document (schema in docs/model_format.md).
/// ParseError carries line and column; SchemaError names the offending field as a JSON pointer.
[[nodiscard]] ModelDocument parse_model(std::string_view text);
/// Reads and parses a file; ParseError when it cannot be read.
[[nodiscard]] ModelDocument load_model(const std::filesystem::path& path);

/// Expanded form listing every factor explicitly. Unsupported for sample factors.
[[nodiscard]] std::string serialize_model(const FactorGraphModel& model);
[[nodiscard]] std::string serialize_model(const StateSpaceModel& model);
[[nodiscard]] std::string serialize_model(const ModelDocument& doc);

}  // namespace polyfactor

#endif
