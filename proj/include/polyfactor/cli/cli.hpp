#ifndef POLYFACTOR_CLI_CLI_HPP
#define POLYFACTOR_CLI_CLI_HPP

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "polyfactor/core/error.hpp"
#include "polyfactor/inference/model.hpp"

namespace polyfactor::cli {

inline constexpr std::string_view kToolVersion = "1.0.0";
inline constexpr std::string_view kManifestFormat = "polyfactor-run-manifest";
inline constexpr int kManifestVersion = 1;
/// Version of the trajectory CSV/JSON and compare summary layouts.
inline constexpr int kOutputVersion = 1;

using Json = nlohmann::ordered_json;

/// 0 success, 2 input error, 3 inference or runtime error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitRuntime = 3;
[[nodiscard]] int exit_code_for(ErrorCode code) noexcept;

/// Lower-case hex SHA-256.
[[nodiscard]] std::string sha256_hex(std::string_view bytes);
/// ParseError when the file cannot be read.
[[nodiscard]] std::string read_file(const std::filesystem::path& path);

/// Per-step table: t, then mean_<x>..., var_<x>..., p_<d><k>..., optionally loglik_increment.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  /// Leading columns holding whole numbers (step index, discrete states).
  std::size_t index_columns = 1;
};

[[nodiscard]] std::vector<std::string> trajectory_columns(const Scope& state, bool with_loglik);
/// One row per posterior; `loglik` may be empty (smoothing).
[[nodiscard]] Table trajectory_table(const Scope& state, const std::vector<Factor>& posteriors,
                                     const std::vector<double>& loglik);
/// Header line plus rows, 17 significant digits outside the index columns.
[[nodiscard]] std::string to_csv(const Table& table);
/// {"format", "version", "kind", "columns", "rows"}.
[[nodiscard]] std::string to_json(const Table& table, std::string_view kind);

/// A file (or stdout) produced by a command.
struct Output {
  std::string role;
  std::string content;
};

/// Runs a command from its normalized argument object (the form stored in manifests)
/// and returns its outputs, the first being the primary one. Throws FactorError.
[[nodiscard]] std::vector<Output> execute(std::string_view command, const Json& arguments);

/// Full command line without the program name. Returns the exit code; results go to
/// `out` or the files named by --out, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace polyfactor::cli

#endif
