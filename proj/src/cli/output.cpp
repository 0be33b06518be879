#include <fstream>
#include <iterator>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "polyfactor/cli/cli.hpp"
#include "polyfactor/inference/summary.hpp"
#include "polyfactor/models/models.hpp"

namespace polyfactor::cli {

namespace {

std::string lower(std::string s) {
  for (auto& c : s) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return s;
}

}  // namespace

int exit_code_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::parse_error:
    case ErrorCode::schema_error:
    case ErrorCode::config_invalid:
    case ErrorCode::missing_variable:
    case ErrorCode::empty_query:
    case ErrorCode::invalid_argument:
    case ErrorCode::index_out_of_range:
      return kExitInput;
    default:
      return kExitRuntime;
  }
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    fail(ErrorCode::invalid_argument, "SHA-256 digest failed");
  }
  std::string hex;
  hex.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    hex += fmt::format("{:02x}", digest[i]);
  }
  return hex;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    fail(ErrorCode::parse_error, "cannot read '" + path.string() + "'");
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::string> trajectory_columns(const Scope& state, bool with_loglik) {
  std::vector<std::string> columns{"t"};
  const auto order = column_order(state);
  for (const auto& v : order) {
    if (v.is_continuous()) {
      columns.push_back("mean_" + lower(v.name()));
    }
  }
  for (const auto& v : order) {
    if (v.is_continuous()) {
      columns.push_back("var_" + lower(v.name()));
    }
  }
  for (const auto& v : order) {
    for (std::size_t k = 0; k < v.cardinality(); ++k) {
      columns.push_back(fmt::format("p_{}{}", lower(v.name()), k));
    }
  }
  if (with_loglik) {
    columns.emplace_back("loglik_increment");
  }
  return columns;
}

Table trajectory_table(const Scope& state, const std::vector<Factor>& posteriors, const std::vector<double>& loglik) {
  Table table{trajectory_columns(state, !loglik.empty()), {}, 1};
  const auto order = column_order(state);
  for (std::size_t t = 0; t < posteriors.size(); ++t) {
    const PosteriorSummary s = summarize(posteriors[t]);
    std::vector<double> row{static_cast<double>(t + 1)};
    for (const auto& v : order) {
      if (v.is_continuous()) {
        row.push_back(s.mean.at(v.name()));
      }
    }
    for (const auto& v : order) {
      if (v.is_continuous()) {
        row.push_back(s.variance.at(v.name()));
      }
    }
    for (const auto& v : order) {
      if (v.is_discrete()) {
        const auto& p = s.marginal.at(v.name());
        row.insert(row.end(), p.begin(), p.end());
      }
    }
    if (!loglik.empty()) {
      row.push_back(loglik[t]);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string to_csv(const Table& table) {
  std::string out = fmt::format("{}\n", fmt::join(table.columns, ","));
  for (const auto& row : table.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j > 0) {
        out += ',';
      }
      out += j < table.index_columns ? fmt::format("{}", static_cast<long long>(row[j])) : fmt::format("{:.17g}", row[j]);
    }
    out += '\n';
  }
  return out;
}

std::string to_json(const Table& table, std::string_view kind) {
  Json doc;
  doc["format"] = "polyfactor-table";
  doc["version"] = kOutputVersion;
  doc["kind"] = kind;
  doc["columns"] = table.columns;
  Json rows = Json::array();
  for (const auto& row : table.rows) {
    Json r = Json::array();
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j < table.index_columns) {
        r.push_back(static_cast<long long>(row[j]));
      } else {
        r.push_back(row[j]);
      }
    }
    rows.push_back(std::move(r));
  }
  doc["rows"] = std::move(rows);
  return doc.dump(2) + "\n";
}

}  // namespace polyfactor::cli
