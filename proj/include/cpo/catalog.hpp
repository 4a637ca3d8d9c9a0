#ifndef CPO_CATALOG_HPP
#define CPO_CATALOG_HPP

#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpo/domain.hpp"

namespace cpo::catalog {

enum class Format { Csv, Json };
Format parse_format(std::string_view s);

inline constexpr const char* kCsvHeader = "provider,name,market,capacity,price_per_slot";

// A row that cannot be tokenized or converted. `line` is 1-based and counts the header.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// A well-formed row whose values break an instance-type invariant. `row` is 1-based
// over data rows (the header is not a row).
class RowError : public ValidationError {
 public:
  RowError(std::size_t row, std::string field, const std::string& what)
      : ValidationError(std::move(field), "row " + std::to_string(row) + ": " + what),
        row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

// Derived id for catalog rows that carry none: "<provider>.<name>.<market>".
std::string type_id(Provider provider, std::string_view name, MarketSpace market);

// Parses and validates every entry; nothing is returned unless all entries are valid.
std::vector<InstanceType> parse_csv(std::string_view text);
std::vector<InstanceType> parse_json(std::string_view text);
std::vector<InstanceType> import_catalog(const std::filesystem::path& path, Format format);

std::string to_csv(std::span<const InstanceType> types);

struct Query {
  std::optional<std::vector<Provider>> providers;
  std::optional<std::vector<MarketSpace>> markets;
  std::optional<double> min_capacity;
  std::optional<double> max_price;
};

// Conjunctive filter ordered by (provider, name, market).
std::vector<InstanceType> filter_catalog(std::span<const InstanceType> types, const Query& query);

}  // namespace cpo::catalog

#endif  // CPO_CATALOG_HPP
