#include "cpo/catalog.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>
#include <tuple>

namespace cpo::catalog {

Format parse_format(std::string_view s) {
  if (s == "csv") return Format::Csv;
  if (s == "json") return Format::Json;
  throw ValidationError("format", "unknown catalog format '" + std::string(s) + "'");
}

std::string type_id(Provider provider, std::string_view name, MarketSpace market) {
  std::string id(to_string(provider));
  id += '.';
  id += name;
  id += '.';
  id += to_string(market);
  return id;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    out.push_back(trim(line.substr(pos, comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

double parse_number(std::string_view s, std::size_t line, const char* field) {
  const std::string copy(s);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(copy.c_str(), &end);
  if (copy.empty() || end != copy.c_str() + copy.size() || errno == ERANGE)
    throw ParseError(line, std::string(field) + " is not a number: '" + copy + "'");
  return v;
}

void validate_row(const InstanceType& t, std::size_t row) {
  if (t.name.empty()) throw RowError(row, "name", "name must not be empty");
  try {
    t.validate();
  } catch (const ValidationError& e) {
    throw RowError(row, e.field(), e.what());
  }
}

void check_unique(const std::vector<InstanceType>& types) {
  std::set<std::string> seen;
  for (std::size_t i = 0; i < types.size(); ++i) {
    if (!seen.insert(types[i].id).second)
      throw RowError(i + 1, "name", "duplicate instance type '" + types[i].id + "'");
  }
}

}  // namespace

std::vector<InstanceType> parse_csv(std::string_view text) {
  std::vector<InstanceType> types;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::size_t row = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kCsvHeader)
        throw ParseError(line_no, std::string("expected header '") + kCsvHeader + "'");
      header_seen = true;
      continue;
    }
    const auto cells = split(line);
    if (cells.size() != 5)
      throw ParseError(line_no, "expected 5 columns, found " + std::to_string(cells.size()));
    ++row;
    InstanceType t;
    try {
      t.provider = parse_provider(cells[0]);
      t.market = parse_market(cells[2]);
    } catch (const std::exception& e) {
      throw ParseError(line_no, e.what());
    }
    t.name = std::string(cells[1]);
    t.capacity = parse_number(cells[3], line_no, "capacity");
    t.price_per_slot = parse_number(cells[4], line_no, "price_per_slot");
    t.spot_only = t.market == MarketSpace::Spot;
    t.id = type_id(t.provider, t.name, t.market);
    validate_row(t, row);
    types.push_back(std::move(t));
  }
  if (!header_seen) throw ParseError(1, std::string("missing header '") + kCsvHeader + "'");
  check_unique(types);
  return types;
}

std::vector<InstanceType> parse_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // byte offset -> line number
    const std::size_t offset = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + static_cast<std::size_t>(
                              std::count(text.begin(), text.begin() + offset, '\n'));
    throw ParseError(line, e.what());
  }
  if (!doc.is_array()) throw ParseError(1, "expected a JSON array of instance types");
  std::vector<InstanceType> types;
  types.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& e = doc[i];
    InstanceType t;
    try {
      t = e.get<InstanceType>();
    } catch (const ValidationError& ex) {
      throw RowError(i + 1, ex.field(), ex.what());
    } catch (const std::exception& ex) {
      throw RowError(i + 1, "entry", ex.what());
    }
    if (t.id.empty()) t.id = type_id(t.provider, t.name, t.market);
    validate_row(t, i + 1);
    types.push_back(std::move(t));
  }
  check_unique(types);
  return types;
}

std::vector<InstanceType> import_catalog(const std::filesystem::path& path, Format format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::system_error(errno ? errno : ENOENT, std::generic_category(),
                            "cannot open catalog '" + path.string() + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  return format == Format::Csv ? parse_csv(text) : parse_json(text);
}

std::string to_csv(std::span<const InstanceType> types) {
  std::ostringstream out;
  out.precision(12);
  out << kCsvHeader << '\n';
  for (const auto& t : types) {
    out << to_string(t.provider) << ',' << t.name << ',' << to_string(t.market) << ','
        << t.capacity << ',' << t.price_per_slot << '\n';
  }
  return out.str();
}

std::vector<InstanceType> filter_catalog(std::span<const InstanceType> types,
                                         const Query& query) {
  auto keep = [&](const InstanceType& t) {
    if (query.providers &&
        std::find(query.providers->begin(), query.providers->end(), t.provider) ==
            query.providers->end())
      return false;
    if (query.markets &&
        std::find(query.markets->begin(), query.markets->end(), t.market) ==
            query.markets->end())
      return false;
    if (query.min_capacity && t.capacity < *query.min_capacity) return false;
    if (query.max_price && t.price_per_slot > *query.max_price) return false;
    return true;
  };
  std::vector<InstanceType> out;
  std::copy_if(types.begin(), types.end(), std::back_inserter(out), keep);
  std::stable_sort(out.begin(), out.end(), [](const InstanceType& a, const InstanceType& b) {
    return std::tie(a.provider, a.name, a.market, a.id) <
           std::tie(b.provider, b.name, b.market, b.id);
  });
  return out;
}

}  // namespace cpo::catalog
