#ifndef CPO_SERVICE_STORE_HPP
#define CPO_SERVICE_STORE_HPP

#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace cpo::service {

// One JSON document per entity at <root>/<collection>/<id>.json. Writes go to a temp
// file that is fsynced and renamed over the target; the in-memory index is rebuilt
// from disk on construction. Concurrent readers, one writer at a time.
class DocumentStore {
 public:
  explicit DocumentStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  std::optional<nlohmann::json> get(const std::string& collection, const std::string& id) const;
  // Documents of a collection ordered by id.
  std::vector<nlohmann::json> list(const std::string& collection) const;

  void put(const std::string& collection, const std::string& id, const nlohmann::json& doc);
  bool remove(const std::string& collection, const std::string& id);

 private:
  std::filesystem::path path_of(const std::string& collection, const std::string& id) const;

  std::filesystem::path root_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::map<std::string, nlohmann::json>> index_;
};

}  // namespace cpo::service

#endif  // CPO_SERVICE_STORE_HPP
