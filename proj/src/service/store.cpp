#include "cpo/service/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <fstream>
#include <mutex>
#include <sstream>
#include <system_error>

namespace cpo::service {

namespace fs = std::filesystem;

namespace {

bool valid_name(const std::string& s) {
  if (s.empty() || s.size() > 128) return false;
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

void check_name(const std::string& s) {
  if (!valid_name(s)) throw std::invalid_argument("invalid document name '" + s + "'");
}

[[noreturn]] void fail(const std::string& what, const fs::path& p) {
  throw std::system_error(errno, std::generic_category(), what + " '" + p.string() + "'");
}

void write_durably(const fs::path& target, const std::string& data) {
  const fs::path tmp = target.parent_path() / ("." + target.filename().string() + ".tmp");
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) fail("cannot create", tmp);
  std::size_t done = 0;
  while (done < data.size()) {
    const ssize_t n = ::write(fd, data.data() + done, data.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      fail("cannot write", tmp);
    }
    done += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0) {
    ::close(fd);
    fail("cannot sync", tmp);
  }
  ::close(fd);
  if (::rename(tmp.c_str(), target.c_str()) != 0) fail("cannot rename onto", target);
  const int dir = ::open(target.parent_path().c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
  if (dir >= 0) {
    ::fsync(dir);
    ::close(dir);
  }
}

}  // namespace

DocumentStore::DocumentStore(fs::path root) : root_(std::move(root)) {
  fs::create_directories(root_);
  for (const auto& dir : fs::directory_iterator(root_)) {
    if (!dir.is_directory()) continue;
    const std::string collection = dir.path().filename().string();
    if (!valid_name(collection)) continue;
    auto& docs = index_[collection];
    for (const auto& file : fs::directory_iterator(dir.path())) {
      const auto name = file.path().filename().string();
      if (name.starts_with(".") && name.ends_with(".tmp")) {
        fs::remove(file.path());  // interrupted write; the target is intact
        continue;
      }
      if (file.path().extension() != ".json") continue;
      std::ifstream in(file.path(), std::ios::binary);
      if (!in) fail("cannot read", file.path());
      try {
        docs[file.path().stem().string()] = nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("corrupt document '" + file.path().string() + "': " + e.what());
      }
    }
  }
}

fs::path DocumentStore::path_of(const std::string& collection, const std::string& id) const {
  return root_ / collection / (id + ".json");
}

std::optional<nlohmann::json> DocumentStore::get(const std::string& collection,
                                                 const std::string& id) const {
  std::shared_lock lock(mutex_);
  const auto c = index_.find(collection);
  if (c == index_.end()) return std::nullopt;
  const auto d = c->second.find(id);
  if (d == c->second.end()) return std::nullopt;
  return std::optional<nlohmann::json>(std::in_place, d->second);
}

std::vector<nlohmann::json> DocumentStore::list(const std::string& collection) const {
  std::shared_lock lock(mutex_);
  std::vector<nlohmann::json> out;
  const auto c = index_.find(collection);
  if (c == index_.end()) return out;
  out.reserve(c->second.size());
  for (const auto& [id, doc] : c->second) out.push_back(doc);
  return out;
}

void DocumentStore::put(const std::string& collection, const std::string& id,
                        const nlohmann::json& doc) {
  check_name(collection);
  check_name(id);
  std::unique_lock lock(mutex_);
  fs::create_directories(root_ / collection);
  write_durably(path_of(collection, id), doc.dump(2) + "\n");
  index_[collection][id] = doc;
}

bool DocumentStore::remove(const std::string& collection, const std::string& id) {
  check_name(collection);
  check_name(id);
  std::unique_lock lock(mutex_);
  auto c = index_.find(collection);
  if (c == index_.end() || c->second.erase(id) == 0) return false;
  std::error_code ec;
  fs::remove(path_of(collection, id), ec);
  if (ec) throw std::system_error(ec, "cannot remove '" + path_of(collection, id).string() + "'");
  return true;
}

}  // namespace cpo::service
