#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ats {

// Key-value records plus append-only record streams. Implementations are
// safe for concurrent use.
class Storage {
 public:
  virtual ~Storage() = default;

  virtual std::optional<std::string> get(std::string_view key) = 0;
  virtual void put(std::string_view key, std::string_view value) = 0;
  // Keys starting with prefix, sorted.
  virtual std::vector<std::string> keys(std::string_view prefix) = 0;

  virtual void append(std::string_view stream, std::string_view record) = 0;
  // Records in append order; empty for an unknown stream.
  virtual std::vector<std::string> read_stream(std::string_view stream) = 0;
};

class MemoryStorage final : public Storage {
 public:
  std::optional<std::string> get(std::string_view key) override;
  void put(std::string_view key, std::string_view value) override;
  std::vector<std::string> keys(std::string_view prefix) override;
  void append(std::string_view stream, std::string_view record) override;
  std::vector<std::string> read_stream(std::string_view stream) override;

 private:
  std::mutex mutex_;
  std::map<std::string, std::string, std::less<>> values_;
  std::map<std::string, std::vector<std::string>, std::less<>> streams_;
};

// Single-file embedded store backed by SQLite. Writes are committed before
// the call returns.
class SqliteStorage final : public Storage {
 public:
  explicit SqliteStorage(const std::filesystem::path& path);
  ~SqliteStorage() override;
  SqliteStorage(const SqliteStorage&) = delete;
  SqliteStorage& operator=(const SqliteStorage&) = delete;

  std::optional<std::string> get(std::string_view key) override;
  void put(std::string_view key, std::string_view value) override;
  std::vector<std::string> keys(std::string_view prefix) override;
  void append(std::string_view stream, std::string_view record) override;
  std::vector<std::string> read_stream(std::string_view stream) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// ":memory:" or an empty path yields a MemoryStorage.
std::shared_ptr<Storage> open_storage(const std::string& path);

}  // namespace ats
