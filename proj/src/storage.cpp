#include "ats/storage.hpp"

#include <sqlite3.h>

#include "ats/error.hpp"

namespace ats {

std::optional<std::string> MemoryStorage::get(std::string_view key) {
  std::lock_guard lock(mutex_);
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

void MemoryStorage::put(std::string_view key, std::string_view value) {
  std::lock_guard lock(mutex_);
  values_.insert_or_assign(std::string(key), std::string(value));
}

std::vector<std::string> MemoryStorage::keys(std::string_view prefix) {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (auto it = values_.lower_bound(prefix); it != values_.end() && it->first.starts_with(prefix); ++it) {
    out.push_back(it->first);
  }
  return out;
}

void MemoryStorage::append(std::string_view stream, std::string_view record) {
  std::lock_guard lock(mutex_);
  auto it = streams_.find(stream);
  if (it == streams_.end()) it = streams_.emplace(std::string(stream), std::vector<std::string>{}).first;
  it->second.emplace_back(record);
}

std::vector<std::string> MemoryStorage::read_stream(std::string_view stream) {
  std::lock_guard lock(mutex_);
  const auto it = streams_.find(stream);
  if (it == streams_.end()) return {};
  return it->second;
}

// ---------------------------------------------------------------------------

namespace {

class Statement {
 public:
  Statement(sqlite3* db, const char* sql) : db_(db) {
    if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK) {
      fail(ErrorKind::Internal, std::string("sqlite prepare: ") + sqlite3_errmsg(db));
    }
  }
  ~Statement() { sqlite3_finalize(stmt_); }
  Statement(const Statement&) = delete;
  Statement& operator=(const Statement&) = delete;

  Statement& bind(int index, std::string_view text) {
    sqlite3_bind_text(stmt_, index, text.data(), static_cast<int>(text.size()), SQLITE_TRANSIENT);
    return *this;
  }

  // True while rows remain.
  bool step() {
    const int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    fail(ErrorKind::Internal, std::string("sqlite step: ") + sqlite3_errmsg(db_));
  }

  std::string column_text(int index) const {
    const auto* p = reinterpret_cast<const char*>(sqlite3_column_text(stmt_, index));
    return p == nullptr ? std::string() : std::string(p, static_cast<std::size_t>(sqlite3_column_bytes(stmt_, index)));
  }

 private:
  sqlite3* db_;
  sqlite3_stmt* stmt_ = nullptr;
};

}  // namespace

struct SqliteStorage::Impl {
  sqlite3* db = nullptr;
  std::mutex mutex;

  void exec(const char* sql) {
    char* err = nullptr;
    if (sqlite3_exec(db, sql, nullptr, nullptr, &err) != SQLITE_OK) {
      std::string message = err != nullptr ? err : "unknown error";
      sqlite3_free(err);
      fail(ErrorKind::Internal, "sqlite: " + message);
    }
  }
};

SqliteStorage::SqliteStorage(const std::filesystem::path& path) : impl_(std::make_unique<Impl>()) {
  if (sqlite3_open_v2(path.string().c_str(), &impl_->db, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX,
                      nullptr) != SQLITE_OK) {
    std::string message = impl_->db != nullptr ? sqlite3_errmsg(impl_->db) : "out of memory";
    sqlite3_close(impl_->db);
    fail(ErrorKind::Config, "cannot open store " + path.string() + ": " + message);
  }
  impl_->exec("PRAGMA journal_mode=WAL;");
  impl_->exec("PRAGMA synchronous=FULL;");
  impl_->exec(
      "CREATE TABLE IF NOT EXISTS kv (key TEXT PRIMARY KEY, value TEXT NOT NULL);"
      "CREATE TABLE IF NOT EXISTS log (stream TEXT NOT NULL, seq INTEGER NOT NULL, record TEXT NOT NULL,"
      " PRIMARY KEY (stream, seq));");
}

SqliteStorage::~SqliteStorage() { sqlite3_close(impl_->db); }

std::optional<std::string> SqliteStorage::get(std::string_view key) {
  std::lock_guard lock(impl_->mutex);
  Statement stmt(impl_->db, "SELECT value FROM kv WHERE key = ?1");
  stmt.bind(1, key);
  if (!stmt.step()) return std::nullopt;
  return stmt.column_text(0);
}

void SqliteStorage::put(std::string_view key, std::string_view value) {
  std::lock_guard lock(impl_->mutex);
  Statement stmt(impl_->db, "INSERT INTO kv (key, value) VALUES (?1, ?2) ON CONFLICT(key) DO UPDATE SET value = ?2");
  stmt.bind(1, key).bind(2, value);
  stmt.step();
}

std::vector<std::string> SqliteStorage::keys(std::string_view prefix) {
  std::lock_guard lock(impl_->mutex);
  // substr comparison avoids LIKE wildcards in user-supplied ids
  Statement stmt(impl_->db, "SELECT key FROM kv WHERE substr(key, 1, length(?1)) = ?1 ORDER BY key");
  stmt.bind(1, prefix);
  std::vector<std::string> out;
  while (stmt.step()) out.push_back(stmt.column_text(0));
  return out;
}

void SqliteStorage::append(std::string_view stream, std::string_view record) {
  std::lock_guard lock(impl_->mutex);
  Statement stmt(impl_->db,
                 "INSERT INTO log (stream, seq, record) "
                 "VALUES (?1, (SELECT COALESCE(MAX(seq), 0) + 1 FROM log WHERE stream = ?1), ?2)");
  stmt.bind(1, stream).bind(2, record);
  stmt.step();
}

std::vector<std::string> SqliteStorage::read_stream(std::string_view stream) {
  std::lock_guard lock(impl_->mutex);
  Statement stmt(impl_->db, "SELECT record FROM log WHERE stream = ?1 ORDER BY seq");
  stmt.bind(1, stream);
  std::vector<std::string> out;
  while (stmt.step()) out.push_back(stmt.column_text(0));
  return out;
}

std::shared_ptr<Storage> open_storage(const std::string& path) {
  if (path.empty() || path == ":memory:") return std::make_shared<MemoryStorage>();
  return std::make_shared<SqliteStorage>(path);
}

}  // namespace ats
