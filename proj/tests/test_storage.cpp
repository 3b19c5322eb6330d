#include <filesystem>
#include <thread>

#include "ats/storage.hpp"
#include "doctest.h"

using namespace ats;

namespace {

void exercise(Storage& s) {
  CHECK_FALSE(s.get("a").has_value());
  s.put("course/x", "1");
  s.put("course/y", "2");
  s.put("learner/z", "3");
  s.put("course/x", "4");
  CHECK(s.get("course/x") == "4");
  CHECK(s.keys("course/") == std::vector<std::string>{"course/x", "course/y"});
  CHECK(s.read_stream("events/q").empty());
  s.append("events/q", "one");
  s.append("events/q", "two");
  s.append("events/r", "three");
  CHECK(s.read_stream("events/q") == std::vector<std::string>{"one", "two"});
}

std::filesystem::path temp_db(const char* name) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove(p);
  std::filesystem::remove(p.string() + "-wal");
  std::filesystem::remove(p.string() + "-shm");
  return p;
}

}  // namespace

TEST_CASE("memory storage") {
  MemoryStorage s;
  exercise(s);
}

TEST_CASE("sqlite storage persists across reopen") {
  const auto path = temp_db("ats_storage_test.db");
  {
    SqliteStorage s(path);
    exercise(s);
  }
  SqliteStorage again(path);
  CHECK(again.get("course/y") == "2");
  CHECK(again.read_stream("events/q") == std::vector<std::string>{"one", "two"});
  again.append("events/q", "four");
  CHECK(again.read_stream("events/q").back() == "four");
  CHECK(again.keys("learner/") == std::vector<std::string>{"learner/z"});
}

TEST_CASE("sqlite storage under concurrent appends") {
  const auto path = temp_db("ats_storage_concurrent.db");
  SqliteStorage s(path);
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&s, t] {
      for (int i = 0; i < 50; ++i) s.append("events/" + std::to_string(t), std::to_string(i));
    });
  }
  for (auto& th : threads) th.join();
  for (int t = 0; t < 4; ++t) {
    const auto records = s.read_stream("events/" + std::to_string(t));
    REQUIRE(records.size() == 50);
    for (int i = 0; i < 50; ++i) CHECK(records[static_cast<std::size_t>(i)] == std::to_string(i));
  }
}

TEST_CASE("open_storage picks the backend") {
  CHECK(dynamic_cast<MemoryStorage*>(open_storage(":memory:").get()) != nullptr);
  CHECK(dynamic_cast<MemoryStorage*>(open_storage("").get()) != nullptr);
  CHECK(dynamic_cast<SqliteStorage*>(open_storage(temp_db("ats_open.db").string()).get()) != nullptr);
}
