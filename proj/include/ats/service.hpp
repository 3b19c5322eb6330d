#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <thread>

#include "ats/error.hpp"
#include "ats/tutor.hpp"
#include "json.hpp"

namespace httplib {
class Server;
}

namespace ats {

// Keys of the service config file. Each can be overridden by an environment
// variable of the same name upper-cased with an ATS_ prefix
// (bind_address -> ATS_BIND_ADDRESS).
struct ServiceConfig {
  std::string bind_address = "127.0.0.1";
  int port = 8080;
  std::string storage_path = ":memory:";
  std::string threshold_path;  // empty: built-in defaults
  std::string catalog_path;    // empty: built-in catalog
  std::string admin_token;     // empty: generated at startup
  int worker_threads = 4;

  static ServiceConfig from_json(const nlohmann::json& doc);
  static ServiceConfig load(const std::filesystem::path& path);
  // getenv is injectable for tests.
  void apply_environment(const std::function<const char*(const char*)>& getenv_fn);
};

enum class Role { Admin, Learner };

struct ApiRequest {
  std::string method;  // "GET" or "POST"
  std::string path;    // without query string
  std::map<std::string, std::string> query;
  std::string bearer_token;
  std::string body;
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;  // always carries "ok"
};

int http_status(ErrorKind kind) noexcept;

// Transport-independent request router over a TutorEngine.
class ApiService {
 public:
  ApiService(std::shared_ptr<TutorEngine> engine, std::shared_ptr<Storage> storage, std::string admin_token);

  ApiResponse handle(const ApiRequest& request);

  const std::string& admin_token() const noexcept { return admin_token_; }
  TutorEngine& engine() noexcept { return *engine_; }

 private:
  struct Caller {
    Role role;
    std::string learner_id;  // empty for admin
  };

  Caller authenticate(const ApiRequest& request) const;
  std::string issue_token(const std::string& learner_id);
  ApiResponse route(const ApiRequest& request);

  std::shared_ptr<TutorEngine> engine_;
  std::shared_ptr<Storage> storage_;
  std::string admin_token_;
  mutable std::shared_mutex tokens_mutex_;
  std::map<std::string, std::string> learner_tokens_;  // token -> learner id
};

// Builds engine, storage and router from a config.
std::shared_ptr<ApiService> make_service(const ServiceConfig& config);

// HTTP front end for an ApiService, running on its own thread.
class HttpServer {
 public:
  HttpServer(std::shared_ptr<ApiService> service, int worker_threads);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Port 0 binds an ephemeral port. Returns the bound port.
  int start(const std::string& address, int port);
  // Blocks until stop() is called from another thread or a signal handler.
  void run(const std::string& address, int port);
  void stop();

 private:
  std::shared_ptr<ApiService> service_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace ats
