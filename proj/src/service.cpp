#include "ats/service.hpp"

#include <cctype>
#include <fstream>
#include <random>
#include <regex>
#include <sstream>

#include "ats/error.hpp"
#include "ats/metrics.hpp"
#include "ats/report.hpp"
#include "httplib.h"
#include "json_util.hpp"

namespace ats {
namespace {

using nlohmann::json;
namespace ju = json_util;

constexpr std::string_view kTokenPrefix = "token/";

std::string random_token() {
  std::random_device rd;
  std::ostringstream out;
  for (int i = 0; i < 4; ++i) {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", rd());
    out << buf;
  }
  return out.str();
}

ApiResponse ok(json body = json::object()) {
  body["ok"] = true;
  return {200, std::move(body)};
}

ApiResponse error_response(ErrorKind kind, const std::string& message, const json& extra = json::object()) {
  json err = {{"code", to_string(kind)}, {"message", message}};
  for (const auto& item : extra.items()) err[item.key()] = item.value();
  return {http_status(kind), {{"ok", false}, {"error", std::move(err)}}};
}

json parse_body(const std::string& body) { return ju::parse(body, "request body"); }

std::vector<int> parse_answers(const json& doc) {
  const auto& arr = ju::require_array(doc, "answers", "body");
  std::vector<int> answers;
  for (const auto& v : arr) {
    if (!v.is_number_integer()) fail(ErrorKind::Malformed, "answers must be integers");
    answers.push_back(v.get<int>());
  }
  return answers;
}

Grouping grouping_from_json(const json& doc) {
  Grouping grouping;
  if (!doc.is_object()) fail(ErrorKind::Malformed, "grouping must be an object of group -> learner ids");
  for (const auto& item : doc.items()) {
    if (!item.value().is_array()) fail(ErrorKind::Malformed, "grouping values must be arrays");
    for (const auto& id : item.value()) {
      if (!id.is_string()) fail(ErrorKind::Malformed, "grouping members must be strings");
      grouping[item.key()].push_back(id.get<std::string>());
    }
  }
  return grouping;
}

}  // namespace

int http_status(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Malformed: return 400;
    case ErrorKind::Unauthorized: return 401;
    case ErrorKind::Forbidden: return 403;
    case ErrorKind::NotFound: return 404;
    case ErrorKind::NoData: return 409;
    case ErrorKind::Invalid: return 422;
    case ErrorKind::Config:
    case ErrorKind::Internal: return 500;
  }
  return 500;
}

// ---------------------------------------------------------------------------

ServiceConfig ServiceConfig::from_json(const json& doc) {
  if (!doc.is_object()) fail(ErrorKind::Config, "service config must be an object");
  ServiceConfig cfg;
  for (const auto& item : doc.items()) {
    const auto& k = item.key();
    const auto& v = item.value();
    auto str = [&] {
      if (!v.is_string()) fail(ErrorKind::Config, "service config: '" + k + "' must be a string");
      return v.get<std::string>();
    };
    auto integer = [&] {
      if (!v.is_number_integer()) fail(ErrorKind::Config, "service config: '" + k + "' must be an integer");
      return v.get<int>();
    };
    if (k == "bind_address") cfg.bind_address = str();
    else if (k == "port") cfg.port = integer();
    else if (k == "storage_path") cfg.storage_path = str();
    else if (k == "threshold_path") cfg.threshold_path = str();
    else if (k == "catalog_path") cfg.catalog_path = str();
    else if (k == "admin_token") cfg.admin_token = str();
    else if (k == "worker_threads") cfg.worker_threads = integer();
    else fail(ErrorKind::Config, "service config: unknown key '" + k + "'");
  }
  return cfg;
}

ServiceConfig ServiceConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Config, "cannot open service config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(ju::parse(buf.str(), path.string(), ErrorKind::Config));
}

void ServiceConfig::apply_environment(const std::function<const char*(const char*)>& getenv_fn) {
  auto text = [&](const char* name, std::string& field) {
    if (const char* v = getenv_fn(name)) field = v;
  };
  auto number = [&](const char* name, int& field) {
    if (const char* v = getenv_fn(name)) {
      try {
        field = std::stoi(v);
      } catch (const std::exception&) {
        fail(ErrorKind::Config, std::string(name) + " must be an integer");
      }
    }
  };
  text("ATS_BIND_ADDRESS", bind_address);
  number("ATS_PORT", port);
  text("ATS_STORAGE_PATH", storage_path);
  text("ATS_THRESHOLD_PATH", threshold_path);
  text("ATS_CATALOG_PATH", catalog_path);
  text("ATS_ADMIN_TOKEN", admin_token);
  number("ATS_WORKER_THREADS", worker_threads);
}

// ---------------------------------------------------------------------------

ApiService::ApiService(std::shared_ptr<TutorEngine> engine, std::shared_ptr<Storage> storage, std::string admin_token)
    : engine_(std::move(engine)), storage_(std::move(storage)), admin_token_(std::move(admin_token)) {
  if (admin_token_.empty()) admin_token_ = random_token();
  for (const auto& k : storage_->keys(kTokenPrefix)) {
    learner_tokens_.emplace(k.substr(kTokenPrefix.size()), *storage_->get(k));
  }
}

ApiService::Caller ApiService::authenticate(const ApiRequest& request) const {
  if (request.bearer_token.empty()) fail(ErrorKind::Unauthorized, "missing bearer token");
  if (request.bearer_token == admin_token_) return {Role::Admin, {}};
  std::shared_lock lock(tokens_mutex_);
  const auto it = learner_tokens_.find(request.bearer_token);
  if (it == learner_tokens_.end()) fail(ErrorKind::Unauthorized, "unknown token");
  return {Role::Learner, it->second};
}

std::string ApiService::issue_token(const std::string& learner_id) {
  std::unique_lock lock(tokens_mutex_);
  for (const auto& [token, id] : learner_tokens_) {
    if (id == learner_id) return token;
  }
  std::string token = random_token();
  storage_->put(std::string(kTokenPrefix) + token, learner_id);
  learner_tokens_.emplace(token, learner_id);
  return token;
}

ApiResponse ApiService::handle(const ApiRequest& request) {
  try {
    return route(request);
  } catch (const FrameError& e) {
    return error_response(e.kind(), e.what(), {{"frame_index", e.frame_index()}});
  } catch (const Error& e) {
    return error_response(e.kind(), e.what());
  } catch (const json::exception& e) {
    return error_response(ErrorKind::Malformed, e.what());
  } catch (const std::exception& e) {
    return error_response(ErrorKind::Internal, e.what());
  }
}

ApiResponse ApiService::route(const ApiRequest& request) {
  static const std::regex kLessonComplete(R"(^/api/lessons/([^/]+)/complete$)");
  static const std::regex kSessionTest(R"(^/api/sessions/([^/]+)/test$)");
  static const std::regex kSessionLessons(R"(^/api/sessions/([^/]+)/lessons$)");
  static const std::regex kReport(R"(^/api/admin/reports/([^/]+)$)");

  const std::string& method = request.method;
  const std::string& path = request.path;
  std::smatch m;

  if (method == "GET" && path == "/api/health") return ok();

  const Caller caller = authenticate(request);
  auto require_admin = [&] {
    if (caller.role != Role::Admin) fail(ErrorKind::Forbidden, "admin role required");
  };
  auto require_learner = [&] {
    if (caller.role != Role::Learner) fail(ErrorKind::Forbidden, "learner role required");
  };

  // --- admin ---------------------------------------------------------------
  if (path.starts_with("/api/admin/")) {
    require_admin();
    if (method == "POST" && path == "/api/admin/courses") {
      const CourseModel course = CourseModel::from_json(parse_body(request.body));
      engine_->define_course(course);
      return ok({{"course_id", course.id}, {"sessions", course.sessions.size()}});
    }
    if (method == "POST" && path == "/api/admin/learners") {
      const json body = parse_body(request.body);
      const std::string learner_id = ju::require_string(body, "learner_id", "body");
      const std::string style_name = ju::require_string(body, "style", "body");
      const auto style = parse_cognitive_style(style_name);
      if (!style) fail(ErrorKind::Malformed, "unknown cognitive style '" + style_name + "'");
      engine_->enroll(learner_id, *style, ju::require_string(body, "course_id", "body"));
      return ok({{"learner_id", learner_id}, {"token", issue_token(learner_id)}});
    }
    if (method == "GET" && std::regex_match(path, m, kReport)) {
      const LearnerRecord record = engine_->record(m[1].str());
      const LearnerReport report = build_learner_report(*engine_->course(record.course_id), record);
      return ok({{"report", to_json(report)}, {"text", render_text(report)}, {"csv", render_csv(report)}});
    }
    if (path == "/api/admin/metrics" && (method == "GET" || method == "POST")) {
      std::string course_id;
      std::optional<Grouping> grouping;
      if (method == "POST") {
        const json body = parse_body(request.body);
        course_id = ju::require_string(body, "course_id", "body");
        if (ju::has(body, "grouping")) grouping = grouping_from_json(body.at("grouping"));
      } else {
        const auto it = request.query.find("course");
        if (it == request.query.end()) fail(ErrorKind::Malformed, "query parameter 'course' is required");
        course_id = it->second;
      }
      const auto course = engine_->course(course_id);
      std::vector<LearnerRecord> records;
      for (auto& r : engine_->records()) {
        if (r.course_id == course_id) records.push_back(std::move(r));
      }
      const CourseMetrics metrics =
          compute_course_metrics(*course, records, grouping ? *grouping : group_by_style(records));
      return ok({{"metrics", to_json(metrics)},
                 {"text", render_metrics_text(metrics)},
                 {"csv", render_metrics_csv(metrics)}});
    }
    fail(ErrorKind::NotFound, "no route for " + method + " " + path);
  }

  // --- learner -------------------------------------------------------------
  if (method == "POST" && path == "/api/clips") {
    require_learner();
    const ClipObservation clip = clip_from_json(parse_body(request.body));
    if (clip.learner_id != caller.learner_id) fail(ErrorKind::Forbidden, "clip belongs to another learner");
    AnalyzerOptions options;
    if (const auto it = request.query.find("mode"); it != request.query.end() && it->second == "lenient") {
      options.mode = FrameMode::Lenient;
    }
    const IngestResult result = engine_->ingest_clip(clip, options);
    return ok({{"clip_id", result.result.clip_id},
               {"clip_state", to_string(result.result.state)},
               {"duplicate", result.duplicate},
               {"warnings", result.result.warnings}});
  }
  if (method == "POST" && std::regex_match(path, m, kLessonComplete)) {
    require_learner();
    const LessonOutcome outcome = engine_->complete_lesson(caller.learner_id, m[1].str());
    return ok({{"lesson_state", to_string(outcome.state)},
               {"message", outcome.message},
               {"supplementary", outcome.recommended_supplementary}});
  }
  if (method == "GET" && path == "/api/sessions") {
    require_learner();
    return ok({{"sessions", engine_->accessible_sessions(caller.learner_id)}});
  }
  if (method == "GET" && std::regex_match(path, m, kSessionLessons)) {
    require_learner();
    json lessons = json::array();
    for (const auto& l : engine_->lessons_for(caller.learner_id, m[1].str())) {
      lessons.push_back({{"id", l.id}, {"title", l.title}, {"content", l.content}, {"supplementary", l.supplementary}});
    }
    return ok({{"session_id", m[1].str()}, {"lessons", std::move(lessons)}});
  }
  if (std::regex_match(path, m, kSessionTest)) {
    require_learner();
    if (method == "GET") {
      return ok({{"session_id", m[1].str()}, {"test", to_public_json(engine_->test_for(caller.learner_id, m[1].str()))}});
    }
    if (method == "POST") {
      const std::vector<int> answers = parse_answers(parse_body(request.body));
      const AttemptResult r = engine_->submit_test_attempt(caller.learner_id, m[1].str(), answers);
      return ok({{"score", r.score},
                 {"passed", r.passed},
                 {"next_session_unlocked", r.next_session_unlocked},
                 {"revealed_supplementary", r.revealed_supplementary}});
    }
  }
  fail(ErrorKind::NotFound, "no route for " + method + " " + path);
}

std::shared_ptr<ApiService> make_service(const ServiceConfig& config) {
  const ThresholdConfig thresholds =
      config.threshold_path.empty() ? ThresholdConfig{} : ThresholdConfig::load(config.threshold_path);
  auto catalog = config.catalog_path.empty()
                     ? std::make_shared<const FeedbackCatalog>(FeedbackCatalog::defaults())
                     : std::make_shared<const FeedbackCatalog>(FeedbackCatalog::load(config.catalog_path));
  auto storage = open_storage(config.storage_path);
  auto engine = std::make_shared<TutorEngine>(storage, thresholds, std::move(catalog));
  return std::make_shared<ApiService>(std::move(engine), std::move(storage), config.admin_token);
}

// ---------------------------------------------------------------------------

HttpServer::HttpServer(std::shared_ptr<ApiService> service, int worker_threads)
    : service_(std::move(service)), server_(std::make_unique<httplib::Server>()) {
  const std::size_t workers = static_cast<std::size_t>(std::max(1, worker_threads));
  server_->new_task_queue = [workers] { return new httplib::ThreadPool(workers); };

  auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
    ApiRequest request;
    request.method = req.method;
    request.path = req.path;
    for (const auto& [k, v] : req.params) request.query.emplace(k, v);
    const std::string auth = req.get_header_value("Authorization");
    if (auth.starts_with("Bearer ")) request.bearer_token = auth.substr(7);
    request.body = req.body;
    const ApiResponse response = service_->handle(request);
    res.status = response.status;
    res.set_content(response.body.dump(), "application/json");
  };
  server_->Get(R"(/api/.*)", dispatch);
  server_->Post(R"(/api/.*)", dispatch);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& address, int port) {
  int bound = port;
  if (port == 0) {
    bound = server_->bind_to_any_port(address);
  } else if (!server_->bind_to_port(address, port)) {
    bound = -1;
  }
  if (bound < 0) fail(ErrorKind::Config, "cannot bind " + address + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

void HttpServer::run(const std::string& address, int port) {
  if (!server_->listen(address, port)) fail(ErrorKind::Config, "cannot listen on " + address + ":" + std::to_string(port));
}

void HttpServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace ats
