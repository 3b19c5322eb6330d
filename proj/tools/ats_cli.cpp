#include <csignal>
#include <cstdlib>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "ats/error.hpp"
#include "ats/metrics.hpp"
#include "ats/replay.hpp"
#include "ats/report.hpp"
#include "ats/service.hpp"
#include "ats/storage.hpp"

namespace {

ats::HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

ats::ThresholdConfig thresholds_from(const std::string& path) {
  return path.empty() ? ats::ThresholdConfig{} : ats::ThresholdConfig::load(path);
}

std::shared_ptr<const ats::FeedbackCatalog> catalog_from(const std::string& path) {
  return std::make_shared<const ats::FeedbackCatalog>(path.empty() ? ats::FeedbackCatalog::defaults()
                                                                   : ats::FeedbackCatalog::load(path));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Affective tutoring system: replay, verification and service tools"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Write synthetic clip streams for learner profiles");
  std::vector<std::string> gen_profiles;
  std::string gen_fixture, gen_out;
  std::optional<std::uint64_t> gen_seed;
  gen->add_option("--profile", gen_profiles, "Learner profile JSON")->required()->check(CLI::ExistingFile);
  gen->add_option("--fixture", gen_fixture, "Course fixture JSON")->required()->check(CLI::ExistingFile);
  gen->add_option("--out", gen_out, "Stream directory")->required();
  gen->add_option("--seed", gen_seed, "Override every profile's seed");

  // replay
  auto* rep = app.add_subcommand("replay", "Drive recorded streams through the tutor and write a report");
  std::string rep_streams, rep_fixture, rep_config, rep_catalog, rep_out, rep_server, rep_token;
  rep->add_option("--streams", rep_streams, "Stream directory")->required();
  rep->add_option("--fixture", rep_fixture, "Course fixture JSON")->required()->check(CLI::ExistingFile);
  rep->add_option("--config", rep_config, "Threshold config JSON")->check(CLI::ExistingFile);
  rep->add_option("--catalog", rep_catalog, "Feedback catalog JSON")->check(CLI::ExistingFile);
  rep->add_option("--server", rep_server, "host:port of a running service (default: in-process)");
  rep->add_option("--admin-token", rep_token, "Admin token for --server");
  rep->add_option("--out", rep_out, "Report directory")->required();

  // verify
  auto* ver = app.add_subcommand("verify", "Compare the implementation against the independent oracles");
  std::size_t ver_trials = 10000;
  std::uint64_t ver_seed = 1;
  std::string ver_config;
  ver->add_option("--trials", ver_trials, "Random aggregator trials")->check(CLI::PositiveNumber);
  ver->add_option("--seed", ver_seed, "Random seed");
  ver->add_option("--config", ver_config, "Threshold config JSON")->check(CLI::ExistingFile);

  // report
  auto* rpt = app.add_subcommand("report", "Analyzer report or course metrics from a store");
  std::string rpt_store, rpt_learner, rpt_course, rpt_format = "text";
  rpt->add_option("--store", rpt_store, "SQLite store path")->required()->check(CLI::ExistingFile);
  auto* learner_opt = rpt->add_option("--learner", rpt_learner, "Learner id");
  auto* course_opt = rpt->add_option("--course", rpt_course, "Course id for the metrics table");
  learner_opt->excludes(course_opt);
  rpt->add_option("--format", rpt_format, "text, csv or json")->check(CLI::IsMember({"text", "csv", "json"}));

  // serve
  auto* srv = app.add_subcommand("serve", "Run the HTTP service");
  std::string srv_config;
  srv->add_option("--config", srv_config, "Service config JSON")->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const auto course = ats::CourseModel::load(gen_fixture);
      for (const auto& path : gen_profiles) {
        auto profile = ats::LearnerProfile::load(path);
        if (gen_seed) profile.seed = *gen_seed;
        const auto clips = ats::generate_synthetic(profile, course);
        ats::write_stream(gen_out, profile, clips);
        std::cout << profile.learner_id << ": " << clips.size() << " clips\n";
      }
    } else if (*rep) {
      const auto course = ats::CourseModel::load(rep_fixture);
      std::unique_ptr<ats::ReplayTarget> target;
      if (rep_server.empty()) {
        target = ats::make_engine_target(thresholds_from(rep_config), catalog_from(rep_catalog));
      } else {
        const auto colon = rep_server.rfind(':');
        if (colon == std::string::npos) throw ats::Error(ats::ErrorKind::Config, "--server must be host:port");
        target = ats::make_http_target(rep_server.substr(0, colon), std::stoi(rep_server.substr(colon + 1)), rep_token);
      }
      const auto report = ats::run_replay(rep_streams, course, *target);
      report.write(rep_out);
      std::cout << report.render_text();
    } else if (*ver) {
      const auto summary = ats::verify_against_oracle(ver_trials, ver_seed, thresholds_from(ver_config));
      std::cout << summary.render();
      return summary.passed() ? 0 : 1;
    } else if (*rpt) {
      auto storage = ats::open_storage(rpt_store);
      ats::TutorEngine engine(storage, ats::ThresholdConfig{},
                              std::make_shared<const ats::FeedbackCatalog>(ats::FeedbackCatalog::defaults()));
      if (!rpt_learner.empty()) {
        const auto record = engine.record(rpt_learner);
        const auto report = ats::build_learner_report(*engine.course(record.course_id), record);
        if (rpt_format == "json") std::cout << ats::to_json(report).dump(2) << '\n';
        else if (rpt_format == "csv") std::cout << ats::render_csv(report);
        else std::cout << ats::render_text(report);
      } else if (!rpt_course.empty()) {
        std::vector<ats::LearnerRecord> records;
        for (auto& r : engine.records()) {
          if (r.course_id == rpt_course) records.push_back(std::move(r));
        }
        const auto metrics =
            ats::compute_course_metrics(*engine.course(rpt_course), records, ats::group_by_style(records));
        if (rpt_format == "json") std::cout << ats::to_json(metrics).dump(2) << '\n';
        else if (rpt_format == "csv") std::cout << ats::render_metrics_csv(metrics);
        else std::cout << ats::render_metrics_text(metrics);
      } else {
        throw ats::Error(ats::ErrorKind::Config, "report needs --learner or --course");
      }
    } else if (*srv) {
      auto config = srv_config.empty() ? ats::ServiceConfig{} : ats::ServiceConfig::load(srv_config);
      config.apply_environment([](const char* name) { return std::getenv(name); });
      auto service = ats::make_service(config);
      ats::HttpServer server(service, config.worker_threads);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cout << "listening on " << config.bind_address << ':' << config.port << '\n';
      if (config.admin_token.empty()) std::cout << "admin token: " << service->admin_token() << '\n';
      std::cout.flush();
      server.run(config.bind_address, config.port);
      g_server = nullptr;
    }
  } catch (const ats::Error& e) {
    std::cerr << "error (" << ats::to_string(e.kind()) << "): " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
