// airsteward: serve, repl and batch commands over the core library.

#include <csignal>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "airsteward/codec.hpp"
#include "airsteward/config.hpp"
#include "airsteward/corpus.hpp"
#include "airsteward/http_server.hpp"
#include "airsteward/planner.hpp"
#include "airsteward/profile.hpp"
#include "airsteward/service.hpp"
#include "airsteward/sim.hpp"
#include "airsteward/stream_parser.hpp"

using namespace airsteward;
using nlohmann::json;

namespace {

service::HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

std::shared_ptr<extract::BackendAdapter> make_backend(const Config& cfg, bool disabled) {
  if (disabled || cfg.backend.url.empty()) return nullptr;
  return std::make_shared<extract::HttpBackendAdapter>(cfg.backend);
}

void write_text(const std::optional<std::string>& path, const std::string& text) {
  if (!path || *path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(*path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", *path));
  out << text;
}

int run_serve(const Config& cfg, bool no_backend, int port, const std::string& host,
              const std::optional<std::string>& ui, const std::optional<std::string>& store) {
  service::ServiceOptions opts;
  opts.config = cfg;
  opts.extraction_backend = make_backend(cfg, no_backend);
  opts.planning_backend = opts.extraction_backend;
  if (store) opts.store_dir = *store;
  service::Service svc(std::move(opts));
  service::ServerOptions so;
  so.host = host;
  so.port = port;
  if (ui) so.ui_dir = *ui;
  service::HttpServer server(svc, so);
  const int bound = server.bind();
  std::cout << fmt::format("listening on http://{}:{}", host, bound) << std::endl;
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  server.listen();
  g_server = nullptr;
  return 0;
}

void print_help() {
  std::cout << "Type what you would say to the air system. Commands:\n"
               "  :plan            stream a plan for the current state\n"
               "  :advance <min>   step the simulator\n"
               "  :perturb k=v ... add deltas to indoor readings (co2=500 hcho=0.1)\n"
               "  :state           show the simulator state\n"
               "  :profile         show the household profile\n"
               "  :quit\n";
}

int run_repl(const Config& cfg, bool no_backend, const std::optional<std::string>& scenario,
             const std::optional<std::string>& store) {
  service::ServiceOptions opts;
  opts.config = cfg;
  opts.extraction_backend = make_backend(cfg, no_backend);
  opts.planning_backend = opts.extraction_backend;
  if (store) opts.store_dir = *store;
  service::Service svc(std::move(opts));
  json body = json::object();
  if (scenario) body["scenario"] = planner::to_json(planner::load_scenario(*scenario));
  const std::string id = svc.create_session(body)["session"];
  print_help();
  std::string line;
  while (std::cout << "> " << std::flush, std::getline(std::cin, line)) {
    try {
      if (line.empty()) continue;
      if (line == ":quit" || line == ":q") break;
      if (line == ":help") {
        print_help();
      } else if (line == ":plan") {
        svc.request_plan(id, [](std::string_view event, const json& data) {
          if (event == "delta") {
            std::cout << data.get<std::string>() << std::flush;
          } else if (event == "done") {
            std::cout << "\n";
          } else {
            std::cout << "\n[" << event << "] " << data.dump() << "\n";
          }
        });
      } else if (line.rfind(":advance", 0) == 0) {
        std::istringstream in(line.substr(8));
        double minutes = cfg.sim.dt_minutes;
        in >> minutes;
        std::cout << svc.advance(id, minutes).dump(2) << "\n";
      } else if (line.rfind(":perturb", 0) == 0) {
        std::istringstream in(line.substr(8));
        std::map<std::string, double> deltas;
        std::string kv;
        while (in >> kv) {
          const auto eq = kv.find('=');
          if (eq == std::string::npos) throw std::invalid_argument(fmt::format("expected name=value, got '{}'", kv));
          deltas[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
        }
        std::cout << svc.perturb(id, deltas).dump(2) << "\n";
      } else if (line == ":state") {
        std::cout << svc.state(id).dump(2) << "\n";
      } else if (line == ":profile") {
        std::cout << svc.profile(id).dump(2) << "\n";
      } else if (line[0] == ':') {
        std::cout << "unknown command; :help lists them\n";
      } else {
        const auto r = svc.handle_utterance(id, line);
        std::cout << fmt::format("[{}] {}\n", r["provenance"].get<std::string>(), r["records"].dump());
        if (!r["diagnostic"].get<std::string>().empty()) std::cout << "  " << r["diagnostic"].get<std::string>() << "\n";
      }
    } catch (const std::exception& e) {
      std::cout << "error: " << e.what() << "\n";
    }
  }
  return 0;
}

int run_eval(const Config& cfg, bool no_backend, const std::string& corpus, const std::string& candidate,
             const std::optional<std::string>& report, bool include_cases) {
  const auto kb = cfg.knowledge_base();
  const auto cases = eval::load_corpus(corpus);
  std::unique_ptr<eval::CandidateSource> source;
  if (candidate == "planner") {
    source = std::make_unique<eval::PlannerSource>(kb);
  } else if (candidate == "backend") {
    auto backend = make_backend(cfg, no_backend);
    if (!backend) throw std::invalid_argument("candidate 'backend' needs a backend url");
    source = std::make_unique<eval::BackendSource>(backend, cfg.segmentation);
  } else {
    source = std::make_unique<eval::FileSource>(candidate);
  }
  const auto r = eval::run_corpus(cases, *source, kb, cfg.pass_policy);
  std::cout << fmt::format("{} cases, {} passed ({:.1f}%), mean score {:.2f}\n", r.cases, r.passed,
                           100.0 * r.pass_rate, r.mean_total);
  std::cout << eval::render_table(r);
  if (report) write_text(report, eval::to_json(r, include_cases).dump(2) + "\n");
  return 0;
}

int run_sim(const Config& cfg, const std::string& scenario, double horizon, std::optional<double> replan,
            const std::optional<std::string>& out) {
  const auto sc = planner::load_scenario(scenario);
  const auto traj = sim::run_episode(sc, cfg.knowledge_base(), cfg.sim, horizon,
                                     replan.value_or(cfg.replan_every_minutes));
  write_text(out, sim::trajectory_jsonl(traj));
  if (out && *out != "-") {
    const auto& last = traj.steps.back();
    std::cerr << fmt::format("{} steps, {} plans; final hcho {} mg/m³, co2 {} ppm\n", traj.steps.size(),
                             traj.plans.size(), planner::format_number(last.indoor.hcho_mg_m3),
                             planner::format_number(last.indoor.co2_ppm));
  }
  return 0;
}

int run_plan(const Config& cfg, const std::string& scenario, const std::string& format) {
  const auto out = planner::plan(planner::load_scenario(scenario), cfg.knowledge_base());
  if (format == "json") {
    std::cout << json{{"plan", to_json(out.plan)}, {"chain", to_json(out.chain)}}.dump(2) << "\n";
  } else {
    std::cout << stream::render(out.chain, out.plan, cfg.segmentation) << "\n";
  }
  return 0;
}

int run_profile(const std::string& action, const std::string& store) {
  if (action == "reset") {
    profile::persist(profile::Household{}, store);
    std::cout << fmt::format("reset {}\n", store);
    return 0;
  }
  const auto h = profile::load(store);
  json log = json::array();
  for (const auto& e : h.change_log) log.push_back(profile::to_json(e));
  std::cout << json{{"members", profile::members_to_json(h)}, {"change_log", log}}.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Household air-system assistant: profiles, planning, simulation and evaluation"};
  app.require_subcommand(1);
  std::optional<std::string> config_path;
  bool no_backend = false;
  app.add_option("--config", config_path, "JSON config file (default: $AIRSTEWARD_CONFIG or built-in)");
  app.add_flag("--no-backend", no_backend, "Ignore any configured model backend");

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  int port = -1;
  std::string host;
  std::optional<std::string> ui, store_dir;
  serve->add_option("--port", port, "Port (0 picks a free one)");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--ui", ui, "Directory of static UI files served at /")->check(CLI::ExistingDirectory);
  serve->add_option("--store", store_dir, "Directory for per-session profile logs");

  auto* repl = app.add_subcommand("repl", "Interactive session on stdin");
  std::optional<std::string> repl_scenario, repl_store;
  repl->add_option("--scenario", repl_scenario, "Scenario file")->check(CLI::ExistingFile);
  repl->add_option("--store", repl_store, "Directory for the profile log");

  auto* evalc = app.add_subcommand("eval", "Score a candidate against a corpus");
  std::string corpus, candidate = "planner";
  std::optional<std::string> report;
  bool include_cases = false;
  evalc->add_option("--corpus", corpus, "Corpus JSONL")->required()->check(CLI::ExistingFile);
  evalc->add_option("--candidate", candidate, "planner, backend, or a candidate JSONL file");
  evalc->add_option("--report", report, "Write the JSON report here");
  evalc->add_flag("--cases", include_cases, "Include per-case scores in the report");

  auto* simc = app.add_subcommand("sim", "Run a closed-loop episode and print the trajectory JSONL");
  std::string sim_scenario;
  double horizon = 240.0;
  std::optional<double> replan;
  std::optional<std::string> sim_out;
  simc->add_option("--scenario", sim_scenario, "Scenario file")->required()->check(CLI::ExistingFile);
  simc->add_option("--horizon", horizon, "Episode length in minutes");
  simc->add_option("--replan-every", replan, "Minutes between planner calls (0 = plan once)");
  simc->add_option("--out", sim_out, "Trajectory output file (default stdout)");

  auto* planc = app.add_subcommand("plan", "Plan one scenario");
  std::string plan_scenario, plan_format = "stream";
  planc->add_option("--scenario", plan_scenario, "Scenario file")->required()->check(CLI::ExistingFile);
  planc->add_option("--format", plan_format, "stream or json")->check(CLI::IsMember({"stream", "json"}));

  auto* prof = app.add_subcommand("profile", "Inspect or reset a profile log");
  std::string prof_action, prof_store;
  prof->add_option("action", prof_action, "show or reset")->required()->check(CLI::IsMember({"show", "reset"}));
  prof->add_option("--store", prof_store, "Profile log file")->required();

  auto* extractc = app.add_subcommand("extract", "Print the memory tags for one utterance");
  std::string text;
  std::optional<std::string> speaker;
  extractc->add_option("text", text, "Utterance")->required();
  extractc->add_option("--speaker", speaker, "Speaker's population group");

  CLI11_PARSE(app, argc, argv);

  try {
    const Config cfg = resolve_config(config_path);
    if (*serve) {
      return run_serve(cfg, no_backend, port >= 0 ? port : cfg.port, host.empty() ? cfg.host : host, ui, store_dir);
    }
    if (*repl) return run_repl(cfg, no_backend, repl_scenario, repl_store);
    if (*evalc) return run_eval(cfg, no_backend, corpus, candidate, report, include_cases);
    if (*simc) return run_sim(cfg, sim_scenario, horizon, replan, sim_out);
    if (*planc) return run_plan(cfg, plan_scenario, plan_format);
    if (*prof) return run_profile(prof_action, prof_store);
    if (*extractc) {
      extract::SessionContext ctx;
      if (speaker) {
        const auto g = enum_from_string<PopulationGroup>(*speaker);
        if (!g) throw std::invalid_argument(fmt::format("unknown population group '{}'", *speaker));
        ctx.speaker_default_group = *g;
      }
      auto backend = make_backend(cfg, no_backend);
      const auto r = extract::extract_via_backend(text, ctx, backend.get(), cfg.lexicon());
      json records = json::array();
      for (const auto& rec : r.records) records.push_back(to_json(rec));
      std::cout << json{{"records", records}, {"provenance", extract::to_string(r.provenance)},
                        {"diagnostic", r.diagnostic}}.dump(2)
                << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "airsteward: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
