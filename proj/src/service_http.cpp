#include "triage/service_http.hpp"

#include "httplib.h"
#include "triage/error.hpp"

namespace triage {

using nlohmann::json;

namespace {

json labels_json(const LabelVector& v) { return json::array({v[0], v[1], v[2]}); }

json questions_json() {
  json out = json::array();
  for (std::size_t q = 0; q < kCategoryCount; ++q) {
    out.push_back({{"category", std::string(to_string(kCategories[q]))}, {"text", kQuestions[q]}});
  }
  return out;
}

LabelVector answers_from(const httplib::Request& req) {
  json body;
  try {
    body = json::parse(req.body);
    return body.at("answers").get<LabelVector>();
  } catch (const json::exception& e) {
    throw UsageError(std::string("request body needs \"answers\": ") + e.what());
  }
}

}  // namespace

ServiceServer::ServiceServer(AnnotationService& service)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

ServiceServer::~ServiceServer() { stop(); }

int ServiceServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = server_->bind_to_any_port(host);
    if (bound < 0) throw UsageError("cannot bind " + host);
    return bound;
  }
  if (!server_->bind_to_port(host, port)) throw UsageError("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void ServiceServer::serve() { server_->listen_after_bind(); }

void ServiceServer::stop() {
  if (server_) server_->stop();
}

void ServiceServer::wait_until_ready() const { server_->wait_until_ready(); }

void ServiceServer::install_routes() {
  // Wraps a handler with authentication, error mapping and log_position.
  auto guarded = [this](auto handler) {
    return [this, handler](const httplib::Request& req, httplib::Response& res) {
      json body;
      try {
        const std::string header = req.get_header_value("Authorization");
        const std::string prefix = "Bearer ";
        std::optional<AnnotatorAccount> who;
        if (header.rfind(prefix, 0) == 0) who = service_.authenticate(header.substr(prefix.size()));
        if (!who) {
          res.status = 401;
          body = {{"error", "missing or invalid bearer token"}};
        } else {
          body = handler(req, *who);
          res.status = 200;
        }
      } catch (const NotFoundError& e) {
        res.status = 404;
        body = {{"error", e.what()}};
      } catch (const AuthorizationError& e) {
        res.status = 403;
        body = {{"error", e.what()}};
      } catch (const ConflictError& e) {
        res.status = 409;
        body = {{"error", e.what()}};
      } catch (const Error& e) {
        res.status = 400;
        body = {{"error", e.what()}};
      }
      body["log_position"] = service_.log_position();
      res.set_content(body.dump(), "application/json");
    };
  };

  server_->Get("/tasks/next", guarded([this](const httplib::Request& req, const AnnotatorAccount& who) {
    std::string annotator = req.has_param("annotator") ? req.get_param_value("annotator") : who.id;
    if (annotator != who.id) throw AuthorizationError("token does not belong to " + annotator);
    auto view = service_.next_task(annotator);
    if (!view) return json{{"task", nullptr}};
    return json{{"task", {{"task_id", view->task_id}, {"text", view->text}, {"cycle", view->cycle},
                          {"questions", questions_json()}}}};
  }));

  server_->Post(R"(/tasks/([^/]+)/label)", guarded([this](const httplib::Request& req, const AnnotatorAccount& who) {
    const auto state = service_.submit_label(req.matches[1], who.id, answers_from(req));
    return json{{"task_id", std::string(req.matches[1])}, {"state", std::string(to_string(state))}};
  }));

  server_->Get("/tasks/conflicts", guarded([this](const httplib::Request&, const AnnotatorAccount& who) {
    json list = json::array();
    for (const auto& c : service_.conflicts(who.id)) {
      json answers = json::object();
      for (const auto& [annotator, labels] : c.answers) answers[annotator] = labels_json(labels);
      list.push_back({{"task_id", c.task_id},
                      {"text", c.text},
                      {"answers", answers},
                      {"disagreements", json::array({c.disagreements[0], c.disagreements[1], c.disagreements[2]})}});
    }
    return json{{"conflicts", list}};
  }));

  server_->Post(R"(/tasks/([^/]+)/adjudicate)",
                guarded([this](const httplib::Request& req, const AnnotatorAccount& who) {
                  const auto task = service_.adjudicate(req.matches[1], who.id, answers_from(req));
                  return json{{"task_id", task.id},
                              {"state", std::string(to_string(task.state))},
                              {"gold", labels_json(*task.gold())}};
                }));

  server_->Get("/dashboard/agreement", guarded([this](const httplib::Request&, const AnnotatorAccount&) {
    return to_json_value(service_.agreement_dashboard());
  }));

  server_->Get("/cycle/status", guarded([this](const httplib::Request&, const AnnotatorAccount&) {
    const auto s = service_.cycle_status();
    return json{{"cycle", s.cycle_index},       {"open", s.open},           {"queried", s.queried},
                {"resolved", s.resolved},      {"conflicted", s.conflicted}, {"pending", s.pending},
                {"blocking", s.blocking()}};
  }));

  server_->Post("/cycle/advance", guarded([this](const httplib::Request&, const AnnotatorAccount& who) {
    const auto before = service_.cycle_status();
    service_.advance_cycle(who.id);
    return json{{"advanced", before.cycle_index}};
  }));
}

}  // namespace triage
