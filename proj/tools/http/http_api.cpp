#include "hai/http_api.hpp"

#include <charconv>
#include <limits>
#include <optional>
#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "hai/hitl_service.hpp"
#include "hai/rules.hpp"

namespace hai::http {

namespace {

constexpr const char* kJson = "application/json";

void send(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

void fail(httplib::Response& res, int status, std::string_view code, const std::string& message) {
  send(res, status, {{"code", code}, {"message", message}});
}

std::optional<nlohmann::json> parse_body(const httplib::Request& req, httplib::Response& res) {
  try {
    auto body = nlohmann::json::parse(req.body);
    if (!body.is_object()) {
      fail(res, 422, "validation_failed", "request body must be a JSON object");
      return std::nullopt;
    }
    return body;
  } catch (const nlohmann::json::parse_error& e) {
    fail(res, 422, "invalid_json", e.what());
    return std::nullopt;
  }
}

void handle_feedback(HitlService& service, const httplib::Request& req, httplib::Response& res) {
  const std::string id_text = req.matches[1];
  QueryId id = 0;
  const auto [ptr, ec] = std::from_chars(id_text.data(), id_text.data() + id_text.size(), id);
  if (ec != std::errc() || ptr != id_text.data() + id_text.size()) {
    fail(res, 404, "unknown_query", "unknown query " + id_text);
    return;
  }
  const auto body = parse_body(req, res);
  if (!body) return;
  if (!body->contains("kind") || !(*body)["kind"].is_string()) {
    fail(res, 422, "validation_failed", "kind must be one of label, correction, confirmation, skip");
    return;
  }
  const auto kind = parse_feedback_kind((*body)["kind"].get<std::string>());
  if (!kind) {
    fail(res, 422, "validation_failed", "kind must be one of label, correction, confirmation, skip");
    return;
  }
  std::optional<ClassLabel> value;
  if (body->contains("value") && !(*body)["value"].is_null()) {
    const auto& v = (*body)["value"];
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
      fail(res, 422, "validation_failed", "value must be a non-negative integer class");
      return;
    }
    const auto n = v.get<std::uint64_t>();
    value = n > std::numeric_limits<ClassLabel>::max() ? std::numeric_limits<ClassLabel>::max()
                                                        : static_cast<ClassLabel>(n);
  }
  const auto result = service.submit(id, *kind, value);
  using Code = SubmitResult::Code;
  switch (result.code) {
    case Code::Accepted:
    case Code::Noop:
      send(res, 200,
           {{"query_id", id},
            {"status", result.code == Code::Accepted ? "accepted" : "noop"},
            {"state", to_string(result.state)}});
      return;
    case Code::NotFound: fail(res, 404, "unknown_query", result.message); return;
    case Code::Conflict: fail(res, 409, "conflict", result.message); return;
    case Code::Invalid: fail(res, 422, "validation_failed", result.message); return;
  }
}

void handle_rule(HitlService& service, const httplib::Request& req, httplib::Response& res) {
  const auto body = parse_body(req, res);
  if (!body) return;
  const auto& b = *body;
  const bool shaped = b.contains("feature_index") && b["feature_index"].is_number_integer() &&
                      b["feature_index"].get<std::int64_t>() >= 0 && b.contains("comparator") &&
                      b["comparator"].is_string() && b.contains("threshold") && b["threshold"].is_number() &&
                      b.contains("label") && b["label"].is_number_integer() && b["label"].get<std::int64_t>() >= 0;
  if (!shaped) {
    fail(res, 422, "validation_failed",
         "rule needs feature_index (integer >= 0), comparator, threshold (number) and label (integer >= 0)");
    return;
  }
  const auto comparator = parse_comparator(b["comparator"].get<std::string>());
  if (!comparator) {
    fail(res, 422, "validation_failed", "comparator must be one of >, >=, <, <=, ==");
    return;
  }
  Rule rule;
  rule.feature_index = b["feature_index"].get<std::size_t>();
  rule.comparator = *comparator;
  rule.threshold = b["threshold"].get<double>();
  rule.label = b["label"].get<ClassLabel>();
  const auto result = service.submit_rule(rule);
  if (!result.accepted) {
    fail(res, 422, "validation_failed", result.message);
    return;
  }
  send(res, 200, {{"status", "accepted"}, {"matched", result.matched}, {"message", result.message}});
}

}  // namespace

void register_routes(httplib::Server& server, HitlService& service) {
  server.Get("/v1/queries/pending", [&service](const httplib::Request&, httplib::Response& res) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& q : service.list_pending()) out.push_back(to_json(q));
    send(res, 200, out);
  });
  server.Post(R"(/v1/queries/([^/]+)/feedback)", [&service](const httplib::Request& req, httplib::Response& res) {
    handle_feedback(service, req, res);
  });
  server.Post("/v1/rules", [&service](const httplib::Request& req, httplib::Response& res) {
    handle_rule(service, req, res);
  });
  server.Get("/v1/status", [&service](const httplib::Request&, httplib::Response& res) {
    send(res, 200, to_json(service.status()));
  });
  server.Get("/v1/tradeoff", [&service](const httplib::Request&, httplib::Response& res) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& p : service.tradeoff()) out.push_back(to_json(p));
    send(res, 200, out);
  });
  server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
    const std::string code = res.status == 404 ? "not_found" : "http_" + std::to_string(res.status);
    fail(res, res.status, code, req.method + " " + req.path);
    return httplib::Server::HandlerResponse::Handled;
  });
  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string message = "internal error";
    try {
      if (ep) std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      message = e.what();
    } catch (...) {
    }
    fail(res, 500, "internal", message);
  });
}

}  // namespace hai::http
