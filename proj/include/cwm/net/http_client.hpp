#pragma once

#include <chrono>
#include <string>
#include <string_view>
#include <variant>

#include "httplib.h"

#include "cwm/core/error.hpp"

namespace cwm {

struct HttpTarget {
  std::string origin;
  std::string path;
  std::string token;
  double timeout_seconds = 30.0;
  int retry_budget = 2;
};

/// Splits "http://host:port/path" into origin and path.
inline HttpTarget parse_endpoint(std::string_view url) {
  constexpr std::string_view kScheme = "http://";
  if (url.substr(0, kScheme.size()) != kScheme) {
    throw Error(Errc::kConfig, "endpoint must be an http:// URL: '" + std::string(url) + "'");
  }
  const std::size_t slash = url.find('/', kScheme.size());
  HttpTarget target;
  target.origin = std::string(url.substr(0, slash));
  target.path = slash == std::string_view::npos ? "/" : std::string(url.substr(slash));
  if (target.origin.size() == kScheme.size()) throw Error(Errc::kConfig, "endpoint has no host");
  return target;
}

using HttpBody = std::variant<std::string, httplib::MultipartFormDataItems>;

/// POSTs with bounded retries. Connection failures and 5xx replies are
/// retried `retry_budget` times (BudgetExceeded once spent; TransportError
/// when no retries were allowed); 4xx replies fail at once with
/// TransportError.
inline std::string post_with_retry(const HttpTarget& target, const HttpBody& body,
                                   const std::string& content_type = "application/json") {
  httplib::Client client(target.origin);
  const auto timeout = std::chrono::duration<double>(target.timeout_seconds);
  const auto sec = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto usec = std::chrono::duration_cast<std::chrono::microseconds>(timeout - sec);
  client.set_connection_timeout(sec.count(), usec.count());
  client.set_read_timeout(sec.count(), usec.count());
  client.set_write_timeout(sec.count(), usec.count());
  httplib::Headers headers;
  if (!target.token.empty()) headers.emplace("Authorization", "Bearer " + target.token);
  std::string last_error;
  for (int attempt = 0; attempt <= target.retry_budget; ++attempt) {
    httplib::Result res = std::holds_alternative<std::string>(body)
                              ? client.Post(target.path, headers, std::get<std::string>(body), content_type)
                              : client.Post(target.path, headers, std::get<httplib::MultipartFormDataItems>(body));
    if (!res) {
      last_error = "request to " + target.origin + target.path + " failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "service replied " + std::to_string(res->status);
      continue;
    }
    if (res->status >= 400) {
      throw Error(Errc::kTransport, "service rejected the request with " + std::to_string(res->status) + ": " +
                                        res->body.substr(0, 200));
    }
    return res->body;
  }
  if (target.retry_budget == 0) throw Error(Errc::kTransport, last_error);
  throw Error(Errc::kBudgetExceeded,
              last_error + " (after " + std::to_string(target.retry_budget + 1) + " attempts)");
}

}  // namespace cwm
