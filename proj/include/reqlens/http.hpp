#pragma once

#include <string>

#include "httplib.h"
#include "json.hpp"
#include "reqlens/service.hpp"

namespace reqlens {

inline std::string dump_json(const nlohmann::json& j, int indent = -1) {
  return j.dump(indent, ' ', false, nlohmann::json::error_handler_t::replace);
}

// Wires the service routes into an httplib server. Built explorer assets, if
// any, are served from static_dir under "/".
inline void mount(httplib::Server& server, Service& service, const std::string& static_dir = {}) {
  auto handler = [&service](const httplib::Request& req, httplib::Response& res) {
    Request r{req.method, req.path, {}, req.body};
    for (const auto& [k, v] : req.params) r.query.emplace(k, v);
    const auto out = service.handle(r);
    res.status = out.status;
    res.set_content(dump_json(out.body), "application/json");
  };
  const char* api = R"(/(requirements|metrics|analysis|feedback|retrain)(/.*)?)";
  server.Get(api, handler);
  server.Post(api, handler);
  server.Put(api, handler);
  server.Delete(api, handler);
  if (!static_dir.empty() && !server.set_mount_point("/", static_dir)) {
    throw error(errc::io_error, "static directory '" + static_dir + "' does not exist");
  }
}

}  // namespace reqlens
