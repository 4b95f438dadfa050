// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

#include <httplib.h>

#include "vizforge/bench/review.hpp"
#include "vizforge/common/errors.hpp"

namespace vizforge {

struct ReviewServer::Impl {
  httplib::Server http;
};

ReviewServer::ReviewServer(ReviewStore& store, const CorpusStore* artifacts,
                           std::optional<std::filesystem::path> static_dir)
    : impl_(std::make_unique<Impl>()) {
  auto route = [&store, artifacts](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> query(req.params.begin(), req.params.end());
    std::map<std::string, std::string> headers(req.headers.begin(), req.headers.end());
    const auto reply = handle_review_request(store, artifacts, req.method, req.path, query, headers, req.body);
    res.status = reply.status;
    res.set_content(reply.body, reply.content_type);
  };
  impl_->http.Get(R"(/api/.*)", route);
  impl_->http.Post(R"(/api/.*)", route);
  if (static_dir) impl_->http.set_mount_point("/", static_dir->string());
}

ReviewServer::~ReviewServer() { stop(); }

int ReviewServer::bind(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->http.bind_to_any_port(host) : (impl_->http.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw StorageError("cannot bind review server to " + host + ":" + std::to_string(port));
  return bound;
}

void ReviewServer::serve() { impl_->http.listen_after_bind(); }

void ReviewServer::stop() {
  if (impl_) impl_->http.stop();
}

}  // namespace vizforge
