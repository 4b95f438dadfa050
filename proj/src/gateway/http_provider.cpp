// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

// Kept in its own translation unit: httplib.h is heavy to compile.

#include <httplib.h>
#include <openssl/evp.h>
#include <spawn.h>
#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>

#include "vizforge/common/errors.hpp"
#include "vizforge/gateway/gateway.hpp"

extern char** environ;

namespace vizforge {
namespace {

std::string base64(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string image_mime(std::string_view b) {
  if (b.substr(0, 8) == "\x89PNG\r\n\x1a\n") return "image/png";
  if (b.substr(0, 3) == "\xFF\xD8\xFF") return "image/jpeg";
  if (b.substr(0, 4) == "GIF8") return "image/gif";
  if (b.size() > 12 && b.substr(0, 4) == "RIFF" && b.substr(8, 4) == "WEBP") return "image/webp";
  if (b.find("<svg") != std::string_view::npos) return "image/svg+xml";
  return "application/octet-stream";
}

std::string substitute(std::string arg, const std::string& key, const std::string& value) {
  for (auto pos = arg.find(key); pos != std::string::npos; pos = arg.find(key, pos + value.size())) {
    arg.replace(pos, key.size(), value);
  }
  return arg;
}

class HttpProvider final : public Provider {
 public:
  explicit HttpProvider(HttpProviderOptions o) : o_(std::move(o)) {
    const auto scheme = o_.base_url.find("://");
    if (scheme == std::string::npos) throw ConfigError({"gateway base_url (missing scheme): " + o_.base_url});
    const auto slash = o_.base_url.find('/', scheme + 3);
    origin_ = o_.base_url.substr(0, slash);
    prefix_ = slash == std::string::npos ? "" : o_.base_url.substr(slash);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  }

  std::string name() const override { return "http:" + origin_; }

  std::string send(const ProviderCall& call) override {
    Json content = Json::array();
    content.push_back({{"type", "text"}, {"text", call.prompt}});
    for (const auto& a : call.attachments) {
      if (a.kind == MediaKind::kImage) {
        content.push_back(image_part(a.bytes));
      } else if (a.kind == MediaKind::kVideo) {
        for (const auto& frame : video_frames(a)) content.push_back(image_part(frame));
      } else {
        content.push_back({{"type", "text"}, {"text", "Attachment (" + std::string(to_string(a.kind)) + "):\n" + a.bytes}});
      }
    }
    Json body = {{"model", o_.model},
                 {"messages", Json::array({{{"role", "user"}, {"content", content}}})},
                 {"temperature", call.decode.temperature},
                 {"max_tokens", call.decode.max_tokens}};
    if (call.decode.seed) body["seed"] = *call.decode.seed;

    httplib::Client client(origin_);
    client.set_connection_timeout(o_.timeout_seconds, 0);
    client.set_read_timeout(o_.timeout_seconds, 0);
    client.set_write_timeout(o_.timeout_seconds, 0);
    httplib::Headers headers;
    if (const char* key = std::getenv(o_.api_key_env.c_str()); key != nullptr && *key != '\0') {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    auto res = client.Post(prefix_ + "/chat/completions", headers, body.dump(), "application/json");
    if (!res) throw TransportError("request failed: " + httplib::to_string(res.error()));
    if (res->status == 429 || res->status >= 500) {
      throw TransportError("provider returned HTTP " + std::to_string(res->status));
    }
    if (res->status != 200) {
      throw GatewayUnavailableError("provider returned HTTP " + std::to_string(res->status) + ": " +
                                    res->body.substr(0, 200));
    }
    try {
      const auto reply = Json::parse(res->body);
      return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const Json::exception& e) {
      throw TransportError(std::string("unreadable provider reply: ") + e.what());
    }
  }

 private:
  static Json image_part(const std::string& bytes) {
    return {{"type", "image_url"},
            {"image_url", {{"url", "data:" + image_mime(bytes) + ";base64," + base64(bytes)}}}};
  }

  // Runs the configured extractor, then keeps six uniformly spaced frames.
  std::vector<std::string> video_frames(const Attachment& a) const {
    if (o_.frame_extractor.empty()) {
      throw GatewayUnavailableError("video attachment " + a.hash + " needs a frame_extractor command");
    }
    char tmpl[] = "/tmp/vizforge-frames-XXXXXX";
    if (::mkdtemp(tmpl) == nullptr) throw StorageError("cannot create frame directory");
    const std::filesystem::path dir(tmpl);
    struct Cleanup {
      std::filesystem::path p;
      ~Cleanup() {
        std::error_code ec;
        std::filesystem::remove_all(p, ec);
      }
    } cleanup{dir};
    write_file_atomic(dir / "input.bin", a.bytes);
    std::filesystem::create_directories(dir / "frames");
    std::vector<std::string> args;
    for (const auto& arg : o_.frame_extractor) {
      args.push_back(substitute(substitute(substitute(arg, "{input}", (dir / "input.bin").string()), "{out_dir}",
                                           (dir / "frames").string()),
                                "{count}", "6"));
    }
    std::vector<char*> argv;
    for (auto& s : args) argv.push_back(s.data());
    argv.push_back(nullptr);
    pid_t pid = 0;
    if (::posix_spawnp(&pid, argv[0], nullptr, nullptr, argv.data(), environ) != 0) {
      throw GatewayUnavailableError("cannot run frame extractor " + args[0]);
    }
    int status = 0;
    ::waitpid(pid, &status, 0);
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) throw TransportError("frame extractor failed");
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir / "frames")) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<std::string> frames;
    for (int i : sample_frame_indices(static_cast<int>(files.size()))) {
      frames.push_back(read_file(files[static_cast<std::size_t>(i)]));
    }
    return frames;
  }

  HttpProviderOptions o_;
  std::string origin_;
  std::string prefix_;
};

}  // namespace

std::unique_ptr<Provider> make_http_provider(HttpProviderOptions options) {
  return std::make_unique<HttpProvider>(std::move(options));
}

}  // namespace vizforge
