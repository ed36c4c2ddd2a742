#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "subsnake/harness.hpp"
#include "subsnake/optimize.hpp"

namespace subsnake {

class SessionNotFound : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Standard base64 with optional padding; whitespace is ignored.
std::vector<std::uint8_t> base64_decode(const std::string& text);

// Interactive segmentation sessions. Each session serializes its own
// mutations; different sessions run in parallel.
class SessionStore {
 public:
  // Body: {"image": path | {"path": P} | {"base64": B}, "scheme", "points",
  // "params": {...}}. Returns {"id", "rows", "cols", "scheme"}.
  nlohmann::json create(const nlohmann::json& body);
  nlohmann::json state(const std::string& id) const;
  nlohmann::json step(const std::string& id, int n);
  nlohmann::json move_point(const std::string& id, std::size_t index, double row, double col);
  nlohmann::json set_alpha(const std::string& id, const std::string& mode);
  void remove(const std::string& id);
  std::size_t size() const;

 private:
  struct Session {
    mutable std::mutex mutex;
    std::string id;
    std::unique_ptr<Optimizer> optimizer;
  };

  std::shared_ptr<Session> find(const std::string& id) const;
  static nlohmann::json describe(const Session& session);

  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_id_ = 1;
};

// HTTP front end for SessionStore.
class HttpService {
 public:
  HttpService();
  ~HttpService();
  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  // Binds and serves until stop(); returns false if binding fails.
  bool listen(const std::string& host, int port);
  // Binds to a free port and returns it, or -1.
  int bind_any_port(const std::string& host);
  // Serves on a socket opened by bind_any_port.
  bool listen_after_bind();
  void stop();
  void wait_until_ready() const;

  SessionStore& store();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace subsnake
