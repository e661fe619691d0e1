#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <string_view>

#include "deltaforge/error.hpp"

namespace deltaforge {

/// HTTP status for a library error: 404 unknown id, 409 write conflicts and
/// missing pipeline state, 500 I/O, 400 for everything else.
int http_status(ErrorCode code);

/// JSON-over-HTTP front end for sessions stored under `root` (which may
/// itself be a session directory). Writes to one session are serialized
/// with a try-lock, so a second concurrent writer gets 409; reads use the
/// last published session state and never block on writers.
class Service {
 public:
  explicit Service(std::filesystem::path root);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Called with the operation name while its write lock is held.
  void set_write_hook(std::function<void(std::string_view)> hook);

  /// Binds `host`; port 0 picks a free one. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Blocks serving requests until stop().
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace deltaforge
