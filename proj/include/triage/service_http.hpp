#pragma once

#include <memory>
#include <string>

#include "triage/service.hpp"

namespace httplib {
class Server;
}

namespace triage {

/// HTTP front end for AnnotationService. Requests authenticate with
/// "Authorization: Bearer <token>"; every JSON response carries "log_position".
class ServiceServer {
 public:
  explicit ServiceServer(AnnotationService& service);
  ~ServiceServer();

  ServiceServer(const ServiceServer&) = delete;
  ServiceServer& operator=(const ServiceServer&) = delete;

  /// Binds to host:port (port 0 picks a free one) and returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop(). Call after bind().
  void serve();
  void stop();
  void wait_until_ready() const;

 private:
  void install_routes();

  AnnotationService& service_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace triage
