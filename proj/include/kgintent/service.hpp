#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "kgintent/anticipator.hpp"
#include "kgintent/graph.hpp"
#include "kgintent/interaction.hpp"
#include "kgintent/kge.hpp"
#include "kgintent/lp_eval.hpp"

namespace kgintent {

struct ServiceConfig {
  std::optional<std::filesystem::path> store;       // N-Triples file; synthetic corpus when absent
  std::optional<std::filesystem::path> checkpoint;  // trained embeddings to load
  std::optional<std::filesystem::path> snapshot;    // store written here on shutdown
  std::optional<std::filesystem::path> templates;   // query ladder definitions
  std::string host = "127.0.0.1";
  int port = 8080;
  std::uint64_t seed = 42;
  std::size_t feedback_queue = 8;  // pending fine-tune jobs before feedback stops queuing them
  SplitSpec split;
  EarlyStopConfig stop;
  FineTuneOptions tune;

  // Keys: store, checkpoint, snapshot, templates, host, port, seed,
  // feedback_queue, fine_tune_epochs. Missing keys keep their defaults.
  static ServiceConfig from_json(const std::string& text);
};

struct HttpRequest {
  std::string method;
  std::string path;
  std::string body;
  std::map<std::string, std::string> params;  // query string or form fields
  std::map<std::string, std::string> files;   // multipart uploads by field name
};

struct HttpResponse {
  int status = 200;
  std::string body;  // JSON
};

// The interaction loop behind a JSON-over-HTTP facade. Reads run
// concurrently; annotation and model swaps go through a single writer lock;
// training and fine-tuning run on one background worker.
class Service {
 public:
  explicit Service(Graph g, std::optional<LpModel> model = std::nullopt, ServiceConfig cfg = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  HttpResponse handle(const HttpRequest& req);

  // Binds the HTTP listener (port 0 picks a free one) and returns the port.
  int bind(const std::string& host, int port);
  // Serves until stop(); requires bind().
  void run();
  void stop();

  // Blocks until the background worker has nothing queued or running.
  bool wait_idle(std::chrono::milliseconds timeout = std::chrono::minutes(30));

  Graph graph() const;
  bool has_model() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Store and model as described by the configuration.
Graph load_store(const ServiceConfig& cfg);

}  // namespace kgintent
