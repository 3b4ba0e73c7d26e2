#pragma once

#include <memory>
#include <string>

#include "fgb/error.hpp"
#include "fgb/study/store.hpp"

namespace fgb::study {

struct ServerOptions {
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 picks a free port
    int image_size = 256;
};

/// JSON/HTTP front end over a StudyStore:
///   POST /sessions                  {kind, reader_id, seed} -> {id, kind, total, choices}
///   GET  /sessions/{id}             -> {id, kind, cursor, total, state, choices}
///   GET  /sessions/{id}/next        -> {index, total, image_url} | {done: true}
///   POST /sessions/{id}/responses   {index, choice, latency_ms} -> {cursor, state}
///   GET  /sessions/{id}/report      -> StudyReport (409 until complete)
///   GET  /images/{handle}           -> PNG
/// Errors are {code, message}: 400 bad input, 404 unknown id, 409 sequence
/// or state conflicts, 422 pools too small.
class StudyServer {
public:
    StudyServer(StudyStore& store, StudyPools pools, ServerOptions options = {});
    ~StudyServer();

    /// Binds and returns the bound port; throws Io when binding fails.
    int bind();
    /// Serves until stop(); call after bind().
    void serve();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// HTTP status used for an error code.
int http_status(ErrorCode code);

}  // namespace fgb::study
