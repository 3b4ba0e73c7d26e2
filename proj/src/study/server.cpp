#include "fgb/study/server.hpp"

#include <httplib.h>
#include <opencv2/imgcodecs.hpp>

#include "fgb/image.hpp"

namespace fgb::study {

using nlohmann::json;

int http_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::NotFound: return 404;
        case ErrorCode::SequenceError:
        case ErrorCode::DuplicateResponse:
        case ErrorCode::NotComplete: return 409;
        case ErrorCode::InsufficientPool: return 422;
        case ErrorCode::UsageError:
        case ErrorCode::ConfigError: return 400;
        default: return 500;
    }
}

struct StudyServer::Impl {
    StudyStore& store;
    StudyPools pools;
    ServerOptions options;
    httplib::Server http;
    int port = 0;

    Impl(StudyStore& s, StudyPools p, ServerOptions o) : store(s), pools(std::move(p)), options(std::move(o)) {}

    static void send_json(httplib::Response& res, int status, const json& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json; charset=utf-8");
    }

    static void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
        send_json(res, http_status(code), {{"code", to_string(code)}, {"message", message}});
    }

    // Runs a handler, mapping library errors onto the error envelope.
    template <typename Fn>
    static void guarded(httplib::Response& res, Fn&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            send_error(res, e.code(), e.what());
        } catch (const json::exception& e) {
            send_error(res, ErrorCode::UsageError, std::string("bad request body: ") + e.what());
        } catch (const std::exception& e) {
            send_error(res, ErrorCode::Io, e.what());
        }
    }

    static json public_view(const StudySession& s) {
        const auto c = choices_for(s.kind);
        return {{"id", s.id},
                {"kind", to_string(s.kind)},
                {"cursor", s.cursor},
                {"total", s.items.size()},
                {"state", to_string(s.state)},
                {"choices", {c[0], c[1]}}};
    }

    void routes() {
        http.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const auto body = json::parse(req.body);
                const auto kind = parse_kind(body.at("kind").get<std::string>());
                const auto s = store.create_session(kind, pools, body.value("reader_id", std::string()),
                                                    body.value("seed", std::uint64_t{0}));
                send_json(res, 201, public_view(s));
            });
        });
        http.Get(R"(/sessions/([0-9a-f]+))", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] { send_json(res, 200, public_view(store.session(req.matches[1]))); });
        });
        http.Get(R"(/sessions/([0-9a-f]+)/next)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const auto next = store.next_item(req.matches[1]);
                if (!next) {
                    send_json(res, 200, {{"done", true}});
                    return;
                }
                send_json(res, 200,
                          {{"index", next->index}, {"total", next->total}, {"image_url", "/images/" + next->handle}});
            });
        });
        http.Post(R"(/sessions/([0-9a-f]+)/responses)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const auto body = json::parse(req.body);
                const auto s = store.record_response(req.matches[1], body.at("index").get<int>(),
                                                     body.at("choice").get<std::string>(),
                                                     body.value("latency_ms", 0.0));
                send_json(res, 200, {{"cursor", s.cursor}, {"state", to_string(s.state)}});
            });
        });
        http.Get(R"(/sessions/([0-9a-f]+)/report)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] { send_json(res, 200, store.report(req.matches[1])); });
        });
        http.Get(R"(/images/([0-9a-f]+))", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                // Re-encoded so nothing from the source file (name, metadata) reaches the reader.
                const auto img = image::resize(image::read(store.image_for(req.matches[1])), options.image_size,
                                               options.image_size);
                std::vector<uchar> png;
                cv::imencode(".png", img, png);
                res.status = 200;
                res.set_header("Cache-Control", "no-store");
                res.set_content(std::string(png.begin(), png.end()), "image/png");
            });
        });
        http.set_error_handler([](const httplib::Request&, httplib::Response& res) {
            if (res.body.empty()) {
                send_json(res, res.status, {{"code", res.status == 404 ? "NotFound" : "Io"},
                                            {"message", httplib::status_message(res.status)}});
            }
        });
    }
};

StudyServer::StudyServer(StudyStore& store, StudyPools pools, ServerOptions options)
    : impl_(std::make_unique<Impl>(store, std::move(pools), std::move(options))) {
    impl_->routes();
}

StudyServer::~StudyServer() {
    stop();
}

int StudyServer::bind() {
    auto& o = impl_->options;
    if (o.port == 0) {
        impl_->port = impl_->http.bind_to_any_port(o.host);
    } else {
        impl_->port = impl_->http.bind_to_port(o.host, o.port) ? o.port : -1;
    }
    if (impl_->port < 0) fail(ErrorCode::Io, "cannot bind " + o.host + ":" + std::to_string(o.port));
    return impl_->port;
}

void StudyServer::serve() {
    impl_->http.listen_after_bind();
}

void StudyServer::stop() {
    if (impl_ && impl_->http.is_running()) impl_->http.stop();
}

}  // namespace fgb::study
