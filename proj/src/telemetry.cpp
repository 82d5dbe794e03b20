#include "flock/telemetry.hpp"

#include "flock/error.hpp"
#include "flock/metrics.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <atomic>
#include <cmath>
#include <deque>
#include <limits>
#include <mutex>
#include <set>
#include <thread>
#include <vector>

namespace flocking {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using nlohmann::json;

namespace {

json vec(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

json reply(const json& request_id, bool accepted, const std::string& reason, const std::string& message)
{
    return {{"type", "reply"},
            {"request_id", request_id},
            {"status", accepted ? "accepted" : "rejected"},
            {"reason", reason},
            {"message", message}};
}

} // namespace

json snapshot_message(const SwarmState& state)
{
    json j;
    j["schema_version"] = 1;
    j["type"] = "snapshot";
    j["t"] = state.t;
    j["phase"] = std::string(to_string(state.phase));
    j["vc"] = {{"pos", vec(state.vc.pose.translation)},
               {"yaw", state.vc.pose.rotation.yaw()},
               {"vel", vec(state.vc.twist.linear)}};
    j["agents"] = json::array();
    for (const auto& a : state.agents) {
        json ja{{"id", a.agent_id},
                {"slot", a.slot_id ? json(*a.slot_id) : json(nullptr)},
                {"pos", vec(a.position)},
                {"yaw", a.yaw},
                {"vel", vec(a.velocity)},
                {"ref_pos", a.reference ? vec(a.reference->translation) : json(nullptr)},
                {"detached", a.detached()}};
        j["agents"].push_back(std::move(ja));
    }
    double progress = 0.0;
    if (state.transition)
        progress = state.transition->progress(state.t);
    j["formation"] = {{"name", state.transition ? state.transition->to().name() : state.formation.name()},
                      {"slot_count", state.formation.size()},
                      {"transitioning", state.transition.has_value()},
                      {"transition_progress", progress}};
    if (state.phase == Phase::Motion) {
        const MetricsSample m = sample_metrics(state);
        j["metrics"] = {{"agent_ids", m.agent_ids},
                        {"cohesion", m.cohesion},
                        {"alignment", m.alignment},
                        {"reference_error", m.reference_error}};
    }
    return j;
}

struct TelemetryServer::Impl : std::enable_shared_from_this<TelemetryServer::Impl> {
    class WsSession;

    TelemetryOptions options;
    json descriptor;
    FormationLibrary library;

    net::io_context ioc{1};
    tcp::acceptor acceptor{ioc};
    std::thread thread;

    std::mutex sessions_mutex;
    std::vector<std::weak_ptr<WsSession>> sessions;

    std::mutex engine_mutex;
    Engine* engine = nullptr;

    double last_sent_t = -std::numeric_limits<double>::infinity(); // engine thread only
    std::atomic<double> latest_t{0.0};

    void accept();
    void broadcast(std::shared_ptr<const std::string> msg);
    void handle_command(const std::shared_ptr<WsSession>& session, const std::string& text);
    std::size_t live_sessions();
};

class TelemetryServer::Impl::WsSession : public std::enable_shared_from_this<WsSession> {
public:
    WsSession(Impl* impl, tcp::socket socket) : impl_(impl), ws_(std::move(socket)) {}

    void run(http::request<http::string_body> req)
    {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
            if (ec)
                return;
            {
                std::lock_guard lock(self->impl_->sessions_mutex);
                self->impl_->sessions.push_back(self);
            }
            self->read();
        });
    }

    // Thread-safe. Snapshots beyond the queue depth replace the oldest
    // waiting snapshot; replies are never dropped.
    void send(std::shared_ptr<const std::string> msg, bool snapshot)
    {
        net::post(ws_.get_executor(), [self = shared_from_this(), msg = std::move(msg), snapshot]() mutable {
            self->push(std::move(msg), snapshot);
        });
    }

    bool seen(const std::string& request_key) { return !request_ids_.insert(request_key).second; }

private:
    struct Outgoing {
        std::shared_ptr<const std::string> text;
        bool snapshot;
    };

    void push(std::shared_ptr<const std::string> msg, bool snapshot)
    {
        if (closed_)
            return;
        if (snapshot) {
            std::size_t queued = 0;
            for (const auto& o : queue_)
                queued += o.snapshot ? 1 : 0;
            if (queued >= impl_->options.queue_depth) {
                // Never touch the message currently being written (front).
                for (auto it = queue_.begin() + (writing_ ? 1 : 0); it != queue_.end(); ++it) {
                    if (it->snapshot) {
                        queue_.erase(it);
                        break;
                    }
                }
            }
        }
        queue_.push_back({std::move(msg), snapshot});
        if (!writing_)
            write_next();
    }

    void write_next()
    {
        if (queue_.empty() || closed_) {
            writing_ = false;
            return;
        }
        writing_ = true;
        ws_.text(true);
        ws_.async_write(net::buffer(*queue_.front().text),
                        [self = shared_from_this()](beast::error_code ec, std::size_t) {
                            self->queue_.pop_front();
                            if (ec) {
                                self->closed_ = true;
                                self->queue_.clear();
                                self->writing_ = false;
                                return;
                            }
                            self->write_next();
                        });
    }

    void read()
    {
        ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                self->closed_ = true;
                return;
            }
            const std::string text = beast::buffers_to_string(self->buffer_.data());
            self->buffer_.consume(self->buffer_.size());
            self->impl_->handle_command(self, text);
            self->read();
        });
    }

    Impl* impl_;
    websocket::stream<beast::tcp_stream> ws_;
    beast::flat_buffer buffer_;
    std::deque<Outgoing> queue_;
    bool writing_ = false;
    bool closed_ = false;
    std::set<std::string> request_ids_;
};

namespace {

class HttpSession : public std::enable_shared_from_this<HttpSession> {
public:
    using Handler = std::function<bool(HttpSession&, http::request<http::string_body>&)>;

    HttpSession(tcp::socket socket, Handler handler) : stream_(std::move(socket)), handler_(std::move(handler)) {}

    void run() { read(); }

    tcp::socket release() { return stream_.release_socket(); }

    void respond(http::status status, const json& body, bool keep_alive)
    {
        auto res = std::make_shared<http::response<http::string_body>>(status, 11);
        res->set(http::field::content_type, "application/json");
        res->set(http::field::access_control_allow_origin, "*");
        res->keep_alive(keep_alive);
        res->body() = body.dump();
        res->prepare_payload();
        http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
            if (ec || !res->keep_alive()) {
                beast::error_code ignored;
                self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
                return;
            }
            self->read();
        });
    }

private:
    void read()
    {
        req_ = {};
        stream_.expires_after(std::chrono::seconds(30));
        http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec)
                return;
            self->stream_.expires_never();
            self->handler_(*self, self->req_);
        });
    }

    beast::tcp_stream stream_;
    beast::flat_buffer buffer_;
    http::request<http::string_body> req_;
    Handler handler_;
};

} // namespace

void TelemetryServer::Impl::accept()
{
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
        if (ec)
            return; // acceptor closed
        auto session = std::make_shared<HttpSession>(
            std::move(socket), [this](HttpSession& s, http::request<http::string_body>& req) -> bool {
                const std::string target(req.target());
                if (websocket::is_upgrade(req)) {
                    if (target != "/v1/stream") {
                        s.respond(http::status::not_found, {{"error", "unknown endpoint"}}, false);
                        return false;
                    }
                    std::make_shared<WsSession>(this, s.release())->run(std::move(req));
                    return true;
                }
                if (req.method() != http::verb::get) {
                    s.respond(http::status::method_not_allowed, {{"error", "only GET is supported"}},
                              req.keep_alive());
                    return false;
                }
                if (target == "/v1/health") {
                    bool running = false;
                    {
                        std::lock_guard lock(engine_mutex);
                        running = engine != nullptr;
                    }
                    s.respond(http::status::ok,
                              {{"status", "ok"}, {"running", running}, {"t", latest_t.load()},
                               {"clients", live_sessions()}},
                              req.keep_alive());
                } else if (target == "/v1/scenario") {
                    s.respond(http::status::ok, descriptor, req.keep_alive());
                } else {
                    s.respond(http::status::not_found, {{"error", "unknown endpoint"}}, req.keep_alive());
                }
                return false;
            });
        session->run();
        accept();
    });
}

std::size_t TelemetryServer::Impl::live_sessions()
{
    std::lock_guard lock(sessions_mutex);
    std::size_t n = 0;
    for (const auto& w : sessions)
        n += w.expired() ? 0 : 1;
    return n;
}

void TelemetryServer::Impl::broadcast(std::shared_ptr<const std::string> msg)
{
    std::lock_guard lock(sessions_mutex);
    std::erase_if(sessions, [](const auto& w) { return w.expired(); });
    for (const auto& w : sessions)
        if (auto s = w.lock())
            s->send(msg, true);
}

void TelemetryServer::Impl::handle_command(const std::shared_ptr<WsSession>& session, const std::string& text)
{
    auto answer = [&](const json& rid, bool ok, const std::string& reason, const std::string& message) {
        session->send(std::make_shared<const std::string>(reply(rid, ok, reason, message).dump()), false);
    };
    const std::string malformed(to_string(ErrorKind::MalformedMessage));

    json msg = json::parse(text, nullptr, false);
    if (msg.is_discarded() || !msg.is_object()) {
        answer(nullptr, false, malformed, "message is not a JSON object");
        return;
    }
    if (!msg.contains("request_id") || !(msg["request_id"].is_string() || msg["request_id"].is_number_integer())) {
        answer(nullptr, false, malformed, "message needs a string or integer request_id");
        return;
    }
    const json rid = msg["request_id"];
    if (session->seen(rid.dump())) {
        answer(rid, false, malformed, "request_id already used on this connection");
        return;
    }

    const json& body = msg.contains("command") ? msg["command"] : msg;
    Command command;
    try {
        command = command_from_json(body, library);
    } catch (const Error& e) {
        const std::string reason =
            e.kind() == ErrorKind::ParseError ? malformed : std::string(to_string(e.kind()));
        answer(rid, false, reason, e.what());
        return;
    }

    std::lock_guard lock(engine_mutex);
    if (!engine) {
        answer(rid, false, std::string(to_string(ErrorKind::ConstraintViolation)), "no simulation is running");
        return;
    }
    std::weak_ptr<WsSession> weak = session;
    engine->enqueue(std::move(command), [weak, rid](const CommandResult& r) {
        if (auto s = weak.lock())
            s->send(std::make_shared<const std::string>(reply(rid, r.accepted, r.reason, r.message).dump()), false);
    });
}

TelemetryServer::TelemetryServer(TelemetryOptions options, json scenario_descriptor, FormationLibrary library)
    : impl_(std::make_shared<Impl>())
{
    if (!(options.rate_hz > 0.0) || options.queue_depth == 0)
        throw Error(ErrorKind::ConstraintViolation, "telemetry rate and queue depth must be positive");
    impl_->options = std::move(options);
    impl_->descriptor = std::move(scenario_descriptor);
    impl_->library = std::move(library);

    beast::error_code ec;
    const auto address = net::ip::make_address(impl_->options.host, ec);
    if (ec)
        throw Error(ErrorKind::ConstraintViolation, "bad host address '" + impl_->options.host + "'");
    const tcp::endpoint endpoint(address, impl_->options.port);
    impl_->acceptor.open(endpoint.protocol(), ec);
    if (!ec)
        impl_->acceptor.set_option(net::socket_base::reuse_address(true), ec);
    if (!ec)
        impl_->acceptor.bind(endpoint, ec);
    if (!ec)
        impl_->acceptor.listen(net::socket_base::max_listen_connections, ec);
    if (ec)
        throw Error(ErrorKind::PortInUse,
                    "cannot listen on " + impl_->options.host + ":" + std::to_string(impl_->options.port) + ": " +
                        ec.message());

    impl_->accept();
    impl_->thread = std::thread([impl = impl_.get()] { impl->ioc.run(); });
}

TelemetryServer::~TelemetryServer()
{
    detach();
    net::post(impl_->ioc, [impl = impl_.get()] {
        beast::error_code ignored;
        impl->acceptor.close(ignored);
    });
    impl_->ioc.stop();
    if (impl_->thread.joinable())
        impl_->thread.join();
}

unsigned short TelemetryServer::port() const { return impl_->acceptor.local_endpoint().port(); }

std::size_t TelemetryServer::client_count() const { return impl_->live_sessions(); }

void TelemetryServer::attach(Engine& engine)
{
    {
        std::lock_guard lock(impl_->engine_mutex);
        impl_->engine = &engine;
    }
    impl_->last_sent_t = -std::numeric_limits<double>::infinity();
    std::weak_ptr<Impl> weak = impl_;
    engine.set_snapshot_listener([this, weak](std::shared_ptr<const SwarmState> s) {
        if (weak.lock())
            publish(*s);
    });
}

void TelemetryServer::detach()
{
    std::lock_guard lock(impl_->engine_mutex);
    if (impl_->engine)
        impl_->engine->set_snapshot_listener({});
    impl_->engine = nullptr;
}

void TelemetryServer::publish(const SwarmState& state)
{
    impl_->latest_t.store(state.t);
    const double period = 1.0 / impl_->options.rate_hz;
    if (state.t < impl_->last_sent_t + period - 1e-9)
        return;
    impl_->last_sent_t = state.t;
    impl_->broadcast(std::make_shared<const std::string>(snapshot_message(state).dump()));
}

} // namespace flocking
