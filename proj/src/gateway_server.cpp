#include <chrono>
#include <deque>
#include <iostream>
#include <map>
#include <set>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "bcdrive/errors.hpp"
#include "bcdrive/gateway.hpp"

namespace bcdrive {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

// Telemetry beyond this many queued frames is dropped for a slow client;
// acks are always queued.
constexpr std::size_t kMaxQueuedTelemetry = 8;

class WsSession;

}  // namespace

struct GatewayServer::Impl {
  Impl(SimulationConfig sim_cfg, ServerConfig server_cfg)
      : sim(std::move(sim_cfg)), cfg(std::move(server_cfg)) {}

  Simulation sim;
  ServerConfig cfg;
  net::io_context ioc{1};
  tcp::acceptor acceptor{ioc};
  std::thread io_thread;
  std::thread tick_thread;
  std::atomic<bool> running{false};
  unsigned short bound_port = 0;

  // Touched only on the io thread.
  std::set<std::shared_ptr<WsSession>> sessions;
  std::map<std::uint64_t, std::weak_ptr<WsSession>> ack_routes;

  void do_accept();
  void tick_loop();
  void publish(std::vector<ControlAck> acks, std::string telemetry);
};

namespace {

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket socket, GatewayServer::Impl& server)
      : ws_(std::move(socket)), server_(server) {}

  void run(http::request<http::string_body> req) {
    ws_.text(true);
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->server_.sessions.insert(self);
      self->do_read();
    });
  }

  void send(std::string msg, bool droppable) {
    if (closed_) return;
    if (droppable && queue_.size() >= kMaxQueuedTelemetry) return;
    queue_.push_back(std::move(msg));
    if (queue_.size() == 1) do_write();
  }

  void close() {
    closed_ = true;
    beast::error_code ec;
    beast::get_lowest_layer(ws_).socket().shutdown(tcp::socket::shutdown_both, ec);
    beast::get_lowest_layer(ws_).socket().close(ec);
  }

 private:
  void do_read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->drop();
        return;
      }
      self->on_message(beast::buffers_to_string(self->buffer_.data()));
      self->buffer_.consume(self->buffer_.size());
      self->do_read();
    });
  }

  void on_message(const std::string& text) {
    try {
      const ControlMessage msg = decode_control(text);
      const std::uint64_t seq = server_.sim.submit(msg);
      server_.ack_routes[seq] = weak_from_this();
    } catch (const std::exception& e) {
      ControlAck ack;
      ack.ok = ack.applied = false;
      ack.error = e.what();
      send(encode_ack(ack), false);
    }
  }

  void do_write() {
    ws_.async_write(net::buffer(queue_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      if (ec) {
                        self->drop();
                        return;
                      }
                      self->queue_.pop_front();
                      if (!self->queue_.empty()) self->do_write();
                    });
  }

  void drop() {
    closed_ = true;
    server_.sessions.erase(shared_from_this());
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
  GatewayServer::Impl& server_;
  bool closed_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket socket, GatewayServer::Impl& server)
      : stream_(std::move(socket)), server_(server) {}

  void run() {
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) {
                       if (!ec) self->handle();
                     });
  }

 private:
  void handle() {
    if (websocket::is_upgrade(req_)) {
      if (req_.target() == "/ws") {
        stream_.expires_never();
        std::make_shared<WsSession>(stream_.release_socket(), server_)->run(std::move(req_));
        return;
      }
    }
    auto res = std::make_shared<http::response<http::string_body>>();
    res->version(req_.version());
    res->keep_alive(false);
    if (req_.method() != http::verb::get) {
      res->result(http::status::method_not_allowed);
      res->set(http::field::content_type, "text/plain");
      res->body() = "method not allowed\n";
    } else if (req_.target() == "/healthz") {
      res->result(http::status::ok);
      res->set(http::field::content_type, "text/plain");
      res->body() = "ok";
    } else if (req_.target() == "/config") {
      res->result(http::status::ok);
      res->set(http::field::content_type, "application/json");
      res->body() = server_.sim.config_json();
    } else {
      res->result(http::status::not_found);
      res->set(http::field::content_type, "text/plain");
      res->body() = "not found\n";
    }
    res->prepare_payload();
    http::async_write(stream_, *res,
                      [self = shared_from_this(), res](beast::error_code, std::size_t) {
                        beast::error_code ec;
                        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
                      });
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
  GatewayServer::Impl& server_;
};

}  // namespace

void GatewayServer::Impl::do_accept() {
  acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
    if (ec) {
      if (ec == net::error::operation_aborted || !acceptor.is_open()) return;
    } else {
      std::make_shared<HttpSession>(std::move(socket), *this)->run();
    }
    do_accept();
  });
}

void GatewayServer::Impl::publish(std::vector<ControlAck> acks, std::string telemetry) {
  for (const ControlAck& ack : acks) {
    auto it = ack_routes.find(ack.seq);
    if (it == ack_routes.end()) continue;
    if (auto session = it->second.lock()) session->send(encode_ack(ack), false);
    ack_routes.erase(it);
  }
  for (const auto& session : sessions) session->send(telemetry, true);
}

void GatewayServer::Impl::tick_loop() {
  using Clock = std::chrono::steady_clock;
  const auto period = std::chrono::duration_cast<Clock::duration>(
      std::chrono::duration<double>(1.0 / cfg.tick_hz));
  auto next = Clock::now();
  while (running.load()) {
    next += period;
    try {
      std::vector<ControlAck> acks = sim.tick();
      std::string telemetry = encode_telemetry(sim.snapshot());
      net::post(ioc, [this, acks = std::move(acks), telemetry = std::move(telemetry)]() mutable {
        publish(std::move(acks), std::move(telemetry));
      });
    } catch (const std::exception& e) {
      std::cerr << "gateway: tick failed: " << e.what() << '\n';
    }
    std::this_thread::sleep_until(next);
  }
}

GatewayServer::GatewayServer(SimulationConfig sim, ServerConfig server)
    : impl_(std::make_unique<Impl>(std::move(sim), std::move(server))) {
  if (!(impl_->cfg.tick_hz > 0.0)) throw ContractError("tick rate must be positive");
}

GatewayServer::~GatewayServer() { stop(); }

void GatewayServer::start() {
  if (impl_->running) return;
  Impl& s = *impl_;
  try {
    const tcp::endpoint endpoint(net::ip::make_address(s.cfg.bind_address), s.cfg.port);
    s.acceptor.open(endpoint.protocol());
    s.acceptor.set_option(net::socket_base::reuse_address(true));
    s.acceptor.bind(endpoint);
    s.acceptor.listen(net::socket_base::max_listen_connections);
    s.bound_port = s.acceptor.local_endpoint().port();
  } catch (const boost::system::system_error& e) {
    beast::error_code ignored;
    s.acceptor.close(ignored);
    throw IoError("cannot listen on " + s.cfg.bind_address + ":" + std::to_string(s.cfg.port) +
                  ": " + e.code().message());
  }
  s.running = true;
  s.do_accept();
  s.io_thread = std::thread([&s] { s.ioc.run(); });
  s.tick_thread = std::thread([&s] { s.tick_loop(); });
}

void GatewayServer::stop() {
  Impl& s = *impl_;
  if (!s.running.exchange(false)) return;
  if (s.tick_thread.joinable()) s.tick_thread.join();
  net::post(s.ioc, [&s] {
    beast::error_code ec;
    s.acceptor.close(ec);
    for (const auto& session : s.sessions) session->close();
    s.sessions.clear();
    s.ack_routes.clear();
    s.ioc.stop();
  });
  if (s.io_thread.joinable()) s.io_thread.join();
}

bool GatewayServer::running() const noexcept { return impl_->running.load(); }

unsigned short GatewayServer::port() const noexcept { return impl_->bound_port; }

Simulation& GatewayServer::simulation() noexcept { return impl_->sim; }

}  // namespace bcdrive
