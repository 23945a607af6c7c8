#pragma once

#include <atomic>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "ortho/session.hpp"

namespace ortho {

inline constexpr std::size_t kMaxMessageBytes = 64u << 20;

namespace detail {

namespace asio = boost::asio;
namespace beast = boost::beast;
using tcp = asio::ip::tcp;

inline void serve_lines(tcp::socket& socket, beast::flat_buffer& buf, Session& session) {
  for (;;) {
    const auto data = buf.data();
    const std::string_view pending(static_cast<const char*>(data.data()), data.size());
    const auto nl = pending.find('\n');
    if (nl == std::string_view::npos) {
      if (pending.size() > kMaxMessageBytes) {
        WireResponse r;
        r.id = nullptr;
        r.ok = false;
        r.error_code = std::string(code_name(ErrorCode::parse_error));
        r.error_message = "line too long";
        asio::write(socket, asio::buffer(serialize_response(r) + "\n"));
        return;
      }
      const std::size_t n = socket.read_some(buf.prepare(64 * 1024));
      buf.commit(n);
      continue;
    }
    std::string_view line = pending.substr(0, nl);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) {
      const std::string reply = session.handle_line(line) + "\n";
      asio::write(socket, asio::buffer(reply));
    }
    buf.consume(nl + 1);
  }
}

inline void serve_websocket(tcp::socket& socket, beast::flat_buffer& buf, Session& session) {
  namespace http = beast::http;
  namespace ws = beast::websocket;
  http::request<http::string_body> req;
  http::read(socket, buf, req);
  if (!ws::is_upgrade(req)) {
    http::response<http::string_body> res{http::status::bad_request, req.version()};
    res.set(http::field::content_type, "text/plain");
    res.body() = "websocket upgrade required\n";
    res.prepare_payload();
    http::write(socket, res);
    return;
  }
  ws::stream<tcp::socket&> stream(socket);
  stream.read_message_max(kMaxMessageBytes);
  stream.accept(req);
  beast::flat_buffer msg;
  for (;;) {
    stream.read(msg);
    const auto data = msg.data();
    const std::string reply =
        session.handle_line(std::string_view(static_cast<const char*>(data.data()), data.size()));
    msg.consume(msg.size());
    stream.text(true);
    stream.write(asio::buffer(reply));
  }
}

// A connection that opens with "GET" is a WebSocket handshake; anything
// else is the newline-delimited JSON protocol.
inline void serve_connection(tcp::socket& socket, const EngineConfig& config) {
  Session session(config);
  beast::flat_buffer buf;
  try {
    while (buf.size() < 3) {
      const auto data = buf.data();
      if (std::string_view(static_cast<const char*>(data.data()), data.size()).find('\n') != std::string_view::npos) {
        break;
      }
      buf.commit(socket.read_some(buf.prepare(4096)));
    }
    const auto data = buf.data();
    if (std::string_view(static_cast<const char*>(data.data()), data.size()).starts_with("GET")) {
      serve_websocket(socket, buf, session);
    } else {
      serve_lines(socket, buf, session);
    }
  } catch (const std::exception&) {
    // Peer closed or sent garbage at the transport level.
  }
  boost::system::error_code ec;
  socket.shutdown(tcp::socket::shutdown_both, ec);
  socket.close(ec);
}

}  // namespace detail

/// Protocol server: one thread and one session per connection.
class SessionServer {
 public:
  explicit SessionServer(EngineConfig config, std::uint16_t port = 0, std::string address = "127.0.0.1")
      : config_(config), acceptor_(ioc_) {
    config_.validate();
    using detail::tcp;
    const tcp::endpoint ep(boost::asio::ip::make_address(address), port);
    acceptor_.open(ep.protocol());
    acceptor_.set_option(tcp::acceptor::reuse_address(true));
    acceptor_.bind(ep);
    acceptor_.listen();
    port_ = acceptor_.local_endpoint().port();
  }

  SessionServer(const SessionServer&) = delete;
  SessionServer& operator=(const SessionServer&) = delete;

  ~SessionServer() { stop(); }

  std::uint16_t port() const { return port_; }

  void start() {
    accept_next();
    accept_thread_ = std::thread([this] { ioc_.run(); });
  }

  /// Blocks until stop() is called from elsewhere.
  void wait() {
    if (accept_thread_.joinable()) accept_thread_.join();
  }

  void stop() {
    if (stopped_.exchange(true)) return;
    ioc_.stop();
    if (accept_thread_.joinable()) accept_thread_.join();
    boost::system::error_code ec;
    acceptor_.close(ec);
    std::list<Connection> conns;
    {
      std::lock_guard lock(mutex_);
      for (auto& c : connections_) {
        c.socket->shutdown(detail::tcp::socket::shutdown_both, ec);
      }
      conns.swap(connections_);
    }
    for (auto& c : conns) {
      if (c.thread.joinable()) c.thread.join();
    }
  }

 private:
  struct Connection {
    std::shared_ptr<detail::tcp::socket> socket;
    std::shared_ptr<std::atomic<bool>> done;
    std::thread thread;
  };

  void accept_next() {
    acceptor_.async_accept([this](boost::system::error_code ec, detail::tcp::socket socket) {
      if (ec) return;
      auto s = std::make_shared<detail::tcp::socket>(std::move(socket));
      auto done = std::make_shared<std::atomic<bool>>(false);
      {
        std::lock_guard lock(mutex_);
        reap();
        connections_.push_back({s, done, std::thread([s, done, cfg = config_] {
                                  detail::serve_connection(*s, cfg);
                                  *done = true;
                                })});
      }
      accept_next();
    });
  }

  // Joins finished connection threads; called under the mutex.
  void reap() {
    for (auto it = connections_.begin(); it != connections_.end();) {
      if (*it->done) {
        it->thread.join();
        it = connections_.erase(it);
      } else {
        ++it;
      }
    }
  }

  EngineConfig config_;
  boost::asio::io_context ioc_;
  detail::tcp::acceptor acceptor_;
  std::uint16_t port_ = 0;
  std::thread accept_thread_;
  std::mutex mutex_;
  std::list<Connection> connections_;
  std::atomic<bool> stopped_{false};
};

}  // namespace ortho
