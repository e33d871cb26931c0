// Copyright 2026 Fusematch Contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "fusematch/stream/socket.h"

#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <stdexcept>
#include <thread>

namespace fm {

namespace {

std::runtime_error socket_error(const std::string &what) {
    return std::runtime_error(what + ": " + std::strerror(errno));
}

struct AddrInfo {
    addrinfo *list = nullptr;
    ~AddrInfo() {
        if (list != nullptr) {
            freeaddrinfo(list);
        }
    }
};

AddrInfo resolve(const std::string &address, bool passive) {
    auto [host, port] = split_address(address);
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = passive ? AI_PASSIVE : 0;
    AddrInfo info;
    int rc = getaddrinfo(host.empty() ? nullptr : host.c_str(), port.c_str(), &hints, &info.list);
    if (rc != 0) {
        throw std::runtime_error("cannot resolve " + address + ": " + gai_strerror(rc));
    }
    return info;
}

}  // namespace

std::pair<std::string, std::string> split_address(const std::string &address) {
    const size_t colon = address.rfind(':');
    if (colon == std::string::npos || colon + 1 == address.size()) {
        throw std::invalid_argument("address must look like host:port, got '" + address + "'");
    }
    std::string host = address.substr(0, colon);
    if (host.size() >= 2 && host.front() == '[' && host.back() == ']') {
        host = host.substr(1, host.size() - 2);
    }
    return {host, address.substr(colon + 1)};
}

SocketStreamBuf::SocketStreamBuf(int fd) : fd_(fd) {
    setg(in_.data(), in_.data(), in_.data());
    setp(out_.data(), out_.data() + out_.size());
}

SocketStreamBuf::~SocketStreamBuf() {
    flush_output();
    ::close(fd_);
}

SocketStreamBuf::int_type SocketStreamBuf::underflow() {
    if (gptr() < egptr()) {
        return traits_type::to_int_type(*gptr());
    }
    ssize_t n;
    do {
        n = ::recv(fd_, in_.data(), in_.size(), 0);
    } while (n < 0 && errno == EINTR);
    if (n <= 0) {
        return traits_type::eof();
    }
    setg(in_.data(), in_.data(), in_.data() + n);
    return traits_type::to_int_type(*gptr());
}

bool SocketStreamBuf::flush_output() {
    const char *p = pbase();
    while (p < pptr()) {
        ssize_t n = ::send(fd_, p, (size_t)(pptr() - p), MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) {
                continue;
            }
            return false;
        }
        p += n;
    }
    setp(out_.data(), out_.data() + out_.size());
    return true;
}

SocketStreamBuf::int_type SocketStreamBuf::overflow(int_type ch) {
    if (!flush_output()) {
        return traits_type::eof();
    }
    if (!traits_type::eq_int_type(ch, traits_type::eof())) {
        *pptr() = traits_type::to_char_type(ch);
        pbump(1);
    }
    return traits_type::not_eof(ch);
}

int SocketStreamBuf::sync() {
    return flush_output() ? 0 : -1;
}

int tcp_accept_one(const std::string &address, void (*on_listening)(int, void *), void *context) {
    AddrInfo info = resolve(address, true);
    int listener = -1;
    for (addrinfo *a = info.list; a != nullptr; a = a->ai_next) {
        listener = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
        if (listener < 0) {
            continue;
        }
        int one = 1;
        ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        if (::bind(listener, a->ai_addr, a->ai_addrlen) == 0 && ::listen(listener, 1) == 0) {
            break;
        }
        ::close(listener);
        listener = -1;
    }
    if (listener < 0) {
        throw socket_error("cannot listen on " + address);
    }
    if (on_listening != nullptr) {
        sockaddr_storage bound{};
        socklen_t len = sizeof bound;
        ::getsockname(listener, reinterpret_cast<sockaddr *>(&bound), &len);
        int port = bound.ss_family == AF_INET6 ? ntohs(reinterpret_cast<sockaddr_in6 *>(&bound)->sin6_port)
                                               : ntohs(reinterpret_cast<sockaddr_in *>(&bound)->sin_port);
        on_listening(port, context);
    }
    int fd;
    do {
        fd = ::accept(listener, nullptr, nullptr);
    } while (fd < 0 && errno == EINTR);
    ::close(listener);
    if (fd < 0) {
        throw socket_error("accept failed on " + address);
    }
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    return fd;
}

int tcp_connect(const std::string &address, int timeout_ms) {
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    while (true) {
        AddrInfo info = resolve(address, false);
        for (addrinfo *a = info.list; a != nullptr; a = a->ai_next) {
            int fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
            if (fd < 0) {
                continue;
            }
            if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) {
                int one = 1;
                ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
                return fd;
            }
            ::close(fd);
        }
        if (std::chrono::steady_clock::now() >= deadline) {
            throw socket_error("cannot connect to " + address);
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
}

}  // namespace fm
