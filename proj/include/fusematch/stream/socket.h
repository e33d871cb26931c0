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


#ifndef FUSEMATCH_STREAM_SOCKET_H
#define FUSEMATCH_STREAM_SOCKET_H

#include <array>
#include <streambuf>
#include <string>

namespace fm {

/// A TCP connection exposed as a streambuf, so the frame reader and writer
/// work unchanged over the network. Owns the descriptor.
class SocketStreamBuf : public std::streambuf {
   public:
    explicit SocketStreamBuf(int fd);
    ~SocketStreamBuf() override;
    SocketStreamBuf(const SocketStreamBuf &) = delete;
    SocketStreamBuf &operator=(const SocketStreamBuf &) = delete;

   protected:
    int_type underflow() override;
    int_type overflow(int_type ch) override;
    int sync() override;

   private:
    bool flush_output();

    int fd_;
    std::array<char, 1 << 16> in_{};
    std::array<char, 1 << 16> out_{};
};

/// Parses "host:port" (host may be empty for any interface).
std::pair<std::string, std::string> split_address(const std::string &address);

/// Binds to `address`, accepts one connection and returns its descriptor.
/// `on_listening` (if set) is called with the bound port once listening.
int tcp_accept_one(const std::string &address, void (*on_listening)(int port, void *) = nullptr,
                   void *context = nullptr);

/// Connects to `address`, retrying for up to `timeout_ms` while the peer is
/// not yet listening.
int tcp_connect(const std::string &address, int timeout_ms = 5000);

}  // namespace fm

#endif  // FUSEMATCH_STREAM_SOCKET_H
